"""Shared fixtures and the per-criterion acceptance summary hook."""

from __future__ import annotations

import re

import numpy as np
import pytest

from drmerton import EmpiricalPrior, MarketSpec, QuadratureSpec, UtilitySpec

# Filled by tests/test_acceptance.py at runtime: criterion number -> detail line.
ACCEPTANCE_DETAILS: dict[int, str] = {}

_CRITERION_RE = re.compile(r"test_acceptance\.py::test_c(\d\d)")

_CRITERION_LABELS = {
    1: "single-atom prior reduces to the closed-form constant-drift fraction",
    2: "budget identity and closed-form k equals root-found k",
    3: "quadrature matches the analytic Gaussian-prior value integral",
    4: "influence function matches Gateaux finite differences",
    5: "first-order expansion: sqrt(delta) rate and coefficient",
    6: "grid search finds nothing better than the constructed pushforward",
    7: "calibration limit-law pieces (sampled quantile, degenerate prior, delta=eta/n)",
    8: "norm-regularized mean-variance degenerates to Markowitz at delta=0",
    9: "paired dynamic-strategy property across all table cells",
    10: "bold-cell mean terminal utility ordering (robust >= plain)",
    11: "radius sweep shape: interior optimum vs large-scale degradation",
    12: "CSV round-trip and monthly preset end-to-end",
    13: "byte-identical outputs from one manifest regardless of threads",
}


@pytest.fixture(scope="session")
def acceptance_log() -> dict[int, str]:
    return ACCEPTANCE_DETAILS


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    by_criterion: dict[int, list[str]] = {}
    for category in ("passed", "failed", "error", "skipped", "xfailed", "xpassed"):
        for rep in terminalreporter.stats.get(category, []):
            nodeid = getattr(rep, "nodeid", "")
            m = _CRITERION_RE.search(nodeid)
            if not m:
                continue
            by_criterion.setdefault(int(m.group(1)), []).append(category)
    if not by_criterion:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(by_criterion):
        cats = by_criterion[num]
        if any(c in ("failed", "error") for c in cats):
            verdict = "FAIL"
        elif all(c == "skipped" for c in cats):
            verdict = "SKIP"
        else:
            verdict = "PASS"
        label = _CRITERION_LABELS.get(num, "")
        detail = ACCEPTANCE_DETAILS.get(num, "")
        extra = []
        if "xfailed" in cats:
            extra.append("includes expected-failure subtest")
        if "skipped" in cats and verdict == "PASS":
            extra.append("optional lane skipped")
        suffix = f"  [{'; '.join(extra)}]" if extra else ""
        line = f"criterion {num:2d}: {verdict} — {label}{suffix}"
        if detail:
            line += f"\n              {detail}"
        tr.write_line(line)


# ---------------------------------------------------------------------------
# Small deterministic builders shared across test modules.


def rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_market(seed: int, d: int, T: float = 1.0, dt: float = 1.0 / 252.0) -> MarketSpec:
    """Well-conditioned random market: lower-triangular sigma with positive diagonal."""
    g = rng(seed)
    a = 0.2 * g.standard_normal((d, d))
    sigma = np.tril(a, -1) + np.diag(0.3 + 0.2 * g.random(d))
    return MarketSpec(d=d, r=float(0.05 * g.random()), sigma=sigma, T=T, dt=dt)


def random_prior(seed: int, d: int, n_atoms: int = 5, spread: float = 0.4) -> EmpiricalPrior:
    g = rng(seed)
    atoms = 0.1 + spread * g.standard_normal((n_atoms, d))
    w = g.random(n_atoms) + 0.2
    return EmpiricalPrior(atoms=atoms, weights=w / w.sum())


@pytest.fixture
def unit_market_1d() -> MarketSpec:
    return MarketSpec(d=1, r=0.0, sigma=np.eye(1), T=1.0, dt=1.0 / 252.0)


@pytest.fixture
def gh_quad() -> QuadratureSpec:
    return QuadratureSpec(method="gauss_hermite", nodes_per_dim=40)


@pytest.fixture
def half_power() -> UtilitySpec:
    return UtilitySpec(alpha=0.5)


@pytest.fixture
def risk_averse() -> UtilitySpec:
    return UtilitySpec(alpha=-2.0)
