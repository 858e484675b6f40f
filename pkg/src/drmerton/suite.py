"""Simulation study over parameter cells, seeds, and strategies.

Each cell fixes the drift amplitude, the number of trading periods per
day, and the phase-frequency distribution; each seed draws fresh
frequencies and a fresh price path, and every strategy trades the same
path (common random numbers).  Aggregates report per-cell mean/std of
the annualized Sharpe ratio and of terminal utility, with per-seed rows
kept for paired comparisons and failure audits.  A radius sweep runs one
cell with the robust strategies at several radius scales in a single
pass so utility gaps are paired per seed.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import math

import numpy as np
from scipy.stats import binomtest

from .backtest import TradingProtocol, run_backtest
from .errors import ConfigError, DrmertonError
from .market import MarketSpec, SinusoidalDriftSpec, simulate_paths
from .merton import UtilitySpec

DEFAULT_STRATEGIES = ("bayesian", "drbc", "drmv", "drmv_rf", "drc")

_FMT = "%.17g"


@dataclasses.dataclass(frozen=True)
class ExperimentCell:
    """One grid point: drift amplitude B0, periods-per-day m (so
    dt = 1/(252·m)), and the normal law for the per-asset frequencies."""

    B0: float
    m: int
    kappa_mean: float = 0.0
    kappa_std: float = 1.0
    label: str = ""

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ConfigError("m (periods per day) must be >= 1")
        if not (self.kappa_std >= 0):
            raise ConfigError("kappa_std must be >= 0")
        if not self.label:
            object.__setattr__(
                self,
                "label",
                f"B0={self.B0:g},m={self.m},kappa=({self.kappa_mean:g},{self.kappa_std:g})",
            )

    @property
    def dt(self) -> float:
        return 1.0 / (252.0 * self.m)


def default_cells() -> tuple[ExperimentCell, ...]:
    """The eight standard cells: B0 ∈ {0.2, 0.4} × m ∈ {6, 11} for
    frequencies drawn N(0, 1) and then N(12, √10)."""
    cells = []
    for mean, std in ((0.0, 1.0), (12.0, math.sqrt(10.0))):
        for b0 in (0.2, 0.4):
            for m in (6, 11):
                cells.append(ExperimentCell(B0=b0, m=m, kappa_mean=mean, kappa_std=std))
    return tuple(cells)


def bold_cell() -> ExperimentCell:
    """The headline cell: B0 = 0.4, m = 11, frequencies N(0, 1)."""
    return ExperimentCell(B0=0.4, m=11, kappa_mean=0.0, kappa_std=1.0)


@dataclasses.dataclass(frozen=True)
class SeedRecord:
    """One strategy's metrics on one seed of one cell; ``error`` is set
    (and the metrics are NaN) when that run failed."""

    cell: str
    seed: int
    strategy: str
    sharpe: float
    terminal_utility: float
    mean_gross_leverage: float
    max_gross_leverage: float
    cap_hit_rate: float
    bankrupt: bool
    fallback_cycles: int
    error: str = ""


@dataclasses.dataclass(frozen=True)
class CellStrategyStats:
    cell: str
    strategy: str
    n_ok: int
    n_failed: int
    sharpe_mean: float
    sharpe_std: float
    utility_mean: float
    utility_std: float
    bankrupt_count: int


@dataclasses.dataclass(frozen=True)
class SuiteResult:
    """Per-seed records plus per-(cell, strategy) aggregates."""

    cells: tuple[ExperimentCell, ...]
    strategies: tuple[str, ...]
    n_seeds: int
    records: tuple[SeedRecord, ...]
    stats: tuple[CellStrategyStats, ...]

    def stat(self, cell: str, strategy: str) -> CellStrategyStats:
        for st in self.stats:
            if st.cell == cell and st.strategy == strategy:
                return st
        raise KeyError(f"no stats for ({cell!r}, {strategy!r})")

    def values(self, cell: str, strategy: str, field: str = "sharpe") -> dict[int, float]:
        """Seed → metric for the successful runs of one strategy."""
        return {
            rec.seed: getattr(rec, field)
            for rec in self.records
            if rec.cell == cell and rec.strategy == strategy and not rec.error
        }

    def paired_differences(
        self, cell: str, a: str, b: str, field: str = "sharpe"
    ) -> np.ndarray:
        """Per-seed metric differences a − b over seeds where both ran."""
        va, vb = self.values(cell, a, field), self.values(cell, b, field)
        seeds = sorted(set(va) & set(vb))
        return np.array([va[s] - vb[s] for s in seeds], dtype=float)


@dataclasses.dataclass(frozen=True)
class _RunConfig:
    d: int
    alpha: float
    r: float
    sigma_scale: float
    x0: float
    n_steps: int
    strategies: tuple[str, ...]
    protocol: TradingProtocol


def _run_cell_seed(cell: ExperimentCell, seed: int, cfg: _RunConfig) -> list[SeedRecord]:
    dt = cell.dt
    market = MarketSpec(
        d=cfg.d,
        r=cfg.r,
        sigma=cfg.sigma_scale * np.eye(cfg.d),
        T=cfg.n_steps * dt,
        dt=dt,
    )
    utility = UtilitySpec(alpha=cfg.alpha)
    drift = SinusoidalDriftSpec.sample(
        cell.B0, cfg.d, mean=cell.kappa_mean, std=cell.kappa_std, seed=seed
    )
    protocol = (
        cfg.protocol
        if cfg.protocol.x0 == cfg.x0
        else dataclasses.replace(cfg.protocol, x0=cfg.x0)
    )
    try:
        path = simulate_paths(market, drift, n_steps=cfg.n_steps, seed=seed)
        report = run_backtest(
            path, protocol, cfg.strategies, market, utility, seed=seed, true_drift=drift
        )
    except DrmertonError as exc:
        msg = f"{type(exc).__name__}: {exc}"
        return [
            SeedRecord(
                cell=cell.label,
                seed=seed,
                strategy=name,
                sharpe=float("nan"),
                terminal_utility=float("nan"),
                mean_gross_leverage=float("nan"),
                max_gross_leverage=float("nan"),
                cap_hit_rate=float("nan"),
                bankrupt=False,
                fallback_cycles=0,
                error=msg,
            )
            for name in cfg.strategies
        ]
    rows = []
    for name in cfg.strategies:
        res = report.results[name]
        rows.append(
            SeedRecord(
                cell=cell.label,
                seed=seed,
                strategy=name,
                sharpe=res.sharpe,
                terminal_utility=res.terminal_utility,
                mean_gross_leverage=res.mean_gross_leverage,
                max_gross_leverage=res.max_gross_leverage,
                cap_hit_rate=res.cap_hit_rate,
                bankrupt=res.bankrupt,
                fallback_cycles=res.fallback_cycles,
            )
        )
    return rows


def _aggregate(
    cells: tuple[ExperimentCell, ...],
    strategies: tuple[str, ...],
    n_seeds: int,
    records: list[SeedRecord],
) -> SuiteResult:
    stats = []
    for cell in cells:
        for name in strategies:
            ok = [r for r in records if r.cell == cell.label and r.strategy == name and not r.error]
            failed = [
                r for r in records if r.cell == cell.label and r.strategy == name and r.error
            ]
            sharpes = np.array([r.sharpe for r in ok], dtype=float)
            utils = np.array([r.terminal_utility for r in ok], dtype=float)
            stats.append(
                CellStrategyStats(
                    cell=cell.label,
                    strategy=name,
                    n_ok=len(ok),
                    n_failed=len(failed),
                    sharpe_mean=float(np.mean(sharpes)) if len(ok) else float("nan"),
                    sharpe_std=float(np.std(sharpes, ddof=1)) if len(ok) > 1 else float("nan"),
                    utility_mean=float(np.mean(utils)) if len(ok) else float("nan"),
                    utility_std=float(np.std(utils, ddof=1)) if len(ok) > 1 else float("nan"),
                    bankrupt_count=sum(r.bankrupt for r in ok),
                )
            )
    return SuiteResult(
        cells=cells,
        strategies=strategies,
        n_seeds=n_seeds,
        records=tuple(records),
        stats=tuple(stats),
    )


def run_experiment_suite(
    cells=None,
    *,
    n_seeds: int = 100,
    d: int = 20,
    strategies=DEFAULT_STRATEGIES,
    alpha: float = -2.0,
    r: float = 0.01,
    sigma_scale: float = 0.3,
    x0: float = 1.0,
    trade_steps: int = 504,
    protocol: TradingProtocol | None = None,
    n_jobs: int = 1,
    seed0: int = 0,
) -> SuiteResult:
    """Run every (cell, seed) for seeds seed0..seed0+n_seeds−1 and aggregate.

    Results are deterministic for a given argument set regardless of
    ``n_jobs``: each run is keyed only by its cell and seed, and rows
    are assembled in sorted (cell, seed) order.
    """
    cells = default_cells() if cells is None else tuple(cells)
    strategies = tuple(str(s) for s in strategies)
    if n_seeds < 1 or d < 1 or trade_steps < 1:
        raise ConfigError("n_seeds, d, and trade_steps must be >= 1")
    protocol = protocol if protocol is not None else TradingProtocol()
    if trade_steps < protocol.eval_window:
        raise ConfigError("trade_steps must cover the evaluation window")
    cfg = _RunConfig(
        d=d,
        alpha=alpha,
        r=r,
        sigma_scale=sigma_scale,
        x0=x0,
        n_steps=protocol.lookback_steps + trade_steps,
        strategies=strategies,
        protocol=protocol,
    )
    tasks = [(ci, seed0 + k) for ci in range(len(cells)) for k in range(n_seeds)]
    rows_by_task: dict[tuple[int, int], list[SeedRecord]] = {}
    if n_jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=n_jobs) as pool:
            futures = {
                pool.submit(_run_cell_seed, cells[ci], seed, cfg): (ci, seed)
                for ci, seed in tasks
            }
            for fut in concurrent.futures.as_completed(futures):
                rows_by_task[futures[fut]] = fut.result()
    else:
        for ci, seed in tasks:
            rows_by_task[(ci, seed)] = _run_cell_seed(cells[ci], seed, cfg)
    records: list[SeedRecord] = []
    for key in sorted(rows_by_task):
        records.extend(rows_by_task[key])
    return _aggregate(cells, strategies, n_seeds, records)


@dataclasses.dataclass(frozen=True)
class SweepResult:
    """Radius-scale sweep on one cell: per-seed terminal-utility gaps
    versus the known-drift oracle strategy, paired through common random
    numbers.  The oracle's utility is a per-seed constant across scales,
    so curve shape (monotonicity, interior optimum) is unaffected by the
    baseline choice."""

    cell: ExperimentCell
    scales: tuple[float, ...]
    seeds: tuple[int, ...]
    drbc_gap: np.ndarray  # (n_seeds_ok, n_scales)
    drc_gap: np.ndarray | None
    suite: SuiteResult

    @property
    def drbc_gap_mean(self) -> np.ndarray:
        return self.drbc_gap.mean(axis=0)

    @property
    def drc_gap_mean(self) -> np.ndarray:
        if self.drc_gap is None:
            raise ConfigError("sweep was run without the surrogate strategy")
        return self.drc_gap.mean(axis=0)


def scale_strategy(base: str, scale: float) -> str:
    """Canonical name for a radius-scaled strategy variant."""
    return f"{base}[s={scale:.12g}]"


def run_radius_sweep(
    scales,
    cell: ExperimentCell | None = None,
    *,
    n_seeds: int = 100,
    d: int = 20,
    include_surrogate: bool = True,
    alpha: float = -2.0,
    r: float = 0.01,
    sigma_scale: float = 0.3,
    x0: float = 1.0,
    trade_steps: int = 504,
    protocol: TradingProtocol | None = None,
    n_jobs: int = 1,
    seed0: int = 0,
) -> SweepResult:
    """One-pass sweep of the calibrated-radius scale factor.

    Runs the known-drift oracle, the unperturbed dynamic strategy, and
    one robust variant per scale (optionally the shrinkage surrogate at
    each scale) on shared paths, and reports per-seed terminal-utility
    gaps against the oracle.
    """
    scales = tuple(float(s) for s in scales)
    if len(scales) < 2:
        raise ConfigError("need at least 2 scales to sweep")
    if any(s < 0 for s in scales):
        raise ConfigError("scales must be >= 0")
    cell = bold_cell() if cell is None else cell
    names = ["oracle", "bayesian"] + [scale_strategy("drbc", s) for s in scales]
    if include_surrogate:
        names += [scale_strategy("drc", s) for s in scales]
    suite = run_experiment_suite(
        (cell,),
        n_seeds=n_seeds,
        d=d,
        strategies=names,
        alpha=alpha,
        r=r,
        sigma_scale=sigma_scale,
        x0=x0,
        trade_steps=trade_steps,
        protocol=protocol,
        n_jobs=n_jobs,
        seed0=seed0,
    )
    base_vals = suite.values(cell.label, "oracle", "terminal_utility")
    ok_seeds = set(base_vals)
    for name in names[1:]:
        ok_seeds &= set(suite.values(cell.label, name, "terminal_utility"))
    seeds = tuple(sorted(ok_seeds))
    if not seeds:
        raise ConfigError("no seed completed every sweep strategy")

    def gap_matrix(basename: str) -> np.ndarray:
        cols = []
        for s in scales:
            vals = suite.values(cell.label, scale_strategy(basename, s), "terminal_utility")
            cols.append([vals[sd] - base_vals[sd] for sd in seeds])
        return np.array(cols, dtype=float).T

    return SweepResult(
        cell=cell,
        scales=scales,
        seeds=seeds,
        drbc_gap=gap_matrix("drbc"),
        drc_gap=gap_matrix("drc") if include_surrogate else None,
        suite=suite,
    )


def sign_test(diffs, alternative: str = "greater") -> float:
    """Paired sign test p-value: P(#positive ≥ observed) under a fair
    coin on the nonzero differences (``alternative='greater'``)."""
    diffs = np.asarray(diffs, dtype=float).reshape(-1)
    nonzero = diffs[diffs != 0.0]
    if nonzero.size == 0:
        return 1.0
    k = int(np.sum(nonzero > 0))
    return float(binomtest(k, nonzero.size, 0.5, alternative=alternative).pvalue)


def suite_records_csv(result: SuiteResult, filename: str) -> None:
    """Per-seed rows: cell, seed, strategy, metrics, error."""
    with open(filename, "w", encoding="utf-8") as fh:
        fh.write(
            "cell,seed,strategy,sharpe,terminal_utility,mean_gross_leverage,"
            "max_gross_leverage,cap_hit_rate,bankrupt,fallback_cycles,error\n"
        )
        for r in result.records:
            fields = [
                f'"{r.cell}"',
                str(r.seed),
                r.strategy,
                _FMT % r.sharpe,
                _FMT % r.terminal_utility,
                _FMT % r.mean_gross_leverage,
                _FMT % r.max_gross_leverage,
                _FMT % r.cap_hit_rate,
                str(int(r.bankrupt)),
                str(r.fallback_cycles),
                f'"{r.error}"' if r.error else "",
            ]
            fh.write(",".join(fields) + "\n")


def suite_summary_csv(result: SuiteResult, filename: str) -> None:
    """Per-(cell, strategy) aggregates."""
    with open(filename, "w", encoding="utf-8") as fh:
        fh.write(
            "cell,strategy,n_ok,n_failed,sharpe_mean,sharpe_std,"
            "utility_mean,utility_std,bankrupt_count\n"
        )
        for st in result.stats:
            fields = [
                f'"{st.cell}"',
                st.strategy,
                str(st.n_ok),
                str(st.n_failed),
                _FMT % st.sharpe_mean,
                _FMT % st.sharpe_std,
                _FMT % st.utility_mean,
                _FMT % st.utility_std,
                str(st.bankrupt_count),
            ]
            fh.write(",".join(fields) + "\n")
