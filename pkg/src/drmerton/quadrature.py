"""Quadrature against centered Gaussian weights.

Every integral in the Bayesian Merton closed forms has the shape

    ∫ f(z) φ_s(z) dz,        φ_s = density of Normal(0, s·I_d),

so a single abstraction covers them all.  Two methods are provided:

* tensor Gauss–Hermite, exact for polynomials of high degree, used for
  low dimension (d ≤ 3 by default) after the change of variables
  z = √(2s)·u which maps the Hermite weight e^{-u²} onto φ_s;
* seeded Monte Carlo with z ~ Normal(0, s·I_d), used for higher
  dimension where tensor grids blow up.

Both are deterministic for a fixed spec: nodes are cached per
(method, size, seed, dimension) and the variance scale only rescales
them, so integrals at different scales share the same underlying nodes.
This sharing matters: difference-of-integral quantities (e.g. first-order
expansion checks) would otherwise be polluted by independent sampling
noise.
"""

from __future__ import annotations

import dataclasses
import functools
import itertools

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigError, EvaluationError

Array = NDArray[np.float64]

GAUSS_HERMITE = "gauss_hermite"
MONTE_CARLO = "monte_carlo"

#: Dimension threshold above which auto_spec switches to Monte Carlo.
GH_MAX_DIM = 3


@dataclasses.dataclass(frozen=True)
class QuadratureSpec:
    """How to integrate against the Gaussian weight φ_s.

    Parameters
    ----------
    method : {"gauss_hermite", "monte_carlo"}
    nodes_per_dim : int
        Gauss–Hermite nodes per dimension (tensor product), ≥ 5.
    n_samples : int
        Monte Carlo sample count, ≥ 10⁴.
    seed : int
        Seed of the Monte Carlo node stream (Philox counter-based).
    variance_scale : float
        The s in Normal(0, s·I_d).  s = 0 is the degenerate point mass
        at the origin (a single node with weight one).
    """

    method: str = GAUSS_HERMITE
    nodes_per_dim: int = 40
    n_samples: int = 200_000
    seed: int = 0
    variance_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.method not in (GAUSS_HERMITE, MONTE_CARLO):
            raise ConfigError(f"unknown quadrature method {self.method!r}")
        if self.method == GAUSS_HERMITE and self.nodes_per_dim < 5:
            raise ConfigError("nodes_per_dim must be >= 5")
        if self.method == MONTE_CARLO and self.n_samples < 100:
            raise ConfigError("n_samples must be >= 100")
        if not np.isfinite(self.variance_scale) or self.variance_scale < 0:
            raise ConfigError("variance_scale must be finite and >= 0")

    def with_scale(self, s: float) -> "QuadratureSpec":
        """Same spec, different Gaussian variance scale."""
        return dataclasses.replace(self, variance_scale=float(s))


def auto_spec(
    d: int,
    *,
    nodes_per_dim: int = 40,
    n_samples: int = 200_000,
    seed: int = 0,
    variance_scale: float = 1.0,
) -> QuadratureSpec:
    """Pick Gauss–Hermite for d ≤ 3, Monte Carlo above."""
    method = GAUSS_HERMITE if d <= GH_MAX_DIM else MONTE_CARLO
    return QuadratureSpec(
        method=method,
        nodes_per_dim=nodes_per_dim,
        n_samples=n_samples,
        seed=seed,
        variance_scale=variance_scale,
    )


@functools.lru_cache(maxsize=64)
def _gh_unit_nodes(nodes_per_dim: int, d: int) -> tuple[Array, Array]:
    """Tensor Gauss–Hermite nodes for unit-variance Gaussian weight.

    Returns (U, w) with U of shape (M, d) and positive weights w summing
    to 1, such that Σ w_j f(√s·U_j) ≈ ∫ f(z) φ_s(z) dz.
    """
    x, w = np.polynomial.hermite.hermgauss(nodes_per_dim)
    # e^{-x²} weight → standard normal via u = √2·x, w /= √π.
    u1 = np.sqrt(2.0) * x
    w1 = w / np.sqrt(np.pi)
    grids = np.array(list(itertools.product(u1, repeat=d)), dtype=float)
    weights = np.prod(
        np.array(list(itertools.product(w1, repeat=d)), dtype=float), axis=1
    )
    grids.setflags(write=False)
    weights.setflags(write=False)
    return grids, weights


@functools.lru_cache(maxsize=64)
def _mc_unit_nodes(n_samples: int, seed: int, d: int) -> tuple[Array, Array]:
    """Standard-normal Monte Carlo nodes with uniform weights.

    Philox is counter-based, so the node set is a pure function of
    (n_samples, seed, d) and independent of calling order or threading.
    """
    bitgen = np.random.Philox(key=np.random.SeedSequence((seed, d)).generate_state(2, np.uint64))
    rng = np.random.Generator(bitgen)
    u = rng.standard_normal((n_samples, d))
    w = np.full(n_samples, 1.0 / n_samples)
    u.setflags(write=False)
    w.setflags(write=False)
    return u, w


def nodes_weights(quad: QuadratureSpec, d: int) -> tuple[Array, Array]:
    """Nodes Z (M, d) and weights w (M,) so Σ w_j f(Z_j) ≈ ∫ f φ_s dz."""
    if d < 1:
        raise ConfigError("dimension must be >= 1")
    s = quad.variance_scale
    if s == 0.0:
        return np.zeros((1, d)), np.ones(1)
    if quad.method == GAUSS_HERMITE:
        u, w = _gh_unit_nodes(quad.nodes_per_dim, d)
    else:
        u, w = _mc_unit_nodes(quad.n_samples, quad.seed, d)
    return np.sqrt(s) * u, w


def gaussian_integrate(f, quad: QuadratureSpec, d: int) -> float:
    """∫ f(z) φ_s(z) dz with s = quad.variance_scale.

    ``f`` is called vectorized on the full (M, d) node array and must
    return M values.  Non-finite values abort with the offending node in
    the error message.  The reduction is numpy pairwise summation, which
    is deterministic regardless of threading.
    """
    z, w = nodes_weights(quad, d)
    vals = np.asarray(f(z), dtype=float).reshape(-1)
    if vals.shape[0] != z.shape[0]:
        raise EvaluationError(
            f"integrand returned {vals.shape[0]} values for {z.shape[0]} nodes"
        )
    bad = ~np.isfinite(vals)
    if bad.any():
        j = int(np.argmax(bad))
        raise EvaluationError(
            f"integrand non-finite ({vals[j]}) at node {z[j].tolist()}"
        )
    return float(np.sum(w * vals))


def log_weights(quad: QuadratureSpec, d: int) -> tuple[Array, Array]:
    """Nodes and log-weights, for log-sum-exp accumulation."""
    z, w = nodes_weights(quad, d)
    return z, np.log(w)
