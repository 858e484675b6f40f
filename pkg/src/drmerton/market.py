"""Synthetic multi-asset market: geometric Brownian prices, sinusoidal
drifts, and the observation process.

Prices follow, per asset i,

    dS_i(t)/S_i(t) = B_i(t) dt + (σ dW(t))_i,

simulated with the exact log scheme

    log S_i(t+dt) − log S_i(t) = (B_i(t) − ½‖σ_{i·}‖²) dt + (σ dW)_i,

which keeps prices strictly positive and makes windowed log-return drift
estimators exactly unbiased under constant drift (no discretization
bias).  Drift is evaluated at the left endpoint of each step.

The observation process

    Y(t) = σ⁻¹(B − r·1)·t + W(t)

is what the filtration of prices actually reveals; it is reconstructed
from prices alone via

    Y(t) = σ⁻¹·(log S(t) − log S(0) + (½·diag(σσᵀ) − r·1)·t),

an identity that is exact under constant drift and serves as the
conditioning state of the dynamic policies.
"""

from __future__ import annotations

import dataclasses
import functools
from typing import Sequence, Union

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigError, DataError

Array = NDArray[np.float64]

#: Condition-number cap above which a volatility matrix is rejected.
CONDITION_CAP = 1e12

_CSV_FMT = "%.17g"  # full double precision, round-trips bit-exactly


@dataclasses.dataclass(frozen=True)
class MarketSpec:
    """Market constants: dimension, rates, volatility, horizon, step.

    Parameters
    ----------
    d : int
        Number of risky assets.
    r : float
        Risk-free rate (per year, continuously compounded).
    sigma : (d, d) array
        Volatility matrix, invertible (condition number below
        ``CONDITION_CAP``).
    T : float
        Planning horizon in years.
    dt : float
        Step size in years, 0 < dt < T.
    """

    d: int
    r: float
    sigma: Array
    T: float
    dt: float

    def __post_init__(self) -> None:
        sigma = np.asarray(self.sigma, dtype=float)
        if self.d < 1:
            raise ConfigError("d must be >= 1")
        if sigma.shape != (self.d, self.d):
            raise ConfigError(f"sigma must be {self.d}x{self.d}, got {sigma.shape}")
        if not np.all(np.isfinite(sigma)):
            raise ConfigError("sigma must be finite")
        cond = np.linalg.cond(sigma)
        if not np.isfinite(cond) or cond > CONDITION_CAP:
            raise ConfigError(f"sigma condition number {cond:g} exceeds cap {CONDITION_CAP:g}")
        if not (self.T > 0):
            raise ConfigError("T must be > 0")
        if not (0 < self.dt < self.T):
            raise ConfigError("dt must satisfy 0 < dt < T")
        sigma = sigma.copy()
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)

    @functools.cached_property
    def sigma_inv(self) -> Array:
        out = np.linalg.inv(self.sigma)
        out.setflags(write=False)
        return out

    @functools.cached_property
    def row_norms_sq(self) -> Array:
        """‖σ_{i·}‖² per asset, i.e. diag(σσᵀ)."""
        out = np.sum(self.sigma * self.sigma, axis=1)
        out.setflags(write=False)
        return out

    def theta(self, b: Array) -> Array:
        """Market price of risk σ⁻¹(b − r·1).

        Accepts a single drift vector (d,) or a stack (n, d); returns
        the same shape.
        """
        b = np.asarray(b, dtype=float)
        return (b - self.r) @ self.sigma_inv.T

    def with_horizon(self, T: float) -> "MarketSpec":
        """Same market, different planning horizon."""
        return dataclasses.replace(self, T=float(T))


@dataclasses.dataclass(frozen=True)
class SinusoidalDriftSpec:
    """Deterministic oscillating drift: B_i(t) = (B0/2)·(1 + 2·cos(2π·κ_i·t)).

    Each asset has its own frequency κ_i; frequencies are typically drawn
    once per experiment from a Gaussian law (see :meth:`sample`).
    """

    B0: float
    kappa: Array

    def __post_init__(self) -> None:
        if not (self.B0 > 0):
            raise ConfigError("B0 must be > 0")
        kappa = np.asarray(self.kappa, dtype=float).reshape(-1)
        if kappa.size < 1 or not np.all(np.isfinite(kappa)):
            raise ConfigError("kappa must be a finite non-empty vector")
        kappa = kappa.copy()
        kappa.setflags(write=False)
        object.__setattr__(self, "kappa", kappa)

    @property
    def d(self) -> int:
        return self.kappa.shape[0]

    @classmethod
    def sample(
        cls, B0: float, d: int, mean: float, std: float, seed: int
    ) -> "SinusoidalDriftSpec":
        """Draw the d frequencies κ_i ~ Normal(mean, std²) from a seeded stream."""
        rng = _philox(seed, tag=1)
        kappa = mean + std * rng.standard_normal(d)
        return cls(B0=B0, kappa=kappa)


def drift_at(spec: SinusoidalDriftSpec, t: float) -> Array:
    """Drift vector at time t: component i is (B0/2)·(1 + 2·cos(2π·κ_i·t))."""
    if t < 0:
        raise ConfigError("t must be >= 0")
    return (spec.B0 / 2.0) * (1.0 + 2.0 * np.cos(2.0 * np.pi * spec.kappa * t))


@dataclasses.dataclass(frozen=True)
class PathGrid:
    """A simulated (or ingested) price path on a uniform time grid.

    ``times`` has n+1 points starting at 0, ``prices`` is (n+1, d) and
    strictly positive, ``brownian`` holds the n×d underlying Brownian
    increments when the path was simulated (None for ingested data);
    they are retained for oracle tests.
    """

    times: Array
    prices: Array
    brownian: Array | None = None

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        prices = np.asarray(self.prices, dtype=float)
        if times.ndim != 1 or prices.ndim != 2 or prices.shape[0] != times.shape[0]:
            raise DataError("times (n+1,) and prices (n+1, d) must align")
        if times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise DataError("times must start at 0 and be strictly increasing")
        if not np.all(prices > 0):
            raise DataError("prices must be strictly positive")
        if self.brownian is not None:
            brownian = np.asarray(self.brownian, dtype=float)
            if brownian.shape != (times.shape[0] - 1, prices.shape[1]):
                raise DataError("brownian must be (n, d): one increment per step per asset")
            object.__setattr__(self, "brownian", brownian)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "prices", prices)

    @property
    def n_steps(self) -> int:
        return self.times.shape[0] - 1

    @property
    def d(self) -> int:
        return self.prices.shape[1]


def _philox(seed: int, tag: int, extra: tuple[int, ...] = ()) -> np.random.Generator:
    """Deterministic counter-based generator for an independent substream.

    Keyed by (seed, tag, *extra) through SeedSequence, so distinct
    substreams (paths, frequency draws, quadrature, calibration) never
    overlap and parallel generation is order-independent.
    """
    ss = np.random.SeedSequence((int(seed), int(tag)) + tuple(int(e) for e in extra))
    return np.random.Generator(np.random.Philox(key=ss.generate_state(2, np.uint64)))


DriftLike = Union[SinusoidalDriftSpec, Sequence[float], Array]


def simulate_paths(
    market: MarketSpec,
    drift: DriftLike,
    n_steps: int,
    seed: int,
    s0: float | Array = 1.0,
) -> PathGrid:
    """Simulate one d-asset price path with the exact log scheme.

    ``drift`` is either a :class:`SinusoidalDriftSpec` (evaluated at the
    left endpoint of each step) or a constant drift vector.  The Brownian
    increments come from a Philox substream keyed by the seed, so the
    result is a pure function of (market, drift, n_steps, seed).
    """
    if n_steps < 1:
        raise ConfigError("n_steps must be >= 1")
    d = market.d
    if isinstance(drift, SinusoidalDriftSpec):
        if drift.d != d:
            raise ConfigError("drift dimension does not match market")
        t_left = market.dt * np.arange(n_steps)
        b = np.stack([drift_at(drift, t) for t in t_left])  # (n, d)
    else:
        b_vec = np.asarray(drift, dtype=float).reshape(-1)
        if b_vec.shape[0] != d:
            raise ConfigError("constant drift must have one component per asset")
        b = np.broadcast_to(b_vec, (n_steps, d))

    rng = _philox(seed, tag=0)
    dw = np.sqrt(market.dt) * rng.standard_normal((n_steps, d))
    log_increments = (b - 0.5 * market.row_norms_sq) * market.dt + dw @ market.sigma.T

    s0 = np.broadcast_to(np.asarray(s0, dtype=float), (d,))
    if not np.all(s0 > 0):
        raise ConfigError("initial prices must be positive")
    log_prices = np.concatenate(
        [np.log(s0)[None, :], np.log(s0)[None, :] + np.cumsum(log_increments, axis=0)]
    )
    times = market.dt * np.arange(n_steps + 1)
    return PathGrid(times=times, prices=np.exp(log_prices), brownian=dw)


def observation_y(path: PathGrid, market: MarketSpec) -> Array:
    """Observation process on the grid, reconstructed from prices alone.

    Returns an (n+1, d) array with row k equal to

        Y(t_k) = σ⁻¹·(log S(t_k) − log S(0) + (½·diag(σσᵀ) − r·1)·t_k).

    Exact grid lookup only; no interpolation is offered.
    """
    if path.d != market.d:
        raise DataError("path dimension does not match market")
    log_rel = np.log(path.prices) - np.log(path.prices[0])[None, :]
    correction = np.outer(path.times, 0.5 * market.row_norms_sq - market.r)
    return (log_rel + correction) @ market.sigma_inv.T


def path_to_csv(path: PathGrid, filename: str) -> None:
    """Write `time,asset_1,...,asset_d` rows at full double precision."""
    header = "time," + ",".join(f"asset_{i + 1}" for i in range(path.d))
    data = np.column_stack([path.times, path.prices])
    np.savetxt(filename, data, fmt=_CSV_FMT, delimiter=",", header=header, comments="")


def path_from_csv(filename: str) -> PathGrid:
    """Read a path written by :func:`path_to_csv` (bit-exact round trip)."""
    try:
        with open(filename, "r", encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as exc:
        raise DataError(f"cannot read path CSV {filename!r}: {exc}") from exc
    if not header or header[0] != "time":
        raise DataError(f"path CSV {filename!r} must start with a 'time' column")
    if data.shape[1] != len(header):
        raise DataError(f"path CSV {filename!r} has inconsistent column count")
    return PathGrid(times=data[:, 0], prices=data[:, 1:])
