"""Empirical drift priors from windowed log-returns.

The unknown drift is modeled as a random vector whose prior is the
empirical measure of window-based estimates: split the trailing history
into batches, estimate the annualized drift in each batch by

    B̂_i = (log S_i(end) − log S_i(start)) / span + ½‖σ_{i·}‖²,

and place one equally weighted atom per batch.  Two batching modes are
supported: ``consecutive`` (disjoint contiguous windows) and ``type``
(steps assigned round-robin to recurring classes, whose one-step
log-returns are averaged per class and annualized by the step size).
Estimates may be clamped componentwise into a box before use, which is
how gross outliers are kept bounded on real data.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigError, DataError, InsufficientHistoryError
from .market import MarketSpec, PathGrid, _CSV_FMT

Array = NDArray[np.float64]

CONSECUTIVE = "consecutive"
TYPE = "type"

_WEIGHT_TOL = 1e-12


@dataclasses.dataclass(frozen=True)
class EmpiricalPrior:
    """Discrete prior over drift vectors: atoms (n, d) with weights (n,)."""

    atoms: Array
    weights: Array

    def __post_init__(self) -> None:
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if atoms.shape[0] != weights.shape[0] or atoms.shape[0] < 1:
            raise ConfigError("need one weight per atom, at least one atom")
        if not np.all(np.isfinite(atoms)):
            raise ConfigError("atoms must be finite")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > _WEIGHT_TOL:
            raise ConfigError("weights must be nonnegative and sum to 1")
        atoms = atoms.copy()
        weights = weights.copy()
        atoms.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[0]

    @property
    def d(self) -> int:
        return self.atoms.shape[1]

    @classmethod
    def dirac(cls, b) -> "EmpiricalPrior":
        """Point mass at a single drift vector."""
        b = np.atleast_1d(np.asarray(b, dtype=float))
        return cls(atoms=b[None, :], weights=np.ones(1))

    @classmethod
    def uniform(cls, atoms) -> "EmpiricalPrior":
        """Equal weights over the given atoms."""
        atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
        n = atoms.shape[0]
        return cls(atoms=atoms, weights=np.full(n, 1.0 / n))


@dataclasses.dataclass(frozen=True)
class WindowingSpec:
    """How to batch history into drift estimates.

    ``mode`` is ``consecutive`` (one atom per disjoint trailing window of
    ``window_len`` steps) or ``type`` (steps assigned round-robin to
    ``n_types`` classes over the same trailing region).  In both modes the
    region used is the most recent ``window_len * n_windows`` steps.
    """

    mode: str = CONSECUTIVE
    window_len: int = 252
    n_windows: int = 10
    n_types: int = 10

    def __post_init__(self) -> None:
        if self.mode not in (CONSECUTIVE, TYPE):
            raise ConfigError(f"mode must be {CONSECUTIVE!r} or {TYPE!r}, got {self.mode!r}")
        if self.window_len < 1 or self.n_windows < 1 or self.n_types < 1:
            raise ConfigError("window_len, n_windows, n_types must be >= 1")

    @property
    def total_steps(self) -> int:
        return self.window_len * self.n_windows


def _prices_array(prices) -> Array:
    if isinstance(prices, PathGrid):
        return prices.prices
    arr = np.atleast_2d(np.asarray(prices, dtype=float))
    if arr.shape[0] < 2:
        raise DataError("need at least two price observations")
    if not np.all(arr > 0):
        raise DataError("prices must be strictly positive")
    return arr


def estimate_window_drift(prices, market: MarketSpec, window_span: float) -> Array:
    """Annualized drift estimate over one window of prices.

    Component i is (log S_i(end) − log S_i(start))/window_span plus the
    Itô correction ½‖σ_{i·}‖², which makes the estimator conditionally
    unbiased for the drift under the exact log price scheme.  Equals the
    mean of one-step log-returns divided by the step size plus the same
    correction (telescoping).
    """
    arr = _prices_array(prices)
    if window_span <= 0:
        raise ConfigError("window_span must be > 0")
    if arr.shape[1] != market.d:
        raise DataError("price dimension does not match market")
    log_return = np.log(arr[-1]) - np.log(arr[0])
    return log_return / window_span + 0.5 * market.row_norms_sq


def build_prior(prices, market: MarketSpec, windowing: WindowingSpec) -> EmpiricalPrior:
    """One equally weighted atom per batch of the trailing history.

    Consecutive mode: the most recent ``window_len * n_windows`` steps are
    split into ``n_windows`` disjoint windows (oldest first) and each
    window contributes its own drift estimate.  Type mode: the one-step
    log-returns of the same region are assigned round-robin to
    ``n_types`` classes; each class's mean return is annualized by the
    step size and Itô-corrected.
    """
    arr = _prices_array(prices)
    if arr.shape[1] != market.d:
        raise DataError("price dimension does not match market")
    available = arr.shape[0] - 1
    total = windowing.total_steps
    if total > available:
        raise InsufficientHistoryError(required=total, available=available, what="price steps")
    region = arr[available - total :]  # total+1 rows, the trailing `total` steps

    if windowing.mode == CONSECUTIVE:
        span = windowing.window_len * market.dt
        atoms = np.stack(
            [
                estimate_window_drift(
                    region[j * windowing.window_len : (j + 1) * windowing.window_len + 1],
                    market,
                    span,
                )
                for j in range(windowing.n_windows)
            ]
        )
        return EmpiricalPrior.uniform(atoms)

    # Type mode: round-robin class assignment of one-step log-returns.
    returns = np.diff(np.log(region), axis=0)  # (total, d)
    classes = np.arange(total) % windowing.n_types
    atoms = np.empty((windowing.n_types, market.d))
    for c in range(windowing.n_types):
        members = returns[classes == c]
        if members.shape[0] == 0:
            raise InsufficientHistoryError(
                required=windowing.n_types, available=total, what="steps per type class"
            )
        atoms[c] = members.mean(axis=0) / market.dt + 0.5 * market.row_norms_sq
    return EmpiricalPrior.uniform(atoms)


def clamp_atoms(prior: EmpiricalPrior, box) -> EmpiricalPrior:
    """Clip every atom componentwise into ``box`` = (lower, upper).

    Bounds may be scalars or per-component vectors; weights are
    unchanged; idempotent.
    """
    lower, upper = box
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(lower >= upper):
        raise ConfigError("box lower bound must be strictly below upper bound")
    return EmpiricalPrior(atoms=np.clip(prior.atoms, lower, upper), weights=prior.weights)


def prior_to_csv(prior: EmpiricalPrior, filename: str) -> None:
    """Write `weight,b_1,...,b_d` rows at full double precision."""
    header = "weight," + ",".join(f"b_{i + 1}" for i in range(prior.d))
    data = np.column_stack([prior.weights, prior.atoms])
    np.savetxt(filename, data, fmt=_CSV_FMT, delimiter=",", header=header, comments="")


def prior_from_csv(filename: str) -> EmpiricalPrior:
    """Read a prior written by :func:`prior_to_csv` (bit-exact round trip)."""
    try:
        with open(filename, "r", encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as exc:
        raise DataError(f"cannot read prior CSV {filename!r}: {exc}") from exc
    if not header or header[0] != "weight":
        raise DataError(f"prior CSV {filename!r} must start with a 'weight' column")
    if data.shape[1] != len(header):
        raise DataError(f"prior CSV {filename!r} has inconsistent column count")
    return EmpiricalPrior(atoms=data[:, 1:], weights=data[:, 0])
