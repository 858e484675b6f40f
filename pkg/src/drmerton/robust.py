"""Worst-case prior perturbation under a Wasserstein transport budget.

The robust objective is the value integral 𝒥(ℚ) = ∫F_ℚ^{1/(1−α)}φ_T —
a monotone transform of the optimal value — minimized (α ∈ (0,1)) or
maximized (α < 0) by an adversary moving the prior within transport
cost δ under c(Δ) = τ‖Δ‖².  To first order in √δ the optimum is a
deterministic pushforward along the influence direction

    H(b) = (1/(1−α)) · ∫ ∇_b L_T(b, y) · F(T, y)^{α/(1−α)} φ_T(y) dy,
    ∇_b L_T(b, y) = L_T(b, y) · σ^{-ᵀ}(y − T·θ(b)),

namely Δ*(B^(k)) = sign·√(δ/τ)·H(B^(k))/‖H‖ with ‖H‖² = Σ_k w_k‖H(B^(k))‖²,
which changes 𝒥 by sign·√(δ/τ)·‖H‖ + o(√δ) and spends the budget
exactly: Σ_k w_k‖Δ*(B^(k))‖² = δ/τ.

A conditional variant evaluates the same construction at mid-horizon
state (t, Y(t)) by integrating over z ~ N(0, (T−t)·I) around y, for
policies that refresh the adversarial direction as information arrives.
"""

from __future__ import annotations

import dataclasses
import math
import warnings

import numpy as np
from numpy.typing import NDArray
from scipy.special import logsumexp

from .errors import ConfigError
from .market import MarketSpec
from .merton import PriorKernel, UtilitySpec, _shifted_nodes
from .priors import EmpiricalPrior
from .quadrature import QuadratureSpec

Array = NDArray[np.float64]

#: Influence norms at or below this are treated as exactly degenerate.
H_NORM_FLOOR = 1e-150


@dataclasses.dataclass(frozen=True)
class RobustSpec:
    """Ambiguity radius δ, transport cost scale τ, and shift direction.

    ``direction_sign`` is −1 when the adversary lowers the objective
    (α ∈ (0,1)) and +1 when it raises it (α < 0); use
    :meth:`for_alpha` to derive it from the utility.
    """

    delta: float
    tau: float = 1.0
    direction_sign: float = -1.0

    def __post_init__(self) -> None:
        if not (self.delta >= 0):
            raise ConfigError("delta must be >= 0")
        if not (self.tau > 0):
            raise ConfigError("tau must be > 0")
        if self.direction_sign not in (-1.0, 1.0):
            raise ConfigError("direction_sign must be -1 or +1")

    @classmethod
    def for_alpha(cls, delta: float, alpha: float, tau: float = 1.0) -> "RobustSpec":
        """Direction matched to the utility: −1 for α ∈ (0,1), +1 for α < 0."""
        sign = -1.0 if 0.0 < alpha < 1.0 else 1.0
        return cls(delta=delta, tau=tau, direction_sign=sign)


@dataclasses.dataclass(frozen=True)
class PerturbationResult:
    """Pushforward prior with its influence data.

    ``h_values`` holds H(B^(k)) per atom, ``h_norm`` the L²(prior) norm,
    ``predicted_value_shift`` the first-order change of the value
    integral, sign·√(δ/τ)·‖H‖.
    """

    perturbed: EmpiricalPrior
    h_values: Array
    h_norm: float
    predicted_value_shift: float


def influence_h(
    prior: EmpiricalPrior,
    b,
    utility: UtilitySpec,
    market: MarketSpec,
    quad: QuadratureSpec,
    t: float = 0.0,
    y=None,
) -> Array:
    """Influence direction H(b) of the value integral at atom location b.

    Default (t=0, y=None) is the unconditional functional; passing a
    mid-horizon state (t, y) evaluates the conditional analogue with the
    Gaussian weight N(0, (T−t)·I) centered at y.  Equals the Gateaux
    derivative of the value integral under translation of an atom at b.
    """
    s = market.T - t
    if s < 0:
        raise ConfigError("t must be <= T")
    kernel = PriorKernel(prior, market)
    b = np.asarray(b, dtype=float).reshape(-1)
    theta_b = market.theta(b)
    ys, log_w = _shifted_nodes(quad, market.d, s, y)

    log_f = kernel.log_mixture(market.T, ys)
    log_l_b = ys @ theta_b - 0.5 * market.T * (theta_b @ theta_b)
    beta = utility.beta
    log_vals = log_w + log_l_b + beta * log_f
    shift = float(np.max(log_vals))
    scaled = np.exp(log_vals - shift)[:, None] * (ys - market.T * theta_b[None, :])
    vec = math.exp(shift) * np.sum(scaled, axis=0)
    return (market.sigma_inv.T @ vec) / (1.0 - utility.alpha)


def influence_all_atoms(
    prior: EmpiricalPrior,
    utility: UtilitySpec,
    market: MarketSpec,
    quad: QuadratureSpec,
    t: float = 0.0,
    y=None,
) -> Array:
    """H(B^(k)) for every atom at once, sharing one node evaluation: (n, d)."""
    s = market.T - t
    if s < 0:
        raise ConfigError("t must be <= T")
    kernel = PriorKernel(prior, market)
    ys, log_w = _shifted_nodes(quad, market.d, s, y)
    log_f = kernel.log_mixture(market.T, ys)  # (M,)
    log_l = kernel.log_likelihood(market.T, ys)  # (M, n)
    log_vals = log_w[:, None] + log_l + utility.beta * log_f[:, None]
    shift = float(np.max(log_vals))
    weights = np.exp(log_vals - shift)  # (M, n)
    # Σ_m weight[m,k]·(y_m − T·θ_k), assembled as two matmuls.
    first = weights.T @ ys  # (n, d)
    second = market.T * np.sum(weights, axis=0)[:, None] * kernel.theta
    vecs = math.exp(shift) * (first - second)
    return (vecs @ market.sigma_inv) / (1.0 - utility.alpha)


def _atom_spread(prior: EmpiricalPrior) -> float:
    mean = prior.weights @ prior.atoms
    dev = prior.atoms - mean[None, :]
    return math.sqrt(float(prior.weights @ np.sum(dev * dev, axis=1)))


def perturb_prior(
    prior: EmpiricalPrior,
    spec: RobustSpec,
    utility: UtilitySpec,
    market: MarketSpec,
    quad: QuadratureSpec,
    t: float = 0.0,
    y=None,
) -> PerturbationResult:
    """Move every atom along its influence direction within budget δ.

    Atoms shift by Δ*(B^(k)) = sign·√(δ/τ)·H(B^(k))/‖H‖, spending the
    quadratic transport budget exactly; weights are unchanged.  A
    degenerate influence field (‖H‖ = 0) or δ = 0 returns the prior
    untouched with zero predicted shift.
    """
    h_values = influence_all_atoms(prior, utility, market, quad, t=t, y=y)
    h_norm = math.sqrt(float(prior.weights @ np.sum(h_values * h_values, axis=1)))
    if spec.delta == 0.0 or h_norm <= H_NORM_FLOOR:
        return PerturbationResult(
            perturbed=prior, h_values=h_values, h_norm=h_norm, predicted_value_shift=0.0
        )
    root = math.sqrt(spec.delta / spec.tau)
    spread = _atom_spread(prior)
    if math.sqrt(spec.delta) > 0.5 * spread:
        warnings.warn(
            f"ambiguity radius sqrt(delta)={math.sqrt(spec.delta):.3g} exceeds half the "
            f"atom spread {spread:.3g}; the first-order pushforward may be inaccurate",
            stacklevel=2,
        )
    shift = spec.direction_sign * root * h_values / h_norm
    perturbed = EmpiricalPrior(atoms=prior.atoms + shift, weights=prior.weights)
    return PerturbationResult(
        perturbed=perturbed,
        h_values=h_values,
        h_norm=h_norm,
        predicted_value_shift=spec.direction_sign * root * h_norm,
    )


def value_objective(
    prior: EmpiricalPrior,
    utility: UtilitySpec,
    market: MarketSpec,
    quad: QuadratureSpec,
    t: float = 0.0,
    y=None,
) -> float:
    """The adversary's objective 𝒥(ℚ) = ∫F_ℚ^{1/(1−α)}φ (alias of the value integral)."""
    from .merton import value_integral

    return value_integral(prior, utility, market, quad, t=t, y=y)
