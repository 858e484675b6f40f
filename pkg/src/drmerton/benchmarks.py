"""Comparison strategies: plug-in constant mix, robust mean–variance
(with and without a risk-free leg), per-step adversarial-drift shrinkage,
and the shared short-sale cap.

The robust mean–variance program is the norm-regularized form

    min_φ  φᵀΣ̂φ + √δ·‖φ‖_p
    s.t.   1ᵀφ = 1,    μ̂ᵀφ ≥ ᾱ + √δ·‖φ‖_p,

solved as a convex cone program; at δ = 0 it degenerates to classical
Markowitz, for which the equality-constrained KKT closed form is also
provided as an oracle.  The adversarial-drift policy shrinks the market
price of risk θ̂ = σ⁻¹(b̂ − r·1) by √(2δ) in Euclidean norm — the
worst-case drift within a ball of that radius — and then applies the
constant-mix formula.
"""

from __future__ import annotations

import dataclasses
import functools
import math

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigError, InfeasibleTargetError, NumericError
from .market import MarketSpec
from .merton import UtilitySpec

Array = NDArray[np.float64]

#: Primal feasibility tolerance required of a mean–variance solution.
DRMV_RESIDUAL_TOL = 1e-7

#: Default ratio of injected risk-free variance to mean risky variance.
RF_NOISE_RATIO = 1e-6


@dataclasses.dataclass(frozen=True)
class PolicyWeights:
    """Fractions of wealth: per-asset risky weights plus a cash residual."""

    weights: Array
    cash: float

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if not (np.all(np.isfinite(weights)) and math.isfinite(self.cash)):
            raise ConfigError("policy weights must be finite")
        weights = weights.copy()
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    @property
    def gross_leverage(self) -> float:
        """Sum of absolute risky fractions."""
        return float(np.sum(np.abs(self.weights)))

    @classmethod
    def zero(cls, d: int) -> "PolicyWeights":
        """All wealth in cash."""
        return cls(weights=np.zeros(d), cash=1.0)


@dataclasses.dataclass(frozen=True)
class DrmvProblem:
    """Robust mean–variance inputs: moments, radius, target, norm."""

    mu_hat: Array
    sigma_hat: Array
    delta: float
    alpha_bar: float
    p_norm: int = 2

    def __post_init__(self) -> None:
        mu = np.asarray(self.mu_hat, dtype=float).reshape(-1)
        sigma = np.asarray(self.sigma_hat, dtype=float)
        d = mu.shape[0]
        if sigma.shape != (d, d):
            raise ConfigError(f"sigma_hat must be {d}x{d}, got {sigma.shape}")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))):
            raise ConfigError("moments must be finite")
        if not np.allclose(sigma, sigma.T, atol=1e-10):
            raise ConfigError("sigma_hat must be symmetric")
        sigma = 0.5 * (sigma + sigma.T)
        min_eig = float(np.linalg.eigvalsh(sigma)[0])
        if min_eig < -1e-10 * max(1.0, float(np.trace(sigma))):
            raise ConfigError(f"sigma_hat must be positive semidefinite (min eigenvalue {min_eig:g})")
        if not (self.delta >= 0):
            raise ConfigError("delta must be >= 0")
        if self.p_norm < 1:
            raise ConfigError("p_norm must be >= 1")
        mu.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "mu_hat", mu)
        object.__setattr__(self, "sigma_hat", sigma)

    @property
    def d(self) -> int:
        return self.mu_hat.shape[0]


def merton_plugin(b_hat, market: MarketSpec, utility: UtilitySpec) -> PolicyWeights:
    """Constant mix w = (σσᵀ)⁻¹(b̂ − r·1)/(1−α); cash is the residual."""
    b_hat = np.asarray(b_hat, dtype=float).reshape(-1)
    if b_hat.shape[0] != market.d:
        raise ConfigError("drift estimate dimension does not match market")
    theta = market.theta(b_hat)
    w = (market.sigma_inv.T @ theta) / (1.0 - utility.alpha)
    return PolicyWeights(weights=w, cash=1.0 - float(np.sum(w)))


@functools.lru_cache(maxsize=32)
def _drmv_programs(d: int, p_norm: int):
    """Parametrized solve/feasibility programs, cached per shape."""
    import cvxpy as cp

    phi = cp.Variable(d)
    chol = cp.Parameter((d, d))
    sqrt_delta = cp.Parameter(nonneg=True)
    mu = cp.Parameter(d)
    abar = cp.Parameter()
    penalty = sqrt_delta * cp.norm(phi, p_norm)
    objective = cp.Minimize(cp.sum_squares(chol @ phi) + penalty)
    constraints = [cp.sum(phi) == 1, mu @ phi >= abar + penalty]
    main = cp.Problem(objective, constraints)
    best = cp.Problem(cp.Maximize(mu @ phi - penalty), [cp.sum(phi) == 1])
    return phi, chol, sqrt_delta, mu, abar, main, best


def _psd_sqrt(sigma: Array) -> Array:
    vals, vecs = np.linalg.eigh(sigma)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def _solve(problem_obj) -> str:
    """Run the cone solvers in order until one reaches a definitive status."""
    import cvxpy as cp

    definitive = (cp.OPTIMAL, cp.OPTIMAL_INACCURATE, cp.UNBOUNDED, cp.INFEASIBLE)
    status = None
    for solver in (cp.CLARABEL, cp.ECOS, cp.SCS):
        try:
            problem_obj.solve(solver=solver)
        except (cp.error.SolverError, ValueError):
            continue
        status = problem_obj.status
        if status in definitive:
            return status
    raise NumericError(f"mean–variance solvers all failed (last status {status!r})")


def drmv_solve(problem: DrmvProblem) -> PolicyWeights:
    """Solve the norm-regularized robust mean–variance program.

    Returns a fully invested portfolio (cash = 0).  An unattainable
    robust return target raises an error carrying the maximum achievable
    value of μ̂ᵀφ − √δ‖φ‖_p over the budget set.
    """
    import cvxpy as cp

    phi, chol, sqrt_delta, mu, abar, main, best = _drmv_programs(problem.d, problem.p_norm)
    chol.value = _psd_sqrt(problem.sigma_hat)
    sqrt_delta.value = math.sqrt(problem.delta)
    mu.value = problem.mu_hat
    abar.value = problem.alpha_bar
    status = _solve(main)
    if status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        best_status = _solve(best)
        if best_status == cp.UNBOUNDED or (
            best.value is not None and best.value >= problem.alpha_bar - DRMV_RESIDUAL_TOL
        ):
            raise NumericError(f"mean–variance solver failed on a feasible instance ({status})")
        raise InfeasibleTargetError(target=problem.alpha_bar, max_achievable=float(best.value))
    w = np.asarray(phi.value, dtype=float).reshape(-1)
    _check_drmv_residuals(problem, w)
    return PolicyWeights(weights=w, cash=0.0)


def _check_drmv_residuals(problem: DrmvProblem, w: Array) -> None:
    budget_gap = abs(float(np.sum(w)) - 1.0)
    pen = math.sqrt(problem.delta) * float(np.linalg.norm(w, problem.p_norm))
    ret_gap = float(problem.mu_hat @ w) - problem.alpha_bar - pen
    if budget_gap > DRMV_RESIDUAL_TOL or ret_gap < -DRMV_RESIDUAL_TOL:
        raise NumericError(
            f"mean–variance residuals exceed tolerance: budget {budget_gap:g}, return {ret_gap:g}"
        )


def append_risk_free(
    problem: DrmvProblem, rf_return: float, noise_var: float | None = None
) -> DrmvProblem:
    """Extend the problem with a riskless last asset carrying tiny variance.

    The injected variance (default ``RF_NOISE_RATIO`` times the mean
    risky variance) keeps the covariance nonsingular in spirit while
    leaving the optimum essentially unchanged.
    """
    if noise_var is None:
        noise_var = RF_NOISE_RATIO * float(np.mean(np.diag(problem.sigma_hat)))
    mu = np.append(problem.mu_hat, rf_return)
    sigma = np.zeros((problem.d + 1, problem.d + 1))
    sigma[: problem.d, : problem.d] = problem.sigma_hat
    sigma[problem.d, problem.d] = noise_var
    return dataclasses.replace(problem, mu_hat=mu, sigma_hat=sigma)


def drmv_rf_solve(problem: DrmvProblem) -> PolicyWeights:
    """Robust mean–variance where the LAST asset is the risk-free leg.

    Solves the same program on all d+1 entries; the reported risky
    weights exclude the last entry, which becomes cash.
    """
    full = drmv_solve(problem)
    return PolicyWeights(weights=full.weights[:-1], cash=float(full.weights[-1]))


def drc_policy(
    b_hat,
    market: MarketSpec,
    utility: UtilitySpec,
    delta_drc: float,
    cap: float | None = 0.5,
) -> PolicyWeights:
    """Adversarial-drift constant mix.

    The worst-case drift within a √(2δ) ball of the market price of risk
    is b_adv = r·1 + max(0, 1 − √(2δ)/‖θ̂‖)·(b̂ − r·1); the policy is the
    constant-mix formula at b_adv, then the short cap.  δ = 0 reproduces
    the plug-in mix; δ ≥ ½‖θ̂‖² kills all risky positions.
    """
    if delta_drc < 0:
        raise ConfigError("delta_drc must be >= 0")
    b_hat = np.asarray(b_hat, dtype=float).reshape(-1)
    theta_norm = float(np.linalg.norm(market.theta(b_hat)))
    if theta_norm == 0.0:
        shrink = 0.0
    else:
        shrink = max(0.0, 1.0 - math.sqrt(2.0 * delta_drc) / theta_norm)
    b_adv = market.r + shrink * (b_hat - market.r)
    policy = merton_plugin(b_adv, market, utility)
    if cap is not None:
        policy = apply_short_cap(policy, cap)
    return policy


def apply_short_cap(policy: PolicyWeights, cap: float = 0.5) -> PolicyWeights:
    """Clip each risky weight to ≥ −cap; cash absorbs the difference.

    Self-financing: total exposure (cash + Σw) is unchanged; long
    positions are untouched; idempotent.
    """
    if cap < 0:
        raise ConfigError("cap must be >= 0")
    clipped = np.maximum(policy.weights, -cap)
    residual = float(np.sum(policy.weights - clipped))
    return PolicyWeights(weights=clipped, cash=policy.cash + residual)


def markowitz_closed_form(mu_hat, sigma_hat, alpha_bar: float) -> Array:
    """Classical minimum-variance KKT solution (the δ = 0 oracle).

    Returns the global minimum-variance portfolio when it already meets
    the return target, else the two-constraint equality solution.
    """
    mu = np.asarray(mu_hat, dtype=float).reshape(-1)
    sigma = np.asarray(sigma_hat, dtype=float)
    ones = np.ones_like(mu)
    sigma_inv_ones = np.linalg.solve(sigma, ones)
    gmv = sigma_inv_ones / float(ones @ sigma_inv_ones)
    if float(mu @ gmv) >= alpha_bar:
        return gmv
    a_mat = np.stack([ones, mu])  # (2, d)
    gram = a_mat @ np.linalg.solve(sigma, a_mat.T)  # (2, 2)
    if abs(np.linalg.det(gram)) < 1e-14 * max(1.0, float(np.trace(gram)) ** 2):
        raise InfeasibleTargetError(target=alpha_bar, max_achievable=float(mu @ gmv))
    lam = np.linalg.solve(gram, np.array([1.0, alpha_bar]))
    return np.linalg.solve(sigma, a_mat.T @ lam)
