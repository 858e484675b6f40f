"""Closed-form dynamic allocation under drift uncertainty with a
discrete prior.

With an unknown drift vector B carrying a discrete prior (atoms B^(k),
weights w_k), the observation process Y(t) = σ⁻¹(B−r·1)t + W(t) is a
sufficient statistic, and everything reduces to Gaussian integrals of
the likelihood-ratio mixture

    L_t(b, y) = exp(⟨θ(b), y⟩ − ½‖θ(b)‖²·t),     θ(b) = σ⁻¹(b − r·1),
    F(t, y)   = Σ_k w_k · L_t(B^(k), y).

For power utility U(x) = x^α/α (α < 1, α ≠ 0) the pipeline is fully
closed-form:

  * wealth kernel      L(k; s, y) = e^{−rs}·∫ I(k e^{−rT}/F(T, y+z)) φ_s(z) dz
    with I = (U′)⁻¹, φ_s the N(0, s·I_d) density, and the s = 0 case the
    pointwise evaluation;
  * budget multiplier  k solving L(k; T, 0) = x₀, available in closed
    form as k = e^{rT}·(M/(x₀e^{rT}))^{1−α} with
    M = ∫ F(T,z)^{1/(1−α)} φ_T(z) dz;
  * value              V = ((x₀e^{rT})^α/α) · M^{1−α};
  * optimal fractions  π/X = (σᵀ)⁻¹ · E_ρ[∇F/F] / (1−α), the posterior
    mean of θ under the reweighted node law ρ ∝ F^{1/(1−α)} φ_{T−t}.

The general-utility expressions (with I and I′ appearing explicitly) are
also provided; for power utility they agree with the specialized forms
to floating-point accuracy and serve as cross-checks.

All mixture evaluations run in log space (log-sum-exp over atoms) so
that far-tail quadrature nodes cannot overflow.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import scipy.optimize
from numpy.typing import NDArray
from scipy.special import logsumexp

from .errors import ConfigError, NumericError
from .market import MarketSpec
from .priors import EmpiricalPrior
from .quadrature import QuadratureSpec, gaussian_integrate, nodes_weights

Array = NDArray[np.float64]

#: Below this remaining time the outer Gaussian is treated as a point mass.
TIME_EPS = 1e-12

#: Relative budget-identity tolerance required of a solved multiplier.
BUDGET_TOL = 1e-8


@dataclasses.dataclass(frozen=True)
class UtilitySpec:
    """Power utility U(x) = x^α/α with α < 1, α ≠ 0.

    ``beta`` = α/(1−α) is the exponent that reweights F in the closed
    forms; I = (U′)⁻¹ is the inverse marginal utility I(y) = y^{1/(α−1)}.
    """

    alpha: float

    def __post_init__(self) -> None:
        if not (self.alpha < 1.0) or self.alpha == 0.0:
            raise ConfigError("alpha must satisfy alpha < 1 and alpha != 0")

    @property
    def beta(self) -> float:
        return self.alpha / (1.0 - self.alpha)

    def u(self, x):
        """Utility U(x) = x^α/α for x > 0."""
        return np.power(x, self.alpha) / self.alpha

    def i_of(self, y):
        """Inverse marginal utility I(y) = y^{1/(α−1)}."""
        return np.power(y, 1.0 / (self.alpha - 1.0))

    def i_prime(self, y):
        """Derivative I′(y) = (1/(α−1))·y^{(2−α)/(α−1)} (negative)."""
        return (1.0 / (self.alpha - 1.0)) * np.power(y, (2.0 - self.alpha) / (self.alpha - 1.0))


@dataclasses.dataclass(frozen=True)
class BudgetSolution:
    """Budget multiplier k with the achieved identity residual.

    ``residual`` is |∫I(k·e^{−rT}/F(T,z))φ_T(z)dz − x₀e^{rT}|, required
    to stay below ``BUDGET_TOL``·x₀e^{rT}.
    """

    k: float
    x0: float
    residual: float

    def __post_init__(self) -> None:
        if not (self.k > 0):
            raise ConfigError("budget multiplier k must be > 0")


class PriorKernel:
    """Precomputed atom data for fast mixture evaluation.

    Holds θ_k = σ⁻¹(B^(k) − r·1), ‖θ_k‖², and log weights; every method
    is vectorized over a batch of observation points ``ys`` of shape
    (M, d).
    """

    def __init__(self, prior: EmpiricalPrior, market: MarketSpec) -> None:
        if prior.d != market.d:
            raise ConfigError("prior dimension does not match market")
        self.prior = prior
        self.market = market
        self.theta = market.theta(prior.atoms)  # (n, d)
        self.theta_sq = np.sum(self.theta * self.theta, axis=1)  # (n,)
        with np.errstate(divide="ignore"):
            self.log_w = np.log(prior.weights)  # −inf for zero weights is fine

    def log_likelihood(self, t: float, ys: Array) -> Array:
        """log L_t(B^(k), y) for each node/atom pair: (M, n)."""
        return ys @ self.theta.T - 0.5 * t * self.theta_sq[None, :]

    def log_mixture(self, t: float, ys: Array) -> Array:
        """log F(t, y) per node: (M,)."""
        return logsumexp(self.log_w[None, :] + self.log_likelihood(t, ys), axis=1)

    def mixture_parts(self, t: float, ys: Array) -> tuple[Array, Array]:
        """(log F, posterior atom weights) per node: shapes (M,), (M, n).

        The posterior weights are softmax(log w_k + log L_t), i.e. the
        conditional law of the drift atom given y; their θ-average is
        ∇F/F.
        """
        a = self.log_w[None, :] + self.log_likelihood(t, ys)
        log_f = logsumexp(a, axis=1)
        post = np.exp(a - log_f[:, None])
        return log_f, post

    def posterior_theta(self, t: float, ys: Array) -> Array:
        """G(t, y) = ∇_y F / F = posterior mean of θ, per node: (M, d)."""
        _, post = self.mixture_parts(t, ys)
        return post @ self.theta


def likelihood_ratio(b, y, t: float, market: MarketSpec) -> float:
    """L_t(b, y) = exp(⟨θ(b), y⟩ − ½‖θ(b)‖²·t); equals 1 at b = r·1."""
    if t < 0:
        raise ConfigError("t must be >= 0")
    theta = market.theta(np.asarray(b, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    return float(np.exp(theta @ y - 0.5 * t * theta @ theta))


def mixture_f(prior: EmpiricalPrior, y, t: float, market: MarketSpec) -> float:
    """F(t, y) = Σ_k w_k·L_t(B^(k), y), evaluated stably in log space."""
    if t < 0:
        raise ConfigError("t must be >= 0")
    kernel = PriorKernel(prior, market)
    y = np.asarray(y, dtype=float).reshape(1, -1)
    return float(np.exp(kernel.log_mixture(t, y)[0]))


def grad_f(prior: EmpiricalPrior, y, t: float, market: MarketSpec) -> Array:
    """∇_y F(t, y) = Σ_k w_k·L_t(B^(k), y)·θ_k."""
    if t < 0:
        raise ConfigError("t must be >= 0")
    kernel = PriorKernel(prior, market)
    y = np.asarray(y, dtype=float).reshape(1, -1)
    log_f, post = kernel.mixture_parts(t, y)
    return float(np.exp(log_f[0])) * (post @ kernel.theta)[0]


def _shifted_nodes(quad: QuadratureSpec, d: int, s: float, y) -> tuple[Array, Array]:
    """Nodes y+z and log-weights for z ~ N(0, s·I_d)."""
    z, w = nodes_weights(quad.with_scale(s), d)
    ys = z if y is None else z + np.asarray(y, dtype=float).reshape(1, -1)
    with np.errstate(divide="ignore"):
        log_w = np.log(w)
    return ys, log_w


def log_value_integral(
    prior: EmpiricalPrior,
    utility: UtilitySpec,
    market: MarketSpec,
    quad: QuadratureSpec,
    t: float = 0.0,
    y=None,
) -> float:
    """log ∫ F(T, y+z)^{1/(1−α)} φ_{T−t}(z) dz, the log of M_t(y)."""
    s = market.T - t
    if s < -TIME_EPS:
        raise ConfigError("t must be <= T")
    s = max(s, 0.0)
    kernel = PriorKernel(prior, market)
    ys, log_w = _shifted_nodes(quad, market.d, s, y)
    p = 1.0 / (1.0 - utility.alpha)
    vals = log_w + p * kernel.log_mixture(market.T, ys)
    out = float(logsumexp(vals))
    if not math.isfinite(out):
        raise NumericError("value integral is not finite")
    return out


def value_integral(
    prior: EmpiricalPrior,
    utility: UtilitySpec,
    market: MarketSpec,
    quad: QuadratureSpec,
    t: float = 0.0,
    y=None,
) -> float:
    """M_t(y) = ∫ F(T, y+z)^{1/(1−α)} φ_{T−t}(z) dz (M = M_0(0))."""
    return math.exp(log_value_integral(prior, utility, market, quad, t, y))


def l_kernel(
    prior: EmpiricalPrior,
    k: float,
    s: float,
    y,
    utility: UtilitySpec,
    market: MarketSpec,
    quad: QuadratureSpec,
) -> float:
    """Wealth kernel L(k; s, y) = e^{−rs}·∫ I(k e^{−rT}/F(T, y+z)) φ_s(z) dz.

    The optimal wealth at time t is L(k; T−t, Y(t)); at s = 0 the
    integral degenerates to the pointwise value.  Strictly decreasing
    and continuous in k on (0, ∞).
    """
    if k <= 0:
        raise ConfigError("k must be > 0")
    if s < 0:
        raise ConfigError("s must be >= 0")
    kernel = PriorKernel(prior, market)
    ys, log_w = _shifted_nodes(quad, market.d, s, y)
    # I(k e^{−rT}/F) = (k e^{−rT})^{1/(α−1)} · F^{1/(1−α)}, summed in log space.
    p = 1.0 / (1.0 - utility.alpha)
    log_c = math.log(k) - market.r * market.T
    log_int = logsumexp(log_w + p * kernel.log_mixture(market.T, ys)) - p * log_c
    return math.exp(-market.r * s + log_int)


def _budget_value(
    prior: EmpiricalPrior,
    k: float,
    utility: UtilitySpec,
    market: MarketSpec,
    quad: QuadratureSpec,
) -> float:
    """Undiscounted budget integral ∫ I(k e^{−rT}/F(T,z)) φ_T(z) dz."""
    return math.exp(market.r * market.T) * l_kernel(prior, k, market.T, None, utility, market, quad)


def solve_budget_k(
    prior: EmpiricalPrior,
    x0: float,
    utility: UtilitySpec,
    market: MarketSpec,
    quad: QuadratureSpec,
    method: str = "closed",
) -> BudgetSolution:
    """Multiplier k making the optimal plan affordable: L(k; T, 0) = x₀.

    ``method='closed'`` uses k = e^{rT}·(M/(x₀e^{rT}))^{1−α};
    ``method='root'`` brackets and solves the strictly decreasing budget
    map directly (the two agree to ~1e−10 relative).
    """
    if x0 <= 0:
        raise ConfigError("x0 must be > 0")
    target = x0 * math.exp(market.r * market.T)
    if method == "closed":
        log_m = log_value_integral(prior, utility, market, quad)
        log_k = market.r * market.T + (1.0 - utility.alpha) * (log_m - math.log(target))
        k = math.exp(log_k)
    elif method == "root":
        k = _root_budget_k(prior, target, utility, market, quad)
    else:
        raise ConfigError(f"unknown method {method!r}; use 'closed' or 'root'")
    residual = abs(_budget_value(prior, k, utility, market, quad) - target)
    if residual > BUDGET_TOL * target:
        raise NumericError(f"budget residual {residual:g} exceeds {BUDGET_TOL:g}·x0·e^(rT)")
    return BudgetSolution(k=k, x0=float(x0), residual=residual)


def _root_budget_k(
    prior: EmpiricalPrior,
    target: float,
    utility: UtilitySpec,
    market: MarketSpec,
    quad: QuadratureSpec,
) -> float:
    def h(log_k: float) -> float:
        return math.log(_budget_value(prior, math.exp(log_k), utility, market, quad)) - math.log(
            target
        )

    lo = hi = 0.0
    f_lo = f_hi = h(0.0)
    # h is strictly decreasing in log k; expand the bracket geometrically.
    for _ in range(200):
        if f_lo > 0 > f_hi:
            break
        if f_lo <= 0:
            lo -= max(1.0, abs(lo))
            f_lo = h(lo)
        if f_hi >= 0:
            hi += max(1.0, abs(hi))
            f_hi = h(hi)
    else:
        raise NumericError("budget bracket expansion failed after 200 doublings")
    if f_lo == 0.0:
        return math.exp(lo)
    if f_hi == 0.0:
        return math.exp(hi)
    log_k = scipy.optimize.brentq(h, lo, hi, xtol=1e-14, rtol=8.9e-16, maxiter=300)
    return math.exp(log_k)


def value_function(
    prior: EmpiricalPrior,
    x0: float,
    utility: UtilitySpec,
    market: MarketSpec,
    quad: QuadratureSpec,
) -> float:
    """Optimal expected utility V = ((x₀e^{rT})^α/α)·M^{1−α}."""
    if x0 <= 0:
        raise ConfigError("x0 must be > 0")
    log_m = log_value_integral(prior, utility, market, quad)
    a = utility.alpha
    scale = a * (math.log(x0) + market.r * market.T) + (1.0 - a) * log_m
    return math.exp(scale) / a


def optimal_fraction(
    prior: EmpiricalPrior,
    t: float,
    y,
    utility: UtilitySpec,
    market: MarketSpec,
    quad: QuadratureSpec,
) -> Array:
    """Optimal fractions of wealth in each asset at time t, state Y(t)=y.

        π/X = (σᵀ)⁻¹ · [∫∇F·F^{α/(1−α)} φ_{T−t}] / [(1−α)·∫F^{1/(1−α)} φ_{T−t}]
            = (σᵀ)⁻¹ · E_ρ[∇F/F] / (1−α),

    where ρ reweights the quadrature nodes by F^{1/(1−α)}.  The
    self-normalized form is exact (the normalizations cancel) and immune
    to overflow.  A point-mass prior at b recovers the constant mix
    (σσᵀ)⁻¹(b − r·1)/(1−α).
    """
    if not (0 <= t < market.T):
        raise ConfigError("t must satisfy 0 <= t < T")
    s = market.T - t
    if s < TIME_EPS:
        s = 0.0
    kernel = PriorKernel(prior, market)
    ys, log_w = _shifted_nodes(quad, market.d, s, y)
    log_f, post = kernel.mixture_parts(market.T, ys)
    p = 1.0 / (1.0 - utility.alpha)
    log_rho = log_w + p * log_f
    rho = np.exp(log_rho - logsumexp(log_rho))
    g_mean = rho @ (post @ kernel.theta)  # E_ρ[∇F/F]
    return (market.sigma_inv.T @ g_mean) / (1.0 - utility.alpha)


def general_value(
    prior: EmpiricalPrior,
    k: float,
    utility: UtilitySpec,
    market: MarketSpec,
    quad: QuadratureSpec,
) -> float:
    """General-form value ∫ F(T,z)·U(I(k e^{−rT}/F(T,z))) φ_T(z) dz.

    Cross-check path: with the budget-solving k this equals
    :func:`value_function` to relative 1e−8.
    """
    if k <= 0:
        raise ConfigError("k must be > 0")
    kernel = PriorKernel(prior, market)
    a = utility.alpha
    log_c = math.log(k) - market.r * market.T

    def f(z: Array) -> Array:
        log_f = kernel.log_mixture(market.T, z)
        # F·U(I(c/F)) = (1/α)·exp((α/(α−1))·log c + log F/(1−α)), per node.
        return np.exp((a / (a - 1.0)) * log_c + log_f / (1.0 - a)) / a

    return gaussian_integrate(f, quad.with_scale(market.T), market.d)


def general_fraction(
    prior: EmpiricalPrior,
    t: float,
    y,
    k: float,
    utility: UtilitySpec,
    market: MarketSpec,
    quad: QuadratureSpec,
) -> Array:
    """General-form fractions with I and I′ explicit.

        π/X = (σᵀ)⁻¹·(−k)e^{−rT}·[∫ (∇F/F²)·I′(k e^{−rT}/F) φ_{T−t}]
                                  / [∫ I(k e^{−rT}/F) φ_{T−t}].

    Cross-check path: for power utility this equals
    :func:`optimal_fraction` (the k-dependence cancels exactly).
    """
    if not (0 <= t < market.T):
        raise ConfigError("t must satisfy 0 <= t < T")
    if k <= 0:
        raise ConfigError("k must be > 0")
    s = market.T - t
    if s < TIME_EPS:
        s = 0.0
    kernel = PriorKernel(prior, market)
    ys, log_w = _shifted_nodes(quad, market.d, s, y)
    w = np.exp(log_w)
    log_f, post = kernel.mixture_parts(market.T, ys)
    f_vals = np.exp(log_f)
    grad = f_vals[:, None] * (post @ kernel.theta)  # ∇F per node
    c = k * math.exp(-market.r * market.T)
    q = c / f_vals
    numer = -c * np.sum(w[:, None] * grad / (f_vals**2)[:, None] * utility.i_prime(q)[:, None], 0)
    denom = float(np.sum(w * utility.i_of(q)))
    return market.sigma_inv.T @ (numer / denom)
