"""Rolling-window trading loop over a simulated or ingested price path.

Protocol: parameters are re-estimated on a rolling basis — the drift
prior every ``prior_update_every`` steps, the static benchmark policies
every ``rebalance_every`` steps — always from the trailing
``lookback_steps`` of history, and wealth evolves step by step under the
chosen weights.  The dynamic strategies (posterior-weighted allocation
with and without the adversarial prior shift) recompute their fractions
EVERY step from the observation state reconstructed from prices relative
to the latest estimation anchor; the benchmarks hold their weights
between rebalances.  Performance is reported as the annualized Sharpe
ratio of the last ``eval_window`` wealth steps and the terminal utility,
alongside leverage and short-cap statistics.

Strategy names: ``bayesian``, ``drbc``, ``plugin``, ``drmv``,
``drmv_rf``, ``drc``, ``oracle`` (true-drift constant mix; needs the
drift spec), ``cash``.  ``drbc[s=X]`` / ``drc[s=X]`` run the same
strategy with the calibrated radius multiplied by X, so one pass can
sweep radius scales under common randomness.
"""

from __future__ import annotations

import dataclasses
import math
import re
import warnings

import numpy as np
from numpy.typing import NDArray
from scipy.special import logsumexp

from .benchmarks import (
    DrmvProblem,
    PolicyWeights,
    append_risk_free,
    apply_short_cap,
    drc_policy,
    drmv_rf_solve,
    drmv_solve,
    merton_plugin,
)
from .calibration import ANALYTIC, SAMPLE, select_delta
from .errors import ConfigError, DataError, DrmertonError, NumericError
from .market import _CSV_FMT, MarketSpec, PathGrid, SinusoidalDriftSpec, drift_at
from .merton import PriorKernel, UtilitySpec
from .priors import CONSECUTIVE, EmpiricalPrior, WindowingSpec, build_prior, clamp_atoms
from .quadrature import auto_spec, nodes_weights
from .robust import RobustSpec, perturb_prior

Array = NDArray[np.float64]

#: Wealth floor; CRRA utility is undefined at zero.
BANKRUPTCY_FLOOR = 1e-12

STATIC = "static"
TIME_VARYING = "time_varying"

DYNAMIC_BASES = ("bayesian", "drbc")
STATIC_BASES = ("plugin", "drmv", "drmv_rf", "drc")
ALL_BASES = DYNAMIC_BASES + STATIC_BASES + ("oracle", "cash")

_STRATEGY_RE = re.compile(r"^([a-z_]+)(?:\[s=([0-9.eE+\-]+)\])?$")


@dataclasses.dataclass(frozen=True)
class TradingProtocol:
    """Rolling-window trading parameters.

    ``plan_horizon_T`` (years) defaults to ``prior_update_every``·dt when
    None; ``projection_mode`` fixes the adversarial shift per prior
    update (``static``) or refreshes it every step from the current
    observation state (``time_varying``).  ``info_lag_steps`` holds each
    strategy's previous weights for that many steps after every prior
    update (no trading on the first day of a cycle).  ``short_cap``
    bounds short positions for every strategy except the oracle when
    set.  ``clamp_bound`` clips prior atoms componentwise (real-data
    hygiene).  ``delta_scale`` multiplies the calibrated radius for the
    plain ``drbc``/``drc`` strategies.
    """

    lookback_steps: int = 2520
    rebalance_every: int = 22
    prior_update_every: int = 30
    eval_window: int = 252
    plan_horizon_T: float | None = None
    eval_rate: float = 0.01
    projection_mode: str = STATIC
    windowing: WindowingSpec = WindowingSpec(mode=CONSECUTIVE, window_len=252, n_windows=10)
    info_lag_steps: int = 0
    short_cap: float | None = None
    clamp_bound: float | None = None
    delta_scale: float = 1.0
    confidence: float = 0.95
    calibration_mode: str = ANALYTIC
    mc_samples: int = 4096
    gh_nodes: int = 40
    drmv_delta: float = 1e-8
    target_return_annual: float = 0.10
    target_return_rf_annual: float = 0.105
    cov_method: str = "sample"
    x0: float = 1.0

    def __post_init__(self) -> None:
        counts = (
            self.lookback_steps,
            self.rebalance_every,
            self.prior_update_every,
            self.eval_window,
        )
        if any(c < 1 for c in counts):
            raise ConfigError("all protocol step counts must be >= 1")
        if self.windowing.total_steps > self.lookback_steps:
            raise ConfigError(
                f"windowing needs {self.windowing.total_steps} steps but lookback is "
                f"{self.lookback_steps}"
            )
        if self.plan_horizon_T is not None and not (self.plan_horizon_T > 0):
            raise ConfigError("plan_horizon_T must be > 0")
        if self.projection_mode not in (STATIC, TIME_VARYING):
            raise ConfigError(f"projection_mode must be {STATIC!r} or {TIME_VARYING!r}")
        if self.calibration_mode not in (ANALYTIC, SAMPLE):
            raise ConfigError(f"calibration_mode must be {ANALYTIC!r} or {SAMPLE!r}")
        if self.info_lag_steps < 0:
            raise ConfigError("info_lag_steps must be >= 0")
        if self.short_cap is not None and self.short_cap < 0:
            raise ConfigError("short_cap must be >= 0")
        if self.clamp_bound is not None and not (self.clamp_bound > 0):
            raise ConfigError("clamp_bound must be > 0")
        if self.delta_scale < 0 or self.drmv_delta < 0:
            raise ConfigError("radius scales must be >= 0")
        if self.cov_method not in ("sample", "ledoit_wolf"):
            raise ConfigError("cov_method must be 'sample' or 'ledoit_wolf'")
        if not (self.x0 > 0):
            raise ConfigError("x0 must be > 0")

    def plan_horizon(self, dt: float) -> float:
        T = self.plan_horizon_T if self.plan_horizon_T is not None else self.prior_update_every * dt
        if T < self.prior_update_every * dt - 1e-15:
            raise ConfigError("plan_horizon_T must cover a full prior-update cycle")
        return T

    @classmethod
    def monthly_real(cls, **overrides) -> "TradingProtocol":
        """Daily trading with monthly re-estimation on five years of history:
        2-month plan horizon, one-day information lag, short cap at half
        wealth, atom clamp at ±5/yr, shrinkage covariance, 4% evaluation
        rate."""
        base = dict(
            lookback_steps=1260,
            rebalance_every=21,
            prior_update_every=21,
            eval_window=252,
            plan_horizon_T=2.0 / 12.0,
            eval_rate=0.04,
            windowing=WindowingSpec(mode=CONSECUTIVE, window_len=126, n_windows=10),
            info_lag_steps=1,
            short_cap=0.5,
            clamp_bound=5.0,
            cov_method="ledoit_wolf",
        )
        base.update(overrides)
        return cls(**base)


@dataclasses.dataclass(frozen=True)
class WealthSeries:
    """One strategy's wealth path with its weights history.

    ``times`` has K+1 points (years), ``wealth`` K+1 positive values
    (floored at ``BANKRUPTCY_FLOOR``), ``weights`` is (K, d) and ``cash``
    (K,) — the fractions held over step k.
    """

    times: Array
    wealth: Array
    weights: Array
    cash: Array
    bankrupt: bool = False

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        wealth = np.asarray(self.wealth, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        cash = np.asarray(self.cash, dtype=float)
        k = times.shape[0] - 1
        if wealth.shape != (k + 1,) or weights.shape[0] != k or cash.shape != (k,):
            raise DataError("times (K+1,), wealth (K+1,), weights (K, d), cash (K,) must align")
        if np.any(wealth < BANKRUPTCY_FLOOR * (1 - 1e-9)):
            raise DataError("wealth must stay at or above the bankruptcy floor")
        for arr in (times, wealth, weights, cash):
            arr.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "wealth", wealth)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "cash", cash)


@dataclasses.dataclass(frozen=True)
class StrategyResult:
    """Metrics for one strategy on one path."""

    name: str
    series: WealthSeries
    sharpe: float
    terminal_utility: float
    mean_gross_leverage: float
    max_gross_leverage: float
    cap_hit_rate: float
    bankrupt: bool
    fallback_cycles: int


@dataclasses.dataclass(frozen=True)
class BacktestReport:
    """All strategies' results on one path, in requested order."""

    results: dict[str, StrategyResult]
    seed: int
    dt: float

    @property
    def sharpe(self) -> dict[str, float]:
        return {name: res.sharpe for name, res in self.results.items()}

    @property
    def terminal_utility(self) -> dict[str, float]:
        return {name: res.terminal_utility for name, res in self.results.items()}


def step_wealth(
    x: float,
    weights: PolicyWeights,
    step_return,
    r: float,
    dt: float,
    floor: float | None = None,
) -> float:
    """Self-financing wealth update over one step.

        x′ = x·(1 + r·dt + Σ_i w_i·(R_i − r·dt)),

    with R the assets' simple returns over the step; uninvested wealth
    (including the cash residual) grows at r.  When ``floor`` is given
    the result is floored there (bankruptcy handling).
    """
    if x <= 0:
        raise ConfigError("wealth must be > 0")
    step_return = np.asarray(step_return, dtype=float).reshape(-1)
    growth = 1.0 + r * dt + float(weights.weights @ (step_return - r * dt))
    out = x * growth
    if floor is not None:
        out = max(out, floor)
    return out


def sharpe_ratio(wealth, r_eval: float, periods_per_year: float) -> float:
    """Annualized Sharpe of a wealth series' simple step returns.

        (mean(ret) − r_eval/P)·P / (std_{n−1}(ret)·√P).

    A zero-variance series returns 0 when its mean excess return is also
    zero and is an error otherwise.
    """
    wealth = np.asarray(wealth, dtype=float).reshape(-1)
    if wealth.shape[0] < 2:
        raise ConfigError("need at least 2 wealth points")
    rets = wealth[1:] / wealth[:-1] - 1.0
    excess = float(np.mean(rets)) - r_eval / periods_per_year
    std = float(np.std(rets, ddof=1)) if rets.shape[0] > 1 else 0.0
    if std == 0.0:
        if abs(excess) < 1e-15:
            return 0.0
        raise NumericError("Sharpe undefined: zero return variance with nonzero mean excess")
    return excess * periods_per_year / (std * math.sqrt(periods_per_year))


def terminal_utility(wealth_t: float, utility: UtilitySpec) -> float:
    """U(X_T) = X_T^α/α."""
    if wealth_t <= 0:
        raise ConfigError("terminal wealth must be > 0")
    return float(utility.u(wealth_t))


def ledoit_wolf(returns) -> Array:
    """Shrinkage covariance Σ̂ = (1−ρ)·S + ρ·(tr(S)/d)·I.

    S is the population-normalized sample covariance of the (centered)
    rows; the shrinkage intensity ρ is the optimal plug-in ratio of
    estimation noise to the sample's distance from the scaled identity,
    so ρ → 0 as rows accumulate.  Output symmetric PSD.
    """
    x = np.atleast_2d(np.asarray(returns, dtype=float))
    n, d = x.shape
    if n < 2:
        raise DataError("need at least 2 return rows")
    x = x - x.mean(axis=0, keepdims=True)
    s = (x.T @ x) / n
    m = float(np.trace(s)) / d
    dist_sq = float(np.sum((s - m * np.eye(d)) ** 2)) / d
    if dist_sq <= 0.0:
        return s
    noise = 0.0
    for t in range(n):
        outer = np.outer(x[t], x[t])
        noise += float(np.sum((outer - s) ** 2)) / d
    noise /= n * n
    rho = min(noise, dist_sq) / dist_sq
    return (1.0 - rho) * s + rho * m * np.eye(d)


class _PlanEvaluator:
    """Per-cycle cache for the dynamic allocation formula.

    Precomputes the node×atom inner products so each step costs one
    (nodes × atoms) elementwise pass and two small matmuls.
    """

    def __init__(self, prior: EmpiricalPrior, market_plan: MarketSpec, quad, alpha: float) -> None:
        self.kernel = PriorKernel(prior, market_plan)
        self.market = market_plan
        self.alpha = alpha
        u, w = nodes_weights(quad.with_scale(1.0), market_plan.d)
        self.u = u
        with np.errstate(divide="ignore"):
            self.log_wn = np.log(w)
        self.node_dot = u @ self.kernel.theta.T  # (M, n)
        self.half_tsq = 0.5 * market_plan.T * self.kernel.theta_sq  # (n,)

    def fraction(self, tau: float, y: Array) -> Array:
        """Optimal fractions at in-plan time tau and observation state y."""
        s = max(self.market.T - tau, 0.0)
        logl = (
            math.sqrt(s) * self.node_dot
            + (y @ self.kernel.theta.T)[None, :]
            - self.half_tsq[None, :]
        )
        a = self.kernel.log_w[None, :] + logl
        log_f = logsumexp(a, axis=1)
        post = np.exp(a - log_f[:, None])
        log_rho = self.log_wn + log_f / (1.0 - self.alpha)
        rho = np.exp(log_rho - logsumexp(log_rho))
        g_mean = rho @ (post @ self.kernel.theta)
        return (self.market.sigma_inv.T @ g_mean) / (1.0 - self.alpha)


@dataclasses.dataclass
class _StrategySpec:
    name: str
    base: str
    scale: float | None  # radius-scale override for drbc/drc variants


def _parse_strategy(name: str) -> _StrategySpec:
    match = _STRATEGY_RE.match(name)
    if not match:
        raise ConfigError(f"malformed strategy name {name!r}")
    base, scale = match.group(1), match.group(2)
    if base not in ALL_BASES:
        raise ConfigError(f"unknown strategy {base!r}; choose from {sorted(ALL_BASES)}")
    if scale is not None and base not in ("drbc", "drc"):
        raise ConfigError(f"radius-scale override only applies to drbc/drc, got {name!r}")
    return _StrategySpec(name=name, base=base, scale=None if scale is None else float(scale))


class _StrategyState:
    def __init__(self, spec: _StrategySpec, n_trade: int, d: int, x0: float) -> None:
        self.spec = spec
        self.wealth = np.empty(n_trade + 1)
        self.wealth[0] = x0
        self.weights = np.zeros((n_trade, d))
        self.cash = np.zeros(n_trade)
        self.current = PolicyWeights.zero(d)
        self.capped = False
        self.bankrupt = False
        self.cap_hits = 0
        self.fallback_cycles = 0
        self.evaluator: _PlanEvaluator | None = None  # dynamic strategies only


def _cap(policy: PolicyWeights, cap: float | None) -> tuple[PolicyWeights, bool]:
    if cap is None:
        return policy, False
    hit = bool(np.any(policy.weights < -cap))
    return (apply_short_cap(policy, cap), hit)


def ingest_prices_csv(filename: str) -> Array:
    """Read `date,asset_1,...,asset_d` rows; returns the (n+1, d) prices.

    Dates may be ISO-8601 strings or integer step indices; they are only
    checked for monotone order — the grid is assumed uniform.
    """
    try:
        with open(filename, "r", encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            rows = [line.strip().split(",") for line in fh if line.strip()]
    except OSError as exc:
        raise DataError(f"cannot read prices CSV {filename!r}: {exc}") from exc
    if not header or header[0] != "date" or len(header) < 2:
        raise DataError(f"prices CSV {filename!r} must have columns date,asset_1,...")
    dates = [row[0] for row in rows]
    try:
        keys: list = [int(s) for s in dates]  # integer step indices
    except ValueError:
        keys = dates  # ISO-8601 strings sort correctly as text
    if sorted(keys) != keys:
        raise DataError(f"prices CSV {filename!r} dates must be nondecreasing")
    try:
        prices = np.array([[float(v) for v in row[1:]] for row in rows], dtype=float)
    except ValueError as exc:
        raise DataError(f"prices CSV {filename!r} has a non-numeric price: {exc}") from exc
    if prices.ndim != 2 or prices.shape[1] != len(header) - 1:
        raise DataError(f"prices CSV {filename!r} has inconsistent column count")
    if np.any(prices <= 0):
        raise DataError(f"prices CSV {filename!r} must be strictly positive")
    return prices


def weights_to_csv(series: WealthSeries, filename: str) -> None:
    """Write `time,cash,w_1,...,w_d` rows at full double precision."""
    d = series.weights.shape[1]
    header = "time,cash," + ",".join(f"w_{i + 1}" for i in range(d))
    data = np.column_stack([series.times[:-1], series.cash, series.weights])
    np.savetxt(filename, data, fmt=_CSV_FMT, delimiter=",", header=header, comments="")


def run_backtest(
    prices: PathGrid,
    protocol: TradingProtocol,
    strategies,
    market: MarketSpec,
    utility: UtilitySpec,
    seed: int = 0,
    true_drift: SinusoidalDriftSpec | None = None,
    quad=None,
) -> BacktestReport:
    """Trade every requested strategy over one price path.

    All strategies see the same path (common random numbers), the same
    quadrature nodes, and the same estimation windows.  Needs history of
    at least ``lookback_steps`` + ``eval_window`` steps.  ``oracle``
    requires ``true_drift``.
    """
    if not isinstance(prices, PathGrid):
        raise DataError("prices must be a PathGrid (build one from CSV via ingest_prices_csv)")
    if prices.d != market.d:
        raise DataError("price dimension does not match market")
    specs = [_parse_strategy(str(s)) for s in strategies]
    if len({s.name for s in specs}) != len(specs):
        raise ConfigError("duplicate strategy names")
    if any(s.base == "oracle" for s in specs) and true_drift is None:
        raise ConfigError("the oracle strategy needs the true drift spec")

    n_total = prices.n_steps
    t0 = protocol.lookback_steps
    n_trade = n_total - t0
    if n_trade < protocol.eval_window:
        raise DataError(
            f"need lookback ({t0}) + eval window ({protocol.eval_window}) steps, "
            f"path has {n_total}"
        )
    d = market.d
    dt = market.dt
    t_plan = protocol.plan_horizon(dt)
    market_plan = market.with_horizon(t_plan)
    if quad is None:
        quad = auto_spec(d, nodes_per_dim=protocol.gh_nodes, n_samples=protocol.mc_samples)
    cap = protocol.short_cap

    log_prices = np.log(prices.prices)
    rets = prices.prices[1:] / prices.prices[:-1] - 1.0  # (n_total, d)
    states = {s.name: _StrategyState(s, n_trade, d, protocol.x0) for s in specs}
    robust_corr = 0.5 * market.row_norms_sq - market.r

    anchor = t0
    delta_base: float | None = None
    cycle_prior: EmpiricalPrior | None = None

    for t in range(t0, n_total):
        i = t - t0
        in_cycle = i % protocol.prior_update_every

        if in_cycle == 0:
            anchor = t
            window = prices.prices[t - protocol.lookback_steps : t + 1]
            cycle_prior = build_prior(window, market, protocol.windowing)
            if protocol.clamp_bound is not None:
                cycle_prior = clamp_atoms(
                    cycle_prior, (-protocol.clamp_bound, protocol.clamp_bound)
                )
            delta_base = None
            if any(s.base in ("drbc", "drc") for s in specs):
                try:
                    cal = select_delta(
                        cycle_prior,
                        1.0,
                        utility,
                        market_plan,
                        quad,
                        confidence=protocol.confidence,
                        mode=protocol.calibration_mode,
                        seed=seed,
                        n_samples=protocol.windowing.total_steps,
                    )
                    delta_base = cal.delta
                except DrmertonError as exc:
                    warnings.warn(
                        f"radius calibration failed at step {t} ({exc}); "
                        "robust strategies fall back to the unperturbed prior",
                        stacklevel=2,
                    )
            bayes_eval = _PlanEvaluator(cycle_prior, market_plan, quad, utility.alpha)
            for state in states.values():
                base = state.spec.base
                if base == "bayesian":
                    state.evaluator = bayes_eval
                elif base == "drbc":
                    scale = state.spec.scale if state.spec.scale is not None else protocol.delta_scale
                    if delta_base is None and scale > 0:
                        state.fallback_cycles += 1
                    delta = (delta_base or 0.0) * scale
                    if delta > 0 and protocol.projection_mode == STATIC:
                        result = perturb_prior(
                            cycle_prior,
                            RobustSpec.for_alpha(delta, utility.alpha),
                            utility,
                            market_plan,
                            quad,
                        )
                        state.evaluator = _PlanEvaluator(
                            result.perturbed, market_plan, quad, utility.alpha
                        )
                    else:
                        # Zero radius, or per-step refresh: start unperturbed.
                        state.evaluator = bayes_eval

        if i % protocol.rebalance_every == 0:
            window_rets = rets[t - protocol.lookback_steps : t]
            b_hat = (
                log_prices[t] - log_prices[t - protocol.lookback_steps]
            ) / (protocol.lookback_steps * dt) + 0.5 * market.row_norms_sq
            needs_mv = any(s.base in ("drmv", "drmv_rf") for s in specs)
            if needs_mv:
                mu_hat = window_rets.mean(axis=0)
                if protocol.cov_method == "ledoit_wolf":
                    sigma_hat = ledoit_wolf(window_rets)
                else:
                    centered = window_rets - mu_hat[None, :]
                    sigma_hat = (centered.T @ centered) / (window_rets.shape[0] - 1)
            for state in states.values():
                base = state.spec.base
                try:
                    if base == "plugin":
                        policy = merton_plugin(b_hat, market, utility)
                    elif base == "drc":
                        scale = (
                            state.spec.scale if state.spec.scale is not None else protocol.delta_scale
                        )
                        if delta_base is None and scale > 0:
                            state.fallback_cycles += 1
                        policy = drc_policy(
                            b_hat, market, utility, (delta_base or 0.0) * scale, cap=None
                        )
                    elif base == "drmv":
                        problem = DrmvProblem(
                            mu_hat,
                            sigma_hat,
                            protocol.drmv_delta,
                            protocol.target_return_annual * dt,
                        )
                        policy = drmv_solve(problem)
                    elif base == "drmv_rf":
                        problem = DrmvProblem(
                            mu_hat,
                            sigma_hat,
                            protocol.drmv_delta,
                            protocol.target_return_rf_annual * dt,
                        )
                        policy = drmv_rf_solve(append_risk_free(problem, market.r * dt))
                    else:
                        continue
                except DrmertonError as exc:
                    warnings.warn(
                        f"{base} rebalance failed at step {t} ({exc}); holding previous weights",
                        stacklevel=2,
                    )
                    state.fallback_cycles += 1
                    continue
                policy, hit = _cap(policy, cap)
                state.current = policy
                state.capped = hit

        tau = (t - anchor) * dt
        y_rel = market.sigma_inv @ (log_prices[t] - log_prices[anchor] + robust_corr * tau)

        for state in states.values():
            base = state.spec.base
            if state.bankrupt:
                state.current = PolicyWeights.zero(d)
                state.capped = False
            elif in_cycle < protocol.info_lag_steps and base != "oracle":
                pass  # hold previous weights during the information lag
            elif base in DYNAMIC_BASES:
                if base == "drbc" and protocol.projection_mode == TIME_VARYING:
                    scale = state.spec.scale if state.spec.scale is not None else protocol.delta_scale
                    delta = (delta_base or 0.0) * scale
                    if delta > 0:
                        result = perturb_prior(
                            cycle_prior,
                            RobustSpec.for_alpha(delta, utility.alpha),
                            utility,
                            market_plan,
                            quad,
                            t=tau,
                            y=y_rel,
                        )
                        evaluator = _PlanEvaluator(
                            result.perturbed, market_plan, quad, utility.alpha
                        )
                    else:
                        evaluator = bayes_eval
                else:
                    evaluator = state.evaluator
                w = evaluator.fraction(tau, y_rel)
                policy = PolicyWeights(weights=w, cash=1.0 - float(np.sum(w)))
                policy, hit = _cap(policy, cap)
                state.current = policy
                state.capped = hit
            elif base == "oracle":
                state.current = merton_plugin(drift_at(true_drift, t * dt), market, utility)
            elif base == "cash":
                state.current = PolicyWeights.zero(d)
            # static bases keep their last rebalance weights

            state.weights[i] = state.current.weights
            state.cash[i] = state.current.cash
            state.cap_hits += int(state.capped)
            if state.bankrupt:
                state.wealth[i + 1] = state.wealth[i]
                continue
            x_new = step_wealth(
                state.wealth[i], state.current, rets[t], market.r, dt, floor=BANKRUPTCY_FLOOR
            )
            state.wealth[i + 1] = x_new
            if x_new <= BANKRUPTCY_FLOOR:
                state.bankrupt = True

    periods = round(1.0 / dt)
    times = dt * np.arange(t0, n_total + 1)
    results: dict[str, StrategyResult] = {}
    for spec in specs:
        state = states[spec.name]
        series = WealthSeries(
            times=times,
            wealth=state.wealth,
            weights=state.weights,
            cash=state.cash,
            bankrupt=state.bankrupt,
        )
        tail = state.wealth[-(protocol.eval_window + 1) :]
        gross = np.sum(np.abs(state.weights), axis=1)
        results[spec.name] = StrategyResult(
            name=spec.name,
            series=series,
            sharpe=sharpe_ratio(tail, protocol.eval_rate, periods),
            terminal_utility=terminal_utility(float(state.wealth[-1]), utility),
            mean_gross_leverage=float(np.mean(gross)),
            max_gross_leverage=float(np.max(gross)),
            cap_hit_rate=state.cap_hits / n_trade,
            bankrupt=state.bankrupt,
            fallback_cycles=state.fallback_cycles,
        )
    return BacktestReport(results=results, seed=seed, dt=dt)
