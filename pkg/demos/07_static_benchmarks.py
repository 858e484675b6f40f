"""The static competitors: plug-in mix, robust mean-variance, shrunk mix.

Four single-period policies the dynamic planner is judged against:
  * plugin    — classical constant-drift mix at the estimated drift;
  * drmv      — mean-variance with a norm penalty on estimation error,
                fully invested across the risky assets;
  * drmv_rf   — the same with a pseudo risk-free asset appended, so the
                optimizer may park wealth in cash;
  * drc       — the plug-in mix shrunk toward zero by a factor driven
                by the same ambiguity radius the dynamic planner uses.
"""

import numpy as np

from drmerton import (
    DrmvProblem,
    MarketSpec,
    UtilitySpec,
    append_risk_free,
    apply_short_cap,
    drc_policy,
    drmv_rf_solve,
    drmv_solve,
    markowitz_closed_form,
    merton_plugin,
)

d = 3
market = MarketSpec(d=d, r=0.01, sigma=0.3 * np.eye(d), T=1.0, dt=1.0 / 252.0)
utility = UtilitySpec(alpha=-2.0)
b_hat = np.array([0.12, 0.07, 0.02])

plug = merton_plugin(b_hat, market, utility)
print("plugin weights:", np.round(plug.weights, 4), " cash:", round(plug.cash, 4))

mu = b_hat - market.r
sigma_hat = market.sigma @ market.sigma.T
problem = DrmvProblem(mu_hat=mu, sigma_hat=sigma_hat, delta=1e-4, alpha_bar=0.05)
mv = drmv_solve(problem)
print("drmv weights:  ", np.round(mv.weights, 4), " sum:", round(float(mv.weights.sum()), 6))

exact = markowitz_closed_form(mu, sigma_hat, 0.05)
zero = drmv_solve(DrmvProblem(mu_hat=mu, sigma_hat=sigma_hat, delta=0.0, alpha_bar=0.05))
print("  at delta=0 the solver recovers Markowitz exactly:",
      np.max(np.abs(zero.weights - exact)) < 1e-6)

rf = drmv_rf_solve(append_risk_free(problem, rf_return=market.r * 1.0))
print("drmv+cash:     ", np.round(rf.weights, 4), " cash:", round(rf.cash, 4))

print()
for delta in (0.0, 1e-3, 1e-2, 0.1):
    drc = drc_policy(b_hat, market, utility, delta_drc=delta)
    print(f"drc at delta={delta:<6g}: weights {np.round(drc.weights, 4)}")

print()
wild = merton_plugin(np.array([-0.8, 0.3, 0.1]), market, utility)
capped = apply_short_cap(wild, cap=0.5)
print("short-cap projection of an aggressive mix:")
print("  before:", np.round(wild.weights, 3), " cash:", round(wild.cash, 3))
print("  after: ", np.round(capped.weights, 3), " cash:", round(capped.cash, 3))
print("  still self-financing:", abs(capped.weights.sum() + capped.cash - 1) < 1e-12)
