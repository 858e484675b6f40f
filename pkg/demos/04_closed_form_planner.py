"""The Bayesian planner in closed form: mixture density, budget, fractions.

With a discrete drift prior, the posterior enters every formula only
through the mixture likelihood F and its gradient, so the optimal plan
is fully explicit: a budget multiplier k from a one-line formula, a
wealth kernel L, and portfolio fractions that reweight quadrature nodes
by F^(1/(1-alpha)).  A point-mass prior collapses everything to the
classical constant-drift rule, which is the sanity check run here.
"""

import numpy as np

from drmerton import (
    EmpiricalPrior,
    MarketSpec,
    QuadratureSpec,
    UtilitySpec,
    general_fraction,
    l_kernel,
    optimal_fraction,
    solve_budget_k,
    value_function,
)

d = 2
market = MarketSpec(d=d, r=0.02, sigma=0.3 * np.eye(d), T=1.0, dt=1.0 / 252.0)
utility = UtilitySpec(alpha=-2.0)
quad = QuadratureSpec(method="gauss_hermite", nodes_per_dim=40)

# --- point-mass prior: must match the constant-drift closed form
b = np.array([0.10, 0.06])
dirac = EmpiricalPrior.dirac(b)
classic = np.linalg.solve(market.sigma @ market.sigma.T, b - market.r) / (1.0 - utility.alpha)
mix = optimal_fraction(dirac, t=0.3, y=np.array([0.1, -0.2]), utility=utility, market=market, quad=quad)
print("point-mass prior fraction:", np.round(mix, 6))
print("constant-drift closed form:", np.round(classic, 6))
print("max deviation:", np.max(np.abs(mix - classic)))

# --- a genuine three-atom prior
prior = EmpiricalPrior(
    atoms=np.array([[0.15, 0.02], [0.05, 0.08], [-0.05, 0.12]]),
    weights=np.array([0.5, 0.3, 0.2]),
)
x0 = 1.0
budget = solve_budget_k(prior, x0, utility, market, quad)
print()
print(f"budget multiplier k = {budget.k:.6f} (residual {budget.residual:.2e})")
wealth0 = l_kernel(prior, budget.k, market.T, None, utility, market, quad)
print(f"planned wealth at t=0 recovers the endowment: {wealth0:.12f} (x0 = {x0})")
print(f"optimal expected utility: {value_function(prior, x0, utility, market, quad):.8f}")

frac = optimal_fraction(prior, t=0.0, y=None, utility=utility, market=market, quad=quad)
gen = general_fraction(prior, 0.0, None, budget.k, utility, market, quad)
print()
print("fractions, power-utility shortcut:", np.round(frac, 6))
print("fractions, general-form kernel:  ", np.round(gen, 6))

# The posterior tilts the mix as observations accumulate.
print()
for y in (np.array([0.5, 0.0]), np.array([-0.5, 0.5])):
    f_y = optimal_fraction(prior, t=0.5, y=y, utility=utility, market=market, quad=quad)
    print(f"fractions at t=0.5 given Y={y}: {np.round(f_y, 4)}")
