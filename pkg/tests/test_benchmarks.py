"""Benchmark policies: plug-in mix, robust mean-variance, shrinkage, caps."""

from __future__ import annotations

import numpy as np
import pytest

from drmerton import (
    ConfigError,
    DrmvProblem,
    InfeasibleTargetError,
    MarketSpec,
    PolicyWeights,
    UtilitySpec,
    append_risk_free,
    apply_short_cap,
    drc_policy,
    drmv_rf_solve,
    drmv_solve,
    merton_plugin,
)
from drmerton.benchmarks import markowitz_closed_form
from conftest import random_market, rng


def _random_moments(seed: int, d: int):
    g = rng(seed)
    a = g.standard_normal((d, d + 3)) / np.sqrt(d + 3)
    sigma = a @ a.T + 0.05 * np.eye(d)
    mu = 0.02 + 0.08 * g.random(d)
    return mu, sigma


def test_plugin_weights_formula_and_cash_residual():
    mkt = random_market(0, d=3)
    util = UtilitySpec(alpha=-2.0)
    b = np.array([0.1, 0.2, 0.05])
    pol = merton_plugin(b, mkt, util)
    expected = np.linalg.solve(mkt.sigma @ mkt.sigma.T, b - mkt.r) / 3.0
    np.testing.assert_allclose(pol.weights, expected, rtol=1e-12)
    assert pol.cash == pytest.approx(1.0 - expected.sum(), rel=1e-12)


@pytest.mark.parametrize("d", [2, 5])
def test_zero_radius_matches_markowitz_closed_form(d):
    for seed in range(5):
        mu, sigma = _random_moments(seed + 10 * d, d)
        target = float(np.quantile(mu, 0.6))
        prob = DrmvProblem(mu_hat=mu, sigma_hat=sigma, delta=0.0, alpha_bar=target)
        sol = drmv_solve(prob)
        oracle = markowitz_closed_form(mu, sigma, target)
        np.testing.assert_allclose(sol.weights, oracle, atol=1e-6)


def test_symmetric_two_asset_problem_splits_evenly():
    mu = np.array([0.05, 0.05])
    sigma = np.array([[0.04, 0.01], [0.01, 0.04]])
    sol = drmv_solve(DrmvProblem(mu_hat=mu, sigma_hat=sigma, delta=1e-4, alpha_bar=0.03))
    np.testing.assert_allclose(sol.weights, [0.5, 0.5], atol=1e-6)


def test_positive_radius_constraints_hold():
    mu, sigma = _random_moments(3, 4)
    delta = 1e-3
    target = float(np.quantile(mu, 0.5))
    sol = drmv_solve(DrmvProblem(mu_hat=mu, sigma_hat=sigma, delta=delta, alpha_bar=target))
    w = sol.weights
    assert abs(w.sum() - 1.0) <= 1e-7
    penalty = np.sqrt(delta) * float(np.linalg.norm(w))
    assert float(mu @ w) >= target + penalty - 1e-7


def test_radius_increases_objective():
    # The robust objective w' Sigma w + sqrt(delta)|w| can only get worse as
    # the ball grows (the feasible set shrinks and the penalty rises).
    mu, sigma = _random_moments(4, 3)
    target = float(np.quantile(mu, 0.4))

    def objective(delta):
        sol = drmv_solve(DrmvProblem(mu_hat=mu, sigma_hat=sigma, delta=delta, alpha_bar=target))
        w = sol.weights
        return float(w @ sigma @ w) + np.sqrt(delta) * float(np.linalg.norm(w))

    vals = [objective(d) for d in (0.0, 1e-4, 1e-3)]
    assert vals[0] <= vals[1] + 1e-9 <= vals[2] + 2e-9


def test_infeasible_target_raises():
    mu, sigma = _random_moments(5, 3)
    with pytest.raises(InfeasibleTargetError):
        drmv_solve(DrmvProblem(mu_hat=mu, sigma_hat=sigma, delta=0.25, alpha_bar=10.0))


def test_append_risk_free_extends_moments():
    mu, sigma = _random_moments(6, 3)
    base = DrmvProblem(mu_hat=mu, sigma_hat=sigma, delta=1e-6, alpha_bar=float(mu.mean()))
    ext = append_risk_free(base, rf_return=0.001)
    assert ext.mu_hat.shape == (4,) and ext.sigma_hat.shape == (4, 4)
    assert ext.mu_hat[-1] == pytest.approx(0.001)
    assert ext.sigma_hat[-1, -1] > 0  # tiny ridge keeps the matrix PD
    np.testing.assert_allclose(ext.sigma_hat[:3, :3], sigma)


def test_rf_variant_can_hold_cash_and_meets_target():
    mu, sigma = _random_moments(7, 3)
    target = float(mu.mean())
    base = DrmvProblem(mu_hat=mu, sigma_hat=sigma, delta=1e-6, alpha_bar=target)
    sol = drmv_rf_solve(append_risk_free(base, rf_return=0.0005))
    assert sol.weights.shape == (3,)
    assert abs(sol.weights.sum() + sol.cash - 1.0) <= 1e-7


def test_drc_zero_radius_is_plugin_and_large_radius_is_cash():
    mkt = random_market(8, d=3)
    util = UtilitySpec(alpha=-2.0)
    b = np.array([0.15, 0.08, 0.2])
    plain = merton_plugin(b, mkt, util)
    same = drc_policy(b, mkt, util, delta_drc=0.0, cap=None)
    np.testing.assert_array_equal(same.weights, plain.weights)
    theta_norm = float(np.linalg.norm(mkt.theta(b)))
    dead = drc_policy(b, mkt, util, delta_drc=0.51 * theta_norm**2, cap=None)
    np.testing.assert_allclose(dead.weights, 0.0, atol=1e-15)
    assert dead.cash == pytest.approx(1.0)


def test_drc_shrinkage_monotone_componentwise():
    mkt = random_market(9, d=3)
    util = UtilitySpec(alpha=-2.0)
    b = np.array([0.12, -0.05, 0.3])
    radii = (0.0, 1e-3, 1e-2, 1e-1)
    mags = np.array(
        [np.abs(drc_policy(b, mkt, util, delta_drc=dd, cap=None).weights) for dd in radii]
    )
    assert np.all(np.diff(mags, axis=0) <= 1e-12)


def test_short_cap_clips_and_is_idempotent():
    pol = PolicyWeights(weights=np.array([0.8, -0.9, 0.1]), cash=1.0 - 0.0)
    capped = apply_short_cap(pol, cap=0.5)
    np.testing.assert_allclose(capped.weights, [0.8, -0.5, 0.1])
    # Self-financing: total exposure is preserved.
    assert capped.cash + capped.weights.sum() == pytest.approx(pol.cash + pol.weights.sum())
    again = apply_short_cap(capped, cap=0.5)
    np.testing.assert_array_equal(capped.weights, again.weights)
    with pytest.raises(ConfigError):
        apply_short_cap(pol, cap=-0.1)
