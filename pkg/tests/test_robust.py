"""Influence field and worst-case pushforward of the drift prior."""

from __future__ import annotations

import math

import numpy as np
import pytest

from drmerton import (
    EmpiricalPrior,
    MarketSpec,
    QuadratureSpec,
    RobustSpec,
    UtilitySpec,
    influence_h,
    perturb_prior,
)
from drmerton.robust import influence_all_atoms, value_objective
from conftest import random_market, random_prior


def _unit_instance():
    mkt = MarketSpec(d=1, r=0.0, sigma=np.eye(1), T=1.0, dt=1.0 / 252.0)
    util = UtilitySpec(alpha=0.5)
    quad = QuadratureSpec(method="gauss_hermite", nodes_per_dim=60)
    return mkt, util, quad


def test_influence_closed_form_at_unit_point_mass():
    # Point mass at b=1 with unit volatility, zero rate, alpha=1/2, T=1:
    # H(1) = 2·e^{-1}·Int (y-1)·e^{2y} phi(y) dy = 2·e^{-1}·e^2 = 2e.
    mkt, util, quad = _unit_instance()
    prior = EmpiricalPrior.dirac([1.0])
    h1 = influence_h(prior, [1.0], util, mkt, quad)
    np.testing.assert_allclose(h1, [2.0 * math.e], rtol=1e-10)
    # Point mass at 0 with zero rate: the integrand is odd, so H(0) = 0.
    prior0 = EmpiricalPrior.dirac([0.0])
    h0 = influence_h(prior0, [0.0], util, mkt, quad)
    np.testing.assert_allclose(h0, [0.0], atol=1e-12)


def test_influence_all_atoms_matches_single_calls():
    mkt = random_market(4, d=2, T=1.0)
    util = UtilitySpec(alpha=-2.0)
    quad = QuadratureSpec(method="gauss_hermite", nodes_per_dim=30)
    prior = random_prior(4, d=2, n_atoms=5)
    all_h = influence_all_atoms(prior, util, mkt, quad)
    for k in range(prior.n_atoms):
        single = influence_h(prior, prior.atoms[k], util, mkt, quad)
        np.testing.assert_allclose(all_h[k], single, rtol=1e-9, atol=1e-12)


def test_influence_matches_gateaux_finite_difference():
    # Translate one atom by eps*e_i and difference the value integral.
    quad = QuadratureSpec(method="gauss_hermite", nodes_per_dim=40)
    for seed in range(3):
        d = 1 + seed % 2
        mkt = random_market(seed, d=d, T=1.0)
        util = UtilitySpec(alpha=0.5 if seed % 2 else -1.0)
        prior = random_prior(seed + 20, d=d, n_atoms=3)
        k = seed % prior.n_atoms
        h = influence_h(prior, prior.atoms[k], util, mkt, quad)
        eps = 1e-5
        fd = np.zeros(d)
        for i in range(d):
            shift = np.zeros((prior.n_atoms, d))
            shift[k, i] = eps
            up = value_objective(
                EmpiricalPrior(prior.atoms + shift, prior.weights), util, mkt, quad
            )
            dn = value_objective(
                EmpiricalPrior(prior.atoms - shift, prior.weights), util, mkt, quad
            )
            fd[i] = (up - dn) / (2 * eps)
        # The Gateaux derivative carries the atom's prior weight.
        np.testing.assert_allclose(prior.weights[k] * h, fd, rtol=1e-3, atol=1e-9)


def test_direction_sign_follows_risk_aversion():
    assert RobustSpec.for_alpha(1e-4, 0.5).direction_sign == -1.0
    assert RobustSpec.for_alpha(1e-4, -2.0).direction_sign == +1.0


def test_perturbation_spends_budget_and_keeps_weights():
    mkt = random_market(8, d=2, T=1.0)
    util = UtilitySpec(alpha=0.5)
    quad = QuadratureSpec(method="gauss_hermite", nodes_per_dim=30)
    prior = random_prior(8, d=2, n_atoms=4)
    delta = 1e-4
    spec = RobustSpec.for_alpha(delta, util.alpha)
    res = perturb_prior(prior, spec, util, mkt, quad)
    np.testing.assert_array_equal(res.perturbed.weights, prior.weights)
    moved = res.perturbed.atoms - prior.atoms
    cost = float(prior.weights @ np.sum(moved * moved, axis=1))
    np.testing.assert_allclose(cost, delta, rtol=1e-10)
    assert res.predicted_value_shift < 0  # adversary lowers the value for alpha in (0,1)


def test_zero_delta_returns_prior_untouched():
    mkt = random_market(9, d=1, T=1.0)
    util = UtilitySpec(alpha=-2.0)
    quad = QuadratureSpec(method="gauss_hermite", nodes_per_dim=20)
    prior = random_prior(9, d=1, n_atoms=3)
    res = perturb_prior(prior, RobustSpec.for_alpha(0.0, util.alpha), util, mkt, quad)
    assert res.perturbed is prior
    assert res.predicted_value_shift == 0.0


def test_first_order_shift_prediction_small_delta():
    mkt = random_market(10, d=2, T=1.0)
    util = UtilitySpec(alpha=0.5)
    quad = QuadratureSpec(method="gauss_hermite", nodes_per_dim=30)
    prior = random_prior(10, d=2, n_atoms=4)
    base = value_objective(prior, util, mkt, quad)
    delta = 1e-8
    spec = RobustSpec.for_alpha(delta, util.alpha)
    res = perturb_prior(prior, spec, util, mkt, quad)
    shifted = value_objective(res.perturbed, util, mkt, quad)
    np.testing.assert_allclose(shifted - base, res.predicted_value_shift, rtol=2e-3)


def test_large_radius_warns_about_first_order_validity():
    mkt = random_market(11, d=1, T=1.0)
    util = UtilitySpec(alpha=0.5)
    quad = QuadratureSpec(method="gauss_hermite", nodes_per_dim=20)
    prior = random_prior(11, d=1, n_atoms=3, spread=0.05)
    with pytest.warns(UserWarning, match="atom spread"):
        perturb_prior(prior, RobustSpec.for_alpha(1.0, util.alpha), util, mkt, quad)
