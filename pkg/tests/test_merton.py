"""Posterior-mixture Merton solver: budget, value, and fraction identities."""

from __future__ import annotations

import math

import numpy as np
import pytest

from drmerton import (
    ConfigError,
    EmpiricalPrior,
    MarketSpec,
    QuadratureSpec,
    UtilitySpec,
    general_fraction,
    general_value,
    optimal_fraction,
    solve_budget_k,
    value_function,
    value_integral,
)
from drmerton.merton import PriorKernel, grad_f, l_kernel, mixture_f
from conftest import random_market, random_prior


def test_utility_validation_and_inverse_marginal():
    with pytest.raises(ConfigError):
        UtilitySpec(alpha=0.0)
    with pytest.raises(ConfigError):
        UtilitySpec(alpha=1.0)
    u = UtilitySpec(alpha=-2.0)
    y = np.array([0.5, 1.0, 2.0])
    i = u.i_of(y)
    # U'(I(y)) = y for the power utility U'(x) = x^(alpha-1).
    np.testing.assert_allclose(i ** (u.alpha - 1.0), y, rtol=1e-12)
    h = 1e-6
    fd = (u.i_of(y + h) - u.i_of(y - h)) / (2 * h)
    np.testing.assert_allclose(u.i_prime(y), fd, rtol=1e-6)


def test_mixture_likelihood_matches_direct_formula():
    mkt = random_market(0, d=2, T=1.0)
    b = np.array([0.15, 0.05])
    prior = EmpiricalPrior.dirac(b)
    y = np.array([0.3, -0.2])
    t = 0.7
    theta = mkt.theta(b)
    expected = math.exp(float(theta @ y) - 0.5 * t * float(theta @ theta))
    np.testing.assert_allclose(mixture_f(prior, y, t, mkt), expected, rtol=1e-12)


def test_posterior_equals_prior_at_time_zero():
    mkt = random_market(1, d=2, T=1.0)
    prior = random_prior(1, d=2, n_atoms=6)
    kernel = PriorKernel(prior, mkt)
    _, post = kernel.mixture_parts(0.0, np.zeros((1, 2)))
    np.testing.assert_allclose(post[0], prior.weights, rtol=1e-12)
    mean_theta = kernel.posterior_theta(0.0, np.zeros((1, 2)))
    np.testing.assert_allclose(mean_theta[0], prior.weights @ kernel.theta, rtol=1e-12)


def test_grad_f_matches_finite_differences():
    mkt = random_market(2, d=2, T=1.0)
    prior = random_prior(2, d=2, n_atoms=5)
    y = np.array([0.2, -0.1])
    t = 0.8
    g = grad_f(prior, y, t, mkt)
    h = 1e-6
    fd = np.zeros(2)
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        fd[i] = (mixture_f(prior, y + e, t, mkt) - mixture_f(prior, y - e, t, mkt)) / (2 * h)
    np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-10)


def test_single_atom_prior_gives_constant_merton_mix():
    quad = QuadratureSpec(method="gauss_hermite", nodes_per_dim=40)
    for seed, alpha in ((0, 0.5), (1, -1.0)):
        mkt = random_market(seed, d=2, T=1.0)
        util = UtilitySpec(alpha=alpha)
        b = np.array([0.12, 0.2])
        prior = EmpiricalPrior.dirac(b)
        expected = np.linalg.solve(mkt.sigma @ mkt.sigma.T, b - mkt.r) / (1.0 - alpha)
        for t, yv in ((0.0, [0.0, 0.0]), (0.5, [0.4, -0.3])):
            frac = optimal_fraction(prior, t, np.array(yv), util, mkt, quad)
            np.testing.assert_allclose(frac, expected, atol=1e-9)


def test_budget_identity_and_method_agreement():
    quad = QuadratureSpec(method="gauss_hermite", nodes_per_dim=30)
    for seed in range(5):
        mkt = random_market(seed, d=2, T=1.0)
        util = UtilitySpec(alpha=0.5 if seed % 2 else -2.0)
        prior = random_prior(seed, d=2, n_atoms=4)
        x0 = 1.0 + 0.5 * seed
        closed = solve_budget_k(prior, x0, util, mkt, quad, method="closed")
        root = solve_budget_k(prior, x0, util, mkt, quad, method="root")
        target = x0 * math.exp(mkt.r * mkt.T)
        assert closed.residual <= 1e-8 * target
        np.testing.assert_allclose(root.k, closed.k, rtol=1e-10)


def test_wealth_kernel_budget_and_monotonicity():
    quad = QuadratureSpec(method="gauss_hermite", nodes_per_dim=30)
    mkt = random_market(3, d=1, T=1.0)
    util = UtilitySpec(alpha=0.5)
    prior = random_prior(3, d=1, n_atoms=3)
    sol = solve_budget_k(prior, 2.0, util, mkt, quad)
    # L(k_hat; T, 0) = x0, and L is strictly decreasing in k.
    np.testing.assert_allclose(
        l_kernel(prior, sol.k, mkt.T, None, util, mkt, quad), 2.0, rtol=1e-9
    )
    l_lo = l_kernel(prior, 0.5 * sol.k, mkt.T, None, util, mkt, quad)
    l_hi = l_kernel(prior, 2.0 * sol.k, mkt.T, None, util, mkt, quad)
    assert l_lo > 2.0 > l_hi


def test_value_integral_matches_pairwise_mixture_closed_form():
    # alpha = 1/2 makes F^{1/(1-alpha)} = F^2, and the Gaussian integral of a
    # product of two likelihood ratios has the exact value
    # sum_jk w_j w_k exp(T * theta_j theta_k).
    mkt = MarketSpec(d=1, r=0.0, sigma=np.eye(1), T=1.0, dt=1.0 / 252.0)
    util = UtilitySpec(alpha=0.5)
    gamma = 0.3
    theta = gamma * np.linspace(-4, 4, 41)
    w = np.exp(-0.5 * (theta / gamma) ** 2)
    prior = EmpiricalPrior(atoms=theta[:, None], weights=w / w.sum())
    quad = QuadratureSpec(method="gauss_hermite", nodes_per_dim=40)
    m_quad = value_integral(prior, util, mkt, quad)
    m_exact = float(prior.weights @ np.exp(np.outer(theta, theta) * mkt.T) @ prior.weights)
    np.testing.assert_allclose(m_quad, m_exact, rtol=1e-8)


def test_general_form_agrees_with_power_form():
    quad = QuadratureSpec(method="gauss_hermite", nodes_per_dim=30)
    for seed in (0, 4):
        mkt = random_market(seed, d=2, T=1.0)
        util = UtilitySpec(alpha=-2.0)
        prior = random_prior(seed + 10, d=2, n_atoms=4)
        sol = solve_budget_k(prior, 1.0, util, mkt, quad)
        v_power = value_function(prior, 1.0, util, mkt, quad)
        v_general = general_value(prior, sol.k, util, mkt, quad)
        np.testing.assert_allclose(v_general, v_power, rtol=1e-8)
        y = np.array([0.1, -0.2])
        f_power = optimal_fraction(prior, 0.3, y, util, mkt, quad)
        f_general = general_fraction(prior, 0.3, y, sol.k, util, mkt, quad)
        np.testing.assert_allclose(f_general, f_power, rtol=1e-8, atol=1e-12)
        # The k-dependence cancels: any positive k gives the same fractions.
        f_other = general_fraction(prior, 0.3, y, 3.7 * sol.k, util, mkt, quad)
        np.testing.assert_allclose(f_other, f_power, rtol=1e-8, atol=1e-12)


def test_value_function_scales_with_wealth_power():
    quad = QuadratureSpec(method="gauss_hermite", nodes_per_dim=20)
    mkt = random_market(6, d=1, T=1.0)
    util = UtilitySpec(alpha=-2.0)
    prior = random_prior(6, d=1, n_atoms=3)
    v1 = value_function(prior, 1.0, util, mkt, quad)
    v2 = value_function(prior, 2.0, util, mkt, quad)
    np.testing.assert_allclose(v2, v1 * 2.0**util.alpha, rtol=1e-12)
