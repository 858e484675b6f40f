"""Distributionally robust Bayesian Merton portfolio allocation.

A numerical library for continuous-time portfolio selection when the drift
of the risky assets is unknown.  The pipeline:

1. ``market``      — synthetic multi-asset geometric Brownian markets with
                     deterministic time-varying drifts, and the observation
                     process Y(t) reconstructed from prices.
2. ``priors``      — empirical drift priors built from windowed log-returns.
3. ``merton``      — closed-form Bayesian Merton evaluation: likelihood-ratio
                     mixtures, budget multiplier, value function, and the
                     optimal-fraction formula for power (CRRA) utility.
4. ``robust``      — influence function and the worst-case Wasserstein
                     pushforward of the drift prior (the robust perturbation).
5. ``calibration`` — data-driven ambiguity-radius selection via the nonlinear
                     Wasserstein projection limit law.
6. ``benchmarks``  — plug-in Merton, distributionally robust mean-variance
                     (with and without a risk-free asset), and a
                     drift-shrinkage robust-control surrogate.
7. ``backtest``    — rolling-window trading loop and metrics.
8. ``suite``       — multi-seed experiment grids and radius-scale sweeps.
9. ``cli``         — ``drmerton`` command-line front end.

Submodules load lazily so the command-line entry point can pin BLAS thread
counts before any numerical import happens.
"""

from __future__ import annotations

import importlib

__version__ = "0.1.0"

#: Public name → defining submodule, resolved on first attribute access.
_EXPORTS = {
    "DrmertonError": "errors",
    "ConfigError": "errors",
    "DataError": "errors",
    "InsufficientHistoryError": "errors",
    "NumericError": "errors",
    "EvaluationError": "errors",
    "DegenerateGradientError": "errors",
    "InfeasibleTargetError": "errors",
    "QuadratureSpec": "quadrature",
    "auto_spec": "quadrature",
    "gaussian_integrate": "quadrature",
    "MarketSpec": "market",
    "SinusoidalDriftSpec": "market",
    "PathGrid": "market",
    "drift_at": "market",
    "simulate_paths": "market",
    "observation_y": "market",
    "path_to_csv": "market",
    "path_from_csv": "market",
    "EmpiricalPrior": "priors",
    "WindowingSpec": "priors",
    "estimate_window_drift": "priors",
    "build_prior": "priors",
    "clamp_atoms": "priors",
    "prior_to_csv": "priors",
    "prior_from_csv": "priors",
    "UtilitySpec": "merton",
    "BudgetSolution": "merton",
    "PriorKernel": "merton",
    "likelihood_ratio": "merton",
    "mixture_f": "merton",
    "grad_f": "merton",
    "l_kernel": "merton",
    "solve_budget_k": "merton",
    "value_integral": "merton",
    "value_function": "merton",
    "optimal_fraction": "merton",
    "general_fraction": "merton",
    "general_value": "merton",
    "RobustSpec": "robust",
    "PerturbationResult": "robust",
    "influence_h": "robust",
    "influence_all_atoms": "robust",
    "perturb_prior": "robust",
    "CalibrationResult": "calibration",
    "g_prime": "calibration",
    "grad_kappa": "calibration",
    "sigma_sq_estimate": "calibration",
    "select_delta": "calibration",
    "DrmvProblem": "benchmarks",
    "PolicyWeights": "benchmarks",
    "merton_plugin": "benchmarks",
    "drmv_solve": "benchmarks",
    "drmv_rf_solve": "benchmarks",
    "append_risk_free": "benchmarks",
    "drc_policy": "benchmarks",
    "apply_short_cap": "benchmarks",
    "markowitz_closed_form": "benchmarks",
    "TradingProtocol": "backtest",
    "WealthSeries": "backtest",
    "StrategyResult": "backtest",
    "BacktestReport": "backtest",
    "step_wealth": "backtest",
    "sharpe_ratio": "backtest",
    "terminal_utility": "backtest",
    "ledoit_wolf": "backtest",
    "run_backtest": "backtest",
    "ingest_prices_csv": "backtest",
    "weights_to_csv": "backtest",
    "ExperimentCell": "suite",
    "SuiteResult": "suite",
    "SweepResult": "suite",
    "default_cells": "suite",
    "bold_cell": "suite",
    "run_experiment_suite": "suite",
    "run_radius_sweep": "suite",
    "sign_test": "suite",
}

__all__ = ["__version__", *sorted(_EXPORTS)]


def __getattr__(name: str):
    module_name = _EXPORTS.get(name)
    if module_name is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    module = importlib.import_module(f".{module_name}", __name__)
    value = getattr(module, name)
    globals()[name] = value
    return value


def __dir__():
    return sorted(set(globals()) | set(_EXPORTS))
