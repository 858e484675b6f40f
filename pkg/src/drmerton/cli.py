"""``drmerton`` command line: simulate | calibrate | backtest | sweep.

Flags: ``--config <path>`` (JSON; a previous run's manifest also works),
``--out <dir>``, ``--seed <u64>`` (overrides the config seed),
``--threads <n>`` (process-level parallelism for sweep seeds; numerics
are unaffected).  Every run writes ``manifest.json`` — the resolved
config plus command, seed, threads, version, and output names — which
reproduces the run bit-exactly when fed back via ``--config``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure.

BLAS thread pools are pinned to one thread before any numerical import
so outputs do not depend on the host's thread defaults.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys

_THREAD_ENV_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
)

_COMMANDS = ("simulate", "calibrate", "backtest", "sweep")


def _pin_blas_threads() -> None:
    for var in _THREAD_ENV_VARS:
        os.environ[var] = "1"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drmerton",
        description="Distributionally robust Bayesian Merton portfolio pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "simulate a price path and write it as CSV",
        "calibrate": "build a drift prior from prices and calibrate the ambiguity radius",
        "backtest": "trade strategies over one or more paths and report metrics",
        "sweep": "run the multi-cell experiment grid and/or the radius-scale sweep",
    }
    for name in _COMMANDS:
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--config", required=True, help="JSON config or manifest path")
        sp.add_argument("--out", default=None, help="output directory (default: drmerton_<cmd>)")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--threads", type=int, default=1, help="worker processes for sweep")
    return parser


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_")


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_manifest(out_dir, command, cfg, seed, threads, outputs, version) -> None:
    _write_json(
        os.path.join(out_dir, "manifest.json"),
        {
            "command": command,
            "config": cfg,
            "seed": seed,
            "threads": threads,
            "version": version,
            "outputs": sorted(outputs),
        },
    )


def _cmd_simulate(cfg: dict, out_dir: str, threads: int) -> list[str]:
    from .config import build_drift, build_market
    from .market import path_to_csv, simulate_paths

    seed = int(cfg.get("seed", 0))
    n_steps = int(cfg["n_steps"])
    market = build_market(cfg["market"], total_T=n_steps * float(cfg["market"]["dt"]))
    drift, _ = build_drift(cfg["drift"], market.d, seed)
    path = simulate_paths(market, drift, n_steps=n_steps, seed=seed, s0=cfg.get("s0", 1.0))
    out = os.path.join(out_dir, "paths.csv")
    path_to_csv(path, out)
    print(f"wrote {out}: {n_steps} steps, {market.d} assets, seed {seed}")
    return ["paths.csv"]


def _cmd_calibrate(cfg: dict, out_dir: str, threads: int) -> list[str]:
    import dataclasses

    from .backtest import ingest_prices_csv
    from .calibration import select_delta
    from .config import build_market, build_quadrature, build_utility, build_windowing
    from .priors import build_prior, clamp_atoms

    market = build_market(cfg["market"])
    utility = build_utility(cfg["utility"])
    windowing = build_windowing(cfg.get("windowing"))
    prices = ingest_prices_csv(cfg["prices_csv"])
    prior = build_prior(prices, market, windowing)
    if cfg.get("clamp_bound") is not None:
        bound = float(cfg["clamp_bound"])
        prior = clamp_atoms(prior, (-bound, bound))
    quad = build_quadrature(cfg.get("quadrature"), market.d)
    result = select_delta(
        prior,
        float(cfg.get("x0", 1.0)),
        utility,
        market,
        quad,
        confidence=float(cfg.get("confidence", 0.95)),
        mode=cfg.get("mode", "analytic"),
        n_quantile_samples=int(cfg.get("n_quantile_samples", 100_000)),
        seed=int(cfg.get("seed", 0)),
        n_samples=(
            int(cfg["n_samples"]) if cfg.get("n_samples") is not None
            else windowing.total_steps
        ),
    )
    payload = dataclasses.asdict(result)
    payload["atoms"] = prior.atoms.tolist()
    payload["weights"] = prior.weights.tolist()
    _write_json(os.path.join(out_dir, "calibration.json"), payload)
    print(result.summary())
    return ["calibration.json"]


def _hist_csv(path: str, sharpes_by_strategy: dict[str, list[float]], n_bins: int) -> None:
    import numpy as np

    finite = [v for vals in sharpes_by_strategy.values() for v in vals if np.isfinite(v)]
    edges = np.histogram_bin_edges(finite if finite else [0.0], bins=n_bins)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("strategy,bin_left,bin_right,count\n")
        for name, vals in sharpes_by_strategy.items():
            counts, _ = np.histogram([v for v in vals if np.isfinite(v)], bins=edges)
            for j in range(len(counts)):
                fh.write(f"{name},{edges[j]:.17g},{edges[j + 1]:.17g},{counts[j]}\n")


def _cmd_backtest(cfg: dict, out_dir: str, threads: int) -> list[str]:
    import numpy as np

    from .backtest import ingest_prices_csv, run_backtest, weights_to_csv
    from .config import build_drift, build_market, build_protocol, build_quadrature, build_utility
    from .errors import ConfigError
    from .market import PathGrid, simulate_paths

    protocol = build_protocol(cfg.get("protocol"))
    utility = build_utility(cfg["utility"])
    strategies = tuple(cfg.get("strategies") or ("bayesian", "drbc"))
    seed0 = int(cfg.get("seed", 0))
    n_seeds = int(cfg.get("n_seeds", 1))
    has_csv = cfg.get("prices_csv") is not None
    has_synth = cfg.get("drift") is not None
    if has_csv == has_synth:
        raise ConfigError("backtest needs exactly one of 'prices_csv' or 'drift'")
    quad = None
    runs = []
    if has_csv:
        if n_seeds != 1:
            raise ConfigError("n_seeds > 1 requires synthetic data ('drift'), not 'prices_csv'")
        prices = ingest_prices_csv(cfg["prices_csv"])
        dt = float(cfg["market"]["dt"])
        market = build_market(cfg["market"], total_T=(prices.shape[0] - 1) * dt)
        if quad is None and cfg.get("quadrature"):
            quad = build_quadrature(cfg["quadrature"], market.d)
        grid = PathGrid(times=dt * np.arange(prices.shape[0]), prices=prices)
        runs.append(
            (seed0, run_backtest(grid, protocol, strategies, market, utility, seed=seed0, quad=quad))
        )
    else:
        if cfg.get("n_steps") is None:
            raise ConfigError("missing required config key 'n_steps' for synthetic backtest")
        n_steps = int(cfg["n_steps"])
        dt = float(cfg["market"]["dt"])
        market = build_market(cfg["market"], total_T=n_steps * dt)
        if quad is None and cfg.get("quadrature"):
            quad = build_quadrature(cfg["quadrature"], market.d)
        for seed in range(seed0, seed0 + n_seeds):
            drift, is_sin = build_drift(cfg["drift"], market.d, seed)
            path = simulate_paths(market, drift, n_steps=n_steps, seed=seed)
            report = run_backtest(
                path,
                protocol,
                strategies,
                market,
                utility,
                seed=seed,
                true_drift=drift if is_sin else None,
                quad=quad,
            )
            runs.append((seed, report))

    outputs = ["report.csv", "hist_sharpe.csv"]
    with open(os.path.join(out_dir, "report.csv"), "w", encoding="utf-8") as fh:
        fh.write(
            "seed,strategy,sharpe,terminal_utility,mean_gross_leverage,"
            "max_gross_leverage,cap_hit_rate,bankrupt,fallback_cycles\n"
        )
        for seed, report in runs:
            for name in strategies:
                res = report.results[name]
                fh.write(
                    f"{seed},{name},{res.sharpe:.17g},{res.terminal_utility:.17g},"
                    f"{res.mean_gross_leverage:.17g},{res.max_gross_leverage:.17g},"
                    f"{res.cap_hit_rate:.17g},{int(res.bankrupt)},{res.fallback_cycles}\n"
                )
    sharpes = {name: [rep.results[name].sharpe for _, rep in runs] for name in strategies}
    _hist_csv(os.path.join(out_dir, "hist_sharpe.csv"), sharpes, int(cfg.get("hist_bins", 20)))
    first_seed, first_report = runs[0]
    for name in strategies:
        fname = f"weights_{_safe_name(name)}.csv"
        weights_to_csv(first_report.results[name].series, os.path.join(out_dir, fname))
        outputs.append(fname)
    for name in strategies:
        vals = sharpes[name]
        print(f"{name}: mean Sharpe {float(np.mean(vals)):.4f} over {len(vals)} seed(s)")
    return outputs


def _cmd_sweep(cfg: dict, out_dir: str, threads: int) -> list[str]:
    from .config import build_cell, build_cells, build_protocol
    from .suite import (
        run_experiment_suite,
        run_radius_sweep,
        scale_strategy,
        suite_records_csv,
        suite_summary_csv,
    )

    protocol = build_protocol(cfg.get("protocol"))
    common = dict(
        n_seeds=int(cfg.get("n_seeds", 100)),
        d=int(cfg.get("d", 20)),
        alpha=float(cfg.get("alpha", -2.0)),
        r=float(cfg.get("r", 0.01)),
        sigma_scale=float(cfg.get("sigma_scale", 0.3)),
        x0=float(cfg.get("x0", 1.0)),
        trade_steps=int(cfg.get("trade_steps", 504)),
        protocol=protocol,
        n_jobs=max(1, threads),
        seed0=int(cfg.get("seed", 0)),
    )
    scales = cfg.get("delta_scales")
    grid_requested = cfg.get("cells") is not None or cfg.get("grid") is not None or not scales
    outputs = []
    if grid_requested:
        cells = build_cells(cfg)
        strategies = tuple(cfg.get("strategies") or ("bayesian", "drbc", "drmv", "drmv_rf", "drc"))
        result = run_experiment_suite(cells, strategies=strategies, **common)
        suite_records_csv(result, os.path.join(out_dir, "report.csv"))
        suite_summary_csv(result, os.path.join(out_dir, "summary.csv"))
        outputs += ["report.csv", "summary.csv"]
        for st in result.stats:
            print(
                f"{st.cell} {st.strategy}: sharpe {st.sharpe_mean:.3f} "
                f"(std {st.sharpe_std:.3f}, n={st.n_ok})"
            )
    if scales:
        sweep = run_radius_sweep(
            [float(s) for s in scales], build_cell(cfg.get("sweep_cell")), **common
        )
        with open(os.path.join(out_dir, "sweep_gap.csv"), "w", encoding="utf-8") as fh:
            fh.write("scale,drbc_gap_mean,drc_gap_mean\n")
            drbc = sweep.drbc_gap_mean
            drc = sweep.drc_gap_mean
            for j, s in enumerate(sweep.scales):
                fh.write(f"{s:.17g},{drbc[j]:.17g},{drc[j]:.17g}\n")
        outputs.append("sweep_gap.csv")
        for j, s in enumerate(sweep.scales):
            print(f"scale {s:g}: mean utility gap {drbc[j]:+.6f} (surrogate {drc[j]:+.6f})")
    return outputs


_HANDLERS = {
    "simulate": _cmd_simulate,
    "calibrate": _cmd_calibrate,
    "backtest": _cmd_backtest,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    _pin_blas_threads()
    args = build_parser().parse_args(argv)

    from . import __version__
    from .config import SCHEMAS, apply_env_overrides, load_config, unwrap_manifest, validate_config
    from .errors import ConfigError, DataError, DrmertonError

    try:
        doc = load_config(args.config)
        cfg = unwrap_manifest(doc, args.command)
        cfg = apply_env_overrides(cfg, SCHEMAS[args.command])
        if args.seed is not None:
            cfg["seed"] = args.seed
        validate_config(cfg, SCHEMAS[args.command])
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        out_dir = args.out or f"drmerton_{args.command}"
        os.makedirs(out_dir, exist_ok=True)
        outputs = _HANDLERS[args.command](cfg, out_dir, args.threads)
        _write_manifest(
            out_dir, args.command, cfg, cfg.get("seed", 0), args.threads, outputs, __version__
        )
        print(f"manifest: {os.path.join(out_dir, 'manifest.json')}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except DrmertonError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
