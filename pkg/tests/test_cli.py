"""Command line: subcommands, exit codes, manifests, thread invariance."""

from __future__ import annotations

import json
import os

import numpy as np
import pytest

from drmerton import NumericError, cli

SMALL_PROTOCOL_CFG = {
    "lookback_steps": 100,
    "rebalance_every": 11,
    "prior_update_every": 15,
    "eval_window": 30,
    "windowing": {"mode": "consecutive", "window_len": 20, "n_windows": 5},
    "mc_samples": 256,
    "gh_nodes": 10,
}


def _write_cfg(tmp_path, name, cfg):
    p = tmp_path / name
    p.write_text(json.dumps(cfg), encoding="utf-8")
    return str(p)


def _simulate_cfg(n_steps=60, seed=3):
    return {
        "market": {"d": 2, "r": 0.01, "dt": 1 / 252, "sigma_scale": 0.3},
        "drift": {"B0": 0.4, "kappa_mean": 0.0, "kappa_std": 1.0},
        "n_steps": n_steps,
        "seed": seed,
    }


def test_simulate_manifest_reproduces_run(tmp_path):
    cfg_path = _write_cfg(tmp_path, "sim.json", _simulate_cfg())
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert cli.main(["simulate", "--config", cfg_path, "--out", out1]) == 0
    manifest_path = os.path.join(out1, "manifest.json")
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    assert manifest["command"] == "simulate"
    assert manifest["outputs"] == ["paths.csv"]
    assert manifest["config"]["n_steps"] == 60
    # Feeding the manifest back reproduces the run byte-for-byte.
    assert cli.main(["simulate", "--config", manifest_path, "--out", out2]) == 0
    a = open(os.path.join(out1, "paths.csv"), "rb").read()
    b = open(os.path.join(out2, "paths.csv"), "rb").read()
    assert a == b


def test_seed_flag_overrides_config(tmp_path):
    cfg_path = _write_cfg(tmp_path, "sim.json", _simulate_cfg(seed=3))
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert cli.main(["simulate", "--config", cfg_path, "--out", out1]) == 0
    assert cli.main(["simulate", "--config", cfg_path, "--out", out2, "--seed", "9"]) == 0
    a = open(os.path.join(out1, "paths.csv"), "rb").read()
    b = open(os.path.join(out2, "paths.csv"), "rb").read()
    assert a != b
    with open(os.path.join(out2, "manifest.json"), encoding="utf-8") as fh:
        assert json.load(fh)["seed"] == 9


def test_exit_codes(tmp_path, monkeypatch):
    bad_cfg = _write_cfg(tmp_path, "bad.json", dict(_simulate_cfg(), typo_key=1))
    assert cli.main(["simulate", "--config", bad_cfg, "--out", str(tmp_path / "x")]) == 2
    cal_cfg = _write_cfg(
        tmp_path,
        "cal.json",
        {
            "market": {"d": 2, "r": 0.01, "dt": 1 / 252, "sigma_scale": 0.3, "T": 1.0},
            "utility": {"alpha": -2.0},
            "prices_csv": str(tmp_path / "absent.csv"),
        },
    )
    assert cli.main(["calibrate", "--config", cal_cfg, "--out", str(tmp_path / "y")]) == 3
    sim_cfg = _write_cfg(tmp_path, "sim.json", _simulate_cfg())

    def boom(cfg, out_dir, threads):
        raise NumericError("synthetic failure")

    monkeypatch.setitem(cli._HANDLERS, "simulate", boom)
    assert cli.main(["simulate", "--config", sim_cfg, "--out", str(tmp_path / "z")]) == 4


def test_calibrate_end_to_end(tmp_path):
    sim_cfg = _write_cfg(tmp_path, "sim.json", _simulate_cfg(n_steps=100, seed=1))
    sim_out = str(tmp_path / "sim")
    assert cli.main(["simulate", "--config", sim_cfg, "--out", sim_out]) == 0
    prices = np.loadtxt(os.path.join(sim_out, "paths.csv"), delimiter=",", skiprows=1)[:, 1:]
    prices_csv = str(tmp_path / "prices.csv")
    with open(prices_csv, "w", encoding="utf-8") as fh:
        fh.write("date,a,b\n")
        for t in range(prices.shape[0]):  # unpadded indices: numeric date ordering
            fh.write(f"{t},{float(prices[t, 0])!r},{float(prices[t, 1])!r}\n")
    base = {
        "market": {"d": 2, "r": 0.01, "dt": 1 / 252, "sigma_scale": 0.3, "T": 100 / 252},
        "utility": {"alpha": -2.0},
        "prices_csv": prices_csv,
        "windowing": {"mode": "consecutive", "window_len": 20, "n_windows": 5},
        "quadrature": {"method": "gauss_hermite", "nodes_per_dim": 20},
    }
    out = str(tmp_path / "cal")
    assert cli.main(["calibrate", "--config", _write_cfg(tmp_path, "c2.json", base), "--out", out]) == 0
    with open(os.path.join(out, "calibration.json"), encoding="utf-8") as fh:
        payload = json.load(fh)
    # Default observation count is the windowed history length.
    assert payload["n"] == 100
    assert payload["delta"] == pytest.approx(payload["eta_q"] / 100)
    assert len(payload["atoms"]) == 5 and len(payload["atoms"][0]) == 2
    out2 = str(tmp_path / "cal2")
    cfg2 = _write_cfg(tmp_path, "c3.json", dict(base, n_samples=50))
    assert cli.main(["calibrate", "--config", cfg2, "--out", out2]) == 0
    with open(os.path.join(out2, "calibration.json"), encoding="utf-8") as fh:
        assert json.load(fh)["n"] == 50


def test_backtest_outputs(tmp_path):
    cfg = {
        "market": {"d": 2, "r": 0.01, "dt": 1 / 252, "sigma_scale": 0.3},
        "utility": {"alpha": -2.0},
        "protocol": SMALL_PROTOCOL_CFG,
        "strategies": ["cash", "plugin"],
        "drift": {"B0": 0.4, "kappa_mean": 0.0, "kappa_std": 1.0},
        "n_steps": 160,
        "n_seeds": 2,
        "seed": 0,
    }
    out = str(tmp_path / "bt")
    assert cli.main(["backtest", "--config", _write_cfg(tmp_path, "bt.json", cfg), "--out", out]) == 0
    with open(os.path.join(out, "report.csv"), encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    assert len(lines) == 1 + 2 * 2
    for fname in ("hist_sharpe.csv", "weights_cash.csv", "weights_plugin.csv", "manifest.json"):
        assert os.path.exists(os.path.join(out, fname))
    both = dict(cfg, prices_csv="x.csv")
    assert cli.main(["backtest", "--config", _write_cfg(tmp_path, "b2.json", both), "--out", out]) == 2


def test_sweep_grid_thread_invariance(tmp_path):
    cfg = {
        "cells": [{"B0": 0.4, "m": 1, "label": "tiny"}],
        "n_seeds": 2,
        "d": 2,
        "strategies": ["cash", "plugin"],
        "trade_steps": 60,
        "protocol": SMALL_PROTOCOL_CFG,
        "seed": 0,
    }
    cfg_path = _write_cfg(tmp_path, "sw.json", cfg)
    out1, out2 = str(tmp_path / "t1"), str(tmp_path / "t2")
    assert cli.main(["sweep", "--config", cfg_path, "--out", out1, "--threads", "1"]) == 0
    assert cli.main(["sweep", "--config", cfg_path, "--out", out2, "--threads", "2"]) == 0
    for fname in ("report.csv", "summary.csv"):
        a = open(os.path.join(out1, fname), "rb").read()
        b = open(os.path.join(out2, fname), "rb").read()
        assert a == b, f"{fname} differs across --threads"
    with open(os.path.join(out2, "manifest.json"), encoding="utf-8") as fh:
        assert json.load(fh)["threads"] == 2


def test_sweep_scales_only_branch(tmp_path):
    cfg = {
        "delta_scales": [0.0, 1.0],
        "sweep_cell": {"B0": 0.4, "m": 1, "label": "tiny"},
        "n_seeds": 2,
        "d": 2,
        "trade_steps": 60,
        "protocol": SMALL_PROTOCOL_CFG,
        "seed": 0,
    }
    out = str(tmp_path / "sw")
    assert cli.main(["sweep", "--config", _write_cfg(tmp_path, "sc.json", cfg), "--out", out]) == 0
    assert os.path.exists(os.path.join(out, "sweep_gap.csv"))
    assert not os.path.exists(os.path.join(out, "report.csv"))
    with open(os.path.join(out, "sweep_gap.csv"), encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    assert lines[0] == "scale,drbc_gap_mean,drc_gap_mean"
    assert len(lines) == 3


def test_env_override_reaches_cli(tmp_path, monkeypatch):
    cfg_path = _write_cfg(tmp_path, "sim.json", _simulate_cfg(n_steps=60))
    out = str(tmp_path / "env")
    monkeypatch.setenv("DRMERTON_N_STEPS", "30")
    assert cli.main(["simulate", "--config", cfg_path, "--out", out]) == 0
    with open(os.path.join(out, "manifest.json"), encoding="utf-8") as fh:
        assert json.load(fh)["config"]["n_steps"] == 30
    data = np.loadtxt(os.path.join(out, "paths.csv"), delimiter=",", skiprows=1)
    assert data.shape[0] == 31
