"""Config schemas: validation, manifests, env overrides, builders."""

from __future__ import annotations

import json

import numpy as np
import pytest

from drmerton import ConfigError, MarketSpec, SinusoidalDriftSpec, TradingProtocol
from drmerton.config import (
    SCHEMAS,
    apply_env_overrides,
    build_cells,
    build_drift,
    build_market,
    build_protocol,
    build_quadrature,
    load_config,
    unwrap_manifest,
    validate_config,
)

GOOD_SIMULATE = {
    "market": {"d": 2, "r": 0.01, "dt": 1 / 252, "sigma_scale": 0.3},
    "drift": {"B0": 0.4, "kappa_mean": 0.0, "kappa_std": 1.0},
    "n_steps": 100,
    "seed": 3,
}


def test_validate_accepts_and_rejects():
    validate_config(GOOD_SIMULATE, SCHEMAS["simulate"])
    bad = dict(GOOD_SIMULATE, typo_key=1)
    with pytest.raises(ConfigError, match="unknown config key 'typo_key'"):
        validate_config(bad, SCHEMAS["simulate"])
    missing = {k: v for k, v in GOOD_SIMULATE.items() if k != "n_steps"}
    with pytest.raises(ConfigError, match="missing required config key 'n_steps'"):
        validate_config(missing, SCHEMAS["simulate"])
    wrong_kind = json.loads(json.dumps(GOOD_SIMULATE))
    wrong_kind["market"]["d"] = "two"
    with pytest.raises(ConfigError, match="market.d"):
        validate_config(wrong_kind, SCHEMAS["simulate"])
    nested_unknown = json.loads(json.dumps(GOOD_SIMULATE))
    nested_unknown["market"]["volatility"] = 0.2
    with pytest.raises(ConfigError, match="market.volatility"):
        validate_config(nested_unknown, SCHEMAS["simulate"])
    # null clears an optional key but cannot satisfy a required one.
    with_null = dict(GOOD_SIMULATE, seed=None)
    validate_config(with_null, SCHEMAS["simulate"])
    with pytest.raises(ConfigError):
        validate_config(dict(GOOD_SIMULATE, n_steps=None), SCHEMAS["simulate"])


def test_load_config_errors(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(str(p))
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(str(tmp_path / "absent.json"))
    p.write_text("[1,2]", encoding="utf-8")
    with pytest.raises(ConfigError, match="must be a JSON object"):
        load_config(str(p))
    p.write_text(json.dumps(GOOD_SIMULATE), encoding="utf-8")
    assert load_config(str(p)) == GOOD_SIMULATE


def test_unwrap_manifest():
    manifest = {"command": "simulate", "config": GOOD_SIMULATE, "version": "x"}
    assert unwrap_manifest(manifest, "simulate") == GOOD_SIMULATE
    with pytest.raises(ConfigError, match="manifest is for command"):
        unwrap_manifest(manifest, "backtest")
    assert unwrap_manifest(GOOD_SIMULATE, "simulate") == GOOD_SIMULATE


def test_env_overrides_nested_and_json_values():
    cfg = json.loads(json.dumps(GOOD_SIMULATE))
    env = {
        "DRMERTON_N_STEPS": "250",
        "DRMERTON_MARKET__R": "0.02",
        "DRMERTON_DRIFT__B0": "0.2",
        "OTHER_VAR": "ignored",
    }
    out = apply_env_overrides(cfg, SCHEMAS["simulate"], environ=env)
    assert out["n_steps"] == 250 and out["market"]["r"] == 0.02
    assert out["drift"]["B0"] == 0.2
    assert cfg == GOOD_SIMULATE  # input untouched
    validate_config(out, SCHEMAS["simulate"])


def test_build_market_variants():
    m = build_market({"d": 2, "r": 0.01, "dt": 0.5, "sigma_scale": 0.3, "T": 1.0})
    np.testing.assert_array_equal(m.sigma, 0.3 * np.eye(2))
    m2 = build_market(
        {"d": 2, "r": 0.0, "dt": 0.5, "sigma": [[0.3, 0.0], [0.1, 0.2]]}, total_T=2.0
    )
    assert m2.T == 2.0 and m2.sigma[1, 0] == 0.1
    with pytest.raises(ConfigError, match="exactly one of"):
        build_market({"d": 2, "r": 0.0, "dt": 0.5, "sigma_scale": 0.3, "sigma": [[1.0]], "T": 1.0})
    with pytest.raises(ConfigError, match="sigma"):
        build_market({"d": 2, "r": 0.0, "dt": 0.5, "T": 1.0})
    with pytest.raises(ConfigError, match="market.T"):
        build_market({"d": 2, "r": 0.0, "dt": 0.5, "sigma_scale": 0.3})


def test_build_drift_modes():
    d1, sin1 = build_drift({"B0": 0.4, "kappa": [1.0, 2.0]}, d=2, seed=0)
    assert sin1 and isinstance(d1, SinusoidalDriftSpec)
    np.testing.assert_array_equal(d1.kappa, [1.0, 2.0])
    d2a, _ = build_drift({"B0": 0.4, "kappa_mean": 0.0, "kappa_std": 1.0}, d=2, seed=5)
    d2b, _ = build_drift({"B0": 0.4, "kappa_mean": 0.0, "kappa_std": 1.0}, d=2, seed=6)
    assert not np.array_equal(d2a.kappa, d2b.kappa)
    d3, sin3 = build_drift({"constant": [0.1, 0.2]}, d=2, seed=0)
    assert not sin3
    np.testing.assert_array_equal(d3, [0.1, 0.2])
    with pytest.raises(ConfigError, match="exactly one of"):
        build_drift({"B0": 0.4}, d=2, seed=0)
    with pytest.raises(ConfigError, match="length d=2"):
        build_drift({"constant": [0.1]}, d=2, seed=0)
    with pytest.raises(ConfigError, match="drift.B0"):
        build_drift({"kappa": [1.0, 2.0]}, d=2, seed=0)


def test_build_protocol_and_quadrature():
    assert build_protocol(None) == TradingProtocol()
    p = build_protocol({"preset": "monthly", "eval_rate": 0.02})
    assert p.lookback_steps == 1260 and p.eval_rate == 0.02
    with pytest.raises(ConfigError, match="preset"):
        build_protocol({"preset": "weekly"})
    q_small = build_quadrature(None, d=2)
    q_big = build_quadrature(None, d=10)
    assert q_small.method != q_big.method
    q = build_quadrature({"method": "gauss_hermite", "nodes_per_dim": 12}, d=2)
    assert q.nodes_per_dim == 12
    with pytest.raises(ConfigError, match="quadrature.method"):
        build_quadrature({"method": "simpson"}, d=2)


def test_build_cells_grid_and_list():
    assert len(build_cells({})) == 8
    cells = build_cells({"cells": [{"B0": 0.3, "m": 2, "label": "mine"}]})
    assert cells[0].label == "mine" and cells[0].m == 2
    grid = build_cells(
        {"grid": {"B0": [0.2, 0.4], "m": [6], "kappa": [{"mean": 0.0, "std": 1.0}]}}
    )
    assert len(grid) == 2
    with pytest.raises(ConfigError, match="not both"):
        build_cells({"cells": [{"B0": 0.3, "m": 2}], "grid": {"B0": [0.2], "m": [6]}})
    with pytest.raises(ConfigError, match="nonempty"):
        build_cells({"grid": {"B0": [], "m": [6]}})
