"""JSON run configuration: schema validation, env overrides, builders.

Configs are plain JSON documents with one block per concern (market,
drift, protocol, ...).  Every document is validated against a
per-command schema before any computation: unknown keys are rejected by
their full dotted path, required keys are named when missing, and an
explicit JSON ``null`` means "unset".  Environment variables prefixed
``DRMERTON_`` override config keys, with ``__`` as the nesting
separator (``DRMERTON_MARKET__R=0.02``); values are parsed as JSON when
possible and kept as strings otherwise.  A run manifest (a document with
``command`` and ``config`` keys) can be fed back as a config to
reproduce the run.
"""

from __future__ import annotations

import dataclasses
import json
import os

import numpy as np

from .backtest import TradingProtocol
from .errors import ConfigError
from .market import MarketSpec, SinusoidalDriftSpec
from .merton import UtilitySpec
from .priors import WindowingSpec
from .quadrature import GAUSS_HERMITE, MONTE_CARLO, QuadratureSpec, auto_spec
from .suite import ExperimentCell, default_cells

ENV_PREFIX = "DRMERTON_"


@dataclasses.dataclass(frozen=True)
class Field:
    """One schema slot: JSON kind, required flag, and nested schema."""

    kind: str  # "int" | "number" | "bool" | "string" | "array" | "object"
    required: bool = False
    children: dict | None = None


_MARKET = {
    "d": Field("int", required=True),
    "r": Field("number", required=True),
    "dt": Field("number", required=True),
    "sigma_scale": Field("number"),
    "sigma": Field("array"),
    "T": Field("number"),
}

_DRIFT = {
    "B0": Field("number"),
    "kappa": Field("array"),
    "kappa_mean": Field("number"),
    "kappa_std": Field("number"),
    "constant": Field("array"),
}

_UTILITY = {"alpha": Field("number", required=True)}

_QUADRATURE = {
    "method": Field("string"),
    "nodes_per_dim": Field("int"),
    "n_samples": Field("int"),
    "seed": Field("int"),
}

_WINDOWING = {
    "mode": Field("string"),
    "window_len": Field("int"),
    "n_windows": Field("int"),
    "n_types": Field("int"),
}

_PROTOCOL = {
    "preset": Field("string"),
    "lookback_steps": Field("int"),
    "rebalance_every": Field("int"),
    "prior_update_every": Field("int"),
    "eval_window": Field("int"),
    "plan_horizon_T": Field("number"),
    "eval_rate": Field("number"),
    "projection_mode": Field("string"),
    "windowing": Field("object", children=_WINDOWING),
    "info_lag_steps": Field("int"),
    "short_cap": Field("number"),
    "clamp_bound": Field("number"),
    "delta_scale": Field("number"),
    "confidence": Field("number"),
    "calibration_mode": Field("string"),
    "mc_samples": Field("int"),
    "gh_nodes": Field("int"),
    "drmv_delta": Field("number"),
    "target_return_annual": Field("number"),
    "target_return_rf_annual": Field("number"),
    "cov_method": Field("string"),
    "x0": Field("number"),
}

_CELL = {
    "B0": Field("number", required=True),
    "m": Field("int", required=True),
    "kappa_mean": Field("number"),
    "kappa_std": Field("number"),
    "label": Field("string"),
}

SCHEMAS: dict[str, dict[str, Field]] = {
    "simulate": {
        "market": Field("object", required=True, children=_MARKET),
        "drift": Field("object", required=True, children=_DRIFT),
        "n_steps": Field("int", required=True),
        "s0": Field("number"),
        "seed": Field("int"),
    },
    "calibrate": {
        "market": Field("object", required=True, children=_MARKET),
        "utility": Field("object", required=True, children=_UTILITY),
        "prices_csv": Field("string", required=True),
        "windowing": Field("object", children=_WINDOWING),
        "clamp_bound": Field("number"),
        "confidence": Field("number"),
        "mode": Field("string"),
        "n_quantile_samples": Field("int"),
        "n_samples": Field("int"),
        "x0": Field("number"),
        "quadrature": Field("object", children=_QUADRATURE),
        "seed": Field("int"),
    },
    "backtest": {
        "market": Field("object", required=True, children=_MARKET),
        "utility": Field("object", required=True, children=_UTILITY),
        "protocol": Field("object", children=_PROTOCOL),
        "strategies": Field("array"),
        "prices_csv": Field("string"),
        "drift": Field("object", children=_DRIFT),
        "n_steps": Field("int"),
        "n_seeds": Field("int"),
        "hist_bins": Field("int"),
        "quadrature": Field("object", children=_QUADRATURE),
        "seed": Field("int"),
    },
    "sweep": {
        "cells": Field("array"),
        "grid": Field(
            "object",
            children={
                "B0": Field("array"),
                "m": Field("array"),
                "kappa": Field("array"),
            },
        ),
        "n_seeds": Field("int"),
        "d": Field("int"),
        "strategies": Field("array"),
        "alpha": Field("number"),
        "r": Field("number"),
        "sigma_scale": Field("number"),
        "x0": Field("number"),
        "trade_steps": Field("int"),
        "protocol": Field("object", children=_PROTOCOL),
        "delta_scales": Field("array"),
        "sweep_cell": Field("object", children=_CELL),
        "seed": Field("int"),
    },
}


def _check_kind(value, kind: str, path: str) -> None:
    ok = {
        "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
        "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
        "bool": lambda v: isinstance(v, bool),
        "string": lambda v: isinstance(v, str),
        "array": lambda v: isinstance(v, list),
        "object": lambda v: isinstance(v, dict),
    }[kind]
    if not ok(value):
        raise ConfigError(f"config key '{path}' must be a {kind}")


def validate_config(config: dict, schema: dict[str, Field], path: str = "") -> None:
    """Reject unknown keys, enforce required keys and JSON kinds.

    JSON ``null`` counts as "unset": allowed for optional keys only.
    """
    if not isinstance(config, dict):
        raise ConfigError(f"config section '{path or '<root>'}' must be an object")
    for key in config:
        full = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(f"unknown config key '{full}'")
    for key, field in schema.items():
        full = f"{path}.{key}" if path else key
        if key not in config or config[key] is None:
            if field.required:
                raise ConfigError(f"missing required config key '{full}'")
            continue
        _check_kind(config[key], field.kind, full)
        if field.kind == "object" and field.children is not None:
            validate_config(config[key], field.children, full)


def load_config(path: str) -> dict:
    """Read a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path!r} must be a JSON object")
    return doc


def unwrap_manifest(doc: dict, command: str) -> dict:
    """Accept either a plain config or a run manifest for ``command``."""
    if "command" in doc and "config" in doc:
        if doc["command"] != command:
            raise ConfigError(
                f"manifest is for command {doc['command']!r}, not {command!r}"
            )
        inner = doc["config"]
        if not isinstance(inner, dict):
            raise ConfigError("manifest 'config' must be a JSON object")
        return inner
    return doc


def _match_key(segment: str, known: list[str]) -> str:
    if segment in known:
        return segment
    lower = [k for k in known if k.lower() == segment.lower()]
    return lower[0] if len(lower) == 1 else segment


def apply_env_overrides(config: dict, schema: dict[str, Field], environ=None) -> dict:
    """Fold ``DRMERTON_SECTION__KEY=value`` overrides into the config."""
    environ = os.environ if environ is None else environ
    out = json.loads(json.dumps(config))  # deep copy, JSON-clean
    for name in sorted(environ):
        if not name.startswith(ENV_PREFIX):
            continue
        raw = environ[name]
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        segments = name[len(ENV_PREFIX) :].lower().split("__")
        node, node_schema = out, schema
        for j, seg in enumerate(segments):
            known = list(node_schema) if node_schema is not None else list(node)
            key = _match_key(seg, known)
            if j == len(segments) - 1:
                node[key] = value
            else:
                node = node.setdefault(key, {})
                if not isinstance(node, dict):
                    raise ConfigError(
                        f"env override {name} descends into non-object key '{key}'"
                    )
                field = (node_schema or {}).get(key)
                node_schema = field.children if field is not None else None
    return out


def build_market(cfg: dict, total_T: float | None = None) -> MarketSpec:
    """Market from its config block; ``total_T`` supplies T when the
    block has none (e.g. derived from a step count)."""
    has_scale = cfg.get("sigma_scale") is not None
    has_matrix = cfg.get("sigma") is not None
    if has_scale == has_matrix:
        raise ConfigError(
            "market needs exactly one of 'sigma_scale' or 'sigma'"
            if has_scale
            else "missing required config key 'market.sigma' (or 'market.sigma_scale')"
        )
    d = cfg["d"]
    sigma = (
        float(cfg["sigma_scale"]) * np.eye(d)
        if has_scale
        else np.asarray(cfg["sigma"], dtype=float)
    )
    T = cfg.get("T", total_T)
    if T is None:
        raise ConfigError("missing required config key 'market.T'")
    return MarketSpec(d=d, r=float(cfg["r"]), sigma=sigma, T=float(T), dt=float(cfg["dt"]))


def build_utility(cfg: dict) -> UtilitySpec:
    return UtilitySpec(alpha=float(cfg["alpha"]))


def build_windowing(cfg: dict | None) -> WindowingSpec:
    if not cfg:
        return WindowingSpec()
    kwargs = {k: v for k, v in cfg.items() if v is not None}
    return WindowingSpec(**kwargs)


def build_quadrature(cfg: dict | None, d: int) -> QuadratureSpec:
    if not cfg:
        return auto_spec(d)
    kwargs = {k: v for k, v in cfg.items() if v is not None}
    method = kwargs.pop("method", "auto")
    if method == "auto":
        return auto_spec(d, **kwargs)
    if method not in (GAUSS_HERMITE, MONTE_CARLO):
        raise ConfigError(
            f"quadrature.method must be 'auto', {GAUSS_HERMITE!r}, or {MONTE_CARLO!r}"
        )
    return QuadratureSpec(method=method, **kwargs)


def build_protocol(cfg: dict | None) -> TradingProtocol:
    if not cfg:
        return TradingProtocol()
    kwargs = {k: v for k, v in cfg.items() if v is not None}
    preset = kwargs.pop("preset", None)
    if "windowing" in kwargs:
        kwargs["windowing"] = build_windowing(kwargs["windowing"])
    if preset is None:
        return TradingProtocol(**kwargs)
    if preset == "monthly":
        return TradingProtocol.monthly_real(**kwargs)
    raise ConfigError(f"unknown protocol preset {preset!r}; available: 'monthly'")


def build_drift(cfg: dict, d: int, seed: int):
    """Drift from its config block.

    Returns ``(drift, is_sinusoidal)`` where drift is either a
    ``SinusoidalDriftSpec`` (fixed ``kappa`` list, or per-seed sampled
    from ``kappa_mean``/``kappa_std``) or a constant drift vector.
    """
    modes = [
        cfg.get("kappa") is not None,
        cfg.get("kappa_mean") is not None or cfg.get("kappa_std") is not None,
        cfg.get("constant") is not None,
    ]
    if sum(modes) != 1:
        raise ConfigError(
            "drift needs exactly one of: 'kappa' (fixed frequencies), "
            "'kappa_mean'/'kappa_std' (sampled per seed), or 'constant'"
        )
    if modes[2]:
        vec = np.asarray(cfg["constant"], dtype=float)
        if vec.shape != (d,):
            raise ConfigError(f"drift.constant must have length d={d}")
        return vec, False
    if cfg.get("B0") is None:
        raise ConfigError("missing required config key 'drift.B0'")
    if modes[0]:
        kappa = np.asarray(cfg["kappa"], dtype=float)
        if kappa.shape != (d,):
            raise ConfigError(f"drift.kappa must have length d={d}")
        return SinusoidalDriftSpec(B0=float(cfg["B0"]), kappa=kappa), True
    mean = float(cfg.get("kappa_mean", 0.0))
    std = float(cfg.get("kappa_std", 1.0))
    return SinusoidalDriftSpec.sample(float(cfg["B0"]), d, mean=mean, std=std, seed=seed), True


def build_cells(cfg: dict) -> tuple[ExperimentCell, ...]:
    """Experiment cells from 'cells' (explicit list) or 'grid'
    (cartesian product); defaults to the standard eight cells."""
    has_cells = cfg.get("cells") is not None
    has_grid = cfg.get("grid") is not None
    if has_cells and has_grid:
        raise ConfigError("give either 'cells' or 'grid', not both")
    if has_cells:
        out = []
        for j, entry in enumerate(cfg["cells"]):
            validate_config(entry, _CELL, path=f"cells[{j}]")
            kwargs = {k: v for k, v in entry.items() if v is not None}
            out.append(ExperimentCell(**kwargs))
        if not out:
            raise ConfigError("'cells' must not be empty")
        return tuple(out)
    if has_grid:
        grid = cfg["grid"]
        b0s = grid.get("B0") or []
        ms = grid.get("m") or []
        kappas = grid.get("kappa") or [{"mean": 0.0, "std": 1.0}]
        if not b0s or not ms:
            raise ConfigError("'grid' needs nonempty 'B0' and 'm' lists")
        out = []
        for law in kappas:
            if not isinstance(law, dict) or not set(law) <= {"mean", "std"}:
                raise ConfigError("grid.kappa entries must be {mean, std} objects")
            for b0 in b0s:
                for m in ms:
                    out.append(
                        ExperimentCell(
                            B0=float(b0),
                            m=int(m),
                            kappa_mean=float(law.get("mean", 0.0)),
                            kappa_std=float(law.get("std", 1.0)),
                        )
                    )
        return tuple(out)
    return default_cells()


def build_cell(cfg: dict | None) -> ExperimentCell | None:
    if not cfg:
        return None
    validate_config(cfg, _CELL, path="sweep_cell")
    kwargs = {k: v for k, v in cfg.items() if v is not None}
    return ExperimentCell(**kwargs)
