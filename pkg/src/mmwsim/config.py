"""Scenario configuration files (YAML or JSON) with strict key checking."""
from __future__ import annotations

import math
import os
from pathlib import Path

import yaml

from .antenna import ArrayConfig
from .channel import ConfigurationError, PathLossParams, StateParams
from .network import RadioConstants
from .sim import Scenario

__all__ = ["ConfigError", "load_config", "scenario_from_dict", "scenario_to_dict", "parse_bits", "env_overrides"]


class ConfigError(ConfigurationError):
    pass


_TOP = {
    "pattern", "pattern_file", "density_per_km2", "region_side_m", "drops", "seed", "bits",
    "composition", "active_sectors", "ue_pattern", "ue_mount", "bs_array", "ue_array", "radio", "path_loss",
}
_ARRAY = {"rows", "cols", "dv_wavelengths", "dh_wavelengths"}
_RADIO = {"tx_power_dbm", "bandwidth_hz", "noise_figure_db", "carrier_hz"}
_STATE = {"intercept_db", "exponent", "shadowing_sigma_db"}
_PL = {"los", "nlos", "outage_slope_per_m", "outage_offset", "los_scale_m"}


def _check(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(d).__name__}")
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(map(str, extra))}")
    return d


def parse_bits(value):
    """``None``/``"inf"``/``"unbounded"`` mean unbounded; otherwise a positive int."""
    if value is None or (isinstance(value, str) and value.strip().lower() in ("inf", "unbounded", "none")):
        return None
    if isinstance(value, float) and math.isinf(value):
        return None
    try:
        b = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bits: expected a positive integer or 'inf', got {value!r}") from None
    if b < 1 or b != float(value):
        raise ConfigError(f"bits: expected a positive integer or 'inf', got {value!r}")
    return b


def _num(d, key, where, cast=float):
    try:
        return cast(d[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key}: expected a number, got {d[key]!r}") from None


def _array(d, where, base: ArrayConfig | None):
    _check(d, _ARRAY, where)
    base = base or ArrayConfig()
    try:
        return ArrayConfig(
            _num(d, "rows", where, int) if "rows" in d else base.rows,
            _num(d, "cols", where, int) if "cols" in d else base.cols,
            _num(d, "dv_wavelengths", where) if "dv_wavelengths" in d else base.dv,
            _num(d, "dh_wavelengths", where) if "dh_wavelengths" in d else base.dh,
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _state(d, where, base: StateParams):
    _check(d, _STATE, where)
    vals = {k: _num(d, k, where) if k in d else getattr(base, k) for k in _STATE}
    try:
        return StateParams(**vals)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def scenario_from_dict(d: dict, base: Scenario | None = None) -> Scenario:
    """Overlay a nested config mapping on ``base`` (default: built-in defaults)."""
    base = base or Scenario()
    _check(d, _TOP, "config")
    kw = {}
    for key in ("pattern", "composition", "active_sectors", "ue_pattern", "ue_mount"):
        if key in d:
            kw[key] = str(d[key]).lower()
    if "pattern_file" in d:
        kw["pattern_file"] = None if d["pattern_file"] is None else str(d["pattern_file"])
    if "density_per_km2" in d:
        kw["density"] = _num(d, "density_per_km2", "config")
    if "region_side_m" in d:
        kw["region_side"] = _num(d, "region_side_m", "config")
    if "drops" in d:
        kw["drops"] = _num(d, "drops", "config", int)
    if "seed" in d:
        kw["seed"] = _num(d, "seed", "config", int)
    if "bits" in d:
        kw["bits"] = parse_bits(d["bits"])
    if "bs_array" in d:
        kw["bs_array"] = None if d["bs_array"] is None else _array(d["bs_array"], "bs_array", base.bs_array)
    if "ue_array" in d:
        kw["ue_array"] = None if d["ue_array"] is None else _array(d["ue_array"], "ue_array", base.ue_array)
    if "radio" in d:
        r = _check(d["radio"], _RADIO, "radio")
        kw["constants"] = RadioConstants(
            **{k: _num(r, k, "radio") if k in r else getattr(base.constants, k) for k in _RADIO}
        )
    if "path_loss" in d:
        p = _check(d["path_loss"], _PL, "path_loss")
        b = base.path_loss
        kw["path_loss"] = PathLossParams(
            los=_state(p["los"], "path_loss.los", b.los) if "los" in p else b.los,
            nlos=_state(p["nlos"], "path_loss.nlos", b.nlos) if "nlos" in p else b.nlos,
            outage_slope=_num(p, "outage_slope_per_m", "path_loss") if "outage_slope_per_m" in p else b.outage_slope,
            outage_offset=_num(p, "outage_offset", "path_loss") if "outage_offset" in p else b.outage_offset,
            los_scale_m=_num(p, "los_scale_m", "path_loss") if "los_scale_m" in p else b.los_scale_m,
        )
    try:
        return base.with_(**kw)
    except ConfigError:
        raise
    except ConfigurationError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return scenario_from_dict(data or {})


def _array_dict(a: ArrayConfig) -> dict:
    return {"rows": a.rows, "cols": a.cols, "dv_wavelengths": a.dv, "dh_wavelengths": a.dh}


def _state_dict(s: StateParams) -> dict:
    return {"intercept_db": s.intercept_db, "exponent": s.exponent, "shadowing_sigma_db": s.shadowing_sigma_db}


def scenario_to_dict(s: Scenario) -> dict:
    """Full, explicit echo of a scenario; feeding it back reproduces ``s``."""
    return {
        "pattern": s.pattern,
        "pattern_file": s.pattern_file,
        "density_per_km2": s.density,
        "region_side_m": s.region_side,
        "drops": s.drops,
        "seed": s.seed,
        "bits": "inf" if s.bits is None else s.bits,
        "composition": s.composition,
        "active_sectors": s.active_sectors,
        "ue_pattern": s.ue_pattern,
        "ue_mount": s.ue_mount,
        "bs_array": _array_dict(s.bs_cfg),
        "ue_array": _array_dict(s.ue_cfg),
        "radio": {k: getattr(s.constants, k) for k in sorted(_RADIO)},
        "path_loss": {
            "los": _state_dict(s.path_loss.los),
            "nlos": _state_dict(s.path_loss.nlos),
            "outage_slope_per_m": s.path_loss.outage_slope,
            "outage_offset": s.path_loss.outage_offset,
            "los_scale_m": s.path_loss.los_scale_m,
        },
    }


def env_overrides(environ=None) -> dict:
    """Seed override from ``MMWSIM_SEED``."""
    environ = os.environ if environ is None else environ
    out = {}
    if environ.get("MMWSIM_SEED"):
        try:
            out["seed"] = int(environ["MMWSIM_SEED"])
        except ValueError:
            raise ConfigError(f"MMWSIM_SEED: not an integer: {environ['MMWSIM_SEED']!r}") from None
    return out
