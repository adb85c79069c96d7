"""Run configuration files (TOML).

Every subcommand reads the same file.  The shared sections are::

    [model]          M, m, kappa, nu, force = [Fx, Fy, Fz], tag = "B" | "E",
                     lambda, g, rho (recorded only)
    [potential.W]    family = "gaussian", sigma, amplitude
    [potential.Phi]  family = "gaussian" | "delta", sigma, amplitude
    [grid]           n, box_length

and each subcommand has an optional section of its own (``[dispersion]``,
``[static]``, ``[twave]``, ``[friction]``, ``[forced]``, ``[evolve]`` with
``[evolve.sponge]``, ``[reduced]``, ``[output]``).  Unknown keys are
rejected.  :attr:`Config.data` holds the configuration with every default
filled in; that dictionary is what gets echoed into run manifests.
"""
from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, ModelError
from .model import FourierGrid, ModelParams, PotentialSpec

_GAUSS = {"family": "gaussian", "sigma": 1.0, "amplitude": 1.0}

DEFAULTS: Dict[str, Any] = {
    "model": {"M": 1.0, "m": 1.0, "kappa": 0.0, "nu": 1.0, "force": [0.0, 0.0, 0.0], "tag": None,
              "lambda": None, "g": None, "rho": None},
    "potential": {"W": dict(_GAUSS), "Phi": dict(_GAUSS)},
    "grid": {"n": 128, "box_length": 64.0},
    "dispersion": {"samples": 256, "k_max": None},
    "static": {"X": [0.0, 0.0, 0.0], "project_zero_mode": None},
    "twave": {"speed": 1.0, "direction": [1.0, 0.0, 0.0], "eps": None},
    "friction": {"method": None, "speed_min": 1e-3, "speed_max": 100.0, "count": 61, "C": None},
    "forced": {"force": None, "speed_min": 0.25, "speed_max": 2.5, "count": 19},
    "evolve": {
        "dt": 0.02, "t_max": 100.0, "X0": [0.0, 0.0, 0.0], "P0": [0.1, 0.0, 0.0], "beta0": "zero",
        "sample_every": 10, "log_times": True, "r_obs": 2.0, "snapshot_every": 0,
        "sponge": {"width_fraction": 0.15, "strength": 2.0, "interval": 5},
    },
    "reduced": {"v0": [1.0, 0.0, 0.0], "t_max": 1e4, "rtol": 1e-9, "C": None,
                "fit_window": [1e2, 1e4], "samples": 400},
    "output": {"dir": "runs"},
}


def _merge(defaults: dict, given: dict, path: str) -> dict:
    out = copy.deepcopy(defaults)
    for key, val in given.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown key {where!r}")
        if isinstance(defaults[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{where!r} must be a table")
            out[key] = _merge(defaults[key], val, where)
        else:
            out[key] = val
    return out


def _vec3(val, where: str):
    if not (isinstance(val, (list, tuple)) and len(val) == 3):
        raise ConfigError(f"{where} must be a list of three numbers")
    try:
        return [float(c) for c in val]
    except (TypeError, ValueError):
        raise ConfigError(f"{where} must be a list of three numbers") from None


def _number(val, where: str, positive: bool = False) -> float:
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{where} must be a number, got {val!r}")
    if positive and not val > 0:
        raise ConfigError(f"{where} must be > 0, got {val}")
    return float(val)


@dataclass(frozen=True)
class Config:
    data: dict
    params: ModelParams
    W: PotentialSpec
    Phi: PotentialSpec
    grid: FourierGrid
    source: str = "<defaults>"

    def section(self, name: str) -> dict:
        return self.data[name]

    @property
    def digest(self) -> str:
        """SHA-256 of the canonical JSON form of the resolved configuration."""
        blob = json.dumps(self.data, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def build(raw: dict, source: str = "<dict>") -> Config:
    """Validate a parsed mapping and resolve defaults."""
    data = _merge(DEFAULTS, raw, "")
    mod = data["model"]
    for key in ("M", "m", "kappa", "nu"):
        mod[key] = _number(mod[key], f"model.{key}")
    mod["force"] = _vec3(mod["force"], "model.force")
    if mod["tag"] is None:
        mod["tag"] = "B" if mod["kappa"] == 0 else "E"
    try:
        params = ModelParams(M=mod["M"], m=mod["m"], kappa=mod["kappa"], nu=mod["nu"],
                             force=tuple(mod["force"]), model_tag=mod["tag"], lam=mod["lambda"],
                             g=mod["g"], rho=mod["rho"])
        W = PotentialSpec(**data["potential"]["W"])
        Phi = PotentialSpec(**data["potential"]["Phi"])
        grid = FourierGrid(int(data["grid"]["n"]), _number(data["grid"]["box_length"], "grid.box_length"))
    except ModelError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    if not W.is_smooth:
        raise ConfigError(f"{source}: potential.W must be smooth (gaussian); delta is only allowed for Phi")
    ev = data["evolve"]
    ev["X0"] = _vec3(ev["X0"], "evolve.X0")
    ev["P0"] = _vec3(ev["P0"], "evolve.P0")
    _number(ev["dt"], "evolve.dt", positive=True)
    _number(ev["t_max"], "evolve.t_max", positive=True)
    if ev["beta0"] not in ("zero", "static"):
        raise ConfigError("evolve.beta0 must be 'zero' or 'static'")
    sp = ev["sponge"]
    if not 0 <= sp["width_fraction"] < 0.5:
        raise ConfigError("evolve.sponge.width_fraction must lie in [0, 0.5)")
    data["static"]["X"] = _vec3(data["static"]["X"], "static.X")
    data["twave"]["direction"] = _vec3(data["twave"]["direction"], "twave.direction")
    data["reduced"]["v0"] = _vec3(data["reduced"]["v0"], "reduced.v0")
    fr = data["friction"]
    if fr["method"] is None:
        fr["method"] = "closed" if params.kappa == 0 else "spectral"
    if fr["method"] not in ("closed", "spectral"):
        raise ConfigError("friction.method must be 'closed' or 'spectral'")
    if fr["method"] == "closed" and params.kappa != 0:
        raise ConfigError("friction.method = 'closed' requires kappa = 0 (B-model)")
    for sec in ("friction", "forced"):
        s = data[sec]
        if not 0 <= s["speed_min"] < s["speed_max"] or int(s["count"]) < 3:
            raise ConfigError(f"{sec}: need 0 <= speed_min < speed_max and count >= 3")
    return Config(data, params, W, Phi, grid, source)


def load_config(path) -> Config:
    """Parse and validate a TOML configuration file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        # the decoder message carries "(at line L, column C)"
        raise ConfigError(f"{path}: parse error: {exc}") from exc
    return build(raw, str(path))


def default_config() -> Config:
    return build({}, "<defaults>")
