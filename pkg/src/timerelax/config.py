"""Flat ``key = value`` (or JSON) run configuration."""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path

from .errors import InvalidInputError
from .filters import FilterParams
from .similarity import chi_perfectly_resolved
from .solver import FlowState, ForcingSpec, SolverConfig, make_initial_condition
from .spectral import GridSpec

SIM_DEFAULTS = {
    "dim": 2,
    "n": 64,
    "L": 2 * math.pi,
    "nu": 0.01,
    "chi": "10",
    "U": 1.0,
    "delta": 0.2,
    "alpha": 0.5,
    "N": 1,
    "dt": 1e-3,
    "t_end": 1.0,
    "dealias": True,
    "nonlinear": True,
    "linear_terms_exact": True,
    "record_every": 10,
    "spectrum_every": 1,
    "average_after": 0.0,
    "ic": "random-spectrum",
    "ic_slope": -5.0 / 3.0,
    "ic_band_lo": 1,
    "ic_band_hi": 8,
    "ic_energy": 0.5,
    "forcing": "none",
    "forcing_amplitude": "1.0",
    "forcing_shell": 1,
    "forcing_seed": 12345,
    "seed": 0,
    "chi_sweep": "",
}

PARAM_DEFAULTS = {
    "U": None,
    "L": None,
    "nu": None,
    "Re": None,
    "delta": None,
    "alpha": None,
    "N": 0,
    "chi": None,
    "alphas": "",
    "deltas": "",
    "Ns": "",
}


def parse_number(text) -> float:
    """Float parser accepting fractions such as ``1/8``."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)
    s = str(text).strip()
    try:
        return float(s)
    except ValueError:
        pass
    try:
        return float(Fraction(s))
    except (ValueError, ZeroDivisionError):
        raise InvalidInputError(f"not a number: {text!r}") from None


def parse_list(text, kind=float) -> list:
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [p for p in str(text).replace(";", ",").split(",") if p.strip()]
    if kind is int:
        out = []
        for p in items:
            v = parse_number(p)
            if v != int(v):
                raise InvalidInputError(f"not an integer: {p!r}")
            out.append(int(v))
        return out
    return [parse_number(p) for p in items]


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise InvalidInputError(f"not a boolean: {text!r}")


def read_config_file(path) -> dict:
    """Read ``key = value`` lines (``#`` comments) or a JSON object."""
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    if p.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        data = json.loads(text)
        if not isinstance(data, dict):
            raise InvalidInputError("JSON config must be an object")
        return data
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def parse_overrides(pairs) -> dict:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise InvalidInputError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def resolve(defaults: dict, *layers: dict) -> dict:
    """Merge layers over ``defaults``, coercing each value to its default's type."""
    cfg = dict(defaults)
    for layer in layers:
        for key, value in layer.items():
            if key not in defaults:
                raise InvalidInputError(f"unknown config key {key!r}")
            ref = defaults[key]
            if value is None:
                cfg[key] = None
            elif isinstance(ref, bool):
                cfg[key] = _parse_bool(value)
            elif isinstance(ref, int):
                v = parse_number(value)
                if v != int(v):
                    raise InvalidInputError(f"{key} must be an integer, got {value!r}")
                cfg[key] = int(v)
            elif isinstance(ref, float) or ref is None:
                cfg[key] = parse_number(value)
            else:
                cfg[key] = str(value)
    return cfg


def resolve_chi(cfg: dict, chi_text=None) -> float:
    text = str(cfg["chi"] if chi_text is None else chi_text).strip().lower()
    if text == "optimal":
        chi, _ = chi_perfectly_resolved(cfg["U"], cfg["L"], cfg["delta"], cfg["alpha"], cfg["N"])
        return chi
    chi = parse_number(text)
    if chi < 0:
        raise InvalidInputError("chi must be nonnegative")
    return chi


def build_simulation(cfg: dict, chi: float | None = None):
    """Construct ``(FlowState, SolverConfig)`` from a resolved simulation config."""
    grid = GridSpec(cfg["dim"], cfg["n"], cfg["L"])
    params = FilterParams(cfg["delta"], cfg["alpha"], cfg["N"])
    u0 = make_initial_condition(
        cfg["ic"],
        grid,
        seed=cfg["seed"],
        slope=cfg["ic_slope"],
        band=(cfg["ic_band_lo"], cfg["ic_band_hi"]),
        energy=cfg["ic_energy"],
    )
    amp = cfg["forcing_amplitude"]
    amp = "auto" if str(amp).strip().lower() == "auto" else parse_number(amp)
    forcing = ForcingSpec(cfg["forcing"], amp, shell=cfg["forcing_shell"], seed=cfg["forcing_seed"])
    state = FlowState(
        grid=grid,
        u=u0,
        nu=cfg["nu"],
        chi=resolve_chi(cfg) if chi is None else chi,
        filter=params,
        forcing=forcing,
    )
    solver = SolverConfig(
        dt=cfg["dt"],
        t_end=cfg["t_end"],
        dealias=cfg["dealias"],
        linear_terms_exact=cfg["linear_terms_exact"],
        record_every=cfg["record_every"],
        seed=cfg["seed"],
        nonlinear=cfg["nonlinear"],
    )
    return state, solver
