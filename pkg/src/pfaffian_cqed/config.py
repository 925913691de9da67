"""INI-style run configuration: typed sections, strict key checking, flag overrides.

Grids accept a comma list (``0, 0.5, 1``), ``linspace(a, b, n)`` or
``logspace(a, b, n)`` (exponents, base 10). ``alpha`` accepts fractions such
as ``1/4``. Booleans follow configparser (yes/no, true/false, 1/0).
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ParameterError


class ConfigError(ParameterError):
    pass


def _float(text: str) -> float:
    text = text.strip()
    try:
        return float(Fraction(text)) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a number: {text!r}") from None


def _int(text: str) -> int:
    value = _float(text)
    if not value.is_integer():
        raise ValueError(f"not an integer: {text!r}")
    return int(value)


def _opt_int(text: str):
    return None if text.strip().lower() in ("", "none", "auto") else _int(text)


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "none", "auto") else _float(text)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "yes", "true", "on"):
        return True
    if t in ("0", "no", "false", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _str(text: str) -> str:
    return text.strip()


def _u3(text: str):
    t = text.strip().lower()
    if t in ("hardcore", "hard-core", "inf", "none"):
        return None
    return _float(text)


_SPACE = re.compile(r"^\s*(linspace|logspace)\s*\(([^)]*)\)\s*$")


def _grid(text: str) -> tuple:
    m = _SPACE.match(text)
    if m:
        parts = [p for p in m.group(2).split(",") if p.strip()]
        if len(parts) != 3:
            raise ValueError(f"{m.group(1)} needs (start, stop, num): {text!r}")
        a, b, n = _float(parts[0]), _float(parts[1]), _int(parts[2])
        if n < 1:
            raise ValueError("grid needs at least one point")
        fn = np.linspace if m.group(1) == "linspace" else np.logspace
        return tuple(float(x) for x in fn(a, b, n))
    values = tuple(_float(p) for p in text.split(",") if p.strip())
    if not values:
        raise ValueError("empty grid")
    return values


def _pair(text: str) -> tuple:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if len(parts) != 2:
        raise ValueError(f"expected two integers, got {text!r}")
    return (_int(parts[0]), _int(parts[1]))


SCHEMA = {
    "qubit": {
        "Ec": (_float, 0.05), "EL": (_float, 1.4), "phi_x": (_opt_float, None),
        "EJ": (_float, 1.0), "basis_size": (_int, 80), "levels": (_int, 6),
        "phi_min": (_float, 2.0), "phi_max": (_float, 3.2),
    },
    "qubit_sweep": {
        "EL_grid": (_grid, _grid("linspace(0.8, 3.0, 23)")),
        "phi_grid": (_grid, _grid("linspace(2.0, 3.2, 61)")),
    },
    "coupling": {
        "M": (_float, 3e-6), "levels_per_qubit": (_int, 6), "t_max": (_opt_float, None),
        "n_steps": (_int, 2000), "initial": (_pair, (1, 1)),
    },
    "lattice": {
        "Lx": (_int, 4), "Ly": (_int, 4), "alpha": (_float, 0.25), "N": (_int, 4),
        "n_max": (_opt_int, None), "scheme": (_str, "NN"), "R": (_opt_int, None),
    },
    "interaction": {"U2": (_float, 0.0), "U3": (_u3, None)},
    "solver": {
        "k": (_int, 13), "tol": (_float, 1e-10), "block_size": (_int, 4),
        "seed": (_int, 12345), "max_restarts": (_int, 50),
    },
    "twist": {
        "theta_x": (_float, 0.0), "theta_y": (_float, 0.0), "grid": (_int, 8),
        "manifold": (_int, 3), "refine": (_bool, True),
    },
    "sweep": {
        "U2_grid": (_grid, _grid("linspace(0, 10, 11)")),
        "U3_grid": (_grid, _grid("logspace(0, 2, 13)")),
        "scheme": (_str, "NNN"),
    },
    "feasibility": {
        "J_MHz": (_float, 10.0), "EJ_GHz": (_grid, (10.0, 20.0, 30.0, 40.0, 50.0)),
        "threshold": (_float, 60.0),
    },
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)
    source: str | None = None
    raw: dict = field(default_factory=dict)  # text as given, for the manifest

    def section(self, name: str) -> dict:
        return dict(self.values[name])

    def get(self, section: str, key: str):
        return self.values[section][key]

    def to_dict(self) -> dict:
        out = {}
        for sec, items in self.values.items():
            out[sec] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in items.items()}
        return out


def _parse_value(section: str, key: str, text: str):
    if section not in SCHEMA:
        raise ConfigError(f"unknown config section [{section}]; known: {', '.join(SCHEMA)}")
    if key not in SCHEMA[section]:
        raise ConfigError(f"unknown key {key!r} in section [{section}]; "
                          f"known: {', '.join(SCHEMA[section])}")
    parser, _ = SCHEMA[section][key]
    try:
        return parser(text)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from None


def defaults() -> RunConfig:
    return RunConfig({sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()})


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the file at ``path``, then ``{"section.key": text}`` overrides."""
    cfg = defaults()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        cp = configparser.ConfigParser(interpolation=None, default_section="__unused__")
        cp.optionxform = str
        try:
            cp.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        for sec in cp.sections():
            for key, text in cp.items(sec):
                cfg.values.setdefault(sec, {})
                cfg.values[sec][key] = _parse_value(sec, key, text)
                cfg.raw[f"{sec}.{key}"] = text
        cfg.source = str(path)
    for dotted, text in (overrides or {}).items():
        if "." not in dotted:
            raise ConfigError(f"override {dotted!r} must look like section.key")
        sec, key = dotted.split(".", 1)
        cfg.values[sec][key] = _parse_value(sec, key, str(text))
        cfg.raw[dotted] = str(text)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    v = cfg.values
    for sec, key in (("qubit", "Ec"), ("qubit", "EL"), ("solver", "tol")):
        if not v[sec][key] > 0 or not math.isfinite(v[sec][key]):
            raise ConfigError(f"[{sec}] {key} must be positive and finite")
    if v["qubit"]["phi_min"] >= v["qubit"]["phi_max"]:
        raise ConfigError("[qubit] phi_min must be below phi_max")
    if v["twist"]["grid"] < 2:
        raise ConfigError("[twist] grid must be at least 2")
    if v["solver"]["k"] < 1:
        raise ConfigError("[solver] k must be positive")
    if v["feasibility"]["J_MHz"] < 0:
        raise ConfigError("[feasibility] J_MHz must be non-negative")
