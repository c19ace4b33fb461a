"""Line-based experiment configuration.

The format is one ``key = value`` pair per line under ``[section]`` headers.
Blank lines and lines starting with ``#`` or ``;`` are ignored. Parsing
collects every violation (with its line number) before failing, and
:func:`serialize_config` writes the fully resolved configuration in a
canonical form that parses back to the same object.

Example::

    [run]
    command = solve-linear
    seed = 1

    [coefficients]
    preset = const
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import PevoError

COMMANDS = ("solve-linear", "solve-nonlinear", "verify-smoothing", "diagnose-conjugation",
            "check-hypotheses", "sweep")


class ConfigError(PevoError, ValueError):
    """One or more configuration violations; ``errors`` lists ``(line, message)`` pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(f"line {ln}: {msg}" if ln else msg for ln, msg in self.errors))


# --------------------------------------------------------------------------- value types

def _parse_int(text: str) -> int:
    return int(text, 10)


def _parse_float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(text)
    return v


_BOOLS = {"true": True, "yes": True, "on": True, "1": True,
          "false": False, "no": False, "off": False, "0": False}


def _parse_bool(text: str) -> bool:
    return _BOOLS[text.lower()]


def _parse_floats(text: str) -> tuple:
    items = [t.strip() for t in text.split(",")]
    if not items or any(not t for t in items):
        raise ValueError(text)
    return tuple(_parse_float(t) for t in items)


PARSERS = {"int": _parse_int, "float": _parse_float, "bool": _parse_bool, "str": str, "floats": _parse_floats}


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(format_value(v) for v in value)
    return str(value)


# --------------------------------------------------------------------------- schema

# section -> key -> (type, default); a default of ``REQUIRED`` marks a required key
REQUIRED = object()
OPTIONAL = None

FIXED_SCHEMA = {
    "run": {"command": ("str", REQUIRED), "seed": ("int", 0), "output": ("str", OPTIONAL),
            "allow_illposed": ("bool", False)},
    "grid": {"L": ("float", 40.0), "N": ("int", 512)},
    "times": {"T": ("float", 0.1), "dt": ("float", 1e-3)},
    "indices": {"sigma": ("float", OPTIONAL), "m": ("float", OPTIONAL), "m_tilde": ("float", OPTIONAL)},
    "nonlinearity": {"preset": ("str", "none")},
    "smoothing": {"m": ("float", 2.0), "h": ("float", 1.0), "suite": ("int", 1)},
    "conjugation": {"h": ("float", 4.0), "eps": ("float", 1e-2)},
    "sweep": {"h": ("floats", (4.0, 8.0, 16.0, 32.0)), "workers": ("int", 4)},
    "tolerances": {"picard": ("float", 1e-8), "max_iter": ("int", 12), "residual": ("float", 1e-4),
                   "identity": ("float", 1e-8), "envelope": ("float", 1e-6)},
}

COEFFICIENT_PARAMS = {
    "const": {"p": "int", "ap": "float", "wobble": "float", "sigma": "float"},
    "decay3": {"gamma": "float", "sigma": "float", "gamma1": "float", "a0": "float"},
    "kawahara5": {"a": "float", "b": "float", "sigma": "float"},
    "illposed3": {"gamma": "float", "sigma": "float"},
}

DATA_PARAMS = {
    "gaussian": {"amplitude": "float", "width": "float", "center": "float", "xi0": "float"},
    "packet": {"amplitude": "float", "width": "float", "center": "float", "xi0": "float"},
    "schwartz": {"n_bumps": "int", "spread": "float", "real": "bool"},
    "bandlimited": {"n_modes": "int", "xi_cut": "float", "width": "float"},
}

NONLINEARITIES = ("none", "kdv", "kawahara")

SECTION_ORDER = ("run", "grid", "coefficients", "data", "times", "indices", "nonlinearity",
                 "smoothing", "conjugation", "sweep", "tolerances")


# --------------------------------------------------------------------------- config object

@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    seed: int = 0
    output: str | None = None
    allow_illposed: bool = False
    L: float = 40.0
    N: int = 512
    coefficients: str = "const"
    coefficient_params: dict = field(default_factory=dict)
    data: str = "gaussian"
    data_params: dict = field(default_factory=dict)
    T: float = 0.1
    dt: float = 1e-3
    sigma: float | None = None
    m: float | None = None
    m_tilde: float | None = None
    nonlinearity: str = "none"
    smoothing_m: float = 2.0
    smoothing_h: float = 1.0
    smoothing_suite: int = 1
    conjugation_h: float = 4.0
    conjugation_eps: float = 1e-2
    sweep_h: tuple = (4.0, 8.0, 16.0, 32.0)
    sweep_workers: int = 4
    tol_picard: float = 1e-8
    max_iter: int = 12
    tol_residual: float = 1e-4
    tol_identity: float = 1e-8
    tol_envelope: float = 1e-6

    def sections(self) -> dict:
        """Resolved values grouped as in the file, in canonical order."""
        return {
            "run": {"command": self.command, "seed": self.seed, "output": self.output,
                    "allow_illposed": self.allow_illposed},
            "grid": {"L": self.L, "N": self.N},
            "coefficients": {"preset": self.coefficients, **dict(sorted(self.coefficient_params.items()))},
            "data": {"preset": self.data, **dict(sorted(self.data_params.items()))},
            "times": {"T": self.T, "dt": self.dt},
            "indices": {"sigma": self.sigma, "m": self.m, "m_tilde": self.m_tilde},
            "nonlinearity": {"preset": self.nonlinearity},
            "smoothing": {"m": self.smoothing_m, "h": self.smoothing_h, "suite": self.smoothing_suite},
            "conjugation": {"h": self.conjugation_h, "eps": self.conjugation_eps},
            "sweep": {"h": self.sweep_h, "workers": self.sweep_workers},
            "tolerances": {"picard": self.tol_picard, "max_iter": self.max_iter, "residual": self.tol_residual,
                           "identity": self.tol_identity, "envelope": self.tol_envelope},
        }


_FIELD_OF = {
    ("run", "command"): "command", ("run", "seed"): "seed", ("run", "output"): "output",
    ("run", "allow_illposed"): "allow_illposed", ("grid", "L"): "L", ("grid", "N"): "N",
    ("times", "T"): "T", ("times", "dt"): "dt", ("indices", "sigma"): "sigma", ("indices", "m"): "m",
    ("indices", "m_tilde"): "m_tilde", ("nonlinearity", "preset"): "nonlinearity",
    ("smoothing", "m"): "smoothing_m", ("smoothing", "h"): "smoothing_h", ("smoothing", "suite"): "smoothing_suite",
    ("conjugation", "h"): "conjugation_h", ("conjugation", "eps"): "conjugation_eps",
    ("sweep", "h"): "sweep_h", ("sweep", "workers"): "sweep_workers",
    ("tolerances", "picard"): "tol_picard", ("tolerances", "max_iter"): "max_iter",
    ("tolerances", "residual"): "tol_residual", ("tolerances", "identity"): "tol_identity",
    ("tolerances", "envelope"): "tol_envelope",
}


# --------------------------------------------------------------------------- parsing

def _tokenize(text: str, errors: list) -> dict:
    """``{section: {key: (line, raw value)}}`` with syntax errors appended to ``errors``."""
    raw: dict = {}
    section = None
    skipping = False  # inside a rejected header; its keys are not reported again
    for ln, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        if s.startswith("["):
            section, skipping = None, True
            if not s.endswith("]") or len(s) < 3:
                errors.append((ln, f"malformed section header {s!r}"))
                continue
            name = s[1:-1].strip()
            if name not in SECTION_ORDER:
                errors.append((ln, f"unknown section [{name}]"))
            elif name in raw:
                errors.append((ln, f"duplicate section [{name}]"))
            else:
                section, skipping = name, False
                raw[section] = {}
            continue
        if "=" not in s:
            errors.append((ln, f"expected 'key = value', got {s!r}"))
            continue
        key, value = (part.strip() for part in s.split("=", 1))
        if section is None:
            if not skipping:
                errors.append((ln, f"key {key!r} appears before any section header"))
            continue
        if not key:
            errors.append((ln, "empty key"))
            continue
        if key in raw[section]:
            errors.append((ln, f"duplicate key {section}.{key}"))
            continue
        raw[section][key] = (ln, value)
    return raw


def _convert(section, key, kind, ln, value, errors):
    try:
        return PARSERS[kind](value)
    except (ValueError, KeyError):
        errors.append((ln, f"{section}.{key} expects {kind}, got {value!r}"))
        return None


def parse_config(text: str, command: str | None = None) -> ExperimentConfig:
    """Validate ``text`` and fill defaults; raises :class:`ConfigError` listing every violation.

    ``command`` (from the command line) fills ``run.command`` when the file
    omits it and must agree with it otherwise.
    """
    errors: list = []
    raw = _tokenize(text, errors)
    if command is not None:
        given = raw.setdefault("run", {}).get("command")
        if given is None:
            raw["run"]["command"] = (0, command)
        elif given[1] != command:
            errors.append((given[0], f"run.command is {given[1]!r} but the command line asks for {command!r}"))
    kwargs: dict = {}

    for section, keys in FIXED_SCHEMA.items():
        given = raw.get(section, {})
        for key, (ln, value) in given.items():
            if key not in keys:
                errors.append((ln, f"unknown key {section}.{key}"))
        for key, (kind, default) in keys.items():
            if key in given:
                ln, value = given[key]
                v = _convert(section, key, kind, ln, value, errors)
                if v is not None:
                    kwargs[_FIELD_OF[(section, key)]] = v
            elif default is REQUIRED:
                errors.append((0, f"missing required key {section}.{key}"))

    for section, table, field_name in (("coefficients", COEFFICIENT_PARAMS, "coefficients"),
                                       ("data", DATA_PARAMS, "data")):
        given = dict(raw.get(section, {}))
        if "preset" in given:
            ln, preset = given.pop("preset")
            if preset not in table:
                errors.append((ln, f"unknown {section} preset {preset!r}; choose from {', '.join(table)}"))
                continue
        elif section == "coefficients":
            errors.append((0, "missing required key coefficients.preset"))
            continue
        else:
            preset = "gaussian"
        params = {}
        for key, (ln, value) in given.items():
            kind = table[preset].get(key)
            if kind is None:
                errors.append((ln, f"unknown key {section}.{key} for preset {preset!r}"))
                continue
            v = _convert(section, key, kind, ln, value, errors)
            if v is not None:
                params[key] = v
        kwargs[field_name] = preset
        kwargs["coefficient_params" if section == "coefficients" else "data_params"] = params

    _semantic_checks(raw, kwargs, errors)
    if errors:
        raise ConfigError(sorted(errors, key=lambda e: e[0]))
    return ExperimentConfig(**kwargs)


def _line(raw, section, key) -> int:
    return raw.get(section, {}).get(key, (0, None))[0]


def _semantic_checks(raw, kw, errors):
    cmd = kw.get("command")
    if cmd is not None and cmd not in COMMANDS:
        errors.append((_line(raw, "run", "command"), f"run.command must be one of {', '.join(COMMANDS)}, got {cmd!r}"))
    N = kw.get("N")
    if N is not None:
        if N % 2:
            errors.append((_line(raw, "grid", "N"), "grid.N must be even"))
        elif N < 16:
            errors.append((_line(raw, "grid", "N"), "grid.N must be at least 16"))
    positive = [("grid", "L", "L"), ("times", "T", "T"), ("times", "dt", "dt"), ("smoothing", "h", "smoothing_h"),
                ("conjugation", "h", "conjugation_h"), ("conjugation", "eps", "conjugation_eps"),
                ("tolerances", "picard", "tol_picard"), ("tolerances", "residual", "tol_residual"),
                ("tolerances", "identity", "tol_identity"), ("tolerances", "envelope", "tol_envelope"),
                ("tolerances", "max_iter", "max_iter"), ("sweep", "workers", "sweep_workers"),
                ("smoothing", "suite", "smoothing_suite")]
    for section, key, name in positive:
        if name in kw and not kw[name] > 0:
            errors.append((_line(raw, section, key), f"{section}.{key} must be positive"))
    if "T" in kw and "dt" in kw and kw["dt"] > kw["T"]:
        errors.append((_line(raw, "times", "dt"), "times.dt must not exceed times.T"))
    if "sweep_h" in kw and any(h <= 0 for h in kw["sweep_h"]):
        errors.append((_line(raw, "sweep", "h"), "sweep.h values must be positive"))
    nl = kw.get("nonlinearity")
    if nl is not None and nl not in NONLINEARITIES:
        errors.append((_line(raw, "nonlinearity", "preset"),
                       f"nonlinearity.preset must be one of {', '.join(NONLINEARITIES)}, got {nl!r}"))
    seed = kw.get("seed")
    if seed is not None and not 0 <= seed < 2 ** 64:
        errors.append((_line(raw, "run", "seed"), "run.seed must be a 64-bit unsigned integer"))
    if cmd == "solve-nonlinear" and kw.get("nonlinearity", "none") == "none":
        errors.append((_line(raw, "nonlinearity", "preset") or _line(raw, "run", "command"),
                       "solve-nonlinear needs nonlinearity.preset (kdv or kawahara)"))


def load_config(path, command: str | None = None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), command)


# --------------------------------------------------------------------------- serialization

def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text: every section in fixed order, unset optional keys omitted."""
    out = []
    for section, values in cfg.sections().items():
        if out:
            out.append("")
        out.append(f"[{section}]")
        for key, value in values.items():
            if value is not None:
                out.append(f"{key} = {format_value(value)}")
    return "\n".join(out) + "\n"
