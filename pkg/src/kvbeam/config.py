"""
Run configuration: INI-style ``[section]`` headers with ``key = value`` lines.

Unknown sections and keys are rejected. Every error names the section, the
key and, when it can be located, the line of the offending entry.

Example::

    [beam]
    ell = 1.0
    rho = 1.0
    mu = 0.1
    r = 1.0
    kappa = 1.0        ; or a path to an x,value CSV table

    [mesh]
    n_elems = 32

    [time]
    T = 1.0
    n_steps = 2000
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .constants import TABLE_ROWS
from .model import BeamCoefficients, Bounds, Coefficient, ModelError, SourceSignal, SpaceMesh, TimeGrid

REQUIRED_SECTIONS = ("beam", "mesh", "time")
SOURCE_KINDS = ("zero", "ramp", "sin2", "tsin2", "csv")


class ConfigError(ValueError):
    """Invalid configuration (maps to exit code 2)."""


def _num(v) -> float:
    return float(v)


def _pos(v) -> float:
    x = float(v)
    if not x > 0:
        raise ValueError("must be positive")
    return x


def _nonneg(v) -> float:
    x = float(v)
    if x < 0:
        raise ValueError("must be nonnegative")
    return x


def _posint(v) -> int:
    x = int(v)
    if x < 1:
        raise ValueError("must be a positive integer")
    return x


def _int(v) -> int:
    return int(v)


def _bool(v) -> bool:
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError("must be a boolean")


def _choice(*opts):
    def conv(v):
        if v not in opts:
            raise ValueError(f"must be one of {', '.join(opts)}")
        return v
    return conv


def _rows(v):
    out = []
    for item in str(v).split(","):
        if not item.strip():
            continue
        T, a = item.split(":")
        out.append((float(T), float(a)))
    if not out:
        raise ValueError("needs at least one T:alpha pair")
    return tuple(out)


def _coef(v):
    s = str(v).strip()
    try:
        return float(s)
    except ValueError:
        return s  # resolved as a CSV path later


def _opt(conv):
    def f(v):
        return None if str(v).strip().lower() in ("", "none") else conv(v)
    return f


# section -> key -> (converter, default)
SCHEMA = {
    "beam": {
        "ell": (_pos, 1.0), "rho": (_coef, 1.0), "mu": (_coef, 0.1), "r": (_coef, 1.0), "kappa": (_coef, 1.0),
        **{k: (_opt(_num), None) for k in ("rho0", "rho1", "mu0", "mu1", "r0", "r1", "kappa0", "kappa1")},
    },
    "mesh": {"n_elems": (_posint, 32)},
    "time": {"T": (_pos, 1.0), "n_steps": (_posint, 2000)},
    "source": {"kind": (_choice(*SOURCE_KINDS), "tsin2"), "path": (_opt(str), None), "amplitude": (_num, 1.0)},
    "inverse": {
        "problem": (_choice("IBVP1", "IBVP2"), "IBVP1"), "alpha": (_nonneg, 0.0),
        "reg_order": (_opt(_int), None), "step_rule": (_choice("constant", "fixed", "backtracking", "exact"), "exact"),
        "step": (_opt(_pos), None), "max_iters": (_posint, 200), "morozov_tau": (_pos, 1.2),
        "grad_tol": (_pos, 1e-6), "smoothing": (_int, 5), "directions": (_choice("gradient", "cg"), "gradient"),
        "refine": (_posint, 2),
    },
    "noise": {"delta": (_nonneg, 0.01), "seed": (_int, 12345)},
    "gradcheck": {"n_directions": (_posint, 5), "seed": (_int, 1), "eps_rel": (_pos, 1e-5)},
    "constants": {"alpha": (_opt(_pos), None)},
    "stability": {"ell": (_pos, 0.5), "r0": (_pos, 1.0), "published_rounding": (_bool, True),
                  "rows": (_rows, TABLE_ROWS)},
    "output": {"directory": (str, "out")},
}


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration; ``sections`` maps section -> {key: value}."""

    sections: dict
    path: Optional[Path] = None

    def __getitem__(self, section):
        return self.sections[section]

    def coefficients(self) -> BeamCoefficients:
        b = self["beam"]
        base = self.path.parent if self.path else Path(".")
        coefs = {}
        for name in ("rho", "mu", "r", "kappa"):
            v = b[name]
            if isinstance(v, str):
                p = Path(v) if Path(v).is_absolute() else base / v
                try:
                    coefs[name] = Coefficient.from_csv(p)
                except (OSError, ModelError, ValueError) as exc:
                    raise ConfigError(f"[beam] {name}: cannot load table {p}: {exc}") from exc
            else:
                coefs[name] = Coefficient.constant(v)
        c = BeamCoefficients(b["ell"], **coefs)
        given = {k: b[k] for k in Bounds.__dataclass_fields__ if b[k] is not None}
        if given:
            c = BeamCoefficients(b["ell"], bounds=Bounds(**{**c.bounds.as_dict(), **given}), **coefs)
        return c

    def mesh(self) -> SpaceMesh:
        return SpaceMesh(self["beam"]["ell"], self["mesh"]["n_elems"])

    def grid(self) -> TimeGrid:
        return TimeGrid(self["time"]["T"], self["time"]["n_steps"])

    def source_function(self):
        """Callable ``g(t)`` of the configured true source."""
        s, T = self["source"], self["time"]["T"]
        a = s["amplitude"]
        kind = s["kind"]
        if kind == "zero":
            return lambda t: np.zeros_like(np.asarray(t, dtype=float))
        if kind == "ramp":
            return lambda t: a * (np.asarray(t) / T) ** 2
        if kind == "sin2":
            return lambda t: a * np.sin(np.pi * np.asarray(t) / T) ** 2
        if kind == "tsin2":
            return lambda t: a * np.asarray(t) * np.sin(np.pi * np.asarray(t) / T) ** 2
        if s["path"] is None:
            raise ConfigError("[source] path: required when kind = csv")
        p = Path(s["path"])
        if not p.is_absolute() and self.path is not None:
            p = self.path.parent / p
        try:
            tab = Coefficient.from_csv(p)
        except (OSError, ModelError, ValueError) as exc:
            raise ConfigError(f"[source] path: cannot load {p}: {exc}") from exc
        return lambda t: a * tab(t)

    def source(self, klass: str = "G1") -> SourceSignal:
        return SourceSignal.from_function(self.grid(), self.source_function(), klass)

    def as_dict(self) -> dict:
        def plain(v):
            if isinstance(v, tuple):
                return [plain(x) for x in v]
            return v
        return {s: {k: plain(v) for k, v in kv.items()} for s, kv in self.sections.items()}


def _line_index(text: str) -> dict:
    """(section, key) -> 1-based line number, for diagnostics."""
    idx, sec = {}, None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            sec = m.group(1).strip()
            idx[(sec, None)] = n
            continue
        m = re.match(r"([^=:;#\s][^=:]*?)\s*[=:]", s)
        if m and sec is not None:
            idx[(sec, m.group(1).strip())] = n
    return idx


def parse_config_text(text: str, path: Optional[Path] = None) -> RunConfig:
    where = str(path) if path else "<config>"
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    cp.optionxform = str  # keys are case sensitive (T)
    try:
        cp.read_string(text, source=where)
    except configparser.Error as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    lines = _line_index(text)

    def loc(sec, key=None):
        n = lines.get((sec, key))
        return f"{where}:{n}" if n else where

    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"{loc(sec)}: unknown section [{sec}]")
    for sec in REQUIRED_SECTIONS:
        if not cp.has_section(sec):
            raise ConfigError(f"{where}: missing required section [{sec}]")
    out = {}
    for sec, keys in SCHEMA.items():
        vals = {}
        raw = cp[sec] if cp.has_section(sec) else {}
        for key in raw:
            if key not in keys:
                raise ConfigError(f"{loc(sec, key)}: unknown key '{key}' in [{sec}]")
        for key, (conv, default) in keys.items():
            if key in raw:
                try:
                    vals[key] = conv(raw[key])
                except (ValueError, TypeError) as exc:
                    raise ConfigError(f"{loc(sec, key)}: [{sec}] {key} = {raw[key]!r}: {exc}") from exc
            else:
                vals[key] = default
        out[sec] = vals
    if out["time"]["n_steps"] < 4:
        raise ConfigError(f"{loc('time', 'n_steps')}: [time] n_steps must be >= 4")
    return RunConfig(out, path)


def parse_config(path) -> RunConfig:
    """Read and validate a configuration file.

    Raises
    ------
    ConfigError
        Unreadable file, unknown section/key, missing section or bad value.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read configuration: {exc}") from exc
    return parse_config_text(text, path)
