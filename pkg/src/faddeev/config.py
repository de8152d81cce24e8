"""Run configuration: a flat INI file with one section per module.

Example::

    [kinematics]
    hbar2_over_m = 41.47

    [discretization]
    preset = desk
    n_alpha = 64

    [run]
    energies = -1.0, 7.17
    incoming = nd, nnp:1, nnp:2
    out = results

Comments start with ``#`` or ``;`` (``;`` also after a value).
Unknown sections or keys and malformed values are rejected with the file
name and line number. ``RunConfig.dump`` writes the fully resolved
configuration back in the same format.
"""

from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kinematics
from .extraction import FitConfig
from .operators import ChannelSet, nd_doublet
from .solver import DESK, PRODUCTION, ScatteringSetup, SolveConfig
from .twobody import MT_SINGLET, MT_TRIPLET, PairPotential

PRESETS = {"desk": DESK, "production": PRODUCTION}
CHANNEL_SETS = {"nd_doublet": nd_doublet}
BREAKUP_METHODS = ("delves", "per_angle")

SOLVE_SECTIONS = {
    "discretization": ("rho_extent_fm", "n_rho", "n_alpha", "rho_ratio", "rho_growth", "alpha_bound_fraction",
                       "bound_r_max_fm", "bound_intervals"),
    "solver": ("tol", "maxiter", "restart", "deflation_modes"),
}
FIT_KEYS = tuple(f.name for f in dataclasses.fields(FitConfig))


class ConfigError(ValueError):
    """Invalid configuration; the message names the file and line when known."""


def _where(path, lines: dict, section: str, key: str | None = None) -> str:
    ln = lines.get((section, key)) or lines.get((section, None))
    return f"{path}:{ln}" if ln else str(path)


def _line_index(text: str) -> dict:
    """``(section, key) -> line number``; ``(section, None)`` for the header."""
    out, section = {}, None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
            out.setdefault((section, None), n)
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", line)
        if m and section is not None:
            out.setdefault((section, m.group(1).strip().lower()), n)
    return out


def _parse_value(kind, text: str):
    text = text.strip()
    if kind is bool:
        low = text.lower()
        if low not in ("true", "false", "yes", "no", "1", "0"):
            raise ValueError(f"expected a boolean, got {text!r}")
        return low in ("true", "yes", "1")
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    if kind is tuple:
        return tuple(float(v) for v in text.split(","))
    return text


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(_format_value(x) for x in v)
    return str(v)


def _parse_potential(text: str) -> PairPotential:
    """``"strength:mu, strength:mu"`` with strengths in MeV fm and ``mu`` in 1/fm."""
    terms = []
    for part in text.split(","):
        s, m = part.split(":")
        terms.append((float(s), float(m)))
    return PairPotential(tuple(terms))


def _format_potential(p: PairPotential) -> str:
    return ", ".join(f"{s!r}:{m!r}" for s, m in p.terms)


@dataclass
class RunConfig:
    """Everything a run needs. Energies are center-of-mass values in MeV unless ``frame = lab``."""

    hbar2_over_m: float = kinematics.HBARC2_OVER_M_NUCLEON
    masses: tuple = (1.0, 1.0, 1.0)
    singlet: PairPotential = MT_SINGLET
    triplet: PairPotential = MT_TRIPLET
    channels: str = "nd_doublet"
    solve: SolveConfig = DESK
    fit: FitConfig = field(default_factory=FitConfig)
    energies: tuple = ()
    frame: str = "cm"
    scan: tuple = ()
    incoming: tuple = ("nd",)
    out: str = "results"
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.hbar2_over_m <= 0:
            raise ConfigError("hbar2_over_m must be positive")
        if len(self.masses) != 3 or min(self.masses) <= 0:
            raise ConfigError("masses needs three positive values (units of the nucleon mass)")
        if self.channels not in CHANNEL_SETS:
            raise ConfigError(f"unknown channel set {self.channels!r}; known: {', '.join(CHANNEL_SETS)}")
        if self.frame not in ("cm", "lab"):
            raise ConfigError("frame must be cm or lab")
        if self.scan and (len(self.scan) != 3 or self.scan[2] <= 0 or self.scan[1] < self.scan[0]):
            raise ConfigError("scan needs start, stop, step with step > 0 and stop >= start")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.fit.breakup_method not in BREAKUP_METHODS:
            raise ConfigError(f"breakup_method must be one of {', '.join(BREAKUP_METHODS)}")
        for sel in self.incoming:
            if sel != "nd" and not re.fullmatch(r"nnp:[1-9]\d*", sel):
                raise ConfigError(f"incoming selector {sel!r} is not nd or nnp:n")
        s = self.solve
        if s.n_rho < 4 or s.n_alpha < 4:
            raise ConfigError("n_rho and n_alpha must be at least 4")
        if s.rho_extent_fm <= 0 or s.tol <= 0 or s.maxiter < 1:
            raise ConfigError("rho_extent_fm, tol and maxiter must be positive")
        for name in ("window", "rho_window"):
            lo, hi = getattr(self.fit, name)
            if not 0 < lo < hi <= 1:
                raise ConfigError(f"{name} must satisfy 0 < lo < hi <= 1 (fractions of the box edge)")

    @property
    def mass_system(self) -> kinematics.MassSystem:
        m = 1.0 / self.hbar2_over_m
        return kinematics.MassSystem(*(m * x for x in self.masses))

    def channel_set(self) -> ChannelSet:
        return CHANNEL_SETS[self.channels]()

    def setup(self) -> ScatteringSetup:
        return ScatteringSetup.build(self.solve, self.mass_system, self.channel_set(), [self.singlet, self.triplet])

    def energy_list(self) -> list[float]:
        """Configured energies followed by the scan grid, in the configured frame."""
        out = list(self.energies)
        if self.scan:
            start, stop, step = self.scan
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            out += [float(start + i * step) for i in range(n)]
        return out

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read configuration ({exc.strerror})") from exc
        return cls.parse(text, str(path))

    @classmethod
    def parse(cls, text: str, name: str = "<config>") -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
        try:
            cp.read_string(text, source=name)
        except configparser.Error as exc:
            raise ConfigError(f"{name}: {exc}".replace("\n", " ")) from exc
        lines = _line_index(text)
        known = {"kinematics", "twobody", "operators", "discretization", "solver", "extraction", "run"}
        for sec in cp.sections():
            if sec.lower() not in known:
                raise ConfigError(f"{_where(name, lines, sec.lower())}: unknown section [{sec}]")
        get = {s.lower(): dict(cp[s]) for s in cp.sections()}
        kw: dict = {}

        def take(section, key, conv):
            items = get.get(section, {})
            if key not in items:
                return None
            try:
                return conv(items.pop(key))
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"{_where(name, lines, section, key)}: bad value for {key}: {exc}") from exc

        def put(section, key, conv, dest=None):
            v = take(section, key, conv)
            if v is not None:
                kw[dest or key] = v

        put("kinematics", "hbar2_over_m", float)
        put("kinematics", "masses", lambda t: _parse_value(tuple, t))
        put("twobody", "singlet", _parse_potential)
        put("twobody", "triplet", _parse_potential)
        put("operators", "channels", str.strip)

        preset = take("discretization", "preset", str.strip) or "desk"
        if preset not in PRESETS:
            raise ConfigError(f"{_where(name, lines, 'discretization', 'preset')}: unknown preset {preset!r}")
        solve = {}
        for sec, keys in SOLVE_SECTIONS.items():
            for k in keys:
                v = take(sec, k, lambda t, k=k: _parse_value(type(getattr(DESK, k)), t))
                if v is not None:
                    solve[k] = v
        kw["solve"] = dataclasses.replace(PRESETS[preset], **solve)

        fit = {}
        for k in FIT_KEYS:
            default = getattr(FitConfig(), k)
            v = take("extraction", k, lambda t, d=default: _parse_value(type(d), t))
            if v is not None:
                if isinstance(default, tuple) and len(v) != len(default):
                    raise ConfigError(f"{_where(name, lines, 'extraction', k)}: {k} needs {len(default)} values")
                fit[k] = v
        kw["fit"] = FitConfig(**fit)

        put("run", "energies", lambda t: _parse_value(tuple, t) if t.strip() else ())
        put("run", "frame", str.strip)
        put("run", "scan", lambda t: _parse_value(tuple, t) if t.strip() else ())
        put("run", "incoming", lambda t: tuple(s.strip() for s in t.split(",") if s.strip()))
        put("run", "out", str.strip)
        put("run", "workers", int)

        for sec, rest in get.items():
            for key in rest:
                raise ConfigError(f"{_where(name, lines, sec, key)}: unknown key {key!r} in [{sec}]")
        try:
            return cls(**kw)
        except ConfigError as exc:
            raise ConfigError(f"{name}: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"{name}: {exc}") from exc

    def dump(self) -> str:
        """Resolved configuration in the input format (every key explicit)."""
        cp = configparser.ConfigParser(interpolation=None)
        cp["kinematics"] = {"hbar2_over_m": _format_value(self.hbar2_over_m), "masses": _format_value(self.masses)}
        cp["twobody"] = {"singlet": _format_potential(self.singlet), "triplet": _format_potential(self.triplet)}
        cp["operators"] = {"channels": self.channels}
        for sec, keys in SOLVE_SECTIONS.items():
            cp[sec] = {k: _format_value(getattr(self.solve, k)) for k in keys}
        cp["extraction"] = {k: _format_value(getattr(self.fit, k)) for k in FIT_KEYS}
        cp["run"] = {"energies": _format_value(self.energies), "frame": self.frame, "scan": _format_value(self.scan),
                     "incoming": ", ".join(self.incoming), "out": self.out, "workers": str(self.workers)}
        lines = []
        for sec in cp.sections():
            lines.append(f"[{sec}]")
            lines += [f"{k} = {v}" for k, v in cp[sec].items()]
            lines.append("")
        return "\n".join(lines)

    def write(self, out_dir) -> Path:
        path = Path(out_dir) / "resolved_config.ini"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dump(), encoding="utf-8")
        return path
