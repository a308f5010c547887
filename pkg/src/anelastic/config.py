"""Run configuration: INI-style text with sections, validated into :class:`RunConfig`.

Keys may appear before the first section header; every key name is unique
across sections, so ``--set key=value`` overrides need no section prefix.
"""
from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, fields, replace

from .diagnostics.hardy import DEFAULT_EPS, DEFAULT_K

SECTIONS = {
    "model": ("alpha", "eps", "delta", "m_rho"),
    "discretization": ("m", "dt", "scheme", "theta"),
    "run": ("T", "cadence", "reproject_every", "guard_factor"),
    "initial": ("family", "seed", "decay", "amplitude", "m_data", "psi", "k2", "initial_path"),
    "forcing": ("forcing", "forcing_psi", "forcing_pressure", "forcing_profile"),
    "sweep": ("eps_list", "m_list", "bound"),
    "hardy": ("hardy_k", "hardy_eps", "hardy_bound", "hardy_functions"),
    "stability": ("perturbation", "perturbation_seed"),
    "manufactured": ("manufactured_m", "manufactured_target"),
    "tolerances": ("div_tol", "law_tol", "identity_tol", "scaling_tol", "dt_tol", "rate_tol"),
    "output": ("output",),
}
_TOP = "__top__"


class ConfigError(ValueError):
    """All violations found in a configuration."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.violations))


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters (defaults documented in the README)."""

    alpha: float = 2.0
    eps: float = 0.5
    delta: float = 0.0
    m_rho: int = 0
    m: int = 8
    dt: float = 1e-3
    scheme: str = "imex"
    theta: float = 0.5
    T: float = 1.0
    cadence: float = 10.0
    reproject_every: int = 0
    guard_factor: float = 1e6
    family: str = "random"
    seed: int = 0
    decay: float = 3.0
    amplitude: float = 1.0
    m_data: int = 16
    psi: str = "sin(pi*z)**2*cos(pi*x)"
    k2: int = 1
    initial_path: str = ""
    forcing: str = "none"
    forcing_psi: str = "exp(-t)*sin(pi*z)**2"
    forcing_pressure: str = "0"
    forcing_profile: str = ""
    eps_list: tuple = (1.0, 0.1, 0.01)
    m_list: tuple = (4, 8, 16)
    bound: float = 10.0
    hardy_k: tuple = DEFAULT_K
    hardy_eps: tuple = DEFAULT_EPS
    hardy_bound: float = 2.0
    hardy_functions: tuple = ()
    perturbation: float = 1e-3
    perturbation_seed: int = 1
    manufactured_m: tuple = (4, 8)
    manufactured_target: float = 100.0
    div_tol: float = 1e-6
    law_tol: float = 1e-8
    identity_tol: float = 1e-8
    scaling_tol: float = 0.2
    dt_tol: float = 0.05
    rate_tol: float = 0.05
    output: str = "runs/out"

    def density_kwargs(self):
        return {"alpha": self.alpha, "eps": self.eps, "delta": self.delta, "m_rho": self.m_rho or None}

    def family_params(self):
        return {
            "seed": self.seed,
            "decay": self.decay,
            "amplitude": self.amplitude,
            "m_data": self.m_data,
            "psi": self.psi,
            "k2": self.k2,
            "path": self.initial_path,
        }


_TYPES = {f.name: f.type for f in fields(RunConfig)}
_DEFAULTS = RunConfig()
_SECTION_OF = {k: s for s, keys in SECTIONS.items() for k in keys}


def _convert(key, raw):
    kind = _TYPES[key]
    default = getattr(_DEFAULTS, key)
    raw = raw.strip()
    if isinstance(default, tuple):
        items = [s.strip() for s in raw.replace(";", ",").split(",") if s.strip()]
        if key == "hardy_functions":
            return tuple(items)
        conv = int if key in ("m_list", "manufactured_m") else float
        return tuple(conv(s) for s in items)
    if kind == "int" or isinstance(default, int) and not isinstance(default, bool):
        as_float = float(raw)
        if as_float != int(as_float):
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(as_float)
    if isinstance(default, float):
        return float(raw)
    return raw


def _validate(cfg):
    bad = []
    if not cfg.alpha >= 0:
        bad.append(f"alpha must be non-negative (got {cfg.alpha})")
    if not cfg.eps > 0:
        bad.append("eps must be positive; use sweep-eps toward 0")
    elif cfg.eps > 1:
        bad.append(f"eps must not exceed 1 (got {cfg.eps})")
    if not cfg.delta >= 0:
        bad.append(f"delta must be non-negative (got {cfg.delta})")
    if cfg.m_rho < 0:
        bad.append(f"m_rho must be non-negative, 0 meaning 2m (got {cfg.m_rho})")
    if not cfg.m >= 1:
        bad.append(f"m must be at least 1 for dynamics runs (got {cfg.m})")
    if not cfg.dt > 0:
        bad.append(f"dt must be positive: invariant dt > 0 violated (got {cfg.dt})")
    if cfg.scheme not in ("imex", "rk4"):
        bad.append(f"scheme must be 'imex' or 'rk4' (got {cfg.scheme!r})")
    if not 0 <= cfg.theta <= 1:
        bad.append(f"theta must lie in [0, 1] (got {cfg.theta})")
    if not cfg.T >= 0:
        bad.append(f"T must be non-negative: invariant T >= 0 violated (got {cfg.T})")
    if not cfg.cadence > 0:
        bad.append(f"cadence must be positive (got {cfg.cadence})")
    if cfg.reproject_every < 0:
        bad.append(f"reproject_every must be non-negative, 0 meaning off (got {cfg.reproject_every})")
    if not cfg.guard_factor > 1:
        bad.append(f"guard_factor must exceed 1 (got {cfg.guard_factor})")
    if cfg.family not in ("shear", "stream", "random", "file"):
        bad.append(f"family must be one of shear, stream, random, file (got {cfg.family!r})")
    if cfg.family == "file" and not cfg.initial_path:
        bad.append("family 'file' needs initial_path")
    if cfg.forcing not in ("none", "manufactured"):
        bad.append(f"forcing must be 'none' or 'manufactured' (got {cfg.forcing!r})")
    if any(not e > 0 for e in cfg.eps_list):
        bad.append("eps_list entries must be positive; use sweep-eps toward 0")
    if any(e > 1 for e in cfg.eps_list):
        bad.append("eps_list entries must not exceed 1")
    if any(m < 1 for m in cfg.m_list) or any(m < 1 for m in cfg.manufactured_m):
        bad.append("m_list and manufactured_m entries must be at least 1")
    if any(k == -1 for k in cfg.hardy_k):
        bad.append("hardy_k must not contain -1")
    if any(e < 0 for e in cfg.hardy_eps):
        bad.append("hardy_eps entries must be non-negative")
    for name in ("bound", "hardy_bound", "perturbation", "manufactured_target", "div_tol", "law_tol",
                 "identity_tol", "scaling_tol", "dt_tol", "rate_tol"):
        if not getattr(cfg, name) > 0:
            bad.append(f"{name} must be positive (got {getattr(cfg, name)})")
    return bad


def _parse_pairs(text):
    body = text if text.lstrip().startswith("[") else f"[{_TOP}]\n{text}"
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"),
                                       inline_comment_prefixes=("#",), strict=True)
    parser.optionxform = str
    parser.read_string(body)
    pairs = []
    for section in parser.sections():
        for key, value in parser.items(section):
            pairs.append((section, key, value))
    return pairs


def parse_config(text, overrides=()):
    """Parse and validate config text; ``overrides`` are ``key=value`` strings applied last.

    Raises
    ------
    ConfigError
        Listing every violation (unknown keys, malformed values, invariants).
    """
    bad = []
    values = {}
    try:
        pairs = _parse_pairs(text)
    except configparser.Error as exc:
        raise ConfigError([f"malformed config: {exc}"]) from exc
    extra = []
    for item in overrides:
        if "=" not in item:
            bad.append(f"override {item!r} is not of the form key=value")
            continue
        k, v = item.split("=", 1)
        extra.append(("override", k.strip(), v))
    for section, key, raw in pairs + extra:
        if key not in _TYPES:
            where = {_TOP: " at top level", "override": " in overrides"}.get(section, f" in [{section}]")
            bad.append(f"unknown key {key!r}{where}")
            continue
        if section not in (_TOP, "override") and _SECTION_OF[key] != section:
            bad.append(f"key {key!r} belongs to section [{_SECTION_OF[key]}], not [{section}]")
            continue
        try:
            values[key] = _convert(key, raw)
        except ValueError as exc:
            bad.append(f"{key}: {exc}")
    cfg = replace(_DEFAULTS, **values)
    bad += _validate(cfg)
    if bad:
        raise ConfigError(bad)
    return cfg


def _format(value):
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_text(cfg):
    """Canonical text form; ``parse_config(to_text(cfg)) == cfg``."""
    d = asdict(cfg)
    lines = []
    for section, keys in SECTIONS.items():
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {_format(d[k])}" for k in keys)
        lines.append("")
    return "\n".join(lines)
