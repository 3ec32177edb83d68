"""Study configuration: INI file sections plus command-line overrides.

A file may hold a ``[common]`` section and one section per study kind
(``convergence``, ``tau-sweep``, ``robustness``, ``adapt``); keys in the
study section win over ``[common]``, and explicit CLI flags win over both.

Keys and defaults::

    problem          poisson-sine-2d (adapt: poisson-gauss-2d)
    variant          both            first | second | both
    levels           8,16,32,64      n per side; 3D problems default to 4,8,16
    tau              (problem default)
    solver           direct          direct | cg | minres | bicgstab
    tol              1e-10
    distortion       0.3             robustness study, fraction of local edge
    seed             42
    family           distortion      robustness study: distortion | stretch
    stretch_factors  10,1000
    tau_grid         0.1,1,10,100,1000,10000
    level            16              mesh level of the tau sweep
    epsilon          (problem default)
    max_iters        12
    base_n           8               adaptivity base mesh
    exponent_mode    paper           paper | richardson
    out              results
    plot             true            write SVG next to the CSV
"""

import configparser
from dataclasses import dataclass, field, fields, replace
from typing import Optional, Tuple

STUDY_KINDS = ("convergence", "tau-sweep", "robustness", "adapt")
VARIANTS = ("first", "second", "both")


class ConfigError(ValueError):
    pass


def _floats(text):
    return tuple(float(v) for v in str(text).replace(";", ",").split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in str(text).replace(";", ",").split(",") if v.strip())


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class StudyConfig:
    kind: str = "convergence"
    problem: str = "poisson-sine-2d"
    variant: str = "both"
    levels: Optional[Tuple[int, ...]] = None
    tau: Optional[float] = None
    solver: str = "direct"
    tol: float = 1e-10
    distortion: float = 0.3
    seed: int = 42
    family: str = "distortion"
    stretch_factors: Tuple[float, ...] = (10.0, 1000.0)
    tau_grid: Tuple[float, ...] = (1e-1, 1.0, 1e1, 1e2, 1e3, 1e4)
    level: int = 16
    epsilon: Optional[float] = None
    max_iters: int = 12
    base_n: int = 8
    exponent_mode: str = "paper"
    out: str = "results"
    plot: bool = True
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def variants(self):
        return ("second", "first") if self.variant == "both" else (self.variant,)

    def resolved_levels(self, dim):
        if self.levels is not None:
            return self.levels
        return (8, 16, 32, 64) if dim == 2 else (4, 8, 16)

    def validate(self):
        if self.kind not in STUDY_KINDS:
            raise ConfigError(f"unknown study kind {self.kind!r}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}")
        if self.kind in ("convergence", "robustness") and self.levels is not None and len(self.levels) < 3:
            raise ConfigError("a rate fit needs at least 3 mesh levels")
        if self.levels is not None and any(n < 1 for n in self.levels):
            raise ConfigError("mesh levels must be positive")
        if any(not t > 0 for t in self.tau_grid):
            raise ConfigError("tau grid values must be positive")
        if self.tau is not None and not self.tau > 0:
            raise ConfigError("tau must be positive")
        if not 0 <= self.distortion < 0.5:
            raise ConfigError("distortion must lie in [0, 0.5)")
        if self.family not in ("distortion", "stretch"):
            raise ConfigError("family must be 'distortion' or 'stretch'")
        if self.exponent_mode not in ("paper", "richardson"):
            raise ConfigError("exponent_mode must be 'paper' or 'richardson'")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be at least 1")
        return self


_PARSERS = {
    "levels": _ints,
    "tau": float,
    "tol": float,
    "distortion": float,
    "seed": int,
    "stretch_factors": _floats,
    "tau_grid": _floats,
    "level": int,
    "epsilon": float,
    "max_iters": int,
    "base_n": int,
    "plot": _bool,
}
# study-specific defaults, applied before the file and the CLI
_KIND_DEFAULTS = {"adapt": {"problem": "poisson-gauss-2d"}}
_KEYS = {f.name for f in fields(StudyConfig)} - {"kind", "extra"}


def parse_values(raw):
    """Typed values from a mapping of strings; unknown keys raise."""
    out = {}
    for key, text in raw.items():
        key = key.replace("-", "_")
        if key not in _KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            out[key] = _PARSERS.get(key, str)(text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {text!r} ({exc})") from None
    return out


def load_config(kind, path=None, overrides=None):
    """Defaults, then ``[common]`` and ``[kind]`` from ``path``, then ``overrides``
    (already typed, ``None`` values ignored)."""
    values = dict(_KIND_DEFAULTS.get(kind, {}))
    if path is not None:
        parser = configparser.ConfigParser()
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None
        for section in ("common", kind):
            if parser.has_section(section):
                values.update(parse_values(dict(parser.items(section))))
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = val
    return replace(StudyConfig(kind=kind), **values).validate()
