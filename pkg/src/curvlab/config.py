"""INI-style run configuration for the command line tool.

Sections: [manifold] (n plus exactly one of preset/h, optional
k_override), [curvature] (K, required), [policy] (tolerances, scan
horizon, grid sizes, seed, delta), [output] (format, path).
Expressions may be quoted; quotes are stripped.  Every policy field
has a default, so a minimal config is just the manifold and K.
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field

from . import manifold as mf
from .quadrature import ClassifyPolicy, LimitPolicy
from .criteria import ScanPolicy

__all__ = ["ConfigError", "ConfigParseError", "ValidationError",
           "Policies", "OutputSpec", "Config", "load_config",
           "build_manifold", "build_curvature"]


class ConfigError(Exception):
    pass


class ConfigParseError(ConfigError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(ConfigError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


@dataclass
class Policies:
    seed: int = 0
    r_max: float = 10.0          # geometry series horizon
    n_grid: int = 200
    scan_r_min: float = 0.1
    scan_r_max: float = 100.0    # criteria scan horizon
    scan_points: int = 64
    delta: float = 0.5           # growth/nonexistence exponent parameter
    u0: float = 1.0
    solve_r_max: float = 10.0
    solve_tol: float = 1e-8
    classify_tol: float = 1e-6
    classify_big: float = 1e8
    max_doublings: int = 20
    quad_rel_tol: float = 1e-9
    limit_r0: float = 1.0
    length_a: float = 0.0
    residual_tol: float = 1e-6
    bound_slack: float = 1e-6

    def scan_policy(self) -> ScanPolicy:
        return ScanPolicy(r_min=self.scan_r_min, r_max=self.scan_r_max,
                          n_points=self.scan_points)

    def classify_policy(self) -> ClassifyPolicy:
        return ClassifyPolicy(tol=self.classify_tol, big=self.classify_big,
                              max_doublings=self.max_doublings,
                              quad_rel_tol=max(self.quad_rel_tol, 1e-10))

    def limit_policy(self) -> LimitPolicy:
        return LimitPolicy(tol=self.classify_tol, big=self.classify_big,
                           r0=self.limit_r0)


@dataclass
class OutputSpec:
    format: str = "json"
    path: str | None = None


@dataclass
class Config:
    n: int
    preset: str | None           # "euclidean" | "hyperbolic" | None
    c: float
    h_source: str | None
    k_override_source: str | None
    curvature_source: str
    policies: Policies = field(default_factory=Policies)
    output: OutputSpec = field(default_factory=OutputSpec)

    def to_dict(self) -> dict:
        return {
            "manifold": {
                "n": self.n,
                "preset": self.preset,
                "c": self.c if self.preset == "hyperbolic" else None,
                "h": self.h_source,
                "k_override": self.k_override_source,
            },
            "curvature": {"K": self.curvature_source},
            "policy": asdict(self.policies),
            "output": {"format": self.output.format, "path": self.output.path},
        }


def _strip_quotes(text: str) -> str:
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
        return text[1:-1]
    return text


_INT_KEYS = {"seed", "n_grid", "scan_points", "max_doublings"}


def load_config(path: str) -> Config:
    """Parse and validate a config file; all defaults are filled in."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle, source=path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        raise ConfigParseError(str(exc), line) from exc

    if not parser.has_section("manifold"):
        raise ValidationError("manifold", "section required")

    man = parser["manifold"]
    try:
        n = man.getint("n")
    except ValueError as exc:
        raise ValidationError("manifold.n", f"not an integer ({exc})") from exc
    if n is None:
        raise ValidationError("manifold.n", "required")
    if n < 3:
        raise ValidationError("manifold.n", f"dimension must be >= 3, got {n}")

    preset = man.get("preset", fallback=None)
    h_source = man.get("h", fallback=None)
    if (preset is None) == (h_source is None):
        raise ValidationError(
            "manifold", "exactly one of 'preset' or 'h' must be set")
    c = 1.0
    if preset is not None:
        preset = preset.strip().lower()
        if preset not in ("euclidean", "hyperbolic"):
            raise ValidationError("manifold.preset",
                                  f"unknown preset {preset!r}")
        if preset == "hyperbolic":
            c = man.getfloat("c", fallback=1.0)
            if c <= 0.0:
                raise ValidationError("manifold.c", f"must be positive, got {c}")
    if h_source is not None:
        h_source = _strip_quotes(h_source)
    k_override = man.get("k_override", fallback=None)
    if k_override is not None:
        k_override = _strip_quotes(k_override)

    if not parser.has_section("curvature") or parser["curvature"].get("K") is None:
        raise ValidationError("curvature.K", "required")
    curvature_source = _strip_quotes(parser["curvature"]["K"])

    policies = Policies()
    if parser.has_section("policy"):
        for key, raw in parser["policy"].items():
            if not hasattr(policies, key):
                raise ValidationError(f"policy.{key}", "unknown policy key")
            try:
                value = int(raw) if key in _INT_KEYS else float(raw)
            except ValueError as exc:
                raise ValidationError(f"policy.{key}",
                                      f"bad number {raw!r}") from exc
            setattr(policies, key, value)
    for key in ("solve_tol", "classify_tol", "classify_big", "quad_rel_tol",
                "residual_tol", "bound_slack", "r_max", "scan_r_min",
                "scan_r_max", "limit_r0", "u0", "solve_r_max"):
        if getattr(policies, key) <= 0.0:
            raise ValidationError(f"policy.{key}", "must be positive")

    output = OutputSpec()
    if parser.has_section("output"):
        out = parser["output"]
        output.format = out.get("format", fallback="json").strip().lower()
        if output.format not in ("csv", "json"):
            raise ValidationError("output.format",
                                  f"must be csv or json, got {output.format!r}")
        output.path = out.get("path", fallback=None)

    return Config(n=n, preset=preset, c=c, h_source=h_source,
                  k_override_source=k_override,
                  curvature_source=curvature_source,
                  policies=policies, output=output)


def build_manifold(config: Config) -> tuple[mf.ModelManifold, list[str]]:
    """Construct the manifold; returns (manifold, warnings)."""
    warnings: list[str] = []
    override = None
    if config.k_override_source is not None:
        override = mf.ExprRadial(config.k_override_source)
        warnings.append(
            "k_override decouples the scalar curvature from the warp; "
            "theorem verdicts are not meaningful for this geometry")
    try:
        if config.preset == "euclidean":
            M = mf.ModelManifold(config.n, mf.EuclideanWarp(),
                                 preset="euclidean",
                                 curvature_override=override)
        elif config.preset == "hyperbolic":
            M = mf.ModelManifold(config.n, mf.HyperbolicWarp(config.c),
                                 preset=f"hyperbolic(c={config.c:g})",
                                 curvature_override=override)
        else:
            M = mf.ModelManifold(config.n, mf.ExprRadial(config.h_source),
                                 preset="custom", curvature_override=override)
    except mf.GeometryError as exc:
        raise ValidationError("manifold.h", str(exc)) from exc
    return M, warnings


def build_curvature(config: Config) -> mf.RadialFn:
    return mf.ExprRadial(config.curvature_source)
