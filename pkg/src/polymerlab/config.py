"""Experiment configuration: a flat key=value text file (or JSON), schema
validation with field-level messages, and a content hash embedded in every
artifact so outputs are self-describing and reruns are checkable."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

SCHEMA_VERSION = 1
TOOL_VERSION = "0.1.0"

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the offending field."""


@dataclass
class ExperimentConfig:
    master_seed: int = 1
    sizes: tuple[int, ...] = (32, 64, 128)
    replicates: int = 4
    delta_min_exp: int = 6  # field resolution 2**-delta_min_exp
    grid_spacing: float = 2.0**-3
    band_half_width: float | None = None  # None: band_rule*sqrt(L)
    band_rule: float = 4.0
    band_cap: int = 6
    mu_values: tuple[float, ...] = (0.5, 0.707, 1.0, 1.414, 2.0, 2.828, 4.0)
    p_values: tuple[float, ...] = (2.0, 2.5, 3.0)
    modulus_cap: int = 16  # samples kept per gap per replicate
    enable_frontier: bool = False
    enable_greedy: bool = False
    enable_two_scale: bool = False
    two_scale_block: int = 0  # 0: nearest power of two to sqrt(L)
    enable_modulus: bool = True
    enable_comparison: bool = False
    comparison_trials: int = 100
    jobs: int = 1
    out_dir: str = "out"

    @property
    def delta_min(self) -> float:
        return 2.0**-self.delta_min_exp

    def validate(self) -> None:
        errs = []
        if self.master_seed < 0:
            errs.append("master_seed: must be nonnegative")
        if not self.sizes:
            errs.append("sizes: need at least one system size")
        for L in self.sizes:
            if L < 4 or L & (L - 1):
                errs.append(f"sizes: {L} is not a power of two >= 4")
        if self.replicates < 1:
            errs.append("replicates: must be >= 1")
        if not 0 <= self.delta_min_exp <= 20:
            errs.append("delta_min_exp: must lie in [0, 20]")
        if not 0 < self.grid_spacing <= 1:
            errs.append("grid_spacing: must lie in (0, 1]")
        else:
            stride = round(self.grid_spacing / self.delta_min)
            if stride < 1 or abs(stride * self.delta_min - self.grid_spacing) > 1e-12:
                errs.append("grid_spacing: must be an integer multiple of 2**-delta_min_exp")
        if self.band_half_width is not None and self.band_half_width < self.grid_spacing:
            errs.append("band_half_width: must be at least one grid step")
        if self.band_rule <= 0:
            errs.append("band_rule: must be positive")
        if self.band_cap < 0:
            errs.append("band_cap: must be >= 0")
        if len(self.mu_values) < 2 or any(
            b <= a for a, b in zip(self.mu_values, self.mu_values[1:])
        ):
            errs.append("mu_values: need >= 2 strictly increasing values")
        if any(m <= 0 for m in self.mu_values):
            errs.append("mu_values: must be positive")
        if any(p < 1 for p in self.p_values):
            errs.append("p_values: exponents must be >= 1")
        if self.modulus_cap < 1:
            errs.append("modulus_cap: must be >= 1")
        if self.two_scale_block and (
            self.two_scale_block < 2 or self.two_scale_block & (self.two_scale_block - 1)
        ):
            errs.append("two_scale_block: must be 0 (auto) or a power of two >= 2")
        if self.comparison_trials < 1:
            errs.append("comparison_trials: must be >= 1")
        if self.jobs < 1:
            errs.append("jobs: must be >= 1")
        if errs:
            raise ConfigError("; ".join(errs))

    def canonical(self) -> str:
        doc = asdict(self)
        # execution parameters don't change results, so they don't hash
        doc.pop("out_dir")
        doc.pop("jobs")
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def header_lines(self) -> tuple[str, ...]:
        return (
            f"schema_version={SCHEMA_VERSION}",
            f"tool_version={TOOL_VERSION}",
            f"config_hash={self.config_hash()}",
            f"master_seed={self.master_seed}",
        )


def _parse_scalar(name: str, text: str, kind):
    text = text.strip()
    try:
        if kind is bool:
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {text!r} as {kind.__name__}") from None


def _coerce(name: str, raw, annotation):
    if annotation in ("int", "float", "bool", "str"):
        kind = {"int": int, "float": float, "bool": bool, "str": str}[annotation]
        if isinstance(raw, str):
            return _parse_scalar(name, raw, kind)
        if kind is float and isinstance(raw, int):
            return float(raw)
        if not isinstance(raw, kind):
            raise ConfigError(f"{name}: expected {annotation}")
        return raw
    if annotation == "float | None":
        if raw is None or (isinstance(raw, str) and raw.strip().lower() in ("", "auto", "none")):
            return None
        return _coerce(name, raw, "float")
    if annotation.startswith("tuple[int"):
        items = raw.split(",") if isinstance(raw, str) else raw
        return tuple(_parse_scalar(name, str(v), int) for v in items if str(v).strip())
    if annotation.startswith("tuple[float"):
        items = raw.split(",") if isinstance(raw, str) else raw
        return tuple(_parse_scalar(name, str(v), float) for v in items if str(v).strip())
    raise ConfigError(f"{name}: unsupported field type {annotation}")


def load_config(path) -> ExperimentConfig:
    """Read a config file: JSON if it parses as JSON, else key = value lines."""
    text = Path(path).read_text()
    known = {f.name: f for f in fields(ExperimentConfig)}
    try:
        doc = json.loads(text)
        if not isinstance(doc, dict):
            raise ConfigError("top-level JSON config must be an object")
    except json.JSONDecodeError:
        doc = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
            key, value = body.split("=", 1)
            doc[key.strip()] = value.strip()
    kwargs = {}
    for key, raw in doc.items():
        if key not in known:
            raise ConfigError(f"{key}: unknown configuration key")
        kwargs[key] = _coerce(key, raw, known[key].type)
    cfg = ExperimentConfig(**kwargs)
    cfg.validate()
    return cfg
