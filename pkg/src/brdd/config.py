"""Run configuration: a YAML document with an explicit schema version.

Unknown keys anywhere are errors.  Example::

    schema_version: 1
    dgp: {n: 100000, seed: 3, tau: {kind: constant, value: 0.3}}
    estimators: [centering, conditional-x1, conditional-x2, flexible]
    kind: both
    output_dir: out
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Mapping

import yaml

from .data import AssignmentRule
from .dgp import DgpConfig
from .engine import DEFAULT_PILOT_RATIO, kernel_code
from .errors import ConfigError
from .io import resolve_columns

SCHEMA_VERSION = 1
ESTIMATORS = ("centering", "conditional-x1", "conditional-x2", "multicutoff", "flexible", "papay", "zajonc")
KINDS = ("sharp", "fuzzy", "both")
TRIMS = ("se", "top", None)


@dataclass(frozen=True)
class ZajoncOptions:
    rule: str = "mean"
    grid_spacing: int = 20
    H: tuple | None = None
    trim: str | None = "se"
    trim_factor: float = 5.0
    trim_top_pct: int = 9

    def __post_init__(self):
        if self.rule not in ("min", "mean", "manual"):
            raise ConfigError("zajonc.rule must be 'min', 'mean' or 'manual'")
        if self.rule == "manual" and self.H is None:
            raise ConfigError("zajonc.rule 'manual' needs zajonc.H = [h1, h2]")
        if self.H is not None:
            if len(self.H) != 2 or not all(float(v) > 0 for v in self.H):
                raise ConfigError("zajonc.H must be two positive numbers")
            object.__setattr__(self, "H", tuple(float(v) for v in self.H))
        if int(self.grid_spacing) < 5:
            raise ConfigError("zajonc.grid_spacing must be at least 5")
        if self.trim not in TRIMS:
            raise ConfigError("zajonc.trim must be 'se', 'top' or null")


def _strict(cls, d: Mapping, what: str) -> dict:
    if not isinstance(d, Mapping):
        raise ConfigError(f"{what} must be a mapping")
    names = {f.name for f in fields(cls)}
    extra = set(d) - names
    if extra:
        raise ConfigError(f"unknown {what} key(s): {sorted(extra)}")
    return dict(d)


@dataclass(frozen=True)
class RunConfig:
    """Everything one ``estimate`` run needs.

    Exactly one of ``input`` (a CSV path) and ``dgp`` (a synthetic recipe)
    is set.  ``bandwidth`` fixes ``h`` for every univariate estimate;
    ``papay_bandwidths`` defaults to the mean flexible bandwidths.
    """

    input: str | None = None
    dgp: DgpConfig | None = None
    columns: Mapping = field(default_factory=dict)
    rule: AssignmentRule = field(default_factory=AssignmentRule)
    estimators: tuple = ("centering", "conditional-x1", "conditional-x2", "flexible")
    kind: str = "sharp"
    fraction: float = 0.10
    increment_pct: int = 1
    kernel: str = "triangular"
    bandwidth: float | None = None
    pilot_ratio: float = DEFAULT_PILOT_RATIO
    papay_bandwidths: tuple | None = None
    zajonc: ZajoncOptions = field(default_factory=ZajoncOptions)
    output_dir: str = "brdd-out"
    seed: int | None = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}; expected {SCHEMA_VERSION}")
        if (self.input is None) == (self.dgp is None):
            raise ConfigError("set exactly one of 'input' and 'dgp'")
        est = tuple(self.estimators)
        if not est:
            raise ConfigError("select at least one estimator")
        bad = [e for e in est if e not in ESTIMATORS]
        if bad:
            raise ConfigError(f"unknown estimator(s) {bad}; choose from {list(ESTIMATORS)}")
        object.__setattr__(self, "estimators", tuple(dict.fromkeys(est)))
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}")
        if not 0 < float(self.fraction) <= 0.5:
            raise ConfigError("fraction must lie in (0, 0.5]")
        try:
            kernel_code(self.kernel)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.bandwidth is not None and not float(self.bandwidth) > 0:
            raise ConfigError("bandwidth must be positive")
        if self.papay_bandwidths is not None:
            pb = tuple(float(v) for v in self.papay_bandwidths)
            if len(pb) != 2 or min(pb) <= 0:
                raise ConfigError("papay_bandwidths must be two positive numbers")
            object.__setattr__(self, "papay_bandwidths", pb)
        resolve_columns(self.columns)
        if self.seed is not None and self.dgp is not None:
            object.__setattr__(self, "dgp", self.dgp.with_(seed=int(self.seed)))

    @property
    def kinds(self) -> tuple:
        return ("sharp", "fuzzy") if self.kind == "both" else (self.kind,)

    def effective_rule(self) -> AssignmentRule:
        return self.dgp.rule if self.dgp is not None else self.rule

    @classmethod
    def from_dict(cls, d: Mapping, base_dir: Path | None = None) -> "RunConfig":
        d = _strict(cls, d, "config")
        if "schema_version" not in d:
            raise ConfigError("config needs a schema_version")
        if d.get("dgp") is not None:
            d["dgp"] = DgpConfig.from_dict(d["dgp"])
        if "rule" in d:
            d["rule"] = AssignmentRule.from_dict(d["rule"] or {})
        if "zajonc" in d:
            d["zajonc"] = ZajoncOptions(**_strict(ZajoncOptions, d["zajonc"] or {}, "zajonc"))
        if "estimators" in d:
            d["estimators"] = tuple(d["estimators"] or ())
        if d.get("input") is not None and base_dir is not None:
            p = Path(d["input"])
            d["input"] = str(p if p.is_absolute() else base_dir / p)
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_yaml(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from None
        if not isinstance(data, Mapping):
            raise ConfigError("config file must hold a mapping")
        return cls.from_dict(data, base_dir=path.parent)

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "input": self.input,
            "dgp": self.dgp.to_dict() if self.dgp is not None else None,
            "columns": dict(self.columns),
            "rule": self.rule.to_dict(),
            "estimators": list(self.estimators),
            "kind": self.kind,
            "fraction": self.fraction,
            "increment_pct": self.increment_pct,
            "kernel": self.kernel,
            "bandwidth": self.bandwidth,
            "pilot_ratio": self.pilot_ratio,
            "papay_bandwidths": list(self.papay_bandwidths) if self.papay_bandwidths else None,
            "zajonc": {
                "rule": self.zajonc.rule, "grid_spacing": self.zajonc.grid_spacing,
                "H": list(self.zajonc.H) if self.zajonc.H else None, "trim": self.zajonc.trim,
                "trim_factor": self.zajonc.trim_factor, "trim_top_pct": self.zajonc.trim_top_pct,
            },
            "output_dir": self.output_dir,
            "seed": self.seed,
        }
