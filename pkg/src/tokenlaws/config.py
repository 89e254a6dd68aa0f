"""Run configuration: defaults, JSON config files, and flag overrides.

A config file is a flat JSON object whose keys mirror RunConfig field
for field.  Command-line flags override file values, which override the
built-in defaults.  Unknown keys are rejected rather than ignored so a
typo cannot silently fall back to a default.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .ingest import IngestOptions

RNG_ALGORITHM = "pcg64"


class ConfigError(ValueError):
    """Invalid configuration value, file, or combination."""


@dataclass(frozen=True)
class RunConfig:
    input: str | None = None
    out_dir: str | None = None
    periods: object = 3
    seed: int = 0
    n_bins: int = 20
    n_tail_min: int = 50
    activity_floor: int = 10
    kpss_variant: str = "level"
    kpss_bandwidth: object = "auto"
    scaling: bool = True
    powerlaw: bool = True
    kpss: bool = True
    taylor: bool = True
    figures: bool = True
    fail_fast: bool = False
    columns: dict | None = None
    delimiter: str = ","
    has_header: bool = True
    rng: str = RNG_ALGORITHM

    def __post_init__(self) -> None:
        if isinstance(self.periods, int):
            if self.periods < 1:
                raise ConfigError("periods must be >= 1")
        elif isinstance(self.periods, (list, tuple)):
            bounds = list(self.periods)
            if len(bounds) < 2 or any(not isinstance(b, int) for b in bounds):
                raise ConfigError("period boundaries need at least two integers")
            if any(b <= a for a, b in zip(bounds, bounds[1:])):
                raise ConfigError("period boundaries must be strictly increasing")
            object.__setattr__(self, "periods", tuple(bounds))
        else:
            raise ConfigError("periods must be an integer count or a boundary list")
        for name, floor in (("seed", 0), ("n_bins", 1), ("n_tail_min", 2),
                            ("activity_floor", 0)):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < floor:
                raise ConfigError(f"{name} must be an integer >= {floor}")
        if self.kpss_variant not in ("level", "trend"):
            raise ConfigError("kpss_variant must be 'level' or 'trend'")
        bw = self.kpss_bandwidth
        if bw not in ("auto", "schwert") and not (
                isinstance(bw, int) and not isinstance(bw, bool) and bw >= 0):
            raise ConfigError(
                "kpss_bandwidth must be 'auto', 'schwert', or a lag count >= 0")
        for name in ("scaling", "powerlaw", "kpss", "taylor", "figures",
                     "fail_fast", "has_header"):
            if not isinstance(getattr(self, name), bool):
                raise ConfigError(f"{name} must be true or false")
        if self.columns is not None and not isinstance(self.columns, dict):
            raise ConfigError("columns must be a mapping of field names")
        if not isinstance(self.delimiter, str) or len(self.delimiter) != 1:
            raise ConfigError("delimiter must be a single character")
        if self.rng != RNG_ALGORITHM:
            raise ConfigError(f"rng must be {RNG_ALGORITHM!r} (the pinned generator)")
        for name in ("input", "out_dir"):
            value = getattr(self, name)
            if value is not None and not isinstance(value, str):
                raise ConfigError(f"{name} must be a path string")

    def with_overrides(self, **overrides) -> "RunConfig":
        """New config with the non-None overrides applied (flags win)."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(changes) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(sorted(unknown))}")
        return dataclasses.replace(self, **changes)

    def ingest_options(self) -> IngestOptions:
        kwargs = dict(delimiter=self.delimiter, has_header=self.has_header,
                      fail_fast=self.fail_fast)
        if self.columns is not None:
            kwargs["columns"] = dict(self.columns)
        try:
            return IngestOptions(**kwargs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        """Stable-ordered echo for the provenance block."""
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out


def load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return data


def build_config(config_path=None, **flag_overrides) -> RunConfig:
    """Defaults <- config file <- flags, validated at each layer."""
    config = RunConfig()
    if config_path is not None:
        data = load_config_file(config_path)
        unknown = set(data) - {f.name for f in dataclasses.fields(RunConfig)}
        if unknown:
            raise ConfigError(
                f"{config_path}: unknown config keys: {', '.join(sorted(unknown))}")
        try:
            config = config.with_overrides(**data)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{config_path}: {exc}") from exc
    return config.with_overrides(**flag_overrides)


__all__ = ["RNG_ALGORITHM", "ConfigError", "RunConfig", "load_config_file",
           "build_config"]
