"""Run configuration for the batch verifier.

A configuration names the cases to cover, the checks to run, the seeds
feeding every randomized probe, and the budget guarding Groebner runs.
All randomness in a run flows from the configured seeds, so two runs
with the same configuration produce identical reports.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields

try:
    import tomllib
except ModuleNotFoundError:                      # python 3.10
    import tomli as tomllib

from .charts import EXTENSIONS, INDICES
from .poly import DEFAULT_BUDGET


class ConfigError(ValueError):
    """Invalid run configuration."""


CHECKS = (
    "classify-ext",
    "norms",
    "hqm",
    "simplify",
    "dims",
    "spin",
    "classify-points",
    "identities",
)

CASE_CODES = {
    "0RU": ("0", "ru"),
    "0RP": ("0", "rp"),
    "MRU": ("m", "ru"),
    "MRP": ("m", "rp"),
}

DEFAULT_CASES = (("0", "ru", 1), ("0", "rp", 1), ("m", "ru", 1), ("m", "rp", 1))


def parse_case(code: str, m: int = None) -> tuple:
    """Turn a case code like ``0RU`` or ``mrp:2`` into (index, ext, m)."""
    text = code.strip()
    if ":" in text:
        text, _, tail = text.partition(":")
        if m is not None:
            raise ConfigError(f"case {code!r} carries two rank values")
        try:
            m = int(tail)
        except ValueError as exc:
            raise ConfigError(f"bad rank in case code {code!r}") from exc
    key = text.upper()
    if key not in CASE_CODES:
        raise ConfigError(
            f"unknown case code {code!r}; expected one of {sorted(CASE_CODES)}")
    index, ext = CASE_CODES[key]
    return index, ext, 1 if m is None else m


def case_code(index: str, ext: str) -> str:
    for code, pair in CASE_CODES.items():
        if pair == (index, ext):
            return code
    raise ConfigError(f"no code for case ({index!r}, {ext!r})")


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for one batch run."""

    extensions: tuple = ("ru", "rp")
    cases: tuple = DEFAULT_CASES
    checks: tuple = CHECKS
    precision: int = 6
    seeds: tuple = (0, 1, 2)
    groebner_budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        object.__setattr__(self, "extensions", tuple(self.extensions))
        object.__setattr__(self, "cases", tuple(tuple(c) for c in self.cases))
        object.__setattr__(self, "checks", tuple(self.checks))
        object.__setattr__(self, "seeds", tuple(self.seeds))
        for ext in self.extensions:
            if ext not in EXTENSIONS:
                raise ConfigError(f"unknown extension type {ext!r}")
        if not self.extensions:
            raise ConfigError("at least one extension type is required")
        for case in self.cases:
            if len(case) != 3:
                raise ConfigError(f"malformed case {case!r}")
            index, ext, m = case
            if index not in INDICES or ext not in EXTENSIONS:
                raise ConfigError(f"unknown case ({index!r}, {ext!r})")
            if not isinstance(m, int) or m < 1:
                raise ConfigError(f"case rank must be a positive integer, got {m!r}")
        if not self.cases:
            raise ConfigError("at least one case is required")
        seen = set()
        for name in self.checks:
            if name not in CHECKS:
                raise ConfigError(
                    f"unknown check {name!r}; expected a subset of {list(CHECKS)}")
            if name in seen:
                raise ConfigError(f"duplicate check {name!r}")
            seen.add(name)
        if not self.checks:
            raise ConfigError("at least one check is required")
        if not isinstance(self.precision, int) or self.precision < 2:
            raise ConfigError("precision must be an integer of at least 2 bits")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if any(not isinstance(s, int) for s in self.seeds):
            raise ConfigError("seeds must be integers")
        if not isinstance(self.groebner_budget, int) or self.groebner_budget <= 0:
            raise ConfigError("groebner_budget must be a positive integer")

    def to_dict(self) -> dict:
        return {
            "extensions": list(self.extensions),
            "cases": [case_code(i, e) + f":{m}" for i, e, m in self.cases],
            "checks": list(self.checks),
            "precision": self.precision,
            "seeds": list(self.seeds),
            "groebner_budget": self.groebner_budget,
        }

    def effective_budget(self) -> int:
        """Configured budget, overridden by the environment when set."""
        raw = os.environ.get("LMTOOL_BUDGET")
        if raw is None:
            return self.groebner_budget
        try:
            val = int(raw)
        except ValueError as exc:
            raise ConfigError(f"LMTOOL_BUDGET must be an integer, got {raw!r}") from exc
        if val <= 0:
            raise ConfigError("LMTOOL_BUDGET must be positive")
        return val


def default_config() -> RunConfig:
    return RunConfig()


def load_config(path: str) -> RunConfig:
    """Load and validate a TOML configuration file."""
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return config_from_dict(data)


def config_from_dict(data: dict) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown configuration keys: {sorted(extra)}")
    kwargs = dict(data)
    if "cases" in kwargs:
        parsed = []
        for entry in kwargs["cases"]:
            if isinstance(entry, str):
                parsed.append(parse_case(entry))
            else:
                raise ConfigError(
                    f"cases must be code strings like '0RU' or 'MRP:2', got {entry!r}")
        kwargs["cases"] = tuple(parsed)
    for key in ("extensions", "checks", "seeds"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    return RunConfig(**kwargs)
