"""Structured-text reports: {config, ledger, results, checks}.

Every numeric leaf is rendered as decimal text with 17 significant digits,
which round-trips IEEE doubles losslessly and makes reports byte-stable
across runs.  Checks are uniform {name, pass, lhs, rhs, slack} records so a
reader can re-audit each inequality without re-running anything.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = ["CheckRecord", "Report", "fmt", "to_jsonable"]


def fmt(x: float) -> str:
    """Decimal text with 17 significant digits (lossless for doubles)."""
    return format(float(x), ".17g")


def to_jsonable(obj):
    """Recursively convert a value tree to JSON-ready form.

    Floats become 17-digit decimal strings; numpy scalars and arrays are
    unwrapped; dataclass-like objects must be pre-converted by the caller.
    """
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, (float, np.floating)):
        return fmt(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


@dataclass
class CheckRecord:
    """One audited inequality: pass iff lhs <= rhs (slack = rhs - lhs)."""

    name: str
    passed: bool
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "pass": self.passed,
            "lhs": fmt(self.lhs),
            "rhs": fmt(self.rhs),
            "slack": fmt(self.slack),
        }


@dataclass
class Report:
    """Top-level report: fixed schema, deterministic serialization."""

    config: dict
    ledger: dict
    results: dict
    checks: list[CheckRecord] = field(default_factory=list)

    def add_check(self, name: str, lhs: float, rhs: float) -> CheckRecord:
        rec = CheckRecord(name=name, passed=bool(lhs <= rhs), lhs=float(lhs), rhs=float(rhs))
        self.checks.append(rec)
        return rec

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "config": to_jsonable(self.config),
            "ledger": to_jsonable(self.ledger),
            "results": to_jsonable(self.results),
            "checks": [c.as_dict() for c in self.checks],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=False) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(self.to_json())
