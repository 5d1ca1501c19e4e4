"""
Structured results: inequality checks and the JSON report written by every command.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import mpmath
import numpy as np

from klt import logger
from klt.magnitude import LogMagnitude

log = logger.get()


@dataclass(frozen=True)
class Check:
    """
    One verified inequality lhs <= rhs, or an agreement |lhs - rhs| <= tolerance.
    """

    name: str
    lhs: float
    rhs: float
    passed: bool
    """rhs - lhs for inequalities, tolerance - |lhs - rhs| for agreements."""
    margin: float

    @classmethod
    def leq(cls, name: str, lhs: float, rhs: float, rtol: float = 1e-12) -> Check:
        margin = rhs - lhs
        passed = lhs <= rhs + rtol * max(1.0, abs(rhs))
        return cls(name, float(lhs), float(rhs), bool(passed), float(margin))

    @classmethod
    def close(cls, name: str, lhs: float, rhs: float, tol: float) -> Check:
        gap = abs(lhs - rhs)
        return cls(name, float(lhs), float(rhs), bool(gap <= tol), float(tol - gap))


def summarize(checks: list[Check]) -> dict[str, Any]:
    failed = [c.name for c in checks if not c.passed]
    return {"total": len(checks), "passed": len(checks) - len(failed), "failed": failed}


def _float(x: float, hex_mirror: bool) -> Any:
    if math.isnan(x) or math.isinf(x):
        return repr(x)
    if not hex_mirror:
        return x
    return {"dec": repr(x), "hex": x.hex()}


def jsonable(obj: Any, hex_mirror: bool = True) -> Any:
    """
    Function that converts a result object into JSON-compatible data.

    Floats keep full precision as their repr, mirrored as hex literals when requested;
    rationals become "p/q" strings and multi-precision reals their full decimal expansion.

    :param obj: the object.
    :param hex_mirror: mirror floats as hex literals.
    :return: nested dicts, lists, strings, ints and floats.
    """

    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, enum.Enum):
        return obj.name.lower().replace("_", "-")
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj), hex_mirror)
    if isinstance(obj, complex):
        return {"re": _float(obj.real, hex_mirror), "im": _float(obj.imag, hex_mirror)}
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, mpmath.mpf):
        # _mpf_ is (sign, mantissa, exponent, bitcount)
        digits = max(15, int(obj._mpf_[3] * 0.30103) + 1)
        return mpmath.nstr(obj, digits)
    if isinstance(obj, LogMagnitude):
        return {"log": _float(obj.log, hex_mirror), "value": _float(obj.value, hex_mirror)}
    if isinstance(obj, np.ndarray):
        return [jsonable(v, hex_mirror) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name), hex_mirror) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v, hex_mirror) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v, hex_mirror) for v in obj]
    return str(obj)


@dataclass
class Report:
    """
    The document written by a command: echo, configuration, payload, checks and timing.

    Timing is kept apart from the payload so identical runs produce identical payloads.
    """

    command: list[str]
    config: dict[str, Any]
    payload: Any
    checks: list[Check] = field(default_factory=list)
    timing: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self, hex_mirror: bool = True) -> dict[str, Any]:
        return {
            "command": self.command,
            "config": jsonable(self.config, hex_mirror),
            "payload": jsonable(self.payload, hex_mirror),
            "checks": jsonable(self.checks, hex_mirror),
            "summary": summarize(self.checks),
            "timing": self.timing,
        }

    def write_json(self, path: str, hex_mirror: bool = True) -> str:
        """
        Function that writes the report to a JSON file.

        :param path: the destination.
        :param hex_mirror: mirror floats as hex literals.
        :return: the path written.
        """

        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", encoding="utf-8") as file:
            json.dump(self.to_dict(hex_mirror), file, indent=2, sort_keys=False)
            file.write("\n")
        log.info(f"Report written to {path}")
        return path
