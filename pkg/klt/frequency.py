"""
Symbolic frequencies and their multi-precision evaluation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from functools import cached_property

import mpmath
import numpy as np
import numpy.typing as npt
from mpmath import mpf

from klt import logger
from klt.errors import DomainError, FrequencyParseError

log = logger.get()


class FrequencyKind(enum.Enum):
    LOG = "log"
    SQRT = "sqrt"
    DEC = "dec"


@dataclass(frozen=True)
class FrequencySpec:
    """
    A real frequency given symbolically: log n, sqrt n or a decimal literal.
    """

    """The symbolic kind."""
    kind: FrequencyKind
    """Integer argument for log/sqrt, the literal text for decimals."""
    payload: int | str
    """Evaluation precision in bits."""
    precision: int = 256

    def __post_init__(self) -> None:
        if self.precision < 2:
            raise DomainError(f"precision must be positive, got {self.precision}")

        match self.kind:
            case FrequencyKind.LOG:
                if not isinstance(self.payload, int) or self.payload < 2:
                    raise DomainError(f"log payload must be an integer >= 2, got {self.payload}")
            case FrequencyKind.SQRT:
                if not isinstance(self.payload, int) or self.payload < 2:
                    raise DomainError(f"sqrt payload must be an integer >= 2, got {self.payload}")
                if math.isqrt(self.payload) ** 2 == self.payload:
                    raise DomainError(f"sqrt payload must not be a perfect square: {self.payload}")
            case FrequencyKind.DEC:
                try:
                    value = Decimal(str(self.payload))
                except InvalidOperation:
                    raise DomainError(f"invalid decimal literal: {self.payload}") from None
                if not value.is_finite():
                    raise DomainError(f"decimal literal must be finite: {self.payload}")

    def evaluate(self) -> mpf:
        """
        Function that evaluates the frequency at its own precision.

        :return: the value as an mpmath float carrying `precision` bits.
        """

        with mpmath.workprec(self.precision):
            match self.kind:
                case FrequencyKind.LOG:
                    return +mpmath.log(self.payload)
                case FrequencyKind.SQRT:
                    return +mpmath.sqrt(self.payload)
                case _:
                    return mpf(str(self.payload))

    def __str__(self) -> str:
        return f"{self.kind.value} {self.payload}"

    @classmethod
    def parse(cls, line: str, precision: int = 256) -> FrequencySpec:
        """
        Function that parses one `log <int>`, `sqrt <int>` or `dec <decimal>` line.

        :param line: the text, comments already removed.
        :param precision: the evaluation precision.
        :return: the parsed FrequencySpec.
        :raises DomainError: if the line is malformed.
        """

        parts = line.split()
        if len(parts) != 2:
            raise DomainError(f"expected '<kind> <value>', got {line.strip()!r}")
        word, arg = parts
        try:
            kind = FrequencyKind(word.lower())
        except ValueError:
            raise DomainError(f"unknown frequency kind {word!r}") from None

        if kind is FrequencyKind.DEC:
            return cls(kind, arg, precision)
        try:
            n = int(arg)
        except ValueError:
            raise DomainError(f"{word} expects an integer, got {arg!r}") from None
        return cls(kind, n, precision)


def decimal_spec(value: str | float, precision: int = 256) -> FrequencySpec:
    """
    Function that wraps a literal (or the repr of a float) as a decimal spec.
    """

    return FrequencySpec(FrequencyKind.DEC, str(value), precision)


def golden_ratio_spec(precision: int = 256) -> FrequencySpec:
    """
    Function that returns phi = (1 + sqrt 5)/2 as a decimal frequency carrying enough digits.

    :param precision: the evaluation precision.
    :return: the parsed FrequencySpec.
    """

    with mpmath.workprec(precision + 16):
        phi = (1 + mpmath.sqrt(5)) / 2
        digits = int(precision * 0.30103) + 6
        text = mpmath.nstr(phi, digits, strip_zeros=False)
    return FrequencySpec(FrequencyKind.DEC, text, precision)


def parse_frequency_file(path: str, precision: int = 256) -> list[FrequencySpec]:
    """
    Function that reads a frequency file, one frequency per line with `#` comments.

    :param path: the file path.
    :param precision: the evaluation precision.
    :return: the FrequencySpec entries in file order.
    :raises FrequencyParseError: with the offending line number.
    """

    specs: list[FrequencySpec] = []
    with open(path, "r", encoding="utf-8") as file:
        for lineno, raw in enumerate(file, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                specs.append(FrequencySpec.parse(text, precision))
            except DomainError as e:
                raise FrequencyParseError(str(e), lineno) from None

    if not specs:
        raise FrequencyParseError(f"{path} holds no frequency")
    log.debug(f"Read {len(specs)} frequencies from {path}")
    return specs


@dataclass(frozen=True)
class LinearFormInstance:
    """
    The ordered frequencies lambda_1, ..., lambda_N and their evaluations.
    """

    """The symbolic frequencies."""
    specs: tuple[FrequencySpec, ...]
    """Common working precision in bits."""
    precision: int = 256
    """The evaluated frequencies."""
    evaluated: tuple[mpf, ...] = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        specs = tuple(
            s if s.precision == self.precision else FrequencySpec(s.kind, s.payload, self.precision)
            for s in self.specs
        )
        object.__setattr__(self, "specs", specs)
        object.__setattr__(self, "evaluated", tuple(s.evaluate() for s in specs))

    @classmethod
    def of(
        cls, specs: list[FrequencySpec] | tuple[FrequencySpec, ...], precision: int = 256
    ) -> LinearFormInstance:
        return cls(tuple(specs), precision)

    @property
    def N(self) -> int:
        return len(self.specs)

    @cached_property
    def floats(self) -> npt.NDArray[np.float64]:
        return np.array([float(v) for v in self.evaluated], dtype=np.float64)

    @cached_property
    def log_payloads(self) -> tuple[int, ...] | None:
        """
        The integers n_j when every frequency is log n_j, None otherwise.
        """

        if all(s.kind is FrequencyKind.LOG for s in self.specs):
            return tuple(int(s.payload) for s in self.specs)
        return None

    def fixed_point(self) -> list[int]:
        """
        Function that scales the frequencies to integers with `precision` fractional bits.

        Combinations can then be formed with exact integer arithmetic.

        :return: round(lambda_j * 2^precision) for each j.
        """

        with mpmath.workprec(self.precision + 32):
            return [int(mpmath.nint(mpmath.ldexp(v, self.precision))) for v in self.evaluated]

    def without(self, index: int) -> LinearFormInstance:
        return LinearFormInstance(self.specs[:index] + self.specs[index + 1 :], self.precision)

    def combination(self, u: tuple[int, ...] | list[int]) -> mpf:
        """
        Function that evaluates sum_j u_j lambda_j at the instance precision.
        """

        with mpmath.workprec(self.precision):
            return mpmath.fsum(c * v for c, v in zip(u, self.evaluated))

    def describe(self) -> list[str]:
        return [str(s) for s in self.specs]
