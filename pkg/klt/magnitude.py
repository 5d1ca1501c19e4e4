from __future__ import annotations

import math
from dataclasses import dataclass

"""Largest natural logarithm whose exponential is a finite double."""
MAX_FLOAT_LOG = math.log(1.7976931348623157e308)


@dataclass(frozen=True, order=True)
class LogMagnitude:
    """
    A positive quantity carried by its natural logarithm.
    """

    """The natural logarithm of the quantity."""
    log: float

    @classmethod
    def of(cls, x: float) -> LogMagnitude:
        if x < 0:
            raise ValueError(f"LogMagnitude needs a nonnegative value, got {x}")
        return cls(math.log(x) if x > 0 else -math.inf)

    @property
    def value(self) -> float:
        """
        The quantity itself, inf when it does not fit a double.
        """

        if self.log > MAX_FLOAT_LOG:
            return math.inf
        return math.exp(self.log)

    @property
    def representable(self) -> bool:
        return self.log <= MAX_FLOAT_LOG

    def __float__(self) -> float:
        return self.value

    def __mul__(self, other: LogMagnitude) -> LogMagnitude:
        return LogMagnitude(self.log + other.log)

    def __truediv__(self, other: LogMagnitude) -> LogMagnitude:
        return LogMagnitude(self.log - other.log)

    def __pow__(self, p: float) -> LogMagnitude:
        return LogMagnitude(self.log * p)
