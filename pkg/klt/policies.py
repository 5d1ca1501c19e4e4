import enum
from typing import Self


class _Named(enum.Enum):
    """
    Enumeration whose members are parsed from their dashed lower-case names.
    """

    @property
    def label(self) -> str:
        return self.name.lower().replace("_", "-")

    @classmethod
    def from_string(cls, s: str) -> Self:
        """
        Function that returns the member corresponding to a given name.

        Dashes and underscores are interchangeable and the match is case insensitive.

        :param s: the member name.
        :return: the member.
        :raises ValueError: if the name is unknown.
        """

        key = s.strip().upper().replace("-", "_")
        try:
            return cls[key]
        except KeyError:
            choices = ", ".join(m.label for m in cls)
            raise ValueError(f"Unknown {cls.__name__}: {s} (expected one of {choices})") from None


class ZeroPolicy(_Named):
    """
    How a linear combination of frequencies is decided to vanish.
    """

    THRESHOLD = 1
    EXACT_MULTIPLICATIVE = 2


class PZeroMethod(_Named):
    """
    Route used to obtain P{S_k = 0}.
    """

    EXACT = 1
    QUADRATURE = 2
    ASYMPTOTIC = 3
    LOCAL_LIMIT = 4


class SearchMode(_Named):
    FIRST_HIT = 1
    BEST_IN_INTERVAL = 2


class Sampler(_Named):
    GRID = 1
    RANDOM = 2


class CoefficientConvention(_Named):
    """
    Coefficient bound used for the lattice minimum: the stated U or the proof's (m-1)k.
    """

    THEOREM = 1
    TIGHT = 2
