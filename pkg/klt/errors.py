from __future__ import annotations

from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from klt.search import WitnessResult


class KLTError(Exception):
    """
    Base class of every error raised by the toolkit.
    """


class DomainError(KLTError, ValueError):
    """
    Raised when an argument lies outside the domain of an operation.
    """


class ConfigError(KLTError):
    """
    Raised for unknown or out-of-range configuration values.
    """


class FrequencyParseError(KLTError):
    """
    Raised when a frequency or polynomial file cannot be parsed.
    """

    """The 1-based line number of the offending line, or 0 if not line specific."""
    line: int

    def __init__(self, message: str, line: int = 0) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class ResourceCapError(KLTError):
    """
    Raised when a computation would exceed one of the configured caps.
    """

    """The cap that was hit."""
    cap: int
    """The amount the computation asked for, when known."""
    requested: int | None

    def __init__(self, what: str, cap: int, requested: int | None = None) -> None:
        self.cap = cap
        self.requested = requested
        detail = f" (requested {requested})" if requested is not None else ""
        super().__init__(f"{what} cap of {cap} exceeded{detail}")


class EnumerationCapExceeded(ResourceCapError):
    def __init__(self, cap: int, requested: int | None = None) -> None:
        super().__init__("enumeration", cap, requested)


class SupportCapExceeded(ResourceCapError):
    def __init__(self, cap: int, requested: int | None = None) -> None:
        super().__init__("support", cap, requested)


class ScanCapExceeded(ResourceCapError):
    def __init__(self, cap: int, requested: int | None = None) -> None:
        super().__init__("scan", cap, requested)


class NoNonzeroCombination(KLTError):
    """
    Raised when every integer combination in range is classified as zero.
    """


class QuadratureError(KLTError):
    """
    Raised when an adaptive quadrature does not reach its tolerance.
    """

    """The error estimate reported by the integrator."""
    abserr: float

    def __init__(self, message: str, abserr: float = float("nan")) -> None:
        self.abserr = abserr
        super().__init__(message)


class WitnessNotFound(KLTError):
    """
    Raised when a grid search finds no point within the requested accuracy.

    It only refutes the grid resolution, never the existence of a witness.
    """

    """The best point seen during the scan."""
    best: WitnessResult

    def __init__(self, best: WitnessResult, **diagnostics: Any) -> None:
        self.best = best
        self.diagnostics = diagnostics
        super().__init__(
            f"no witness found; best t={best.t!r} with sup discrepancy {best.sup_discrepancy:.6g}"
        )
