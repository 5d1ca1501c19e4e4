import math
import warnings
from typing import Any, Callable, Sequence

from scipy import integrate

from klt import logger
from klt.config import DEFAULT_QUAD_RTOL
from klt.errors import QuadratureError

log = logger.get()

"""How far the reported error may exceed the tolerance before the result is rejected."""
SLACK = 100.0


def integrate_1d(
    f: Callable[[float], float],
    a: float,
    b: float,
    rtol: float = DEFAULT_QUAD_RTOL,
    atol: float = 1e-13,
    points: Sequence[float] | None = None,
    weight: str | None = None,
    wvar: Any = None,
    limit: int = 1000,
    what: str = "integral",
) -> float:
    """
    Function that integrates f over [a, b] with adaptive Gauss-Kronrod quadrature.

    :param f: the integrand.
    :param a: the lower limit.
    :param b: the upper limit, possibly infinite.
    :param rtol: the relative tolerance.
    :param atol: the absolute tolerance.
    :param points: breakpoints where the integrand peaks or kinks, finite limits only.
    :param weight: a quad weight function name, e.g. 'alg' or 'cos'.
    :param wvar: the weight parameters.
    :param limit: the maximum number of subintervals.
    :param what: a label for error messages.
    :return: the integral.
    :raises QuadratureError: if the error estimate is far above the tolerance.
    """

    kwargs: dict[str, Any] = {"epsabs": atol, "epsrel": rtol, "limit": limit, "full_output": 1}
    if points is not None and weight is None:
        inner = sorted({p for p in points if a < p < b})
        if inner:
            kwargs["points"] = inner
    if weight is not None:
        kwargs["weight"] = weight
        kwargs["wvar"] = wvar
        if weight in ("cos", "sin") and math.isinf(b):
            kwargs["limlst"] = 200

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(f, a, b, **kwargs)

    value, abserr = float(out[0]), float(out[1])
    tolerance = max(atol, rtol * abs(value))
    if not math.isfinite(value) or abserr > SLACK * tolerance:
        raise QuadratureError(
            f"{what} did not converge on [{a}, {b}]: value {value:.6g}, error {abserr:.3g}", abserr
        )
    log.debug(f"{what}: {value:.12g} (error {abserr:.2g})")
    return value
