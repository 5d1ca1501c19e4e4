"""
The Fejer law, its i.i.d. sums S_k and the kernel integral bounds.

The Fejer law of parameter m puts mass (m - |n|)/m^2 on |n| < m. Its characteristic function
is the Fejer kernel ratio (sin(pi m t)/(m sin(pi t)))^2 and the generating polynomial of
m^2 P{X = n} is A_m(z)^2 z^-(m-1) with A_m(z) = 1 + z + ... + z^(m-1).
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import accumulate

import numpy as np
import numpy.typing as npt
from tqdm import tqdm

from klt import logger
from klt.config import DEFAULT_C0, DEFAULT_K0, DEFAULT_QUAD_RTOL, DEFAULT_SUPPORT_CAP
from klt.errors import DomainError, SupportCapExceeded
from klt.magnitude import LogMagnitude
from klt.policies import PZeroMethod
from klt.quadrature import integrate_1d

log = logger.get()

ArrayLike = float | npt.NDArray[np.float64]

"""Half-width (m-1)k up to which p_zero is computed exactly during sweeps."""
DEFAULT_EXACT_LIMIT = 4000


def _check_mk(m: int, k: int = 1) -> None:
    if m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")
    if k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")


class LatticeLaw(ABC):
    """
    A symmetric law on the integers with finite support.
    """

    @property
    @abstractmethod
    def radius(self) -> int:
        """
        Largest |n| with positive mass.
        """

    @abstractmethod
    def pmf(self, n: int) -> Fraction: ...

    @abstractmethod
    def char_fn(self, t: ArrayLike) -> ArrayLike: ...

    def support(self) -> range:
        return range(-self.radius, self.radius + 1)

    def moments(self) -> tuple[Fraction, Fraction]:
        """
        Function that computes the exact mean and variance.

        :return: (E X, E X^2 - (E X)^2) as rationals.
        """

        mean = sum((n * self.pmf(n) for n in self.support()), Fraction(0))
        second = sum((n * n * self.pmf(n) for n in self.support()), Fraction(0))
        return mean, second - mean * mean


class FejerLaw(LatticeLaw):
    """
    The law P{X = n} = (m - |n|)/m^2 for |n| < m.
    """

    """The law parameter."""
    m: int

    def __init__(self, m: int) -> None:
        _check_mk(m)
        self.m = m

    def __repr__(self) -> str:
        return f"FejerLaw(m={self.m})"

    @property
    def radius(self) -> int:
        return self.m - 1

    def pmf(self, n: int) -> Fraction:
        if abs(n) >= self.m:
            return Fraction(0)
        return Fraction(self.m - abs(n), self.m * self.m)

    @property
    def mean(self) -> Fraction:
        return self.moments()[0]

    @property
    def variance(self) -> Fraction:
        """
        The exact variance, (m^2 - 1)/6.
        """

        return self.moments()[1]

    def char_fn(self, t: ArrayLike) -> ArrayLike:
        """
        Function that evaluates (sin(pi m t)/(m sin(pi t)))^2, equal to 1 at integer t.

        :param t: a real or an array of reals.
        :return: the values, in [0, 1].
        """

        arr = np.asarray(t, dtype=np.float64)
        x = arr - np.rint(arr)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.sin(np.pi * self.m * x) / (self.m * np.sin(np.pi * x))
        out = np.where(x == 0.0, 1.0, ratio * ratio)
        out = np.clip(out, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SumDistribution:
    """
    Exact law of S_k = X_1 + ... + X_k for i.i.d. Fejer variables.

    Probabilities are stored as integer numerators over the common denominator m^(2k).
    """

    """The law parameter."""
    m: int
    """The number of summands."""
    k: int
    """Numerators of P{S_k = nu} for nu = -(m-1)k, ..., (m-1)k."""
    counts: tuple[int, ...] = field(repr=False)

    @property
    def radius(self) -> int:
        return (self.m - 1) * self.k

    @property
    def denominator(self) -> int:
        return self.m ** (2 * self.k)

    def pmf(self, nu: int) -> Fraction:
        if abs(nu) > self.radius:
            return Fraction(0)
        return Fraction(self.counts[nu + self.radius], self.denominator)

    def as_dict(self) -> dict[int, Fraction]:
        return {nu: self.pmf(nu) for nu in range(-self.radius, self.radius + 1)}

    def total_mass(self) -> Fraction:
        return Fraction(sum(self.counts), self.denominator)

    def values(self) -> npt.NDArray[np.int64]:
        return np.arange(-self.radius, self.radius + 1, dtype=np.int64)

    def probabilities(self) -> npt.NDArray[np.float64]:
        den = self.denominator
        return np.array([c / den for c in self.counts], dtype=np.float64)

    def fourier_sum(self, t: ArrayLike) -> ArrayLike:
        """
        Function that evaluates sum_nu P{S_k = nu} cos(2 pi t nu) from the stored law.
        """

        arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
        phases = np.cos(2 * np.pi * np.outer(arr, self.values()))
        out = phases @ self.probabilities()
        return float(out[0]) if np.ndim(t) == 0 else out


def _window_sum(coeffs: list[int], width: int) -> list[int]:
    """
    Function that multiplies a coefficient list by 1 + z + ... + z^(width-1).
    """

    n = len(coeffs)
    prefix = [0, *accumulate(coeffs)]
    return [prefix[min(i + 1, n)] - prefix[max(0, i - width + 1)] for i in range(n + width - 1)]


def convolve(
    law: FejerLaw, k: int, support_cap: int = DEFAULT_SUPPORT_CAP
) -> SumDistribution:
    """
    Function that computes the exact k-fold self-convolution of a Fejer law.

    The numerators are the coefficients of A_m(z)^(2k), built by 2k window sums.

    :param law: the Fejer law.
    :param k: the number of summands.
    :param support_cap: the largest admissible half-width (m-1)k.
    :return: the distribution of S_k.
    :raises SupportCapExceeded: if (m-1)k exceeds the cap.
    """

    _check_mk(law.m, k)
    radius = (law.m - 1) * k
    if radius > support_cap:
        raise SupportCapExceeded(support_cap, radius)

    coeffs = [1]
    for _ in range(2 * k):
        coeffs = _window_sum(coeffs, law.m)
    return SumDistribution(law.m, k, tuple(coeffs))


def char_fn_sum(dist: SumDistribution, t: ArrayLike) -> ArrayLike:
    """
    Function that evaluates phi_{S_k}(t) = phi_X(t)^k.
    """

    phi = FejerLaw(dist.m).char_fn(t)
    return phi**dist.k


def _exact_center_count(m: int, k: int) -> int:
    # coefficient of z^((m-1)k) in ((1 - z^m)/(1 - z))^(2k)
    j = (m - 1) * k
    n = 2 * k
    total = 0
    for i in range(j // m + 1):
        term = math.comb(n, i) * math.comb(j - m * i + n - 1, n - 1)
        total += -term if i % 2 else term
    return total


def _sigma_t(m: int, k: int) -> float:
    return 1.0 / (2 * math.pi * math.sqrt(k * (m * m - 1) / 6))


def _quadrature_p_zero(m: int, k: int, rtol: float) -> float:
    law = FejerLaw(m)

    def integrand(t: float) -> float:
        return float(law.char_fn(t)) ** k

    sigma = _sigma_t(m, k)
    points = [c * sigma for c in (0.5, 1, 2, 4, 8, 16, 32, 64)]
    points += [j / m for j in range(1, m // 2 + 1)]
    cutoff = min(0.5, 80 * sigma)
    head = integrate_1d(integrand, 0.0, cutoff, rtol=rtol, atol=1e-15, points=points, what="p_zero")
    tail = 0.0
    if cutoff < 0.5:
        tail = integrate_1d(
            integrand, cutoff, 0.5, rtol=rtol, atol=1e-15, points=points, what="p_zero tail"
        )
    return 2.0 * (head + tail)


def p_zero(
    m: int, k: int, method: PZeroMethod = PZeroMethod.EXACT, rtol: float = DEFAULT_QUAD_RTOL
) -> Fraction | float:
    """
    Function that computes P{S_k = 0}.

    :param m: the law parameter.
    :param k: the number of summands.
    :param method: exact rational, quadrature of the kernel power, or one of the asymptotics.
    :param rtol: the quadrature relative tolerance.
    :return: a Fraction for the exact route, a float otherwise.
    """

    _check_mk(m, k)
    match method:
        case PZeroMethod.EXACT:
            return Fraction(_exact_center_count(m, k), m ** (2 * k))
        case PZeroMethod.QUADRATURE:
            if m == 1:
                return 1.0
            return _quadrature_p_zero(m, k, rtol)
        case PZeroMethod.ASYMPTOTIC:
            return math.sqrt(3 / math.pi) / (m * math.sqrt(k))
        case PZeroMethod.LOCAL_LIMIT:
            if m == 1:
                return 1.0
            return 1.0 / math.sqrt(math.pi * k * (m * m - 1) / 3)
    raise DomainError(f"unknown method {method}")


def p_zero_auto(
    m: int, k: int, exact_limit: int = DEFAULT_EXACT_LIMIT, rtol: float = DEFAULT_QUAD_RTOL
) -> float:
    """
    Function that computes P{S_k = 0} exactly when (m-1)k is small, by quadrature otherwise.
    """

    method = PZeroMethod.EXACT if (m - 1) * k <= exact_limit else PZeroMethod.QUADRATURE
    return float(p_zero(m, k, method, rtol))


def p_zero_lower_bound(m: int, k: int, C0: float = DEFAULT_C0) -> float:
    """
    Function that computes C0/(m sqrt(k)).

    :raises DomainError: if C0 is not in (0, 1/4).
    """

    _check_mk(m, k)
    if not 0 < C0 < 0.25:
        raise DomainError(f"C0 must lie in (0, 1/4), got {C0}")
    return C0 / (m * math.sqrt(k))


@dataclass(frozen=True)
class Violation:
    m: int
    k: int
    p_zero: float
    bound: float


@dataclass
class Calibration:
    """
    Outcome of a C0/k0 calibration sweep.
    """

    """Largest feasible C0 on the 0.01 grid, None if nothing is feasible."""
    c0: float | None
    """Smallest k0 for which c0 holds."""
    k0: int | None
    """Pairs violating the default constants."""
    violations: list[Violation]
    """Smallest p_zero m sqrt(k) seen, with its (m, k)."""
    min_ratio: float
    argmin: tuple[int, int]
    checked: int


def calibrate_c0(
    m_max: int,
    k_max: int,
    exact_limit: int = DEFAULT_EXACT_LIMIT,
    rtol: float = DEFAULT_QUAD_RTOL,
    default_c0: float = DEFAULT_C0,
    default_k0: int = DEFAULT_K0,
    progress: bool = False,
) -> Calibration:
    """
    Function that searches the largest C0 < 1/4 and smallest k0 with
    P{S_k = 0} >= C0/(m sqrt(k)) for all m <= m_max and k0 <= k <= k_max.

    :param m_max: the largest law parameter.
    :param k_max: the largest number of summands.
    :param exact_limit: the half-width up to which the exact route is used.
    :param rtol: the quadrature relative tolerance.
    :param default_c0: the constant whose violations are reported.
    :param default_k0: the threshold whose violations are reported.
    :param progress: show a progress bar.
    :return: the calibration; an empty feasible set yields c0 = None.
    """

    _check_mk(m_max, k_max)
    # ratios[k-1] is the smallest p_zero m sqrt(k) over m for that k
    ratios = [math.inf] * k_max
    argmins: list[tuple[int, int]] = [(1, k) for k in range(1, k_max + 1)]
    violations: list[Violation] = []

    pairs = [(m, k) for m in range(1, m_max + 1) for k in range(1, k_max + 1)]
    for m, k in tqdm(pairs, desc="Calibration", unit="pair", disable=not progress):
        p = p_zero_auto(m, k, exact_limit, rtol)
        r = p * m * math.sqrt(k)
        if r < ratios[k - 1]:
            ratios[k - 1] = r
            argmins[k - 1] = (m, k)
        bound = default_c0 / (m * math.sqrt(k))
        if k >= default_k0 and p < bound:
            violations.append(Violation(m, k, p, bound))

    # suffix minima: the worst ratio over k >= k0
    suffix = list(accumulate(reversed(ratios), min))[::-1]
    c0: float | None = None
    k0: int | None = None
    for start in range(1, k_max + 1):
        candidate = min(0.24, math.floor(suffix[start - 1] * 100) / 100)
        if candidate >= 0.01:
            c0, k0 = candidate, start
            break

    worst = min(range(k_max), key=lambda i: ratios[i])
    if violations:
        log.warning(f"{len(violations)} pairs violate C0={default_c0}, k0={default_k0}")
    log.info(f"Calibration over m<={m_max}, k<={k_max}: C0={c0}, k0={k0}")
    return Calibration(c0, k0, violations, ratios[worst], argmins[worst], len(pairs))


@dataclass(frozen=True)
class KernelBounds:
    """
    The integral of (sin(pi m t)/sin(pi t))^(2k) over [0, 1] with its lower and upper bounds.
    """

    m: int
    k: int
    lower: LogMagnitude
    integral: LogMagnitude
    upper: LogMagnitude

    @property
    def lower_holds(self) -> bool:
        return self.lower.log <= self.integral.log + 1e-12

    @property
    def upper_holds(self) -> bool:
        return self.integral.log <= self.upper.log + 1e-12


def kernel_integral_bounds(
    m: int, k: int, exact_limit: int = DEFAULT_EXACT_LIMIT, rtol: float = DEFAULT_QUAD_RTOL
) -> KernelBounds:
    """
    Function that computes the kernel integral m^(2k) P{S_k = 0} with the bounds
    (e^(-1/5)/pi) m^(2k-1)/sqrt(k) and 2^(2k+1) m^(4k^2/(2k+1)), all in log space.

    The upper bound is only claimed for m above an unspecified threshold, so a failure is
    reported through `upper_holds` rather than raised.
    """

    _check_mk(m, k)
    p = p_zero_auto(m, k, exact_limit, rtol)
    log_m = math.log(m)
    integral = LogMagnitude(2 * k * log_m + math.log(p))
    lower = LogMagnitude(-0.2 - math.log(math.pi) + (2 * k - 1) * log_m - 0.5 * math.log(k))
    upper = LogMagnitude((2 * k + 1) * math.log(2) + 4 * k * k / (2 * k + 1) * log_m)
    bounds = KernelBounds(m, k, lower, integral, upper)
    if not bounds.upper_holds:
        log.warning(f"kernel upper bound fails at m={m}, k={k}")
    return bounds


def _decay_rhs(m: int, k: int, t: ArrayLike) -> npt.NDArray[np.float64]:
    arr = np.asarray(t, dtype=np.float64)
    dist = np.abs(arr - np.rint(arr))
    with np.errstate(divide="ignore", over="ignore"):
        rhs = np.power(2.0 * m * dist, -2.0 * k)
    return np.minimum(1.0, rhs)


def decay_bound_check(m: int, k: int, t: float) -> bool:
    """
    Function that checks phi_{S_k}(t) <= min(1, (2m ||t||)^(-2k)).
    """

    _check_mk(m, k)
    lhs = float(FejerLaw(m).char_fn(t)) ** k
    rhs = float(_decay_rhs(m, k, t))
    return lhs <= rhs * (1 + 1e-12)


def decay_violations(m: int, k: int, points: int = 10_000) -> list[float]:
    """
    Function that checks the decay bound on the grid j/(2 points), j = 1..points.

    :return: the grid points where it fails.
    """

    _check_mk(m, k)
    t = np.arange(1, points + 1, dtype=np.float64) / (2 * points)
    lhs = np.asarray(FejerLaw(m).char_fn(t)) ** k
    bad = lhs > _decay_rhs(m, k, t) * (1 + 1e-12)
    return [float(x) for x in t[bad]]


def local_limit_deviation(dist: SumDistribution) -> float:
    """
    Function that measures sup_nu |sigma sqrt(k) P{S_k = nu} - gaussian(nu/(sigma sqrt k))|.

    :param dist: a non-degenerate sum distribution.
    :return: the uniform deviation from the local limit.
    """

    if dist.m == 1:
        raise DomainError("the law with m = 1 is degenerate")
    s = math.sqrt(dist.k * (dist.m * dist.m - 1) / 6)
    nu = dist.values().astype(np.float64)
    gauss = np.exp(-(nu**2) / (2 * s * s)) / math.sqrt(2 * math.pi)
    return float(np.max(np.abs(s * dist.probabilities() - gauss)))


def fejer_identity(m: int, t: float) -> tuple[float, float, float]:
    """
    Function that evaluates the characteristic function three ways: the closed form, the
    Fourier sum of the law, and |A_m(e(t))|^2/m^2.
    """

    law = FejerLaw(m)
    closed = float(law.char_fn(t))
    n = np.arange(-(m - 1), m)
    weights = np.array([float(law.pmf(int(j))) for j in n])
    fourier = float(np.sum(weights * np.cos(2 * np.pi * t * n)))
    a = np.sum(np.exp(2j * np.pi * t * np.arange(m)))
    return closed, fourier, float(abs(a) ** 2) / (m * m)
