"""
Dirichlet polynomials, generalized polynomials over a frequency system and their lift to the
torus.

A polynomial is sum_n alpha_n e^(i t b(n)) with b(n) = sum_j a_j(n) lambda_j for integer
exponent vectors a(n). For a Dirichlet polynomial the frequencies are the logs of the primes
up to L and a(n) is the factorization of n, so that b(n) = log n. The lift replaces
t lambda_j/(2 pi) by an independent torus variable theta_j.
"""

from __future__ import annotations

import math
import os
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import numpy.typing as npt
from scipy.optimize import minimize_scalar

from klt import logger
from klt.bounds import choose_params, theorem1_bound
from klt.config import DEFAULT_C0, DEFAULT_ENUMERATION_CAP, DEFAULT_SCAN_CAP
from klt.errors import (
    DomainError,
    EnumerationCapExceeded,
    FrequencyParseError,
    ScanCapExceeded,
)
from klt.frequency import FrequencyKind, FrequencySpec, LinearFormInstance, parse_frequency_file
from klt.lattice import IndependenceResult, XiResult, coefficient_bound, independence_check, xi
from klt.policies import Sampler, SearchMode, ZeroPolicy
from klt.report import Check
from klt.search import TargetInstance, WitnessResult, find_witness, scan_length
from klt.workers import run_partitioned, split_range

log = logger.get()

"""Evaluation points per vectorized block."""
BLOCK = 4096


@dataclass(frozen=True)
class FactorTable:
    """
    Exponents of the primes up to L in every n <= L.
    """

    primes: tuple[int, ...]
    """Row n - 1 holds a_1(n), ..., a_N(n)."""
    exponents: npt.NDArray[np.int64] = field(repr=False)
    """Omega(n) = sum_j a_j(n), row n - 1."""
    omega: npt.NDArray[np.int64] = field(repr=False)

    @property
    def L(self) -> int:
        return len(self.omega)

    @property
    def N(self) -> int:
        return len(self.primes)

    def exponent(self, n: int) -> tuple[int, ...]:
        return tuple(int(a) for a in self.exponents[n - 1])


def factorize_table(L: int) -> FactorTable:
    """
    Function that factors every n <= L over the primes up to L.

    :param L: the length of the polynomial.
    :return: the primes, the exponent table and Omega.
    """

    if L < 1:
        raise DomainError(f"L must be positive, got {L}")

    sieve = np.ones(L + 1, dtype=np.bool_)
    sieve[:2] = False
    for p in range(2, math.isqrt(L) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    primes = tuple(int(p) for p in np.flatnonzero(sieve))

    exponents = np.zeros((L, len(primes)), dtype=np.int64)
    for j, p in enumerate(primes):
        q = p
        while q <= L:
            # row n - 1 for n = q, 2q, 3q, ...
            exponents[q - 1 :: q, j] += 1
            q *= p
    return FactorTable(primes, exponents, exponents.sum(axis=1))


@dataclass(frozen=True)
class SupResult:
    """
    A certified lower bound for a supremum: the largest value met and where.
    """

    value: float
    argmax: float | tuple[float, ...]
    """Number of sampled points before refinement."""
    evaluations: int
    """Largest value over the samples alone."""
    sampled: float


class Polynomial(ABC):
    """
    sum_n alpha_n e^(i t b(n)) over a frequency system.
    """

    @property
    @abstractmethod
    def instance(self) -> LinearFormInstance: ...

    @property
    @abstractmethod
    def exponents(self) -> npt.NDArray[np.int64]:
        """
        Integer exponent vectors a(n), one row per term.
        """

    @property
    @abstractmethod
    def coefficients(self) -> npt.NDArray[np.complex128]: ...

    @property
    @abstractmethod
    def weights(self) -> npt.NDArray[np.int64]:
        """
        The per-term factor of the approximation error bound.
        """

    @cached_property
    def frequencies(self) -> npt.NDArray[np.float64]:
        """
        b(n) = sum_j a_j(n) lambda_j.
        """

        return (self.exponents @ self.instance.floats).astype(np.float64)

    def evaluate(self, t: float | npt.NDArray[np.float64]) -> complex | npt.NDArray[np.complex128]:
        """
        Function that evaluates sum_n alpha_n e^(i t b(n)).

        :param t: a point or an array of points.
        :return: the value, or an array of values.
        """

        tt = np.atleast_1d(np.asarray(t, dtype=np.float64))
        values = np.exp(1j * np.outer(tt, self.frequencies)) @ self.coefficients
        return complex(values[0]) if np.ndim(t) == 0 else values

    def bohr_lift(
        self, theta: tuple[float, ...] | list[float] | npt.NDArray[np.float64]
    ) -> complex | npt.NDArray[np.complex128]:
        """
        Function that evaluates the lift sum_n alpha_n e(sum_j a_j(n) theta_j).

        :param theta: one point of the torus, or an array with one point per row.
        :return: the value, or an array of values.
        """

        th = np.asarray(theta, dtype=np.float64)
        single = th.ndim <= 1
        if single:
            th = th.reshape(1, self.instance.N)
        values = np.exp(2j * np.pi * (th @ self.exponents.T)) @ self.coefficients
        return complex(values[0]) if single else values

    def lift_point(self, tau: float) -> npt.NDArray[np.float64]:
        """
        Function that returns frac(tau lambda_j), the torus point matching D(2 pi tau).
        """

        x = tau * self.instance.floats
        return x - np.floor(x)

    def approx_error_bound(self, omega: float) -> float:
        """
        Function that bounds |D(2 pi tau) - Q(theta)| when every ||tau lambda_j - theta_j||
        is at most 1/omega.

        :param omega: the inverse accuracy.
        :return: (2 pi/omega) sum_n |alpha_n| w(n).
        """

        if omega < 1:
            raise DomainError(f"omega must be at least 1, got {omega}")
        return 2 * math.pi / omega * float(np.sum(np.abs(self.coefficients) * self.weights))

    def __len__(self) -> int:
        return len(self.coefficients)


class DirichletPolynomial(Polynomial):
    """
    D_L(t) = sum_{n <= L} alpha_n n^(it).
    """

    def __init__(
        self, coefficients: list[complex] | npt.NDArray[np.complex128], precision: int = 256
    ) -> None:
        alphas = np.asarray(coefficients, dtype=np.complex128)
        if alphas.ndim != 1 or len(alphas) == 0:
            raise DomainError("a Dirichlet polynomial needs at least one coefficient")
        self._coefficients = alphas
        self.table = factorize_table(len(alphas))
        self._instance = LinearFormInstance.of(
            [FrequencySpec(FrequencyKind.LOG, p, precision) for p in self.table.primes], precision
        )

    def __repr__(self) -> str:
        return f"DirichletPolynomial(L={self.L})"

    @property
    def L(self) -> int:
        return len(self._coefficients)

    @property
    def instance(self) -> LinearFormInstance:
        return self._instance

    @property
    def exponents(self) -> npt.NDArray[np.int64]:
        return self.table.exponents

    @property
    def coefficients(self) -> npt.NDArray[np.complex128]:
        return self._coefficients

    @property
    def weights(self) -> npt.NDArray[np.int64]:
        return self.table.omega

    @cached_property
    def frequencies(self) -> npt.NDArray[np.float64]:
        return np.log(np.arange(1, self.L + 1, dtype=np.float64))


@dataclass(frozen=True)
class ConditionCheck:
    independence: IndependenceResult
    """Whether the exponent vectors are pairwise distinct."""
    distinct: bool

    @property
    def holds(self) -> bool:
        return self.independence.independent and self.distinct


class GeneralizedPolynomial(Polynomial):
    """
    sum_n alpha_n e^(i t b(n)) for arbitrary integer exponent vectors with max |a_j(n)| <= A.
    """

    def __init__(
        self,
        instance: LinearFormInstance,
        exponents: list[list[int]] | npt.NDArray[np.int64],
        coefficients: list[complex] | npt.NDArray[np.complex128],
    ) -> None:
        a = np.asarray(exponents, dtype=np.int64)
        alphas = np.asarray(coefficients, dtype=np.complex128)
        if a.ndim != 2 or a.shape[1] != instance.N:
            raise DomainError(f"exponent vectors must have length {instance.N}")
        if len(a) != len(alphas) or len(a) == 0:
            raise DomainError("one coefficient per exponent vector, at least one term")
        self._instance = instance
        self._exponents = a
        self._coefficients = alphas

    def __repr__(self) -> str:
        return f"GeneralizedPolynomial(N={self.instance.N}, terms={len(self)}, A={self.A})"

    @property
    def instance(self) -> LinearFormInstance:
        return self._instance

    @property
    def exponents(self) -> npt.NDArray[np.int64]:
        return self._exponents

    @property
    def coefficients(self) -> npt.NDArray[np.complex128]:
        return self._coefficients

    @property
    def A(self) -> int:
        return int(np.abs(self._exponents).max(initial=0))

    @property
    def B(self) -> npt.NDArray[np.int64]:
        """
        B(n) = sum_j a_j(n).
        """

        return self._exponents.sum(axis=1)

    @property
    def weights(self) -> npt.NDArray[np.int64]:
        return np.abs(self._exponents).sum(axis=1)

    def check_condition(
        self,
        policy: ZeroPolicy | None = None,
        enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
    ) -> ConditionCheck:
        """
        Function that checks that no nonzero combination with coefficients up to 2A vanishes,
        which makes n -> b(n) injective, and that the exponent vectors are distinct.

        :param policy: the zero policy.
        :param enumeration_cap: the maximum number of nodes.
        :return: both parts of the check.
        """

        independence = independence_check(self.instance, 2 * self.A, policy, enumeration_cap)
        distinct = len({tuple(row) for row in self._exponents.tolist()}) == len(self)
        if not independence.independent:
            log.warning(f"frequencies dependent at bound {2 * self.A}: {independence.witness}")
        return ConditionCheck(independence, distinct)


def _maximize(
    f: Callable[[float], float], lo: float, hi: float, xatol: float
) -> tuple[float, float]:
    res = minimize_scalar(
        lambda x: -f(x), bounds=(lo, hi), method="bounded", options={"xatol": xatol}
    )
    return float(res.x), float(-res.fun)


def sup_interval(
    poly: Polynomial,
    d: float,
    T: float,
    step: float | None = None,
    point_cap: int = DEFAULT_SCAN_CAP,
) -> SupResult:
    """
    Function that bounds sup |P(t)| over [d, d + T] from below by a grid scan refined around
    the best grid point.

    :param poly: the polynomial.
    :param d: the start of the interval.
    :param T: the length of the interval.
    :param step: the grid step, 0.1/max_n |b(n)| when None.
    :param point_cap: the maximum number of grid points.
    :return: the largest modulus met and its location.
    :raises ScanCapExceeded: if the grid has more than `point_cap` points.
    """

    if T < 0:
        raise DomainError(f"T must be nonnegative, got {T}")
    if step is None:
        step = 0.1 / max(1.0, float(np.max(np.abs(poly.frequencies))))
    if step <= 0:
        raise DomainError(f"grid step must be positive, got {step}")

    count = math.floor(T / step) + 1
    if count > point_cap:
        raise ScanCapExceeded(point_cap, count)

    best = (-1.0, d)
    for start in range(0, count, BLOCK):
        t = d + np.arange(start, min(count, start + BLOCK), dtype=np.float64) * step
        values = np.abs(poly.evaluate(t))
        i = int(np.argmax(values))
        if values[i] > best[0]:
            best = (float(values[i]), float(t[i]))
    end = abs(poly.evaluate(d + T))
    if end > best[0]:
        best = (end, d + T)
    sampled, t0 = best

    lo, hi = max(d, t0 - step), min(d + T, t0 + step)
    if hi > lo:
        t1, v1 = _maximize(lambda x: abs(poly.evaluate(x)), lo, hi, step * 1e-9)
        if v1 > best[0]:
            best = (v1, t1)
    log.debug(f"interval sup: {count} points, sampled {sampled:.6g}, refined {best[0]:.6g}")
    return SupResult(best[0], best[1], count + 1, sampled)


def _torus_points(
    sampler: Sampler,
    g: int,
    N: int,
    lo: int,
    hi: int,
    rng_points: npt.NDArray[np.float64] | None,
) -> npt.NDArray[np.float64]:
    if sampler is Sampler.RANDOM:
        assert rng_points is not None
        return rng_points[lo:hi]
    idx = np.arange(lo, hi, dtype=np.int64)
    pts = np.empty((len(idx), N), dtype=np.float64)
    for j in range(N):
        idx, digit = np.divmod(idx, g)
        pts[:, j] = digit / g
    return pts


def sup_torus(
    poly: Polynomial,
    sampler: Sampler = Sampler.GRID,
    budget: int = 4096,
    seed: int = 0,
    workers: int = 1,
    rounds: int = 2,
) -> SupResult:
    """
    Function that bounds sup |Q(theta)| over the torus from below.

    The grid sampler uses floor(budget^(1/N)) points per coordinate, the random sampler
    `budget` seeded uniform points. The best sample is then refined one coordinate at a time.

    :param poly: the polynomial.
    :param sampler: how the torus is sampled.
    :param budget: the number of samples.
    :param seed: the seed of the random sampler.
    :param workers: threads sharing the samples.
    :param rounds: the number of coordinate-wise refinement sweeps.
    :return: the largest modulus met and its location, reduced mod 1.
    """

    if budget < 1:
        raise DomainError(f"budget must be positive, got {budget}")
    N = poly.instance.N
    if N == 0:
        value = abs(complex(np.sum(poly.coefficients)))
        return SupResult(value, (), 1, value)

    rng_points = None
    if sampler is Sampler.RANDOM:
        g = max(1, round(budget ** (1 / N)))
        count = budget
        rng_points = np.random.default_rng(seed).random((budget, N))
    else:
        g = max(1, math.floor(budget ** (1 / N) + 1e-9))
        count = g**N

    def part(bounds: tuple[int, int]) -> tuple[float, tuple[float, ...]]:
        best: tuple[float, tuple[float, ...]] = (-1.0, ())
        for start in range(bounds[0], bounds[1] + 1, BLOCK):
            stop = min(bounds[1] + 1, start + BLOCK)
            pts = _torus_points(sampler, g, N, start, stop, rng_points)
            values = np.abs(poly.bohr_lift(pts))
            i = int(np.argmax(values))
            if values[i] > best[0]:
                best = (float(values[i]), tuple(float(x) for x in pts[i]))
        return best

    results = run_partitioned(part, split_range(0, count - 1, workers), workers)
    sampled, theta0 = min(results, key=lambda r: (-r[0], r[1]))

    theta = np.array(theta0, dtype=np.float64)
    value = sampled
    h = 0.5 / g
    for _ in range(rounds):
        for j in range(N):

            def along(x: float, j: int = j) -> float:
                point = theta.copy()
                point[j] = x
                return abs(poly.bohr_lift(point))

            x, v = _maximize(along, theta[j] - h, theta[j] + h, h * 1e-9)
            if v > value:
                theta[j] = x
                value = v
        h /= 2

    theta = theta - np.floor(theta)
    log.debug(f"torus sup: {count} samples, sampled {sampled:.6g}, refined {value:.6g}")
    return SupResult(value, tuple(float(x) for x in theta), count, sampled)


def lift_identity_deviation(
    poly: Polynomial, taus: list[float] | npt.NDArray[np.float64]
) -> float:
    """
    Function that measures max |D(2 pi tau) - Q(frac(tau lambda))| over the given tau.
    """

    tt = np.asarray(taus, dtype=np.float64)
    direct = poly.evaluate(2 * np.pi * tt)
    x = np.outer(tt, poly.instance.floats)
    lifted = poly.bohr_lift((x - np.floor(x)).reshape(len(tt), poly.instance.N))
    return float(np.max(np.abs(direct - lifted), initial=0.0))


@dataclass
class TransferReport:
    """
    A located tau for a torus target with the gap between D(2 pi tau) and Q(theta).
    """

    theta: tuple[float, ...]
    omega: int
    """The searched interval is [d, d + T]."""
    T: float
    witness: WitnessResult
    D: complex
    Q: complex
    gap: float
    bound: float
    """The lattice minimum behind an automatic T, None when T came from the scan cap."""
    xi: XiResult | None = None
    checks: list[Check] = field(default_factory=list)
    notes: tuple[str, ...] = ()

    @property
    def tau(self) -> float:
        return self.witness.t


def kronecker_transfer_check(
    poly: Polynomial,
    theta: tuple[float, ...] | list[float],
    omega: int,
    d: float = 0.0,
    T: float | None = None,
    C0: float = DEFAULT_C0,
    mode: SearchMode = SearchMode.FIRST_HIT,
    slack: float | None = None,
    policy: ZeroPolicy | None = None,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
    scan_cap: int = DEFAULT_SCAN_CAP,
    workers: int = 1,
) -> TransferReport:
    """
    Function that finds tau in [d, d + T] with ||tau lambda_j - theta_j|| <= 1/omega and
    checks |D(2 pi tau) - Q(theta)| against approx_error_bound(omega).

    :param poly: the polynomial.
    :param theta: the torus target.
    :param omega: the inverse accuracy.
    :param d: the start of the interval.
    :param T: the interval length. When None, the localization bound for the frequencies, or
        the length covered by scan_cap grid points when Xi outgrows the enumeration cap.
    :param C0: the constant of the localization bound.
    :param mode: the search mode.
    :param slack: the grid slack of the search.
    :param policy: the zero policy of the lattice minimum.
    :param enumeration_cap: the cap of the lattice enumeration.
    :param scan_cap: the cap of the search grid.
    :param workers: the number of workers.
    :return: the report with its checks.
    :raises WitnessNotFound: if the search grid holds no witness.
    """

    instance = poly.instance
    xi_res = None
    notes: list[str] = []
    if T is None:
        params = choose_params(instance.N, omega, C0)
        U = coefficient_bound(instance.N, omega, C0)
        try:
            xi_res = xi(instance, U, policy, enumeration_cap, workers)
        except EnumerationCapExceeded as e:
            # no Xi within the cap: first hit from d, bounded by the scan cap
            T = scan_length(instance, omega, slack, scan_cap)
            mode = SearchMode.FIRST_HIT
            notes.append(f"{e}: first-hit scan from d up to the scan cap, T = {T:.6g}")
            log.warning(notes[-1])
        else:
            bound_T = theorem1_bound(params, float(xi_res.value))
            if not bound_T.representable:
                raise DomainError(f"localization bound e^{bound_T.log:.4g} overflows; pass T")
            T = bound_T.value
            log.info(f"Interval length from the localization bound: T = {T:.6g}")

    target = TargetInstance(instance, tuple(float(x) for x in theta), d, T, omega)
    witness = find_witness(target, mode, slack, scan_cap, workers)

    tau = witness.t
    D = complex(poly.evaluate(2 * math.pi * tau))
    Q = complex(poly.bohr_lift(list(target.betas)))
    gap = abs(D - Q)
    bound = poly.approx_error_bound(omega)
    lifted = complex(poly.bohr_lift(poly.lift_point(tau)))

    checks = [
        Check.leq("|D(2 pi tau) - Q(theta)| <= bound", gap, bound),
        Check.leq("lift identity at tau", abs(D - lifted), 1e-10),
    ]
    return TransferReport(
        target.betas, omega, T, witness, D, Q, gap, bound, xi_res, checks, tuple(notes)
    )


def _parse_body_line(
    parts: list[str], ints: int, lineno: int
) -> tuple[list[int], complex]:
    if len(parts) != ints + 2:
        raise FrequencyParseError(f"expected {ints + 2} fields, got {len(parts)}", lineno)
    try:
        index = [int(p) for p in parts[:ints]]
        alpha = complex(float(parts[ints]), float(parts[ints + 1]))
    except ValueError as e:
        raise FrequencyParseError(str(e), lineno) from None
    return index, alpha


def parse_poly_file(path: str, precision: int = 256) -> Polynomial:
    """
    Function that reads a polynomial file.

    The first line is either `L <int>`, for a Dirichlet polynomial followed by `n re im`
    lines, or `freq <path>`, naming a frequency file relative to this one and followed by
    `a_1 ... a_N re im` lines. Missing Dirichlet coefficients are zero.

    :param path: the file path.
    :param precision: the evaluation precision of the frequencies.
    :return: the polynomial.
    :raises FrequencyParseError: with the offending line number.
    """

    with open(path, "r", encoding="utf-8") as file:
        lines = [
            (lineno, text.split())
            for lineno, raw in enumerate(file, start=1)
            if (text := raw.split("#", 1)[0].strip())
        ]
    if not lines:
        raise FrequencyParseError(f"{path} is empty")

    header_line, header = lines[0]
    body = lines[1:]
    if len(header) != 2 or header[0] not in ("L", "freq"):
        raise FrequencyParseError("expected header 'L <int>' or 'freq <path>'", header_line)

    if header[0] == "L":
        try:
            L = int(header[1])
        except ValueError:
            raise FrequencyParseError(
                f"L must be an integer, got {header[1]!r}", header_line
            ) from None
        if L < 1:
            raise FrequencyParseError(f"L must be positive, got {L}", header_line)
        alphas = np.zeros(L, dtype=np.complex128)
        seen: set[int] = set()
        for lineno, parts in body:
            (n,), alpha = _parse_body_line(parts, 1, lineno)
            if not 1 <= n <= L:
                raise FrequencyParseError(f"index {n} outside 1..{L}", lineno)
            if n in seen:
                raise FrequencyParseError(f"index {n} given twice", lineno)
            seen.add(n)
            alphas[n - 1] = alpha
        return DirichletPolynomial(alphas, precision)

    freq_path = os.path.join(os.path.dirname(os.path.abspath(path)), header[1])
    instance = LinearFormInstance.of(parse_frequency_file(freq_path, precision), precision)
    rows = []
    coefficients = []
    for lineno, parts in body:
        row, alpha = _parse_body_line(parts, instance.N, lineno)
        rows.append(row)
        coefficients.append(alpha)
    if not rows:
        raise FrequencyParseError(f"{path} holds no term")
    log.debug(f"Read {len(rows)} terms over {instance.N} frequencies from {path}")
    return GeneralizedPolynomial(instance, rows, coefficients)
