"""
Minima of integer linear forms in the frequencies and Q-independence checks.

Combinations are formed exactly on fixed-point integers carrying `precision` fractional
bits, so the enumeration never depends on float rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import mpmath
from mpmath import mpf

from klt import logger
from klt.config import DEFAULT_ENUMERATION_CAP
from klt.errors import DomainError, EnumerationCapExceeded, NoNonzeroCombination
from klt.frequency import LinearFormInstance
from klt.policies import ZeroPolicy
from klt.workers import run_partitioned, split_range

log = logger.get()


class ZeroClassifier:
    """
    Decides whether sum u_j lambda_j vanishes.

    The threshold policy compares the fixed-point sum with 2^(-precision/2). The exact
    policy, available when every lambda_j is log n_j, compares prod n_j^(u_j) with 1.
    """

    """The policy applied."""
    policy: ZeroPolicy
    """Threshold in fixed-point units."""
    threshold: int
    """The integers n_j of an all-log instance."""
    payloads: tuple[int, ...] | None

    def __init__(self, instance: LinearFormInstance, policy: ZeroPolicy | None = None) -> None:
        payloads = instance.log_payloads
        if policy is None:
            policy = ZeroPolicy.EXACT_MULTIPLICATIVE if payloads else ZeroPolicy.THRESHOLD
        if policy is ZeroPolicy.EXACT_MULTIPLICATIVE and payloads is None:
            raise DomainError("exact-multiplicative zero policy needs log-of-integer frequencies")

        self.policy = policy
        self.payloads = payloads if policy is ZeroPolicy.EXACT_MULTIPLICATIVE else None
        self.threshold = threshold_units(instance.precision)

    def is_zero(self, u: tuple[int, ...] | list[int], s: int) -> bool:
        """
        Function that classifies one combination.

        :param u: the integer coefficients.
        :param s: the fixed-point value of the combination.
        :return: whether the combination counts as zero.
        """

        return _is_zero(self.payloads, self.threshold, u, s)


def threshold_units(precision: int) -> int:
    """
    Function that returns 2^(-precision/2) expressed in units of 2^(-precision).
    """

    return 1 << (precision - precision // 2)


def _is_zero(
    payloads: tuple[int, ...] | None, threshold: int, u: tuple[int, ...] | list[int], s: int
) -> bool:
    if payloads is None:
        return abs(s) < threshold
    if abs(s) >= threshold:
        return False
    num, den = 1, 1
    for n, c in zip(payloads, u):
        if c > 0:
            num *= n**c
        elif c < 0:
            den *= n ** (-c)
    return num == den


@dataclass(frozen=True)
class XiResult:
    """
    The smallest nonzero |sum u_j lambda_j| with max |u_j| <= bound.
    """

    """The minimum."""
    value: mpf
    """The achieving vector, first nonzero coordinate positive."""
    witness: tuple[int, ...]
    """The coefficient bound U."""
    bound: int
    """The zero policy used."""
    zero_policy: ZeroPolicy
    """Number of enumeration nodes visited."""
    nodes: int = 0


@dataclass(frozen=True)
class IndependenceResult:
    independent: bool
    witness: tuple[int, ...] | None
    bound: int
    zero_policy: ZeroPolicy


def coefficient_bound(N: int, omega: int, C0: float) -> int:
    """
    Function that computes U = floor(6 omega log(N omega / C0)).

    :param N: the number of frequencies.
    :param omega: the accuracy parameter, the target being 1/omega.
    :param C0: the lower-bound constant, in (0, 1/4).
    :return: the coefficient bound.
    :raises DomainError: outside the admissible ranges.
    """

    if N < 1 or omega < 1:
        raise DomainError(f"N and omega must be positive, got N={N}, omega={omega}")
    if not 0 < C0 < 0.25:
        raise DomainError(f"C0 must lie in (0, 1/4), got {C0}")
    x = N * omega / C0
    if x <= 1:
        raise DomainError(f"N*omega/C0 must exceed 1, got {x}")
    return math.floor(6 * omega * math.log(x))


class _Enumerator:
    """
    Depth-first search over coefficient vectors with partial-sum pruning.

    Plain data only, so instances travel to worker processes.
    """

    def __init__(
        self,
        fixed: list[int],
        U: int,
        payloads: tuple[int, ...] | None,
        threshold: int,
        cap: int,
    ) -> None:
        self.fixed = fixed
        self.U = U
        self.payloads = payloads
        self.threshold = threshold
        self.cap = cap
        self.N = len(fixed)
        # tails[i] bounds |sum_{j>=i} u_j L_j|
        self.tails = [0] * (self.N + 1)
        for i in range(self.N - 1, -1, -1):
            self.tails[i] = self.tails[i + 1] + U * abs(fixed[i])
        self.nodes = 0
        self.best: tuple[int, tuple[int, ...]] | None = None
        self.found: tuple[int, ...] | None = None

    def _tick(self, n: int = 1) -> None:
        self.nodes += n
        if self.nodes > self.cap:
            raise EnumerationCapExceeded(self.cap, self.nodes)

    def _last_candidates(self, s: int, lo: int) -> list[int]:
        L = self.fixed[-1]
        U = self.U
        if L == 0:
            picks = [lo, lo + 1, U]
        else:
            c = (-s) // L
            picks = [c - 2, c - 1, c, c + 1, c + 2, c + 3, lo, lo + 1, U - 1, U]
        return sorted({c for c in picks if lo <= c <= U})

    def minimum(self, first: tuple[int, int]) -> tuple[tuple[int, tuple[int, ...]] | None, int]:
        self._min_rec(0, 0, [], first)
        return self.best, self.nodes

    def _min_rec(self, i: int, s: int, prefix: list[int], first: tuple[int, int] | None) -> None:
        self._tick()
        all_zero = not any(prefix)
        if self.best is not None and abs(s) - self.tails[i] > self.best[0]:
            return

        if i == self.N - 1:
            lo = 1 if all_zero else -self.U
            cands = self._last_candidates(s, lo)
            if first is not None:
                cands = [c for c in cands if first[0] <= c <= first[1]]
            self._tick(len(cands))
            L = self.fixed[-1]
            for c in cands:
                v = s + c * L
                u = (*prefix, c)
                if _is_zero(self.payloads, self.threshold, u, v):
                    continue
                key = (abs(v), u)
                if self.best is None or key < self.best:
                    self.best = key
            return

        lo, hi = (0, self.U) if all_zero else (-self.U, self.U)
        if first is not None:
            lo, hi = max(lo, first[0]), min(hi, first[1])
        L = self.fixed[i]
        # nearest-first ordering finds small values early and sharpens the pruning
        target = -s / L if L else 0.0
        for c in sorted(range(lo, hi + 1), key=lambda c: (abs(c - target), c)):
            prefix.append(c)
            self._min_rec(i + 1, s + c * L, prefix, None)
            prefix.pop()

    def zero(self) -> tuple[int, ...] | None:
        self._zero_rec(0, 0, [])
        return self.found

    def _zero_rec(self, i: int, s: int, prefix: list[int]) -> bool:
        self._tick()
        all_zero = not any(prefix)
        if abs(s) - self.tails[i] >= self.threshold:
            return False

        if i == self.N - 1:
            lo = 1 if all_zero else -self.U
            L = self.fixed[-1]
            if L == 0:
                cands = [lo] if lo <= self.U else []
            else:
                c = (-s) // L
                cands = [x for x in (c, c + 1) if lo <= x <= self.U]
            self._tick(len(cands))
            for c in cands:
                u = (*prefix, c)
                if _is_zero(self.payloads, self.threshold, u, s + c * L):
                    self.found = u
                    return True
            return False

        lo = 0 if all_zero else -self.U
        for c in range(lo, self.U + 1):
            prefix.append(c)
            hit = self._zero_rec(i + 1, s + c * self.fixed[i], prefix)
            prefix.pop()
            if hit:
                return True
        return False


def _minimum_chunk(
    first: tuple[int, int],
    fixed: list[int],
    U: int,
    payloads: tuple[int, ...] | None,
    threshold: int,
    cap: int,
) -> tuple[tuple[int, tuple[int, ...]] | None, int]:
    return _Enumerator(fixed, U, payloads, threshold, cap).minimum(first)


def _precheck(N: int, U: int, cap: int) -> None:
    if U < 0:
        raise DomainError(f"coefficient bound must be nonnegative, got {U}")
    requested = N * (2 * U + 1) ** N
    if requested > cap:
        raise EnumerationCapExceeded(cap, requested)


def xi(
    instance: LinearFormInstance,
    U: int,
    policy: ZeroPolicy | None = None,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
    workers: int = 1,
) -> XiResult:
    """
    Function that computes the lattice minimum of the frequencies for coefficients bounded by U.

    Only vectors whose first nonzero coordinate is positive are visited, u and -u giving the
    same value. Ties are resolved toward the lexicographically smallest witness.

    :param instance: the frequencies.
    :param U: the coefficient bound.
    :param policy: the zero policy, None to select it from the frequency kinds.
    :param enumeration_cap: the maximum number of nodes.
    :param workers: processes sharing the range of the first coefficient.
    :return: the minimum and its witness.
    :raises NoNonzeroCombination: if every combination in range is zero.
    :raises EnumerationCapExceeded: if N(2U+1)^N exceeds the cap or the search outgrows it.
    """

    N = instance.N
    _precheck(N, U, enumeration_cap)
    classifier = ZeroClassifier(instance, policy)
    if N == 0 or U == 0:
        raise NoNonzeroCombination(f"no nonzero coefficient vector with bound {U}")

    fixed = instance.fixed_point()
    chunk = partial(
        _minimum_chunk,
        fixed=fixed,
        U=U,
        payloads=classifier.payloads,
        threshold=classifier.threshold,
        cap=enumeration_cap,
    )
    parts = split_range(0, U, workers) if N > 1 else [(1, U)]
    results = run_partitioned(chunk, parts, workers, processes=True)

    nodes = sum(n for _, n in results)
    if nodes > enumeration_cap:
        raise EnumerationCapExceeded(enumeration_cap, nodes)
    found = [b for b, _ in results if b is not None]
    if not found:
        raise NoNonzeroCombination(f"every combination with bound {U} is classified as zero")

    _, witness = min(found)
    with mpmath.workprec(instance.precision):
        value = abs(instance.combination(witness))
    log.debug(f"xi: U={U} witness={witness} value={mpmath.nstr(value, 12)} nodes={nodes}")
    return XiResult(value, witness, U, classifier.policy, nodes)


def independence_check(
    instance: LinearFormInstance,
    U: int,
    policy: ZeroPolicy | None = None,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> IndependenceResult:
    """
    Function that looks for a nonzero u with max |u_j| <= U and sum u_j lambda_j zero.

    :param instance: the frequencies.
    :param U: the coefficient bound.
    :param policy: the zero policy, None to select it from the frequency kinds.
    :param enumeration_cap: the maximum number of nodes.
    :return: independent, or violated with the first vanishing vector found.
    """

    _precheck(instance.N, U, enumeration_cap)
    classifier = ZeroClassifier(instance, policy)
    if instance.N == 0 or U == 0:
        return IndependenceResult(True, None, U, classifier.policy)

    enum = _Enumerator(
        instance.fixed_point(), U, classifier.payloads, classifier.threshold, enumeration_cap
    )
    witness = enum.zero()
    if witness is not None:
        log.debug(f"independence violated by {witness}")
    return IndependenceResult(witness is None, witness, U, classifier.policy)


def chen_lambda(
    instance: LinearFormInstance,
    M0: int,
    policy: ZeroPolicy | None = None,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> XiResult:
    """
    Function that computes Lambda, the lattice minimum with coefficient bound M0.
    """

    return xi(instance, M0, policy, enumeration_cap)
