"""
Parameter selection and the localization and accuracy bounds compared by the toolkit.

Every quantity that can leave the float range is carried as a LogMagnitude. Logarithms are
natural throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from klt import logger
from klt.config import DEFAULT_C0, DEFAULT_ENUMERATION_CAP
from klt.errors import DomainError
from klt.fejer import DEFAULT_EXACT_LIMIT, p_zero_auto
from klt.frequency import LinearFormInstance
from klt.lattice import XiResult, chen_lambda, coefficient_bound, xi
from klt.magnitude import LogMagnitude
from klt.policies import CoefficientConvention, ZeroPolicy

log = logger.get()


def _check_c0(C0: float) -> None:
    if not 0 < C0 < 0.25:
        raise DomainError(f"C0 must lie in (0, 1/4), got {C0}")


def _check_positive(**values: float) -> None:
    for name, v in values.items():
        if v < 1:
            raise DomainError(f"{name} must be a positive integer, got {v}")


def _satisfies(X: float, j: int) -> bool:
    # X <= 4^(2j-1)/sqrt(j), compared in log space
    return math.log(X) <= (2 * j - 1) * math.log(4) - 0.5 * math.log(j) + 1e-12


@dataclass(frozen=True)
class ProofParameters:
    """
    The Fejer parameters (m, k) attached to (N, omega, C0).
    """

    N: int
    omega: int
    C0: float
    """Always 2 omega."""
    m: int
    """Smallest j >= 1 with N omega/C0 <= 4^(2j-1)/sqrt(j)."""
    k: int

    def __post_init__(self) -> None:
        _check_positive(N=self.N, omega=self.omega)
        _check_c0(self.C0)
        X = self.X
        if self.m != 2 * self.omega:
            raise DomainError(f"m must equal 2 omega, got m={self.m}, omega={self.omega}")
        if self.k < 2:
            raise DomainError(f"k must be at least 2, got {self.k}")
        if not _satisfies(X, self.k):
            raise DomainError(f"k={self.k} does not satisfy N omega/C0 <= 4^(2k-1)/sqrt(k)")
        if _satisfies(X, self.k - 1):
            raise DomainError(f"k={self.k} is not the smallest admissible value")
        if self.k > 3 * math.log(X):
            raise DomainError(f"k={self.k} exceeds 3 log(N omega/C0) = {3 * math.log(X):.6g}")

    @property
    def X(self) -> float:
        return self.N * self.omega / self.C0


def choose_params(N: int, omega: int, C0: float = DEFAULT_C0) -> ProofParameters:
    """
    Function that selects m = 2 omega and the smallest k with N omega/C0 <= 4^(2k-1)/sqrt(k).

    :param N: the number of frequencies.
    :param omega: the accuracy parameter.
    :param C0: the lower-bound constant.
    :return: the parameters, their invariants checked on construction.
    :raises DomainError: if C0 is outside (0, 1/4) or N, omega < 1.
    """

    _check_positive(N=N, omega=omega)
    _check_c0(C0)
    X = N * omega / C0
    k = 1
    while not _satisfies(X, k):
        k += 1
    return ProofParameters(N, omega, C0, 2 * omega, k)


def theorem1_bound(params: ProofParameters, xi_value: float) -> LogMagnitude:
    """
    Function that computes T = (3/(pi Xi)) (2 sqrt(3) omega sqrt(log X)/C0)^N, X = N omega/C0.
    """

    if xi_value <= 0:
        raise DomainError(f"Xi must be positive, got {xi_value}")
    base = 2 * math.sqrt(3) * params.omega * math.sqrt(math.log(params.X)) / params.C0
    return LogMagnitude(
        math.log(3 / math.pi) - math.log(xi_value) + params.N * math.log(base)
    )


def proof_bound(params: ProofParameters, xi_value: float) -> LogMagnitude:
    """
    Function that computes (3/(pi Xi)) (2 omega sqrt(k)/C0)^N, the bound before k is
    replaced by 3 log X. It never exceeds theorem1_bound.
    """

    if xi_value <= 0:
        raise DomainError(f"Xi must be positive, got {xi_value}")
    base = 2 * params.omega * math.sqrt(params.k) / params.C0
    return LogMagnitude(
        math.log(3 / math.pi) - math.log(xi_value) + params.N * math.log(base)
    )


def abstract_bound(params: ProofParameters, xi_value: float) -> LogMagnitude:
    """
    Function that computes (4 omega sqrt(log X)/C0)^N / Xi.
    """

    if xi_value <= 0:
        raise DomainError(f"Xi must be positive, got {xi_value}")
    base = 4 * params.omega * math.sqrt(math.log(params.X)) / params.C0
    return LogMagnitude(params.N * math.log(base) - math.log(xi_value))


def bacon_bound(N: int, M: int) -> LogMagnitude:
    """
    Function that computes the accuracy c(N)/M with
    c(N) = (1/2)(N-1)^(3/2) (125/48)^((N^3-N)/12).

    M bounds the l1 norm |u_1| + ... + |u_N| of the coefficients.
    """

    if N < 2:
        raise DomainError(f"Bacon's bound needs N >= 2, got {N}")
    _check_positive(M=M)
    log_c = -math.log(2) + 1.5 * math.log(N - 1) + (N**3 - N) / 12 * math.log(125 / 48)
    return LogMagnitude(log_c - math.log(M))


def chen_accuracy(N: int, M: int) -> float:
    """
    Function that computes (pi^2/16) N/(M+1)^2.
    """

    _check_positive(N=N, M=M)
    return math.pi**2 / 16 * N / (M + 1) ** 2


@dataclass(frozen=True)
class ChenLocalization:
    M0: int
    Lambda: XiResult
    T0: LogMagnitude


def chen_m0(N: int, epsilon: float) -> int:
    if epsilon <= 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    return math.floor(math.sqrt(N * math.pi**2 / (8 * epsilon)) + 1e-9)


def chen_localization(
    N: int,
    epsilon: float,
    instance: LinearFormInstance,
    policy: ZeroPolicy | None = None,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> ChenLocalization:
    """
    Function that computes M0 = [sqrt(N pi^2/(8 epsilon))], Lambda at bound M0 and
    T0 = N M0^N/(2 pi Lambda).

    :raises NoNonzeroCombination: when M0 is 0.
    """

    _check_positive(N=N)
    if instance.N != N:
        raise DomainError(f"instance has {instance.N} frequencies, expected {N}")
    M0 = chen_m0(N, epsilon)
    lam = chen_lambda(instance, M0, policy, enumeration_cap)
    T0 = LogMagnitude(
        math.log(N) + N * math.log(M0) - math.log(2 * math.pi) - math.log(float(lam.value))
    )
    return ChenLocalization(M0, lam, T0)


def dirichlet_bound(N: int, omega: int) -> LogMagnitude:
    _check_positive(N=N, omega=omega)
    return LogMagnitude(N * math.log(omega))


@dataclass(frozen=True)
class TuranBound:
    """
    The interval e^(17 omega N log^2 N), asserted for large N and 4 <= omega <= N.
    """

    T: LogMagnitude
    applicable: bool


def turan_bound(N: int, omega: int) -> TuranBound:
    _check_positive(N=N, omega=omega)
    applicable = 4 <= omega <= N
    if not applicable:
        log.debug(f"Turan bound outside 4 <= omega <= N (N={N}, omega={omega})")
    return TuranBound(LogMagnitude(17 * omega * N * math.log(N) ** 2), applicable)


def xi_logprime_lower_bound(N: int, omega: int, C0: float, epsilon: float) -> LogMagnitude:
    """
    Function that computes exp(-(1+epsilon) omega N log(N omega/C0) log N).
    """

    _check_positive(N=N, omega=omega)
    _check_c0(C0)
    if epsilon <= 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    return LogMagnitude(
        -(1 + epsilon) * omega * N * math.log(N * omega / C0) * math.log(N)
    )


def corollary_bound(N: int, omega: int, C0: float, epsilon: float) -> LogMagnitude:
    """
    Function that computes exp((1+2 epsilon) omega N log(N omega/C0) log N), the interval
    obtained for log primes once Xi is bounded below.
    """

    _check_positive(N=N, omega=omega)
    _check_c0(C0)
    if epsilon <= 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    return LogMagnitude((1 + 2 * epsilon) * omega * N * math.log(N * omega / C0) * math.log(N))


def transfer_interval(N: int, omega: int, C0: float) -> LogMagnitude:
    """
    Function that computes exp(2 omega N log(N omega/C0) log N), the interval length used to
    compare a Dirichlet polynomial with its lift.
    """

    _check_positive(N=N, omega=omega)
    _check_c0(C0)
    return LogMagnitude(2 * omega * N * math.log(N * omega / C0) * math.log(N))


def accuracy_for_interval(N: int, C0: float, xi_value: float, T: float) -> float:
    """
    Function that inverts the localization bound: with Theta = (T Xi)^(1/N)/4, every
    interval of length T carries a t approximating within sqrt(log(N Theta))/(C0 Theta).

    :raises DomainError: if N Theta <= 1.
    """

    _check_positive(N=N)
    _check_c0(C0)
    if xi_value <= 0 or T <= 0:
        raise DomainError("Xi and T must be positive")
    theta = math.exp((math.log(T) + math.log(xi_value)) / N) / 4
    if N * theta <= 1:
        raise DomainError(f"interval too short: N*Theta = {N * theta:.4g} <= 1")
    return math.sqrt(math.log(N * theta)) / (C0 * theta)


def parameter_inequality(
    params: ProofParameters, exact_limit: int = DEFAULT_EXACT_LIMIT
) -> tuple[float, float]:
    """
    Function that evaluates both sides of (omega/2m)^(2k) N <= P{S_k = 0}/2.

    :return: (lhs, rhs).
    """

    lhs = (params.omega / (2 * params.m)) ** (2 * params.k) * params.N
    rhs = 0.5 * p_zero_auto(params.m, params.k, exact_limit)
    return lhs, rhs


def coefficient_range(
    params: ProofParameters, convention: CoefficientConvention = CoefficientConvention.THEOREM
) -> int:
    """
    Function that returns the coefficient bound: floor(6 omega log X) or the proof's (m-1)k.
    """

    if convention is CoefficientConvention.TIGHT:
        return (params.m - 1) * params.k
    return coefficient_bound(params.N, params.omega, params.C0)


@dataclass
class BoundReport:
    """
    Every localization bound for one (N, omega, frequencies) instance.
    """

    parameters: ProofParameters
    convention: CoefficientConvention
    """The coefficient bound used for Xi, also the M of the Bacon and Chen accuracies."""
    U: int
    xi: XiResult
    T_theorem1: LogMagnitude
    T_proof: LogMagnitude
    T_abstract: LogMagnitude
    """None for N = 1, where the bound is undefined."""
    bacon_accuracy: LogMagnitude | None
    chen_accuracy: float
    chen: ChenLocalization
    dirichlet_T: LogMagnitude
    turan: TuranBound
    epsilon: float
    xi_lower_bound: LogMagnitude
    corollary_T: LogMagnitude
    parameter_inequality: tuple[float, float]
    notes: list[str] = field(default_factory=list)

    def as_row(self) -> dict[str, Any]:
        """
        Function that flattens the report into one CSV row.
        """

        p = self.parameters
        return {
            "N": p.N,
            "omega": p.omega,
            "C0": p.C0,
            "m": p.m,
            "k": p.k,
            "convention": self.convention.label,
            "U": self.U,
            "xi": float(self.xi.value),
            "xi_witness": " ".join(str(u) for u in self.xi.witness),
            "log_T_theorem1": self.T_theorem1.log,
            "T_theorem1": self.T_theorem1.value,
            "log_T_proof": self.T_proof.log,
            "log_T_abstract": self.T_abstract.log,
            "T_abstract": self.T_abstract.value,
            "bacon_accuracy": self.bacon_accuracy.value if self.bacon_accuracy else None,
            "chen_accuracy": self.chen_accuracy,
            "chen_M0": self.chen.M0,
            "chen_Lambda": float(self.chen.Lambda.value),
            "log_chen_T0": self.chen.T0.log,
            "chen_T0": self.chen.T0.value,
            "log_dirichlet_T": self.dirichlet_T.log,
            "log_turan_T": self.turan.T.log,
            "turan_applicable": self.turan.applicable,
            "log_xi_lower_bound": self.xi_lower_bound.log,
            "log_corollary_T": self.corollary_T.log,
            "inequality_lhs": self.parameter_inequality[0],
            "inequality_rhs": self.parameter_inequality[1],
            "notes": "; ".join(self.notes),
        }


def chen_comparison(report: BoundReport) -> tuple[float, float]:
    """
    Function that returns log(T0 Lambda) and log(T Xi), the Xi-free parts of both intervals.
    """

    return (
        report.chen.T0.log + math.log(float(report.chen.Lambda.value)),
        report.T_theorem1.log + math.log(float(report.xi.value)),
    )


def compare_bounds(
    N: int,
    omega: int,
    C0: float,
    instance: LinearFormInstance,
    epsilon: float | None = None,
    convention: CoefficientConvention = CoefficientConvention.THEOREM,
    policy: ZeroPolicy | None = None,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
    workers: int = 1,
) -> BoundReport:
    """
    Function that computes every bound for one instance.

    :param N: the number of frequencies, equal to instance.N.
    :param omega: the accuracy parameter.
    :param C0: the lower-bound constant.
    :param instance: the frequencies.
    :param epsilon: the epsilon of the Chen and log-prime bounds, 1/omega when None.
    :param convention: the coefficient bound convention for Xi.
    :param policy: the zero policy.
    :param enumeration_cap: the lattice enumeration cap.
    :param workers: processes for the Xi enumeration.
    :return: the report.
    """

    if instance.N != N:
        raise DomainError(f"instance has {instance.N} frequencies, expected {N}")
    params = choose_params(N, omega, C0)
    eps = epsilon if epsilon is not None else 1.0 / omega
    U = coefficient_range(params, convention)
    xi_res = xi(instance, U, policy, enumeration_cap, workers)
    xi_value = float(xi_res.value)
    notes: list[str] = []

    if N >= 2:
        bacon: LogMagnitude | None = bacon_bound(N, U)
        notes.append("Bacon accuracy uses the l1 coefficient bound; Theorem 1 bounds max |u_j|")
    else:
        bacon = None
        notes.append("Bacon accuracy undefined for N = 1")
    notes.append(f"Bacon and Chen accuracies evaluated at M = U = {U}")

    turan = turan_bound(N, omega)
    if not turan.applicable:
        notes.append("Turan bound outside its range 4 <= omega <= N")

    if instance.log_payloads is None:
        notes.append("Xi lower bound is stated for logarithms of primes only")
    if convention is CoefficientConvention.TIGHT:
        notes.append("Xi computed over the proof range (m-1)k")

    report = BoundReport(
        parameters=params,
        convention=convention,
        U=U,
        xi=xi_res,
        T_theorem1=theorem1_bound(params, xi_value),
        T_proof=proof_bound(params, xi_value),
        T_abstract=abstract_bound(params, xi_value),
        bacon_accuracy=bacon,
        chen_accuracy=chen_accuracy(N, U),
        chen=chen_localization(N, eps, instance, policy, enumeration_cap),
        dirichlet_T=dirichlet_bound(N, omega),
        turan=turan,
        epsilon=eps,
        xi_lower_bound=xi_logprime_lower_bound(N, omega, C0, eps),
        corollary_T=corollary_bound(N, omega, C0, eps),
        parameter_inequality=parameter_inequality(params),
        notes=notes,
    )
    if report.xi_lower_bound.log > math.log(xi_value):
        notes.append("computed Xi lies below the log-prime lower bound (N below N(epsilon))")
    log.info(
        f"bounds N={N} omega={omega}: m={params.m} k={params.k} U={U} "
        f"log T={report.T_theorem1.log:.4f}"
    )
    return report
