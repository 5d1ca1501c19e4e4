"""
The invariant suites run by `klt verify`.
"""

import math
from fractions import Fraction
from typing import Callable

import numpy as np
from tqdm import tqdm

from klt import logger
from klt.bounds import choose_params, parameter_inequality
from klt.fejer import (
    FejerLaw,
    calibrate_c0,
    convolve,
    decay_violations,
    fejer_identity,
    kernel_integral_bounds,
    p_zero,
)
from klt.frequency import LinearFormInstance, decimal_spec, golden_ratio_spec
from klt.policies import PZeroMethod
from klt.replay import (
    TabulatedDensity,
    WeightedSumDistribution,
    absr_identity_check,
    cauchy_schwarz_bound_check,
    k_of_r,
    key_inequality_check,
    sinc_expectation,
    small_deviation,
)
from klt.report import Check

log = logger.get()

Task = Callable[[], list[Check]]

"""Pseudo-random points per (m, k) for the Fourier identity of S_k."""
FOURIER_DRAWS = 100


def _exact(name: str, value: Fraction, expected: Fraction) -> Check:
    return Check(name, float(value), float(expected), value == expected, 0.0)


def _distribution_tasks(m_max: int, k_max: int, draws: int, seed: int) -> list[tuple[str, Task]]:
    points = np.random.default_rng(seed).random((m_max, k_max, draws))

    def task(m: int, k: int) -> list[Check]:
        law = FejerLaw(m)
        dist = convolve(law, k)
        checks = [_exact(f"mass m={m} k={k}", dist.total_mass(), Fraction(1))]
        t = points[m - 1, k - 1]
        deviation = np.max(np.abs(dist.fourier_sum(t) - law.char_fn(t) ** k))
        checks.append(Check.leq(f"fourier m={m} k={k} ({draws} draws)", deviation, 1e-12, 0.0))
        exact = float(p_zero(m, k, PZeroMethod.EXACT))
        quad = float(p_zero(m, k, PZeroMethod.QUADRATURE))
        checks.append(Check.close(f"p_zero exact/quadrature m={m} k={k}", quad, exact, 1e-9))
        return checks

    return [
        (f"distribution m={m} k={k}", lambda m=m, k=k: task(m, k))
        for m in range(1, m_max + 1)
        for k in range(1, k_max + 1)
    ]


def _law_tasks(m_max: int) -> list[tuple[str, Task]]:
    def task(m: int) -> list[Check]:
        mean, variance = FejerLaw(m).moments()
        closed, fourier, squared = fejer_identity(m, 0.3)
        return [
            _exact(f"mean m={m}", mean, Fraction(0)),
            _exact(f"variance m={m}", variance, Fraction(m * m - 1, 6)),
            Check.close(f"kernel identity fourier m={m}", fourier, closed, 1e-12),
            Check.close(f"kernel identity polynomial m={m}", squared, closed, 1e-12),
        ]

    return [(f"law m={m}", lambda m=m: task(m)) for m in range(1, m_max + 1)]


def _local_limit_task(k: int) -> list[Check]:
    checks = []
    for m in (2, 4, 8):
        p = float(p_zero(m, k, PZeroMethod.QUADRATURE))
        ratio = p * math.sqrt(math.pi * k * (m * m - 1) / 3)
        checks.append(Check.leq(f"local limit m={m} k={k}", abs(ratio - 1), 0.01))
    p8 = float(p_zero(8, k, PZeroMethod.QUADRATURE))
    simplified = p8 * 8 * math.sqrt(k) / math.sqrt(3 / math.pi)
    checks.append(Check.leq(f"simplified local limit m=8 k={k}", abs(simplified - 1), 0.01))
    return checks


def _lower_bound_task(m_max: int, k_max: int) -> list[Check]:
    cal = calibrate_c0(m_max, k_max)
    return [
        Check.leq(f"C0=0.2 violations m<={m_max} k<={k_max}", len(cal.violations), 0),
        Check.leq("calibrated C0 >= 0.2", 0.2, cal.c0 if cal.c0 is not None else 0.0),
    ]


def _decay_task(points: int) -> list[Check]:
    return [
        Check.leq(f"decay m={m} k={k}", len(decay_violations(m, k, points)), 0)
        for m in (2, 4, 8)
        for k in (1, 2, 5)
    ]


def _kernel_task(m_max: int, k_max: int) -> list[Check]:
    checks = []
    for m in range(2, m_max + 1):
        for k in range(1, k_max + 1):
            b = kernel_integral_bounds(m, k)
            checks.append(Check.leq(f"kernel lower bound m={m} k={k}", b.lower.log, b.integral.log))
    return checks


def fejer_tasks(quick: bool = False, seed: int = 0) -> list[tuple[str, Task]]:
    """
    Function that lists the checks on the Fejer law and its sums.

    :param quick: use reduced grids.
    :param seed: seed of the Fourier identity draws.
    :return: named tasks, each producing checks.
    """

    m_max, k_max = (4, 3) if quick else (8, 6)
    draws = FOURIER_DRAWS // 10 if quick else FOURIER_DRAWS
    tasks = _distribution_tasks(m_max, k_max, draws, seed) + _law_tasks(m_max)
    tasks += [
        ("local limit", lambda: _local_limit_task(1000 if quick else 10_000)),
        ("lower bound", lambda: _lower_bound_task(*((16, 40) if quick else (64, 200)))),
        ("decay bound", lambda: _decay_task(1000 if quick else 10_000)),
        ("kernel bounds", lambda: _kernel_task(m_max, k_max)),
    ]
    return tasks


def _golden_instance() -> LinearFormInstance:
    return LinearFormInstance.of([decimal_spec("1"), golden_ratio_spec()])


def _proof_replay_task() -> list[Check]:
    dist = convolve(FejerLaw(2), 2)
    return key_inequality_check(dist, _golden_instance(), (0.0, 0.0), 0.0, 10.0)


def _parameter_task(limit: int) -> list[Check]:
    checks = []
    for N in range(1, limit + 1):
        for omega in range(1, limit + 1):
            lhs, rhs = parameter_inequality(choose_params(N, omega))
            checks.append(Check.leq(f"parameter inequality N={N} omega={omega}", lhs, rhs))
    return checks


def _small_support_task() -> list[Check]:
    unit = LinearFormInstance.of([decimal_spec("1")])
    wsd = WeightedSumDistribution.build(unit, convolve(FejerLaw(2), 1))
    pair = WeightedSumDistribution.build(_golden_instance(), convolve(FejerLaw(2), 1))
    return [
        Check.close("sinc expectation T=1/2", sinc_expectation(wsd, 0.5), 1 / (2 * math.pi), 1e-12),
        Check.close("sinc expectation T=1", sinc_expectation(wsd, 1.0), 0.0, 1e-12),
        _exact("small deviation eps=1/2", small_deviation(wsd, 0.5), Fraction(1, 2)),
        _exact("small deviation pair eps=0.4", small_deviation(pair, 0.4), Fraction(1, 4)),
    ]


def _kr_task() -> list[Check]:
    checks = [Check.close("K(1/2)", k_of_r(0.5), math.sqrt(2 * math.pi), 1e-9)]
    for x, r in ((1.0, 0.5), (2.0, 1.0), (3.0, 1.5)):
        res = absr_identity_check(x, r)
        checks.append(Check.leq(f"|x|^r identity x={x} r={r}", res.relative_error, 1e-6))
    cases = (
        ("uniform", TabulatedDensity.uniform(), math.pi, 1.5),
        ("triangular", TabulatedDensity.triangular(), 2 * math.pi, 1.25),
    )
    for name, density, x, r in cases:
        cs = cauchy_schwarz_bound_check(density, x, r)
        checks.append(Check.leq(f"Cauchy-Schwarz {name} x={x:.4g} r={r}", cs.lhs, cs.rhs))
    return checks


def replay_tasks(quick: bool = False, seed: int = 0) -> list[tuple[str, Task]]:
    """
    Function that lists the checks on the replayed localization argument.

    :param quick: use reduced grids.
    :param seed: unused, the replayed instances are fixed.
    :return: named tasks, each producing checks.
    """

    return [
        ("proof replay", _proof_replay_task),
        ("parameter inequality", lambda: _parameter_task(5 if quick else 20)),
        ("small support", _small_support_task),
        ("K(r)", _kr_task),
    ]


SUITES: dict[str, Callable[[bool, int], list[tuple[str, Task]]]] = {
    "fejer": fejer_tasks,
    "replay": replay_tasks,
}


def run_suite(
    name: str, quick: bool = False, progress: bool = False, seed: int = 0
) -> list[Check]:
    """
    Function that runs one suite, or all of them.

    :param name: `fejer`, `replay` or `all`.
    :param quick: use reduced grids.
    :param progress: show a progress bar, with log records routed through it.
    :param seed: seed of the pseudo-random draws.
    :return: every check, in task order.
    """

    names = list(SUITES) if name == "all" else [name]
    if any(n not in SUITES for n in names):
        raise ValueError(f"Unknown suite {name!r}, expected one of {list(SUITES) + ['all']}")
    tasks = [task for n in names for task in SUITES[n](quick, seed)]

    handlers = logger.route_through_tqdm(log) if progress else None
    checks: list[Check] = []
    try:
        for label, task in tqdm(tasks, desc=f"verify {name}", unit="task", disable=not progress):
            log.debug(f"Running {label}")
            checks.extend(task())
    finally:
        if handlers is not None:
            logger.restore_handlers(log, handlers)

    failed = [c.name for c in checks if not c.passed]
    log.info(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return checks
