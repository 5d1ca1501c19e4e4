import math

import mpmath
import pytest

from klt import logger
from klt.errors import DomainError, EnumerationCapExceeded, NoNonzeroCombination
from klt.frequency import FrequencyKind, FrequencySpec, LinearFormInstance, decimal_spec
from klt.frequency import golden_ratio_spec
from klt.lattice import (
    ZeroClassifier,
    chen_lambda,
    coefficient_bound,
    independence_check,
    threshold_units,
    xi,
)
from klt.policies import ZeroPolicy

log = logger.get()

PHI = (1 + math.sqrt(5)) / 2


def logs(*ns: int) -> LinearFormInstance:
    return LinearFormInstance.of([FrequencySpec(FrequencyKind.LOG, n) for n in ns])


def golden() -> LinearFormInstance:
    return LinearFormInstance.of([decimal_spec("1"), golden_ratio_spec()])


def test_coefficient_bound() -> None:
    assert coefficient_bound(2, 4, 0.2) == 88
    assert coefficient_bound(1, 1, 0.2) == 9
    with pytest.raises(DomainError):
        coefficient_bound(0, 4, 0.2)
    with pytest.raises(DomainError):
        coefficient_bound(2, 4, 0.25)


def test_xi_logs() -> None:
    for policy in (ZeroPolicy.THRESHOLD, ZeroPolicy.EXACT_MULTIPLICATIVE):
        res = xi(logs(2, 3), 5, policy)
        assert res.witness == (3, -2), f"Wrong witness under {policy}"
        assert float(res.value) == pytest.approx(math.log(9 / 8), rel=1e-12)
        assert res.bound == 5
        assert res.zero_policy is policy


def test_xi_default_policy() -> None:
    assert xi(logs(2, 3), 2).zero_policy is ZeroPolicy.EXACT_MULTIPLICATIVE
    assert xi(golden(), 2).zero_policy is ZeroPolicy.THRESHOLD


def test_xi_golden() -> None:
    res = xi(golden(), 3)
    assert res.witness == (3, -2)
    assert float(res.value) == pytest.approx(0.2360680, abs=1e-7)

    res = xi(golden(), 88)
    assert res.witness == (55, -34)
    assert float(res.value) == pytest.approx(0.0131556, abs=1e-7)


def test_xi_fibonacci() -> None:
    fib = [1, 2, 3, 5, 8, 13, 21, 34, 55, 89]
    instance = golden()
    with mpmath.workprec(256):
        phi = (1 + mpmath.sqrt(5)) / 2
        for prev, cur, nxt in zip(fib, fib[1:], fib[2:]):
            expected = abs(prev * phi - cur)
            for U in (cur, nxt - 1):
                res = xi(instance, U)
                assert mpmath.almosteq(res.value, expected, 1e-60), f"Wrong minimum for U={U}"
                assert res.witness == (cur, -prev)


def test_xi_workers() -> None:
    single = xi(golden(), 40, workers=1)
    multi = xi(golden(), 40, workers=3)
    assert single.witness == multi.witness
    assert single.value == multi.value


def test_xi_errors() -> None:
    with pytest.raises(NoNonzeroCombination):
        xi(golden(), 0)
    with pytest.raises(EnumerationCapExceeded) as e:
        xi(golden(), 100, enumeration_cap=1000)
    assert e.value.requested == 2 * 201**2
    with pytest.raises(DomainError):
        xi(golden(), 3, ZeroPolicy.EXACT_MULTIPLICATIVE)


def test_chen_lambda() -> None:
    res = chen_lambda(golden(), 2)
    assert res.witness == (2, -1)
    assert float(res.value) == pytest.approx(2 - PHI, abs=1e-12)
    with pytest.raises(NoNonzeroCombination):
        chen_lambda(golden(), 0)


def test_independence() -> None:
    dependent = LinearFormInstance.of([decimal_spec("1"), decimal_spec("2")])
    res = independence_check(dependent, 2)
    assert not res.independent
    assert res.witness == (2, -1)

    assert independence_check(dependent, 1).independent
    assert independence_check(logs(2, 3, 5), 6).independent
    assert independence_check(logs(2, 3), 0).independent


def test_exact_policy_dependent_logs() -> None:
    res = independence_check(logs(2, 4), 2, ZeroPolicy.EXACT_MULTIPLICATIVE)
    assert not res.independent
    assert res.witness == (2, -1)


def test_zero_classifier() -> None:
    instance = logs(2, 3)
    classifier = ZeroClassifier(instance)
    assert classifier.policy is ZeroPolicy.EXACT_MULTIPLICATIVE
    assert classifier.payloads == (2, 3)
    assert classifier.threshold == threshold_units(256) == 1 << 128
    assert classifier.is_zero((0, 0), 0)
    assert not classifier.is_zero((3, -2), 0)

    threshold = ZeroClassifier(instance, ZeroPolicy.THRESHOLD)
    assert threshold.payloads is None
    assert threshold.is_zero((3, -2), 0)
