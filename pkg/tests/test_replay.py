import math
from fractions import Fraction

import numpy as np
import pytest

from klt import logger
from klt.bounds import choose_params
from klt.errors import DomainError, SupportCapExceeded
from klt.fejer import FejerLaw, convolve
from klt.frequency import FrequencyKind, FrequencySpec, LinearFormInstance, decimal_spec
from klt.frequency import golden_ratio_spec
from klt.policies import ZeroPolicy
from klt.replay import (
    TabulatedDensity,
    WeightedSumDistribution,
    absr_identity_check,
    cauchy_schwarz_bound_check,
    h_term,
    inverse_moment,
    k_of_r,
    key_inequality_check,
    quadrature_integral,
    sinc_expectation,
    small_deviation,
    upsilon,
    xi_bound,
)

log = logger.get()

PHI = (1 + math.sqrt(5)) / 2


def unit() -> LinearFormInstance:
    return LinearFormInstance.of([decimal_spec("1")])


def golden() -> LinearFormInstance:
    return LinearFormInstance.of([decimal_spec("1"), golden_ratio_spec()])


def test_upsilon() -> None:
    dist = convolve(FejerLaw(2), 1)
    assert upsilon(dist, unit(), (0.0,), 0.25) == pytest.approx(0.5)
    assert upsilon(dist, unit(), (0.0,), 0.25, excluded_index=0) == 1.0
    assert upsilon(dist, unit(), (0.25,), 0.5) == pytest.approx(0.5)

    values = upsilon(convolve(FejerLaw(3), 2), golden(), (0.1, 0.7), np.linspace(0, 5, 51))
    assert values.shape == (51,)
    assert np.all(values >= 0) and np.all(values <= 1 + 1e-12)
    with pytest.raises(DomainError):
        upsilon(dist, golden(), (0.0,), 0.5)


def test_weighted_sum_distribution() -> None:
    wsd = WeightedSumDistribution.build(golden(), convolve(FejerLaw(2), 1))
    assert len(wsd.nus) == 9
    assert wsd.total_probability() == 1
    assert wsd.zero_probability == Fraction(1, 4)
    assert wsd.zero_policy is ZeroPolicy.THRESHOLD
    assert wsd.support[0].value == 0.0
    assert all(atom.tuples == 1 for atom in wsd.support)

    dependent = LinearFormInstance.of([decimal_spec("1"), decimal_spec("1")])
    merged = WeightedSumDistribution.build(dependent, convolve(FejerLaw(2), 1))
    assert merged.total_probability() == 1
    assert merged.zero_probability == Fraction(1, 4) + 2 * Fraction(1, 16)
    assert [a.value for a in merged.support] == [0.0, -2.0, -1.0, 1.0, 2.0]


def test_weighted_sum_workers() -> None:
    dist = convolve(FejerLaw(3), 2)
    single = WeightedSumDistribution.build(golden(), dist, workers=1)
    multi = WeightedSumDistribution.build(golden(), dist, workers=4)
    assert single.numerators == multi.numerators
    assert [a.probability for a in single.support] == [a.probability for a in multi.support]


def test_support_cap() -> None:
    with pytest.raises(SupportCapExceeded):
        WeightedSumDistribution.build(golden(), convolve(FejerLaw(8), 3), support_cap=100)


def test_sinc_and_small_deviation() -> None:
    wsd = WeightedSumDistribution.build(unit(), convolve(FejerLaw(2), 1))
    assert sinc_expectation(wsd, 0.5) == pytest.approx(1 / (2 * math.pi), abs=1e-12)
    assert sinc_expectation(wsd, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert inverse_moment(wsd) == pytest.approx(1 / (2 * math.pi))
    assert small_deviation(wsd, 0.5) == Fraction(1, 2)
    assert small_deviation(wsd, 10.0) == 1

    pair = WeightedSumDistribution.build(golden(), convolve(FejerLaw(2), 1))
    assert small_deviation(pair, 0.4) == Fraction(1, 4)
    with pytest.raises(DomainError):
        small_deviation(pair, 0.0)

    degenerate = WeightedSumDistribution.build(unit(), convolve(FejerLaw(1), 1))
    assert sinc_expectation(degenerate, 3.0) == 0.0


def test_h_term() -> None:
    dist = convolve(FejerLaw(2), 1)
    h = h_term(dist, unit(), (0.0,), 0.0, 1.0)
    assert h.abs_H == pytest.approx(0.0, abs=1e-12)
    assert h.zero_term == pytest.approx(0.5)
    assert h.p_zero_power == Fraction(1, 2)
    assert h.integral == pytest.approx(0.5)
    assert h.bound == pytest.approx(1 / math.pi)

    excluded = h_term(dist, unit(), (0.0,), 0.0, 1.0, excluded_index=0)
    assert excluded.H == 0
    assert excluded.integral == pytest.approx(1.0)


def test_h_term_degenerate() -> None:
    h = h_term(convolve(FejerLaw(1), 4), golden(), (0.3, 0.2), 0.0, 5.0)
    assert h.H == 0
    assert h.bound == math.inf
    assert xi_bound(convolve(FejerLaw(1), 4), golden()) == math.inf


def test_decomposition() -> None:
    dist = convolve(FejerLaw(3), 2)
    betas = (0.2, 0.7)
    for excluded in (None, 0, 1):
        h = h_term(dist, golden(), betas, 1.5, 4.25, excluded)
        quad = quadrature_integral(dist, golden(), betas, 1.5, 4.25, excluded)
        assert quad == pytest.approx(h.integral, abs=1e-8), f"Mismatch for excluded={excluded}"


def test_key_inequality() -> None:
    checks = key_inequality_check(convolve(FejerLaw(2), 2), golden(), (0.0, 0.0), 0.0, 10.0)
    assert all(c.passed for c in checks), [c.name for c in checks if not c.passed]
    names = [c.name for c in checks]
    assert "decomposition" in names and "|H_1| <= 1/(pi Xi)" in names

    with_params = key_inequality_check(
        convolve(FejerLaw(4), 2), golden(), (0.3, 0.6), 2.0, 3.0, params=choose_params(2, 2)
    )
    assert all(c.passed for c in with_params)
    assert with_params[-1].name == "(omega/2m)^(2k) N <= p_zero/2"


def test_key_inequality_logs() -> None:
    instance = LinearFormInstance.of([FrequencySpec(FrequencyKind.LOG, n) for n in (2, 3)])
    checks = key_inequality_check(convolve(FejerLaw(2), 3), instance, (0.5, 0.5), 0.0, 6.0)
    assert all(c.passed for c in checks)


def test_k_of_r() -> None:
    assert k_of_r(0.5) == pytest.approx(math.sqrt(2 * math.pi))
    assert k_of_r(1.0) == math.pi / 2
    assert k_of_r(1.5) == pytest.approx(1.6711, abs=1e-4)
    assert k_of_r(1.0 + 1e-7) == pytest.approx(math.pi / 2, rel=1e-5)
    for r in (0.0, 2.0, -1.0):
        with pytest.raises(DomainError):
            k_of_r(r)


def test_absr_identity() -> None:
    for x, r in ((1.0, 0.5), (2.0, 1.0), (3.0, 1.5), (-2.5, 0.75)):
        res = absr_identity_check(x, r)
        assert res.relative_error < 1e-6, f"Identity off at x={x}, r={r}"
    zero = absr_identity_check(0.0, 1.0)
    assert (zero.lhs, zero.rhs) == (0.0, 0.0)


def test_cauchy_schwarz() -> None:
    uniform = cauchy_schwarz_bound_check(TabulatedDensity.uniform(), math.pi, 1.5)
    assert uniform.lhs == pytest.approx(1.852, abs=1e-3)
    assert uniform.rhs == pytest.approx(2.962, abs=1e-3)
    assert uniform.rhs_quoted == pytest.approx(1.253, abs=1e-3)
    assert uniform.holds
    assert not uniform.quoted_holds

    triangular = cauchy_schwarz_bound_check(TabulatedDensity.triangular(), 2 * math.pi, 1.25)
    assert triangular.holds

    with pytest.raises(DomainError):
        cauchy_schwarz_bound_check(TabulatedDensity.uniform(), 1.0, 0.5)


def test_tabulated_density() -> None:
    density = TabulatedDensity([0.0, 0.25, 0.75], [1.0, 1.0, 0.0])
    assert density.radius == 0.75
    assert density(-0.1) == 1.0
    assert density(0.5) == 0.5
    assert density(3.0) == 0.0

    for grid, values in (([0.0, 1.0], [1.0, 1.0]), ([0.5, 1.0], [1.0, 1.0]), ([0.0, 1.0], [-1, 2])):
        with pytest.raises(DomainError):
            TabulatedDensity(grid, values)
