import math
from fractions import Fraction

import numpy as np
import pytest

from klt import logger
from klt.errors import DomainError, SupportCapExceeded
from klt.fejer import (
    FejerLaw,
    LatticeLaw,
    calibrate_c0,
    char_fn_sum,
    convolve,
    decay_bound_check,
    decay_violations,
    fejer_identity,
    kernel_integral_bounds,
    local_limit_deviation,
    p_zero,
    p_zero_auto,
    p_zero_lower_bound,
)
from klt.policies import PZeroMethod

log = logger.get()


def test_pmf() -> None:
    law = FejerLaw(3)
    assert law.pmf(0) == Fraction(1, 3)
    assert law.pmf(1) == law.pmf(-1) == Fraction(2, 9)
    assert law.pmf(3) == 0
    assert list(law.support()) == [-2, -1, 0, 1, 2]


def test_moments() -> None:
    for m in range(1, 7):
        law = FejerLaw(m)
        assert law.mean == 0
        assert law.variance == Fraction(m * m - 1, 6), f"Wrong variance for m={m}"


def test_invalid_parameters() -> None:
    with pytest.raises(DomainError):
        FejerLaw(0)
    with pytest.raises(DomainError):
        convolve(FejerLaw(2), 0)


def test_char_fn() -> None:
    law = FejerLaw(2)
    assert law.char_fn(0.0) == 1.0
    assert law.char_fn(3.0) == 1.0
    assert law.char_fn(0.25) == pytest.approx(0.5, abs=1e-15)

    t = np.linspace(0, 1, 101)
    values = FejerLaw(5).char_fn(t)
    assert np.all(values >= 0) and np.all(values <= 1)


def test_convolve() -> None:
    dist = convolve(FejerLaw(2), 2)
    assert dist.radius == 2
    assert dist.pmf(0) == Fraction(3, 8)
    assert dist.pmf(1) == dist.pmf(-1) == Fraction(1, 4)
    assert dist.pmf(2) == dist.pmf(-2) == Fraction(1, 16)
    assert dist.total_mass() == 1

    for m in range(1, 9):
        for k in range(1, 7):
            assert convolve(FejerLaw(m), k).total_mass() == 1, f"Mass lost at m={m}, k={k}"


def test_convolve_cap() -> None:
    with pytest.raises(SupportCapExceeded) as e:
        convolve(FejerLaw(10), 5, support_cap=10)
    assert e.value.cap == 10
    assert e.value.requested == 45


def test_radius() -> None:
    assert FejerLaw(1).radius == 0
    assert list(FejerLaw(3).support()) == [-2, -1, 0, 1, 2]
    assert "positive mass" in (LatticeLaw.radius.__doc__ or ""), "radius lost its docstring"


def test_fourier_identity() -> None:
    rng = np.random.default_rng(0)
    for m in range(1, 7):
        for k in range(1, 5):
            t = rng.random(100)
            dist = convolve(FejerLaw(m), k)
            deviation = np.max(np.abs(dist.fourier_sum(t) - char_fn_sum(dist, t)))
            assert deviation <= 1e-12, f"Fourier identity off by {deviation} at m={m}, k={k}"

    dist = convolve(FejerLaw(8), 6)
    t = np.array([0.0, 0.5, 1.0, -0.25])
    assert np.allclose(dist.fourier_sum(t), char_fn_sum(dist, t), rtol=0, atol=1e-12)


def test_p_zero_exact() -> None:
    assert p_zero(2, 2) == Fraction(3, 8)
    assert p_zero(1, 5) == 1
    assert p_zero(2, 1) == Fraction(1, 2)
    assert p_zero(4, 3) == convolve(FejerLaw(4), 3).pmf(0)


def test_p_zero_quadrature() -> None:
    for m in range(1, 9):
        for k in range(1, 7):
            exact = float(p_zero(m, k, PZeroMethod.EXACT))
            quad = float(p_zero(m, k, PZeroMethod.QUADRATURE))
            assert quad == pytest.approx(exact, abs=1e-9), f"Routes disagree at m={m}, k={k}"


def test_p_zero_asymptotics() -> None:
    assert p_zero(2, 1, PZeroMethod.ASYMPTOTIC) == pytest.approx(0.48860, abs=1e-5)
    assert p_zero(1, 3, PZeroMethod.LOCAL_LIMIT) == 1.0
    assert p_zero(4, 1, PZeroMethod.LOCAL_LIMIT) == pytest.approx(1 / math.sqrt(5 * math.pi))


def test_local_limit() -> None:
    k = 10_000
    for m in (2, 4, 8):
        p = float(p_zero(m, k, PZeroMethod.QUADRATURE))
        ratio = p * math.sqrt(math.pi * k * (m * m - 1) / 3)
        assert 0.99 <= ratio <= 1.01, f"Local limit off at m={m}: {ratio}"

    p8 = float(p_zero(8, k, PZeroMethod.QUADRATURE))
    assert 0.99 <= p8 * 8 * math.sqrt(k) / math.sqrt(3 / math.pi) <= 1.01


def test_p_zero_auto() -> None:
    assert p_zero_auto(2, 2) == 0.375
    assert p_zero_auto(3, 5, exact_limit=1) == pytest.approx(float(p_zero(3, 5)), abs=1e-9)


def test_lower_bound() -> None:
    assert p_zero_lower_bound(4, 4) == pytest.approx(0.2 / 8)
    with pytest.raises(DomainError):
        p_zero_lower_bound(4, 4, C0=0.3)

    for m in range(1, 17):
        for k in range(1, 21):
            assert p_zero_auto(m, k) >= p_zero_lower_bound(m, k), f"Bound fails at m={m}, k={k}"


def test_calibrate() -> None:
    cal = calibrate_c0(8, 10)
    assert cal.violations == []
    assert cal.c0 == 0.24
    assert cal.k0 == 1
    assert cal.checked == 80
    assert cal.min_ratio > 0.9


def test_kernel_integral_bounds() -> None:
    b = kernel_integral_bounds(2, 1)
    assert b.integral.value == pytest.approx(2.0)
    assert b.lower_holds

    for m in range(2, 9):
        for k in range(1, 7):
            assert kernel_integral_bounds(m, k).lower_holds, f"Lower bound fails at m={m}, k={k}"


def test_decay_bound() -> None:
    for m in (2, 4, 8):
        for k in (1, 2, 5):
            assert decay_violations(m, k, 10_000) == [], f"Decay bound fails at m={m}, k={k}"
    assert decay_bound_check(4, 2, 0.3)


def test_local_limit_deviation() -> None:
    small = local_limit_deviation(convolve(FejerLaw(4), 2))
    large = local_limit_deviation(convolve(FejerLaw(4), 40))
    assert large < small
    with pytest.raises(DomainError):
        local_limit_deviation(convolve(FejerLaw(1), 3))


def test_fejer_identity() -> None:
    for m in range(1, 9):
        for t in (0.1, 0.3, 0.45):
            closed, fourier, squared = fejer_identity(m, t)
            assert fourier == pytest.approx(closed, abs=1e-12)
            assert squared == pytest.approx(closed, abs=1e-12)
