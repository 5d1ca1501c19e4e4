import math
import os

import numpy as np
import pytest

from klt import logger
from klt.config import DEFAULT_SCAN_CAP
from klt.errors import DomainError, FrequencyParseError, ScanCapExceeded
from klt.frequency import FrequencyKind, FrequencySpec, LinearFormInstance, decimal_spec
from klt.policies import Sampler, SearchMode
from klt.poly import (
    DirichletPolynomial,
    GeneralizedPolynomial,
    factorize_table,
    kronecker_transfer_check,
    lift_identity_deviation,
    parse_poly_file,
    sup_interval,
    sup_torus,
)
from klt.search import scan_length

log = logger.get()

dir_path = os.path.dirname(os.path.realpath(__file__))
data_path = os.path.join(dir_path, "..", "data")


def sqrt23() -> LinearFormInstance:
    return LinearFormInstance.of([FrequencySpec(FrequencyKind.SQRT, n) for n in (2, 3)])


def test_factorize_table() -> None:
    table = factorize_table(10)
    assert table.primes == (2, 3, 5, 7)
    assert table.L == 10 and table.N == 4
    assert table.exponent(1) == (0, 0, 0, 0)
    assert table.exponent(8) == (3, 0, 0, 0)
    assert table.exponent(6) == (1, 1, 0, 0)
    assert table.omega.tolist() == [0, 1, 1, 2, 1, 2, 1, 3, 2, 2]

    table = factorize_table(12)
    assert table.exponent(12) == (2, 1, 0, 0, 0)
    assert table.omega[11] == 3
    assert factorize_table(1).primes == ()
    with pytest.raises(DomainError):
        factorize_table(0)


def test_evaluate() -> None:
    assert DirichletPolynomial([1, 0, 0]).evaluate(3.7) == pytest.approx(1.0)
    assert DirichletPolynomial([2j]).evaluate(0.0) == 2j

    poly = DirichletPolynomial([1, 1])
    assert poly.evaluate(0.0) == pytest.approx(2.0)
    assert poly.evaluate(2 * math.pi / math.log(2)) == pytest.approx(2.0)
    assert poly.evaluate(math.pi / math.log(2)) == pytest.approx(0.0, abs=1e-12)
    assert poly.evaluate(np.array([0.0, 1.0])).shape == (2,)


def test_bohr_lift() -> None:
    poly = DirichletPolynomial([1, 1, 1])
    assert poly.bohr_lift([0.0, 0.0]) == pytest.approx(3.0)
    assert DirichletPolynomial([0, 1]).bohr_lift([0.5]) == pytest.approx(-1.0)
    assert poly.bohr_lift(np.zeros((5, 2))).shape == (5,)
    assert DirichletPolynomial([4]).bohr_lift([]) == 4


def test_lift_identity() -> None:
    poly = DirichletPolynomial(np.ones(10))
    tau = 0.7
    assert abs(poly.evaluate(2 * math.pi * tau) - poly.bohr_lift(poly.lift_point(tau))) < 1e-12

    rng = np.random.default_rng(7)
    alphas = rng.normal(size=30) + 1j * rng.normal(size=30)
    poly = DirichletPolynomial(alphas)
    assert lift_identity_deviation(poly, rng.uniform(0, 100, size=100)) < 1e-10

    general = GeneralizedPolynomial(sqrt23(), [[0, 0], [1, 0], [0, 1], [2, -1]], [1, 1, 1j, 0.5])
    assert lift_identity_deviation(general, np.linspace(0, 50, 101)) < 1e-10


def test_approx_error_bound() -> None:
    assert DirichletPolynomial(np.ones(4)).approx_error_bound(4) == pytest.approx(2 * math.pi)
    assert DirichletPolynomial([0, 2, 0, 0]).approx_error_bound(1) == pytest.approx(4 * math.pi)
    assert DirichletPolynomial(np.ones(6)).approx_error_bound(8) == pytest.approx(math.pi / 4 * 7)
    with pytest.raises(DomainError):
        DirichletPolynomial(np.ones(4)).approx_error_bound(0.5)


def test_sup_interval() -> None:
    assert sup_interval(DirichletPolynomial([1, 0]), 0.0, 10.0).value == pytest.approx(1.0)

    res = sup_interval(DirichletPolynomial([1, 1]), 0.0, 100.0)
    assert res.value == pytest.approx(2.0, abs=1e-6)
    assert res.sampled <= res.value
    assert 0.0 <= res.argmax <= 100.0

    with pytest.raises(ScanCapExceeded):
        sup_interval(DirichletPolynomial([1, 1]), 0.0, 100.0, point_cap=10)
    with pytest.raises(DomainError):
        sup_interval(DirichletPolynomial([1, 1]), 0.0, -1.0)


def test_sup_torus() -> None:
    poly = DirichletPolynomial(np.ones(6))
    grid = sup_torus(poly)
    assert grid.value == pytest.approx(6.0)
    assert grid.evaluations == 16**3
    assert sup_interval(poly, 0.0, 50.0).value <= grid.value + 1e-9

    assert sup_torus(DirichletPolynomial([3j])).value == 3.0


def test_sup_torus_random() -> None:
    poly = DirichletPolynomial([1, -1, 1j, 0.5, -0.5j])
    small = sup_torus(poly, Sampler.RANDOM, budget=100, seed=3)
    large = sup_torus(poly, Sampler.RANDOM, budget=1000, seed=3)
    assert large.sampled >= small.sampled
    assert small.value >= small.sampled
    assert all(0.0 <= x < 1.0 for x in large.argmax)

    again = sup_torus(poly, Sampler.RANDOM, budget=100, seed=3, workers=3)
    assert again.value == small.value


def test_generalized_polynomial() -> None:
    poly = GeneralizedPolynomial(sqrt23(), [[0, 0], [1, 0], [0, 1], [2, -1]], [1, 1, 1j, 0.5])
    assert poly.A == 2
    assert poly.B.tolist() == [0, 1, 1, 1]
    assert poly.weights.tolist() == [0, 1, 1, 3]
    assert len(poly) == 4
    assert poly.check_condition().holds

    twice = GeneralizedPolynomial(sqrt23(), [[1, 0], [1, 0]], [1, 1])
    assert not twice.check_condition().distinct

    dependent = LinearFormInstance.of([decimal_spec("1"), decimal_spec("2")])
    check = GeneralizedPolynomial(dependent, [[1, 0], [0, 1]], [1, 1]).check_condition()
    assert not check.holds
    assert check.independence.witness == (2, -1)

    with pytest.raises(DomainError):
        GeneralizedPolynomial(sqrt23(), [[1, 0, 0]], [1])
    with pytest.raises(DomainError):
        GeneralizedPolynomial(sqrt23(), [[1, 0]], [1, 2])


def test_transfer() -> None:
    poly = DirichletPolynomial(np.ones(6))
    report = kronecker_transfer_check(poly, (0.3, 0.6, 0.1), 8, T=1e6)
    assert report.bound == pytest.approx(math.pi / 4 * 7)
    assert report.gap <= report.bound
    assert report.witness.sup_discrepancy <= 1 / 8
    assert all(c.passed for c in report.checks)
    assert report.xi is None


def test_transfer_self_consistency() -> None:
    poly = DirichletPolynomial(np.arange(1, 11) * (1 - 0.5j))
    tau0 = 12.34
    theta = tuple(poly.lift_point(tau0))
    report = kronecker_transfer_check(poly, theta, 8, d=tau0, T=1.0)
    assert report.tau == tau0
    assert report.gap < 1e-9


def test_transfer_automatic_interval() -> None:
    instance = LinearFormInstance.of([FrequencySpec(FrequencyKind.SQRT, 2)])
    poly = GeneralizedPolynomial(instance, [[0], [1]], [1, 1])
    report = kronecker_transfer_check(poly, (0.5,), 2)
    assert report.xi is not None
    assert report.T > 0
    assert all(c.passed for c in report.checks)


def test_transfer_past_enumeration_cap() -> None:
    poly = DirichletPolynomial(np.ones(6))
    report = kronecker_transfer_check(
        poly, (0.3, 0.6, 0.1), 8, d=5.0, mode=SearchMode.BEST_IN_INTERVAL, enumeration_cap=1000
    )
    assert report.xi is None
    assert len(report.notes) == 1
    assert report.witness.mode is SearchMode.FIRST_HIT
    assert report.T == pytest.approx(scan_length(poly.instance, 8, None, DEFAULT_SCAN_CAP))
    assert 5.0 <= report.tau <= 5.0 + report.T
    assert report.witness.sup_discrepancy <= 1 / 8
    assert report.gap <= report.bound
    assert all(c.passed for c in report.checks)


def test_parse_poly_file() -> None:
    poly = parse_poly_file(os.path.join(data_path, "unit6.poly"))
    assert isinstance(poly, DirichletPolynomial)
    assert poly.L == 6
    assert np.all(poly.coefficients == 1)

    general = parse_poly_file(os.path.join(data_path, "sqrt23.poly"))
    assert isinstance(general, GeneralizedPolynomial)
    assert general.instance.N == 2
    assert general.coefficients.tolist() == [1, 1, 1j, 0.5]


def test_parse_poly_file_errors(tmp_path) -> None:
    cases = {
        "X 3\n": 1,
        "L 3\n4 1 0\n": 2,
        "L 3\n1 1 0\n\n1 2 0\n": 4,
        "L 3\n1 x 0\n": 2,
        "L 0\n": 1,
    }
    for i, (text, line) in enumerate(cases.items()):
        path = tmp_path / f"bad{i}.poly"
        path.write_text(text)
        with pytest.raises(FrequencyParseError) as e:
            parse_poly_file(str(path))
        assert e.value.line == line, f"Wrong line for {text!r}"

    (tmp_path / "pair.freq").write_text("sqrt 2\nsqrt 3\n")
    path = tmp_path / "general.poly"
    path.write_text("freq pair.freq\n1 0 1\n")
    with pytest.raises(FrequencyParseError) as e:
        parse_poly_file(str(path))
    assert e.value.line == 2
