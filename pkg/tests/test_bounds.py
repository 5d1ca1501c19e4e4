import math

import pytest

from klt import logger
from klt.bounds import (
    ProofParameters,
    abstract_bound,
    accuracy_for_interval,
    bacon_bound,
    chen_accuracy,
    chen_comparison,
    chen_localization,
    chen_m0,
    choose_params,
    coefficient_range,
    compare_bounds,
    corollary_bound,
    dirichlet_bound,
    parameter_inequality,
    proof_bound,
    theorem1_bound,
    transfer_interval,
    turan_bound,
    xi_logprime_lower_bound,
)
from klt.errors import DomainError, NoNonzeroCombination
from klt.frequency import FrequencyKind, FrequencySpec, LinearFormInstance, decimal_spec
from klt.frequency import golden_ratio_spec
from klt.policies import CoefficientConvention

log = logger.get()

PHI = (1 + math.sqrt(5)) / 2


def golden() -> LinearFormInstance:
    return LinearFormInstance.of([decimal_spec("1"), golden_ratio_spec()])


def logs23() -> LinearFormInstance:
    return LinearFormInstance.of([FrequencySpec(FrequencyKind.LOG, n) for n in (2, 3)])


def test_choose_params() -> None:
    params = choose_params(5, 4, 0.2)
    assert (params.m, params.k) == (8, 3)
    assert params.X == pytest.approx(100)

    assert (choose_params(1, 1, 0.2).m, choose_params(1, 1, 0.2).k) == (2, 2)
    assert choose_params(2, 4, 0.2).k == 2

    for N in range(1, 21):
        for omega in range(1, 21):
            params = choose_params(N, omega)
            assert params.m == 2 * omega
            assert 2 <= params.k <= 3 * math.log(params.X), f"k out of range at N={N}, {omega=}"


def test_choose_params_errors() -> None:
    with pytest.raises(DomainError):
        choose_params(0, 4)
    with pytest.raises(DomainError):
        choose_params(2, 4, 0.3)
    assert ProofParameters(2, 4, 0.2, 8, 2) == choose_params(2, 4, 0.2)
    for m, k in ((7, 2), (8, 1), (8, 3)):
        with pytest.raises(DomainError):
            ProofParameters(2, 4, 0.2, m, k)


def test_theorem1_bound() -> None:
    assert theorem1_bound(choose_params(2, 4, 0.2), 0.236068).value == pytest.approx(
        7.163e4, rel=1e-3
    )
    assert theorem1_bound(choose_params(1, 1, 0.2), 1.0).value == pytest.approx(20.98, rel=1e-3)
    with pytest.raises(DomainError):
        theorem1_bound(choose_params(1, 1, 0.2), 0.0)


def test_proof_bound_below_theorem1() -> None:
    for N in range(1, 11):
        for omega in range(1, 11):
            params = choose_params(N, omega)
            assert proof_bound(params, 0.1).log <= theorem1_bound(params, 0.1).log + 1e-12


def test_abstract_bound() -> None:
    assert abstract_bound(choose_params(1, 1, 0.2), 1.0).value == pytest.approx(25.37, rel=1e-3)
    assert abstract_bound(choose_params(2, 4, 0.2), 0.236068).value == pytest.approx(
        1.0001e5, rel=1e-3
    )


def test_log_space() -> None:
    T = theorem1_bound(choose_params(200, 100, 0.2), 1e-30)
    assert not T.representable
    assert T.value == math.inf
    assert math.isfinite(T.log)


def test_bacon_bound() -> None:
    assert bacon_bound(2, 1).value == pytest.approx(0.8069, abs=1e-4)
    assert bacon_bound(3, 1).value == pytest.approx(9.590, abs=1e-3)
    assert bacon_bound(3, 10).value == pytest.approx(0.9590, abs=1e-4)
    with pytest.raises(DomainError):
        bacon_bound(1, 1)


def test_chen() -> None:
    assert chen_accuracy(1, 1) == pytest.approx(math.pi**2 / 64)
    assert chen_accuracy(16, 3) == pytest.approx(math.pi**2 / 16)
    assert chen_m0(1, math.pi**2 / 8) == 1
    assert chen_m0(2, 0.5) == 2

    loc = chen_localization(2, 0.5, golden())
    assert loc.M0 == 2
    assert loc.Lambda.witness == (2, -1)
    assert float(loc.Lambda.value) == pytest.approx(2 - PHI, abs=1e-12)
    assert loc.T0.value == pytest.approx(8 / (2 * math.pi * (2 - PHI)), rel=1e-9)
    assert loc.T0.value == pytest.approx(3.3333, abs=1e-3)


def test_chen_m0_zero() -> None:
    assert chen_m0(1, 10.0) == 0
    with pytest.raises(NoNonzeroCombination):
        chen_localization(1, 10.0, LinearFormInstance.of([decimal_spec("1")]))
    with pytest.raises(DomainError):
        chen_m0(1, 0.0)


def test_dirichlet_and_turan() -> None:
    assert dirichlet_bound(3, 4).value == pytest.approx(64)

    turan = turan_bound(10, 4)
    assert turan.applicable
    assert turan.T.log == pytest.approx(17 * 4 * 10 * math.log(10) ** 2)
    assert turan.T.log == pytest.approx(3605.24, abs=0.1)
    assert not turan_bound(2, 8).applicable


def test_logprime_bounds() -> None:
    assert xi_logprime_lower_bound(3, 1, 0.2, 0.1).log == pytest.approx(-9.818, abs=1e-3)
    assert corollary_bound(3, 1, 0.2, 0.1).log == pytest.approx(
        1.2 * 3 * math.log(15) * math.log(3)
    )
    assert transfer_interval(3, 1, 0.2).log == pytest.approx(2 * 3 * math.log(15) * math.log(3))
    with pytest.raises(DomainError):
        xi_logprime_lower_bound(3, 1, 0.2, 0.0)


def test_accuracy_for_interval() -> None:
    params = choose_params(2, 4, 0.2)
    T = theorem1_bound(params, 0.05).value
    accuracy = accuracy_for_interval(2, 0.2, 0.05, T)
    assert 0 < accuracy < 1
    assert accuracy_for_interval(2, 0.2, 0.05, 10 * T) < accuracy
    with pytest.raises(DomainError):
        accuracy_for_interval(2, 0.2, 0.05, 1.0)


def test_parameter_inequality() -> None:
    lhs, rhs = parameter_inequality(choose_params(5, 4, 0.2))
    assert lhs == pytest.approx(5 / 4096)
    assert lhs <= rhs

    for N in range(1, 21):
        for omega in range(1, 21):
            lhs, rhs = parameter_inequality(choose_params(N, omega))
            assert lhs <= rhs, f"Parameter inequality fails at N={N}, omega={omega}"


def test_coefficient_range() -> None:
    params = choose_params(2, 4, 0.2)
    assert coefficient_range(params) == 88
    assert coefficient_range(params, CoefficientConvention.TIGHT) == 7 * 2


def test_compare_bounds() -> None:
    report = compare_bounds(2, 4, 0.2, logs23())
    assert report.U == 88
    assert report.epsilon == 0.25
    assert report.chen.M0 == 3
    assert report.chen.Lambda.witness == (3, -2)
    assert report.bacon_accuracy is not None
    assert not report.turan.applicable
    assert report.parameter_inequality[0] <= report.parameter_inequality[1]
    assert report.T_proof.log <= report.T_theorem1.log

    row = report.as_row()
    assert row["N"] == 2 and row["omega"] == 4 and row["k"] == 2
    assert row["convention"] == CoefficientConvention.THEOREM.label
    assert row["xi"] == pytest.approx(float(report.xi.value))

    chen_part, theorem_part = chen_comparison(report)
    assert chen_part == pytest.approx(math.log(2 * 9 / (2 * math.pi)))
    assert theorem_part == pytest.approx(report.T_theorem1.log + math.log(row["xi"]))


def test_compare_bounds_single_frequency() -> None:
    report = compare_bounds(1, 2, 0.2, LinearFormInstance.of([golden_ratio_spec()]))
    assert report.bacon_accuracy is None
    assert report.as_row()["bacon_accuracy"] is None
    assert any("Bacon" in note for note in report.notes)


def test_compare_bounds_tight() -> None:
    report = compare_bounds(2, 2, 0.2, golden(), convention=CoefficientConvention.TIGHT)
    assert report.U == (report.parameters.m - 1) * report.parameters.k


def test_compare_bounds_mismatch() -> None:
    with pytest.raises(DomainError):
        compare_bounds(3, 4, 0.2, logs23())
