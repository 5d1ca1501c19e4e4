import math
import os

import mpmath
import pytest

from klt import logger
from klt.errors import DomainError, FrequencyParseError
from klt.frequency import (
    FrequencyKind,
    FrequencySpec,
    LinearFormInstance,
    decimal_spec,
    golden_ratio_spec,
    parse_frequency_file,
)

log = logger.get()

dir_path = os.path.dirname(os.path.realpath(__file__))
data_path = os.path.join(dir_path, "..", "data")


def test_parse_spec() -> None:
    spec = FrequencySpec.parse("log 7")
    assert spec.kind is FrequencyKind.LOG
    assert spec.payload == 7
    assert str(spec) == "log 7"

    assert FrequencySpec.parse("SQRT 2").kind is FrequencyKind.SQRT
    assert FrequencySpec.parse("dec -0.125").payload == "-0.125"


def test_parse_spec_errors() -> None:
    for line in ("sqrt 4", "log 1", "foo 3", "log", "log 2 3", "log x", "dec abc", "dec inf"):
        with pytest.raises(DomainError):
            FrequencySpec.parse(line)


def test_evaluate() -> None:
    with mpmath.workprec(256):
        assert FrequencySpec(FrequencyKind.LOG, 2).evaluate() == mpmath.log(2)
        assert FrequencySpec(FrequencyKind.SQRT, 3).evaluate() == mpmath.sqrt(3)
        phi = (1 + mpmath.sqrt(5)) / 2
        assert abs(golden_ratio_spec().evaluate() - phi) < mpmath.mpf(10) ** -70


def test_parse_file(tmp_path) -> None:
    specs = parse_frequency_file(os.path.join(data_path, "logs235.freq"))
    assert [str(s) for s in specs] == ["log 2", "log 3", "log 5"]

    path = tmp_path / "commented.freq"
    path.write_text("# header\nlog 2  # two\n\nsqrt 3\n")
    assert [s.kind for s in parse_frequency_file(str(path))] == [
        FrequencyKind.LOG,
        FrequencyKind.SQRT,
    ]


def test_parse_file_errors(tmp_path) -> None:
    bad = tmp_path / "bad.freq"
    bad.write_text("log 2\n# fine\nsqrt 9\n")
    with pytest.raises(FrequencyParseError) as e:
        parse_frequency_file(str(bad))
    assert e.value.line == 3

    empty = tmp_path / "empty.freq"
    empty.write_text("# nothing\n")
    with pytest.raises(FrequencyParseError) as e:
        parse_frequency_file(str(empty))
    assert e.value.line == 0


def test_instance() -> None:
    instance = LinearFormInstance.of([FrequencySpec(FrequencyKind.LOG, n) for n in (2, 3)])
    assert instance.N == 2
    assert instance.log_payloads == (2, 3)
    assert instance.floats.tolist() == pytest.approx([math.log(2), math.log(3)])
    assert float(instance.combination((3, -2))) == pytest.approx(-math.log(9 / 8))

    mixed = LinearFormInstance.of([FrequencySpec(FrequencyKind.LOG, 2), decimal_spec("0.5")])
    assert mixed.log_payloads is None
    assert mixed.without(0).describe() == ["dec 0.5"]


def test_fixed_point() -> None:
    instance = LinearFormInstance.of([decimal_spec("0.75"), decimal_spec("-2")], precision=64)
    assert instance.fixed_point() == [3 << 62, -(2 << 64)]
    assert instance.specs[0].precision == 64
