import pytest
from hypothesis import given, strategies as st

from regretcert.rational import (
    RationalFormatError,
    format_rational,
    is_rational_literal,
    parse_rational,
    rat,
)


def test_parse_basics():
    assert parse_rational("3/4") == rat(3, 4)
    assert parse_rational("-3/4") == rat(-3, 4)
    assert parse_rational("7") == 7
    assert parse_rational("0") == 0


@pytest.mark.parametrize("bad", ["1/0", "1/-2", "+3", "1.5", "", "a", "1 /2", "--1"])
def test_parse_rejects(bad):
    assert not is_rational_literal(bad)
    with pytest.raises(RationalFormatError):
        parse_rational(bad)


def test_format_canonical():
    assert format_rational(rat(6, 4)) == "3/2"
    assert format_rational(rat(-6, 4)) == "-3/2"
    assert format_rational(rat(8, 2)) == "4"
    assert format_rational(rat(0, 5)) == "0"


@given(st.integers(-10**12, 10**12), st.integers(1, 10**9))
def test_roundtrip(num, den):
    value = rat(num, den)
    assert parse_rational(format_rational(value)) == value


def test_exactness_no_rounding():
    third = rat(1, 3)
    assert third + third + third == 1
    assert rat(1, 10) * 10 == 1
