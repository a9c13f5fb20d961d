import pickle
from fractions import Fraction

import mpmath
import pytest

from app.services.errors import ConfigurationError, InputError
from app.services.number_parser import format_exact, parse_exact
from app.services.precision import (
    PrecisionContext,
    agreement_digits,
    format_real,
    matched_digits,
    significant_digit_count,
    to_mpf,
    with_digits,
)

Z2_25_EVEN = "-149.219456142190888029163966538"
Z2_25_ODD = "-149.219456142190888029163958974"


def big(text: str) -> mpmath.mpf:
    with mpmath.workdps(60):
        return mpmath.mpf(text)


def shifted(text: str, offset: str) -> mpmath.mpf:
    with mpmath.workdps(60):
        return mpmath.mpf(text) + mpmath.mpf(offset)


@pytest.mark.parametrize(("digits", "exponent"), [(50, -40), (30, -20), (120, -110)])
def test_with_digits_uses_default_zero_tolerance(digits, exponent):
    ctx = with_digits(digits)

    assert ctx.digits == digits
    with mpmath.workdps(digits):
        assert ctx.zero_tol == mpmath.power(10, exponent)


@pytest.mark.parametrize("digits", [10, 29, 0, -5])
def test_with_digits_rejects_precision_below_floor(digits):
    with pytest.raises(ConfigurationError):
        with_digits(digits)


@pytest.mark.parametrize("zero_tol", ["0", "1", "1e-15", "-1e-35"])
def test_context_rejects_zero_tolerance_outside_half_precision(zero_tol):
    with pytest.raises(ConfigurationError):
        PrecisionContext(digits=40, zero_tol=big(zero_tol))


def test_context_is_an_immutable_shareable_value():
    ctx = with_digits(40)

    assert pickle.loads(pickle.dumps(ctx)) == ctx
    with pytest.raises(AttributeError):
        ctx.digits = 50


def test_activate_scopes_mpmath_precision():
    ctx = with_digits(45)
    outer = mpmath.mp.dps

    with ctx.activate():
        assert mpmath.mp.dps == 45

    assert mpmath.mp.dps == outer


@pytest.mark.parametrize(
    ("value", "numerator", "denominator"),
    [
        (Fraction(1, 3), 1, 3),
        ("0.1", 1, 10),
        ("-5/4", -5, 4),
        (7, 7, 1),
    ],
)
def test_to_mpf_converts_exact_values_without_binary_floats(value, numerator, denominator):
    ctx = with_digits(40)

    with ctx.activate():
        assert to_mpf(value) == mpmath.mpf(numerator) / denominator


@pytest.mark.parametrize("value", [True, 1.5, None])
def test_to_mpf_rejects_non_exact_inputs(value):
    with pytest.raises(InputError):
        to_mpf(value)


@pytest.mark.parametrize(
    ("raw", "expected"),
    [
        ("3", Fraction(3)),
        ("-8", Fraction(-8)),
        (".9", Fraction(9, 10)),
        ("0.9", Fraction(9, 10)),
        ("-1.25", Fraction(-5, 4)),
        ("1/2", Fraction(1, 2)),
        ("2/4", Fraction(1, 2)),
        ("1e-3", Fraction(1, 1000)),
        ("2.5E2", Fraction(250)),
    ],
)
def test_parse_exact_accepts_allowed_formats(raw, expected):
    assert parse_exact(raw) == expected


@pytest.mark.parametrize("raw", ["", "1 1/2", "3+4", "1/", "/2", "1/0", "1.", "1.2.3", " 3", "3 ", "abc"])
def test_parse_exact_rejects_invalid_formats(raw):
    with pytest.raises(InputError) as exc_info:
        parse_exact(raw)

    assert exc_info.value.code == "INVALID_NUMBER_FORMAT"


@pytest.mark.parametrize(("value", "expected"), [(Fraction(1, 2), "1/2"), (Fraction(3), "3"), (Fraction(-1, 10), "-1/10")])
def test_format_exact(value, expected):
    assert format_exact(value) == expected


@pytest.mark.parametrize(
    ("left", "right", "expected"),
    [
        (Z2_25_EVEN, Z2_25_ODD, 26),
        ("-50.841387284381954366250996515", "-50.841387284187005154710149735", 11),
        ("1.060362090484182899647046016", "3.799673029801394168783094188", 0),
        ("-3.410142761239829475297709653", "-3.250675362289235980228513775", 1),
        ("1.5", "1.5", 40),
    ],
)
def test_agreement_digits_counts_shared_leading_places(left, right, expected):
    assert agreement_digits(big(left), big(right), 40) == expected


def test_matched_digits_is_capped_at_printed_length():
    printed = "1.392351641530291855657507876"

    assert matched_digits(shifted(printed, "1e-40"), printed) == 28
    assert matched_digits(shifted(printed, "3e-12"), printed) == 12


@pytest.mark.parametrize(
    ("text", "expected"),
    [(Z2_25_EVEN, 30), ("0.657653005180715123059021723", 27), ("1.41", 3), ("4.9", 2)],
)
def test_significant_digit_count(text, expected):
    assert significant_digit_count(text) == expected


def test_format_real_prints_fixed_decimals():
    with mpmath.workdps(40):
        third = mpmath.mpf(1) / 3

    assert format_real(third, 10) == "0.3333333333"
