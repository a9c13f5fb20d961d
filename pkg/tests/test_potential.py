import math
from fractions import Fraction

import mpmath
import pytest

from app.models.potential import (
    Parity,
    PotentialSpec,
    ReferenceFunction,
    anharmonic,
    describe_potential,
    double_well,
    gauge_transform,
    harmonic,
    modified_rational,
    potential_from_text,
    potential_to_text,
    quartic,
    schrodinger_ode,
    sextic_modified_ode,
    singular,
    singular_alpha,
    transcendental_exp,
)
from app.services.errors import InputError
from app.services.precision import with_digits

CTX = with_digits(50)


def close(value, expected, tolerance="1e-45") -> bool:
    with CTX.activate():
        return abs(value - CTX.real(expected)) < mpmath.mpf(tolerance)


@pytest.mark.parametrize(
    ("potential", "expected"),
    [
        (harmonic(), "x^2"),
        (quartic(1), "x^2 + x^4"),
        (quartic(Fraction(1, 2)), "x^2 + 1/2 x^4"),
        (double_well(25), "-25 x^2 + x^4"),
        (double_well(0), "x^4"),
        (anharmonic(8, 1), "x^2 + x^8"),
        (singular(2), "x^2 + 2 x^-2"),
        (modified_rational(Fraction(1, 10), Fraction(1, 10)), "x^2 + 1/10 x^2/(1 + 1/10 x^2)"),
        (transcendental_exp(80), "exp(x^2) - 1 [series through x^80]"),
    ],
)
def test_describe_potential(potential, expected):
    assert describe_potential(potential) == expected


def test_anharmonic_names_the_family():
    assert anharmonic(6, 1).name == "sextic"
    assert anharmonic(10, 1).even_series == {2: Fraction(1), 10: Fraction(1)}


@pytest.mark.parametrize("power", [2, 5, 7])
def test_anharmonic_rejects_bad_powers(power):
    with pytest.raises(InputError):
        anharmonic(power, 1)


def test_transcendental_series_uses_inverse_factorials():
    potential = transcendental_exp(80)

    assert len(potential.even_series) == 40
    assert potential.even_series[2] == 1
    assert potential.even_series[80] == Fraction(1, math.factorial(40))
    assert potential.series_truncation == 80


@pytest.mark.parametrize("truncation", [0, 7])
def test_transcendental_series_rejects_odd_or_tiny_truncation(truncation):
    with pytest.raises(InputError):
        transcendental_exp(truncation)


def test_rational_with_zero_coupling_is_polynomial():
    potential = modified_rational(0, Fraction(1, 10))

    assert potential.rational is None
    assert potential.is_polynomial


@pytest.mark.parametrize(("g", "lam"), [(1, 0), (-1, 1)])
def test_rational_rejects_bad_parameters(g, lam):
    with pytest.raises(InputError):
        modified_rational(g, lam)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"even_series": {3: Fraction(1)}},
        {"even_series": {0: Fraction(1)}},
        {"even_series": {2: Fraction(1)}, "singular_coeff": Fraction(-1, 4)},
        {"even_series": {2: Fraction(1), 4: Fraction(-1)}, "series_truncation": 4},
    ],
)
def test_potential_spec_validates_terms(kwargs):
    with pytest.raises(InputError):
        PotentialSpec(**kwargs)


@pytest.mark.parametrize("kwargs", [{"sigma": 5}, {"beta": 0}, {"beta": "-1/2"}, {"alpha": -1}])
def test_reference_function_validates_parameters(kwargs):
    with pytest.raises(InputError):
        ReferenceFunction(**kwargs)


def test_singular_alpha_is_the_regular_root():
    assert close(singular_alpha(2, CTX), 2)
    assert close(singular_alpha(Fraction(3, 4), CTX), Fraction(3, 2))


def test_parity_offsets():
    assert Parity.EVEN.offset == 0
    assert Parity.ODD.offset == 1


def test_potential_file_parses_comments_and_reference_overrides():
    text = "# quartic with a softer anharmonic term\n2 1\n4 1/2   # g\n\nbeta 1\nsigma 2\n"

    potential, reference = potential_from_text(text)

    assert potential.even_series == {2: Fraction(1), 4: Fraction(1, 2)}
    assert reference == {"beta": Fraction(1), "sigma": 2}


def test_potential_file_written_form_reads_back():
    original = singular(Fraction(3, 4))
    text = potential_to_text(original, ReferenceFunction(beta=Fraction(1, 2), alpha=Fraction(3, 2)))

    potential, reference = potential_from_text(text)

    assert potential.even_series == original.even_series
    assert potential.singular_coeff == Fraction(3, 4)
    assert reference == {"sigma": 2, "alpha": Fraction(3, 2), "beta": Fraction(1, 2)}


@pytest.mark.parametrize("text", ["2 1\n2 3\n", "foo 1\n", "", "# nothing\n", "2 1 3\n", "sigma two\n2 1\n", "2 1.2.3\n"])
def test_potential_file_rejects_malformed_input(text):
    with pytest.raises(InputError):
        potential_from_text(text)


def test_rational_potential_has_no_file_form():
    with pytest.raises(InputError):
        potential_to_text(modified_rational(1, 1))


def test_schrodinger_ode_for_quartic():
    ode = schrodinger_ode(quartic(1), CTX)

    assert ode.coefficient(2) == {0: (-1, 0)}
    assert ode.coefficient(1) == {}
    assert ode.coefficient(0) == {0: (0, -1), 2: (1, 0), 4: (1, 0)}


def test_schrodinger_ode_for_rational_clears_the_denominator():
    ode = schrodinger_ode(modified_rational(Fraction(1, 10), Fraction(1, 10)), CTX)

    second = ode.coefficient(2)
    assert set(second) == {0, 2, 4}
    assert close(second[2][0], Fraction(-1, 5))
    assert close(second[4][0], Fraction(-1, 100))
    first = ode.coefficient(1)
    assert close(first[1][0], Fraction(-2, 5))
    assert close(first[3][0], Fraction(-1, 25))
    # the energy multiplies D Q = 1 + (lam + g) x^2 + lam g x^4
    energy_part = {power: c1 for power, (_, c1) in ode.coefficient(0).items() if c1}
    assert close(energy_part[0], -1)
    assert close(energy_part[4], Fraction(-1, 100))


def test_gauge_transform_of_harmonic_cancels_the_confining_term():
    ode = gauge_transform(schrodinger_ode(harmonic(), CTX), 0, Fraction(1, 2), 2, CTX)

    assert ode.coefficient(2) == {0: (-1, 0)}
    assert ode.coefficient(1) == {1: (2, 0)}
    assert ode.coefficient(0) == {0: (1, -1)}


def test_sextic_gauge_removes_the_x6_term():
    ode = sextic_modified_ode(1, CTX)

    assert ode.coefficient(2) == {0: (-1, 0)}
    assert ode.coefficient(1) == {3: (-2, 0)}
    assert ode.coefficient(0) == {0: (0, -1), 2: (-2, 0)}
    assert ode.label.endswith("[quartic gauge]")


@pytest.mark.parametrize("g", [0, -1, "-1/2"])
def test_sextic_gauge_needs_positive_coupling(g):
    with pytest.raises(InputError):
        sextic_modified_ode(g, CTX)
