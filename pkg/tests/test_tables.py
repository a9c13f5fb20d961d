from fractions import Fraction

import mpmath
import pytest

from app.services.errors import InputError
from app.services.precision import with_digits
from app.services.rootfinder import ScanWindow
from app.services.tables import (
    DOUBLE_WELL,
    DOUBLE_WELL_RUNS,
    HIGHER_ANHARMONIC,
    HIGHER_BETAS,
    _lowest_levels,
    momentum_cancellation_digits,
    reproduce_table,
    table_digits,
)

CTX = with_digits(40)


def energies(*values: str) -> list[mpmath.mpf]:
    with CTX.activate():
        return [mpmath.mpf(value) for value in values]


@pytest.mark.parametrize(("which", "expected"), [(1, 60), (2, 80), (3, 80), (4, 123)])
def test_table_digits(which, expected):
    assert table_digits(which) == expected


@pytest.mark.parametrize(("n", "beta", "expected"), [(240, Fraction(1, 2), 43), (80, Fraction(1, 2), 15), (100, 1, 10)])
def test_momentum_cancellation_digits(n, beta, expected):
    assert momentum_cancellation_digits(n, beta) == expected


def test_every_double_well_depth_has_a_window_around_its_levels():
    for (z2, _), published in DOUBLE_WELL.items():
        _, (low, high) = DOUBLE_WELL_RUNS[z2]
        assert low < float(published) < high


def test_every_higher_power_has_a_reference_width():
    assert sorted(HIGHER_BETAS) == sorted(HIGHER_ANHARMONIC)


def test_converged_traces_win_over_lower_unconverged_ones():
    roots_by_order = ((10, energies("0.5", "1")), (20, energies("0.7", "1")))

    (run,) = _lowest_levels(roots_by_order, ScanWindow(0, 2), CTX, levels=1)

    assert run.converged
    assert run.energy == 1
    assert run.nearest(10) == 1


def test_missing_levels_come_back_empty():
    roots_by_order = ((10, energies("1")), (20, energies("1")))

    runs = _lowest_levels(roots_by_order, ScanWindow(0, 2), CTX, levels=2)

    assert runs[1].energy is None
    assert not runs[1].converged
    assert runs[1].nearest(20) is None


def test_unknown_table_is_rejected():
    with pytest.raises(InputError):
        reproduce_table(5)
