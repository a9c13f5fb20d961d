import csv
from fractions import Fraction

import mpmath
import pytest

from app.models.potential import (
    Parity,
    ReferenceFunction,
    anharmonic,
    double_well,
    modified_rational,
    quartic,
    transcendental_exp,
)
from app.schemas.solver import RunConfig
from app.services.figures import export_figure_data
from app.services.hill_oracle import HillSystem, coefficient_ratio, divergence_component, hill_roots
from app.services.moment_space import derive_moment_recursion, missing_moment_roots, rational_ms0_roots, sextic_ms0_roots
from app.services.precision import agreement_digits, matched_digits, significant_digit_count, with_digits
from app.services.recurrence import derive
from app.services.rootfinder import (
    ScanWindow,
    certify_degeneracy_split,
    roots_at_order,
    track,
    track_report,
)
from app.services.tables import (
    DOUBLE_WELL,
    DOUBLE_WELL_ORDERS,
    DOUBLE_WELL_RUNS,
    HIGHER_ANHARMONIC,
    QUARTIC_LADDER,
    RATIONAL_EVEN_LEVELS,
    reproduce_table,
)

pytestmark = pytest.mark.slow

QUARTIC_E0 = QUARTIC_LADDER[(160, "1", 0)]
QUARTIC_E1 = QUARTIC_LADDER[(160, "1", 1)]
UNIT = ReferenceFunction(beta=1)


def only_root(roots, near: str):
    assert roots
    with mpmath.workdps(60):
        target = mpmath.mpf(near)
        return min(roots, key=lambda root: abs(root - target))


@pytest.mark.parametrize(("parity", "window", "published"), [(Parity.EVEN, (1, 2), QUARTIC_E0), (Parity.ODD, (4, 5), QUARTIC_E1)])
def test_quartic_levels_at_order_160(parity, window, published):
    ctx = with_digits(60)
    rec = derive(quartic(1), UNIT, parity, ctx)

    root = only_root(roots_at_order(rec, 160, ScanWindow(*window), ctx), published)

    assert matched_digits(root, published) == significant_digit_count(published)


def test_quartic_convergence_depends_on_beta():
    ctx = with_digits(60)
    window = ScanWindow(1, 2)
    fast = derive(quartic(1), UNIT, Parity.EVEN, ctx)
    slow = derive(quartic(1), ReferenceFunction(beta=Fraction(1, 2)), Parity.EVEN, ctx)

    fast_root = only_root(roots_at_order(fast, 40, window, ctx), QUARTIC_E0)
    slow_root = only_root(roots_at_order(slow, 40, window, ctx), QUARTIC_E0)

    assert matched_digits(fast_root, QUARTIC_E0) >= 10
    assert matched_digits(slow_root, QUARTIC_E0) <= 8


def test_table_one_matches_every_printed_row():
    report = reproduce_table(1)

    assert len(report.rows) == 12
    assert all(row.matched_digits == row.printed_digits for row in report.rows)


def test_double_well_table():
    report = reproduce_table(2)

    assert len(report.rows) == len(DOUBLE_WELL)
    assert all(row.matched_digits == row.printed_digits for row in report.rows)


def test_deep_double_well_splitting_is_certified():
    ctx = with_digits(80)
    beta, (low, high) = DOUBLE_WELL_RUNS["25"]
    window = ScanWindow(low, high, grid_points=32)
    levels = {}
    for parity in (Parity.EVEN, Parity.ODD):
        rec = derive(double_well(25), ReferenceFunction(beta=beta), parity, ctx)
        traces = [trace for trace in track(rec, list(DOUBLE_WELL_ORDERS), window, ctx) if trace.converged]
        levels[parity] = min(traces, key=lambda trace: trace.energy)

    assert certify_degeneracy_split(levels[Parity.EVEN], levels[Parity.ODD], ctx) == 26


def test_higher_anharmonic_table():
    report = reproduce_table(3)

    assert [row.printed_digits for row in report.rows] == [22, 13, 11]
    assert all(row.matched_digits == row.printed_digits for row in report.rows)


def test_rational_fraction_table():
    report = reproduce_table(4)

    assert len(report.rows) == 4
    assert report.rows[0].printed_digits == 34
    assert all(row.matched_digits == row.printed_digits for row in report.rows)


def test_rational_ground_level_from_the_moment_route():
    ctx = with_digits(80)
    published = RATIONAL_EVEN_LEVELS[0]

    potential = modified_rational(Fraction(1, 10), Fraction(1, 10))

    roots = rational_ms0_roots(potential, 80, ScanWindow(Fraction(1, 2), Fraction(3, 2), 16), ctx)

    assert matched_digits(only_root(roots, published), "1.0431737130") == 11


@pytest.mark.parametrize(
    ("parity", "published", "level"),
    [(Parity.EVEN, "1.356371240", 0), (Parity.ODD, "4.633078503", 0), (Parity.EVEN, "8.9706782", 1)],
)
def test_transcendental_levels(parity, published, level):
    ctx = with_digits(60)
    rec = derive(transcendental_exp(200), UNIT, parity, ctx)

    traces = [trace for trace in track(rec, [60, 80, 100], ScanWindow(0, 10), ctx, target_digits=6) if not trace.spurious]

    assert matched_digits(traces[level].energy, published) >= significant_digit_count(published) - 1


def test_momentum_space_quartic_agrees_with_coefficient_zeros():
    ctx = with_digits(100)
    msys = derive_moment_recursion(quartic(1), ctx)

    root = only_root(missing_moment_roots(msys, 80, ScanWindow(1, 2), ctx), QUARTIC_E0)

    assert msys.ms == 1
    assert matched_digits(root, QUARTIC_E0) >= 10


def test_momentum_space_sextic_agrees_with_the_table():
    ctx = with_digits(200)
    msys = derive_moment_recursion(anharmonic(6, 1), ctx)
    published = HIGHER_ANHARMONIC[6]

    root = only_root(missing_moment_roots(msys, 120, ScanWindow(1, 2), ctx), published)

    assert msys.ms == 2
    assert matched_digits(root, published) >= 10


def test_sextic_quartic_gauge_needs_no_missing_moments():
    ctx = with_digits(100)
    published = HIGHER_ANHARMONIC[6]

    root = only_root(sextic_ms0_roots(1, 80, ScanWindow(1, 2), ctx), published)

    assert matched_digits(root, published) >= 10


def test_hill_roots_agree_with_coefficient_zeros():
    ctx = with_digits(80)
    sys = HillSystem(quartic(1), UNIT, 40, Parity.EVEN)
    rec = derive(quartic(1), UNIT, Parity.EVEN, ctx)
    window = ScanWindow(1, 2)

    hill = only_root(hill_roots(sys, window, ctx), QUARTIC_E0)
    coefficient = only_root(roots_at_order(rec, 40, window, ctx), QUARTIC_E0)

    assert agreement_digits(hill, coefficient, 60) >= 8


def test_coefficient_ratio_shares_its_pole_with_the_next_order():
    ctx = with_digits(80)
    rec = derive(quartic(1), UNIT, Parity.EVEN, ctx)
    sys = HillSystem(quartic(1), UNIT, 40, Parity.EVEN)
    window = ScanWindow(1, 2)

    pole = only_root(roots_at_order(rec, 41, window, ctx), QUARTIC_E0)
    hill = only_root(hill_roots(sys, window, ctx), QUARTIC_E0)

    with ctx.activate():
        below = coefficient_ratio(rec, pole - mpmath.power(10, -30), 40, ctx)
        above = coefficient_ratio(rec, pole + mpmath.power(10, -30), 40, ctx)
        far = coefficient_ratio(rec, pole - mpmath.mpf("0.1"), 40, ctx)

        assert agreement_digits(pole, hill, 60) >= 8
        assert abs(below) > 10**20
        assert abs(far) < 10**3
        assert mpmath.sign(below) == -mpmath.sign(above)


def test_divergence_component_blows_up_at_the_order_forty_root():
    ctx = with_digits(120)
    sys = HillSystem(quartic(1), UNIT, 40, Parity.EVEN)
    root = only_root(hill_roots(sys, ScanWindow(Fraction(139, 100), Fraction(140, 100)), ctx), QUARTIC_E0)

    with ctx.activate():
        below = [divergence_component(sys, root - mpmath.power(10, -k), ctx) for k in (50, 55, 60)]
        above = divergence_component(sys, root + mpmath.power(10, -60), ctx)
        sizes = [abs(value) for value in below]

        assert sizes[0] < sizes[1] < sizes[2]
        assert sizes[0] > 1000
        assert mpmath.sign(above) == -mpmath.sign(below[-1])


def test_sextic_with_quartic_decay_never_converges():
    ctx = with_digits(60)
    reference = ReferenceFunction(beta=Fraction(1, 4), sigma=4)
    rec = derive(anharmonic(6, 1), reference, Parity.EVEN, ctx)
    window = ScanWindow(-10, 40, grid_points=256)

    traces, dropped = track_report(rec, [10, 20, 40, 80], window, ctx)

    assert traces or dropped
    assert not any(trace.converged and not trace.spurious for trace in traces)


def test_coupling_curve_is_anchored_at_the_harmonic_and_unit_couplings():
    config = RunConfig(command="figure", figure=1, orders=[40, 80], digits=60)

    lines = [line for line in export_figure_data(1, config).splitlines() if not line.startswith("#")]
    rows = {row["g"]: row for row in csv.DictReader(lines)}

    with mpmath.workdps(60):
        assert abs(mpmath.mpf(rows["0.0"]["E0"]) - 1) < mpmath.mpf("1e-40")
    assert matched_digits(mpmath.mpf(rows["1.0"]["E0"]), "1.3923516415") == 11
