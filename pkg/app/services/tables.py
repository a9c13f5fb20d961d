"""Published benchmark tables and the runs that reproduce them."""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from ..models.potential import (
    Parity,
    PotentialSpec,
    ReferenceFunction,
    anharmonic,
    describe_potential,
    double_well,
    modified_rational,
    quartic,
)
from ..schemas.solver import TableReport, TableRow
from .errors import InputError
from .moment_space import rational_ms0_roots
from .precision import PrecisionContext, Real, format_real, matched_digits, significant_digit_count, with_digits
from .recurrence import derive
from .rootfinder import DEFAULT_TARGET_DIGITS, ScanWindow, link_traces, roots_at_order

logger = logging.getLogger(__name__)

MIN_TABLE_DIGITS = 60
DIGIT_HEADROOM = 20

# (order, beta, level) -> printed energy
QUARTIC_LADDER = {
    (10, "1/2", 0): "1.41",
    (10, "1/2", 1): "4.9",
    (10, "1", 0): "1.392",
    (10, "1", 1): "4.65",
    (40, "1/2", 0): "1.392349",
    (40, "1/2", 1): "4.64884",
    (40, "1", 0): "1.3923516414",
    (40, "1", 1): "4.64881270",
    (160, "1/2", 0): "1.392351641530291",
    (160, "1/2", 1): "4.648812704212",
    (160, "1", 0): "1.392351641530291855657507876",
    (160, "1", 1): "4.64881270421207753637703291",
}

DOUBLE_WELL = {
    ("0", "even"): "1.060362090484182899647046016",
    ("0", "odd"): "3.799673029801394168783094188",
    ("1", "even"): "0.657653005180715123059021723",
    ("1", "odd"): "2.834536202119304214654676208",
    ("5", "even"): "-3.410142761239829475297709653",
    ("5", "odd"): "-3.250675362289235980228513775",
    ("10", "even"): "-20.633576702947799149958554634",
    ("10", "odd"): "-20.633546884404911079343874899",
    ("15", "even"): "-50.841387284381954366250996515",
    ("15", "odd"): "-50.841387284187005154710149735",
    ("25", "even"): "-149.219456142190888029163966538",
    ("25", "odd"): "-149.219456142190888029163958974",
}

HIGHER_ANHARMONIC = {
    6: "1.435624619003392231569",
    8: "1.491019895662",
    10: "1.5462635126",
}

RATIONAL_EVEN_LEVELS = {
    0: "1.043173713044445233778700870546094",
    2: "5.1810947858847009271104090728883",
    4: "9.2728169700352522545824384789",
    6: "13.3393907269735512329331705",
}

CAPTIONS = {
    1: "Quartic anharmonic oscillator x^2 + x^4: ground and first excited levels",
    2: "Double well -Z^2 x^2 + x^4: lowest even and odd levels",
    3: "Ground levels of x^2 + x^6, x^2 + x^8 and x^2 + x^10",
    4: "Even levels of x^2 + g x^2/(1 + lam x^2), g = lam = 1/10",
}

QUARTIC_ORDERS = (10, 40, 160)
DOUBLE_WELL_ORDERS = (120, 160, 200)
HIGHER_ORDERS = (160, 200, 240)
RATIONAL_ORDERS = (160, 200, 240)

# Z^2 -> (beta, window); the deeper the wells the wider the reference Gaussian.
DOUBLE_WELL_RUNS = {
    "0": (Fraction(3, 2), (0, 5)),
    "1": (Fraction(3, 2), (-1, 4)),
    "5": (Fraction(2), (-7, 0)),
    "10": (Fraction(2), (-25, -15)),
    "15": (Fraction(5, 2), (-57, -45)),
    "25": (Fraction(3), (-157, -143)),
}

# power -> beta for x^2 + x^power
HIGHER_BETAS = {6: Fraction(4), 8: Fraction(8), 10: Fraction(12)}

RATIONAL_MOMENTUM_BETA = Fraction(1, 2)


@dataclass(frozen=True)
class LevelRun:
    """Roots at every order plus the level's final-order energy and convergence flag."""

    roots_by_order: tuple
    energy: mpmath.mpf | None
    converged: bool

    def nearest(self, order: int) -> mpmath.mpf | None:
        if self.energy is None:
            return None
        for candidate_order, roots in self.roots_by_order:
            if candidate_order == order and roots:
                return min(roots, key=lambda root: abs(root - self.energy))
        return None


def momentum_cancellation_digits(n: int, beta: Real) -> int:
    """Digits lost summing n momentum terms whose sizes grow like ((1/4 + beta) / beta)^n."""
    growth = (Fraction(1, 4) + Fraction(beta)) / Fraction(beta)
    return math.ceil(n * math.log10(growth))


def table_digits(which: int) -> int:
    """max(60, longest printed value + 20), plus extra room for the high-order tables."""
    printed = {
        1: QUARTIC_LADDER.values(),
        2: DOUBLE_WELL.values(),
        3: HIGHER_ANHARMONIC.values(),
        4: RATIONAL_EVEN_LEVELS.values(),
    }[which]
    digits = max(MIN_TABLE_DIGITS, max(significant_digit_count(text) for text in printed) + DIGIT_HEADROOM)
    if which in (2, 3):
        digits += DIGIT_HEADROOM
    elif which == 4:
        digits += momentum_cancellation_digits(RATIONAL_ORDERS[-1], RATIONAL_MOMENTUM_BETA) + DIGIT_HEADROOM
    return digits


def _lowest_levels(roots_by_order: tuple, window: ScanWindow, ctx: PrecisionContext, levels: int) -> list[LevelRun]:
    traces, _ = link_traces(list(roots_by_order), window, ctx, DEFAULT_TARGET_DIGITS)
    converged = [trace for trace in traces if trace.converged and not trace.spurious]
    kept = converged or [trace for trace in traces if not trace.spurious]
    kept.sort(key=lambda trace: trace.energy)
    runs = []
    for level in range(levels):
        if level < len(kept):
            runs.append(LevelRun(roots_by_order, kept[level].energy, kept[level].converged))
        else:
            runs.append(LevelRun(roots_by_order, None, False))
    return runs


def run_levels(
    potential: PotentialSpec,
    ref: ReferenceFunction,
    parity: Parity,
    orders: tuple[int, ...],
    window: ScanWindow,
    ctx: PrecisionContext,
    levels: int = 1,
    jobs: int = 1,
) -> list[LevelRun]:
    """Track the lowest `levels` traces of one parity, converged ones first."""
    rec = derive(potential, ref, parity, ctx)
    roots_by_order = tuple((order, roots_at_order(rec, order, window, ctx, jobs)) for order in orders)
    return _lowest_levels(roots_by_order, window, ctx, levels)


def run_moment_levels(
    potential: PotentialSpec,
    orders: tuple[int, ...],
    window: ScanWindow,
    ctx: PrecisionContext,
    levels: int = 1,
    beta: Real = RATIONAL_MOMENTUM_BETA,
    jobs: int = 1,
) -> list[LevelRun]:
    """Even levels of the rational potential from momentum determinants of growing order n."""
    roots_by_order = tuple((n, rational_ms0_roots(potential, n, window, ctx, beta, jobs)) for n in orders)
    return _lowest_levels(roots_by_order, window, ctx, levels)


def _row(label: str, parity: Parity, order: int, value, published: str, converged: bool, digits: int) -> TableRow:
    printed = significant_digit_count(published)
    return TableRow(
        label=label,
        parity=parity.value,
        order=order,
        computed=None if value is None else format_real(value, digits - 8),
        published=published,
        matched_digits=0 if value is None else matched_digits(value, published),
        printed_digits=printed,
        converged=converged,
    )


def _table_one(ctx: PrecisionContext, jobs: int) -> list[TableRow]:
    rows = []
    window = ScanWindow(e_min=0, e_max=10, grid_points=128)
    for beta in ("1/2", "1"):
        for level, parity in ((0, Parity.EVEN), (1, Parity.ODD)):
            ref = ReferenceFunction(beta=Fraction(beta), sigma=2)
            (run,) = run_levels(quartic(1), ref, parity, QUARTIC_ORDERS, window, ctx, jobs=jobs)
            for order in QUARTIC_ORDERS:
                published = QUARTIC_LADDER[(order, beta, level)]
                rows.append(
                    _row(f"I={order} beta={beta} n={level}", parity, order, run.nearest(order), published, run.converged, ctx.digits)
                )
    return sorted(rows, key=lambda row: (row.order, row.label))


def double_well_run(z2: str, parity: Parity, ctx: PrecisionContext, jobs: int = 1) -> LevelRun:
    beta, (low, high) = DOUBLE_WELL_RUNS[z2]
    window = ScanWindow(e_min=low, e_max=high, grid_points=32)
    potential = double_well(Fraction(z2))
    (run,) = run_levels(potential, ReferenceFunction(beta=beta), parity, DOUBLE_WELL_ORDERS, window, ctx, jobs=jobs)
    return run


def _table_two(ctx: PrecisionContext, jobs: int) -> list[TableRow]:
    final = DOUBLE_WELL_ORDERS[-1]
    rows = []
    for (z2, parity_name), published in DOUBLE_WELL.items():
        parity = Parity(parity_name)
        run = double_well_run(z2, parity, ctx, jobs)
        rows.append(_row(f"Z2={z2}", parity, final, run.energy, published, run.converged, ctx.digits))
    return rows


def _table_three(ctx: PrecisionContext, jobs: int) -> list[TableRow]:
    rows = []
    final = HIGHER_ORDERS[-1]
    window = ScanWindow(e_min=1, e_max=2, grid_points=32)
    for power, published in HIGHER_ANHARMONIC.items():
        potential = anharmonic(power, 1)
        ref = ReferenceFunction(beta=HIGHER_BETAS[power])
        (run,) = run_levels(potential, ref, Parity.EVEN, HIGHER_ORDERS, window, ctx, jobs=jobs)
        rows.append(_row(describe_potential(potential), Parity.EVEN, final, run.energy, published, run.converged, ctx.digits))
    return rows


def _table_four(ctx: PrecisionContext, jobs: int) -> list[TableRow]:
    potential = modified_rational(Fraction(1, 10), Fraction(1, 10))
    window = ScanWindow(e_min=Fraction(1, 2), e_max=15, grid_points=128)
    runs = run_moment_levels(potential, RATIONAL_ORDERS, window, ctx, levels=len(RATIONAL_EVEN_LEVELS), jobs=jobs)
    final = RATIONAL_ORDERS[-1]
    return [
        _row(f"n={level}", Parity.EVEN, final, run.energy, published, run.converged, ctx.digits)
        for run, (level, published) in zip(runs, RATIONAL_EVEN_LEVELS.items())
    ]


TABLE_BUILDERS = {1: _table_one, 2: _table_two, 3: _table_three, 4: _table_four}


def reproduce_table(which: int, ctx: PrecisionContext | None = None, jobs: int = 1) -> TableReport:
    if which not in TABLE_BUILDERS:
        raise InputError(f"Unknown table {which}; choose 1, 2, 3 or 4.")
    ctx = ctx or with_digits(table_digits(which))
    rows = TABLE_BUILDERS[which](ctx, jobs)
    for row in rows:
        if row.matched_digits < row.printed_digits:
            logger.warning("Table %d %s (%s): matched %d of %d digits", which, row.label, row.parity, row.matched_digits, row.printed_digits)
    logger.info("Table %d: %d rows, %d fully matched", which, len(rows), sum(r.matched_digits == r.printed_digits for r in rows))
    return TableReport(table=which, caption=CAPTIONS[which], digits=ctx.digits, rows=rows)
