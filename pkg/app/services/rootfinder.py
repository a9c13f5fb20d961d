"""Sign-scan plus bisection over big-real energies, and order-to-order root tracking."""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import mpmath

from ..models.potential import PotentialSpec
from .errors import BisectionStagnationError, ConfigurationError, ConvergenceError, InputError
from .precision import PrecisionContext, Real, agreement_digits, to_mpf
from .recurrence import Recurrence, quantization_function

logger = logging.getLogger(__name__)

MIN_GRID_POINTS = 8
MAX_GRID_DOUBLINGS = 4
DEFAULT_GRID_POINTS = 64
DEFAULT_TARGET_DIGITS = 10


@dataclass(frozen=True)
class ScanWindow:
    e_min: Real
    e_max: Real
    grid_points: int = DEFAULT_GRID_POINTS

    def __post_init__(self) -> None:
        if self.grid_points < MIN_GRID_POINTS:
            raise InputError(f"Scan grid needs at least {MIN_GRID_POINTS} points, got {self.grid_points}.")
        with mpmath.workdps(30):
            if to_mpf(self.e_min) >= to_mpf(self.e_max):
                raise InputError("Scan window must satisfy e_min < e_max.")


@dataclass(frozen=True)
class RootTrace:
    level_index: int
    per_order: tuple[tuple[int, mpmath.mpf], ...]
    stabilized_digits: int
    converged: bool
    spurious: bool = False
    digit_history: tuple[int, ...] = ()

    @property
    def energy(self) -> mpmath.mpf:
        return self.per_order[-1][1]


# Worker plumbing. Callables shipped to a process pool must be top-level and
# picklable; each call re-enters the caller's working precision.


@dataclass(frozen=True)
class _AtPrecision:
    func: Callable
    digits: int

    def __call__(self, value):
        with mpmath.workdps(self.digits):
            return self.func(value)


@dataclass(frozen=True)
class _Bisector:
    func: Callable
    ctx: PrecisionContext

    def __call__(self, bracket):
        lo, hi, f_lo = bracket
        return bisect(self.func, lo, hi, f_lo, self.ctx)


def parallel_map(func: Callable, items: list, ctx: PrecisionContext, jobs: int = 1) -> list:
    """Order-preserving map; results are identical for any `jobs`."""
    if jobs < 1:
        raise ConfigurationError(f"jobs must be >= 1, got {jobs}.")
    call = _AtPrecision(func=func, digits=ctx.digits)
    if jobs == 1 or len(items) < 2:
        return [call(item) for item in items]
    chunk = max(1, len(items) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(call, items, chunksize=chunk))


def bisect(func: Callable, lo: mpmath.mpf, hi: mpmath.mpf, f_lo: mpmath.mpf, ctx: PrecisionContext) -> mpmath.mpf:
    tolerance = ctx.bisection_tolerance
    with ctx.activate():
        while hi - lo > tolerance:
            mid = (lo + hi) / 2
            if mid == lo or mid == hi:
                raise BisectionStagnationError(
                    f"Bisection stagnated in [{mpmath.nstr(lo, 20)}, {mpmath.nstr(hi, 20)}]; raise --digits.",
                    bracket=(lo, hi),
                )
            f_mid = func(mid)
            if not f_mid:
                return mid
            if mpmath.sign(f_mid) == mpmath.sign(f_lo):
                lo, f_lo = mid, f_mid
            else:
                hi = mid
        return (lo + hi) / 2


def _grid(lo: mpmath.mpf, hi: mpmath.mpf, points: int) -> list[mpmath.mpf]:
    step = (hi - lo) / (points - 1)
    return [lo + step * k for k in range(points - 1)] + [hi]


def _brackets(grid: list, values: list) -> tuple[list, list]:
    """Sign-change brackets (lo, hi, f_lo) and grid points where the function is exactly zero."""
    exact = []
    brackets = []
    previous = None
    zero_between = False
    for energy, value in zip(grid, values):
        if not value:
            exact.append(energy)
            zero_between = True
            continue
        if previous is not None and not zero_between and mpmath.sign(value) != mpmath.sign(previous[1]):
            brackets.append((previous[0], energy, previous[1]))
        previous = (energy, value)
        zero_between = False
    return brackets, exact


def find_roots(func: Callable, window: ScanWindow, ctx: PrecisionContext, jobs: int = 1) -> list[mpmath.mpf]:
    """All simple roots of `func` in the window, sorted ascending."""
    with ctx.activate():
        lo, hi = to_mpf(window.e_min), to_mpf(window.e_max)
        points = window.grid_points
        grid = _grid(lo, hi, points)
    values = parallel_map(func, grid, ctx, jobs)
    brackets, exact = _brackets(grid, values)

    for _ in range(MAX_GRID_DOUBLINGS):
        with ctx.activate():
            midpoints = [(grid[k] + grid[k + 1]) / 2 for k in range(len(grid) - 1)]
        mid_values = parallel_map(func, midpoints, ctx, jobs)
        finer_grid = [grid[0]]
        finer_values = [values[0]]
        for k, (energy, value) in enumerate(zip(midpoints, mid_values)):
            finer_grid += [energy, grid[k + 1]]
            finer_values += [value, values[k + 1]]
        finer_brackets, finer_exact = _brackets(finer_grid, finer_values)
        grid, values = finer_grid, finer_values
        refined = len(finer_brackets) + len(finer_exact) > len(brackets) + len(exact)
        brackets, exact = finer_brackets, finer_exact
        if not refined:
            break
        logger.debug("Grid doubled to %d points: %d sign changes", len(grid), len(brackets))

    roots = parallel_map(_Bisector(func=func, ctx=ctx), brackets, ctx, jobs) + exact
    return sorted(roots)


def sign_brackets(
    func: Callable, window: ScanWindow, ctx: PrecisionContext, jobs: int = 1
) -> list[tuple[mpmath.mpf, mpmath.mpf]]:
    """Sign changes on the window's own grid, unrefined. A grid point where `func` vanishes comes back as (E, E)."""
    with ctx.activate():
        grid = _grid(to_mpf(window.e_min), to_mpf(window.e_max), window.grid_points)
    values = parallel_map(func, grid, ctx, jobs)
    brackets, exact = _brackets(grid, values)
    return sorted([(lo, hi) for lo, hi, _ in brackets] + [(energy, energy) for energy in exact])


def _check_recurrence(rec: Recurrence, I: int, ctx: PrecisionContext) -> None:
    if ctx.digits != rec.digits:
        raise ConfigurationError(
            f"Recurrence was derived at {rec.digits} digits; derive it again under {ctx.digits} digits."
        )
    # a truncated series stands for an infinite one, so its longest lags never bind
    span = rec.max_lag if rec.series_truncation is None else min(rec.lags, default=0)
    if I < span:
        raise InputError(f"Order {I} is below the recurrence span {span}.")


def roots_at_order(
    rec: Recurrence,
    I: int,
    window: ScanWindow,
    ctx: PrecisionContext,
    jobs: int = 1,
) -> list[mpmath.mpf]:
    _check_recurrence(rec, I, ctx)
    roots = find_roots(quantization_function(rec, I), window, ctx, jobs)
    logger.info("Order %d (%s, %s): %d roots in window", I, rec.label, rec.parity.value, len(roots))
    return roots


def brackets_at_order(
    rec: Recurrence,
    I: int,
    window: ScanWindow,
    ctx: PrecisionContext,
    jobs: int = 1,
) -> list[tuple[mpmath.mpf, mpmath.mpf]]:
    _check_recurrence(rec, I, ctx)
    brackets = sign_brackets(quantization_function(rec, I), window, ctx, jobs)
    logger.info(
        "Order %d (%s, %s): %d sign changes on %d points", I, rec.label, rec.parity.value, len(brackets), window.grid_points
    )
    return brackets


def _nearest(target: mpmath.mpf, candidates: list[mpmath.mpf]) -> int | None:
    best = None
    for index, candidate in enumerate(candidates):
        # strict comparison keeps the lower root on ties (candidates are sorted)
        if best is None or abs(candidate - target) < abs(candidates[best] - target):
            best = index
    return best


def _digit_history(per_order: list, cap: int) -> list[int]:
    return [agreement_digits(a, b, cap) for (_, a), (_, b) in zip(per_order, per_order[1:])]


def link_traces(
    roots_by_order: list[tuple[int, list[mpmath.mpf]]],
    window: ScanWindow,
    ctx: PrecisionContext,
    target_digits: int = DEFAULT_TARGET_DIGITS,
) -> tuple[list[RootTrace], list[tuple[int, mpmath.mpf]]]:
    """Chain per-order roots into traces anchored on the largest order.

    Returns the traces and the (order, root) pairs no trace claimed.
    """
    if not roots_by_order:
        return [], []
    cap = ctx.digits - 8
    with ctx.activate():
        width = to_mpf(window.e_max) - to_mpf(window.e_min)
        final_order, final_roots = roots_by_order[-1]
        chains = [[(final_order, root)] for root in final_roots]
        broken = [False] * len(final_roots)
        gaps = []
        for index, root in enumerate(final_roots):
            neighbours = [abs(root - other) for k, other in enumerate(final_roots) if k != index]
            gaps.append(min(neighbours) if neighbours else width)
        claimed: set[tuple[int, int]] = set()
        for order, roots in reversed(roots_by_order[:-1]):
            for index, chain in enumerate(chains):
                if broken[index]:
                    continue
                pick = _nearest(chain[0][1], roots)
                if pick is None or (order, pick) in claimed or abs(roots[pick] - chain[0][1]) > gaps[index]:
                    broken[index] = True
                    continue
                claimed.add((order, pick))
                chain.insert(0, (order, roots[pick]))

    dropped = [
        (order, root)
        for order, roots in roots_by_order[:-1]
        for index, root in enumerate(roots)
        if (order, index) not in claimed
    ]
    traces = []
    for level, (chain, is_broken) in enumerate(zip(chains, broken)):
        history = _digit_history(chain, cap)
        stabilized = history[-1] if history else 0
        monotone = all(later >= earlier for earlier, later in zip(history[-3:], history[-2:]))
        spurious = len(chain) < 2
        converged = not spurious and stabilized >= target_digits and monotone
        traces.append(
            RootTrace(
                level_index=level,
                per_order=tuple(chain),
                stabilized_digits=stabilized,
                converged=converged,
                spurious=spurious,
                digit_history=tuple(history),
            )
        )
        if not converged:
            logger.warning(
                "Trace %d near %s unconverged (%d stable digits%s)",
                level,
                mpmath.nstr(chain[-1][1], 12),
                stabilized,
                ", spurious" if spurious else "",
            )
        elif is_broken:
            logger.debug("Trace %d starts at order %d", level, chain[0][0])
    for order, root in dropped:
        logger.warning("Dropped root %s at order %d: no partner at the final order", mpmath.nstr(root, 12), order)
    return traces, dropped


def track_report(
    rec: Recurrence,
    orders: list[int],
    window: ScanWindow,
    ctx: PrecisionContext,
    target_digits: int = DEFAULT_TARGET_DIGITS,
    jobs: int = 1,
) -> tuple[list[RootTrace], list[tuple[int, mpmath.mpf]]]:
    if not orders:
        raise InputError("At least one order is required.")
    if any(later <= earlier for earlier, later in zip(orders, orders[1:])):
        raise InputError(f"Orders must be strictly increasing, got {orders}.")
    roots_by_order = [(order, roots_at_order(rec, order, window, ctx, jobs)) for order in orders]
    traces, dropped = link_traces(roots_by_order, window, ctx, target_digits)
    logger.info(
        "Tracked %d levels over orders %s: %d converged, %d dropped roots",
        len(traces),
        orders,
        sum(trace.converged for trace in traces),
        len(dropped),
    )
    return traces, dropped


def track(
    rec: Recurrence,
    orders: list[int],
    window: ScanWindow,
    ctx: PrecisionContext,
    target_digits: int = DEFAULT_TARGET_DIGITS,
    jobs: int = 1,
) -> list[RootTrace]:
    traces, _ = track_report(rec, orders, window, ctx, target_digits, jobs)
    return traces


def certify_degeneracy_split(trace_even: RootTrace, trace_odd: RootTrace, ctx: PrecisionContext) -> int:
    """Leading decimal digits shared by two quasi-degenerate levels."""
    for name, trace in (("even", trace_even), ("odd", trace_odd)):
        if not trace.converged:
            raise ConvergenceError(f"The {name} trace is not converged; raise the order or --digits.")
    resolved = min(trace_even.stabilized_digits, trace_odd.stabilized_digits)
    split = agreement_digits(trace_even.energy, trace_odd.energy, ctx.digits)
    if split >= resolved:
        raise ConvergenceError(
            f"Levels agree on all {resolved} stabilized digits; raise the order or --digits to resolve the split."
        )
    return split


def potential_floor(potential: PotentialSpec, ctx: PrecisionContext, x_max: int = 10, samples: int = 1000) -> mpmath.mpf:
    """Minimum of V sampled on (0, x_max]."""
    with mpmath.workdps(30):
        series = [(power, to_mpf(coeff)) for power, coeff in potential.even_series.items()]
        singular = to_mpf(potential.singular_coeff)
        rational = potential.rational
        floor = None
        for k in range(1, samples + 1):
            x = mpmath.mpf(x_max) * k / samples
            value = mpmath.fsum(coeff * x**power for power, coeff in series)
            if singular:
                value += singular / (x * x)
            if rational is not None:
                value += to_mpf(rational.g) * x * x / (1 + to_mpf(rational.lam) * x * x)
            floor = value if floor is None else min(floor, value)
    with ctx.activate():
        return +floor


def default_window(
    potential: PotentialSpec,
    ctx: PrecisionContext,
    levels: int = 2,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> ScanWindow:
    """Harmonic-estimate window floor(V) .. floor(V) + 4 (2 levels + 1) sqrt(max(|v2|, 1))."""
    floor = potential_floor(potential, ctx)
    with ctx.activate():
        v2 = abs(to_mpf(potential.even_series.get(2, 0)))
        span = 4 * (2 * levels + 1) * mpmath.sqrt(max(v2, mpmath.mpf(1)))
        e_min = mpmath.floor(floor)
        e_max = mpmath.ceil(floor + span)
    return ScanWindow(e_min=int(e_min), e_max=int(e_max), grid_points=grid_points)
