"""CSV data behind the energy-vs-coupling curve and the quartic wavefunction plot."""

import csv
import io
import logging
from fractions import Fraction

import mpmath

from ..models.potential import Parity, ReferenceFunction, quartic
from ..schemas.solver import RunConfig
from .errors import InputError, OutOfScopeError
from .number_parser import parse_exact
from .precision import format_real, with_digits
from .recurrence import derive, eval_coefficients, wavefunction
from .rootfinder import ScanWindow, default_window, roots_at_order
from .solver_service import wavefunction_grid
from .tables import run_levels

logger = logging.getLogger(__name__)

COUPLING_DECADES = (-2, 2)
COUPLING_POINTS = 17
FIGURE_ONE_ORDERS = (40, 80)


def coupling_grid(points: int = COUPLING_POINTS) -> list[Fraction]:
    """g = 0 followed by log-spaced couplings over COUPLING_DECADES."""
    low, high = COUPLING_DECADES
    grid = [Fraction(0)]
    with mpmath.workdps(30):
        for k in range(points):
            exponent = mpmath.mpf(low) + mpmath.mpf(high - low) * k / (points - 1)
            grid.append(parse_exact(mpmath.nstr(mpmath.power(10, exponent), 12, min_fixed=-20, max_fixed=20)))
    return grid


def coupling_beta(g: Fraction) -> mpmath.mpf:
    """beta(g) = 1/2 + g^(1/3) / 2 follows the width of the quartic ground state."""
    return mpmath.mpf(1) / 2 + mpmath.cbrt(mpmath.mpf(g.numerator) / g.denominator) / 2


def _write(header: list[str], rows: list[list[str]]) -> str:
    buffer = io.StringIO()
    buffer.write("# columns: " + ",".join(header) + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _figure_one(config: RunConfig) -> str:
    ctx = with_digits(config.digits)
    orders = tuple(config.orders) if len(config.orders) > 1 else FIGURE_ONE_ORDERS
    rows = []
    for g in coupling_grid():
        potential = quartic(g)
        with ctx.activate():
            beta = coupling_beta(g)
        window = default_window(potential, ctx, levels=1, grid_points=config.grid)
        (run,) = run_levels(potential, ReferenceFunction(beta=beta), Parity.EVEN, orders, window, ctx, jobs=config.jobs)
        energy = "" if run.energy is None else format_real(run.energy, ctx.digits - 8)
        rows.append([format_real(ctx.real(g), 12), energy, "true" if run.converged else "false"])
        logger.debug("Figure 1 g=%s E0=%s", g, energy[:16])
    return _write(["g", "E0", "converged"], rows)


def _figure_two(config: RunConfig) -> str:
    ctx = with_digits(config.digits)
    ref = ReferenceFunction(beta=1)
    order = config.orders[-1]
    xs = wavefunction_grid(parse_exact(config.x_max), config.points)
    potential = quartic(1)
    columns = []
    for parity, window in ((Parity.EVEN, ScanWindow(1, 2)), (Parity.ODD, ScanWindow(4, 5))):
        rec = derive(potential, ref, parity, ctx)
        roots = roots_at_order(rec, order, window, ctx, config.jobs)
        if not roots:
            raise InputError(f"No {parity.value} level found at order {order}; raise the order.")
        seq = eval_coefficients(rec, roots[0], rec.quantization_index(order), ctx)
        columns.append(wavefunction(seq, ref, xs, ctx))
    rows = [
        [format_real(ctx.real(x), 12), mpmath.nstr(psi0, 20), mpmath.nstr(psi1, 20)]
        for x, psi0, psi1 in zip(xs, *columns)
    ]
    return _write(["x", "psi0", "psi1"], rows)


def export_figure_data(figure: int, config: RunConfig) -> str:
    if figure == 3:
        raise OutOfScopeError(
            "Figure 3 needs the V0 (x0 + x)^a family and its logarithmic change of variable, which this tool does not implement."
        )
    if figure == 1:
        return _figure_one(config)
    if figure == 2:
        return _figure_two(config)
    raise InputError(f"Unknown figure {figure}; choose 1 or 2.")
