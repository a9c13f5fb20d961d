"""Turns a RunConfig into problems, runs the requested method and builds reports."""

import logging
from fractions import Fraction
from pathlib import Path

import mpmath

from ..models.potential import (
    Parity,
    PotentialSpec,
    ReferenceFunction,
    anharmonic,
    describe_potential,
    double_well,
    harmonic,
    modified_rational,
    potential_from_text,
    quartic,
    singular,
    singular_alpha,
    transcendental_exp,
)
from ..schemas.solver import (
    DroppedRoot,
    HillReport,
    OrderEnergy,
    OrderRoots,
    RunConfig,
    ScanBracket,
    ScanReport,
    SolveReport,
    TraceReport,
    TrackReport,
)
from .errors import InputError
from .hill_oracle import HillSystem, hill_roots
from .moment_space import derive_moment_recursion, missing_moment_roots, rational_ms0_roots, sextic_ms0_roots
from .number_parser import parse_exact
from .precision import PrecisionContext, agreement_digits, format_real, with_digits
from .recurrence import derive, eval_coefficients, wavefunction
from .rootfinder import (
    RootTrace,
    ScanWindow,
    brackets_at_order,
    default_window,
    link_traces,
    roots_at_order,
    track_report,
)

logger = logging.getLogger(__name__)

ANHARMONIC_POWERS = {"sextic": 6, "octic": 8, "dectic": 10}
DEFAULT_TRUNCATION = 80


def exp_truncation(orders: list[int]) -> int:
    """Series length that covers the odd quantization index of the highest order."""
    return max(DEFAULT_TRUNCATION, 2 * max(orders, default=0) + 2)


def _exact(raw: str | None, default: str) -> Fraction:
    return parse_exact(raw if raw is not None else default)


def build_potential(config: RunConfig) -> tuple[PotentialSpec, dict]:
    """Potential plus any reference overrides carried by a potential file."""
    if config.potential_file:
        path = Path(config.potential_file)
        if not path.is_file():
            raise InputError(f"Potential file not found: {path}")
        return potential_from_text(path.read_text(encoding="utf-8"))
    name = config.potential
    if name == "harmonic":
        return harmonic(), {}
    if name == "quartic":
        return quartic(_exact(config.g, "1")), {}
    if name == "doublewell":
        return double_well(_exact(config.z2, "1")), {}
    if name in ANHARMONIC_POWERS:
        return anharmonic(ANHARMONIC_POWERS[name], _exact(config.g, "1")), {}
    if name == "exp":
        return transcendental_exp(config.truncation or exp_truncation(config.orders)), {}
    if name == "rational":
        return modified_rational(_exact(config.g, "1/10"), _exact(config.lam, "1/10")), {}
    return singular(_exact(config.g, "2")), {}


def default_beta(potential: PotentialSpec) -> Fraction:
    if potential.top_power <= 2:
        return Fraction(1, 2)
    return Fraction(1)


def build_reference(config: RunConfig, potential: PotentialSpec, overrides: dict, ctx: PrecisionContext) -> ReferenceFunction:
    sigma = config.sigma or overrides.get("sigma", 2)
    if config.beta is not None:
        beta = parse_exact(config.beta)
    else:
        beta = overrides.get("beta", default_beta(potential))
    if config.alpha is not None:
        alpha = parse_exact(config.alpha)
    elif "alpha" in overrides:
        alpha = overrides["alpha"]
    elif potential.singular_coeff:
        alpha = singular_alpha(potential.singular_coeff, ctx)
    else:
        alpha = Fraction(0)
    return ReferenceFunction(beta=beta, sigma=sigma, alpha=alpha)


def build_window(config: RunConfig, potential: PotentialSpec, ctx: PrecisionContext) -> ScanWindow:
    if (config.emin is None) != (config.emax is None):
        raise InputError("--emin and --emax must be given together.")
    if config.emin is not None:
        return ScanWindow(e_min=parse_exact(config.emin), e_max=parse_exact(config.emax), grid_points=config.grid)
    return default_window(potential, ctx, levels=config.levels, grid_points=config.grid)


def _problem(config: RunConfig):
    ctx = with_digits(config.digits)
    potential, overrides = build_potential(config)
    ref = build_reference(config, potential, overrides, ctx)
    return ctx, potential, ref


def _rational_roots_by_order(
    config: RunConfig, potential: PotentialSpec, window: ScanWindow, ctx: PrecisionContext
) -> list[tuple[int, list[mpmath.mpf]]]:
    """Rational levels come from momentum determinants; each requested order is used as n."""
    if config.parity != "even":
        raise InputError("The rational potential is solved in moment space, which covers symmetric states only.")
    beta = parse_exact(config.momentum_beta)
    return [(n, rational_ms0_roots(potential, n, window, ctx, beta, config.jobs)) for n in config.orders]


def trace_report(trace: RootTrace, digits: int) -> TraceReport:
    return TraceReport(
        level=trace.level_index,
        energy=format_real(trace.energy, digits),
        stabilized_digits=trace.stabilized_digits,
        converged=trace.converged,
        spurious=trace.spurious,
        per_order=[OrderEnergy(order=order, energy=format_real(energy, digits)) for order, energy in trace.per_order],
    )


def run_solve(config: RunConfig) -> SolveReport:
    ctx, potential, ref = _problem(config)
    parity = Parity(config.parity)
    window = build_window(config, potential, ctx)
    printed = ctx.digits - 8
    if config.ms0:
        if config.potential != "sextic" or config.potential_file:
            raise InputError("The ms=0 moment formulation exists for the sextic potential only.")
        results = [
            OrderRoots(
                order=config.momentum_n,
                roots=[
                    format_real(root, printed)
                    for root in sextic_ms0_roots(
                        _exact(config.g, "1"), config.momentum_n, window, ctx, parse_exact(config.momentum_beta), config.jobs
                    )
                ],
            )
        ]
        return SolveReport(
            potential=f"{describe_potential(potential)} [quartic gauge]",
            parity=parity.value,
            digits=ctx.digits,
            method="moments-ms0",
            results=results,
        )
    if potential.rational is not None:
        results = [
            OrderRoots(order=n, roots=[format_real(root, printed) for root in roots])
            for n, roots in _rational_roots_by_order(config, potential, window, ctx)
        ]
        return SolveReport(
            potential=describe_potential(potential),
            parity=parity.value,
            digits=ctx.digits,
            method="moments-ms0",
            results=results,
        )
    rec = derive(potential, ref, parity, ctx)
    results = [
        OrderRoots(order=order, roots=[format_real(root, printed) for root in roots_at_order(rec, order, window, ctx, config.jobs)])
        for order in config.orders
    ]
    return SolveReport(potential=describe_potential(potential), parity=parity.value, digits=ctx.digits, results=results)


def run_scan(config: RunConfig) -> ScanReport:
    """Sign-change brackets of the quantization function on the window grid, one list per order."""
    ctx, potential, ref = _problem(config)
    parity = Parity(config.parity)
    rec = derive(potential, ref, parity, ctx)
    window = build_window(config, potential, ctx)
    printed = ctx.digits - 8
    brackets = [
        ScanBracket(order=order, low=format_real(low, printed), high=format_real(high, printed))
        for order in config.orders
        for low, high in brackets_at_order(rec, order, window, ctx, config.jobs)
    ]
    return ScanReport(
        potential=describe_potential(potential),
        parity=parity.value,
        digits=ctx.digits,
        grid_points=window.grid_points,
        brackets=brackets,
    )


def run_track(config: RunConfig) -> TrackReport:
    ctx, potential, ref = _problem(config)
    parity = Parity(config.parity)
    window = build_window(config, potential, ctx)
    if potential.rational is not None:
        roots_by_order = _rational_roots_by_order(config, potential, window, ctx)
        traces, dropped = link_traces(roots_by_order, window, ctx, config.target_digits)
    else:
        rec = derive(potential, ref, parity, ctx)
        traces, dropped = track_report(rec, config.orders, window, ctx, config.target_digits, config.jobs)
    printed = ctx.digits - 8
    return TrackReport(
        potential=describe_potential(potential),
        parity=parity.value,
        digits=ctx.digits,
        target_digits=config.target_digits,
        traces=[trace_report(trace, printed) for trace in traces],
        dropped=[DroppedRoot(order=order, energy=format_real(root, printed)) for order, root in dropped],
    )


def run_hill(config: RunConfig) -> HillReport:
    """Hill roots at the last requested order beside the coefficient zeros at the same order."""
    ctx, potential, ref = _problem(config)
    parity = Parity(config.parity)
    order = config.orders[-1]
    window = build_window(config, potential, ctx)
    hill = hill_roots(HillSystem(potential=potential, ref=ref, order=order, parity=parity), window, ctx, config.jobs)
    rec = derive(potential, ref, parity, ctx)
    coefficient = roots_at_order(rec, order, window, ctx, config.jobs)
    agreement = []
    for root in hill:
        nearest = min(coefficient, key=lambda other: abs(other - root), default=None)
        agreement.append(0 if nearest is None else agreement_digits(root, nearest, ctx.digits - 8))
    printed = ctx.digits - 8
    return HillReport(
        potential=describe_potential(potential),
        parity=parity.value,
        order=order,
        digits=ctx.digits,
        roots=[format_real(root, printed) for root in hill],
        coefficient_roots=[format_real(root, printed) for root in coefficient],
        agreement_digits=agreement,
    )


def run_moments(config: RunConfig) -> SolveReport:
    ctx, potential, _ = _problem(config)
    if config.parity != "even":
        raise InputError("Moment quantization covers symmetric states only.")
    if config.ms0:
        return run_solve(config)
    window = build_window(config, potential, ctx)
    msys = derive_moment_recursion(potential, ctx, parse_exact(config.momentum_beta))
    roots = missing_moment_roots(msys, config.momentum_n, window, ctx, config.jobs)
    printed = ctx.digits - 8
    return SolveReport(
        potential=describe_potential(potential),
        parity="even",
        digits=ctx.digits,
        method=f"moments-ms{msys.ms}",
        results=[OrderRoots(order=config.momentum_n, roots=[format_real(root, printed) for root in roots])],
    )


def wavefunction_grid(x_max: Fraction, points: int) -> list[Fraction]:
    if x_max <= 0:
        raise InputError("x_max must be positive.")
    step = 2 * x_max / (points - 1)
    return [-x_max + step * k for k in range(points)]


def run_wavefunction(config: RunConfig) -> list[dict[str, str]]:
    """Rows x, psi for the lowest converged level at the last order."""
    ctx, potential, ref = _problem(config)
    parity = Parity(config.parity)
    rec = derive(potential, ref, parity, ctx)
    window = build_window(config, potential, ctx)
    order = config.orders[-1]
    roots = roots_at_order(rec, order, window, ctx, config.jobs)
    if not roots:
        raise InputError("No root in the scan window; widen --emin/--emax.")
    seq = eval_coefficients(rec, roots[0], rec.quantization_index(order), ctx)
    xs = wavefunction_grid(parse_exact(config.x_max), config.points)
    values = wavefunction(seq, ref, xs, ctx)
    with ctx.activate():
        return [
            {"x": format_real(ctx.real(x), 12), "psi": mpmath.nstr(value, 20), "energy": format_real(roots[0], 20)}
            for x, value in zip(xs, values)
        ]
