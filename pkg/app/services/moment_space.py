"""Momentum-space quantization through Hamburger moments.

Multiplying the ODE by x^p and integrating by parts turns every term
c x^j Psi^(d) into c (-1)^d ff(p+j, d) mu(p+j-d). For symmetric states the
even moments u(rho) = mu(2 rho) then obey a linear recursion in which the
first ms+1 values are free (the missing moments).
"""

import logging
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from ..models.potential import (
    PolynomialODE,
    PotentialSpec,
    rational_modified_ode,
    schrodinger_ode,
    sextic_modified_ode,
)
from .errors import DerivationError, EvaluationError, InputError, UnsupportedError
from .precision import PrecisionContext, Real, to_mpf
from .rootfinder import ScanWindow, find_roots

logger = logging.getLogger(__name__)

DEFAULT_MOMENTUM_BETA = Fraction(1, 2)


@dataclass(frozen=True)
class MomentTerm:
    shift: int
    power: int
    derivative: int
    constant: mpmath.mpf
    energy: mpmath.mpf

    def coefficient(self, p: int, energy: mpmath.mpf) -> mpmath.mpf:
        factor = 1
        for i in range(self.derivative):
            factor *= p + self.power - i
        if self.derivative % 2:
            factor = -factor
        return (self.constant + self.energy * energy) * factor


@dataclass(frozen=True)
class MomentSystem:
    ms: int
    terms: tuple[MomentTerm, ...]
    beta: Real = DEFAULT_MOMENTUM_BETA
    label: str = ""

    @property
    def top_shift(self) -> int:
        return max(term.shift for term in self.terms)

    @property
    def energy_in_lead(self) -> bool:
        return any(term.energy for term in self.terms if term.shift == self.top_shift)


def derive_moment_recursion(
    problem: PotentialSpec | PolynomialODE,
    ctx: PrecisionContext,
    beta: Real = DEFAULT_MOMENTUM_BETA,
) -> MomentSystem:
    if isinstance(problem, PotentialSpec):
        if problem.rational is not None:
            ode = rational_modified_ode(problem, ctx)
        elif not problem.is_polynomial:
            raise UnsupportedError("Moment recursions need a polynomial or rational potential.")
        else:
            ode = schrodinger_ode(problem, ctx)
    else:
        ode = problem
    if any(term.power < 0 for term in ode.terms):
        raise UnsupportedError("Moment recursions need polynomial ODE coefficients.")
    terms = tuple(
        MomentTerm(
            shift=term.power - term.derivative,
            power=term.power,
            derivative=term.derivative,
            constant=term.constant,
            energy=term.energy,
        )
        for term in ode.terms
    )
    if any(term.shift % 2 for term in terms):
        raise UnsupportedError("Odd moment shifts couple parities; only symmetric problems are supported.")
    top = max(term.shift for term in terms)
    if top < 2:
        raise DerivationError("The moment recursion does not close upward.")
    msys = MomentSystem(ms=top // 2 - 1, terms=terms, beta=beta, label=ode.label)
    if msys.energy_in_lead:
        if msys.ms:
            raise UnsupportedError(
                "An energy-dependent leading moment coefficient is handled only without missing moments."
            )
        logger.debug("Leading moment coefficient of %s depends on E; clearing its poles", msys.label)
    logger.debug("Moment recursion for %s: ms=%d", msys.label, msys.ms)
    return msys


def transfer_matrix(msys: MomentSystem, E: Real, rho_max: int, ctx: PrecisionContext) -> list[list[mpmath.mpf]]:
    """Rows M_E(rho, .) for rho <= rho_max; unit rows seed the missing moments."""
    rows, _ = _transfer(msys, E, rho_max, ctx)
    return rows


def _transfer(msys: MomentSystem, E: Real, rho_max: int, ctx: PrecisionContext) -> tuple[list, list]:
    """Transfer rows plus the leading coefficient each recursed row was divided by."""
    ms = msys.ms
    top = msys.top_shift // 2
    with ctx.activate():
        energy = to_mpf(E)
        rows = []
        leads = []
        for rho in range(min(rho_max, ms) + 1):
            row = [mpmath.mpf(0)] * (ms + 1)
            row[rho] = mpmath.mpf(1)
            rows.append(row)
        t = 0
        while len(rows) <= rho_max:
            p = 2 * t
            lead = mpmath.fsum(term.coefficient(p, energy) for term in msys.terms if term.shift // 2 == top)
            if not lead:
                raise EvaluationError(f"Leading moment coefficient vanishes at p={p}.")
            row = [mpmath.mpf(0)] * (ms + 1)
            for term in msys.terms:
                half = term.shift // 2
                if half == top:
                    continue
                index = t + half
                weight = term.coefficient(p, energy)
                if index < 0 or not weight:
                    continue
                for ell in range(ms + 1):
                    row[ell] -= weight * rows[index][ell]
            rows.append([value / lead for value in row])
            leads.append(lead)
            t += 1
    return rows, leads


def _momentum_entries(rows: list[list[mpmath.mpf]], n: int, beta: mpmath.mpf, ell: int) -> mpmath.mpf:
    return mpmath.fsum(
        (-1) ** rho1 * rows[rho1][ell] * beta ** (n - rho1) / (mpmath.factorial(2 * rho1) * mpmath.factorial(n - rho1))
        for rho1 in range(n + 1)
    )


def missing_moment_matrix(msys: MomentSystem, n: int, E: Real, ctx: PrecisionContext) -> list[list[mpmath.mpf]]:
    """Square block D_{n+l1, l2}[E], 0 <= l1, l2 <= ms."""
    if n < 1:
        raise InputError("Momentum order n must be >= 1.")
    matrix, _ = _missing_block(msys, n, E, ctx)
    return matrix


def _missing_block(msys: MomentSystem, n: int, E: Real, ctx: PrecisionContext) -> tuple[list, list]:
    size = msys.ms + 1
    rows, leads = _transfer(msys, E, n + msys.ms, ctx)
    with ctx.activate():
        beta = to_mpf(msys.beta)
        matrix = [[_momentum_entries(rows, n + l1, beta, l2) for l2 in range(size)] for l1 in range(size)]
    return matrix, leads


@dataclass(frozen=True)
class MomentDeterminant:
    """E -> det D^(n)[E]; multiplied by the product of leading coefficients when those depend on E."""

    msys: MomentSystem
    n: int
    ctx: PrecisionContext

    def __call__(self, energy: mpmath.mpf) -> mpmath.mpf:
        if self.n < 1:
            raise InputError("Momentum order n must be >= 1.")
        matrix, leads = _missing_block(self.msys, self.n, energy, self.ctx)
        with self.ctx.activate():
            value = matrix[0][0] if len(matrix) == 1 else mpmath.det(mpmath.matrix(matrix))
            if self.msys.energy_in_lead:
                # each recursed moment divides by one more lead, so their product clears every pole
                value *= mpmath.fprod(leads)
            return value


def missing_moment_roots(
    msys: MomentSystem,
    n: int,
    window: ScanWindow,
    ctx: PrecisionContext,
    jobs: int = 1,
) -> list[mpmath.mpf]:
    if n < 1:
        raise InputError("Momentum order n must be >= 1.")
    roots = find_roots(MomentDeterminant(msys=msys, n=n, ctx=ctx), window, ctx, jobs)
    logger.info("Moment order %d (%s, ms=%d): %d roots in window", n, msys.label, msys.ms, len(roots))
    return roots


def _null_vector(matrix: list[list[mpmath.mpf]]) -> list[mpmath.mpf]:
    """Largest column of the adjugate."""
    size = len(matrix)
    if size == 1:
        return [mpmath.mpf(1)]
    best = None
    for j in range(size):
        column = []
        for i in range(size):
            minor = [[matrix[r][c] for c in range(size) if c != i] for r in range(size) if r != j]
            column.append((-1) ** (i + j) * mpmath.det(mpmath.matrix(minor)))
        if best is None or mpmath.norm(column) > mpmath.norm(best):
            best = column
    return best


def reconstruct_moments(
    msys: MomentSystem,
    E: Real,
    n: int,
    ctx: PrecisionContext,
    rho_max: int = 20,
) -> list[mpmath.mpf]:
    """Even moments u(0..rho_max) from the null vector of D^(n)[E], scaled to u(0) = 1."""
    matrix = missing_moment_matrix(msys, n, E, ctx)
    rows = transfer_matrix(msys, E, max(rho_max, msys.ms), ctx)
    with ctx.activate():
        missing = _null_vector(matrix)
        moments = [mpmath.fsum(row[ell] * missing[ell] for ell in range(msys.ms + 1)) for row in rows[: rho_max + 1]]
        if not moments[0]:
            raise EvaluationError("Reconstructed zeroth moment vanishes.")
        return [value / moments[0] for value in moments]


def sextic_ms0_roots(
    g: Real,
    n: int,
    window: ScanWindow,
    ctx: PrecisionContext,
    beta: Real = DEFAULT_MOMENTUM_BETA,
    jobs: int = 1,
) -> list[mpmath.mpf]:
    """Sextic levels from the quartic-gauge ODE, whose moment recursion has no missing moments."""
    msys = derive_moment_recursion(sextic_modified_ode(g, ctx), ctx, beta)
    if msys.ms != 0:
        raise DerivationError(f"Quartic-gauge sextic should have ms=0, got {msys.ms}.")
    return missing_moment_roots(msys, n, window, ctx, jobs)


def rational_ms0_roots(
    potential: PotentialSpec,
    n: int,
    window: ScanWindow,
    ctx: PrecisionContext,
    beta: Real = DEFAULT_MOMENTUM_BETA,
    jobs: int = 1,
) -> list[mpmath.mpf]:
    """Symmetric levels of x^2 + g x^2/(1 + g x^2) from the Gaussian-gauge moments of Psi / (1 + g x^2)."""
    rational = potential.rational
    if rational is None or rational.g != rational.lam:
        raise UnsupportedError("The Gaussian-gauge moment route needs a rational term with lam == g.")
    msys = derive_moment_recursion(potential, ctx, beta)
    if msys.ms != 0:
        raise DerivationError(f"Gaussian-gauge rational form should have ms=0, got {msys.ms}.")
    return missing_moment_roots(msys, n, window, ctx, jobs)
