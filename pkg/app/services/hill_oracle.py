"""Hill-determinant oracle over the basis x^i exp(-beta x^2).

Matrix elements are exact Gaussian moments. Pivots come from Doolittle
elimination without row exchanges, so the k-th pivot belongs to the k-th
leading minor and the pivot product is the Hill determinant.
"""

import logging
from dataclasses import dataclass

import mpmath

from ..models.potential import Parity, PotentialSpec, ReferenceFunction
from .errors import InputError, SingularMinorError, UnsupportedError
from .precision import PrecisionContext, Real, to_mpf
from .recurrence import Recurrence, evaluate
from .rootfinder import ScanWindow, find_roots

logger = logging.getLogger(__name__)

DIRECT_DETERMINANT_MAX_ORDER = 12


@dataclass(frozen=True)
class HillSystem:
    potential: PotentialSpec
    ref: ReferenceFunction
    order: int
    parity: Parity

    def __post_init__(self) -> None:
        if not self.potential.is_polynomial or self.potential.series_truncation is not None:
            raise UnsupportedError("The Hill oracle handles polynomial potentials only.")
        if self.ref.sigma != 2 or self.ref.alpha:
            raise UnsupportedError("The Hill oracle needs R = exp(-beta x^2).")
        if self.order < 0:
            raise InputError(f"Hill order must be non-negative, got {self.order}.")

    @property
    def powers(self) -> tuple[int, ...]:
        """Order I keeps I + 1 functions of its parity, up to x^(2I) or x^(2I + 1)."""
        return tuple(self.parity.offset + 2 * k for k in range(self.order + 1))

    def extended(self) -> "HillSystem":
        """Same system with one more basis function of the same parity."""
        return HillSystem(potential=self.potential, ref=self.ref, order=self.order + 1, parity=self.parity)


@dataclass(frozen=True)
class LUSequence:
    energy: mpmath.mpf
    powers: tuple[int, ...]
    vectors: tuple[tuple[mpmath.mpf, ...], ...]
    pivots: tuple[mpmath.mpf, ...]
    digits: int
    divergence: mpmath.mpf | None = None

    @property
    def determinant(self) -> mpmath.mpf:
        with mpmath.workdps(self.digits):
            return mpmath.fprod(self.pivots)


def gaussian_overlap(i: int, j: int, beta: Real) -> mpmath.mpf:
    """Integral of x^(i+j) exp(-2 beta x^2) over the real line."""
    if i < 0 or j < 0:
        raise InputError("Overlap powers must be non-negative.")
    m = i + j
    if m % 2:
        return mpmath.mpf(0)
    half = mpmath.mpf(m + 1) / 2
    return mpmath.gamma(half) / (2 * to_mpf(beta)) ** half


@dataclass(frozen=True)
class HillMatrices:
    """M[E] = hamiltonian - E overlap on the system's basis."""

    powers: tuple[int, ...]
    hamiltonian: tuple[tuple[mpmath.mpf, ...], ...]
    overlap: tuple[tuple[mpmath.mpf, ...], ...]

    def at(self, energy: mpmath.mpf) -> list[list[mpmath.mpf]]:
        return [
            [h - energy * s for h, s in zip(h_row, s_row)]
            for h_row, s_row in zip(self.hamiltonian, self.overlap)
        ]


def _hamiltonian_element(i: int, j: int, beta: mpmath.mpf, potential: list, moments: dict) -> mpmath.mpf:
    kinetic = 2 * beta * (2 * j + 1) * moments[i + j] - 4 * beta**2 * moments[i + j + 2]
    if j > 1:
        kinetic -= j * (j - 1) * moments[i + j - 2]
    return kinetic + mpmath.fsum(coeff * moments[i + j + power] for power, coeff in potential)


def assemble(sys: HillSystem, ctx: PrecisionContext) -> HillMatrices:
    """Build both matrices from a moment table computed up front."""
    with ctx.activate():
        beta = to_mpf(sys.ref.beta)
        potential = [(power, to_mpf(coeff)) for power, coeff in sorted(sys.potential.even_series.items())]
        top = 2 * max(sys.powers) + max(sys.potential.top_power, 2)
        moments = {m: gaussian_overlap(m, 0, beta) for m in range(top + 1)}
        powers = sys.powers
        hamiltonian = tuple(
            tuple(_hamiltonian_element(i, j, beta, potential, moments) for j in powers) for i in powers
        )
        overlap = tuple(tuple(moments[i + j] for j in powers) for i in powers)
    return HillMatrices(powers=powers, hamiltonian=hamiltonian, overlap=overlap)


def matrix_element(sys: HillSystem, i: int, j: int, E: Real, ctx: PrecisionContext) -> mpmath.mpf:
    """<x^i R| -d^2/dx^2 + V |x^j R> - E <x^i R|x^j R> for raw powers i, j."""
    if i < 0 or j < 0:
        raise InputError("Matrix element powers must be non-negative.")
    with ctx.activate():
        beta = to_mpf(sys.ref.beta)
        potential = [(power, to_mpf(coeff)) for power, coeff in sys.potential.even_series.items()]
        top = i + j + max(sys.potential.top_power, 2)
        moments = {m: gaussian_overlap(m, 0, beta) for m in range(top + 1)}
        return _hamiltonian_element(i, j, beta, potential, moments) - to_mpf(E) * moments[i + j]


def factorize(matrix: list[list[mpmath.mpf]], ctx: PrecisionContext) -> list[list[mpmath.mpf]]:
    """Doolittle U factor without row exchanges.

    A pivot below zero_tol (relative to its row) at any stage but the last
    means a singular leading minor.
    """
    size = len(matrix)
    upper = [list(row) for row in matrix]
    with ctx.activate():
        for k in range(size):
            pivot = upper[k][k]
            if k < size - 1:
                scale = max(abs(value) for value in matrix[k]) or mpmath.mpf(1)
                if abs(pivot) <= ctx.zero_tol * scale:
                    raise SingularMinorError(f"Leading minor {k} is singular.", stage=k)
            elif not pivot:
                break
            for r in range(k + 1, size):
                factor = upper[r][k] / pivot
                if not factor:
                    continue
                for c in range(k, size):
                    upper[r][c] -= factor * upper[k][c]
    return upper


def _stage_vector(upper: list[list[mpmath.mpf]], k: int) -> tuple[mpmath.mpf, ...]:
    """V^(k) with V_k = 1 solving the first k rows of the k-th leading minor."""
    vector = [mpmath.mpf(0)] * (k + 1)
    vector[k] = mpmath.mpf(1)
    for r in range(k - 1, -1, -1):
        total = mpmath.fsum(upper[r][c] * vector[c] for c in range(r + 1, k + 1))
        vector[r] = -total / upper[r][r]
    return tuple(vector)


def _factorize_with_retry(matrices: HillMatrices, energy: mpmath.mpf, ctx: PrecisionContext):
    try:
        return energy, factorize(matrices.at(energy), ctx)
    except SingularMinorError as exc:
        shifted = energy + ctx.perturbation
        logger.warning("Singular minor at stage %d; retrying at E + %s", exc.stage, mpmath.nstr(ctx.perturbation, 3))
        return shifted, factorize(matrices.at(shifted), ctx)


def ratio_formula(sequence_vector: tuple, column: list[mpmath.mpf], pivot: mpmath.mpf) -> mpmath.mpf:
    """V^(I+1)_I = -(sum_i V^(I)_i M_{i,I+1}) / D_I."""
    return -mpmath.fsum(v * m for v, m in zip(sequence_vector, column)) / pivot


def lu_pivots(sys: HillSystem, E: Real, ctx: PrecisionContext) -> LUSequence:
    matrices = assemble(sys.extended(), ctx)
    size = len(sys.powers)
    with ctx.activate():
        energy = to_mpf(E)
        truncated = HillMatrices(
            powers=matrices.powers[:size],
            hamiltonian=tuple(row[:size] for row in matrices.hamiltonian[:size]),
            overlap=tuple(row[:size] for row in matrices.overlap[:size]),
        )
        energy, upper = _factorize_with_retry(truncated, energy, ctx)
        vectors = tuple(_stage_vector(upper, k) for k in range(size))
        pivots = tuple(upper[k][k] for k in range(size))
        divergence = None
        if pivots[-1]:
            full = matrices.at(energy)
            column = [full[i][size] for i in range(size)]
            divergence = ratio_formula(vectors[-1], column, pivots[-1])
    return LUSequence(
        energy=energy, powers=sys.powers, vectors=vectors, pivots=pivots, digits=ctx.digits, divergence=divergence
    )


def divergence_component(sys: HillSystem, E: Real, ctx: PrecisionContext) -> mpmath.mpf:
    """V^(I+1)_I from back-substitution on the extended system."""
    matrices = assemble(sys.extended(), ctx)
    with ctx.activate():
        upper = factorize(matrices.at(to_mpf(E)), ctx)
        return _stage_vector(upper, len(sys.powers))[-2]


def stage_residuals(sys: HillSystem, sequence: LUSequence, ctx: PrecisionContext) -> list[mpmath.mpf]:
    """max_i<k |sum_j M_ij V^(k)_j| per stage, relative to the row scale."""
    matrices = assemble(sys, ctx)
    out = []
    with ctx.activate():
        full = matrices.at(sequence.energy)
        for k, vector in enumerate(sequence.vectors):
            worst = mpmath.mpf(0)
            for i in range(k):
                parts = [full[i][j] * vector[j] for j in range(k + 1)]
                scale = mpmath.fsum(abs(part) for part in parts) or mpmath.mpf(1)
                worst = max(worst, abs(mpmath.fsum(parts)) / scale)
            out.append(worst)
    return out


def direct_determinant(sys: HillSystem, E: Real, ctx: PrecisionContext) -> mpmath.mpf:
    if sys.order > DIRECT_DETERMINANT_MAX_ORDER:
        raise UnsupportedError(f"Direct determinants are limited to order {DIRECT_DETERMINANT_MAX_ORDER}.")
    matrices = assemble(sys, ctx)
    with ctx.activate():
        return mpmath.det(mpmath.matrix(matrices.at(to_mpf(E))))


@dataclass(frozen=True)
class HillDeterminant:
    """E -> product of pivots; falls back to a pivoted determinant on an exact zero pivot."""

    matrices: HillMatrices
    ctx: PrecisionContext

    def __call__(self, energy: mpmath.mpf) -> mpmath.mpf:
        matrix = self.matrices.at(energy)
        size = len(matrix)
        upper = [list(row) for row in matrix]
        for k in range(size):
            pivot = upper[k][k]
            if not pivot:
                return mpmath.det(mpmath.matrix(matrix))
            for r in range(k + 1, size):
                factor = upper[r][k] / pivot
                for c in range(k, size):
                    upper[r][c] -= factor * upper[k][c]
        return mpmath.fprod(upper[k][k] for k in range(size))


def hill_roots(sys: HillSystem, window: ScanWindow, ctx: PrecisionContext, jobs: int = 1) -> list[mpmath.mpf]:
    roots = find_roots(HillDeterminant(matrices=assemble(sys, ctx), ctx=ctx), window, ctx, jobs)
    logger.info("Hill order %d (%s): %d roots in window", sys.order, sys.parity.value, len(roots))
    return roots


def coefficient_ratio(rec: Recurrence, E: Real, order: int, ctx: PrecisionContext) -> mpmath.mpf:
    """a_q(I)[E] / a_q(I+1)[E], the series counterpart of V^(I+1)_I.

    Only the poles line up: this ratio blows up at the coefficient zeros of
    order I + 1 while V^(I+1)_I blows up at the Hill roots of order I. Away
    from a root the two differ in sign and size.
    """
    index = rec.quantization_index(order)
    following = rec.quantization_index(order + 1)
    with ctx.activate():
        values = evaluate(rec, to_mpf(E), following)
        return values[index] / values[following]
