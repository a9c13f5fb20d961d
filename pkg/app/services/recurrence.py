"""Power-series recurrences for Psi = P(x) R(x) and truncated wavefunctions.

Substituting P = sum a_n x^n into the gauge-transformed ODE and matching
powers gives

    divisor(n) a_n = sum_lag weight_lag(n, E) a_{n-lag},

where every weight is affine in E. Indices whose divisor vanishes are the
free (initial) coefficients fixed by parity.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache

import mpmath

from ..models.potential import (
    Parity,
    PolynomialODE,
    PotentialSpec,
    ReferenceFunction,
    gauge_transform,
    schrodinger_ode,
)
from .errors import ConfigurationError, DerivationError, EvaluationError, InputError, UnsupportedError
from .precision import PrecisionContext, Real, to_mpf

logger = logging.getLogger(__name__)

FREE_INDEX_SEARCH = 8


@dataclass(frozen=True)
class RecurrenceTerm:
    lag: int
    derivative: int
    constant: mpmath.mpf
    energy: mpmath.mpf


@dataclass(frozen=True)
class Recurrence:
    terms: tuple[RecurrenceTerm, ...]
    leading: tuple[tuple[int, mpmath.mpf], ...]
    parity: Parity
    reference: ReferenceFunction
    free_indices: tuple[int, ...]
    digits: int
    series_truncation: int | None = None
    label: str = ""

    @property
    def lags(self) -> tuple[int, ...]:
        return tuple(sorted({term.lag for term in self.terms}))

    @property
    def max_lag(self) -> int:
        return max(self.lags, default=0)

    @property
    def parity_decoupled(self) -> bool:
        return all(lag % 2 == 0 for lag in self.lags)

    def divisor(self, n: int) -> mpmath.mpf:
        return -mpmath.fsum(constant * _falling(n, derivative) for derivative, constant in self.leading)

    def weight(self, lag: int, n: int, energy: mpmath.mpf) -> mpmath.mpf:
        return mpmath.fsum(
            (term.constant + term.energy * energy) * _falling(n - lag, term.derivative)
            for term in self.terms
            if term.lag == lag
        )

    def quantization_index(self, order: int) -> int:
        """Index of the coefficient whose zeros quantize at order `order`: 2I for even states, 2I + 1 for odd."""
        return 2 * order + self.parity.offset


@dataclass(frozen=True)
class CoefficientSequence:
    energy: mpmath.mpf
    values: tuple[mpmath.mpf, ...]
    order: int
    parity: Parity


def _falling(n: int, k: int) -> int:
    out = 1
    for i in range(k):
        out *= n - i
    return out


def derive(
    problem: PotentialSpec | PolynomialODE,
    ref: ReferenceFunction,
    parity: Parity,
    ctx: PrecisionContext,
) -> Recurrence:
    if isinstance(problem, PotentialSpec):
        if problem.rational is not None:
            raise UnsupportedError(
                "Power series for the rational potential stop converging at |x| = 1/sqrt(lam); "
                "its levels come from the moment recursion."
            )
        ode = schrodinger_ode(problem, ctx)
        truncation = problem.series_truncation
    else:
        ode = problem
        truncation = None
    transformed = gauge_transform(ode, ref.alpha, ref.beta, ref.sigma, ctx)
    if not transformed.terms:
        raise DerivationError("The transformed equation is empty.")

    shifts = {term.derivative - term.power for term in transformed.terms}
    top = max(shifts)
    leading = [term for term in transformed.terms if term.derivative - term.power == top]
    if any(term.energy for term in leading):
        raise DerivationError("Energy enters the leading coefficient; powers of x cannot be matched.")

    terms = tuple(
        RecurrenceTerm(
            lag=top - (term.derivative - term.power),
            derivative=term.derivative,
            constant=term.constant,
            energy=term.energy,
        )
        for term in transformed.terms
        if term.derivative - term.power != top
    )
    rec = Recurrence(
        terms=terms,
        leading=tuple((term.derivative, term.constant) for term in leading),
        parity=parity,
        reference=ref,
        free_indices=(),
        digits=ctx.digits,
        series_truncation=truncation,
        label=transformed.label,
    )
    with ctx.activate():
        scale = max((abs(constant) for _, constant in rec.leading), default=mpmath.mpf(1))
        free = tuple(
            n for n in range(FREE_INDEX_SEARCH) if abs(rec.divisor(n)) <= ctx.zero_tol * scale * (n * n + 1)
        )
        if not free or free[-1] >= FREE_INDEX_SEARCH - 1:
            raise DerivationError("Leading coefficient vanishes identically; the recurrence does not close.")
    if parity.offset not in free:
        raise DerivationError(
            f"{parity.value} parity is not an initial index of this recurrence (free indices {list(free)}); "
            "check alpha against the singular term."
        )
    rec = Recurrence(
        terms=rec.terms,
        leading=rec.leading,
        parity=parity,
        reference=ref,
        free_indices=free,
        digits=ctx.digits,
        series_truncation=truncation,
        label=rec.label,
    )
    logger.debug(
        "Derived recurrence %s parity=%s lags=%s%s free=%s",
        rec.label,
        parity.value,
        rec.lags,
        "" if rec.parity_decoupled else " (odd lags mix parities)",
        free,
    )
    return rec


@lru_cache(maxsize=32)
def coefficient_table(rec: Recurrence, order: int) -> tuple:
    """Per-index divisors and affine weights (constant, energy) for n <= order."""
    lags = rec.lags
    with mpmath.workdps(rec.digits):
        divisors = [rec.divisor(n) for n in range(order + 1)]
        constants = []
        energies = []
        for lag in lags:
            constants.append([mpmath.mpf(0)] * (order + 1))
            energies.append([mpmath.mpf(0)] * (order + 1))
        for index, lag in enumerate(lags):
            for term in rec.terms:
                if term.lag != lag:
                    continue
                for n in range(lag, order + 1):
                    factor = _falling(n - lag, term.derivative)
                    if factor:
                        constants[index][n] += term.constant * factor
                        energies[index][n] += term.energy * factor
    return lags, divisors, constants, energies


def _check_order(rec: Recurrence, index: int) -> None:
    if index < 0:
        raise InputError("Coefficient index must be non-negative.")
    if rec.series_truncation is not None and index > rec.series_truncation + 2:
        raise EvaluationError(
            f"Potential series stops at x^{rec.series_truncation}; coefficient a_{index} needs terms through "
            f"x^{index - 2}."
        )


def evaluate(rec: Recurrence, energy: mpmath.mpf, order: int) -> list[mpmath.mpf]:
    """Forward recursion under the active precision."""
    _check_order(rec, order)
    lags, divisors, constants, energies = coefficient_table(rec, order)
    values = [mpmath.mpf(0)] * (order + 1)
    for n in range(order + 1):
        if n in rec.free_indices:
            values[n] = mpmath.mpf(1) if n == rec.parity.offset else mpmath.mpf(0)
            continue
        divisor = divisors[n]
        if not divisor:
            raise EvaluationError(f"Recurrence divisor vanishes at n={n}.")
        total = mpmath.mpf(0)
        for index, lag in enumerate(lags):
            if lag > n:
                break
            previous = values[n - lag]
            if previous:
                total += (constants[index][n] + energies[index][n] * energy) * previous
        values[n] = total / divisor
    return values


def eval_coefficients(rec: Recurrence, E: Real, N: int, ctx: PrecisionContext) -> CoefficientSequence:
    if ctx.digits != rec.digits:
        raise ConfigurationError(
            f"Recurrence was derived at {rec.digits} digits; derive it again under {ctx.digits} digits."
        )
    with ctx.activate():
        energy = to_mpf(E)
        values = evaluate(rec, energy, N)
    return CoefficientSequence(energy=energy, values=tuple(values), order=N, parity=rec.parity)


def residuals(rec: Recurrence, seq: CoefficientSequence, ctx: PrecisionContext) -> list[mpmath.mpf]:
    """Scaled residual |div a_n - sum w a| / (|div a_n| + sum |w a|) for every recursed index."""
    out = []
    with ctx.activate():
        for n in range(seq.order + 1):
            if n in rec.free_indices:
                continue
            lhs = rec.divisor(n) * seq.values[n]
            parts = [rec.weight(lag, n, seq.energy) * seq.values[n - lag] for lag in rec.lags if lag <= n]
            scale = abs(lhs) + mpmath.fsum(abs(part) for part in parts)
            if scale == 0:
                out.append(mpmath.mpf(0))
                continue
            out.append(abs(lhs - mpmath.fsum(parts)) / scale)
    return out


@dataclass(frozen=True)
class QuantizationFunction:
    """E -> a_index[E]; picklable so scans can fan out to worker processes."""

    rec: Recurrence
    index: int

    def __call__(self, energy: mpmath.mpf) -> mpmath.mpf:
        return evaluate(self.rec, energy, self.index)[self.index]


def quantization_function(rec: Recurrence, order: int) -> QuantizationFunction:
    return QuantizationFunction(rec=rec, index=rec.quantization_index(order))


def wavefunction(
    seq: CoefficientSequence,
    ref: ReferenceFunction,
    xs: list[Real],
    ctx: PrecisionContext,
) -> list[mpmath.mpf]:
    """Truncated Psi(x) = s(x) P(|x|) |x|^alpha exp(-beta |x|^sigma), scaled to max |Psi| = 1."""
    if not xs:
        raise InputError("Wavefunction grid is empty.")
    with ctx.activate():
        alpha = to_mpf(ref.alpha)
        beta = to_mpf(ref.beta)
        highest_first = list(reversed(seq.values))
        samples = []
        for raw in xs:
            x = to_mpf(raw)
            r = abs(x)
            value = mpmath.polyval(highest_first, r) * mpmath.exp(-beta * r**ref.sigma)
            if alpha:
                value *= r**alpha
            if seq.parity is Parity.ODD and x < 0:
                value = -value
            samples.append(value)
        peak = max(abs(value) for value in samples)
        if peak == 0:
            raise EvaluationError("Wavefunction vanishes on the whole grid.")
        return [value / peak for value in samples]
