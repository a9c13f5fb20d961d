"""Potentials, reference functions and the polynomial-coefficient ODEs built from them.

A problem is always reduced to

    A2(x) Ψ'' + A1(x) Ψ' + (A0(x) - E B(x)) Ψ = 0

with Laurent-polynomial coefficients, stored as a flat tuple of ODETerm.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import mpmath

from ..services.errors import DerivationError, InputError, UnsupportedError
from ..services.number_parser import format_exact, parse_exact
from ..services.precision import PrecisionContext, Real, to_mpf


class Parity(str, Enum):
    EVEN = "even"
    ODD = "odd"

    @property
    def offset(self) -> int:
        return 0 if self is Parity.EVEN else 1


@dataclass(frozen=True)
class RationalTerm:
    """g x^2 / (1 + lam x^2)."""

    g: Fraction
    lam: Fraction


@dataclass(frozen=True)
class PotentialSpec:
    even_series: dict[int, Fraction]
    singular_coeff: Fraction = Fraction(0)
    series_truncation: int | None = None
    rational: RationalTerm | None = None
    name: str = ""

    def __post_init__(self) -> None:
        for power in self.even_series:
            if power < 2 or power % 2:
                raise InputError(f"Potential powers must be even and >= 2, got x^{power}.")
        if self.singular_coeff and self.singular_coeff <= Fraction(-1, 4):
            raise InputError("Singular coefficient must exceed -1/4 so that alpha is real.")
        if self.series_truncation is not None:
            negative = [power for power, coeff in self.even_series.items() if coeff < 0]
            if negative:
                raise InputError(
                    f"Series potentials must be non-alternating; negative coefficient at x^{min(negative)}."
                )

    @property
    def top_power(self) -> int:
        return max(self.even_series, default=0)

    @property
    def is_polynomial(self) -> bool:
        return not self.singular_coeff and self.rational is None


@dataclass(frozen=True)
class ReferenceFunction:
    """R(x) = x^alpha exp(-beta x^sigma)."""

    beta: Real = Fraction(1, 2)
    sigma: int = 2
    alpha: Real = Fraction(0)

    def __post_init__(self) -> None:
        if self.sigma not in (2, 3, 4):
            raise InputError(f"sigma must be 2, 3 or 4, got {self.sigma}.")
        if _as_number(self.beta) <= 0:
            raise InputError("beta must be positive.")
        if _as_number(self.alpha) < 0:
            raise InputError("alpha must be non-negative.")


@dataclass(frozen=True)
class ODETerm:
    power: int
    derivative: int
    constant: mpmath.mpf
    energy: mpmath.mpf = field(default_factory=lambda: mpmath.mpf(0))


@dataclass(frozen=True)
class PolynomialODE:
    terms: tuple[ODETerm, ...]
    label: str = ""
    digits: int = 15

    def coefficient(self, derivative: int) -> dict[int, tuple[mpmath.mpf, mpmath.mpf]]:
        """Coefficients of the given derivative by power, summed at the precision the ODE was built with."""
        out: dict[int, tuple[mpmath.mpf, mpmath.mpf]] = {}
        with mpmath.workdps(self.digits):
            for term in self.terms:
                if term.derivative == derivative:
                    c0, c1 = out.get(term.power, (mpmath.mpf(0), mpmath.mpf(0)))
                    out[term.power] = (c0 + term.constant, c1 + term.energy)
        return out


def _as_number(value: Real):
    if isinstance(value, str):
        return parse_exact(value)
    return value


def _series(pairs: dict[int, Fraction | int]) -> dict[int, Fraction]:
    return {power: Fraction(coeff) for power, coeff in sorted(pairs.items()) if coeff != 0}


def harmonic() -> PotentialSpec:
    return PotentialSpec(even_series={2: Fraction(1)}, name="harmonic")


def quartic(g: Fraction | int) -> PotentialSpec:
    return PotentialSpec(even_series=_series({2: 1, 4: Fraction(g)}), name="quartic")


def double_well(z2: Fraction | int) -> PotentialSpec:
    return PotentialSpec(even_series=_series({2: -Fraction(z2), 4: 1}), name="doublewell")


def anharmonic(power: int, g: Fraction | int) -> PotentialSpec:
    if power < 4 or power % 2:
        raise InputError(f"Anharmonic power must be even and >= 4, got {power}.")
    names = {4: "quartic", 6: "sextic", 8: "octic", 10: "dectic"}
    return PotentialSpec(even_series=_series({2: 1, power: Fraction(g)}), name=names.get(power, f"x{power}"))


def transcendental_exp(truncation: int) -> PotentialSpec:
    """exp(x^2) - 1 as its Taylor series through x^truncation."""
    if truncation < 2 or truncation % 2:
        raise InputError(f"Series truncation must be an even integer >= 2, got {truncation}.")
    series = {2 * k: Fraction(1, math.factorial(k)) for k in range(1, truncation // 2 + 1)}
    return PotentialSpec(even_series=series, series_truncation=truncation, name="exp")


def modified_rational(g: Fraction | int, lam: Fraction | int) -> PotentialSpec:
    """x^2 + g x^2/(1 + lam x^2); its ODE is written for Psi/(1 + g x^2)."""
    g, lam = Fraction(g), Fraction(lam)
    if lam <= 0:
        raise InputError("lambda must be positive.")
    if g < 0:
        raise InputError("g must be non-negative.")
    rational = RationalTerm(g=g, lam=lam) if g else None
    return PotentialSpec(even_series={2: Fraction(1)}, rational=rational, name="rational")


def singular(g: Fraction | int) -> PotentialSpec:
    return PotentialSpec(even_series={2: Fraction(1)}, singular_coeff=Fraction(g), name="singular")


def singular_alpha(g: Real, ctx: PrecisionContext) -> mpmath.mpf:
    with ctx.activate():
        return (1 + mpmath.sqrt(1 + 4 * to_mpf(g))) / 2


def singular_reference(potential: PotentialSpec, ctx: PrecisionContext) -> ReferenceFunction:
    return ReferenceFunction(alpha=singular_alpha(potential.singular_coeff, ctx), beta=Fraction(1, 2), sigma=2)


def describe_potential(potential: PotentialSpec) -> str:
    if potential.series_truncation is not None and potential.name == "exp":
        return f"exp(x^2) - 1 [series through x^{potential.series_truncation}]"
    pieces = [(coeff, f"x^{power}") for power, coeff in sorted(potential.even_series.items())]
    if potential.singular_coeff:
        pieces.append((potential.singular_coeff, "x^-2"))
    text = ""
    for index, (coeff, monomial) in enumerate(pieces):
        magnitude = abs(coeff)
        body = monomial if magnitude == 1 else f"{format_exact(magnitude)} {monomial}"
        if index == 0:
            text = body if coeff > 0 else f"-{body}"
        else:
            text += f" + {body}" if coeff > 0 else f" - {body}"
    if potential.rational is not None:
        g, lam = potential.rational.g, potential.rational.lam
        lead = "x^2" if g == 1 else f"{format_exact(g)} x^2"
        denominator = "x^2" if lam == 1 else f"{format_exact(lam)} x^2"
        text += f" + {lead}/(1 + {denominator})"
    return text or "0"


def potential_to_text(potential: PotentialSpec, reference: ReferenceFunction | None = None) -> str:
    if potential.rational is not None:
        raise InputError("Rational potentials have no potential-file form.")
    lines = []
    if reference is not None:
        lines.append(f"sigma {reference.sigma}")
        for name in ("alpha", "beta"):
            value = getattr(reference, name)
            if not isinstance(value, (Fraction, int)):
                raise InputError(f"{name} is not exact and cannot be written to a potential file.")
            lines.append(f"{name} {format_exact(Fraction(value))}")
    if potential.singular_coeff:
        lines.append(f"singular {format_exact(potential.singular_coeff)}")
    for power, coeff in sorted(potential.even_series.items()):
        lines.append(f"{power} {format_exact(coeff)}")
    return "\n".join(lines) + "\n"


def potential_from_text(text: str) -> tuple[PotentialSpec, dict[str, Fraction | int]]:
    """Parse the `k coeff` / `singular g` / `sigma|alpha|beta v` potential file format."""
    series: dict[int, Fraction] = {}
    singular_coeff = Fraction(0)
    reference: dict[str, Fraction | int] = {}
    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InputError(f"Line {line_number}: expected two fields, got {len(parts)}.")
        key, value = parts
        if key == "singular":
            singular_coeff = parse_exact(value)
        elif key == "sigma":
            if not value.isdigit():
                raise InputError(f"Line {line_number}: sigma must be an integer.")
            reference["sigma"] = int(value)
        elif key in ("alpha", "beta"):
            reference[key] = parse_exact(value)
        elif key.isdigit():
            if int(key) in series:
                raise InputError(f"Line {line_number}: duplicate power x^{key}.")
            series[int(key)] = parse_exact(value)
        else:
            raise InputError(f"Line {line_number}: unknown key {key!r}.")
    if not series:
        raise InputError("Potential file defines no series terms.")
    potential = PotentialSpec(
        even_series=_series(series),
        singular_coeff=singular_coeff,
        name="file",
    )
    return potential, reference


# Laurent polynomials below are dicts power -> (constant, energy) or power -> mpf.


def _zero():
    return mpmath.mpf(0)


def _mul_scalar_poly(a: dict[int, tuple], b: dict[int, mpmath.mpf]) -> dict[int, tuple]:
    out: dict[int, tuple] = {}
    for pa, (c0, c1) in a.items():
        for pb, s in b.items():
            d0, d1 = out.get(pa + pb, (_zero(), _zero()))
            out[pa + pb] = (d0 + c0 * s, d1 + c1 * s)
    return out


def _add(*polys: dict[int, tuple]) -> dict[int, tuple]:
    out: dict[int, tuple] = {}
    for poly in polys:
        for power, (c0, c1) in poly.items():
            d0, d1 = out.get(power, (_zero(), _zero()))
            out[power] = (d0 + c0, d1 + c1)
    return out


def _plain(poly: dict[int, mpmath.mpf]) -> dict[int, tuple]:
    return {power: (value, _zero()) for power, value in poly.items()}


def _absolute(poly: dict[int, tuple]) -> dict[int, tuple]:
    return {power: (abs(c0), abs(c1)) for power, (c0, c1) in poly.items()}


def _terms(
    by_derivative: dict[int, dict[int, tuple]],
    ctx: PrecisionContext,
    magnitudes: dict[int, dict[int, tuple]] | None = None,
) -> tuple[ODETerm, ...]:
    """Flatten to ODETerms; a coefficient is dropped when it cancelled to within zero_tol of its parts."""
    terms = []
    for derivative in sorted(by_derivative, reverse=True):
        for power, (c0, c1) in sorted(by_derivative[derivative].items()):
            if magnitudes is not None:
                m0, m1 = magnitudes[derivative][power]
                c0 = c0 if abs(c0) > ctx.zero_tol * m0 else _zero()
                c1 = c1 if abs(c1) > ctx.zero_tol * m1 else _zero()
            if c0 or c1:
                terms.append(ODETerm(power=power, derivative=derivative, constant=c0, energy=c1))
    return tuple(terms)


def schrodinger_ode(potential: PotentialSpec, ctx: PrecisionContext) -> PolynomialODE:
    """-Psi'' + V Psi = E Psi, with rational denominators cleared."""
    with ctx.activate():
        v_poly = {power: to_mpf(coeff) for power, coeff in potential.even_series.items()}
        energy = {0: (_zero(), mpmath.mpf(-1))}
        if potential.rational is None:
            a0 = dict(v_poly)
            if potential.singular_coeff:
                a0[-2] = to_mpf(potential.singular_coeff)
            by_derivative = {
                2: {0: (mpmath.mpf(-1), _zero())},
                0: _add(_plain(a0), energy),
            }
            return PolynomialODE(
                terms=_terms(by_derivative, ctx), label=describe_potential(potential), digits=ctx.digits
            )
        if potential.singular_coeff:
            raise DerivationError("Singular and rational terms cannot be combined.")
        g = to_mpf(potential.rational.g)
        lam = to_mpf(potential.rational.lam)
        # Psi = Q Phi with Q = 1 + g x^2, equation multiplied through by D = 1 + lam x^2.
        d = {0: mpmath.mpf(1), 2: lam}
        q = {0: mpmath.mpf(1), 2: g}
        dq = {0: mpmath.mpf(1), 2: lam + g, 4: lam * g}
        by_derivative = {
            2: _mul_scalar_poly({0: (mpmath.mpf(-1), _zero())}, dq),
            1: _mul_scalar_poly({1: (-4 * g, _zero())}, d),
            0: _add(
                _mul_scalar_poly({0: (-2 * g, _zero())}, d),
                _mul_scalar_poly(_plain(v_poly), dq),
                _mul_scalar_poly({2: (g, _zero())}, q),
                _mul_scalar_poly(energy, dq),
            ),
        }
        return PolynomialODE(terms=_terms(by_derivative, ctx), label=describe_potential(potential), digits=ctx.digits)


def gauge_transform(
    ode: PolynomialODE,
    alpha: Real,
    beta: Real,
    sigma: int,
    ctx: PrecisionContext,
) -> PolynomialODE:
    """ODE for P when Psi = x^alpha exp(-beta x^sigma) P."""
    with ctx.activate():
        alpha = to_mpf(alpha)
        beta = to_mpf(beta)
        w = {power: value for power, value in {-1: alpha, sigma - 1: -beta * sigma}.items() if value}
        # R''/R = w' + w^2
        curvature: dict[int, mpmath.mpf] = {}
        for pa, va in w.items():
            for pb, vb in w.items():
                curvature[pa + pb] = curvature.get(pa + pb, _zero()) + va * vb
        for power, value in w.items():
            if power:
                curvature[power - 1] = curvature.get(power - 1, _zero()) + power * value
        twice_w = {power: 2 * value for power, value in w.items()}

        def combine(a2, a1, a0, w, twice_w, curvature):
            return {
                2: a2,
                1: _add(_mul_scalar_poly(a2, twice_w), a1),
                0: _add(_mul_scalar_poly(a2, curvature), _mul_scalar_poly(a1, w), a0),
            }

        a2, a1, a0 = ode.coefficient(2), ode.coefficient(1), ode.coefficient(0)
        by_derivative = combine(a2, a1, a0, w, twice_w, curvature)
        magnitudes = combine(
            _absolute(a2),
            _absolute(a1),
            _absolute(a0),
            {p: abs(v) for p, v in w.items()},
            {p: abs(v) for p, v in twice_w.items()},
            {p: abs(v) for p, v in curvature.items()},
        )
        return PolynomialODE(terms=_terms(by_derivative, ctx, magnitudes), label=ode.label, digits=ctx.digits)


def sextic_modified_ode(g: Fraction | int | str, ctx: PrecisionContext) -> PolynomialODE:
    """ODE for Psi~ where Psi = Psi~ exp(+sqrt(g) x^4 / 4); the x^6 term cancels."""
    g_exact = parse_exact(g) if isinstance(g, str) else Fraction(g)
    if g_exact <= 0:
        raise InputError("The sextic gauge needs g > 0.")
    potential = anharmonic(6, g_exact)
    with ctx.activate():
        gauge = -mpmath.sqrt(to_mpf(g_exact)) / 4
    ode = gauge_transform(schrodinger_ode(potential, ctx), 0, gauge, 4, ctx)
    return PolynomialODE(terms=ode.terms, label=f"{describe_potential(potential)} [quartic gauge]", digits=ctx.digits)


def rational_modified_ode(potential: PotentialSpec, ctx: PrecisionContext) -> PolynomialODE:
    """ODE for Psi~ = Psi / (1 + g x^2) * exp(-x^2 / 2), the form whose moments decay like exp(-x^2).

    With lam == g the cleared denominator equals Q = 1 + g x^2 and divides
    out, which leaves a moment recursion without missing moments.
    """
    if potential.rational is None:
        raise InputError("The rational gauge needs a potential with a g x^2/(1 + lam x^2) term.")
    if potential.rational.g != potential.rational.lam:
        raise UnsupportedError("The Gaussian gauge needs lam == g so the cleared denominator divides out.")
    with ctx.activate():
        g = to_mpf(potential.rational.g)
        v_poly = {power: to_mpf(coeff) for power, coeff in potential.even_series.items()}
        q = {0: mpmath.mpf(1), 2: g}
        by_derivative = {
            2: _mul_scalar_poly({0: (mpmath.mpf(-1), _zero())}, q),
            1: {1: (-4 * g, _zero())},
            0: _add(
                {0: (-2 * g, _zero()), 2: (g, _zero())},
                _mul_scalar_poly(_plain(v_poly), q),
                _mul_scalar_poly({0: (_zero(), mpmath.mpf(-1))}, q),
            ),
        }
    ode = PolynomialODE(terms=_terms(by_derivative, ctx), label=describe_potential(potential), digits=ctx.digits)
    # Phi = Psi / Q = exp(+x^2 / 2) Psi~, a reference function with beta = -1/2
    modified = gauge_transform(ode, 0, Fraction(-1, 2), 2, ctx)
    return PolynomialODE(terms=modified.terms, label=f"{ode.label} [Gaussian gauge]", digits=ctx.digits)
