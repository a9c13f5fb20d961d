"""Working-precision contract shared by every numerical service.

All big-real arithmetic runs inside ``ctx.activate()``, which pins mpmath's
decimal precision for the duration of one operation. Contexts are immutable
values and can be shipped to worker processes as-is.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .errors import ConfigurationError, InputError
from .number_parser import parse_exact

logger = logging.getLogger(__name__)

MIN_DIGITS = 30

Real = Fraction | int | str | mpmath.mpf


@dataclass(frozen=True)
class PrecisionContext:
    digits: int
    zero_tol: mpmath.mpf

    def __post_init__(self) -> None:
        if self.digits < MIN_DIGITS:
            raise ConfigurationError(f"Working precision must be at least {MIN_DIGITS} digits, got {self.digits}.")
        with mpmath.workdps(self.digits):
            if not 0 < self.zero_tol < mpmath.power(10, -mpmath.mpf(self.digits) / 2):
                raise ConfigurationError("zero_tol must lie in (0, 10^(-digits/2)).")

    def activate(self):
        return mpmath.workdps(self.digits)

    def real(self, value: Real) -> mpmath.mpf:
        """Convert an exact or big-real value at this context's precision."""
        with self.activate():
            return to_mpf(value)

    def power_of_ten(self, exponent: int) -> mpmath.mpf:
        with self.activate():
            return mpmath.power(10, exponent)

    @property
    def bisection_tolerance(self) -> mpmath.mpf:
        return self.power_of_ten(-self.digits + 8)

    @property
    def bracket_epsilon(self) -> mpmath.mpf:
        return self.power_of_ten(-self.digits + 12)

    @property
    def perturbation(self) -> mpmath.mpf:
        return self.power_of_ten(-self.digits + 15)


def with_digits(digits: int) -> PrecisionContext:
    if not isinstance(digits, int) or digits < MIN_DIGITS:
        raise ConfigurationError(f"Working precision must be at least {MIN_DIGITS} digits, got {digits!r}.")
    with mpmath.workdps(digits):
        zero_tol = mpmath.power(10, -digits + 10)
    return PrecisionContext(digits=digits, zero_tol=zero_tol)


def to_mpf(value: Real) -> mpmath.mpf:
    """Convert under the currently active mpmath precision."""
    if isinstance(value, mpmath.mpf):
        return +value
    if isinstance(value, bool):
        raise InputError("Booleans are not numbers here.")
    if isinstance(value, int):
        return mpmath.mpf(value)
    if isinstance(value, Fraction):
        return mpmath.mpf(value.numerator) / value.denominator
    if isinstance(value, str):
        return to_mpf(parse_exact(value))
    raise InputError(f"Cannot convert {type(value).__name__} to a big-real.")


def format_real(value: mpmath.mpf, digits: int) -> str:
    """Decimal string at `digits` significant digits, fixed notation for table-sized values."""
    with mpmath.workdps(digits + 5):
        return mpmath.nstr(value, digits, min_fixed=-digits, max_fixed=digits + 1)


def significant_digit_count(text: str) -> int:
    digits = "".join(ch for ch in text.split("e")[0].split("E")[0] if ch.isdigit())
    return len(digits.lstrip("0"))


def agreement_digits(a: mpmath.mpf, b: mpmath.mpf, cap: int) -> int:
    """Leading decimal places two values share.

    floor(log10 max(|a|, |b|)) - floor(log10 |a - b|), clamped to [0, cap]. A value
    that equals a printed string up to its last-place rounding shares every printed digit.
    """
    with mpmath.workdps(cap + 10):
        a = to_mpf(a)
        b = to_mpf(b)
        scale = max(abs(a), abs(b))
        difference = abs(a - b)
        if difference == 0 or scale == 0:
            return cap if difference == 0 else 0
        value = mpmath.floor(mpmath.log10(scale)) - mpmath.floor(mpmath.log10(difference))
    return max(0, min(cap, int(value)))


def matched_digits(value: mpmath.mpf, reference: str) -> int:
    """Digits of a printed reference string reproduced by `value` (at most the printed length)."""
    cleaned = reference.replace(" ", "")
    printed = significant_digit_count(cleaned)
    with mpmath.workdps(max(printed, MIN_DIGITS) + 20):
        target = mpmath.mpf(cleaned)
        return agreement_digits(value, target, printed)
