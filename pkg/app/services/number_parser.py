import re
from fractions import Fraction

from .errors import InputError

NUMBER_RE = re.compile(
    r"^[+-]?(?:(?:(?:\d+(?:\.\d+)?)|(?:\.\d+))(?:[eE][+-]?\d+)?|(?:\d+/\d+))$"
)


def parse_exact(raw: str) -> Fraction:
    """Parse one numeric token (integer, decimal, exponent or p/q) into an exact Fraction."""
    if not isinstance(raw, str) or not raw:
        raise InputError("Invalid number format.", code="INVALID_NUMBER_FORMAT")
    if any(ch.isspace() for ch in raw):
        raise InputError(f"Invalid number format: {raw!r}.", code="INVALID_NUMBER_FORMAT")
    if not NUMBER_RE.fullmatch(raw):
        raise InputError(f"Invalid number format: {raw!r}.", code="INVALID_NUMBER_FORMAT")
    if "/" in raw:
        numerator, denominator = raw.split("/", 1)
        if int(denominator) == 0:
            raise InputError(f"Zero denominator in {raw!r}.", code="INVALID_NUMBER_FORMAT")
        return Fraction(int(numerator), int(denominator))
    return Fraction(raw)


def format_exact(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"
