"""
Exact rational scalars plus the two bounded-depth search primitives
(sign-change bisection and ternary search) used by the analysis layer.
"""
from __future__ import annotations

import math
import re
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Callable, Tuple, Union

Rational = Fraction
ExtendedRational = Union[Fraction, float]  # the float is only ever +inf / -inf

POS_INF = math.inf
NEG_INF = -math.inf

DEFAULT_DEPTH = 64

_RATIONAL_RE = re.compile(r"^\s*(-?)(\d+)(?:/(\d+)|\.(\d+))?\s*$")


class NumericsError(ValueError):
    """Raised for malformed rationals and violated search preconditions."""


def rational_parse(text):
    """
    Parse an exact rational from text.

    Accepts "7", "-7", "2/3", "-2/3" and finite decimals such as "0.75"
    (converted exactly, "0.75" -> 3/4).
    """
    if not isinstance(text, str):
        raise NumericsError(f"expected a string, got {type(text).__name__}")
    match = _RATIONAL_RE.match(text)
    if not match:
        raise NumericsError(f"malformed rational: {text!r}")
    sign, whole, denominator, decimals = match.groups()
    if denominator is not None:
        if int(denominator) == 0:
            raise NumericsError(f"zero denominator: {text!r}")
        value = Fraction(int(whole), int(denominator))
    elif decimals is not None:
        value = Fraction(int(whole + decimals), 10 ** len(decimals))
    else:
        value = Fraction(int(whole))
    return -value if sign else value


def to_rational(value):
    """Coerce int, Fraction or rational text to a Fraction. Floats are refused."""
    if isinstance(value, bool):
        raise NumericsError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return rational_parse(value)
    raise NumericsError(f"cannot use {type(value).__name__} as an exact rational: {value!r}")


def is_finite(value: ExtendedRational) -> bool:
    return not (isinstance(value, float) and math.isinf(value))


def format_rational(value: ExtendedRational) -> str:
    """Render as "p/q", "p", "inf" or "-inf"."""
    if not is_finite(value):
        return "inf" if value > 0 else "-inf"
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_decimal(value: ExtendedRational, digits: int = 17) -> str:
    """Presentation-only decimal with `digits` significant digits."""
    if not is_finite(value):
        return "inf" if value > 0 else "-inf"
    value = Fraction(value)
    with localcontext() as ctx:
        ctx.prec = digits
        quotient = Decimal(value.numerator) / Decimal(value.denominator)
    return format(quotient, f".{digits}g")


def sign(value) -> int:
    return (value > 0) - (value < 0)


def depth_for(width, tol) -> int:
    """Smallest depth d with width / 2**d <= tol."""
    if tol <= 0:
        raise NumericsError("tolerance must be positive")
    depth = 0
    while width > tol * (1 << depth):
        depth += 1
    return depth


def bisect_bracket(g: Callable[[Fraction], Fraction], lo, hi, depth: int = DEFAULT_DEPTH
                   ) -> Tuple[Fraction, Fraction]:
    """
    Halve [lo, hi] `depth` times keeping a sign change of g inside.

    g(lo) and g(hi) must have opposite strict signs. A zero at a midpoint is
    grouped with the hi side, so sign(g(lo)) never changes and the returned
    bracket (lo', hi') always satisfies sign(g(lo')) = sign(g(lo)) and
    sign(g(hi')) != sign(g(lo)).

    Returns:
        (lo', hi') with hi' - lo' = (hi - lo) / 2**depth
    """
    lo, hi = Fraction(lo), Fraction(hi)
    if depth < 1:
        raise NumericsError("depth must be a positive integer")
    if lo >= hi:
        raise NumericsError(f"empty bracket [{lo}, {hi}]")
    sign_lo = sign(g(lo))
    sign_hi = sign(g(hi))
    if sign_lo == 0 or sign_hi == 0 or sign_lo == sign_hi:
        raise NumericsError("g must have opposite strict signs at the bracket ends")
    for _ in range(depth):
        mid = (lo + hi) / 2
        if sign(g(mid)) == sign_lo:
            lo = mid
        else:
            hi = mid
    return lo, hi


def bisect_sign_change(g: Callable[[Fraction], Fraction], lo, hi, depth: int = DEFAULT_DEPTH) -> Fraction:
    """Midpoint of the final bracket of `bisect_bracket`."""
    lo, hi = bisect_bracket(g, lo, hi, depth)
    return (lo + hi) / 2


def minimize_unimodal(g: Callable[[Fraction], Fraction], lo, hi, depth: int = DEFAULT_DEPTH
                      ) -> Tuple[Fraction, Fraction]:
    """
    Ternary search for the minimum of a unimodal (V-shaped) g on [lo, hi].

    The bracket shrinks by 2/3 per step, so the returned argmin lies within
    (hi - lo) * (2/3)**depth of a minimizer.

    Returns:
        (argmin, g(argmin))
    """
    lo, hi = Fraction(lo), Fraction(hi)
    if lo >= hi:
        raise NumericsError(f"empty interval [{lo}, {hi}]")
    for _ in range(depth):
        third = (hi - lo) / 3
        m1, m2 = lo + third, hi - third
        if g(m1) <= g(m2):
            hi = m2
        else:
            lo = m1
    argmin = (lo + hi) / 2
    return argmin, g(argmin)
