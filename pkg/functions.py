"""
Piecewise-constant BV functions and piecewise-linear truncation radii.

A StepFunction never stores a value at a breakpoint: the value there is
derived on demand by a normalization mode (see normalized_value).
"""
from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Optional, Sequence, Tuple

import numpy as np

from numerics import POS_INF, ExtendedRational, format_rational, to_rational


class FunctionError(ValueError):
    """Raised when a StepFunction or PiecewiseLinearFunction is malformed."""


class Normalization(Enum):
    NORM_ALPHA = "norm-alpha"
    NORM_ONE = "norm-one"
    RAW_MAX = "raw-max"


def _strictly_increasing(points) -> bool:
    return all(p < q for p, q in zip(points, points[1:]))


@dataclass(frozen=True)
class StepFunction:
    """
    f = left_tail on (-inf, breakpoints[0]), values[i] on
    (breakpoints[i], breakpoints[i+1]), right_tail on (breakpoints[-1], +inf).

    With no breakpoints the function is the constant left_tail == right_tail.
    """
    breakpoints: Tuple[Fraction, ...]
    values: Tuple[Fraction, ...]
    left_tail: Fraction = Fraction(0)
    right_tail: Fraction = Fraction(0)
    _cumulative: Tuple[Fraction, ...] = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        breakpoints = tuple(to_rational(b) for b in self.breakpoints)
        values = tuple(to_rational(v) for v in self.values)
        left_tail = to_rational(self.left_tail)
        right_tail = to_rational(self.right_tail)
        if not _strictly_increasing(breakpoints):
            raise FunctionError("breakpoints must be strictly increasing")
        if not breakpoints:
            if values:
                raise FunctionError("values must be empty when there are no breakpoints")
            if left_tail != right_tail:
                raise FunctionError("a function without breakpoints needs equal tails")
        elif len(values) != len(breakpoints) - 1:
            raise FunctionError(
                f"values has length {len(values)}, expected {len(breakpoints) - 1} "
                f"(one per interval between {len(breakpoints)} breakpoints)")
        object.__setattr__(self, "breakpoints", breakpoints)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "left_tail", left_tail)
        object.__setattr__(self, "right_tail", right_tail)

        # cumulative[i] = integral of f from breakpoints[0] to breakpoints[i]
        cumulative = [Fraction(0)]
        for i, v in enumerate(values):
            cumulative.append(cumulative[-1] + v * (breakpoints[i + 1] - breakpoints[i]))
        object.__setattr__(self, "_cumulative", tuple(cumulative) if breakpoints else ())

    @classmethod
    def constant(cls, c) -> "StepFunction":
        c = to_rational(c)
        return cls((), (), c, c)

    @classmethod
    def indicator(cls, a, b, height=1) -> "StepFunction":
        """height * chi_(a, b)."""
        return cls((a, b), (height,))

    @property
    def levels(self) -> Tuple[Fraction, ...]:
        """(left_tail, *values, right_tail); levels[i] lives left of breakpoints[i]."""
        if not self.breakpoints:
            return (self.left_tail,)
        return (self.left_tail,) + self.values + (self.right_tail,)

    def value_at(self, x) -> Fraction:
        """Piece value at a non-breakpoint x (the right limit at a breakpoint)."""
        return self.levels[bisect_right(self.breakpoints, x)]

    def primitive(self, x) -> Fraction:
        """Integral of f from breakpoints[0] (or 0 for constants) to x."""
        if not self.breakpoints:
            return self.left_tail * x
        bps = self.breakpoints
        j = bisect_right(bps, x)
        if j == 0:
            return self.left_tail * (x - bps[0])
        return self._cumulative[j - 1] + self.levels[j] * (x - bps[j - 1])

    def integral(self, a, b) -> Fraction:
        return self.primitive(b) - self.primitive(a)

    @cached_property
    def float_view(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        (breakpoints, cumulative, levels) as float64 arrays.

        Used for screening only; every reported number is recomputed exactly.
        A constant gets the dummy breakpoint 0.
        """
        if not self.breakpoints:
            c = float(self.left_tail)
            return np.zeros(1), np.zeros(1), np.array([c, c])
        return (np.array([float(b) for b in self.breakpoints]),
                np.array([float(c) for c in self._cumulative]),
                np.array([float(v) for v in self.levels]))

    def __str__(self):
        pieces = ", ".join(format_rational(v) for v in self.values)
        bps = ", ".join(format_rational(b) for b in self.breakpoints)
        return (f"StepFunction(breakpoints=[{bps}], values=[{pieces}], "
                f"tails=({format_rational(self.left_tail)}, {format_rational(self.right_tail)}))")


# ---------------------------------------------------------------------------
# operations on step functions
# ---------------------------------------------------------------------------

def antiderivative_at(f: StepFunction, x) -> Fraction:
    """F(x) = integral of f from 0 to x (signed), so F(0) = 0."""
    x = to_rational(x)
    return f.primitive(x) - f.primitive(Fraction(0))


def float_primitive(f: StepFunction, z: np.ndarray) -> np.ndarray:
    """Vectorized float image of f.primitive."""
    bps, cumulative, levels = f.float_view
    j = np.searchsorted(bps, z, side="right")
    prev = np.maximum(j - 1, 0)
    start = np.where(j == 0, 0.0, cumulative[prev])
    return start + levels[j] * (z - bps[prev])


def average(f: StepFunction, a, b) -> Fraction:
    """(F(b) - F(a)) / (b - a) for a < b."""
    a, b = to_rational(a), to_rational(b)
    if a >= b:
        raise FunctionError(f"average needs a < b, got a={a}, b={b}")
    return f.integral(a, b) / (b - a)


def absolute_value(f: StepFunction) -> StepFunction:
    if all(v >= 0 for v in f.levels):
        return f
    return StepFunction(f.breakpoints, tuple(abs(v) for v in f.values),
                        abs(f.left_tail), abs(f.right_tail))


def total_variation(f: StepFunction) -> Fraction:
    """Sum of |jump| over the level sequence (left tail, pieces..., right tail)."""
    levels = f.levels
    return sum((abs(q - p) for p, q in zip(levels, levels[1:])), Fraction(0))


def l1_norm(f: StepFunction) -> ExtendedRational:
    if f.left_tail != 0 or f.right_tail != 0:
        return POS_INF
    bps = f.breakpoints
    return sum((abs(v) * (bps[i + 1] - bps[i]) for i, v in enumerate(f.values)), Fraction(0))


def one_sided_limits(f: StepFunction, x) -> Tuple[Fraction, Fraction]:
    """(f(x-), f(x+))."""
    x = to_rational(x)
    bps = f.breakpoints
    levels = f.levels
    j = bisect_left(bps, x)
    if j < len(bps) and bps[j] == x:
        return levels[j], levels[j + 1]
    return levels[j], levels[j]


def normalized_value(f: StepFunction, x, alpha=None, mode: Normalization = Normalization.NORM_ALPHA
                     ) -> Fraction:
    """
    Pointwise representative at x.

    With L = max(f(x-), f(x+)) and l = min(...):
      NORM_ALPHA -> ((1+alpha)L + (1-alpha)l) / 2
      NORM_ONE   -> L (the limsup normalization)
      RAW_MAX    -> L
    The result always lies in [l, L].
    """
    left, right = one_sided_limits(f, x)
    upper, lower = max(left, right), min(left, right)
    if mode is Normalization.NORM_ALPHA:
        if alpha is None:
            raise FunctionError("NORM_ALPHA needs alpha")
        alpha = to_rational(alpha)
        if not 0 <= alpha <= 1:
            raise FunctionError(f"alpha must lie in [0, 1] for NORM_ALPHA, got {alpha}")
        return ((1 + alpha) * upper + (1 - alpha) * lower) / 2
    return upper


def superlevel_measure(f: StepFunction, lam) -> ExtendedRational:
    """|{x : f(x) > lam}|; breakpoints are null sets."""
    lam = to_rational(lam)
    if lam <= 0:
        raise FunctionError("lambda must be positive")
    if f.left_tail > lam or f.right_tail > lam:
        return POS_INF
    bps = f.breakpoints
    return sum((bps[i + 1] - bps[i] for i, v in enumerate(f.values) if v > lam), Fraction(0))


def canonicalize(f: StepFunction) -> StepFunction:
    """Drop breakpoints whose two neighbouring levels agree. Idempotent."""
    levels = f.levels
    keep_bps = []
    keep_levels = [levels[0]]
    for i, b in enumerate(f.breakpoints):
        if levels[i + 1] != keep_levels[-1]:
            keep_bps.append(b)
            keep_levels.append(levels[i + 1])
    if not keep_bps:
        return StepFunction.constant(keep_levels[0])
    return StepFunction(tuple(keep_bps), tuple(keep_levels[1:-1]), keep_levels[0], keep_levels[-1])


def scale(f: StepFunction, c) -> StepFunction:
    c = to_rational(c)
    return StepFunction(f.breakpoints, tuple(c * v for v in f.values), c * f.left_tail, c * f.right_tail)


def reflect(f: StepFunction) -> StepFunction:
    """x -> f(-x)."""
    return StepFunction(tuple(-b for b in reversed(f.breakpoints)), tuple(reversed(f.values)),
                        f.right_tail, f.left_tail)


def dilate(f: StepFunction, s) -> StepFunction:
    """x -> f(x / s) for s > 0."""
    s = to_rational(s)
    if s <= 0:
        raise FunctionError("dilation factor must be positive")
    return StepFunction(tuple(s * b for b in f.breakpoints), f.values, f.left_tail, f.right_tail)


def shift(f: StepFunction, h) -> StepFunction:
    """x -> f(x - h)."""
    h = to_rational(h)
    return StepFunction(tuple(b + h for b in f.breakpoints), f.values, f.left_tail, f.right_tail)


def support_hull(f: StepFunction) -> Optional[Tuple[Fraction, Fraction]]:
    """[first breakpoint, last breakpoint], or None for a constant."""
    if not f.breakpoints:
        return None
    return f.breakpoints[0], f.breakpoints[-1]


def is_single_peak(f: StepFunction) -> bool:
    """Non-decreasing then non-increasing levels with equal tails."""
    levels = canonicalize(f).levels
    if levels[0] != levels[-1]:
        return False
    i = 0
    while i + 1 < len(levels) and levels[i + 1] >= levels[i]:
        i += 1
    return all(q <= p for p, q in zip(levels[i:], levels[i + 1:]))


# ---------------------------------------------------------------------------
# piecewise-linear truncation radii
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PiecewiseLinearFunction:
    """Linear interpolation between nodes, constant beyond the first and last node."""
    breakpoints: Tuple[Fraction, ...]
    values: Tuple[Fraction, ...]

    def __post_init__(self):
        breakpoints = tuple(to_rational(b) for b in self.breakpoints)
        values = tuple(to_rational(v) for v in self.values)
        if not breakpoints:
            raise FunctionError("a piecewise-linear function needs at least one node")
        if len(values) != len(breakpoints):
            raise FunctionError(
                f"values has length {len(values)}, expected {len(breakpoints)} (one per breakpoint)")
        if not _strictly_increasing(breakpoints):
            raise FunctionError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", breakpoints)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, c) -> "PiecewiseLinearFunction":
        return cls((Fraction(0),), (to_rational(c),))

    def __call__(self, x) -> Fraction:
        return plf_eval(self, x)

    def is_nonnegative(self) -> bool:
        return min(self.values) >= 0


def truncation_radius(breakpoints: Sequence, values: Sequence) -> PiecewiseLinearFunction:
    """Build N and check it is usable as a truncation radius (N >= 0 everywhere)."""
    N = PiecewiseLinearFunction(tuple(breakpoints), tuple(values))
    if not N.is_nonnegative():
        raise FunctionError("truncation radius must be nonnegative")
    return N


def plf_eval(N: PiecewiseLinearFunction, x) -> Fraction:
    x = to_rational(x)
    bps, vals = N.breakpoints, N.values
    if x <= bps[0]:
        return vals[0]
    if x >= bps[-1]:
        return vals[-1]
    j = bisect_right(bps, x)
    x0, x1 = bps[j - 1], bps[j]
    v0, v1 = vals[j - 1], vals[j]
    return v0 + (v1 - v0) * (x - x0) / (x1 - x0)


def lipschitz_constant(N: PiecewiseLinearFunction) -> Fraction:
    """Largest |slope| over the segments; the constant extensions have slope 0."""
    bps, vals = N.breakpoints, N.values
    slopes = (abs((vals[i + 1] - vals[i]) / (bps[i + 1] - bps[i])) for i in range(len(bps) - 1))
    return max(slopes, default=Fraction(0))


# ---------------------------------------------------------------------------
# structured-text codecs (rationals as strings)
# ---------------------------------------------------------------------------

def step_function_to_dict(f: StepFunction) -> dict:
    f = canonicalize(f)
    return {
        "breakpoints": [format_rational(b) for b in f.breakpoints],
        "values": [format_rational(v) for v in f.values],
        "tails": {"left": format_rational(f.left_tail), "right": format_rational(f.right_tail)},
    }


def step_function_from_dict(data: dict) -> StepFunction:
    if not isinstance(data, dict):
        raise FunctionError("expected an object with fields 'breakpoints', 'values', 'tails'")
    for key in ("breakpoints", "values"):
        if key not in data:
            raise FunctionError(f"missing field '{key}'")
        if not isinstance(data[key], list):
            raise FunctionError(f"field '{key}' must be an array")
    tails = data.get("tails", {})
    if not isinstance(tails, dict):
        raise FunctionError("field 'tails' must be an object {left, right}")
    breakpoints = [_field_rational(v, f"breakpoints[{i}]") for i, v in enumerate(data["breakpoints"])]
    values = [_field_rational(v, f"values[{i}]") for i, v in enumerate(data["values"])]
    left = _field_rational(tails.get("left", "0"), "tails.left")
    right = _field_rational(tails.get("right", "0"), "tails.right")
    if breakpoints and len(values) != len(breakpoints) - 1:
        raise FunctionError(
            f"field 'values' has length {len(values)}, expected {len(breakpoints) - 1}")
    return StepFunction(tuple(breakpoints), tuple(values), left, right)


def plf_to_dict(N: PiecewiseLinearFunction) -> dict:
    return {
        "breakpoints": [format_rational(b) for b in N.breakpoints],
        "values": [format_rational(v) for v in N.values],
    }


def plf_from_dict(data: dict, as_radius: bool = True) -> PiecewiseLinearFunction:
    if not isinstance(data, dict):
        raise FunctionError("expected an object with fields 'breakpoints', 'values'")
    for key in ("breakpoints", "values"):
        if key not in data or not isinstance(data[key], list):
            raise FunctionError(f"field '{key}' must be an array")
    breakpoints = [_field_rational(v, f"breakpoints[{i}]") for i, v in enumerate(data["breakpoints"])]
    values = [_field_rational(v, f"values[{i}]") for i, v in enumerate(data["values"])]
    if len(values) != len(breakpoints):
        raise FunctionError(f"field 'values' has length {len(values)}, expected {len(breakpoints)}")
    if as_radius:
        return truncation_radius(breakpoints, values)
    return PiecewiseLinearFunction(tuple(breakpoints), tuple(values))


def _field_rational(value, name: str) -> Fraction:
    if isinstance(value, int) and not isinstance(value, bool):
        return Fraction(value)
    if not isinstance(value, str):
        raise FunctionError(f"field '{name}' must be a rational string, got {value!r}")
    try:
        return to_rational(value)
    except ValueError as e:
        raise FunctionError(f"field '{name}': {e}") from e
