"""
Exact evaluation of the maximal operators at a rational point.

Every operator is a supremum of averages of |f| over intervals [a, b]
ranging over a polygonal admissible region in the (a, b) plane. On each cell
of the arrangement cut by the grid lines a = x_i, b = x_j (breakpoints of f)
and the region's boundary lines, the average (F(b) - F(a)) / (b - a) is a
ratio of affine functions, so its maximum over the cell sits at a vertex.
The evaluator therefore returns the largest of:

  * the averages at all admissible arrangement vertices,
  * the t -> 0 limit (the normalization floor),
  * the t -> infinity limit for the untruncated cone.

Vertices are ranked in float64 first; only those whose float upper bound can
still beat the best exact value are rebuilt and averaged as Fractions.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from functions import (
    Normalization,
    PiecewiseLinearFunction,
    StepFunction,
    absolute_value,
    float_primitive,
    normalized_value,
    one_sided_limits,
    plf_eval,
)
from numerics import format_rational, to_rational

ONE = Fraction(1)
ZERO = Fraction(0)


class RegionError(ValueError):
    """Raised for degenerate or ill-posed admissible regions."""


class HalfPlane(NamedTuple):
    """p*a + q*b <= r."""
    p: Fraction
    q: Fraction
    r: Fraction

    def holds(self, a, b) -> bool:
        return self.p * a + self.q * b <= self.r


# ---------------------------------------------------------------------------
# region variants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cone:
    """|x - y| <= alpha*t."""
    alpha: Fraction


@dataclass(frozen=True)
class TruncatedCone:
    """|x - y| <= alpha*t, t <= R."""
    alpha: Fraction
    R: Fraction


@dataclass(frozen=True)
class Diamond:
    """|y - x| + |t - R| <= R."""
    R: Fraction


@dataclass(frozen=True)
class RightHalf:
    """[x, x + s] with 0 < s <= 2A."""
    A: Fraction


@dataclass(frozen=True)
class LeftHalf:
    """[x - s, x] with 0 < s <= 2A."""
    A: Fraction


@dataclass(frozen=True)
class LipschitzCone:
    """|x - y| <= alpha*t <= alpha*N(x), the radius frozen at the base point."""
    alpha: Fraction
    N: PiecewiseLinearFunction


@dataclass(frozen=True)
class Region:
    variant: object
    x: Fraction

    def __post_init__(self):
        object.__setattr__(self, "x", to_rational(self.x))
        variant = self.variant
        alpha = getattr(variant, "alpha", ZERO)
        if alpha < 0:
            raise RegionError(f"alpha must be nonnegative, got {alpha}")
        for name in ("R", "A"):
            value = getattr(variant, name, None)
            if value is not None and value <= 0:
                raise RegionError(f"{name} must be positive, got {value}")
        if isinstance(variant, LipschitzCone) and plf_eval(variant.N, self.x) < 0:
            raise RegionError(f"truncation radius is negative at x={self.x}")

    @property
    def resolved(self):
        """LipschitzCone becomes the TruncatedCone with R = N(x) (or None if N(x) = 0)."""
        if isinstance(self.variant, LipschitzCone):
            radius = plf_eval(self.variant.N, self.x)
            if radius == 0:
                return None
            return TruncatedCone(self.variant.alpha, radius)
        return self.variant

    @property
    def unbounded_alpha(self) -> Optional[Fraction]:
        return self.variant.alpha if isinstance(self.variant, Cone) else None

    def half_planes(self) -> List[HalfPlane]:
        x = self.x
        variant = self.resolved
        constraints = [HalfPlane(ONE, -ONE, ZERO)]  # a <= b
        if variant is None:
            # N(x) = 0: only the apex, which is not an interval
            return constraints + [HalfPlane(ONE, ZERO, x), HalfPlane(-ONE, ZERO, -x),
                                  HalfPlane(ZERO, ONE, x), HalfPlane(ZERO, -ONE, -x)]
        if isinstance(variant, (Cone, TruncatedCone)):
            alpha = variant.alpha
            constraints.append(HalfPlane((1 + alpha) / 2, (1 - alpha) / 2, x))
            constraints.append(HalfPlane(-(1 - alpha) / 2, -(1 + alpha) / 2, -x))
            if isinstance(variant, TruncatedCone):
                constraints.append(HalfPlane(-ONE, ONE, 2 * variant.R))
        elif isinstance(variant, Diamond):
            R = variant.R
            constraints += [HalfPlane(-ONE, ZERO, -(x - 2 * R)), HalfPlane(ONE, ZERO, x),
                            HalfPlane(ZERO, -ONE, -x), HalfPlane(ZERO, ONE, x + 2 * R)]
        elif isinstance(variant, RightHalf):
            constraints += [HalfPlane(ONE, ZERO, x), HalfPlane(-ONE, ZERO, -x),
                            HalfPlane(ZERO, ONE, x + 2 * variant.A)]
        elif isinstance(variant, LeftHalf):
            constraints += [HalfPlane(ZERO, ONE, x), HalfPlane(ZERO, -ONE, -x),
                            HalfPlane(-ONE, ZERO, -(x - 2 * variant.A))]
        else:
            raise RegionError(f"unknown region variant {variant!r}")
        return constraints

    def admits(self, a, b) -> bool:
        return a < b and all(h.holds(a, b) for h in self.half_planes())


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------

class Witness(Enum):
    INTERVAL = "interval"
    NORMALIZATION_FLOOR = "normalization-floor"
    ASYMPTOTIC_TAIL = "asymptotic-tail"


@dataclass(frozen=True)
class EvalResult:
    value: Fraction
    witness: Witness
    interval: Optional[Tuple[Fraction, Fraction]] = None

    def describe(self) -> str:
        if self.witness is Witness.INTERVAL:
            a, b = self.interval
            return f"({format_rational(a)}, {format_rational(b)})"
        return self.witness.value


# ---------------------------------------------------------------------------
# the vertex engine
# ---------------------------------------------------------------------------

# vertex recipes: (kind, first, second) rebuilds a vertex exactly
GRID_PAIR, A_ON_LINE, B_ON_LINE, LINE_PAIR = range(4)

# relative float slack for the screening pass
SCREEN_EPS = 1e-9


def _lines(half_planes):
    """
    Distinct boundary lines, scaled so that duplicates compare equal.

    The diagonal a = b (always first) is dropped: no vertex on it is an interval.
    """
    seen = set()
    lines = []
    for p, q, r in half_planes:
        lead = p if p != 0 else q
        key = (p / abs(lead), q / abs(lead), r / abs(lead))
        if key not in seen:
            seen.add(key)
            lines.append(key)
    return lines[1:]


def _intersect(l1, l2):
    p1, q1, r1 = l1
    p2, q2, r2 = l2
    det = p1 * q2 - p2 * q1
    if det == 0:
        return None
    return (r1 * q2 - r2 * q1) / det, (p1 * r2 - p2 * r1) / det


@lru_cache(maxsize=256)
def _index_pairs(grid_size: int, line_count: int):
    grid_i, grid_k = np.triu_indices(grid_size, 1)
    cross_i, cross_k = (m.ravel() for m in np.meshgrid(np.arange(grid_size), np.arange(line_count),
                                                        indexing="ij"))
    line_i, line_k = np.triu_indices(line_count, 1)
    return grid_i, grid_k, cross_i, cross_k, line_i, line_k


class _VertexTable(NamedTuple):
    kind: np.ndarray
    first: np.ndarray
    second: np.ndarray
    a: np.ndarray
    b: np.ndarray


def _vertex_table(f: StepFunction, lines) -> _VertexTable:
    """Float images of every arrangement vertex, tagged with their exact recipe."""
    g = f.float_view[0] if f.breakpoints else np.zeros(0)
    p, q, r = (np.array([float(line[n]) for line in lines]) for n in range(3))
    grid_i, grid_k, cross_i, cross_k, line_i, line_k = _index_pairs(len(g), len(lines))

    parts = [(GRID_PAIR, grid_i, grid_k, g[grid_i], g[grid_k])]
    with np.errstate(divide="ignore", invalid="ignore"):
        keep = q[cross_k] != 0
        i, k = cross_i[keep], cross_k[keep]
        parts.append((A_ON_LINE, i, k, g[i], (r[k] - p[k] * g[i]) / q[k]))
        keep = p[cross_k] != 0
        i, k = cross_i[keep], cross_k[keep]
        parts.append((B_ON_LINE, i, k, (r[k] - q[k] * g[i]) / p[k], g[i]))
        det = p[line_i] * q[line_k] - p[line_k] * q[line_i]
        keep = det != 0
        i, k, det = line_i[keep], line_k[keep], det[keep]
        parts.append((LINE_PAIR, i, k, (r[i] * q[k] - r[k] * q[i]) / det,
                      (p[i] * r[k] - p[k] * r[i]) / det))

    return _VertexTable(
        np.concatenate([np.full(len(i), kind) for kind, i, _, _, _ in parts]),
        np.concatenate([i for _, i, _, _, _ in parts]),
        np.concatenate([k for _, _, k, _, _ in parts]),
        np.concatenate([a for _, _, _, a, _ in parts]),
        np.concatenate([b for _, _, _, _, b in parts]),
    )


def _exact_vertex(kind: int, first: int, second: int, grid, lines):
    if kind == GRID_PAIR:
        return grid[first], grid[second]
    if kind == A_ON_LINE:
        p, q, r = lines[second]
        a = grid[first]
        return a, (r - p * a) / q
    if kind == B_ON_LINE:
        p, q, r = lines[second]
        b = grid[first]
        return (r - q * b) / p, b
    return _intersect(lines[first], lines[second])


def candidate_vertices(f: StepFunction, region: Region) -> List[Tuple[Fraction, Fraction]]:
    """
    Admissible vertices (a < b) of the arrangement of the grid lines
    a = x_i, b = x_j with the region's boundary lines, sorted lexicographically.
    """
    half_planes = region.half_planes()
    lines = _lines(half_planes)
    grid = f.breakpoints
    table = _vertex_table(f, lines)
    points = set()
    for kind, first, second in zip(table.kind.tolist(), table.first.tolist(), table.second.tolist()):
        point = _exact_vertex(kind, first, second, grid, lines)
        if point is not None:
            points.add(point)
    return sorted((a, b) for a, b in points
                  if a < b and all(h.holds(a, b) for h in half_planes))


def _best_vertex(f: StepFunction, half_planes) -> Optional[Tuple[Fraction, Tuple[Fraction, Fraction]]]:
    """
    Exact (value, (a, b)) of the best admissible vertex, or None.

    Vertices are screened in float: the ones clearly outside the region are
    dropped, the rest are visited by decreasing upper bound on their average
    and confirmed in Fraction arithmetic. The scan stops once no remaining
    bound can reach the best exact value, so ties still resolve to the
    lexicographically smallest vertex.
    """
    lines = _lines(half_planes)
    table = _vertex_table(f, lines)
    a, b = table.a, table.b
    if a.size == 0:
        return None

    spread = 1.0 + np.abs(a) + np.abs(b)
    with np.errstate(invalid="ignore", over="ignore"):
        feasible = np.isfinite(a) & np.isfinite(b) & (b - a > -SCREEN_EPS * spread)
        for h in half_planes:
            hp, hq, hr = float(h.p), float(h.q), float(h.r)
            feasible &= hp * a + hq * b <= hr + SCREEN_EPS * (spread + abs(hr))
    index = np.flatnonzero(feasible)
    if index.size == 0:
        return None

    a, b, spread = a[index], b[index], spread[index]
    width = b - a
    top = float(np.max(f.float_view[2]))
    with np.errstate(divide="ignore", invalid="ignore"):
        average = (float_primitive(f, b) - float_primitive(f, a)) / width
        bound = average + SCREEN_EPS * top * (1.0 + spread / np.abs(width)) + SCREEN_EPS * (1.0 + top)
    bound = np.where(np.isfinite(bound) & (width > 0), bound, np.inf)

    grid = f.breakpoints
    kinds, firsts, seconds = table.kind[index], table.first[index], table.second[index]
    best_value, best_interval, best_float = None, None, -np.inf
    for n in np.argsort(-bound, kind="stable").tolist():
        if bound[n] < best_float:
            break
        point = _exact_vertex(int(kinds[n]), int(firsts[n]), int(seconds[n]), grid, lines)
        if point is None:
            continue
        lo, hi = point
        if not (lo < hi and all(h.holds(lo, hi) for h in half_planes)):
            continue
        value = f.integral(lo, hi) / (hi - lo)
        if best_value is None or value > best_value or (value == best_value and point < best_interval):
            best_value, best_interval, best_float = value, point, float(value)
    if best_value is None:
        return None
    return best_value, best_interval


def asymptotic_sup(f: StepFunction, alpha, x=None) -> Fraction:
    """
    Supremum of the averages of |f| as t -> infinity inside Cone(alpha).

    The limit averages are lam*c_minus + (1 - lam)*c_plus with lam ranging over
    [max(0, (1-alpha)/2), min(1, (1+alpha)/2)]; the maximum sits at an end.
    The base point does not affect the limit.
    """
    alpha = to_rational(alpha)
    c_minus, c_plus = abs(f.left_tail), abs(f.right_tail)
    lam_lo = max(ZERO, (1 - alpha) / 2)
    lam_hi = min(ONE, (1 + alpha) / 2)
    return max(lam * c_minus + (1 - lam) * c_plus for lam in (lam_lo, lam_hi))


def floor_value(f: StepFunction, region: Region) -> Fraction:
    """The t -> 0 limit of the admissible averages of f (f already nonnegative)."""
    variant = region.variant
    if isinstance(variant, RightHalf):
        return one_sided_limits(f, region.x)[1]
    if isinstance(variant, LeftHalf):
        return one_sided_limits(f, region.x)[0]
    if isinstance(variant, Diamond):
        return normalized_value(f, region.x, mode=Normalization.NORM_ONE)
    # alpha > 1 shares the alpha = 1 floor (the limsup)
    alpha = min(variant.alpha, ONE)
    return normalized_value(f, region.x, alpha, Normalization.NORM_ALPHA)


def eval_max_average(f: StepFunction, region: Region) -> EvalResult:
    """
    Exact supremum of average(f, a, b) over the region; f must be nonnegative.

    Ties go to the vertex branch, and among vertices to the
    lexicographically smallest (a, b).
    """
    best = _best_vertex(f, region.half_planes())
    result = None if best is None else EvalResult(best[0], Witness.INTERVAL, best[1])

    floor = floor_value(f, region)
    if result is None or floor > result.value:
        result = EvalResult(floor, Witness.NORMALIZATION_FLOOR)

    alpha = region.unbounded_alpha
    if alpha is not None:
        tail = asymptotic_sup(f, alpha)
        if tail > result.value:
            result = EvalResult(tail, Witness.ASYMPTOTIC_TAIL)
    return result


# ---------------------------------------------------------------------------
# the operators
# ---------------------------------------------------------------------------

def eval_nontangential(f: StepFunction, alpha, x) -> EvalResult:
    """M^alpha f(x); alpha = 0 is the centered M, alpha = 1 the uncentered one."""
    alpha = to_rational(alpha)
    if alpha < 0:
        raise RegionError(f"alpha must be nonnegative, got {alpha}")
    return eval_max_average(absolute_value(f), Region(Cone(alpha), x))


def eval_centered(f: StepFunction, x) -> EvalResult:
    return eval_nontangential(f, ZERO, x)


def eval_uncentered(f: StepFunction, x) -> EvalResult:
    return eval_nontangential(f, ONE, x)


def eval_uncentered_truncated(f: StepFunction, R, x) -> EvalResult:
    """M^1_{=R} f(x): intervals containing x of length at most 2R."""
    return eval_max_average(absolute_value(f), Region(TruncatedCone(ONE, to_rational(R)), x))


def eval_diamond(f: StepFunction, R, x) -> EvalResult:
    """sup of u(z, t) over |z - x| + |t - R| <= R."""
    return eval_max_average(absolute_value(f), Region(Diamond(to_rational(R)), x))


def eval_one_sided(f: StepFunction, A, x, side: str) -> EvalResult:
    """M_{r,A} (side='right') or M_{l,A} (side='left')."""
    A = to_rational(A)
    if side == "right":
        variant = RightHalf(A)
    elif side == "left":
        variant = LeftHalf(A)
    else:
        raise RegionError(f"side must be 'left' or 'right', got {side!r}")
    return eval_max_average(absolute_value(f), Region(variant, x))


def eval_lipschitz_truncated(f: StepFunction, N: PiecewiseLinearFunction, x) -> EvalResult:
    """M^1_N f(x) with t <= N(x)."""
    return eval_mixed(f, ONE, N, x)


def eval_mixed(f: StepFunction, alpha, N: PiecewiseLinearFunction, x) -> EvalResult:
    """M^alpha_N f(x): |x - y| <= alpha*t <= alpha*N(x)."""
    alpha = to_rational(alpha)
    if not 0 <= alpha <= 1:
        raise RegionError(f"alpha must lie in [0, 1] for the mixed operator, got {alpha}")
    return eval_max_average(absolute_value(f), Region(LipschitzCone(alpha, N), x))


# ---------------------------------------------------------------------------
# operator bundle consumed by analysis and the CLI
# ---------------------------------------------------------------------------

class OperatorKind(Enum):
    CONE = "cone"
    TRUNCATED = "truncated"
    DIAMOND = "diamond"
    ONE_SIDED = "one-sided"
    LIPSCHITZ = "lipschitz"
    MIXED = "mixed"


@dataclass(frozen=True)
class MaximalOperator:
    kind: OperatorKind
    alpha: Fraction = ONE
    radius: Optional[Fraction] = None
    truncation: Optional[PiecewiseLinearFunction] = None
    side: str = "right"

    @classmethod
    def cone(cls, alpha) -> "MaximalOperator":
        return cls(OperatorKind.CONE, alpha=to_rational(alpha))

    @classmethod
    def truncated(cls, R) -> "MaximalOperator":
        return cls(OperatorKind.TRUNCATED, radius=to_rational(R))

    @classmethod
    def diamond(cls, R) -> "MaximalOperator":
        return cls(OperatorKind.DIAMOND, radius=to_rational(R))

    @classmethod
    def one_sided(cls, A, side: str) -> "MaximalOperator":
        return cls(OperatorKind.ONE_SIDED, radius=to_rational(A), side=side)

    @classmethod
    def lipschitz(cls, N: PiecewiseLinearFunction) -> "MaximalOperator":
        return cls(OperatorKind.LIPSCHITZ, truncation=N)

    @classmethod
    def mixed(cls, alpha, N: PiecewiseLinearFunction) -> "MaximalOperator":
        return cls(OperatorKind.MIXED, alpha=to_rational(alpha), truncation=N)

    def evaluate(self, f: StepFunction, x) -> EvalResult:
        kind = self.kind
        if kind is OperatorKind.CONE:
            return eval_nontangential(f, self.alpha, x)
        if kind in (OperatorKind.TRUNCATED, OperatorKind.DIAMOND, OperatorKind.ONE_SIDED) \
                and self.radius is None:
            raise RegionError(f"operator '{kind.value}' needs a truncation radius")
        if kind is OperatorKind.TRUNCATED:
            return eval_uncentered_truncated(f, self.radius, x)
        if kind is OperatorKind.DIAMOND:
            return eval_diamond(f, self.radius, x)
        if kind is OperatorKind.ONE_SIDED:
            return eval_one_sided(f, self.radius, x, self.side)
        if self.truncation is None:
            raise RegionError(f"operator '{kind.value}' needs a truncation function N")
        if kind is OperatorKind.LIPSCHITZ:
            return eval_lipschitz_truncated(f, self.truncation, x)
        return eval_mixed(f, self.alpha, self.truncation, x)

    def value(self, f: StepFunction, x) -> Fraction:
        return self.evaluate(f, x).value

    def tail_limit(self, f: StepFunction, side: str) -> Fraction:
        """Limit of the maximal function as x -> -inf (side='left') or +inf."""
        tail = abs(f.left_tail) if side == "left" else abs(f.right_tail)
        if self.kind is OperatorKind.CONE:
            return max(tail, asymptotic_sup(f, self.alpha))
        return tail

    @property
    def label(self) -> str:
        kind = self.kind
        if kind is OperatorKind.CONE:
            return f"M^{format_rational(self.alpha)}"
        if kind is OperatorKind.TRUNCATED:
            return f"M^1_(R={format_rational(self.radius)})"
        if kind is OperatorKind.DIAMOND:
            return f"diamond(R={format_rational(self.radius)})"
        if kind is OperatorKind.ONE_SIDED:
            return f"M_({self.side[0]},A={format_rational(self.radius)})"
        if kind is OperatorKind.LIPSCHITZ:
            return "M^1_N"
        return f"M^{format_rational(self.alpha)}_N"
