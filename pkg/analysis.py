"""
Analysis built on pointwise evaluation of the maximal operators:
detachment sets and their shapes, variation of maximal functions,
the counterexample constructions, weak-type ratios, the B(alpha) ratio,
the lemma checks and the seeded property-test corpora.
"""
from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from functions import (
    PiecewiseLinearFunction,
    StepFunction,
    absolute_value,
    average,
    canonicalize,
    float_primitive,
    is_single_peak,
    l1_norm,
    one_sided_limits,
    support_hull,
    total_variation,
    truncation_radius,
)
from maximal import (
    MaximalOperator,
    eval_diamond,
    eval_lipschitz_truncated,
    eval_nontangential,
    eval_one_sided,
    eval_uncentered_truncated,
)
from numerics import (
    bisect_bracket,
    depth_for,
    is_finite,
    minimize_unimodal,
    to_rational,
)

HALF = Fraction(1, 2)


class AnalysisError(ValueError):
    """Raised when an analysis precondition fails (bad window, constant f, ...)."""


@dataclass(frozen=True)
class AnalysisConfig:
    tol: Fraction = Fraction(1, 2 ** 40)
    component_points: int = 257
    scan_density: int = 16
    initial_level: int = 6
    refinements: int = 4
    partition_cap: int = 4097
    search_depth: int = 64
    split_rounds: int = 3


DEFAULT_CONFIG = AnalysisConfig()


class Shape(Enum):
    MONOTONE = "monotone"
    V_SHAPED = "v-shaped"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class DetachmentComponent:
    """
    One component of {M f > f} inside the scan window.

    lo/hi are the detached-side ends of the located brackets (inside the
    component); lo_outer/hi_outer are the attached-side ends, None when the
    window clipped that side.
    """
    lo: Fraction
    hi: Fraction
    lo_clipped: bool
    hi_clipped: bool
    lo_outer: Optional[Fraction] = None
    hi_outer: Optional[Fraction] = None
    endpoint_values: Tuple[Fraction, Fraction] = (Fraction(0), Fraction(0))
    shape: Optional[Shape] = None
    vertex_point: Optional[Fraction] = None
    vertex_value: Optional[Fraction] = None
    sampled_variation: Optional[Fraction] = None

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class VariationReport:
    lower_bound: Fraction
    structural_value: Optional[Fraction]
    tolerance: Fraction
    partition_size: int
    converged: bool
    history: Tuple[Fraction, ...] = ()
    components: Tuple[DetachmentComponent, ...] = ()

    @property
    def consistent(self) -> bool:
        if self.structural_value is None:
            return True
        return self.lower_bound <= self.structural_value + self.tolerance


class MaximalSampler:
    """Memoized x -> M f(x) for one (f, operator) pair, plus the attachment test."""

    def __init__(self, f: StepFunction, op: MaximalOperator):
        self.f = f
        self.abs_f = absolute_value(f)
        self.op = op
        self._cache: Dict[Fraction, Fraction] = {}

    def __call__(self, x) -> Fraction:
        x = Fraction(x)
        value = self._cache.get(x)
        if value is None:
            value = self.op.value(self.abs_f, x)
            self._cache[x] = value
        return value

    def limsup(self, x) -> Fraction:
        return max(one_sided_limits(self.abs_f, x))

    def detached(self, x) -> bool:
        """
        M f(x) > f~(x) under the tilde normalization, which reduces to
        M f(x) > limsup |f| at x: if M f(x) <= limsup the point is attached.
        """
        return self(x) > self.limsup(x)


def is_detached(f: StepFunction, op: MaximalOperator, x) -> bool:
    return MaximalSampler(f, op).detached(to_rational(x))


def _sampler_for(f, op, sampler=None) -> MaximalSampler:
    if sampler is not None and sampler.f == f and sampler.op == op:
        return sampler
    return MaximalSampler(f, op)


def _window(window) -> Tuple[Fraction, Fraction]:
    lo, hi = (to_rational(w) for w in window)
    if lo >= hi:
        raise AnalysisError(f"degenerate window ({lo}, {hi})")
    return lo, hi


def _linspace(lo, hi, count: int) -> List[Fraction]:
    if count < 2:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + step * k for k in range(count)]


def _nonincreasing(values) -> bool:
    return all(q <= p for p, q in zip(values, values[1:]))


def _nondecreasing(values) -> bool:
    return all(q >= p for p, q in zip(values, values[1:]))


def _path_variation(values) -> Fraction:
    return sum((abs(q - p) for p, q in zip(values, values[1:])), Fraction(0))


def default_window(f: StepFunction) -> Tuple[Fraction, Fraction]:
    """[min bp - D - 1, max bp + D + 1], D the support diameter."""
    hull = support_hull(f)
    if hull is None:
        return Fraction(-1), Fraction(1)
    first, last = hull
    diameter = last - first
    return first - diameter - 1, last + diameter + 1


# ---------------------------------------------------------------------------
# variation
# ---------------------------------------------------------------------------

def variation_lower_bound(evaluate: Callable[[Fraction], Fraction], partition: Sequence) -> Fraction:
    """Exact partition sum of |evaluate(x_{i+1}) - evaluate(x_i)|."""
    points = [to_rational(p) for p in partition]
    if len(points) < 2:
        raise AnalysisError("a partition needs at least two points")
    if any(q <= p for p, q in zip(points, points[1:])):
        raise AnalysisError("partition must be strictly increasing")
    return _path_variation([evaluate(p) for p in points])


# ---------------------------------------------------------------------------
# detachment sets
# ---------------------------------------------------------------------------

def _scan_points(f: StepFunction, lo, hi, density: int) -> List[Fraction]:
    anchors = [lo] + [b for b in f.breakpoints if lo < b < hi] + [hi]
    points = set(anchors)
    for left, right in zip(anchors, anchors[1:]):
        step = (right - left) / (density + 1)
        points.update(left + step * k for k in range(1, density + 1))
    return sorted(points)


def _locate(sampler: MaximalSampler, attached, detached, tol) -> Tuple[Fraction, Fraction]:
    """Bisect the attached/detached transition; returns (attached end, detached end)."""
    lo, hi = min(attached, detached), max(attached, detached)
    depth = max(1, depth_for(hi - lo, tol))
    b_lo, b_hi = bisect_bracket(lambda z: 1 if sampler.detached(z) else -1, lo, hi, depth)
    if attached < detached:
        return b_lo, b_hi
    return b_hi, b_lo


def _scan_components(sampler, points, tol) -> List[DetachmentComponent]:
    status = [sampler.detached(p) for p in points]
    components = []
    n = len(points)
    i = 0
    while i < n:
        if not status[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and status[j + 1]:
            j += 1
        if i == 0:
            lo, lo_outer, lo_clipped = points[0], None, True
        else:
            lo_outer, lo = _locate(sampler, points[i - 1], points[i], tol)
            lo_clipped = False
        if j == n - 1:
            hi, hi_outer, hi_clipped = points[-1], None, True
        else:
            hi_outer, hi = _locate(sampler, points[j + 1], points[j], tol)
            hi_clipped = False
        components.append(DetachmentComponent(
            lo=lo, hi=hi, lo_clipped=lo_clipped, hi_clipped=hi_clipped,
            lo_outer=lo_outer, hi_outer=hi_outer,
            endpoint_values=(sampler(lo), sampler(hi)),
        ))
        i = j + 1
    return components


def _hidden_attached_points(sampler, component, config) -> List[Fraction]:
    """Attached sample points inside a component, and attached peaks of sampled local maxima."""
    if component.lo >= component.hi:
        return []
    samples = _linspace(component.lo, component.hi, config.component_points)
    found = [p for p in samples[1:-1] if not sampler.detached(p)]
    if found:
        return found
    values = [sampler(p) for p in samples]
    for k in range(1, len(samples) - 1):
        if values[k - 1] < values[k] >= values[k + 1]:
            peak, _ = minimize_unimodal(lambda z: -sampler(z), samples[k - 1], samples[k + 1],
                                        config.search_depth)
            if not sampler.detached(peak):
                found.append(peak)
    return found


def detachment_set(f: StepFunction, op: MaximalOperator, window, tol=None, scan_density: int = None,
                   config: AnalysisConfig = DEFAULT_CONFIG, sampler: MaximalSampler = None
                   ) -> List[DetachmentComponent]:
    """
    Components of {M f > f~} within the window, endpoints located by
    bisection to width <= tol. The scan visits every breakpoint plus
    scan_density equispaced points per piece; components that hide an
    attached point are split there and re-located.
    """
    lo, hi = _window(window)
    tol = config.tol if tol is None else to_rational(tol)
    density = config.scan_density if scan_density is None else scan_density
    sampler = _sampler_for(f, op, sampler)

    points = _scan_points(sampler.abs_f, lo, hi, density)
    components = _scan_components(sampler, points, tol)
    for _ in range(config.split_rounds):
        known = set(points)
        extra = {p for c in components for p in _hidden_attached_points(sampler, c, config)} - known
        if not extra:
            break
        points = sorted(known | extra)
        components = _scan_components(sampler, points, tol)
    return components


def classify_shape(f: StepFunction, op: MaximalOperator, component: DetachmentComponent,
                   count: int = None, config: AnalysisConfig = DEFAULT_CONFIG,
                   sampler: MaximalSampler = None) -> DetachmentComponent:
    """
    Monotone if the sampled maximal function is monotone, V-shaped if it
    decreases then increases (the vertex refined by ternary search),
    Undetermined otherwise (an interior local maximum).
    """
    sampler = _sampler_for(f, op, sampler)
    count = config.component_points if count is None else count
    if component.lo >= component.hi:
        return replace(component, shape=Shape.MONOTONE, sampled_variation=Fraction(0))

    points = _linspace(component.lo, component.hi, count)
    values = [sampler(p) for p in points]
    sampled_variation = _path_variation(values)

    if _nonincreasing(values) or _nondecreasing(values):
        return replace(component, shape=Shape.MONOTONE, sampled_variation=sampled_variation)

    k = values.index(min(values))
    if _nonincreasing(values[:k + 1]) and _nondecreasing(values[k:]):
        left, right = points[max(k - 1, 0)], points[min(k + 1, len(points) - 1)]
        vertex, vertex_value = minimize_unimodal(sampler, left, right, config.search_depth)
        if values[k] < vertex_value:
            vertex, vertex_value = points[k], values[k]
        return replace(component, shape=Shape.V_SHAPED, vertex_point=vertex,
                       vertex_value=vertex_value, sampled_variation=sampled_variation)

    return replace(component, shape=Shape.UNDETERMINED, sampled_variation=sampled_variation)


def _component_variation(sampler, component) -> Fraction:
    low_end, high_end = sampler(component.lo), sampler(component.hi)
    if component.shape is Shape.MONOTONE:
        return abs(high_end - low_end)
    if component.shape is Shape.V_SHAPED:
        return (low_end - component.vertex_value) + (high_end - component.vertex_value)
    return component.sampled_variation


def _attached_variation(sampler, start, stop) -> Fraction:
    """
    Variation of M f over an attached stretch [start, stop]: there M f = f~,
    which sits between neighbouring levels at breakpoints, so only the jumps
    between the levels met on (start, stop) count.
    """
    if start >= stop:
        return Fraction(0)
    bps = sampler.abs_f.breakpoints
    levels = sampler.abs_f.levels
    first, last = bisect_right(bps, start), bisect_left(bps, stop)
    path = [sampler(start)] + list(levels[first:last + 1]) + [sampler(stop)]
    return _path_variation(path)


def maximal_variation(f: StepFunction, op: MaximalOperator, window=None, tol=None,
                      config: AnalysisConfig = DEFAULT_CONFIG) -> VariationReport:
    """
    Variation of M f, two ways.

    structural_value: component-wise (monotone -> |end difference|,
    V-shaped -> descent plus ascent) plus the level jumps over the attached
    set plus the tails beyond the window.

    lower_bound: exact partition sum over breakpoints, component ends,
    vertices, two far points and nested dyadic grids of the window,
    refined until the increment drops below tol.
    """
    tol = config.tol if tol is None else to_rational(tol)
    abs_f = canonicalize(absolute_value(f))
    if not abs_f.breakpoints:
        return VariationReport(Fraction(0), Fraction(0), tol, 0, True, (Fraction(0),))

    if window is None:
        lo, hi = default_window(f)
    else:
        lo, hi = _window(window)
        first, last = support_hull(f)
        diameter = last - first
        if lo > first - diameter or hi < last + diameter:
            raise AnalysisError(
                f"window ({lo}, {hi}) must contain [{first - diameter}, {last + diameter}] "
                f"(the support padded by its diameter)")

    sampler = MaximalSampler(f, op)
    components = [classify_shape(f, op, c, config=config, sampler=sampler)
                  for c in detachment_set(f, op, (lo, hi), tol, config=config, sampler=sampler)]

    structural = abs(sampler(lo) - op.tail_limit(f, "left"))
    gap_start = lo
    for c in components:
        if not c.lo_clipped:
            structural += _attached_variation(sampler, gap_start, c.lo_outer)
            structural += abs(sampler(c.lo_outer) - sampler(c.lo))
        structural += _component_variation(sampler, c)
        if c.hi_clipped:
            gap_start = None
        else:
            structural += abs(sampler(c.hi) - sampler(c.hi_outer))
            gap_start = c.hi_outer
    if gap_start is not None:
        structural += _attached_variation(sampler, gap_start, hi)
    structural += abs(sampler(hi) - op.tail_limit(f, "right"))

    far = (hi - lo) / tol
    base = {lo, hi, lo - far, hi + far}
    base.update(b for b in f.breakpoints if lo < b < hi)
    for c in components:
        base.update(p for p in (c.lo, c.hi, c.lo_outer, c.hi_outer, c.vertex_point) if p is not None)

    history = []
    level = config.initial_level
    converged = False
    partition = sorted(base)
    while True:
        n = 1 << level
        grid = {lo + (hi - lo) * k / n for k in range(n + 1)}
        partition = sorted(base | grid)
        history.append(variation_lower_bound(sampler, partition))
        if len(history) > 1 and history[-1] - history[-2] < tol:
            converged = True
            break
        if len(history) >= config.refinements or len(base) + (2 << level) + 1 > config.partition_cap:
            break
        level += 1

    return VariationReport(
        lower_bound=history[-1],
        structural_value=structural,
        tolerance=tol,
        partition_size=len(partition),
        converged=converged,
        history=tuple(history),
        components=tuple(components),
    )


def balpha_ratio(f: StepFunction, alpha, window=None, tol=None,
                 config: AnalysisConfig = DEFAULT_CONFIG) -> Fraction:
    """Certified lower bound for B(alpha): lower bound of V(M^alpha f) over V(f)."""
    variation = total_variation(f)
    if variation == 0:
        raise AnalysisError("B(alpha) ratio is undefined for a constant function")
    report = maximal_variation(f, MaximalOperator.cone(alpha), window, tol, config)
    return report.lower_bound / variation


# ---------------------------------------------------------------------------
# extremizers, monotonicity in alpha, endpoint attachment
# ---------------------------------------------------------------------------

def variation_slack(f: StepFunction, tol) -> Fraction:
    """Allowance when comparing structural values located at tolerance tol."""
    return 2 * to_rational(tol) * (1 + total_variation(f))


class ExtremizerCheck(NamedTuple):
    alpha: Fraction
    variation: Fraction
    structural_value: Fraction
    lower_bound: Fraction

    @property
    def gap(self) -> Fraction:
        return abs(self.structural_value - self.variation)


def check_extremizer(f: StepFunction, alpha, config: AnalysisConfig = DEFAULT_CONFIG) -> ExtremizerCheck:
    """V(M^alpha f) next to V(f) for a single-peak f; the two agree for alpha > 1/3."""
    if not is_single_peak(f):
        raise AnalysisError("the extremizer check needs a single-peak f "
                            "(non-decreasing, then non-increasing, equal tails)")
    alpha = to_rational(alpha)
    report = maximal_variation(f, MaximalOperator.cone(alpha), config=config)
    return ExtremizerCheck(alpha, total_variation(f), report.structural_value, report.lower_bound)


def verify_extremizer(f: StepFunction, alpha, config: AnalysisConfig = DEFAULT_CONFIG) -> bool:
    check = check_extremizer(f, alpha, config)
    return check.gap <= variation_slack(f, config.tol) and check.lower_bound <= check.variation


def alpha_monotonicity_violations(f: StepFunction, alphas: Sequence, config: AnalysisConfig = DEFAULT_CONFIG
                                  ) -> List[Tuple[Fraction, Fraction, Fraction, Fraction]]:
    """
    (alpha, beta, V_alpha, V_beta) for every alpha < beta whose structural
    values break V(M^beta f) <= V(M^alpha f) by more than the slack.
    """
    ladder = sorted({to_rational(a) for a in alphas})
    structural = {alpha: maximal_variation(f, MaximalOperator.cone(alpha), config=config).structural_value
                  for alpha in ladder}
    slack = variation_slack(f, config.tol)
    return [(alpha, beta, structural[alpha], structural[beta])
            for i, alpha in enumerate(ladder) for beta in ladder[i + 1:]
            if structural[beta] > structural[alpha] + slack]


class AttachmentGap(NamedTuple):
    inner: Fraction
    outer: Fraction
    gap: Fraction


def _attached_reference(sampler: MaximalSampler, inner, outer) -> Fraction:
    """f~ at the true end inside the bracket: M f at a breakpoint there, else the piece value."""
    lo, hi = min(inner, outer), max(inner, outer)
    bps = sampler.abs_f.breakpoints
    k = bisect_left(bps, lo)
    if k < len(bps) and bps[k] <= hi:
        return sampler(bps[k])
    return sampler.abs_f.value_at(inner)


def endpoint_attachment_gaps(f: StepFunction, op: MaximalOperator, window=None,
                             config: AnalysisConfig = DEFAULT_CONFIG, sampler: MaximalSampler = None
                             ) -> List[AttachmentGap]:
    """|M f(inner) - f~(end)| for every end of a detachment component the window did not clip."""
    sampler = _sampler_for(f, op, sampler)
    window = default_window(f) if window is None else window
    gaps = []
    for c in detachment_set(f, op, window, config=config, sampler=sampler):
        ends = [(c.lo, c.lo_outer)] if not c.lo_clipped else []
        if not c.hi_clipped:
            ends.append((c.hi, c.hi_outer))
        for inner, outer in ends:
            gaps.append(AttachmentGap(inner, outer, abs(sampler(inner) - _attached_reference(sampler, inner, outer))))
    return gaps


def attachment_slack(f: StepFunction, tol) -> Fraction:
    """tol * 2^20 * max(1, sup|f|)."""
    return to_rational(tol) * 2 ** 20 * max(Fraction(1), max(abs(v) for v in f.levels))


def verify_endpoint_attachment(f: StepFunction, op: MaximalOperator, window=None,
                               config: AnalysisConfig = DEFAULT_CONFIG, slack=None) -> bool:
    slack = attachment_slack(f, config.tol) if slack is None else to_rational(slack)
    return all(g.gap <= slack for g in endpoint_attachment_gaps(f, op, window, config))


# ---------------------------------------------------------------------------
# counterexample constructions
# ---------------------------------------------------------------------------

def make_spike_pair(n: int) -> StepFunction:
    """f_n = n * (chi_[0, 1/n] + chi_[1 - 1/n, 1])."""
    if n < 2:
        raise AnalysisError("the spike pair needs n >= 2")
    inv = Fraction(1, n)
    return StepFunction((Fraction(0), inv, 1 - inv, Fraction(1)), (n, 0, n))


class SpikeProfile(NamedTuple):
    n: int
    alpha: Fraction
    at_third: Fraction
    at_half: Fraction
    at_two_thirds: Fraction
    limit_at_third: Fraction

    @property
    def has_interior_maximum(self) -> bool:
        return (0 < self.at_third < self.at_half) and (self.at_half > self.at_two_thirds > 0)


def spike_pair_profile(alpha, n: int) -> SpikeProfile:
    """M^alpha f_n at 1/3, 1/2, 2/3 next to the limit 3(alpha+1)/2 at 1/3."""
    alpha = to_rational(alpha)
    f = make_spike_pair(n)
    at = [eval_nontangential(f, alpha, Fraction(k, 6)).value for k in (2, 3, 4)]
    return SpikeProfile(n, alpha, at[0], at[1], at[2], 3 * (alpha + 1) / 2)


def find_spike_counterexample(alpha, ns: Sequence[int] = (10, 100, 1000)) -> Optional[SpikeProfile]:
    """First n whose spike pair shows the interior local maximum at 1/2."""
    for n in ns:
        profile = spike_pair_profile(alpha, n)
        if profile.has_interior_maximum:
            return profile
    return None


def _divergence_nodes(beta: Fraction, bumps: int) -> List[Tuple[Fraction, Fraction]]:
    """(x'_K, x_K) for K = 0..bumps with x'_0 := 0."""
    x_k = 2 / (2 * beta + 1)
    pairs = [(Fraction(0), x_k)]
    for _ in range(bumps):
        x_prime = x_k + 1 / (beta - HALF)
        x_k = x_prime + 1 / (2 * beta + 1)
        pairs.append((x_prime, x_k))
    return pairs


def make_divergence_N(beta, bumps: int) -> PiecewiseLinearFunction:
    """
    N(0) = 1, N(x_0) = x_0/2 with x_0 = 2/(2 beta + 1); then for K >= 1
    N(x'_K) = (x'_K + 1)/2 and N(x_K) = x_K/2, linear in between and
    constant beyond the last node. Lip(N) = beta.
    """
    beta = to_rational(beta)
    if beta <= HALF:
        raise AnalysisError("the divergence construction needs beta > 1/2")
    if bumps < 1:
        raise AnalysisError("bumps must be at least 1")
    pairs = _divergence_nodes(beta, bumps)
    nodes = [(Fraction(0), Fraction(1)), (pairs[0][1], pairs[0][1] / 2)]
    for x_prime, x_k in pairs[1:]:
        nodes.append((x_prime, (x_prime + 1) / 2))
        nodes.append((x_k, x_k / 2))
    return truncation_radius([x for x, _ in nodes], [v for _, v in nodes])


class CertificateRow(NamedTuple):
    K: int
    x_prime: Fraction
    value: Fraction
    x_k: Fraction
    zero_value: Fraction
    expected: Fraction
    partial_sum: Fraction

    @property
    def verified(self) -> bool:
        return self.value == self.expected and self.zero_value == 0


@dataclass(frozen=True)
class DivergenceCertificate:
    beta: Fraction
    rows: Tuple[CertificateRow, ...]

    @property
    def verified(self) -> bool:
        return all(row.verified for row in self.rows)

    def partial_sum(self, K: int) -> Fraction:
        return self.rows[K].partial_sum

    @property
    def analytic_sum(self) -> Fraction:
        return sum((row.expected for row in self.rows), Fraction(0))


def divergence_certificate(beta, bumps: int) -> DivergenceCertificate:
    """
    Evaluate M^1_N chi_(-1,0) at x'_K and x_K for the divergence
    construction. S(K) = sum over j <= K of |M(x'_j) - M(x_j)|, a certified
    lower bound for V(M^1_N f) which equals sum 1/(x'_j + 1) when every row
    verifies.
    """
    beta = to_rational(beta)
    N = make_divergence_N(beta, bumps)
    f = StepFunction.indicator(-1, 0)
    rows = []
    running = Fraction(0)
    for K, (x_prime, x_k) in enumerate(_divergence_nodes(beta, bumps)):
        value = eval_lipschitz_truncated(f, N, x_prime).value
        zero_value = eval_lipschitz_truncated(f, N, x_k).value
        running += abs(value - zero_value)
        rows.append(CertificateRow(K, x_prime, value, x_k, zero_value, 1 / (x_prime + 1), running))
    return DivergenceCertificate(beta, tuple(rows))


# ---------------------------------------------------------------------------
# weak type
# ---------------------------------------------------------------------------

def weak_type_window(f: StepFunction, alpha, lam) -> Tuple[Fraction, Fraction]:
    """
    Beyond distance ||f||_1 * max(1, (1+alpha)/2) / lam from the support hull
    M^alpha f <= lam, so the window holds the whole superlevel set.
    """
    alpha, lam = to_rational(alpha), to_rational(lam)
    norm = l1_norm(f)
    hull = support_hull(f)
    if hull is None or not is_finite(norm):
        raise AnalysisError("the weak-type window needs a compactly supported f")
    reach = norm * max(Fraction(1), (1 + alpha) / 2) / lam + 1
    return hull[0] - reach, hull[1] + reach


def maximal_superlevel_measure(f: StepFunction, op: MaximalOperator, lam, window, grid_step=None,
                               tol=None, config: AnalysisConfig = DEFAULT_CONFIG) -> Fraction:
    """|{x in window : M f(x) > lam}| by a sign scan and bisection of every transition."""
    lam = to_rational(lam)
    if lam <= 0:
        raise AnalysisError("lambda must be positive")
    lo, hi = _window(window)
    tol = config.tol if tol is None else to_rational(tol)
    step = (hi - lo) / 256 if grid_step is None else to_rational(grid_step)
    if step <= 0:
        raise AnalysisError("grid step must be positive")
    sampler = MaximalSampler(f, op)

    count = math.ceil((hi - lo) / step)
    points = {lo + step * k for k in range(count)} | {hi}
    points.update(b for b in f.breakpoints if lo < b < hi)
    points = sorted(points)
    above = [sampler(p) > lam for p in points]

    def excess(z):
        return 1 if sampler(z) > lam else -1

    def boundary(inside, outside):
        left, right = min(inside, outside), max(inside, outside)
        b_lo, b_hi = bisect_bracket(excess, left, right, max(1, depth_for(right - left, tol)))
        return (b_lo + b_hi) / 2

    measure = Fraction(0)
    i, n = 0, len(points)
    while i < n:
        if not above[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and above[j + 1]:
            j += 1
        start = points[0] if i == 0 else boundary(points[i], points[i - 1])
        stop = points[-1] if j == n - 1 else boundary(points[j], points[j + 1])
        measure += stop - start
        i = j + 1
    return measure


def weak_type_ratio(f: StepFunction, alpha, lam, window=None, grid_step=None, tol=None,
                    config: AnalysisConfig = DEFAULT_CONFIG) -> Fraction:
    """lam * |{M^alpha f > lam}| / ||f||_1, a lower bound for C_alpha up to the location tolerance."""
    lam = to_rational(lam)
    if lam <= 0:
        raise AnalysisError("lambda must be positive")
    norm = l1_norm(f)
    if not is_finite(norm):
        raise AnalysisError("f must have finite L1 norm")
    if norm == 0:
        raise AnalysisError("f must have positive L1 norm")
    if window is None:
        window = weak_type_window(f, alpha, lam)
    measure = maximal_superlevel_measure(f, MaximalOperator.cone(alpha), lam, window, grid_step, tol, config)
    return lam * measure / norm


# ---------------------------------------------------------------------------
# lemma checks
# ---------------------------------------------------------------------------

def verify_bpl(f: StepFunction, x, y, t) -> bool:
    """
    u(y, t) <= max(u over [y - t, x], u over [x, y + t]) for 0 < |x - y| <= t.
    A zero-length side (|x - y| = t) drops out of the maximum.
    """
    x, y, t = (to_rational(v) for v in (x, y, t))
    if not 0 < abs(x - y) <= t:
        raise AnalysisError("verify_bpl needs 0 < |x - y| <= t")
    g = absolute_value(f)
    whole = average(g, y - t, y + t)
    sides = []
    if x > y - t:
        sides.append(average(g, y - t, x))
    if y + t > x:
        sides.append(average(g, x, y + t))
    return whole <= max(sides)


def verify_square_lemma(f: StepFunction, R, x) -> bool:
    """M^1_{=R} f(x) = diamond sup = max(M_{l,R} f(x), M_{r,R} f(x)), exactly."""
    R = to_rational(R)
    if R <= 0:
        raise AnalysisError("R must be positive")
    truncated = eval_uncentered_truncated(f, R, x).value
    diamond = eval_diamond(f, R, x).value
    one_sided = max(eval_one_sided(f, R, x, "left").value, eval_one_sided(f, R, x, "right").value)
    return truncated == diamond == one_sided


# ---------------------------------------------------------------------------
# seeded corpora and the brute-force oracle
# ---------------------------------------------------------------------------

def random_step_function(seed: int, max_pieces: int = 12, value_bound: int = 4, span_bound: int = 4,
                         denominator: int = 8, signed: bool = False) -> StepFunction:
    """
    Deterministic in seed. Breakpoints on the 1/denominator grid inside
    [-span_bound, span_bound], values on the 1/4 grid in [0, value_bound]
    (or [-value_bound, value_bound] when signed), zero tails.
    """
    if max_pieces < 1:
        raise AnalysisError("max_pieces must be at least 1")
    rng = np.random.default_rng(seed)
    pieces = int(rng.integers(1, max_pieces + 1))
    slots = 2 * span_bound * denominator + 1
    if pieces + 1 > slots:
        raise AnalysisError("span_bound * denominator is too small for max_pieces")
    ticks = np.sort(rng.choice(slots, size=pieces + 1, replace=False)) - span_bound * denominator
    breakpoints = tuple(Fraction(int(t), denominator) for t in ticks)
    value_denominator = 4
    low = -value_bound * value_denominator if signed else 0
    numerators = rng.integers(low, value_bound * value_denominator + 1, size=pieces)
    values = [Fraction(int(v), value_denominator) for v in numerators]
    if all(v == 0 for v in values):
        values[len(values) // 2] = Fraction(value_bound)
    return StepFunction(breakpoints, tuple(values))


def random_lipschitz_N(seed: int, lip_bound, window=(-4, 4), max_nodes: int = 8,
                       denominator: int = 8) -> PiecewiseLinearFunction:
    """
    Deterministic nonnegative N with Lip(N) = lip_bound exactly (the first
    segment climbs at lip_bound, the others use slopes in [-lip_bound, lip_bound]
    clipped at zero, which only flattens them).
    """
    lip = to_rational(lip_bound)
    if lip < 0:
        raise AnalysisError("lip_bound must be nonnegative")
    lo, hi = _window(window)
    rng = np.random.default_rng(seed)
    slots = int((hi - lo) * denominator) + 1
    count = min(int(rng.integers(2, max_nodes + 1)), slots)
    ticks = np.sort(rng.choice(slots, size=count, replace=False))
    xs = [lo + Fraction(int(t), denominator) for t in ticks]
    value = Fraction(int(rng.integers(0, 17)), 8)
    values = [value]
    for i in range(1, count):
        slope = lip if i == 1 else lip * Fraction(int(rng.integers(-8, 9)), 8)
        value = max(Fraction(0), value + slope * (xs[i] - xs[i - 1]))
        values.append(value)
    return truncation_radius(xs, values)


def corpus(count: int, seed: int = 0, **kwargs) -> List[StepFunction]:
    return [random_step_function(seed + i, **kwargs) for i in range(count)]


def lipschitz_corpus(count: int, lip_bound, seed: int = 0, **kwargs) -> List[PiecewiseLinearFunction]:
    return [random_lipschitz_N(seed + i, lip_bound, **kwargs) for i in range(count)]


def random_single_peak(seed: int, **kwargs) -> StepFunction:
    """A corpus member with its values rearranged to rise and then fall."""
    f = random_step_function(seed, **kwargs)
    ordered = sorted(f.values)
    return StepFunction(f.breakpoints, tuple(ordered[::2] + ordered[1::2][::-1]))


def single_peak_corpus(count: int, seed: int = 0, **kwargs) -> List[StepFunction]:
    return [random_single_peak(seed + i, **kwargs) for i in range(count)]


def make_spike_train(spikes: int, n: int, spacing=1) -> StepFunction:
    """Unit-mass spikes n * chi_[k*spacing, k*spacing + 1/n], k < spikes."""
    if spikes < 1 or n < 1:
        raise AnalysisError("a spike train needs spikes >= 1 and n >= 1")
    spacing, width = to_rational(spacing), Fraction(1, n)
    if width >= spacing:
        raise AnalysisError("spikes must not touch: 1/n must be below the spacing")
    breakpoints, values = [], []
    for k in range(spikes):
        start = k * spacing
        breakpoints += [start, start + width]
        values += [Fraction(n), Fraction(0)]
    return StepFunction(tuple(breakpoints), tuple(values[:-1]))


def make_attachment_example(alpha) -> StepFunction:
    """
    chi_(0, c] + 1/2 chi_(c, 2c] + chi_(2c, 1] with c = (1 - alpha)/4.

    For 0 <= alpha < 1 the point 2c is attached, while (c, 2c) is detached.
    """
    alpha = to_rational(alpha)
    if not 0 <= alpha < 1:
        raise AnalysisError(f"the attachment example needs 0 <= alpha < 1, got {alpha}")
    c = (1 - alpha) / 4
    return StepFunction((Fraction(0), c, 2 * c, Fraction(1)), (Fraction(1), HALF, Fraction(1)))


def two_bump() -> StepFunction:
    """Height-1 bumps on (-2, -1) and (1, 2)."""
    return StepFunction((-2, -1, 1, 2), (1, 0, 1))


def _ceil_div(numerator: np.ndarray, denominator: int) -> np.ndarray:
    return -((-numerator) // denominator)


# left ends handled per block of the grid oracle
ORACLE_BLOCK = 8192


def oracle_span(f: StepFunction, alpha, x) -> Fraction:
    """Reach around x that holds every arrangement vertex of Cone(alpha) at x."""
    alpha, x = to_rational(alpha), to_rational(x)
    hull = support_hull(f)
    if hull is None:
        return Fraction(1)
    distance = max(abs(x - hull[0]), abs(x - hull[1]))
    stretch = Fraction(1) if alpha == 1 else max(Fraction(1), (1 + alpha) / abs(1 - alpha))
    return stretch * distance + 1


def grid_oracle(f: StepFunction, alpha, x, step, span=None, confirm: int = 256) -> Fraction:
    """
    Brute-force sup of the averages of |f| over admissible [a, b] with a, b
    on the grid x + k*step, |k| * step <= span (default: oracle_span).

    For a fixed left end the average is monotone in b across each piece of f,
    so only the ends of the admissible b range and the grid points around
    each breakpoint can win. Those pairs are ranked in float; the best
    `confirm` of them are averaged exactly.
    """
    alpha, x, step = (to_rational(v) for v in (alpha, x, step))
    span = oracle_span(f, alpha, x) if span is None else to_rational(span)
    if step <= 0 or span <= 0:
        raise AnalysisError("grid oracle needs a positive step and span")
    g = absolute_value(f)
    n = int(span / step)
    # with alpha = p/q: j*(q - p) <= -i*(q + p) and j*(q + p) >= -i*(q - p)
    up, down = alpha.denominator + alpha.numerator, alpha.denominator - alpha.numerator
    ticks = [math.floor((b - x) / step) for b in g.breakpoints]
    step_f, x_f = float(step), float(x)

    kept = []
    for start in range(-n, n + 1, ORACLE_BLOCK):
        i = np.arange(start, min(start + ORACLE_BLOCK, n + 1), dtype=np.int64)
        j_lo = np.maximum(i + 1, _ceil_div(-i * down, up))
        j_hi = np.full_like(i, n)
        if down > 0:
            j_hi = np.minimum(j_hi, (-i * up) // down)
        elif down < 0:
            j_lo = np.maximum(j_lo, _ceil_div(i * up, -down))
        else:
            j_hi = np.where(i <= 0, j_hi, i)
        live = j_lo <= j_hi
        i, j_lo, j_hi = i[live], j_lo[live], j_hi[live]
        if i.size == 0:
            continue

        columns = [j_lo, j_hi] + [np.clip(np.full_like(i, t + d), j_lo, j_hi) for t in ticks for d in (0, 1)]
        first = np.repeat(i, len(columns))
        second = np.stack(columns, axis=1).ravel()
        a, b = x_f + first * step_f, x_f + second * step_f
        screened = (float_primitive(g, b) - float_primitive(g, a)) / (b - a)
        top = np.argsort(-screened, kind="stable")[:confirm]
        kept.append((screened[top], first[top], second[top]))

    if not kept:
        return Fraction(0)
    screened, first, second = (np.concatenate(parts) for parts in zip(*kept))
    best = Fraction(0)
    for k in np.argsort(-screened, kind="stable")[:confirm].tolist():
        lo, hi = x + step * int(first[k]), x + step * int(second[k])
        best = max(best, g.integral(lo, hi) / (hi - lo))
    return best
