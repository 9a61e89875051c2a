from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from analysis import make_divergence_N, make_spike_pair, random_step_function
from functions import PiecewiseLinearFunction, StepFunction, dilate, reflect, scale, shift
from maximal import (
    Cone,
    Diamond,
    EvalResult,
    LeftHalf,
    LipschitzCone,
    MaximalOperator,
    Region,
    RegionError,
    RightHalf,
    TruncatedCone,
    Witness,
    asymptotic_sup,
    candidate_vertices,
    eval_centered,
    eval_diamond,
    eval_lipschitz_truncated,
    eval_max_average,
    eval_mixed,
    eval_nontangential,
    eval_one_sided,
    eval_uncentered,
    eval_uncentered_truncated,
    floor_value,
)

CHI = StepFunction.indicator(-1, 0)
HALF = Fraction(1, 2)

seeds = st.integers(min_value=0, max_value=10 ** 6)
points = st.fractions(min_value=-5, max_value=5, max_denominator=16)
apertures = st.sampled_from([Fraction(0), Fraction(1, 5), Fraction(1, 3), HALF, Fraction(1), Fraction(2)])


def test_uncentered_value_and_witness():
    result = eval_nontangential(CHI, 1, 1)
    assert result == EvalResult(HALF, Witness.INTERVAL, (-1, 1))
    assert result.describe() == "(-1, 1)"
    assert eval_uncentered(CHI, 1).value == HALF


def test_centered_value():
    result = eval_centered(CHI, 1)
    assert result.value == Fraction(1, 4)
    assert result.interval == (-1, 3)


def test_cone_captures_support():
    assert eval_nontangential(CHI, HALF, -HALF).value == 1


def test_candidates_contain_uncentered_witness():
    assert (-1, 1) in candidate_vertices(CHI, Region(Cone(Fraction(1)), 1))


def test_right_half_candidates():
    assert candidate_vertices(CHI, Region(RightHalf(Fraction(1)), 0)) == [(0, 2)]


def test_asymptotic_sup():
    assert asymptotic_sup(CHI, 1) == 0
    tails = StepFunction((0,), (), 1, 0)
    assert asymptotic_sup(tails, 1) == 1
    assert asymptotic_sup(tails, Fraction(1, 3)) == Fraction(2, 3)


def test_tail_witness_for_nonzero_tail():
    f = StepFunction((0, 1), (0,), 1, 0)
    result = eval_nontangential(f, 1, 10)
    assert result.value == 1
    assert result.witness is Witness.ASYMPTOTIC_TAIL


def test_truncated():
    assert eval_uncentered_truncated(CHI, HALF, 0) == EvalResult(Fraction(1), Witness.INTERVAL, (-1, 0))
    assert eval_uncentered_truncated(CHI, HALF, 1).value == 0


def test_truncation_inactive_for_large_radius():
    f = random_step_function(7)
    for x in (Fraction(-3), Fraction(1, 8), Fraction(2)):
        assert eval_uncentered_truncated(f, 100, x).value == eval_nontangential(f, 1, x).value


def test_diamond():
    assert eval_diamond(CHI, HALF, 0).value == 1
    assert eval_diamond(StepFunction.constant(3), 1, 0).value == 3
    assert eval_diamond(CHI, Fraction(1, 4), Fraction(3, 2)).value == 0


def test_one_sided():
    assert eval_one_sided(CHI, HALF, 0, "left").value == 1
    assert eval_one_sided(CHI, HALF, 0, "right").value == 0
    assert eval_one_sided(CHI, 1, -1, "right").value == 1
    with pytest.raises(RegionError):
        eval_one_sided(CHI, 1, 0, "up")


def test_lipschitz_truncated_on_divergence_construction():
    N = make_divergence_N(Fraction(3, 4), 1)
    assert eval_lipschitz_truncated(CHI, N, Fraction(24, 5)).value == Fraction(5, 29)
    assert eval_lipschitz_truncated(CHI, N, Fraction(26, 5)).value == 0
    assert eval_lipschitz_truncated(CHI, N, 0).value == 1


def test_zero_radius_collapses_to_floor():
    N = PiecewiseLinearFunction((0, 1), (0, 1))
    result = eval_lipschitz_truncated(CHI, N, 0)
    assert result.witness is Witness.NORMALIZATION_FLOOR
    assert result.value == 1


def test_mixed():
    N = PiecewiseLinearFunction.constant(1)
    assert eval_mixed(CHI, HALF, N, 0).value == Fraction(3, 4)
    with pytest.raises(RegionError):
        eval_mixed(CHI, 2, N, 0)


def test_invalid_regions():
    with pytest.raises(RegionError):
        eval_nontangential(CHI, -1, 0)
    with pytest.raises(RegionError):
        eval_uncentered_truncated(CHI, 0, 0)
    with pytest.raises(RegionError):
        eval_lipschitz_truncated(CHI, PiecewiseLinearFunction((0, 1), (1, -1)), 1)


def test_spike_pair_values():
    f = make_spike_pair(100)
    alpha = Fraction(1, 5)
    assert eval_nontangential(f, alpha, Fraction(1, 3)).value == Fraction(9, 5)
    assert eval_nontangential(f, alpha, HALF).value == 2
    assert eval_nontangential(f, alpha, Fraction(2, 3)).value == Fraction(9, 5)


def test_operator_bundle():
    N = PiecewiseLinearFunction.constant(1)
    assert MaximalOperator.cone(1).value(CHI, 1) == HALF
    assert MaximalOperator.truncated(HALF).value(CHI, 0) == 1
    assert MaximalOperator.diamond(HALF).value(CHI, 0) == 1
    assert MaximalOperator.one_sided(HALF, "left").value(CHI, 0) == 1
    assert MaximalOperator.lipschitz(N).value(CHI, 0) == 1
    assert MaximalOperator.mixed(HALF, N).value(CHI, 0) == Fraction(3, 4)
    assert MaximalOperator.cone(HALF).label == "M^1/2"


def test_tail_limit():
    f = StepFunction((0, 1), (0,), 1, 0)
    assert MaximalOperator.cone(1).tail_limit(f, "right") == 1
    assert MaximalOperator.cone(0).tail_limit(f, "right") == HALF
    assert MaximalOperator.truncated(1).tail_limit(f, "right") == 0


@settings(max_examples=40, deadline=None)
@given(seeds, apertures, points)
def test_reflection_symmetry(seed, alpha, x):
    f = random_step_function(seed, max_pieces=6)
    assert eval_nontangential(reflect(f), alpha, -x).value == eval_nontangential(f, alpha, x).value


@settings(max_examples=40, deadline=None)
@given(seeds, apertures, points, st.sampled_from([Fraction(1, 2), Fraction(2), Fraction(3)]))
def test_dilation_and_scaling(seed, alpha, x, s):
    f = random_step_function(seed, max_pieces=6)
    value = eval_nontangential(f, alpha, x).value
    assert eval_nontangential(dilate(f, s), alpha, s * x).value == value
    assert eval_nontangential(scale(f, -s), alpha, x).value == s * value
    assert eval_nontangential(shift(f, s), alpha, x + s).value == value


@settings(max_examples=40, deadline=None)
@given(seeds, points)
def test_aperture_sandwich(seed, x):
    f = random_step_function(seed, max_pieces=6)
    ladder = [Fraction(1, 5), Fraction(1, 3), HALF, Fraction(1), Fraction(2)]
    values = [eval_nontangential(f, alpha, x).value for alpha in ladder]
    for i, beta in enumerate(ladder):
        for j in range(i + 1, len(ladder)):
            alpha = ladder[j]
            assert (beta / alpha) * values[j] <= values[i] <= values[j]


@settings(max_examples=30, deadline=None)
@given(seeds, points)
def test_square_lemma_identity(seed, x):
    f = random_step_function(seed, max_pieces=6)
    R = Fraction(seed % 16 + 1, 8)
    truncated = eval_uncentered_truncated(f, R, x).value
    assert truncated == eval_diamond(f, R, x).value
    assert truncated == max(eval_one_sided(f, R, x, "left").value, eval_one_sided(f, R, x, "right").value)


@settings(max_examples=30, deadline=None)
@given(seeds, st.sampled_from([Fraction(0), Fraction(1, 3), HALF, Fraction(1)]), points)
def test_mixed_with_huge_radius_is_nontangential(seed, alpha, x):
    f = random_step_function(seed, max_pieces=6)
    N = PiecewiseLinearFunction.constant(1000)
    assert eval_mixed(f, alpha, N, x).value == eval_nontangential(f, alpha, x).value
    if alpha == 1:
        assert eval_mixed(f, alpha, N, x).value == eval_lipschitz_truncated(f, N, x).value


@settings(max_examples=30, deadline=None)
@given(seeds, apertures, points)
def test_value_dominates_floor_and_admissible_averages(seed, alpha, x):
    f = random_step_function(seed, max_pieces=6)
    result = eval_nontangential(f, alpha, x)
    assert result.value <= max(f.values)
    if result.witness is Witness.INTERVAL:
        a, b = result.interval
        assert Region(Cone(alpha), x).admits(a, b)
        assert f.integral(a, b) / (b - a) == result.value


def _exhaustive(f, region):
    """Every candidate vertex averaged exactly, then the floor and the tail, with the engine's tie rules."""
    best = None
    for a, b in candidate_vertices(f, region):
        value = f.integral(a, b) / (b - a)
        if best is None or value > best.value:
            best = EvalResult(value, Witness.INTERVAL, (a, b))
    floor = floor_value(f, region)
    if best is None or floor > best.value:
        best = EvalResult(floor, Witness.NORMALIZATION_FLOOR)
    if region.unbounded_alpha is not None:
        tail = asymptotic_sup(f, region.unbounded_alpha)
        if tail > best.value:
            best = EvalResult(tail, Witness.ASYMPTOTIC_TAIL)
    return best


variants = st.sampled_from([
    Cone(Fraction(0)), Cone(Fraction(1, 3)), Cone(Fraction(1)), Cone(Fraction(2)),
    TruncatedCone(HALF, Fraction(3, 4)), Diamond(Fraction(1)), RightHalf(HALF), LeftHalf(Fraction(2)),
    LipschitzCone(Fraction(1, 5), PiecewiseLinearFunction((-1, 1), (0, 2))),
])


@settings(max_examples=60, deadline=None)
@given(seeds, variants, points)
def test_screened_engine_matches_exhaustive_scan(seed, variant, x):
    f = random_step_function(seed)
    region = Region(variant, x)
    assert eval_max_average(f, region) == _exhaustive(f, region)


@settings(max_examples=30, deadline=None)
@given(seeds, points)
def test_engine_matches_exhaustive_scan_with_tails(seed, x):
    g = random_step_function(seed, max_pieces=5)
    f = StepFunction(g.breakpoints, g.values, Fraction(3, 4), Fraction(1, 4))
    region = Region(Cone(HALF), x)
    assert eval_max_average(f, region) == _exhaustive(f, region)


def test_ties_resolve_to_smallest_interval():
    # (-1, -1/2), (-1, 0) and (-1/2, 0) all average 1, as does the floor
    assert eval_nontangential(CHI, 1, -HALF) == EvalResult(Fraction(1), Witness.INTERVAL, (-1, -HALF))


def test_engine_on_fine_dyadic_grid():
    f = StepFunction(tuple(Fraction(k, 64) for k in range(65)),
                     tuple(Fraction((k * 7) % 11, 4) for k in range(64)))
    for x in (Fraction(1, 3), Fraction(17, 64), Fraction(3, 2)):
        region = Region(Cone(HALF), x)
        assert eval_max_average(f, region) == _exhaustive(f, region)


@settings(max_examples=40, deadline=None)
@given(seeds, points, st.fractions(min_value=Fraction(1, 8), max_value=4, max_denominator=8),
       st.fractions(min_value=0, max_value=4, max_denominator=8))
def test_truncated_value_grows_with_radius(seed, x, R, extra):
    f = random_step_function(seed)
    assert eval_uncentered_truncated(f, R, x).value <= eval_uncentered_truncated(f, R + extra, x).value
