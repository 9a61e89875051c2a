from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from analysis import (
    AnalysisConfig,
    AnalysisError,
    Shape,
    alpha_monotonicity_violations,
    attachment_slack,
    balpha_ratio,
    check_extremizer,
    classify_shape,
    corpus,
    default_window,
    detachment_set,
    divergence_certificate,
    endpoint_attachment_gaps,
    find_spike_counterexample,
    grid_oracle,
    is_detached,
    lipschitz_corpus,
    make_attachment_example,
    make_divergence_N,
    make_spike_pair,
    make_spike_train,
    maximal_superlevel_measure,
    maximal_variation,
    oracle_span,
    random_lipschitz_N,
    random_single_peak,
    random_step_function,
    single_peak_corpus,
    spike_pair_profile,
    two_bump,
    variation_lower_bound,
    variation_slack,
    verify_bpl,
    verify_endpoint_attachment,
    verify_extremizer,
    verify_square_lemma,
    weak_type_ratio,
    weak_type_window,
)
from functions import StepFunction, is_single_peak, lipschitz_constant, total_variation
from maximal import Cone, MaximalOperator, Region, eval_nontangential

CHI = StepFunction.indicator(-1, 0)
HALF = Fraction(1, 2)
QUICK = AnalysisConfig(tol=Fraction(1, 2 ** 20), component_points=33, initial_level=6, refinements=1)

seeds = st.integers(min_value=0, max_value=10 ** 6)
points = st.fractions(min_value=-5, max_value=5, max_denominator=16)


def test_variation_lower_bound_on_explicit_partition():
    op = MaximalOperator.cone(1)
    value = variation_lower_bound(lambda x: op.value(CHI, x), [-3, Fraction(-1, 2), 1])
    # 1/3 -> 1 -> 1/2
    assert value == Fraction(2, 3) + HALF
    with pytest.raises(AnalysisError):
        variation_lower_bound(lambda x: x, [0, 0, 1])
    with pytest.raises(AnalysisError):
        variation_lower_bound(lambda x: x, [0])


def test_is_detached():
    op = MaximalOperator.cone(1)
    assert is_detached(CHI, op, 1)
    assert not is_detached(CHI, op, -HALF)
    assert not is_detached(CHI, op, 0)
    assert not is_detached(StepFunction.indicator(0, 1), MaximalOperator.cone(HALF), Fraction(1, 4))


def test_detachment_set_of_indicator():
    tol = Fraction(1, 2 ** 20)
    components = detachment_set(CHI, MaximalOperator.cone(1), (-10, 10), tol=tol)
    assert len(components) == 2
    left, right = components
    assert left.lo == -10 and left.lo_clipped
    assert left.hi_outer == -1
    assert -1 - tol <= left.hi < -1
    assert right.lo_outer == 0
    assert 0 < right.lo <= tol
    assert right.hi == 10 and right.hi_clipped


def test_indicator_components_are_monotone():
    op = MaximalOperator.cone(1)
    for component in detachment_set(CHI, op, (-10, 10), config=QUICK):
        assert classify_shape(CHI, op, component, config=QUICK).shape is Shape.MONOTONE


def test_two_bump_is_v_shaped():
    f = two_bump()
    op = MaximalOperator.cone(1)
    components = detachment_set(f, op, default_window(f))
    middle = [c for c in components if c.contains(0)]
    assert len(middle) == 1
    shaped = classify_shape(f, op, middle[0])
    assert shaped.shape is Shape.V_SHAPED
    assert shaped.vertex_point == 0
    assert shaped.vertex_value == HALF


def test_two_bump_variation():
    f = two_bump()
    report = maximal_variation(f, MaximalOperator.cone(1))
    assert total_variation(f) == 4
    assert report.structural_value == 3
    assert 3 - Fraction(1, 10 ** 9) <= report.lower_bound <= 3
    assert report.consistent


@pytest.mark.parametrize("alpha", [Fraction(1, 3), HALF, Fraction(1), Fraction(2)])
def test_indicator_variation_is_sharp(alpha):
    config = AnalysisConfig(refinements=3)
    report = maximal_variation(CHI, MaximalOperator.cone(alpha), config=config)
    assert 2 - Fraction(1, 10 ** 6) <= report.structural_value <= 2
    assert len(report.history) >= 2
    assert all(b >= a for a, b in zip(report.history, report.history[1:]))
    assert report.lower_bound <= 2


def test_balpha_ratio_of_indicator():
    ratio = balpha_ratio(CHI, HALF)
    assert 1 - Fraction(1, 10 ** 6) <= ratio <= 1


def test_maximal_variation_preconditions():
    with pytest.raises(AnalysisError, match="window"):
        maximal_variation(CHI, MaximalOperator.cone(1), window=(-1, 0))
    report = maximal_variation(StepFunction.constant(3), MaximalOperator.cone(1))
    assert report.lower_bound == 0 and report.structural_value == 0
    with pytest.raises(AnalysisError):
        balpha_ratio(StepFunction.constant(3), 1)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_variation_bound_on_corpus(seed):
    f = random_step_function(seed, max_pieces=5)
    variation = total_variation(f)
    for alpha in (Fraction(1, 3), Fraction(1)):
        report = maximal_variation(f, MaximalOperator.cone(alpha), config=QUICK)
        assert report.lower_bound <= variation


def test_lipschitz_variation_bound():
    f = random_step_function(3, max_pieces=4)
    N = random_lipschitz_N(3, HALF)
    report = maximal_variation(f, MaximalOperator.lipschitz(N), config=QUICK)
    assert report.lower_bound <= total_variation(f)


def test_spike_pair():
    f = make_spike_pair(4)
    assert total_variation(f) == 16
    with pytest.raises(AnalysisError):
        make_spike_pair(1)


def test_spike_pair_profile_shows_interior_maximum():
    profile = spike_pair_profile(Fraction(1, 5), 1000)
    assert profile.has_interior_maximum
    assert profile.at_third == Fraction(9, 5) == profile.limit_at_third
    assert profile.at_half == 2
    assert find_spike_counterexample(Fraction(1, 5)).n == 10
    assert find_spike_counterexample(HALF, ns=(10,)) is None


def test_spike_component_is_undetermined():
    f = make_spike_pair(100)
    op = MaximalOperator.cone(Fraction(1, 5))
    components = detachment_set(f, op, default_window(f), config=QUICK)
    middle = [c for c in components if c.contains(HALF)]
    assert len(middle) == 1
    assert classify_shape(f, op, middle[0], config=QUICK).shape is Shape.UNDETERMINED


def test_divergence_construction():
    N = make_divergence_N(Fraction(3, 4), 1)
    assert N.breakpoints == (0, Fraction(4, 5), Fraction(24, 5), Fraction(26, 5))
    assert N.values == (1, Fraction(2, 5), Fraction(29, 10), Fraction(13, 5))
    assert lipschitz_constant(N) == Fraction(3, 4)
    assert lipschitz_constant(make_divergence_N(Fraction(3, 4), 40)) == Fraction(3, 4)
    with pytest.raises(AnalysisError):
        make_divergence_N(HALF, 3)


def test_divergence_certificate():
    certificate = divergence_certificate(Fraction(3, 4), 100)
    assert certificate.verified
    assert certificate.rows[0].value == 1
    assert certificate.rows[1].x_prime == Fraction(24, 5)
    assert certificate.rows[1].value == Fraction(5, 29)
    assert certificate.partial_sum(100) == certificate.analytic_sum
    for K in (25, 50):
        assert certificate.partial_sum(2 * K) - certificate.partial_sum(K) > Fraction(1, 20)


def test_weak_type_measure_of_indicator():
    op = MaximalOperator.cone(1)
    for lam in (Fraction(1, 4), HALF, Fraction(3, 4)):
        measure = maximal_superlevel_measure(CHI, op, lam, weak_type_window(CHI, 1, lam))
        assert abs(measure - (2 / lam - 1)) <= Fraction(1, 10 ** 6)


def test_weak_type_ratio():
    ratio = weak_type_ratio(CHI, 1, HALF)
    assert abs(ratio - Fraction(3, 2)) <= Fraction(1, 10 ** 6)
    for f in corpus(3, seed=11, max_pieces=4):
        assert weak_type_ratio(f, 1, max(f.values) / 2) <= 2
    with pytest.raises(AnalysisError):
        weak_type_ratio(CHI, 1, 0)
    with pytest.raises(AnalysisError):
        weak_type_ratio(StepFunction((0, 1), (1,), 1, 1), 1, HALF)


def test_boundary_projection():
    assert verify_bpl(CHI, 0, HALF, 1)
    assert verify_bpl(CHI, Fraction(3, 2), HALF, 1)
    with pytest.raises(AnalysisError):
        verify_bpl(CHI, HALF, HALF, 1)
    with pytest.raises(AnalysisError):
        verify_bpl(CHI, 2, 0, 1)


@settings(max_examples=60, deadline=None)
@given(seeds, points, st.integers(min_value=1, max_value=64), st.data())
def test_boundary_projection_property(seed, y, steps, data):
    t = Fraction(steps, 16)
    offset = data.draw(st.integers(min_value=1, max_value=steps)) * data.draw(st.sampled_from([1, -1]))
    assert verify_bpl(random_step_function(seed), y + Fraction(offset, 16), y, t)


@settings(max_examples=30, deadline=None)
@given(seeds, points, st.fractions(min_value=Fraction(1, 16), max_value=4, max_denominator=16),
       st.sampled_from([1, -1]))
def test_boundary_projection_at_cone_edge(seed, y, t, sign):
    # |x - y| = t leaves a single side
    assert verify_bpl(random_step_function(seed), y + sign * t, y, t)


def test_square_lemma():
    assert verify_square_lemma(CHI, HALF, 0)
    for seed in range(10):
        assert verify_square_lemma(random_step_function(seed), Fraction(seed + 1, 4), Fraction(seed - 5, 3))
    with pytest.raises(AnalysisError):
        verify_square_lemma(CHI, 0, 0)


def test_random_step_function_is_deterministic():
    assert random_step_function(42) == random_step_function(42)
    members = corpus(20, seed=100)
    assert len(set(members)) > 1
    for f in members:
        assert f.left_tail == 0 and f.right_tail == 0
        assert 1 <= len(f.values) <= 12
        assert all(v >= 0 for v in f.values)
        assert any(v != 0 for v in f.values)


def test_random_lipschitz_radius():
    for lip in (Fraction(1, 4), HALF):
        for N in lipschitz_corpus(5, lip, seed=7):
            assert lipschitz_constant(N) == lip
            assert N.is_nonnegative()
    assert random_lipschitz_N(3, HALF) == random_lipschitz_N(3, HALF)


def test_grid_oracle():
    assert grid_oracle(CHI, 1, 1, Fraction(1, 4), 3) == HALF
    f = random_step_function(5, max_pieces=4)
    x = Fraction(1, 3)
    value = eval_nontangential(f, HALF, x).value
    gaps = [value - grid_oracle(f, HALF, x, step, 6) for step in (Fraction(1, 4), Fraction(1, 8), Fraction(1, 16))]
    assert min(gaps) >= 0
    assert gaps[0] >= gaps[1] >= gaps[2]


def _exhaustive_grid_sup(f, alpha, x, step, span):
    half_planes = Region(Cone(alpha), x).half_planes()
    n = int(span / step)
    grid = [x + step * k for k in range(-n, n + 1)]
    best = Fraction(0)
    for a, b in combinations(grid, 2):
        if all(h.holds(a, b) for h in half_planes):
            best = max(best, f.integral(a, b) / (b - a))
    return best


@pytest.mark.parametrize("alpha", [Fraction(0), Fraction(1, 5), Fraction(1, 3), Fraction(1), Fraction(2)])
def test_grid_oracle_matches_exhaustive_scan(alpha):
    for seed in range(3):
        f = random_step_function(seed, max_pieces=4)
        x = Fraction(seed - 1, 3)
        step = Fraction(1, 4)
        assert grid_oracle(f, alpha, x, step, 5) == _exhaustive_grid_sup(f, alpha, x, step, 5)


def test_grid_oracle_converges_on_fine_grids():
    f = random_step_function(9, max_pieces=5)
    for alpha, x in ((Fraction(1, 3), Fraction(1, 8)), (Fraction(1), Fraction(-5, 16)), (Fraction(2), Fraction(3, 4))):
        value = eval_nontangential(f, alpha, x).value
        gaps = [value - grid_oracle(f, alpha, x, Fraction(1, 2 ** k)) for k in (8, 10, 12)]
        assert 0 <= gaps[2] <= gaps[1] <= gaps[0]
        assert gaps[2] <= Fraction(1, 100)


def test_oracle_span_reaches_cone_vertices():
    assert oracle_span(CHI, 1, 1) == 3
    assert oracle_span(CHI, HALF, 1) == 7
    assert oracle_span(CHI, 2, -3) == 10
    assert oracle_span(StepFunction.constant(0), HALF, 0) == 1
    # the best interval for x = 3 is [-1, 5], with 5 on the cone line
    assert eval_nontangential(CHI, Fraction(1, 3), 3).value == Fraction(1, 6)
    assert grid_oracle(CHI, Fraction(1, 3), 3, Fraction(1, 4)) == Fraction(1, 6)


def test_attachment_example_components():
    f = make_attachment_example(HALF)
    assert f == StepFunction((0, Fraction(1, 8), Fraction(1, 4), 1), (1, HALF, 1))
    op = MaximalOperator.cone(HALF)
    tol = Fraction(1, 2 ** 20)
    left, middle, right = detachment_set(f, op, default_window(f), tol=tol)
    assert left.lo_clipped and left.hi_outer == 0
    assert middle.lo_outer == Fraction(1, 8)
    assert Fraction(1, 8) < middle.lo <= Fraction(1, 8) + tol
    assert middle.hi_outer == Fraction(1, 4)
    assert Fraction(1, 4) - tol <= middle.hi < Fraction(1, 4)
    assert right.lo_outer == 1 and right.hi_clipped
    # (1 - alpha)/2 = 1/4 is attached, and so is the whole of (1/4, 1)
    assert not is_detached(f, op, Fraction(1, 4))
    assert not is_detached(f, op, HALF)
    with pytest.raises(AnalysisError):
        make_attachment_example(1)


def test_endpoint_attachment():
    config = AnalysisConfig(component_points=33)
    example = make_attachment_example(HALF)
    gaps = endpoint_attachment_gaps(example, MaximalOperator.cone(HALF), config=config)
    assert len(gaps) == 4
    assert all(g.gap <= attachment_slack(example, config.tol) for g in gaps)
    for alpha in (Fraction(1, 3), HALF, Fraction(1)):
        assert verify_endpoint_attachment(CHI, MaximalOperator.cone(alpha), config=config)
        assert verify_endpoint_attachment(two_bump(), MaximalOperator.cone(alpha), config=config)
    for f in corpus(2, seed=21, max_pieces=5):
        assert verify_endpoint_attachment(f, MaximalOperator.cone(HALF), config=config)


def test_single_peak_corpus():
    assert random_single_peak(5) == random_single_peak(5)
    for f in single_peak_corpus(10, seed=30):
        assert is_single_peak(f)
        assert total_variation(f) == 2 * max(f.values)


@pytest.mark.parametrize("alpha", [Fraction(2, 5), HALF, Fraction(1), Fraction(2)])
def test_single_peak_functions_are_extremizers(alpha):
    assert verify_extremizer(CHI, alpha, QUICK)
    for f in single_peak_corpus(3, seed=7, max_pieces=5):
        check = check_extremizer(f, alpha, QUICK)
        assert check.gap <= variation_slack(f, QUICK.tol)
        assert check.lower_bound <= check.variation


def test_extremizer_check_needs_single_peak():
    with pytest.raises(AnalysisError):
        check_extremizer(two_bump(), HALF, QUICK)


def test_variation_decreases_with_aperture():
    ladder = [Fraction(1, 3), HALF, Fraction(1), Fraction(2)]
    assert alpha_monotonicity_violations(two_bump(), ladder, QUICK) == []
    for f in corpus(2, seed=3, max_pieces=5):
        assert alpha_monotonicity_violations(f, ladder, QUICK) == []


def test_spike_train():
    f = make_spike_train(3, 8, HALF)
    assert f.breakpoints == (0, Fraction(1, 8), HALF, Fraction(5, 8), 1, Fraction(9, 8))
    assert f.values == (8, 0, 8, 0, 8)
    assert total_variation(f) == 48
    with pytest.raises(AnalysisError):
        make_spike_train(2, 2, HALF)
    with pytest.raises(AnalysisError):
        make_spike_train(0, 8)
