import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from interference_lab.errors import ConfigError
from interference_lab.numerics import BetaParams, RngStream, draw_uniform
from interference_lab.numerics.rng import new_state
from interference_lab.policies import (
    ArmStats,
    PolicyKind,
    PolicySpec,
    StatsView,
    bayes_ucb_exact_scores,
    bayes_ucb_score,
    map_estimate,
    map_mode_estimate,
    mle_estimate,
    pick_among_ties,
    select_action,
    update,
    _bayes_ucb_scores,
    fixed_ucb_select,
)

PRIOR = BetaParams(2, 10)
ALL_KINDS = [
    PolicySpec.mle_greedy(),
    PolicySpec.map_greedy(),
    PolicySpec.epsilon_greedy(),
    PolicySpec.thompson(),
    PolicySpec.bayes_ucb(),
    PolicySpec.bayes_ucb(0.9),
]
GREEDY = [PolicySpec.mle_greedy(), PolicySpec.map_greedy(), PolicySpec.epsilon_greedy(), PolicySpec.bayes_ucb()]


def frequencies(spec, view, calls, round_t=1, seed=0):
    rng = RngStream(seed, 99)
    counts = np.zeros(view.n_arms)
    for _ in range(calls):
        counts[select_action(spec, view, round_t, rng).arm] += 1
    return counts / calls


# -- estimators ----------------------------------------------------------------


def test_mle_examples():
    assert mle_estimate(ArmStats(3, 7)) == 0.3
    assert mle_estimate(ArmStats(0, 0)) is None
    assert mle_estimate(ArmStats(0, 10)) == 0.0


def test_map_examples():
    assert map_estimate(ArmStats(0, 0), PRIOR) == pytest.approx(2 / 12, abs=1e-15)
    assert map_estimate(ArmStats(10, 90), PRIOR) == pytest.approx(12 / 112, abs=1e-15)
    assert map_estimate(ArmStats(10**9, 9 * 10**9), PRIOR) == pytest.approx(0.1, abs=1e-9)


def test_mode_estimator_matches_prior_mode():
    assert map_mode_estimate(ArmStats(0, 0), PRIOR) == pytest.approx(0.1, abs=1e-15)


@pytest.mark.parametrize("s,f", [(-1, 0), (0, -2)])
def test_arm_stats_non_negative(s, f):
    with pytest.raises(ValueError):
        ArmStats(s, f)


# -- selection examples ----------------------------------------------------------


def test_map_greedy_example():
    view = StatsView.from_pairs([(5, 5), (0, 0), (0, 10)])
    choice = select_action(PolicySpec.map_greedy(), view, 1, RngStream(0, 0))
    assert choice.arm == 0 and choice.tie_set_size == 1


@pytest.mark.parametrize("spec", ALL_KINDS, ids=lambda s: s.name)
def test_single_arm_always_zero(spec):
    view = StatsView.from_pairs([(3, 4)])
    rng = RngStream(1, 1)
    assert all(select_action(spec, view, t, rng).arm == 0 for t in range(1, 200))


def test_thompson_separated_posteriors():
    view = StatsView.from_pairs([(1000, 0), (0, 1000)])
    assert frequencies(PolicySpec.thompson(), view, 10_000)[0] > 0.999


def test_epsilon_one_is_uniform():
    n, calls = 5, 100_000
    freq = frequencies(PolicySpec.epsilon_greedy(1.0), StatsView.from_pairs([(50, 0)] + [(0, 50)] * (n - 1)), calls)
    sigma = math.sqrt((1 / n) * (1 - 1 / n) / calls)
    assert np.all(np.abs(freq - 1 / n) <= 3 * sigma)


def test_epsilon_zero_is_map_greedy():
    view = StatsView.from_pairs([(1, 9), (4, 6), (2, 8)])
    assert frequencies(PolicySpec.epsilon_greedy(0.0), view, 500)[1] == 1.0


@pytest.mark.parametrize("spec", GREEDY, ids=lambda s: s.name)
def test_tie_fairness_on_fresh_view(spec):
    n, calls = 4, 100_000
    freq = frequencies(spec, StatsView.fresh(n), calls)
    sigma = math.sqrt((1 / n) * (1 - 1 / n) / calls)
    assert np.all(np.abs(freq - 1 / n) <= 3 * sigma)


def test_mle_unseen_arm_ties_at_current_max():
    view = StatsView.from_pairs([(1, 1), (0, 0), (0, 5)])
    choice = select_action(PolicySpec.mle_greedy(), view, 3, RngStream(0, 0))
    assert choice.tie_set_size == 2 and choice.arm in (0, 1)
    freq = frequencies(PolicySpec.mle_greedy(), view, 4000)
    assert freq[2] == 0.0 and 0.45 < freq[1] < 0.55


def test_mle_unseen_arm_ties_with_zero_estimates():
    view = StatsView.from_pairs([(0, 3), (0, 0)])
    assert select_action(PolicySpec.mle_greedy(), view, 4, RngStream(0, 0)).tie_set_size == 2


def test_thompson_matches_posterior_probability_of_best():
    cases = [[(2, 3), (1, 1)], [(0, 4), (1, 6)], [(5, 20), (3, 10)]]
    oracle_rng = np.random.default_rng(12345)
    for pairs in cases:
        (s0, f0), (s1, f1) = pairs
        # brute-force oracle: joint posterior draws from an unrelated generator
        th0 = oracle_rng.beta(2 + s0, 10 + f0, 1_000_000)
        th1 = oracle_rng.beta(2 + s1, 10 + f1, 1_000_000)
        p0 = float(np.mean(th0 > th1))
        freq = frequencies(PolicySpec.thompson(), StatsView.from_pairs(pairs), 40_000, seed=7)
        assert abs(freq[0] - p0) <= 0.01


def test_bayes_ucb_first_round_all_tie():
    view = StatsView.from_pairs([(5, 1), (0, 9), (2, 2)])
    assert select_action(PolicySpec.bayes_ucb(), view, 1, RngStream(0, 0)).tie_set_size == 3


def test_bayes_ucb_prefers_uncertain_arm_at_late_rounds():
    # equal posterior means, very different counts: the upper quantile favours the sparse arm
    view = StatsView.from_pairs([(100, 900), (1, 9)])
    assert select_action(PolicySpec.bayes_ucb(), view, 10_000, RngStream(0, 0)).arm == 1


def test_empty_view_and_bad_round():
    with pytest.raises(ConfigError):
        select_action(PolicySpec.thompson(), StatsView.fresh(0), 1, RngStream(0, 0))
    with pytest.raises(ConfigError):
        select_action(PolicySpec.thompson(), StatsView.fresh(2), 0, RngStream(0, 0))


# -- spec validation --------------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind=PolicyKind.EPSILON_GREEDY),
        dict(kind=PolicyKind.EPSILON_GREEDY, epsilon=1.5),
        dict(kind=PolicyKind.THOMPSON, epsilon=0.1),
        dict(kind=PolicyKind.MAP_GREEDY, quantile=0.9),
        dict(kind=PolicyKind.BAYES_UCB, quantile=1.0),
        dict(kind=PolicyKind.MAP_GREEDY, map_estimator="median"),
    ],
)
def test_parameters_present_iff_required(kwargs):
    with pytest.raises(ConfigError):
        PolicySpec(**kwargs)


# -- update -----------------------------------------------------------------------


def test_update_examples():
    assert update(StatsView.from_pairs([(0, 0)]), 0, 1) == StatsView.from_pairs([(1, 0)])
    assert update(StatsView.from_pairs([(2, 3), (4, 5)]), 1, 0) == StatsView.from_pairs([(2, 3), (4, 6)])


def test_update_rejects_bad_input():
    with pytest.raises(IndexError):
        update(StatsView.fresh(2), 2, 1)
    with pytest.raises(ValueError):
        update(StatsView.fresh(2), 0, 2)


@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 1)), max_size=200))
def test_update_counts_every_observation(events):
    view = StatsView.fresh(5)
    for arm, r in events:
        before = view.copy()
        update(view, arm, r)
        others = [a for a in range(5) if a != arm]
        assert all(view[a] == before[a] for a in others)
    assert view.total_observations() == len(events)


# -- properties -----------------------------------------------------------------------

dyadic_scores = st.lists(st.integers(0, 64).map(lambda k: k / 64.0), min_size=1, max_size=8)


@given(scores=dyadic_scores, shift=st.integers(-8, 8).map(lambda k: k / 4.0), seed=st.integers(0, 2**32))
def test_argmax_shift_invariance(scores, shift, seed):
    # dyadic values keep the shift exact, so any change would be a real bias
    base = np.array(scores)
    n = base.size
    ties = np.empty(n, dtype=np.int64)
    a1 = pick_among_ties(base, n, new_state(seed, 1)[0], ties)
    a2 = pick_among_ties(base + shift, n, new_state(seed, 1)[0], ties)
    assert a1 == a2


counts = st.integers(0, 3000)


@given(s=counts, f=counts, q1=st.floats(0.01, 0.999), q2=st.floats(0.01, 0.999))
def test_ucb_score_monotone_in_q(s, f, q1, q2):
    lo, hi = sorted((q1, q2))
    st_ = ArmStats(s, f)
    assert bayes_ucb_score(st_, PRIOR, 1, lo) <= bayes_ucb_score(st_, PRIOR, 1, hi)


@given(
    pairs=st.lists(st.tuples(st.integers(0, 10**6), st.integers(0, 10**6)), min_size=1, max_size=11),
    tail=st.one_of(st.floats(1e-7, 0.5), st.integers(1, 10**7).map(lambda t: 1.0 / t)),
    clone=st.booleans(),
)
def test_pruned_ucb_has_the_exact_tie_set(pairs, tail, clone):
    if clone:
        pairs = pairs + [pairs[0]]  # force an exact tie
    succ = np.array([p[0] for p in pairs], dtype=np.int64)
    fail = np.array([p[1] for p in pairs], dtype=np.int64)
    n = succ.size
    exact = np.empty(n)
    pruned = np.empty(n)
    bayes_ucb_exact_scores(succ, fail, n, 2.0, 10.0, tail, exact)
    _bayes_ucb_scores(succ, fail, n, 2.0, 10.0, tail, pruned)
    ties_e = set(np.flatnonzero(exact >= exact.max() - 1e-12))
    ties_p = set(np.flatnonzero(pruned >= pruned.max() - 1e-12))
    assert ties_e == ties_p
    assert exact.max() == pruned.max()


@given(
    pairs=st.lists(st.tuples(st.integers(0, 50), st.integers(0, 50)), min_size=1, max_size=6),
    round_t=st.integers(1, 10**6),
    seed=st.integers(0, 2**64 - 1),
    which=st.sampled_from(ALL_KINDS),
)
def test_selection_is_a_pure_function(pairs, round_t, seed, which):
    view = StatsView.from_pairs(pairs)
    snapshot = view.copy()
    a = select_action(which, view, round_t, RngStream(seed, 3))
    b = select_action(which, view, round_t, RngStream(seed, 3))
    assert a == b and view == snapshot
    assert 0 <= a.arm < view.n_arms and a.tie_set_size >= 1


@given(
    q=st.sampled_from([0.5, 0.7, 0.9, 0.999]),
    n=st.integers(1, 8),
    steps=st.lists(st.tuples(st.integers(0, 7), st.integers(0, 3000), st.integers(0, 3000)), min_size=1, max_size=40),
    clone=st.booleans(),
    seed=st.integers(0, 2**32),
)
def test_cached_fixed_ucb_matches_exact_scoring(q, n, steps, clone, seed):
    # drive the cache through arbitrary count changes; each decision and the
    # stream position afterwards must match a from-scratch exact evaluation
    succ = np.zeros(n, dtype=np.int64)
    fail = np.zeros(n, dtype=np.int64)
    cache = np.zeros(n)
    stale = np.ones(n, dtype=np.bool_)
    ties = np.empty(n, dtype=np.int64)
    exact = np.empty(n)
    cached_rng = RngStream(seed, 1)
    exact_rng = RngStream(seed, 1)
    for arm, s, f in steps:
        arm %= n
        succ[arm] += s
        fail[arm] += f
        stale[arm] = True
        if clone and n > 1:
            other = (arm + 1) % n
            succ[other], fail[other] = succ[arm], fail[arm]
            stale[other] = True
        got, k = fixed_ucb_select(1.0 - q, 2.0, 10.0, succ, fail, cache, stale, cached_rng.states[0], ties)
        bayes_ucb_exact_scores(succ, fail, n, 2.0, 10.0, 1.0 - q, exact)
        want, k_exact = pick_among_ties(exact, n, exact_rng.states[0], np.empty(n, dtype=np.int64))
        assert (got, k) == (want, k_exact)
        assert draw_uniform(cached_rng) == draw_uniform(exact_rng)
