from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from a2ws.inforing import ProcessInfo
from a2ws.stealpolicy import (
    CLOSEST_RATE,
    IN_PAIR,
    RateView,
    closest_rate_weight,
    effective_runtime,
    pair_rate,
    pair_runtime,
    round_steal,
    select_victim,
    steal_rate,
    steal_rates,
)

import oracles

pos_frac = st.fractions(min_value=F(1, 20), max_value=20, max_denominator=50)
counts = st.integers(0, 200)


def view_of(ns, ts, me=0, avail=None):
    avail = avail or [max(0, n - 1) for n in ns]
    return RateView.from_pairs(me, [(i, n, t, a) for i, (n, t, a) in enumerate(zip(ns, ts, avail))])


def test_effective_runtime():
    assert effective_runtime(ProcessInfo(5, 2.0, 3), 9.0) == 2.0
    assert effective_runtime(ProcessInfo(5, 0.0, 0), 5.0) == 5.0
    with pytest.raises(ValueError):
        effective_runtime(ProcessInfo(5), 0.0)


def test_unknown_ranks_look_half_as_fast_as_a_rank_with_two_done():
    elapsed = 4.0
    thief_t = elapsed / 2
    other = effective_runtime(ProcessInfo(10), elapsed)
    assert other == 2 * thief_t


def test_steal_rate_two_rank_example():
    v = view_of([10, 10], [F(1), F(2)])
    assert steal_rate(v, 0) == F(10, 3)
    assert steal_rate(v, 1) == F(-10, 3)


def test_steal_rate_symmetric_window_is_zero():
    v = view_of([7] * 5, [F(3)] * 5)
    assert all(s == 0 for s in steal_rates(v).values())


def test_steal_rate_single_rank_window():
    v = view_of([9], [F(2)])
    assert steal_rate(v, 0) == 0


@given(st.lists(st.tuples(counts, pos_frac), min_size=1, max_size=12))
def test_steal_rates_match_oracle_and_sum_to_zero(entries):
    ns = [n for n, _ in entries]
    ts = [t for _, t in entries]
    v = view_of(ns, ts)
    rates = steal_rates(v)
    for i in range(len(ns)):
        assert rates[i] == oracles.steal_rate(ns, ts, i)
        assert steal_rate(v, i) == rates[i]
    assert sum(rates.values()) == 0


def test_pair_runtime_examples():
    assert pair_runtime(10, 2, F(-10, 3)) == F(40, 3)
    assert pair_runtime(10, 2, 0) == 20
    assert pair_runtime(0, 1, 5) == 5
    with pytest.raises(ValueError):
        pair_runtime(1, 0, 1)


def test_round_steal_tie_goes_to_floor():
    assert round_steal(F(10, 3), (10, 1), (10, 2)) == 3


def test_round_steal_integral_and_zero():
    assert round_steal(5, (0, 1), (10, 1)) == 5
    assert round_steal(0, (0, 1), (10, 1)) == 0
    assert round_steal(F(-1, 2), (0, 1), (10, 1)) == 0


@given(counts, pos_frac, counts, pos_frac, st.fractions(min_value=-5, max_value=60, max_denominator=30))
def test_round_steal_matches_exhaustive_oracle(n_i, t_i, n_j, t_j, s):
    thief, victim = (n_i, t_i), (n_j, t_j)
    d = round_steal(s, thief, victim)
    assert d == oracles.best_integer_steal(s, thief, victim)


@given(counts, pos_frac, counts, pos_frac, st.fractions(min_value=0, max_value=60, max_denominator=30))
def test_round_steal_is_gamma_minimal(n_i, t_i, n_j, t_j, s):
    thief, victim = (n_i, t_i), (n_j, t_j)
    d = round_steal(s, thief, victim)

    def gamma(x):
        return max(pair_runtime(n_i, t_i, x), pair_runtime(n_j, t_j, -x))

    lo = s.numerator // s.denominator
    candidates = {lo, lo + 1} if lo != s else {lo}
    assert d in candidates
    assert gamma(d) == min(gamma(c) for c in candidates)


def test_pair_rate_examples():
    assert pair_rate((0, 1), (10, 1)) == 5
    assert pair_rate((4, 1), (8, 3)) == 5
    assert pair_rate((6, 2), (6, 2)) == 0
    with pytest.raises(ValueError):
        pair_rate((1, 0), (1, 1))


@given(counts, pos_frac, counts, pos_frac)
def test_pair_rate_is_two_rank_steal_rate(n_i, t_i, n_j, t_j):
    p = pair_rate((n_i, t_i), (n_j, t_j))
    assert p == oracles.pair_rate(n_i, t_i, n_j, t_j)
    assert p == steal_rate(view_of([n_i, n_j], [t_i, t_j]), 0)
    assert p == -pair_rate((n_j, t_j), (n_i, t_i))


def test_select_closest_rate_example():
    v = view_of([10, 10], [F(1), F(2)])
    d = select_victim(v, steal_rate(v, 0), np.random.default_rng(0))
    assert (d.victim, d.amount, d.criterion) == (1, 3, CLOSEST_RATE)


def test_select_balanced_gives_none():
    v = view_of([10, 10, 10], [F(1)] * 3)
    assert select_victim(v, 0, np.random.default_rng(0)) is None
    assert select_victim(v, 0, np.random.default_rng(0), idle=True) is None


def test_select_requires_stealable_tasks():
    v = view_of([0, 10], [F(1), F(1)], avail=[0, 0])
    assert select_victim(v, steal_rate(v, 0), np.random.default_rng(0)) is None


def test_amount_capped_by_victim_availability():
    v = view_of([0, 40], [F(1), F(1)], avail=[0, 3])
    d = select_victim(v, steal_rate(v, 0), np.random.default_rng(0))
    assert d.amount == 3


def test_in_pair_used_when_no_closest_rate_candidate():
    # the slow rank 2 is overloaded but has nothing left to steal; rank 1
    # has a positive window rate, yet pairing with it favours a move
    ns, ts = [2, 12, 40], [F(1), F(1), F(8)]
    v = view_of(ns, ts, avail=[1, 11, 0])
    rates = steal_rates(v)
    assert rates[0] > 0 and rates[1] > 0 and rates[2] < 0
    d = select_victim(v, rates[0], np.random.default_rng(0))
    assert d.criterion == IN_PAIR and d.victim == 1
    assert d.amount == round_steal(pair_rate((2, 1), (12, 1)), (2, 1), (12, 1)) == 5


def test_non_positive_rate_only_steals_when_idle():
    ns, ts = [10, 30, 4], [F(1), F(1), F(1, 10)]
    v = view_of(ns, ts)
    s = steal_rate(v, 0)
    assert s <= 0
    assert select_victim(v, s, np.random.default_rng(0)) is None
    d = select_victim(v, s, np.random.default_rng(0), idle=True)
    assert d.criterion == IN_PAIR and d.victim == 1


def test_closest_rate_weight():
    assert closest_rate_weight(3.3, -3.3) == 1.0
    assert closest_rate_weight(3.3, -20) == pytest.approx(1 / 17.7)


def test_closest_rate_sampling_frequency():
    # equal speeds, mean 30: rates are +3.3 (self), -3.3 (a), -20 (b), +20
    ns = [26.7, 33.3, 50.0, 10.0]
    v = view_of(ns, [1.0] * 4, avail=[0, 30, 30, 9])
    rates = steal_rates(v)
    assert rates[0] == pytest.approx(3.3)
    assert rates[1] == pytest.approx(-3.3) and rates[2] == pytest.approx(-20)
    w_a, w_b = closest_rate_weight(3.3, -3.3), closest_rate_weight(3.3, -20)
    expected = w_a / (w_a + w_b)
    assert expected == pytest.approx(17.7 / 18.7)

    rng = np.random.default_rng(12345)
    draws = 100_000
    picks = [select_victim(v, rates[0], rng) for _ in range(draws)]
    assert {d.criterion for d in picks} == {CLOSEST_RATE}
    hits = sum(d.victim == 1 for d in picks)
    sd = (expected * (1 - expected) / draws) ** 0.5
    assert abs(hits / draws - expected) < 5 * sd


@given(st.lists(st.tuples(counts, pos_frac), min_size=2, max_size=9), st.integers(0, 2**32 - 1))
def test_selected_steal_is_within_bounds(entries, seed):
    ns = [n for n, _ in entries]
    ts = [t for _, t in entries]
    v = view_of(ns, ts)
    s = steal_rate(v, 0)
    assume(s > 0)
    d = select_victim(v, s, np.random.default_rng(seed))
    if d is None:
        return
    assert d.victim != 0 and d.amount >= 1
    assert d.amount <= v.entry(d.victim).available
    if d.criterion == CLOSEST_RATE:
        assert steal_rates(v)[d.victim] < 0
        assert d.amount <= round_steal(s, (ns[0], ts[0]), (ns[d.victim], ts[d.victim]))
    else:
        assert pair_rate((ns[0], ts[0]), (ns[d.victim], ts[d.victim])) > 0


def test_view_must_contain_self():
    with pytest.raises(ValueError):
        RateView.from_pairs(5, [(0, 1, 1.0)])
    with pytest.raises(ValueError):
        RateView((), 0)
