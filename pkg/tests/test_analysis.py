import io
import math
import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laser_rke.analysis import (
    LatencyStats,
    StatsError,
    empirical_success_curve,
    estimate_threshold,
    read_dataset,
    relay_margin,
    relay_predicate,
    success_rate_experiment,
    write_dataset,
    write_stats,
)
from laser_rke.simnet import RKE_LATENCY, sample_latency

DATA = Path(__file__).parent / "data"


def brute_q3(xs):
    """Sort and interpolate between closest ranks at p = 0.75."""
    s = sorted(xs)
    pos = 0.75 * (len(s) - 1)
    lo = math.floor(pos)
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (pos - lo) * (s[hi] - s[lo])


def test_q3_small_example():
    assert estimate_threshold([1, 2, 3, 4]).t_q3 == 3.25


def test_constant_dataset():
    st_ = estimate_threshold([7.5] * 10)
    assert (st_.t_min, st_.t_max, st_.t_avg, st_.t_q3) == (7.5, 7.5, 7.5, 7.5)


def test_too_few_samples():
    with pytest.raises(StatsError):
        estimate_threshold([1, 2, 3])
    with pytest.raises(StatsError):
        estimate_threshold([1, 2, float("nan"), 4])


def test_matches_oracle_on_random_datasets():
    rng = random.Random(42)
    for _ in range(1000):
        xs = [rng.choice([rng.randint(0, 300), rng.uniform(0, 300)]) for _ in range(rng.randint(4, 60))]
        assert estimate_threshold(xs).t_q3 == pytest.approx(brute_q3(xs), rel=0, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=4, max_size=50))
def test_stats_invariants(xs):
    s = estimate_threshold(xs)
    eps = 1e-9 * max(1.0, s.t_max)
    assert s.t_min - eps <= s.t_avg <= s.t_max + eps
    assert s.t_min <= s.t_q3 <= s.t_max
    assert s.sample_count == len(xs)


def test_model_sample_q3():
    rng = random.Random(8)
    xs = [sample_latency(RKE_LATENCY, rng) for _ in range(1000)]
    assert abs(estimate_threshold(xs).t_q3 - 79) <= 2


def test_table1_fixtures_and_policies():
    rke = estimate_threshold(read_dataset(DATA / "rke_table1.csv"))
    assert (rke.t_max, rke.t_min, rke.t_avg, rke.t_q3) == (136, 55, 71, 79)
    assert rke.gamma("q3") == 79 and rke.gamma("max") == 136 and rke.gamma("avg") == 71
    prke = estimate_threshold(read_dataset(DATA / "prke_table1.csv"))
    assert (prke.t_max, prke.t_min, prke.t_avg, prke.t_q3) == (175, 113, 157, 164)
    with pytest.raises(ValueError):
        rke.gamma("median")


def test_stats_row_order():
    row = LatencyStats(136, 55, 71, 79, 9).row("RKE")
    assert list(row) == ["system", "t_max", "t_min", "t_avg", "t_Q3"]
    assert write_stats([row]) == "system,t_max,t_min,t_avg,t_Q3\nRKE,136,55,71,79\n"


def test_dataset_round_trip(tmp_path):
    xs = [55.5, 60.0, 79.123, 136.0]
    p = tmp_path / "d.csv"
    write_dataset(xs, p)
    assert read_dataset(p) == xs
    assert read_dataset(io.StringIO("1\n2\n\n3\n")) == [1, 2, 3]


def test_dataset_errors():
    with pytest.raises(StatsError, match=":3:"):
        read_dataset(io.StringIO("ms\n1\nabc\n"))
    with pytest.raises(StatsError):
        read_dataset(io.StringIO("1,2\n"))
    with pytest.raises(StatsError):
        read_dataset(io.StringIO("inf\n"))


def test_relay_margin():
    assert relay_margin(79, 55) == 24
    assert relay_margin(164, 113) == 51
    assert relay_margin(42.5, 42.5) == 0
    with pytest.raises(ValueError):
        relay_margin(10, 11)


def test_relay_predicate_boundary():
    assert relay_predicate([55, 24], 79)
    assert not relay_predicate([55, 24.001], 79)
    assert relay_predicate([55, 10.5, 0, 58, 10.5, 30], 164)


def test_success_rate_extremes():
    r = success_rate_experiment(136, RKE_LATENCY, 500, 1, seed=1)
    assert r.per_message_rate == 1.0 and r.per_press_rate == 1.0
    r = success_rate_experiment(54, RKE_LATENCY, 500, 6, seed=1)
    assert r.per_message_rate == 0.0 and r.per_press_rate == 0.0


def test_success_rate_monotone_in_gamma():
    rates = [success_rate_experiment(g, RKE_LATENCY, 500, 3, seed=5) for g in range(50, 140, 5)]
    msg = [r.per_message_rate for r in rates]
    assert msg == sorted(msg)
    assert all(r.per_press_rate >= r.per_message_rate for r in rates)


def test_single_message_rates_equal():
    r = success_rate_experiment(79, RKE_LATENCY, 1000, 1, seed=2)
    assert r.per_press_rate == r.per_message_rate
    per_message, per_press = r
    assert per_message == r.per_message_rate


def test_success_rate_validation():
    with pytest.raises(ValueError):
        success_rate_experiment(79, RKE_LATENCY, 0)
    with pytest.raises(ValueError):
        success_rate_experiment(79, RKE_LATENCY, 10, 0)


def test_empirical_curve():
    curve = empirical_success_curve([1, 2, 3, 4], [0, 2, 4], 2)
    assert [c.per_message_rate for c in curve] == [0, 0.5, 1]
    assert curve[1].per_press_rate == 0.75
