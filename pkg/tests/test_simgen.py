import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from maxlogrank.exceptions import DomainError
from maxlogrank.numerics import RngStream
from maxlogrank.simgen import (
    CASES,
    Scenario,
    baseline_cum_hazard,
    baseline_hazard,
    baseline_time,
    generate_trial,
    group1_cum_hazard,
    group1_time,
    group1_times,
    hazard_ratio,
    load_scenario,
    type1_scenario,
    type2_scenario,
)


def test_baseline_time_inverts_log_logistic_survival():
    u = np.array([0.1, 0.5, 0.9])
    t = baseline_time(2, 15, u)
    np.testing.assert_allclose(15**2 / (15**2 + t**2), u, rtol=1e-14)


def test_baseline_median_is_scale():
    assert baseline_time(2.0, 15.0, 0.5) == pytest.approx(15.0)


def test_baseline_hazard_is_derivative_of_cum_hazard():
    t = np.array([0.5, 3.0, 15.0, 60.0])
    h = 1e-6
    num = (baseline_cum_hazard(t + h, 2, 15) - baseline_cum_hazard(t - h, 2, 15)) / (2 * h)
    np.testing.assert_allclose(baseline_hazard(t, 2, 15), num, rtol=1e-7)


def test_hazard_ratio_shapes():
    assert hazard_ratio("A", 5.0) == 0.5 and hazard_ratio("A", 30.0) == 1.5
    assert hazard_ratio("A", 17.5) == pytest.approx(1.0)
    assert hazard_ratio("B", 0.0) == pytest.approx(3.8)
    assert hazard_ratio("C", 20.0) == pytest.approx(1.75)
    assert hazard_ratio("D", 0.0) == 1.0
    assert hazard_ratio("E", 0.0) == pytest.approx(math.e)
    assert hazard_ratio("F", 50.0) == 0.98 and hazard_ratio("F", 40.0) == pytest.approx(0.98)
    assert hazard_ratio("G", 3.0) == 1.5 and hazard_ratio("H", 3.0) == 1.0


def test_case_h_is_baseline():
    u = np.linspace(0.01, 0.99, 25)
    np.testing.assert_allclose(group1_times("H", 2, 15, u), baseline_time(2, 15, u), rtol=1e-13)


def test_case_g_closed_form():
    # S1 = S0^1.5, so t = beta ((1 - u^(2/3)) / u^(2/3))^(1/2).
    u = 0.25
    expected = 15 * math.sqrt((1 - u ** (2 / 3)) / u ** (2 / 3))
    assert group1_time("G", 2, 15, u) == pytest.approx(expected, abs=1e-8)
    assert group1_times("G", 2, 15, [u])[0] == pytest.approx(18.49, abs=0.01)


@pytest.mark.parametrize("case", CASES)
def test_inverse_solves_cumulative_hazard(case):
    u = np.r_[np.geomspace(1e-12, 0.5, 30), np.linspace(0.5, 1 - 1e-9, 30)]
    t = group1_times(case, 2.0, 15.0, u)
    for ti, ui in zip(t, u):
        assert group1_cum_hazard(case, ti, 2.0, 15.0) == pytest.approx(-math.log(ui),
                                                                      rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("case", CASES)
def test_vector_and_scalar_inverse_agree(case):
    u = np.array([0.9, 0.4, 0.05, 1e-4])
    vec = group1_times(case, 2.0, 12.0, u)
    for v, ui in zip(vec, u):
        assert v == pytest.approx(group1_time(case, 2.0, 12.0, ui), rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(CASES), st.floats(min_value=1e-8, max_value=0.999),
       st.floats(min_value=1e-8, max_value=0.999))
def test_group1_time_decreasing_in_u(case, u1, u2):
    if u1 == u2:
        return
    lo, hi = sorted((u1, u2))
    t = group1_times(case, 2.0, 25.0, [lo, hi])
    assert t[0] > t[1]


def test_extreme_draws_stay_finite_or_infinite():
    t = group1_times("B", 2.0, 15.0, [5e-324, 1e-16])
    assert np.all(t > 1e6)
    assert not np.any(np.isnan(t))


def test_case_h_groups_share_a_distribution():
    gen = np.random.default_rng(0)
    a = baseline_time(2, 15, 1 - gen.random(10_000))
    b = group1_times("H", 2, 15, 1 - gen.random(10_000))
    assert stats.ks_2samp(a, b).pvalue > 0.01


def test_type1_follow_up_window():
    scn = type1_scenario(240, 15, "A")
    trial = generate_trial(scn, RngStream(3))
    assert np.all(trial.time <= 42)
    censored = ~trial.event
    assert np.all(trial.time[censored] >= 24 - 1e-12)
    assert len(trial.time) == 240


def test_type2_stops_at_target_events():
    scn = type2_scenario(120, 1 / 3, "C")
    assert scn.target_events == 80
    for k in range(5):
        trial = generate_trial(scn, RngStream(9, k))
        assert trial.event.sum() == 80
        assert np.all(trial.time > 0)
        assert trial.dropped + len(trial.time) == 120


def test_event_targets_round_as_published():
    pairs = {(60, 1 / 6): 50, (120, 1 / 6): 100, (240, 1 / 6): 200, (60, 1 / 3): 40,
             (240, 1 / 3): 160, (60, 0.5): 30, (240, 0.5): 120}
    for (n, phi), d in pairs.items():
        assert type2_scenario(n, phi, "H").target_events == d


def test_generation_is_deterministic():
    scn = type1_scenario(60, 25, "B")
    a = generate_trial(scn, RngStream(1, 2))
    b = generate_trial(scn, RngStream(1, 2))
    np.testing.assert_array_equal(a.time, b.time)
    np.testing.assert_array_equal(a.event, b.event)


def _mean_censoring(scn, reps):
    r = np.array([[t.censor_rate0, t.censor_rate1]
                  for t in (generate_trial(scn, RngStream(5, i)) for i in range(reps))])
    return r.mean(axis=0)


def test_type2_null_censoring_rates():
    r0, r1 = _mean_censoring(type2_scenario(240, 0.5, "H"), 2000)
    assert r0 == pytest.approx(0.50, abs=0.01)
    assert r1 == pytest.approx(0.50, abs=0.01)


def test_type1_crossing_censoring_rates():
    r0, r1 = _mean_censoring(type1_scenario(240, 15, "A"), 2000)
    assert r0 == pytest.approx(0.18, abs=0.02)
    assert r1 == pytest.approx(0.18, abs=0.02)


@pytest.mark.parametrize("kwargs", [
    dict(mechanism="TypeIII", n_total=10, case="A"),
    dict(mechanism="TypeI", n_total=11, case="A"),
    dict(mechanism="TypeI", n_total=10, case="Z"),
    dict(mechanism="TypeI", n_total=10, case="A", beta=0.0),
    dict(mechanism="TypeII", n_total=10, case="A", target_event_fraction=0.0),
])
def test_invalid_scenarios(kwargs):
    with pytest.raises(DomainError):
        Scenario(**kwargs)


def test_scenario_file_round_trip(tmp_path):
    scn = type2_scenario(120, 1 / 3, "E")
    path = tmp_path / "scn.txt"
    path.write_text(scn.to_text())
    assert load_scenario(path) == scn


def test_scenario_file_defaults(tmp_path):
    path = tmp_path / "scn.txt"
    path.write_text("# event-driven\nmechanism = TypeII\nn_total = 60\ncase = B\n"
                    "target_event_fraction = 0.5\n")
    scn = load_scenario(path)
    assert (scn.beta, scn.accrual_weeks, scn.target_events) == (12.0, 24.0, 30)


@pytest.mark.parametrize("text", ["mechanism = TypeI\nn_total = 60\n",
                                  "mechanism = TypeI\nn_total = x\ncase = A\n",
                                  "mechanism = TypeI\nn_total = 60\ncase = A\ncolour = red\n"])
def test_bad_scenario_files(tmp_path, text):
    path = tmp_path / "scn.txt"
    path.write_text(text)
    with pytest.raises(DomainError):
        load_scenario(path)
