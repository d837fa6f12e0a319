import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from antiviral_dynamics.analysis import critical_efficacy, early_treatment_time
from antiviral_dynamics.dynamics import EfficacySchedule, integrate, locate_events
from antiviral_dynamics.metrics import (
    HorizonTooShortError,
    MissingPeakError,
    delta_v,
    duration_of_infection,
    duration_on_grid,
    metrics_report,
    time_to_peak,
)
from antiviral_dynamics.workbench.registry import get_patient


def test_delta_v_identity(untreated_runs):
    traj, _ = untreated_runs["A"]
    assert delta_v(traj, traj) == 0.0
    assert delta_v(traj, traj, log=False) == 0.0


def test_delta_v_needs_an_untreated_peak():
    short = integrate(get_patient("A"), horizon=5.0)
    with pytest.raises(MissingPeakError):
        delta_v(short, short)


def test_effective_early_treatment_drops_more_than_two_logs(untreated_runs):
    _, ev = untreated_runs["A"]
    P = get_patient("A")
    ec = critical_efficacy(P, float(untreated_runs["A"][0].U_at(ev.t_detect)))
    rep = metrics_report(P, EfficacySchedule(ev.t_detect, 0.0, min(0.99, ec + 0.05)), max_horizon=800.0)
    assert rep.effective
    assert rep.delta_v > 2.0


def test_subcritical_drop_is_smaller_than_effective_drop(untreated_runs):
    _, ev = untreated_runs["B"]
    P = get_patient("B")
    weak = metrics_report(P, EfficacySchedule(ev.t_detect, 0.0, 0.73), max_horizon=400.0)
    strong = metrics_report(P, EfficacySchedule(ev.t_detect, 0.0, 0.9), max_horizon=800.0)
    assert 0 < weak.delta_v < strong.delta_v


def test_duration_zero_below_detection():
    P = get_patient("B")
    eta = 1 - 0.8 / P.R0
    traj = integrate(P, EfficacySchedule(0.0, eta, 0.0), horizon=50.0)
    assert duration_of_infection(traj) == 0.0


def test_duration_requires_a_long_enough_horizon():
    traj = integrate(get_patient("B"), EfficacySchedule(4.0, 0.0, 0.73), horizon=60.0)
    with pytest.raises(HorizonTooShortError):
        duration_of_infection(traj)


def test_duration_patient_b_first_start():
    rep = metrics_report(get_patient("B"), EfficacySchedule(4.0, 0.0, 0.73), max_horizon=400.0)
    assert rep.di == pytest.approx(96.0, rel=0.10)


def test_duration_patient_e_first_start():
    rep = metrics_report(get_patient("E"), EfficacySchedule(4.0, 0.0, 0.54), max_horizon=400.0)
    assert rep.di == pytest.approx(95.0, rel=0.10)


@pytest.mark.parametrize("key,t_hat", [("C", 4.42), ("I", 7.09)])
def test_time_to_peak_published(key, t_hat, untreated_runs):
    assert time_to_peak(untreated_runs[key][0]) == pytest.approx(t_hat, abs=0.05)


def test_time_to_peak_effective_treatment():
    traj = integrate(get_patient("D"), EfficacySchedule(2.0, 0.0, 0.99), horizon=80.0)
    assert time_to_peak(traj) == 2.0


def test_report_without_treatment():
    rep = metrics_report(get_patient("A"), EfficacySchedule.untreated())
    assert rep.effective is False
    assert rep.delta_v == 0.0
    assert rep.di > 0 and rep.v_max >= 100.0


def test_report_effective_patient_b():
    rep = metrics_report(get_patient("B"), EfficacySchedule(8.0, 0.0, 0.9), max_horizon=800.0)
    assert rep.effective
    assert rep.t_peak == 8.0


def test_report_ineffective_patient_e():
    P = get_patient("E")
    t_e = early_treatment_time(P, 0.54)
    rep = metrics_report(P, EfficacySchedule(0.5 * t_e, 0.0, 0.54), max_horizon=400.0)
    assert not rep.effective
    assert rep.t_peak > rep.t_peak_untreated


@settings(max_examples=15, deadline=None)
@given(key=st.sampled_from(list("ABCDEFGHI")), frac=st.floats(0.05, 0.99), ep=st.floats(0.0, 0.99))
def test_treated_peak_never_exceeds_untreated(key, frac, ep, untreated_runs):
    _, ev = untreated_runs[key]
    rep = metrics_report(get_patient(key), EfficacySchedule(frac * ev.t_v_max, 0.0, ep), max_horizon=3200.0)
    assert rep.delta_v >= -1e-9


def test_peak_time_grows_with_subcritical_efficacy(untreated_runs):
    traj, ev = untreated_runs["B"]
    P = get_patient("B")
    ec = critical_efficacy(P, float(traj.U_at(ev.t_detect)))
    times = []
    for eta in np.linspace(0.0, ec - 0.01, 8):
        run = integrate(P, EfficacySchedule(ev.t_detect, 0.0, eta), horizon=400.0)
        times.append(time_to_peak(run))
    assert all(b >= a for a, b in zip(times, times[1:]))


def test_duration_shrinks_with_supercritical_efficacy(untreated_runs):
    traj, ev = untreated_runs["B"]
    P = get_patient("B")
    ec = critical_efficacy(P, float(traj.U_at(ev.t_detect)))
    dis = [
        metrics_report(P, EfficacySchedule(ev.t_detect, 0.0, eta), max_horizon=6400.0).di
        for eta in np.linspace(ec + 0.02, 0.99, 6)
    ]
    assert all(b <= a for a, b in zip(dis, dis[1:]))


@pytest.mark.parametrize("t_tr", [4.0, 9.0, 17.0])
def test_duration_grid_cross_check(t_tr):
    traj = integrate(get_patient("B"), EfficacySchedule(t_tr, 0.0, 0.73), horizon=200.0)
    assert abs(duration_of_infection(traj) - duration_on_grid(traj)) < 0.05
