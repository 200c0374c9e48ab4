"""Stepsize laws and phase-transition controller."""

import math

import pytest

from oqr.schedules import (
    BATCH,
    FIXED_ITERATION,
    LEAST_SQUARES,
    ONLINE_ONE_SAMPLE,
    ORACLE_RADIUS,
    PLATEAU_DETECT,
    Phase,
    PhaseState,
    ScheduleConfig,
    SwitchPolicy,
    Thresholds,
    batch_boundary_radius,
    default_geo_rate,
    eta0_batch,
    eta0_one_sample,
    eta_constant,
    eta_infinite_phase1,
    eta_least_squares,
    eta_phase1_geometric,
    eta_phase2_inverse_time,
    fixed_t1,
    should_switch,
    switch_radius,
)


def cfg(**kw):
    base = dict(mode=ONLINE_ONE_SAMPLE, d=100)
    base.update(kw)
    return ScheduleConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        cfg(mode="offline")
    with pytest.raises(ValueError):
        cfg(d=0)
    with pytest.raises(ValueError):
        cfg(eta0=0.0)
    with pytest.raises(ValueError):
        cfg(geo_rate=1.0)
    with pytest.raises(ValueError):
        cfg(geo_rate=0.0)
    with pytest.raises(ValueError):
        cfg(const_eta=-1.0)
    with pytest.raises(ValueError):
        cfg(ca=0.0)
    with pytest.raises(ValueError):
        cfg(cb=0.0)
    with pytest.raises(ValueError):
        cfg(b0_over_cl=0.0)
    with pytest.raises(ValueError):
        cfg(cl=2.0, cu=1.0)
    with pytest.raises(ValueError):
        cfg(d0=0.0)


def test_phase_state_validation():
    with pytest.raises(ValueError):
        PhaseState(phase=Phase.THREE, t1=10, t2=5)
    st = PhaseState(phase=Phase.THREE, t1=5, t2=10)
    assert st.t1 == 5 and st.t2 == 10


def test_switch_policy_validation():
    SwitchPolicy(ORACLE_RADIUS)
    SwitchPolicy(FIXED_ITERATION, t1=500)
    SwitchPolicy(FIXED_ITERATION, t1=500, t2=800)
    SwitchPolicy(PLATEAU_DETECT, window=50, rel_improve=0.01)
    with pytest.raises(ValueError):
        SwitchPolicy("guess")
    with pytest.raises(ValueError):
        SwitchPolicy(FIXED_ITERATION)
    with pytest.raises(ValueError):
        SwitchPolicy(FIXED_ITERATION, t1=500, t2=100)
    with pytest.raises(ValueError):
        SwitchPolicy(ORACLE_RADIUS, t1=5)
    with pytest.raises(ValueError):
        SwitchPolicy(PLATEAU_DETECT, window=0, rel_improve=0.01)
    with pytest.raises(ValueError):
        SwitchPolicy(PLATEAU_DETECT, window=5)
    with pytest.raises(ValueError):
        SwitchPolicy(ORACLE_RADIUS, window=5)


def test_thresholds_validation():
    Thresholds(r12=1.0)
    Thresholds(r12=1.0, r23=0.5)
    with pytest.raises(ValueError):
        Thresholds(r12=0.0)
    with pytest.raises(ValueError):
        Thresholds(r12=1.0, r23=-1.0)


def test_geometric_law_values():
    c = cfg(eta0=0.1, geo_rate=1.0 - 0.5 / 100)
    assert eta_phase1_geometric(0, c) == pytest.approx(0.1)
    assert eta_phase1_geometric(2, c) == pytest.approx(0.0990025)
    prev = eta_phase1_geometric(0, c)
    for t in range(1, 2000):
        cur = eta_phase1_geometric(t, c)
        assert 0.0 < cur < prev
        prev = cur
    with pytest.raises(ValueError):
        eta_phase1_geometric(-1, c)


def test_geometric_law_survives_underflow():
    c = cfg(eta0=0.1, geo_rate=0.9)
    assert eta_phase1_geometric(10_000_000, c) > 0.0


def test_inverse_time_law_values():
    c = cfg(ca=15.0, cb=20.0, d=100, b0_over_cl=1.0)
    assert eta_phase2_inverse_time(7, 7, c) == pytest.approx(15.0 / 2000.0)
    c = cfg(ca=20.0, cb=30.0, d=100, b0_over_cl=1.0)
    assert eta_phase2_inverse_time(1000, 0, c) == pytest.approx(0.005)
    # doubling the shifted time halves the stepsize
    v1 = eta_phase2_inverse_time(1000, 0, c)
    v2 = eta_phase2_inverse_time(2 * 1000 + 3000, 0, c)
    assert v2 == pytest.approx(v1 / 2.0)
    # eta * (t - t_start + offset) is constant along the law
    for t in (0, 17, 400, 90_000):
        val = eta_phase2_inverse_time(t, 0, c) * (t + 3000)
        assert val == pytest.approx(20.0, rel=1e-12)


def test_inverse_time_offset_variants():
    flat = cfg(mode=BATCH, ca=2.0, cb=5.0, d=100, offset_scales_with_d=False)
    assert eta_phase2_inverse_time(10, 10, flat) == pytest.approx(2.0 / 5.0)
    with pytest.raises(ValueError):
        eta_phase2_inverse_time(0, 10, flat)


def test_constant_law():
    c = cfg(mode=BATCH, const_eta=0.1)
    assert eta_constant(c) == 0.1


def test_infinite_storage_law():
    c = cfg(mode="infinite_storage", cl=1.0, cu=1.0, d0=8.0)
    assert eta_infinite_phase1(0, c) == pytest.approx(1.0)
    assert eta_infinite_phase1(1, c) == pytest.approx(0.99)
    ratio = eta_infinite_phase1(5, c) / eta_infinite_phase1(4, c)
    assert ratio == pytest.approx(0.99, rel=1e-12)
    assert eta_infinite_phase1(10_000_000, c) > 0.0
    with pytest.raises(ValueError):
        eta_infinite_phase1(0, cfg(mode="infinite_storage"))


def test_least_squares_law():
    c = cfg(mode=LEAST_SQUARES, d=100, ls_const=0.25, ls_decay_const=1.0)
    one = PhaseState()
    assert eta_least_squares(0, one, c) == pytest.approx(0.0025)
    assert eta_least_squares(500, one, c) == pytest.approx(0.0025)
    two = PhaseState(phase=Phase.TWO, t1=300)
    assert eta_least_squares(300, two, c) == pytest.approx(1.0 / 100.0)
    assert eta_least_squares(300 + 100, two, c) == pytest.approx(
        eta_least_squares(300, two, c) / 2.0
    )


def test_oracle_radius_switching():
    pol = SwitchPolicy(ORACLE_RADIUS)
    thr = Thresholds(r12=8.0)
    st = PhaseState()
    assert should_switch(pol, st, 10, 8.1, thr) is st
    st2 = should_switch(pol, st, 11, 7.9, thr)
    assert st2.phase is Phase.TWO and st2.t1 == 11
    with pytest.raises(ValueError):
        should_switch(pol, st, 10, None, thr)
    # boundary is exclusive into phase two
    assert should_switch(pol, st, 10, 8.0, thr) is st
    # third phase requires a configured r23 and an inclusive boundary
    thr3 = Thresholds(r12=8.0, r23=0.5)
    st3 = should_switch(pol, st2, 40, 0.5, thr3)
    assert st3.phase is Phase.THREE and st3.t1 == 11 and st3.t2 == 40
    assert should_switch(pol, st2, 40, 0.6, thr3) is st2
    assert should_switch(pol, st2, 40, 0.4, Thresholds(r12=8.0)) is st2
    # terminal phase never moves
    assert should_switch(pol, st3, 99, 0.0, thr3) is st3


def test_fixed_iteration_switching():
    pol = SwitchPolicy(FIXED_ITERATION, t1=500, t2=900)
    thr = Thresholds(r12=1.0)
    st = PhaseState()
    assert should_switch(pol, st, 499, None, thr) is st
    st2 = should_switch(pol, st, 500, None, thr)
    assert st2.phase is Phase.TWO and st2.t1 == 500
    assert should_switch(pol, st2, 600, None, thr) is st2
    st3 = should_switch(pol, st2, 900, None, thr)
    assert st3.phase is Phase.THREE and st3.t2 == 900


def test_plateau_switching():
    pol = SwitchPolicy(PLATEAU_DETECT, window=3, rel_improve=0.05)
    thr = Thresholds(r12=1.0)
    st = PhaseState()
    # strong improvement: stays in phase one with a rolling buffer
    errs = [1.0, 0.8, 0.6, 0.4, 0.3]
    for t, e in enumerate(errs):
        st = should_switch(pol, st, t, e, thr)
        assert st.phase is Phase.ONE
        assert len(st.window) <= 4
    # stalled: improvement over the window drops below 5%
    for t, e in enumerate([0.30, 0.30, 0.299], start=5):
        st = should_switch(pol, st, t, e, thr)
    assert st.phase is Phase.TWO and st.t1 == 7
    # freshly reset buffer: no immediate second switch without r23
    for t, e in enumerate([0.3] * 10, start=8):
        st = should_switch(pol, st, t, e, thr)
    assert st.phase is Phase.TWO
    with pytest.raises(ValueError):
        should_switch(pol, PhaseState(), 0, None, thr)


def test_plateau_never_switches_before_window():
    pol = SwitchPolicy(PLATEAU_DETECT, window=10, rel_improve=0.5)
    thr = Thresholds(r12=1.0)
    st = PhaseState()
    for t in range(10):
        st = should_switch(pol, st, t, 1.0, thr)
        assert st.phase is Phase.ONE
    st = should_switch(pol, st, 10, 1.0, thr)
    assert st.phase is Phase.TWO and st.t1 == 10


def test_calibration_helpers():
    assert eta0_one_sample(d0=16.0, d=20, tau_bar=0.5) == pytest.approx(
        2.0 * 16.0 / (0.25 * 20)
    )
    assert eta0_batch(d0=16.0) == pytest.approx(32.0)
    assert default_geo_rate(100, 0.5, c5=0.125) == pytest.approx(0.995)
    assert default_geo_rate(100, 0.5) == pytest.approx(1.0 - 0.2 / 100)
    assert fixed_t1(20, 16.0, 0.8) == math.ceil(2 * 20 * math.log(20.0))
    assert fixed_t1(1, 1.0, 10.0) == 1  # floor at one step
    with pytest.raises(ValueError):
        fixed_t1(10, -1.0, 1.0)
    assert switch_radius(1.0, cl=4.0) == pytest.approx(4.0)
    assert switch_radius(1.0, infinite=True) == pytest.approx(8.0)
    assert batch_boundary_radius(4, 16, b0=2.0, tau_bar=0.5) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        batch_boundary_radius(4, 0, b0=2.0, tau_bar=0.5)
