import logging
import math

import numpy as np
import pytest

from hmo import hybrid, observers, plants, supervisor
from hmo.supervisor import (
    DimensionMismatch,
    StateLayout,
    SupervisorConfig,
    SupervisorState,
    apply_jump,
    assemble,
    discounted_response,
    eta_closed_form,
    eta_closed_form_trace,
    eta_flow,
    jump_guard,
    select_mode,
    split_arc,
    switch_events_from_arc,
)


def make_cfg(**kw):
    base = dict(nu=1.0, lambda1=1.0, lambda2=np.eye(2), epsilon=0.1)
    base.update(kw)
    return SupervisorConfig(**base)


# ---------------------------------------------------------------------------
# Config validation


def test_config_rejects_bad_scalars():
    with pytest.raises(ValueError):
        make_cfg(nu=0.0)
    with pytest.raises(ValueError):
        make_cfg(epsilon=-1.0)
    with pytest.raises(ValueError):
        make_cfg(reset=2)
    with pytest.raises(ValueError):
        make_cfg(tie_break="coin-flip")
    with pytest.raises(ValueError):
        make_cfg(zeta=0.0)


def test_config_rejects_bad_weights():
    with pytest.raises(ValueError):
        make_cfg(lambda2=np.array([[1.0, 0.5], [0.0, 1.0]]))  # not symmetric
    with pytest.raises(ValueError):
        make_cfg(lambda2=np.array([[1.0, 0.0], [0.0, -1.0]]))  # indefinite
    # both only semidefinite is not enough
    with pytest.raises(ValueError):
        make_cfg(lambda1=0.0, lambda2=np.diag([1.0, 0.0]))
    # semidefinite lambda2 is fine when lambda1 is definite
    make_cfg(lambda1=1.0, lambda2=np.zeros((2, 2)))


# ---------------------------------------------------------------------------
# Monitor flow


def test_eta_flow_pure_decay():
    cfg = make_cfg(nu=5.0)
    assert eta_flow(10.0, np.zeros((2, 1)), 1.3, 1.3, cfg) == pytest.approx(-50.0)


def test_eta_flow_null_gain_scalar():
    cfg = SupervisorConfig(nu=5.0, lambda1=1.0, lambda2=1.0, epsilon=0.1)
    assert eta_flow(0.0, 0.0, 3.0, 1.0, cfg) == pytest.approx(4.0)


def test_eta_flow_battery_hand_value():
    # 1 + 2.07^2 + 1e-4 * 2.48^2 by hand
    cfg = SupervisorConfig(nu=0.05, lambda1=1.0,
                           lambda2=np.diag([1.0, 1e-4]), epsilon=1e-2)
    got = eta_flow(0.0, np.array([-2.07, 2.48]), 1.0, 0.0, cfg)
    assert got == pytest.approx(5.28551504, abs=1e-10)


def test_eta_flow_decay_plus_drive_superpose():
    cfg = make_cfg(nu=2.0, lambda2=np.diag([0.5, 0.25]))
    L = np.array([1.0, -2.0])
    drive = eta_flow(0.0, L, 2.0, 0.5, cfg)
    assert eta_flow(7.0, L, 2.0, 0.5, cfg) == pytest.approx(drive - 14.0)


# ---------------------------------------------------------------------------
# Closed-form monitor response


def test_discounted_response_pure_decay():
    t = np.linspace(0.0, 1.0, 1001)
    out = discounted_response(10.0, t, np.zeros_like(t), 5.0)
    assert out[0] == 10.0
    assert out[-1] == pytest.approx(10.0 * math.exp(-5.0), rel=1e-9)


def test_discounted_response_constant_forcing():
    nu, q, eta0, T = 5.0, 3.0, 2.0, 1.0
    t = np.arange(0.0, T + 1e-12, 1e-4)
    out = discounted_response(eta0, t, np.full_like(t, q), nu)
    exact = (q / nu) * (1.0 - math.exp(-nu * T)) + math.exp(-nu * T) * eta0
    assert abs(out[-1] - exact) < 1e-6


def test_discounted_response_nonuniform_grid():
    # the recurrence handles per-interval widths; exactness only needs q const
    nu, q = 0.7, 2.0
    t = np.sort(np.concatenate([np.linspace(0, 2, 201),
                                np.linspace(0.0005, 1.9995, 157)]))
    out = discounted_response(0.0, t, np.full_like(t, q), nu)
    exact = (q / nu) * (1.0 - math.exp(-nu * 2.0))
    assert abs(out[-1] - exact) < 1e-4


def test_discounted_response_rejects_bad_grid():
    with pytest.raises(ValueError):
        discounted_response(0.0, [0.0, 1.0, 0.5], [0.0, 0.0, 0.0], 1.0)
    with pytest.raises(ValueError):
        discounted_response(0.0, [0.0, 1.0], [0.0], 1.0)


def test_eta_closed_form_matches_weighted_forcing():
    cfg = SupervisorConfig(nu=3.0, lambda1=2.0, lambda2=np.diag([1.0, 4.0]),
                           epsilon=0.1)
    L = np.array([0.5, -1.0])
    w = 2.0 + (0.5 ** 2) * 1.0 + 1.0 * 4.0  # lambda1 + L' lambda2 L
    t = np.linspace(0.0, 1.5, 601)
    inn = np.sin(3.0 * t)
    trace = eta_closed_form_trace(1.0, t, inn, L, cfg)
    ref = discounted_response(1.0, t, w * inn * inn, cfg.nu)
    np.testing.assert_allclose(trace, ref, rtol=0, atol=1e-14)
    assert eta_closed_form(1.0, t, inn, L, cfg) == trace[-1]


# ---------------------------------------------------------------------------
# Guard and selection


def test_jump_guard_examples():
    assert jump_guard([5.0, 3.0], 2) == pytest.approx(2.0)
    assert jump_guard([3.0, 3.0], 1) == 0.0
    assert jump_guard([4.0, 2.0, 7.0], 3) == pytest.approx(-5.0)


def test_jump_guard_snaps_near_ties_to_zero():
    assert jump_guard([3.0, 3.0 + 5e-13], 1) == 0.0
    assert jump_guard([3.0, 3.0 - 5e-13], 1) == 0.0
    assert jump_guard([3.0, 4.0], 1) == pytest.approx(1.0)


def test_select_mode_unique_minimizer():
    cfg = make_cfg()
    assert select_mode([5.0, 2.0, 7.0], 1, [0.0, 0.0, 0.0], cfg) == 2


def test_select_mode_breaks_eta_tie_by_rate():
    cfg = make_cfg()
    assert select_mode([5.0, 3.0, 3.0], 1, [0.0, -1.0, -2.0], cfg) == 3


def test_select_mode_lowest_index_on_full_tie():
    cfg = make_cfg()
    assert select_mode([5.0, 3.0, 3.0], 1, [0.0, -1.0, -1.0], cfg) == 2


def test_select_mode_seeded_random_is_deterministic():
    cfg = make_cfg(tie_break="seeded-random", tie_seed=7)
    picks = {select_mode([5.0, 3.0, 3.0], 1, [0.0, -1.0, -1.0], cfg,
                         rng=np.random.default_rng(7)) for _ in range(5)}
    assert len(picks) == 1
    assert picks.pop() in (2, 3)


def test_select_mode_excludes_active_mode():
    cfg = make_cfg()
    # mode 2 holds the global minimum but is active, so 1 and 3 compete
    assert select_mode([4.0, 1.0, 5.0], 2, [0.0, 0.0, 0.0], cfg) == 1


def test_select_mode_needs_an_alternative():
    cfg = make_cfg()
    with pytest.raises(DimensionMismatch):
        select_mode([1.0], 1, [0.0], cfg)


# ---------------------------------------------------------------------------
# Reset rule


def state_of(eta, sigma, xhat=None, n_modes=None):
    m = n_modes or len(eta)
    xh = np.asarray(xhat, dtype=float) if xhat is not None \
        else np.zeros((m, 2))
    return SupervisorState(
        x=np.array([0.5, -0.5]),
        xhat=xh,
        eta=np.asarray(eta, dtype=float),
        sigma=sigma,
        internals=[np.empty(0)] * m,
    )


def test_apply_jump_tie_without_penalty_targets():
    cfg = make_cfg(epsilon=0.1, reset=0)
    s2, ev = apply_jump(state_of([3.0, 3.0], 1), [0.0, 0.0], cfg)
    assert s2.sigma == 2
    np.testing.assert_array_equal(s2.eta, [3.0, 3.0])
    np.testing.assert_array_equal(s2.xhat, np.zeros((2, 2)))
    assert ev.sigma_before == 1 and ev.sigma_after == 2


def test_apply_jump_penalizes_unselected_alternatives():
    cfg = make_cfg(epsilon=0.1, reset=0)
    s2, _ = apply_jump(state_of([3.0, 3.0, 4.0], 2), [0.0, 0.0, 0.0], cfg)
    assert s2.sigma == 1
    np.testing.assert_allclose(s2.eta, [3.0, 3.1, 4.1], rtol=0, atol=1e-15)


def test_apply_jump_reset_pulls_estimates_to_selected_mode():
    cfg = make_cfg(epsilon=0.1, reset=1)
    xhat = np.array([[1.0, 0.0], [2.0, 0.5], [3.0, -0.5]])
    s2, ev = apply_jump(state_of([5.0, 2.0, 2.0], 1, xhat),
                        [0.0, -1.0, 0.0], cfg)
    assert s2.sigma == 2
    np.testing.assert_array_equal(s2.xhat[0], [1.0, 0.0])   # nominal untouched
    np.testing.assert_array_equal(s2.xhat[1], [2.0, 0.5])
    np.testing.assert_array_equal(s2.xhat[2], [2.0, 0.5])   # reset to mode 2
    np.testing.assert_allclose(s2.eta, [5.0, 2.0, 2.1], rtol=0, atol=1e-15)
    assert ev.reset_applied


def test_apply_jump_passes_plant_state_and_internals_through():
    cfg = make_cfg(epsilon=0.1, reset=1)
    s = state_of([4.0, 1.0, 9.0], 1)
    s.internals = [np.empty(0), np.array([1.0, 2.0, 3.0]), np.empty(0)]
    s.x_f = np.array([0.25, 0.75])
    s2, _ = apply_jump(s, [0.0, 0.0, 0.0], cfg)
    np.testing.assert_array_equal(s2.x, s.x)
    np.testing.assert_array_equal(s2.internals[1], [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(s2.x_f, [0.25, 0.75])
    assert s2.eta is not s.eta  # fresh arrays, no aliasing


def test_apply_jump_nominal_row_is_bit_identical():
    cfg = make_cfg(epsilon=0.3, reset=1)
    xhat = np.array([[0.1234567890123456, -7.5], [2.0, 2.0], [3.0, 3.0]])
    s2, _ = apply_jump(state_of([10.0, 1.0, 1.5], 3, xhat),
                       [0.0, 0.0, 0.0], cfg)
    assert s2.eta[0] == 10.0
    assert (s2.xhat[0] == xhat[0]).all()


def test_apply_jump_warns_when_fired_off_the_boundary(caplog):
    cfg = make_cfg(epsilon=0.1, reset=0)
    with caplog.at_level(logging.WARNING, logger="hmo.supervisor"):
        s2, _ = apply_jump(state_of([5.0, 2.0, 3.0], 1), [0.0, 0.0, 0.0], cfg)
    assert s2.sigma == 2
    assert any("ambiguous" in rec.message for rec in caplog.records)


def test_apply_jump_quiet_at_guard_boundary(caplog):
    cfg = make_cfg(epsilon=0.1, reset=0)
    with caplog.at_level(logging.WARNING, logger="hmo.supervisor"):
        apply_jump(state_of([2.0, 2.0, 3.0], 1), [0.0, 0.0, 0.0], cfg)
    assert not caplog.records


# ---------------------------------------------------------------------------
# State layout


def test_layout_dimensions_match_mode_banks():
    # five constant-gain modes on a 2-state plant
    assert StateLayout(2, 5, [0] * 5, False).dim == 18
    # three constant gains plus one EKF with packed 2x2 covariance
    assert StateLayout(2, 4, [0, 0, 0, 3], False).dim == 18
    # filtered estimate adds n_x entries
    assert StateLayout(2, 5, [0] * 5, True).dim == 20


def test_layout_pack_unpack_roundtrip():
    lay = StateLayout(2, 3, [0, 3, 0], True)
    s = SupervisorState(
        x=np.array([1.0, -2.0]),
        xhat=np.array([[0.1, 0.2], [0.3, 0.4], [0.5, 0.6]]),
        eta=np.array([7.0, 8.0, 9.0]),
        sigma=3,
        internals=[np.empty(0), np.array([1.0, 0.5, 2.0]), np.empty(0)],
        x_f=np.array([0.25, 0.5]),
    )
    q = lay.pack(s)
    assert q.shape == (lay.dim,)
    s2 = lay.unpack(q)
    np.testing.assert_array_equal(s2.x, s.x)
    np.testing.assert_array_equal(s2.xhat, s.xhat)
    np.testing.assert_array_equal(s2.eta, s.eta)
    np.testing.assert_array_equal(s2.internals[1], s.internals[1])
    np.testing.assert_array_equal(s2.x_f, s.x_f)
    assert s2.sigma == 3


def test_layout_requires_filter_state_when_declared():
    lay = StateLayout(1, 2, [0, 0], True)
    s = SupervisorState(np.zeros(1), np.zeros((2, 1)), np.zeros(2), 1,
                        [np.empty(0)] * 2, None)
    with pytest.raises(DimensionMismatch):
        lay.pack(s)


def test_layout_column_names():
    modes = [
        observers.ObserverMode(1, observers.ConstantGain(np.zeros(1))),
        observers.ObserverMode(2, observers.EkfGain(1.0, [[0.0]], 0.0, [[1.0]])),
    ]
    lay = StateLayout(1, 2, [0, 1], False)
    assert lay.column_names(modes) == [
        "x1", "xhat1_1", "xhat2_1", "eta1", "eta2", "p2_11", "sigma"]
    assert len(lay.column_names()) == lay.dim


# ---------------------------------------------------------------------------
# Assembly on a hand-solvable toy: static unit plant, two modes


def toy_supervisor(zeta=None, eps=0.01):
    plant = plants.PlantModel(
        name="hold", state_dim=1,
        dynamics=lambda x, u, v: np.zeros(1),
        output=lambda x, u, w: float(x[0]) + w,
        params=None)
    family = observers.LinearObserverFamily([[0.0]], [0.0], [1.0])
    modes = [observers.ObserverMode(1, observers.ConstantGain(np.zeros(1))),
             observers.ObserverMode(2, observers.ConstantGain(np.array([2.0])))]
    cfg = SupervisorConfig(nu=1.0, lambda1=1.0, lambda2=np.zeros((1, 1)),
                           epsilon=eps, zeta=zeta)
    return assemble(plant, modes, cfg, family=family)


def test_assemble_rejects_degenerate_banks():
    sup = toy_supervisor()
    with pytest.raises(DimensionMismatch):
        assemble(sup.plant, sup.modes[:1], sup.cfg, family=sup.family)
    bad = [observers.ObserverMode(2, sup.modes[0].gain),
           observers.ObserverMode(1, sup.modes[1].gain)]
    with pytest.raises(DimensionMismatch):
        assemble(sup.plant, bad, sup.cfg, family=sup.family)
    with pytest.raises(DimensionMismatch):
        assemble(sup.plant, sup.modes, make_cfg(), family=sup.family)  # 2x2 weights
    two_state = observers.LinearObserverFamily(np.eye(2), np.zeros(2),
                                               np.array([1.0, 0.0]))
    with pytest.raises(DimensionMismatch):
        assemble(sup.plant, sup.modes, sup.cfg, family=two_state)


def test_assemble_uses_registered_family_by_plant_name():
    plant = plants.van_der_pol()
    modes = [observers.ObserverMode(1, observers.ConstantGain([3.0, 2.0])),
             observers.ObserverMode(2, observers.ConstantGain([0.0, 0.0]))]
    sup = assemble(plant, modes, make_cfg())
    assert isinstance(sup.family, observers.VdpObserverFamily)


def test_initial_state_validation():
    sup = toy_supervisor()
    q0 = sup.initial_state([1.0], [0.0], 1.0, sigma0=1)
    assert q0.shape == (sup.layout.dim,)
    assert q0[sup.layout.idx_sigma] == 1.0
    with pytest.raises(ValueError):
        sup.initial_state([1.0], [0.0], -1.0)
    with pytest.raises(ValueError):
        sup.initial_state([1.0], [0.0], 1.0, sigma0=3)
    with pytest.raises(DimensionMismatch):
        sup.initial_state([1.0], np.zeros((3, 1)), 1.0)


def toy_run(zeta=None, t_end=2.0):
    sup = toy_supervisor(zeta=zeta)
    q0 = sup.initial_state([1.0], [0.0], 1.0, sigma0=1)
    arc = sup.solve(q0, hybrid.SolverConfig(step=1e-3, event_tol=1e-9,
                                            t_end=t_end))
    return sup, arc


def test_toy_initial_tie_jumps_once_to_the_alternative():
    sup, arc = toy_run()
    assert arc.n_jumps == 1
    assert arc.jump_events[0].time.t == 0.0
    view = split_arc(arc, sup.layout)
    assert view.sigma[0] == 1
    assert (view.sigma[1:] == 2).all()


def test_toy_monitor_matches_hand_solution():
    # eta_2' = -eta_2 + exp(-4 t), eta_2(0) = 1, eta_1 pinned at 1
    sup, arc = toy_run()
    view = split_arc(arc, sup.layout)
    T = view.t[-1]
    exact = math.exp(-T) * (1.0 + (1.0 - math.exp(-3.0 * T)) / 3.0)
    assert view.eta[-1, 1] == pytest.approx(exact, abs=1e-9)
    assert view.eta[-1, 0] == pytest.approx(1.0, abs=1e-9)
    # the corrected estimate converges; the nominal one never moves
    assert abs(view.x[-1, 0] - view.xhat[-1, 1, 0]) < 0.02
    assert view.xhat[-1, 0, 0] == 0.0


def test_toy_monitor_dominance_and_nonnegativity():
    sup, arc = toy_run()
    view = split_arc(arc, sup.layout)
    active = np.take_along_axis(view.eta, view.sigma[:, None] - 1,
                                axis=1)[:, 0]
    assert (active <= view.eta[:, 0] + 1e-9).all()
    assert (view.eta >= 0.0).all()


def test_toy_closed_form_tracks_integrated_monitor():
    sup, arc = toy_run()
    view = split_arc(arc, sup.layout)
    mask = view.j == view.j[-1]  # the single post-jump flow stretch
    inn = sup.innovation_history(view)[mask, 1]
    trace = eta_closed_form_trace(view.eta[mask][0, 1], view.t[mask], inn,
                                  np.array([2.0]), sup.cfg)
    assert np.abs(trace - view.eta[mask][:, 1]).max() < 1e-6


def test_toy_filtered_estimate_tracks_active_mode():
    sup, arc = toy_run(zeta=10.0)
    assert sup.layout.dim == 7
    view = split_arc(arc, sup.layout)
    # x_f lags the active estimate by ~ (dxhat/dt)/zeta, small by t_end
    assert abs(view.x_f[-1, 0] - view.xhat[-1, 1, 0]) < 0.01
    ev = arc.jump_events[0]
    assert ev.state_before[sup.layout.sl_filter] == \
        pytest.approx(ev.state_after[sup.layout.sl_filter])


def test_toy_switch_events_report_the_initial_jump():
    sup, arc = toy_run()
    events = switch_events_from_arc(arc, sup.layout, sup.cfg)
    assert len(events) == 1
    ev = events[0]
    assert (ev.sigma_before, ev.sigma_after) == (1, 2)
    assert ev.time.t == 0.0 and ev.time.j == 0
    np.testing.assert_array_equal(ev.eta_before, [1.0, 1.0])
    assert not ev.reset_applied


def test_toy_innovation_history_shape_and_start():
    sup, arc = toy_run()
    view = split_arc(arc, sup.layout)
    inn = sup.innovation_history(view)
    assert inn.shape == (view.t.size, 2)
    assert inn[0, 0] == pytest.approx(1.0)
    assert abs(inn[-1, 1]) < 0.02  # corrected mode converged


# ---------------------------------------------------------------------------
# EKF mode inside a full assembly: P' = -P^2 has P(t) = 1/(1+t)


def test_ekf_mode_covariance_and_estimate_follow_analytic_solution():
    plant = plants.PlantModel(
        name="hold", state_dim=1,
        dynamics=lambda x, u, v: np.zeros(1),
        output=lambda x, u, w: float(x[0]) + w,
        params=None)
    family = observers.LinearObserverFamily([[0.0]], [0.0], [1.0])
    modes = [observers.ObserverMode(1, observers.ConstantGain(np.zeros(1))),
             observers.ObserverMode(2, observers.EkfGain(
                 r_meas=1.0, q_proc=[[0.0]], alpha=0.0, p0=[[1.0]]))]
    cfg = SupervisorConfig(nu=1.0, lambda1=1.0, lambda2=np.zeros((1, 1)),
                           epsilon=0.01)
    sup = assemble(plant, modes, cfg, family=family)
    assert sup.layout.dim == 7
    q0 = sup.initial_state([1.0], [0.0], 1.0, sigma0=1)
    arc = sup.solve(q0, hybrid.SolverConfig(step=1e-3, event_tol=1e-9,
                                            t_end=2.0))
    assert arc.n_jumps == 1  # the t = 0 tie resolves to the EKF mode
    T = arc.times[-1]
    p_fin = arc.states[-1, sup.layout.internal_slices[1]][0]
    assert p_fin == pytest.approx(1.0 / (1.0 + T), abs=1e-9)
    # with L = P the error solves e' = -P e, so e(t) = 1/(1+t) as well
    view = split_arc(arc, sup.layout)
    err = view.x[-1, 0] - view.xhat[-1, 1, 0]
    assert err == pytest.approx(1.0 / (1.0 + T), abs=1e-9)
    # covariance is frozen across the jump
    ev = arc.jump_events[0]
    assert ev.state_before[sup.layout.internal_slices[1]] == \
        pytest.approx(ev.state_after[sup.layout.internal_slices[1]])


# ---------------------------------------------------------------------------
# Full bank on the oscillator plant


def oscillator_bank():
    d = observers.place_second_order([-1.0, -2.0])
    gains = [observers.high_gain_gain(h, d) for h in (200.0, 20.0, 1.0, 0.0, -1.0)]
    return [observers.ObserverMode(i + 1, observers.ConstantGain(L))
            for i, L in enumerate(gains)]


def oscillator_supervisor(**cfg_kw):
    base = dict(nu=5.0, lambda1=1.0, lambda2=0.1 * np.eye(2), epsilon=1e-4)
    base.update(cfg_kw)
    return assemble(plants.van_der_pol(), oscillator_bank(),
                    SupervisorConfig(**base))


def test_oscillator_layout_has_expected_dimension():
    sup = oscillator_supervisor()
    assert sup.layout.dim == 18
    names = sup.layout.column_names(sup.modes)
    assert names[0] == "x1" and names[-1] == "sigma"
    assert len(names) == 18


def test_oscillator_initial_jump_selects_null_gain_mode():
    # equal monitors at t = 0: the tie-break is the monitor rate, minimized
    # by the zero-injection mode regardless of the shared innovation
    sup = oscillator_supervisor()
    q0 = sup.initial_state([1.0, 1.0], [0.0, 0.0], 10.0, sigma0=1)
    rates = sup.monitor_rates(q0, 0.0)
    assert int(np.argmin(rates[1:])) + 2 == 4
    arc = sup.solve(q0, hybrid.SolverConfig(step=1e-3, event_tol=1e-9,
                                            t_end=0.25))
    view = split_arc(arc, sup.layout)
    assert view.sigma[1] == 4
    assert arc.jump_events[0].time.t == 0.0


def test_oscillator_monitor_rates_match_scalar_op():
    sup = oscillator_supervisor()
    rng = np.random.default_rng(3)
    for _ in range(10):
        s = SupervisorState(
            x=rng.normal(size=2),
            xhat=rng.normal(size=(5, 2)),
            eta=rng.uniform(0.1, 5.0, size=5),
            sigma=int(rng.integers(1, 6)),
            internals=[np.empty(0)] * 5,
        )
        q = sup.layout.pack(s)
        t = float(rng.uniform(0.0, 1.0))
        rates = sup.monitor_rates(q, t)
        u = sup.signals.u(t)
        w = sup.signals.w(t)
        y = sup.plant.output(s.x, u, w)
        for k, mode in enumerate(sup.modes):
            yh = sup.family.output_batch(s.xhat, u)[k]
            want = eta_flow(s.eta[k], mode.gain.L, y, yh, sup.cfg)
            assert rates[k] == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_oscillator_run_respects_flow_set_and_dominance():
    sup = oscillator_supervisor()
    q0 = sup.initial_state([1.0, 1.0], [0.0, 0.0], 10.0, sigma0=1)
    step = 1e-3
    arc = sup.solve(q0, hybrid.SolverConfig(step=step, event_tol=1e-9,
                                            t_end=0.5))
    view = split_arc(arc, sup.layout)
    assert np.isfinite(arc.states).all()
    assert (view.eta >= 0.0).all()
    active = np.take_along_axis(view.eta, view.sigma[:, None] - 1,
                                axis=1)[:, 0]
    assert (active <= view.eta[:, 0] + 1e-9).all()
    guards = np.array([jump_guard(view.eta[i], int(view.sigma[i]))
                       for i in range(view.t.size)])
    dt = np.diff(view.t)
    flows = dt > 0
    slope = np.abs(np.diff(guards)[flows] / dt[flows]).max()
    assert guards.min() >= -(slope * step)
