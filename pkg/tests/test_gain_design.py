"""Oracle and property tests for simulate-and-score gain design."""

import math

import numpy as np
import pytest

from hmo import observers, plants
from hmo.gain_design import (
    GainDesignProblem,
    evaluate_gain_cost,
    load_gain_bank,
    minmax_gain_search,
    noise_scenario_bank,
    save_gain_bank,
    worst_case_cost,
)

ZERO = (plants.zero_signal, plants.zero_signal)


def hold_plant() -> plants.PlantModel:
    """Scalar plant with zero drift: the state holds its initial value."""
    return plants.PlantModel(
        name="hold",
        state_dim=1,
        dynamics=lambda x, u, v: np.zeros(1),
        output=lambda x, u, w: float(x[0]) + w,
        params=None,
    )


def hold_family() -> observers.LinearObserverFamily:
    return observers.LinearObserverFamily([[0.0]], [0.0], [1.0])


def make_problem(**kw) -> GainDesignProblem:
    base = dict(
        plant=hold_plant(),
        family=hold_family(),
        x0=[1.0],
        xhat0=[0.0],
        scenario_bank=[ZERO],
        horizon=1.0,
        step=1e-3,
    )
    base.update(kw)
    return GainDesignProblem(**base)


# ---------------------------------------------------------------------------
# Problem validation


def test_empty_scenario_bank_rejected():
    with pytest.raises(ValueError, match="scenario bank"):
        make_problem(scenario_bank=[])


def test_bad_horizon_and_step_rejected():
    with pytest.raises(ValueError, match="horizon"):
        make_problem(horizon=0.0)
    with pytest.raises(ValueError, match="step"):
        make_problem(step=0.0)
    with pytest.raises(ValueError, match="step"):
        make_problem(step=2.0, horizon=1.0)


def test_negative_discount_rejected():
    with pytest.raises(ValueError, match="theta"):
        make_problem(theta=-0.5)


def test_bad_weight_rejected():
    with pytest.raises(ValueError, match="symmetric"):
        GainDesignProblem(
            plant=plants.van_der_pol(),
            family=observers.VdpObserverFamily(),
            x0=[1.0, 1.0],
            xhat0=[0.0, 0.0],
            scenario_bank=[ZERO],
            q_weight=[[1.0, 2.0], [0.0, 1.0]],
        )
    with pytest.raises(ValueError, match="semidefinite"):
        make_problem(q_weight=[[-1.0]])


# ---------------------------------------------------------------------------
# Cost oracles


def test_exact_copy_costs_zero():
    # identical initial estimate and identical dynamics: error stays 0
    p = make_problem(xhat0=[1.0])
    assert evaluate_gain_cost(p, [3.0], ZERO) == 0.0


def test_zero_weight_costs_zero_for_any_gain():
    p = make_problem(q_weight=[[0.0]])
    for gain in ([0.0], [5.0], [-5.0]):
        assert evaluate_gain_cost(p, gain, ZERO) == 0.0


def test_constant_error_integrates_to_d_squared_times_t():
    # zero gain never corrects, so |e| holds at d and the undiscounted
    # quadratic cost after time T is exactly d^2 * T
    p = make_problem(x0=[2.0], xhat0=[0.0], horizon=1.5)
    cost = evaluate_gain_cost(p, [0.0], ZERO)
    assert cost == pytest.approx(4.0 * 1.5, abs=1e-10)


def test_discounted_constant_error():
    # d = 1 with discount rate theta: integral of exp(-theta t) over [0, T]
    theta = 2.0
    p = make_problem(theta=theta, horizon=1.0)
    expect = (1.0 - math.exp(-theta)) / theta
    assert evaluate_gain_cost(p, [0.0], ZERO) == pytest.approx(expect, abs=1e-6)


def test_stabilizing_gain_closed_form():
    # e' = -L e on the hold plant, so cost = (1 - exp(-2 L T)) / (2 L)
    p = make_problem(horizon=1.0)
    got = evaluate_gain_cost(p, [2.0], ZERO)
    expect = (1.0 - math.exp(-4.0)) / 4.0
    assert got == pytest.approx(expect, abs=1e-5)
    assert got < evaluate_gain_cost(p, [0.0], ZERO)


@pytest.mark.filterwarnings("ignore:overflow")
@pytest.mark.filterwarnings("ignore:invalid value")
def test_diverging_candidate_scores_inf():
    # wrong-signed gain drives e' = +|L| e; the trajectory blows past the
    # finite range inside the horizon
    p = make_problem(horizon=1.0)
    assert evaluate_gain_cost(p, [-800.0], ZERO) == float("inf")
    assert worst_case_cost(p, [-800.0]) == float("inf")


# ---------------------------------------------------------------------------
# Worst case over the scenario bank


def test_worst_case_singleton_matches_evaluate():
    p = make_problem()
    assert worst_case_cost(p, [2.0]) == evaluate_gain_cost(p, [2.0], ZERO)


def test_worst_case_picks_noisy_scenario():
    # equal initial estimates: the quiet scenario costs exactly zero, so
    # the noisy one must be the binding case
    noisy = (plants.zero_signal, plants.sinusoid_noise(1.0, 10.0))
    p = make_problem(xhat0=[1.0], scenario_bank=[ZERO, noisy])
    quiet = evaluate_gain_cost(p, [2.0], ZERO)
    loud = evaluate_gain_cost(p, [2.0], noisy)
    assert quiet == 0.0
    assert loud > 0.0
    assert worst_case_cost(p, [2.0]) == loud


def test_worst_case_duplicate_and_order_invariance():
    noisy = (plants.zero_signal, plants.sinusoid_noise(1.0, 10.0))
    p_one = make_problem(scenario_bank=[noisy])
    p_dup = make_problem(scenario_bank=[noisy, noisy])
    p_fwd = make_problem(scenario_bank=[ZERO, noisy])
    p_rev = make_problem(scenario_bank=[noisy, ZERO])
    assert worst_case_cost(p_dup, [2.0]) == worst_case_cost(p_one, [2.0])
    assert worst_case_cost(p_fwd, [2.0]) == worst_case_cost(p_rev, [2.0])


# ---------------------------------------------------------------------------
# Min-max search


def test_monotone_problem_returns_gain_at_bound():
    # without noise the cost (1 - exp(-2LT)) / (2L) strictly decreases in L,
    # so the search must ride the box up to its configured upper bound
    p = make_problem(horizon=0.5, step=5e-3)
    gain, cost = minmax_gain_search(p, [[0.5]], iters=120,
                                    bounds=([0.0], [4.0]))
    assert gain.shape == (1,)
    assert gain[0] == pytest.approx(4.0, abs=1e-6)
    assert gain[0] <= 4.0 + 1e-12
    assert cost == pytest.approx(worst_case_cost(p, gain), abs=0.0)


def test_search_matches_dense_grid_oracle():
    # measurement noise makes large gains expensive again, so the optimum
    # moves inside the box; a dense grid brackets it independently
    noisy = (plants.zero_signal, plants.sinusoid_noise(1.0, 10.0))
    p = make_problem(scenario_bank=[noisy], horizon=0.5, step=5e-3)
    grid = np.linspace(0.5, 12.0, 47)
    cell = grid[1] - grid[0]
    costs = [worst_case_cost(p, [g]) for g in grid]
    g_star = grid[int(np.argmin(costs))]
    assert 0.5 < g_star < 12.0  # interior optimum, not a box artifact

    gain, cost = minmax_gain_search(p, [[1.0], [8.0]], iters=120,
                                    bounds=([0.5], [12.0]))
    assert abs(gain[0] - g_star) <= cell + 1e-9
    assert cost <= min(costs) + 1e-9


def test_search_never_worse_than_best_init():
    noisy = (plants.zero_signal, plants.sinusoid_noise(1.0, 10.0))
    p = make_problem(scenario_bank=[noisy], horizon=0.5, step=5e-3)
    inits = [[0.6], [11.0]]
    baseline = min(worst_case_cost(p, g) for g in inits)
    gain, cost = minmax_gain_search(p, inits, iters=5,
                                    bounds=([0.5], [12.0]))
    assert cost <= baseline


def test_search_is_deterministic():
    noisy = (plants.zero_signal, plants.sinusoid_noise(1.0, 10.0))
    p = make_problem(scenario_bank=[noisy], horizon=0.5, step=5e-3)
    g1, c1 = minmax_gain_search(p, [[1.0]], iters=60, bounds=([0.5], [12.0]))
    g2, c2 = minmax_gain_search(p, [[1.0]], iters=60, bounds=([0.5], [12.0]))
    assert np.array_equal(g1, g2)
    assert c1 == c2


def test_search_requires_initial_gain():
    p = make_problem()
    with pytest.raises(ValueError, match="initial gain"):
        minmax_gain_search(p, [])


def test_init_outside_bounds_is_clipped():
    p = make_problem(horizon=0.5, step=5e-3)
    gain, _ = minmax_gain_search(p, [[50.0]], iters=40,
                                 bounds=([0.0], [4.0]))
    assert gain[0] <= 4.0 + 1e-12


# ---------------------------------------------------------------------------
# Gain bank and scenario bank helpers


def test_gain_bank_roundtrip_is_bit_exact(tmp_path):
    path = tmp_path / "bank.csv"
    gains = [np.array([600.0, 80000.0]),
             np.array([3.25, -2.5]),
             np.array([0.1, 1.0 / 3.0])]
    save_gain_bank(path, gains)
    loaded = load_gain_bank(path)
    assert len(loaded) == 3
    for orig, back in zip(gains, loaded):
        assert np.array_equal(orig, back)
    header = path.read_text().splitlines()[0]
    assert header == "L_1,L_2"


def test_gain_bank_single_row(tmp_path):
    path = tmp_path / "one.csv"
    save_gain_bank(path, [np.array([1.5, 2.5])])
    loaded = load_gain_bank(path)
    assert len(loaded) == 1
    assert np.array_equal(loaded[0], [1.5, 2.5])


def test_noise_scenario_bank_is_seed_reproducible():
    bank_a = noise_scenario_bank([1, 2, 3], interval=0.05, amplitude=0.2)
    bank_b = noise_scenario_bank([1, 2, 3], interval=0.05, amplitude=0.2)
    assert len(bank_a) == 3
    probe = [0.0, 0.013, 0.27, 1.9]
    for (va, wa), (vb, wb) in zip(bank_a, bank_b):
        assert va is plants.zero_signal
        assert all(wa(t) == wb(t) for t in probe)
    w1, w2 = bank_a[0][1], bank_a[1][1]
    assert any(w1(t) != w2(t) for t in probe)
