"""Offline gain selection by simulate-and-score.

A candidate gain is judged by the discounted quadratic estimation-error
cost of one plant-plus-observer co-simulation; robustness comes from
taking the worst case over a finite bank of (disturbance, noise) scenario
pairs, and the min-max search runs a derivative-free simplex descent over
the flattened gain entries. Designed gains carry no stability claim; a
diverging candidate simply scores +inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize

from . import hybrid, plants


@dataclass
class GainDesignProblem:
    """One design instance: fixed initial conditions and input, a scenario
    bank for the inner max, and the cost weights."""

    plant: plants.PlantModel
    family: object                       # observer copy dynamics, free gain
    x0: np.ndarray
    xhat0: np.ndarray
    scenario_bank: list                  # (v, w) signal pairs
    u: Callable = plants.zero_signal
    theta: float = 0.0                   # discount rate
    q_weight: Optional[np.ndarray] = None
    horizon: float = 1.0
    step: float = 1e-3

    def __post_init__(self):
        n = self.plant.state_dim
        self.x0 = np.asarray(self.x0, dtype=float).reshape(n)
        self.xhat0 = np.asarray(self.xhat0, dtype=float).reshape(n)
        self.q_weight = np.eye(n) if self.q_weight is None \
            else np.atleast_2d(np.asarray(self.q_weight, dtype=float))
        if not self.scenario_bank:
            raise ValueError("scenario bank must not be empty")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.step <= 0 or self.step > self.horizon:
            raise ValueError("step must lie in (0, horizon]")
        if self.theta < 0:
            raise ValueError("theta must be nonnegative")
        q = self.q_weight
        if q.shape != (n, n) or not np.allclose(q, q.T, atol=1e-12):
            raise ValueError("q_weight must be symmetric n_x by n_x")
        if np.linalg.eigvalsh(q)[0] < -1e-12:
            raise ValueError("q_weight must be positive semidefinite")


def evaluate_gain_cost(p: GainDesignProblem, L, scenario) -> float:
    """Discounted quadratic error cost of one co-simulation under one
    (v, w) scenario; +inf when the trajectory leaves the finite range."""
    v, w = scenario
    n = p.plant.state_dim
    L = np.asarray(L, dtype=float).reshape(n)
    q = p.q_weight

    def f(z, _inputs, t):
        x, xh = z[:n], z[n:]
        u = float(p.u(t))
        y = float(p.plant.output(x, u, float(w(t))))
        yh = float(p.family.output_batch(xh[None, :], u)[0])
        inj = L * (y - yh)
        dx = p.plant.dynamics(x, u, float(v(t)))
        dxh = p.family.dynamics_batch(xh[None, :], u, inj[None, :])[0]
        return np.concatenate([dx, dxh])

    def integrand(z, t):
        e = z[:n] - z[n:]
        return math.exp(-p.theta * t) * float(e @ q @ e)

    n_full = int(math.floor(p.horizon / p.step + 1e-9))
    tail = p.horizon - n_full * p.step
    z = np.concatenate([p.x0, p.xhat0])
    cost = 0.0
    gi = integrand(z, 0.0)
    t = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n_full + 1):
            h = p.step if i < n_full else tail
            if h <= 1e-12:
                break
            z = hybrid._rk4(f, z, None, t, h, f(z, None, t))
            t += h
            if not np.isfinite(z).all():
                return float("inf")
            gj = integrand(z, t)
            cost += 0.5 * (gi + gj) * h
            gi = gj
    return cost if math.isfinite(cost) else float("inf")


def worst_case_cost(p: GainDesignProblem, L) -> float:
    return max(evaluate_gain_cost(p, L, sc) for sc in p.scenario_bank)


def minmax_gain_search(p: GainDesignProblem, init_gains, iters: int = 200,
                       bounds=None):
    """Simplex descent on the worst-case cost, restarted from every initial
    gain. Returns (best gain, its worst-case cost); never worse than the
    best initial gain. Deterministic given identical inputs."""
    if not init_gains:
        raise ValueError("at least one initial gain required")
    shape = np.asarray(init_gains[0], dtype=float).shape
    size = int(np.prod(shape))

    lo = hi = None
    nm_bounds = None
    if bounds is not None:
        lo = np.broadcast_to(np.asarray(bounds[0], dtype=float).ravel(),
                             (size,)).astype(float)
        hi = np.broadcast_to(np.asarray(bounds[1], dtype=float).ravel(),
                             (size,)).astype(float)
        nm_bounds = list(zip(lo, hi))

    def objective(vec):
        return worst_case_cost(p, vec.reshape(shape))

    best_vec, best_cost = None, float("inf")
    for g0 in init_gains:
        vec0 = np.asarray(g0, dtype=float).ravel().copy()
        if lo is not None:
            vec0 = np.clip(vec0, lo, hi)
        c0 = objective(vec0)
        if c0 < best_cost:
            best_vec, best_cost = vec0.copy(), c0
        res = minimize(objective, vec0, method="Nelder-Mead",
                       bounds=nm_bounds,
                       options={"maxiter": iters, "xatol": 1e-8,
                                "fatol": 1e-12})
        if res.fun < best_cost:
            best_vec, best_cost = np.asarray(res.x, dtype=float), float(res.fun)
    return best_vec.reshape(shape), float(best_cost)


# ---------------------------------------------------------------------------
# Scenario-bank and gain-bank helpers


def noise_scenario_bank(seeds, interval: float = 0.01,
                        amplitude: float = 0.1) -> list:
    """(v, w) pairs with zero disturbance and seeded piecewise-linear
    measurement noise, one scenario per seed."""
    return [(plants.zero_signal,
             plants.PiecewiseLinearNoise(seed, interval=interval,
                                         amplitude=amplitude))
            for seed in seeds]


def save_gain_bank(path, gains) -> None:
    """One flattened gain per row, full double precision."""
    rows = np.atleast_2d(np.array([np.asarray(g, dtype=float).ravel()
                                   for g in gains]))
    header = ",".join(f"L_{i + 1}" for i in range(rows.shape[1]))
    np.savetxt(path, rows, delimiter=",", header=header, comments="",
               fmt="%.17g")


def load_gain_bank(path) -> list:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return [row.copy() for row in rows]
