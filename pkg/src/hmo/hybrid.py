"""Fixed-step integrator for hybrid systems with guard-triggered jumps.

A hybrid system alternates continuous flow with instantaneous jumps. Time is
tracked as a pair (t, j): elapsed flow time t and jump counter j. The flow is
advanced with a classical fixed-step RK4 scheme; a scalar guard function
signals the jump set (negative means the state is inside the jump set,
positive means strictly inside the flow set, zero is the common boundary).
Crossings are localized by bisection inside the bracketing step, so jumps
land within ``event_tol`` of the true crossing time.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

# Two events closer than this (in flow time) count as the same jump instant
# for Zeno accounting.
SAME_INSTANT = 1e-12

_BISECT_MAX_ITER = 90


class SolverError(Exception):
    """Base class for integration failures."""


class NonFiniteState(SolverError):
    """The state left the representable range (NaN or inf) during flow."""


class StepTooLarge(SolverError):
    """The guard changed sign twice inside one step; the crossing cannot be
    bracketed at this step size."""


class ZenoSuspected(SolverError):
    """More than ``max_consecutive_jumps`` jumps accumulated at one instant."""


@dataclass(order=True, frozen=True)
class HybridTime:
    """Point (t, j) of a hybrid time domain, ordered lexicographically."""

    t: float
    j: int


@dataclass
class HybridSystemDef:
    """Flow map, jump map and guard defining one hybrid system.

    flow_map(state, inputs, t)  -> state derivative
    jump_map(state, inputs, t)  -> post-jump state
    guard(state, t)             -> scalar; < 0 inside the jump set
    """

    state_dim: int
    flow_map: Callable
    jump_map: Callable
    guard: Callable


@dataclass
class SolverConfig:
    step: float
    event_tol: float
    t_end: float
    max_jumps: int = 10**6
    max_consecutive_jumps: int = 4

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be positive")
        if not 0 < self.event_tol < self.step:
            raise ValueError("event_tol must lie in (0, step)")
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if self.max_jumps < 0 or self.max_consecutive_jumps < 1:
            raise ValueError("jump limits must be positive")


@dataclass
class JumpEvent:
    time: HybridTime  # (t, j) immediately before the jump
    state_before: np.ndarray
    state_after: np.ndarray


@dataclass
class HybridArc:
    """Sampled hybrid solution.

    ``times``, ``jumps`` and ``states`` share the leading axis. Consecutive
    samples differ either in t (a flow step, j constant) or in j (a jump,
    t constant), never both.
    """

    times: np.ndarray
    jumps: np.ndarray
    states: np.ndarray
    jump_events: list = field(default_factory=list)

    @property
    def n_samples(self) -> int:
        return self.times.shape[0]

    @property
    def n_jumps(self) -> int:
        return int(self.jumps[-1]) if self.n_samples else 0

    def final(self) -> tuple:
        return HybridTime(float(self.times[-1]), int(self.jumps[-1])), self.states[-1]


def _rk4(f, y, inputs, t, h, k1):
    k2 = f(y + (0.5 * h) * k1, inputs, t + 0.5 * h)
    k3 = f(y + (0.5 * h) * k2, inputs, t + 0.5 * h)
    k4 = f(y + h * k3, inputs, t + h)
    return y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def _locate_crossing(sys, y0, inputs, t0, h, f0):
    """Bisect for the first dt in (0, h] with guard < 0.

    The state at candidate offsets is recomputed with a single partial RK4
    step from the step start, so the result is a point of the numerical flow.
    Bisection runs to the floating-point width of the bracket: monitor-style
    guards can have slopes of 1e6 or more, and a coarse time tolerance would
    leave a visible overshoot past the guard surface.
    """
    lo = 0.0  # guard(lo) >= 0 by construction
    hi, y_hi = h, None
    for _ in range(_BISECT_MAX_ITER):
        if (hi - lo) <= 2.0 ** -52 * h:
            break
        mid = 0.5 * (lo + hi)
        y_mid = _rk4(sys.flow_map, y0, inputs, t0, mid, f0)
        if sys.guard(y_mid, t0 + mid) < 0.0:
            hi, y_hi = mid, y_mid
        else:
            lo = mid
    if y_hi is None:
        y_hi = _rk4(sys.flow_map, y0, inputs, t0, hi, f0)
    return t0 + hi, y_hi


def integrate_flow(sys: HybridSystemDef, state: np.ndarray, t0: float,
                   cfg: SolverConfig, inputs, record: Optional[Callable] = None):
    """Advance the flow from (state, t0) until cfg.t_end or a guard crossing.

    Returns (state, t_event, hit_guard). ``hit_guard`` is True when the guard
    crossed into negative values; the returned state then lies just inside
    the jump set. ``record(t, state)`` is invoked at every accepted step.

    The caller is expected to start inside the flow set (guard >= 0).
    """
    f = sys.flow_map
    t = t0
    y = state
    f_start = f(y, inputs, t)
    while t < cfg.t_end:
        h = min(cfg.step, cfg.t_end - t)
        y1 = _rk4(f, y, inputs, t, h, f_start)
        if not np.isfinite(y1).all():
            raise NonFiniteState(f"non-finite state at t={t + h:.6g}")
        t1 = t + h
        g1 = sys.guard(y1, t1)
        if g1 < 0.0:
            t_ev, y_ev = _locate_crossing(sys, y, inputs, t, h, f_start)
            if record is not None:
                record(t_ev, y_ev)
            return y_ev, t_ev, True
        # Tangential grazing check: a cubic Hermite midpoint costs one guard
        # evaluation (the endpoint derivative doubles as the next step's k1).
        f_end = f(y1, inputs, t1)
        y_mid = 0.5 * (y + y1) + (h / 8.0) * (f_start - f_end)
        if sys.guard(y_mid, t + 0.5 * h) < 0.0:
            raise StepTooLarge(
                f"guard dips negative inside one step near t={t:.6g}; "
                "reduce the step size")
        y, t, f_start = y1, t1, f_end
        if record is not None:
            record(t, y)
    return y, cfg.t_end, False


def execute_jump(sys: HybridSystemDef, state: np.ndarray, t: float, inputs):
    """Apply the jump map once and validate the result."""
    new = sys.jump_map(state, inputs, t)
    new = np.asarray(new, dtype=float)
    if new.shape != (sys.state_dim,):
        raise SolverError(
            f"jump map returned shape {new.shape}, expected ({sys.state_dim},)")
    if not np.isfinite(new).all():
        raise NonFiniteState(f"non-finite state after jump at t={t:.6g}")
    return new


def solve(sys: HybridSystemDef, x0: np.ndarray, cfg: SolverConfig, inputs) -> HybridArc:
    """Integrate the hybrid system from x0 at (t, j) = (0, 0).

    Flow and jumps alternate until t_end or max_jumps. Jumps cascade when the
    post-jump state is still strictly inside the jump set; more than
    ``max_consecutive_jumps`` at one instant raises ZenoSuspected. An initial
    state on or inside the jump set jumps before flowing (the boundary counts
    only at t = 0; during the run a boundary touch with nonnegative guard
    drift is resolved by flowing).
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (sys.state_dim,):
        raise SolverError(f"x0 has shape {x0.shape}, expected ({sys.state_dim},)")
    if not np.isfinite(x0).all():
        raise NonFiniteState("initial state is not finite")

    times = [0.0]
    jumps = [0]
    states = [x0.copy()]
    events: list[JumpEvent] = []

    t = 0.0
    j = 0
    y = x0.copy()
    cluster_t = -np.inf
    cluster_n = 0

    def do_cascade():
        nonlocal t, j, y, cluster_t, cluster_n
        if t - cluster_t > SAME_INSTANT:
            cluster_t, cluster_n = t, 0
        while True:
            if j >= cfg.max_jumps:
                return False
            if cluster_n >= cfg.max_consecutive_jumps:
                raise ZenoSuspected(
                    f"{cluster_n + 1} consecutive jumps at t={t:.6g}")
            new = execute_jump(sys, y, t, inputs)
            events.append(JumpEvent(HybridTime(t, j), y.copy(), new))
            j += 1
            cluster_n += 1
            times.append(t)
            jumps.append(j)
            states.append(new.copy())
            y = new
            if sys.guard(y, t) < 0.0:
                continue
            return True

    def record(tk, yk):
        times.append(tk)
        jumps.append(j)
        states.append(yk.copy())

    if sys.guard(y, 0.0) <= 0.0:
        do_cascade()

    while t < cfg.t_end and j < cfg.max_jumps:
        y, t, hit = integrate_flow(sys, y, t, cfg, inputs, record=record)
        if not hit:
            break
        if not do_cascade():
            break

    return HybridArc(
        times=np.asarray(times),
        jumps=np.asarray(jumps, dtype=int),
        states=np.vstack(states),
        jump_events=events,
    )
