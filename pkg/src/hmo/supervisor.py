"""Supervisory observer bank: monitors, mode selection, resets, assembly.

A bank of N+1 observer modes shares one copy of the plant dynamics and
differs only in the output-injection gain. Each mode k carries a
monitoring variable eta_k that discounts its past innovation energy; the
supervisor flows while the active mode's monitor is minimal and jumps to
a minimizing mode otherwise, applying a reset rule parameterized by
r in {0, 1} and a penalty epsilon.

The flat state layout is fixed and documented:

    [x | xhat_1 .. xhat_M | eta_1 .. eta_M | gain internals | x_f? | sigma]

with M = N+1. sigma is stored as a real with zero flow and exact integer
snapping at jumps, so it never accumulates integration error. The layout
also fixes the CSV column order emitted by the command-line runner.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import hybrid, observers, plants

log = logging.getLogger(__name__)

# Absolute tolerance for monitor comparisons: ties closer than this are
# exact ties (guard snaps to 0.0, selection sets stay closed under it).
TIE_TOL = 1e-12


class DimensionMismatch(Exception):
    pass


# ---------------------------------------------------------------------------
# Configuration and state containers


@dataclass
class SupervisorConfig:
    """Design knobs for the monitors and the switching rule.

    nu must lie in (0, alpha] for the guarantees to hold; alpha belongs to
    the scenario description, so only nu > 0 is checked here and the upper
    bound is the scenario loader's job. epsilon is the post-jump penalty
    added to every non-selected, non-nominal monitor. reset picks between
    keeping each mode's estimate (0) and restarting all of them from the
    selected mode (1). zeta, when set, enables the low-pass filtered
    estimate x_f.
    """

    nu: float
    lambda1: np.ndarray
    lambda2: np.ndarray
    epsilon: float
    reset: int = 0
    tie_break: str = "lowest-index"
    tie_seed: int = 0
    zeta: Optional[float] = None

    def __post_init__(self):
        self.lambda1 = np.atleast_2d(np.asarray(self.lambda1, dtype=float))
        self.lambda2 = np.atleast_2d(np.asarray(self.lambda2, dtype=float))
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.reset not in (0, 1):
            raise ValueError("reset must be 0 or 1")
        if self.tie_break not in ("lowest-index", "seeded-random"):
            raise ValueError(f"unknown tie_break {self.tie_break!r}")
        if self.zeta is not None and self.zeta <= 0:
            raise ValueError("zeta must be positive when given")
        smallest = []
        for name, m in (("lambda1", self.lambda1), ("lambda2", self.lambda2)):
            if m.shape[0] != m.shape[1] or not np.allclose(m, m.T, atol=1e-12):
                raise ValueError(f"{name} must be square and symmetric")
            low = float(np.linalg.eigvalsh(m)[0])
            if low < -1e-12:
                raise ValueError(f"{name} must be positive semidefinite")
            smallest.append(low)
        if max(smallest) <= 0.0:
            raise ValueError("at least one of lambda1, lambda2 must be "
                             "positive definite")


@dataclass
class SupervisorState:
    """Unpacked view of one flat state vector. sigma is 1-based."""

    x: np.ndarray
    xhat: np.ndarray          # (M, n_x), row k-1 is mode k's estimate
    eta: np.ndarray           # (M,)
    sigma: int
    internals: list           # per-mode packed gain state, empty when none
    x_f: Optional[np.ndarray] = None


@dataclass
class SwitchEvent:
    time: hybrid.HybridTime
    sigma_before: int
    sigma_after: int
    eta_before: np.ndarray
    eta_after: np.ndarray
    reset_applied: bool


class StateLayout:
    """Index bookkeeping for the flat state vector."""

    def __init__(self, n_x: int, n_modes: int, internal_dims, has_filter: bool):
        self.n_x = n_x
        self.n_modes = n_modes
        self.internal_dims = list(internal_dims)
        if len(self.internal_dims) != n_modes:
            raise DimensionMismatch("one internal dimension per mode required")
        self.has_filter = has_filter
        ofs = n_x
        self.sl_x = slice(0, n_x)
        self.sl_xhat = slice(ofs, ofs + n_modes * n_x)
        ofs += n_modes * n_x
        self.sl_eta = slice(ofs, ofs + n_modes)
        ofs += n_modes
        self.internal_slices = []
        for d in self.internal_dims:
            self.internal_slices.append(slice(ofs, ofs + d))
            ofs += d
        self.sl_filter = None
        if has_filter:
            self.sl_filter = slice(ofs, ofs + n_x)
            ofs += n_x
        self.idx_sigma = ofs
        self.dim = ofs + 1

    def pack(self, s: SupervisorState) -> np.ndarray:
        q = np.empty(self.dim)
        q[self.sl_x] = np.asarray(s.x, dtype=float)
        q[self.sl_xhat] = np.asarray(s.xhat, dtype=float).ravel()
        q[self.sl_eta] = np.asarray(s.eta, dtype=float)
        if len(s.internals) != self.n_modes:
            raise DimensionMismatch("internals list must have one entry per mode")
        for sl, p in zip(self.internal_slices, s.internals):
            q[sl] = np.asarray(p, dtype=float)
        if self.sl_filter is not None:
            if s.x_f is None:
                raise DimensionMismatch("layout includes x_f but the state has none")
            q[self.sl_filter] = np.asarray(s.x_f, dtype=float)
        q[self.idx_sigma] = float(s.sigma)
        return q

    def unpack(self, q: np.ndarray) -> SupervisorState:
        xh = q[self.sl_xhat].reshape(self.n_modes, self.n_x)
        x_f = q[self.sl_filter] if self.sl_filter is not None else None
        return SupervisorState(
            x=q[self.sl_x],
            xhat=xh,
            eta=q[self.sl_eta],
            sigma=int(round(float(q[self.idx_sigma]))),
            internals=[q[sl] for sl in self.internal_slices],
            x_f=x_f,
        )

    def column_names(self, modes=None) -> list:
        """CSV header in flat-state order. With the mode list available,
        packed covariance entries get p{k}_{ij} names."""
        names = [f"x{i + 1}" for i in range(self.n_x)]
        for k in range(1, self.n_modes + 1):
            names += [f"xhat{k}_{i + 1}" for i in range(self.n_x)]
        names += [f"eta{k}" for k in range(1, self.n_modes + 1)]
        for k, d in enumerate(self.internal_dims, start=1):
            gain = modes[k - 1].gain if modes is not None else None
            if isinstance(gain, observers.EkfGain):
                n = gain.p0.shape[0]
                rows, cols = np.triu_indices(n)
                names += [f"p{k}_{i + 1}{j + 1}" for i, j in zip(rows, cols)]
            else:
                names += [f"mode{k}_g{i + 1}" for i in range(d)]
        if self.sl_filter is not None:
            names += [f"xf{i + 1}" for i in range(self.n_x)]
        names.append("sigma")
        return names


# ---------------------------------------------------------------------------
# Monitor flow and its closed form


def eta_flow(eta_k: float, L_k, y, yhat_k, cfg: SupervisorConfig) -> float:
    """Monitor derivative: -nu*eta plus the innovation energy, weighted
    directly by lambda1 and through the injection L (y - yhat) by lambda2."""
    inn = np.atleast_1d(np.asarray(y, dtype=float) -
                        np.asarray(yhat_k, dtype=float))
    L = np.asarray(L_k, dtype=float)
    if L.ndim == 0:
        L = L.reshape(1, 1)
    elif L.ndim == 1:
        L = L[:, None]
    inj = L @ inn
    drive = float(inn @ cfg.lambda1 @ inn + inj @ cfg.lambda2 @ inj)
    return -cfg.nu * float(eta_k) + drive


def discounted_response(eta0: float, times, forcing, nu: float) -> np.ndarray:
    """Trace of eta' = -nu*eta + q(t) given samples of q.

    Evaluated as the one-step recurrence
        eta_{i+1} = e^{-nu dt} eta_i + (dt/2)(e^{-nu dt} q_i + q_{i+1}),
    which is algebraically the discounted integral with trapezoid
    quadrature but stays well conditioned for large nu*t.
    """
    t = np.asarray(times, dtype=float)
    q = np.asarray(forcing, dtype=float)
    if t.ndim != 1 or t.shape != q.shape or t.size == 0:
        raise ValueError("times and forcing must be matching 1-D arrays")
    dt = np.diff(t)
    if (dt < 0).any():
        raise ValueError("times must be nondecreasing")
    decay = np.exp(-nu * dt)
    out = np.empty_like(t)
    out[0] = eta0
    for i in range(dt.size):
        out[i + 1] = decay[i] * out[i] + 0.5 * dt[i] * (decay[i] * q[i] + q[i + 1])
    return out


def eta_closed_form_trace(eta0: float, times, innovations, L_k,
                          cfg: SupervisorConfig) -> np.ndarray:
    """Monitor trace from a sampled scalar innovation path and a constant
    gain, via the discounted-integral form."""
    inn = np.asarray(innovations, dtype=float)
    if inn.ndim != 1:
        raise ValueError("scalar innovation path expected")
    L = np.asarray(L_k, dtype=float)
    if L.ndim == 0:
        L = L.reshape(1, 1)
    elif L.ndim == 1:
        L = L[:, None]
    # scalar measurement: Lambda1 + L' Lambda2 L collapses to one weight
    w = float(cfg.lambda1[0, 0]) + float((L.T @ cfg.lambda2 @ L).item())
    return discounted_response(eta0, times, w * inn * inn, cfg.nu)


def eta_closed_form(eta0: float, times, innovations, L_k,
                    cfg: SupervisorConfig) -> float:
    return float(eta_closed_form_trace(eta0, times, innovations, L_k, cfg)[-1])


# ---------------------------------------------------------------------------
# Switching rule


def jump_guard(eta, sigma: int) -> float:
    """min over k != sigma of eta_k, minus eta_sigma. Negative or zero
    means the jump set is reached; positive means strict flow. Values
    within TIE_TOL of zero snap to exactly 0.0 so that boundary grazes
    are distinguishable from crossings."""
    vals = np.asarray(eta, dtype=float).tolist()
    i = sigma - 1
    raw = min(v for k, v in enumerate(vals) if k != i) - vals[i]
    return 0.0 if abs(raw) <= TIE_TOL else raw


def select_mode(eta, sigma: int, rates, cfg: SupervisorConfig,
                rng: Optional[np.random.Generator] = None) -> int:
    """Jump target: among the modes k != sigma whose monitor ties the
    minimum (within TIE_TOL), pick the one with the smallest monitor
    derivative; remaining ties go to the tie_break policy. 1-based."""
    eta = np.asarray(eta, dtype=float)
    rates = np.asarray(rates, dtype=float)
    cands = [k for k in range(eta.size) if k != sigma - 1]
    if not cands:
        raise DimensionMismatch("mode selection needs at least one alternative")
    emin = min(eta[k] for k in cands)
    tier = [k for k in cands if eta[k] <= emin + TIE_TOL]
    gmin = min(rates[k] for k in tier)
    finalists = [k for k in tier if rates[k] <= gmin + TIE_TOL]
    if len(finalists) == 1 or cfg.tie_break == "lowest-index":
        return finalists[0] + 1
    if rng is None:
        rng = np.random.default_rng(cfg.tie_seed)
    return int(rng.choice(np.asarray(finalists))) + 1


def apply_jump(s: SupervisorState, rates, cfg: SupervisorConfig,
               time: Optional[hybrid.HybridTime] = None,
               rng: Optional[np.random.Generator] = None):
    """Reset rule at a jump. Returns (new state, SwitchEvent).

    The newly selected mode keeps its monitor and estimate, the nominal
    mode (k = 1) is never modified, and every other mode pays the epsilon
    penalty; with reset = 1 those modes also restart from the selected
    mode's estimate and monitor. Plant state, gain internals, and x_f pass
    through unchanged. The reset source k* coincides with the selected
    mode (one selection per jump, shared by estimate and monitor resets).
    """
    eta = np.asarray(s.eta, dtype=float)
    sig_new = select_mode(eta, s.sigma, rates, cfg, rng)
    i_new = sig_new - 1
    eta_src = float(eta[i_new])
    # the minimum excluding the old mode (eta_src by construction) and the
    # one excluding the new mode agree at genuine guard crossings; a gap
    # here means the jump fired away from the boundary. A localized
    # crossing sits up to one snap band (TIE_TOL) plus rounding below the
    # boundary, so the quiet zone is twice that, scaled to the monitors.
    alt = min(float(eta[k]) for k in range(eta.size) if k != i_new)
    if abs(alt - eta_src) > 2.0 * TIE_TOL * max(1.0, abs(eta_src)):
        log.warning(
            "reset source ambiguous: min eta reads %.17g excluding the old "
            "mode but %.17g excluding the new one", eta_src, alt)
    r = cfg.reset
    xhat2 = np.array(s.xhat, dtype=float, copy=True)
    if r == 1:
        xhat2[1:] = np.asarray(s.xhat, dtype=float)[i_new]
    eta2 = eta.copy()
    for k in range(1, eta.size):
        if k == i_new:
            continue
        eta2[k] = (1 - r) * eta[k] + r * eta_src + cfg.epsilon
    s2 = SupervisorState(
        x=np.array(s.x, dtype=float, copy=True),
        xhat=xhat2,
        eta=eta2,
        sigma=sig_new,
        internals=[np.array(p, dtype=float, copy=True) for p in s.internals],
        x_f=None if s.x_f is None else np.array(s.x_f, dtype=float, copy=True),
    )
    event = SwitchEvent(
        time=time if time is not None else hybrid.HybridTime(0.0, 0),
        sigma_before=s.sigma,
        sigma_after=sig_new,
        eta_before=eta.copy(),
        eta_after=eta2.copy(),
        reset_applied=bool(r),
    )
    return s2, event


# ---------------------------------------------------------------------------
# Assembly


class Supervisor:
    """Plant, observer bank, and monitors wired into one hybrid system.

    All run state lives in the flat vector, so one instance can serve many
    runs; under the seeded-random tie-break the instance carries the RNG,
    so per-run determinism requires a fresh instance per run.
    """

    def __init__(self, plant: plants.PlantModel, modes, cfg: SupervisorConfig,
                 signals: Optional[plants.SignalBundle] = None, family=None):
        self.plant = plant
        self.modes = list(modes)
        self.cfg = cfg
        self.signals = signals if signals is not None else plants.SignalBundle()
        self.family = family if family is not None \
            else observers.observer_family_for(plant)
        m = len(self.modes)
        if m < 2:
            raise DimensionMismatch(
                "need at least two modes: the nominal one plus an alternative")
        if [md.index for md in self.modes] != list(range(1, m + 1)):
            raise DimensionMismatch("mode indices must be 1..N+1 in order")
        n_x = plant.state_dim
        if self.family.n_x != n_x:
            raise DimensionMismatch(
                "observer family and plant disagree on state dimension")
        if cfg.lambda1.shape != (1, 1):
            raise DimensionMismatch("scalar measurements only: lambda1 is 1x1")
        if cfg.lambda2.shape != (n_x, n_x):
            raise DimensionMismatch("lambda2 must be n_x by n_x")

        self._const_L = np.zeros((m, n_x))
        self._ekf = []
        dims = []
        for i, md in enumerate(self.modes):
            gain = md.gain
            dims.append(gain.internal_dim)
            if isinstance(gain, observers.EkfGain):
                if gain.p0.shape != (n_x, n_x):
                    raise DimensionMismatch("EKF covariance must be n_x by n_x")
                self._ekf.append((i, gain))
            else:
                self._const_L[i] = np.asarray(gain.L, dtype=float).reshape(n_x)
        self.layout = StateLayout(n_x, m, dims, cfg.zeta is not None)
        self._lam1 = float(cfg.lambda1[0, 0])
        self._lam2 = cfg.lambda2
        off_diag = self._lam2 - np.diag(np.diag(self._lam2))
        self._lam2_diag = np.diag(self._lam2).copy() \
            if not off_diag.any() else None
        self._nu = float(cfg.nu)
        self._no_cov = ()   # shared empty covariance-rate list
        self._rng = np.random.default_rng(cfg.tie_seed)
        # Constant-gain planar banks dominate the runtime; a hand-unrolled
        # scalar flow avoids array-dispatch overhead on length-5 vectors.
        fast = (not self._ekf and not self.layout.has_filter
                and self._lam2_diag is not None and n_x == 2
                and isinstance(self.family, observers.VdpObserverFamily))
        if fast:
            self._L_flat = [float(v) for v in self._const_L.ravel()]
            self._sat = float(self.family.params.sat_level)
            self._l2d = (float(self._lam2_diag[0]), float(self._lam2_diag[1]))
        self.system = hybrid.HybridSystemDef(
            state_dim=self.layout.dim,
            flow_map=self._flow_planar_const if fast else self._flow,
            jump_map=self._jump,
            guard=self._guard,
        )

    # -- state helpers

    def initial_state(self, x0, xhat0, eta0, sigma0: int = 1,
                      x_f0=None) -> np.ndarray:
        """Flat initial vector. xhat0 is one row shared by every mode or
        one row per mode; eta0 a scalar or a per-mode vector; monitors
        must start nonnegative. x_f0 defaults to the active estimate."""
        m, n = self.layout.n_modes, self.layout.n_x
        x0 = np.asarray(x0, dtype=float).reshape(n)
        xh = np.asarray(xhat0, dtype=float)
        if xh.ndim == 1:
            xh = np.tile(xh.reshape(1, n), (m, 1))
        if xh.shape != (m, n):
            raise DimensionMismatch(f"xhat0 must be ({m}, {n}) or ({n},)")
        eta = np.asarray(eta0, dtype=float).reshape(-1)
        if eta.size == 1:
            eta = np.full(m, float(eta[0]))
        if eta.shape != (m,):
            raise DimensionMismatch(f"eta0 must be scalar or length {m}")
        if (eta < 0).any():
            raise ValueError("monitors must start nonnegative")
        if not 1 <= sigma0 <= m:
            raise ValueError(f"sigma0 must lie in 1..{m}")
        internals = [md.gain.initial_internal() for md in self.modes]
        x_f = None
        if self.layout.sl_filter is not None:
            x_f = np.asarray(x_f0, dtype=float).reshape(n) \
                if x_f0 is not None else xh[sigma0 - 1].copy()
        return self.layout.pack(
            SupervisorState(x0, xh, eta, int(sigma0), internals, x_f))

    def solve(self, q0: np.ndarray, solver_cfg: hybrid.SolverConfig) -> hybrid.HybridArc:
        return hybrid.solve(self.system, q0, solver_cfg, None)

    # -- pieces shared by flow and jump

    def _drive_terms(self, q, xh, u: float, y: float):
        """Innovations, injections, and packed covariance rates for every
        mode; EKF gains are resolved from their packed covariances."""
        inn = y - self.family.output_batch(xh, u)
        inj = inn[:, None] * self._const_L
        if not self._ekf:
            return inn, inj, self._no_cov
        cov_rates = []
        for i, gain in self._ekf:
            p = gain.unpack(q[self.layout.internal_slices[i]])
            a_lin, c_lin = self.family.linearize(xh[i], u)
            dp, L = observers.ekf_gain_flow(gain, p, a_lin, c_lin)
            inj[i] = L * inn[i]
            cov_rates.append((i, gain.pack(dp)))
        return inn, inj, cov_rates

    def _monitor_rates(self, eta, inn, inj):
        if self._lam2_diag is not None:
            drive = (inj * inj) @ self._lam2_diag
        else:
            drive = np.einsum("ki,ij,kj->k", inj, self._lam2, inj)
        return -self._nu * eta + self._lam1 * inn * inn + drive

    def monitor_rates(self, q: np.ndarray, t: float) -> np.ndarray:
        """Per-mode monitor derivatives at a flat state; the jump map uses
        these to break monitor ties by steepest descent."""
        lay = self.layout
        x = q[lay.sl_x]
        xh = q[lay.sl_xhat].reshape(lay.n_modes, lay.n_x)
        u = float(self.signals.u(t))
        w = float(self.signals.w(t))
        y = float(self.plant.output(x, u, w))
        inn, inj, _ = self._drive_terms(q, xh, u, y)
        return self._monitor_rates(q[lay.sl_eta], inn, inj)

    # -- hybrid system callbacks (inputs channel unused: signals are bound)

    def _flow(self, q, inputs, t):
        lay = self.layout
        x = q[lay.sl_x]
        xh = q[lay.sl_xhat].reshape(lay.n_modes, lay.n_x)
        eta = q[lay.sl_eta]
        u = float(self.signals.u(t))
        v = float(self.signals.v(t))
        w = float(self.signals.w(t))
        y = float(self.plant.output(x, u, w))
        inn, inj, cov_rates = self._drive_terms(q, xh, u, y)
        dq = np.empty(lay.dim)
        dq[lay.sl_x] = self.plant.dynamics(x, u, v)
        dq[lay.sl_xhat] = self.family.dynamics_batch(xh, u, inj).ravel()
        dq[lay.sl_eta] = self._monitor_rates(eta, inn, inj)
        for i, dp in cov_rates:
            dq[lay.internal_slices[i]] = dp
        if lay.sl_filter is not None:
            i_sig = int(round(float(q[lay.idx_sigma]))) - 1
            dq[lay.sl_filter] = self.cfg.zeta * (xh[i_sig] - q[lay.sl_filter])
        dq[lay.idx_sigma] = 0.0
        return dq

    def _flow_planar_const(self, q, inputs, t):
        """Scalar twin of _flow for constant-gain planar banks.

        Expression trees mirror the vectorized path so both round alike
        (the monitor drive may differ by one ulp: the generic path sums
        it through a BLAS dot).
        """
        lay = self.layout
        m = lay.n_modes
        u = float(self.signals.u(t))
        v = float(self.signals.v(t))
        w = float(self.signals.w(t))
        x = q[lay.sl_x]
        y = float(self.plant.output(x, u, w))
        ql = q.tolist()
        nu, lam1, sat = self._nu, self._lam1, self._sat
        d0, d1 = self._l2d
        ls = self._L_flat
        eta_ofs = 2 + 2 * m
        dq = [0.0] * lay.dim
        for k in range(m):
            i = 2 + 2 * k
            x1 = ql[i]
            x2 = ql[i + 1]
            inn = y - x1
            inj0 = inn * ls[i - 2]
            inj1 = inn * ls[i - 1]
            dq[i] = x2 + inj0
            raw = -x1 + 0.5 * (1.0 - x1 * x1) * x2
            if raw != raw:        # NaN passes through the saturation
                pass
            elif raw < -sat:
                raw = -sat
            elif raw > sat:
                raw = sat
            dq[i + 1] = raw + inj1
            dq[eta_ofs + k] = -nu * ql[eta_ofs + k] + lam1 * inn * inn \
                + (inj0 * inj0 * d0 + inj1 * inj1 * d1)
        out = np.array(dq)
        out[lay.sl_x] = self.plant.dynamics(x, u, v)
        return out

    def _jump(self, q, inputs, t):
        s = self.layout.unpack(q)
        rates = self.monitor_rates(q, t)
        s2, _ = apply_jump(s, rates, self.cfg, rng=self._rng)
        return self.layout.pack(s2)

    def _guard(self, q, t):
        return jump_guard(q[self.layout.sl_eta],
                          int(round(float(q[self.layout.idx_sigma]))))

    # -- post-run helpers

    def innovation_history(self, view: "TraceView") -> np.ndarray:
        """y - yhat_k at every recorded sample, one column per mode."""
        out = np.empty((view.t.size, self.layout.n_modes))
        for i in range(view.t.size):
            ti = float(view.t[i])
            u = float(self.signals.u(ti))
            w = float(self.signals.w(ti))
            y = float(self.plant.output(view.x[i], u, w))
            out[i] = y - self.family.output_batch(view.xhat[i], u)
        return out


def assemble(plant: plants.PlantModel, modes, cfg: SupervisorConfig,
             signals: Optional[plants.SignalBundle] = None,
             family=None) -> Supervisor:
    """Validate dimensions and wire plant + modes + monitors together."""
    return Supervisor(plant, modes, cfg, signals=signals, family=family)


# ---------------------------------------------------------------------------
# Arc post-processing


@dataclass
class TraceView:
    """Arc columns split per the state layout."""

    t: np.ndarray
    j: np.ndarray
    x: np.ndarray            # (n, n_x)
    xhat: np.ndarray         # (n, M, n_x)
    eta: np.ndarray          # (n, M)
    sigma: np.ndarray        # (n,) integer
    x_f: Optional[np.ndarray] = None


def split_arc(arc: hybrid.HybridArc, layout: StateLayout) -> TraceView:
    st = arc.states
    xhat = st[:, layout.sl_xhat].reshape(st.shape[0], layout.n_modes,
                                         layout.n_x)
    x_f = st[:, layout.sl_filter] if layout.sl_filter is not None else None
    return TraceView(
        t=arc.times,
        j=arc.jumps,
        x=st[:, layout.sl_x],
        xhat=xhat,
        eta=st[:, layout.sl_eta],
        sigma=np.rint(st[:, layout.idx_sigma]).astype(int),
        x_f=x_f,
    )


def switch_events_from_arc(arc: hybrid.HybridArc, layout: StateLayout,
                           cfg: SupervisorConfig) -> list:
    out = []
    for ev in arc.jump_events:
        before = layout.unpack(ev.state_before)
        after = layout.unpack(ev.state_after)
        out.append(SwitchEvent(
            time=ev.time,
            sigma_before=before.sigma,
            sigma_after=after.sigma,
            eta_before=np.array(before.eta),
            eta_after=np.array(after.eta),
            reset_applied=bool(cfg.reset),
        ))
    return out
