"""Run-level performance numbers over one hybrid arc.

Costs integrate the active and nominal monitors with the trapezoid rule on
the solver's own sample grid; jump pairs share a time instant, so their
intervals contribute nothing and the cumulative sum is exactly the hybrid
sum of per-interval integrals. Error statistics average over flow samples
only (the pre-jump duplicate of each jump pair is dropped), a zero-measure
convention at the solver's resolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import hybrid
from .supervisor import TIE_TOL, TraceView, split_arc


# ---------------------------------------------------------------------------
# Cost traces


def _cumtrapz(t: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(t), out=out[1:])
    return out


def active_eta(view: TraceView) -> np.ndarray:
    """eta of the mode active at each sample (pre-jump samples use the
    pre-jump mode)."""
    return np.take_along_axis(view.eta, view.sigma[:, None] - 1, axis=1)[:, 0]


def cost_sigma(view: TraceView) -> np.ndarray:
    """Cumulative integral of the active monitor, one value per sample."""
    return _cumtrapz(view.t, active_eta(view))


def cost_nominal(view: TraceView) -> np.ndarray:
    return _cumtrapz(view.t, view.eta[:, 0])


# ---------------------------------------------------------------------------
# Error statistics


def flow_sample_mask(t: np.ndarray) -> np.ndarray:
    """True for samples that start a flow interval or end the run; the
    pre-jump member of each same-instant pair is dropped."""
    keep = np.ones(t.size, dtype=bool)
    keep[:-1] = np.diff(t) > hybrid.SAME_INSTANT
    keep[-1] = True
    return keep


def error_stats(view: TraceView, which="sigma"):
    """(MAE, RMSE) of the Euclidean estimation-error norm over flow
    samples. which: "sigma" for the active mode, "nominal" for mode 1, or
    a 1-based mode index."""
    if which == "nominal":
        est = view.xhat[:, 0, :]
    elif which == "sigma":
        idx = (view.sigma - 1)[:, None, None]
        est = np.take_along_axis(view.xhat, idx, axis=1)[:, 0, :]
    else:
        est = view.xhat[:, int(which) - 1, :]
    err = np.linalg.norm(view.x - est, axis=1)
    err = err[flow_sample_mask(view.t)]
    mae = float(np.mean(err))
    rmse = float(np.sqrt(np.mean(err * err)))
    return mae, rmse


def improvement_pct(nominal: float, switched: float) -> float:
    """100 * (1 - switched/nominal); zero when both vanish."""
    if nominal <= 0.0:
        return 0.0 if switched <= 0.0 else float("-inf")
    return 100.0 * (1.0 - switched / nominal)


# ---------------------------------------------------------------------------
# Dwell-time diagnostics


@dataclass
class DwellReport:
    n_jumps: int
    n_clusters: int
    max_consecutive_jumps: int
    min_intercluster_flow: float
    cascade_ok: bool                 # no more than 2 jumps at one instant
    adt_ok: Optional[bool] = None    # j' - j <= (t' - t)/tau + 2, all pairs


def dwell_diagnostics(arc: hybrid.HybridArc, tau: Optional[float] = None) -> DwellReport:
    t = arc.times
    j = arc.jumps
    jump_times = t[:-1][np.diff(j) > 0]
    if jump_times.size == 0:
        horizon = float(t[-1] - t[0])
        return DwellReport(0, 0, 0, horizon, True,
                           None if tau is None else True)
    # cluster jumps sharing an instant
    breaks = np.flatnonzero(np.diff(jump_times) > hybrid.SAME_INSTANT)
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks, [jump_times.size - 1]])
    sizes = ends - starts + 1
    if starts.size >= 2:
        gaps = jump_times[starts[1:]] - jump_times[ends[:-1]]
        min_gap = float(gaps.min())
    else:
        min_gap = float(t[-1] - t[0])
    adt_ok = None
    if tau is not None:
        # j' - j <= (t' - t)/tau + 2 for every ordered pair reduces to a
        # prefix-minimum scan of s = j - t/tau
        s = j - t / tau
        worst = float(np.max(s - np.minimum.accumulate(s)))
        adt_ok = worst <= 2.0 + 1e-12
    return DwellReport(
        n_jumps=int(j[-1] - j[0]),
        n_clusters=int(starts.size),
        max_consecutive_jumps=int(sizes.max()),
        min_intercluster_flow=min_gap,
        cascade_ok=bool(sizes.max() <= 2),
        adt_ok=adt_ok,
    )


# ---------------------------------------------------------------------------
# Strict-improvement detection


def strict_improvement_time(view: TraceView) -> Optional[hybrid.HybridTime]:
    """Earliest sample where the active monitor sits strictly below the
    nominal one (by more than the tie tolerance)."""
    gap = active_eta(view) - view.eta[:, 0]
    hits = np.flatnonzero(gap < -TIE_TOL)
    if hits.size == 0:
        return None
    i = int(hits[0])
    return hybrid.HybridTime(float(view.t[i]), int(view.j[i]))


# ---------------------------------------------------------------------------
# Aggregated report


@dataclass
class RunReport:
    horizon: float
    switch_count: int
    max_consecutive_jumps: int
    min_intercluster_flow: float
    cost_sigma_final: float
    cost_nominal_final: float
    improvement_cost_pct: float
    mae_nominal: float
    mae_sigma: float
    rmse_nominal: float
    rmse_sigma: float
    improvement_mae_pct: float
    improvement_rmse_pct: float
    eta_gap_max: float               # max over samples of eta_sigma - eta_1
    cost_gap_max: float              # max over samples of J_sigma - J_1
    strict_improvement_time: Optional[hybrid.HybridTime]
    strict_cost_after: Optional[bool]
    adt_ok: Optional[bool] = None
    j_sigma_trace: Optional[np.ndarray] = None
    j_nominal_trace: Optional[np.ndarray] = None

    CSV_FIELDS = (
        "horizon", "switch_count", "max_consecutive_jumps",
        "min_intercluster_flow", "cost_sigma_final", "cost_nominal_final",
        "improvement_cost_pct", "mae_nominal", "mae_sigma", "rmse_nominal",
        "rmse_sigma", "improvement_mae_pct", "improvement_rmse_pct",
        "eta_gap_max", "cost_gap_max", "strict_t", "strict_j", "adt_ok",
    )

    def to_csv_row(self) -> dict:
        row = {name: getattr(self, name) for name in self.CSV_FIELDS
               if name not in ("strict_t", "strict_j", "adt_ok")}
        st = self.strict_improvement_time
        row["strict_t"] = "" if st is None else st.t
        row["strict_j"] = "" if st is None else st.j
        row["adt_ok"] = "" if self.adt_ok is None else int(self.adt_ok)
        return row

    def __str__(self) -> str:
        st = self.strict_improvement_time
        lines = [
            f"horizon            {self.horizon:.6g} s",
            f"switches           {self.switch_count} "
            f"(max cascade {self.max_consecutive_jumps}, "
            f"min flow between clusters {self.min_intercluster_flow:.6g} s)",
            f"cost J_sigma       {self.cost_sigma_final:.6g}",
            f"cost J_1           {self.cost_nominal_final:.6g} "
            f"(improvement {self.improvement_cost_pct:.2f}%)",
            f"MAE  sigma/nominal {self.mae_sigma:.6g} / {self.mae_nominal:.6g} "
            f"(improvement {self.improvement_mae_pct:.2f}%)",
            f"RMSE sigma/nominal {self.rmse_sigma:.6g} / {self.rmse_nominal:.6g} "
            f"(improvement {self.improvement_rmse_pct:.2f}%)",
            f"monitor gap max    {self.eta_gap_max:.3e}",
            f"cost gap max       {self.cost_gap_max:.3e}",
            "strict improvement " + ("none" if st is None else
                                     f"at t={st.t:.6g}, j={st.j}"),
        ]
        if self.adt_ok is not None:
            lines.append(f"dwell-time check   {'ok' if self.adt_ok else 'VIOLATED'}")
        return "\n".join(lines)


def build_report(arc: hybrid.HybridArc, layout, tau: Optional[float] = None,
                 keep_traces: bool = False) -> RunReport:
    view = split_arc(arc, layout)
    js = cost_sigma(view)
    jn = cost_nominal(view)
    mae_n, rmse_n = error_stats(view, "nominal")
    mae_s, rmse_s = error_stats(view, "sigma")
    dwell = dwell_diagnostics(arc, tau=tau)
    strict = strict_improvement_time(view)
    strict_cost = None
    if strict is not None:
        later = view.t > strict.t
        strict_cost = bool(np.all(jn[later] - js[later] > 0.0)) \
            if later.any() else False
    return RunReport(
        horizon=float(view.t[-1] - view.t[0]),
        switch_count=dwell.n_jumps,
        max_consecutive_jumps=dwell.max_consecutive_jumps,
        min_intercluster_flow=dwell.min_intercluster_flow,
        cost_sigma_final=float(js[-1]),
        cost_nominal_final=float(jn[-1]),
        improvement_cost_pct=improvement_pct(float(jn[-1]), float(js[-1])),
        mae_nominal=mae_n,
        mae_sigma=mae_s,
        rmse_nominal=rmse_n,
        rmse_sigma=rmse_s,
        improvement_mae_pct=improvement_pct(mae_n, mae_s),
        improvement_rmse_pct=improvement_pct(rmse_n, rmse_s),
        eta_gap_max=float((active_eta(view) - view.eta[:, 0]).max()),
        cost_gap_max=float((js - jn).max()),
        strict_improvement_time=strict,
        strict_cost_after=strict_cost,
        adt_ok=dwell.adt_ok,
        j_sigma_trace=js if keep_traces else None,
        j_nominal_trace=jn if keep_traces else None,
    )
