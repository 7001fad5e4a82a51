"""Run orchestration over validated configurations.

Single runs, Monte-Carlo batches on a worker pool, assumption
verification, gain design glue, and the CSV writers. Per-run sampling is
keyed by (master seed, run index), so a batch produces identical rows
regardless of worker count or completion order.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import config as cfgmod
from . import gain_design, hybrid, metrics, observers, plants, supervisor


def thread_budget() -> Optional[int]:
    """Worker cap from HMO_THREADS; None means use the machine default."""
    raw = os.environ.get("HMO_THREADS", "").strip()
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise cfgmod.ConfigError(f"HMO_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise cfgmod.ConfigError("HMO_THREADS must be >= 1")
    return n


# ---------------------------------------------------------------------------
# Single runs


@dataclass
class RunResult:
    scenario: cfgmod.Scenario
    arc: hybrid.HybridArc
    view: supervisor.TraceView
    report: metrics.RunReport


def run_scenario(cfg: cfgmod.ScenarioConfig,
                 xhat0_override: Optional[np.ndarray] = None,
                 noise_seed_override: Optional[int] = None,
                 reset_override: Optional[int] = None,
                 keep_traces: bool = False) -> RunResult:
    sc = cfgmod.build_scenario(cfg, xhat0_override=xhat0_override,
                               noise_seed_override=noise_seed_override,
                               reset_override=reset_override)
    arc = sc.sup.solve(sc.q0, cfg.solver)
    view = supervisor.split_arc(arc, sc.sup.layout)
    # Dwell audit at tau = 10 steps: roomy against the theory bound yet
    # tight enough that sustained fast switching would trip it.
    report = metrics.build_report(arc, sc.sup.layout,
                                  tau=10.0 * cfg.solver.step,
                                  keep_traces=keep_traces)
    return RunResult(scenario=sc, arc=arc, view=view, report=report)


def trace_columns(scenario: cfgmod.Scenario) -> list:
    layout = scenario.sup.layout
    return (["t", "j"] + layout.column_names(modes=scenario.modes)
            + ["abs_e1", "abs_e_sigma", "J_1", "J_sigma"])


def trace_matrix(result: RunResult) -> np.ndarray:
    """One row per recorded sample: hybrid time, the flat state, and the
    derived error/cost columns."""
    view = result.view
    _, _, e1, e_sig, j1, js = run_series(result)
    return np.column_stack([view.t, view.j.astype(float), result.arc.states,
                            e1, e_sig, j1, js])


def run_series(result: RunResult):
    """(t, sigma, |e_1|, |e_sigma|, J_1, J_sigma) sample series for plotting."""
    view = result.view
    e1 = np.linalg.norm(view.x - view.xhat[:, 0, :], axis=1)
    active = np.take_along_axis(
        view.xhat, (view.sigma - 1)[:, None, None], axis=1)[:, 0, :]
    e_sig = np.linalg.norm(view.x - active, axis=1)
    return (view.t, view.sigma, e1, e_sig,
            metrics.cost_nominal(view), metrics.cost_sigma(view))


def write_trace_csv(path, result: RunResult) -> None:
    """Full-precision trace; identical configs and seeds reproduce the
    file byte for byte."""
    header = ",".join(trace_columns(result.scenario))
    np.savetxt(path, trace_matrix(result), delimiter=",", header=header,
               comments="", fmt="%.17g")


# ---------------------------------------------------------------------------
# Monte-Carlo batches


@dataclass
class McRun:
    index: int
    report: Optional[metrics.RunReport] = None
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.report is not None


@dataclass
class McAggregate:
    """Averages over the completed runs, Table-shaped."""

    runs: int
    completed: int
    failed: int
    reset: int
    mae_nominal: float
    mae_sigma: float
    rmse_nominal: float
    rmse_sigma: float
    improvement_mae_pct: float
    improvement_rmse_pct: float

    def __str__(self) -> str:
        return "\n".join([
            f"runs               {self.completed}/{self.runs} completed "
            f"({self.failed} failed), resets {'on' if self.reset else 'off'}",
            f"avg MAE  sigma/nominal {self.mae_sigma:.6g} / "
            f"{self.mae_nominal:.6g} "
            f"(improvement {self.improvement_mae_pct:.2f}%)",
            f"avg RMSE sigma/nominal {self.rmse_sigma:.6g} / "
            f"{self.rmse_nominal:.6g} "
            f"(improvement {self.improvement_rmse_pct:.2f}%)",
        ])


@dataclass
class McResult:
    records: list
    aggregate: McAggregate


def _mc_run_one(args) -> McRun:
    cfg, index, reset = args
    mc = cfg.montecarlo
    xhat0 = mc.sample_xhat0(index, cfg.n_modes)
    noise_seed = mc.run_noise_seed(index)
    try:
        res = run_scenario(cfg, xhat0_override=xhat0,
                           noise_seed_override=noise_seed,
                           reset_override=reset)
        return McRun(index=index, report=res.report)
    except Exception as exc:  # failures are data, the batch continues
        return McRun(index=index, error=f"{type(exc).__name__}: {exc}")


def montecarlo(cfg: cfgmod.ScenarioConfig,
               runs: Optional[int] = None,
               seed: Optional[int] = None,
               reset: Optional[int] = None,
               workers: Optional[int] = None) -> McResult:
    """Batch of per-run sampled initial estimates; per-run noise seeds are
    derived from the master seed so the batch is reproducible."""
    if cfg.montecarlo is None:
        raise cfgmod.ConfigError(
            "missing required section [montecarlo] for batch runs")
    mc = cfg.montecarlo
    if runs is not None or seed is not None:
        mc = replace(mc, runs=mc.runs if runs is None else int(runs),
                     seed=mc.seed if seed is None else int(seed))
        cfg = replace(cfg, montecarlo=mc)
    if mc.runs < 1:
        raise cfgmod.ConfigError("'montecarlo.runs' must be >= 1")
    reset_val = cfg.sup.reset if reset is None else int(reset)

    jobs = [(cfg, i, reset_val) for i in range(mc.runs)]
    if workers is None:
        workers = thread_budget() or os.cpu_count() or 1
    workers = max(1, min(workers, mc.runs))
    if workers == 1:
        records = [_mc_run_one(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_mc_run_one, jobs))

    good = [r.report for r in records if r.ok]
    if good:
        mae_n = float(np.mean([r.mae_nominal for r in good]))
        mae_s = float(np.mean([r.mae_sigma for r in good]))
        rmse_n = float(np.mean([r.rmse_nominal for r in good]))
        rmse_s = float(np.mean([r.rmse_sigma for r in good]))
    else:
        mae_n = mae_s = rmse_n = rmse_s = float("nan")
    agg = McAggregate(
        runs=mc.runs, completed=len(good), failed=mc.runs - len(good),
        reset=reset_val,
        mae_nominal=mae_n, mae_sigma=mae_s,
        rmse_nominal=rmse_n, rmse_sigma=rmse_s,
        improvement_mae_pct=metrics.improvement_pct(mae_n, mae_s),
        improvement_rmse_pct=metrics.improvement_pct(rmse_n, rmse_s),
    )
    return McResult(records=records, aggregate=agg)


def write_mc_csv(path, result: McResult) -> None:
    fields = ("run",) + metrics.RunReport.CSV_FIELDS + ("error",)
    lines = [",".join(fields)]
    for rec in result.records:
        if rec.ok:
            row = rec.report.to_csv_row()
            vals = [str(rec.index)] + [
                "" if row[f] == "" else
                (f"{row[f]:.17g}" if isinstance(row[f], float) else str(row[f]))
                for f in metrics.RunReport.CSV_FIELDS] + [""]
        else:
            vals = [str(rec.index)] + [""] * len(metrics.RunReport.CSV_FIELDS) \
                + [rec.error.replace(",", ";")]
        lines.append(",".join(vals))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Assumption verification


@dataclass
class AssumptionReport:
    nu: float
    alpha: float
    nu_ok: bool
    high_gain_applicable: bool
    cert: Optional[observers.HighGainCertificate] = None
    delta1: Optional[float] = None
    delta2: Optional[float] = None

    @property
    def passed(self) -> bool:
        if not self.nu_ok:
            return False
        if self.high_gain_applicable and self.cert is not None:
            return bool(self.cert.satisfied)
        return True

    def lines(self) -> list:
        out = [f"nu = {self.nu:g} <= alpha = {self.alpha:g}: "
               f"{'pass' if self.nu_ok else 'FAIL'}"]
        if not self.high_gain_applicable:
            out.append("high-gain feasibility: not applicable "
                       "(nominal mode is not a high-gain design)")
            return out
        c = self.cert
        out += [
            "Lyapunov matrix P = "
            f"[[{c.p[0, 0]:.6g}, {c.p[0, 1]:.6g}], "
            f"[{c.p[1, 0]:.6g}, {c.p[1, 1]:.6g}]] "
            f"(residual {c.residual:.3e})",
            f"lambda_max(P) = {c.lam_max:.6g}",
            f"h1_star = {c.h_star:.6g}",
            f"delta1 = {self.delta1:.6g}, delta2 = {self.delta2:.6g}",
            f"h1 = {c.h1:g} >= h1_star: "
            + ("pass" if c.satisfied
               else f"FAIL (margin {c.h1 - c.h_star:.6g})"),
        ]
        return out


def verify_assumptions(cfg: cfgmod.ScenarioConfig) -> AssumptionReport:
    """Feasibility report for the nominal design: the monitor decay bound
    nu <= alpha always, plus the minimum-gain certificate when the nominal
    mode is a high-gain design with configured constants."""
    nu_ok = 0 < cfg.sup.nu <= cfg.alpha
    nominal = cfg.mode_specs[0]
    applicable = nominal.kind == "high_gain" and cfg.assumptions is not None
    if not applicable:
        return AssumptionReport(nu=cfg.sup.nu, alpha=cfg.alpha, nu_ok=nu_ok,
                                high_gain_applicable=False)
    asmp = cfg.assumptions
    cert = observers.verify_assumption_highgain(
        asmp.eigenvalues, asmp.lipschitz_k, h1=nominal.params["h"])
    d1, d2 = observers.assumption_iss_constants(asmp.lipschitz_k, cert.p)
    return AssumptionReport(nu=cfg.sup.nu, alpha=cfg.alpha, nu_ok=nu_ok,
                            high_gain_applicable=True, cert=cert,
                            delta1=d1, delta2=d2)


# ---------------------------------------------------------------------------
# Gain design


@dataclass
class GainDesignOutcome:
    gain: np.ndarray
    cost: float
    nominal_gain: Optional[np.ndarray]
    nominal_cost: Optional[float]

    def lines(self) -> list:
        out = [f"designed gain  {np.array2string(self.gain, precision=6)}",
               f"worst-case cost {self.cost:.6g}"]
        if self.nominal_cost is not None:
            out.append(f"nominal worst-case cost {self.nominal_cost:.6g} "
                       f"(gain {np.array2string(self.nominal_gain, precision=6)})")
        return out


def build_design_problem(cfg: cfgmod.ScenarioConfig) -> gain_design.GainDesignProblem:
    if cfg.gain_design is None:
        raise cfgmod.ConfigError(
            "missing required section [gain_design] for gain design")
    spec = cfg.gain_design
    plant = cfgmod.build_plant(cfg)
    family = observers.observer_family_for(plant)
    bank = [(plants.zero_signal, plants.zero_signal)]
    bank += gain_design.noise_scenario_bank(
        spec.noise_seeds, interval=cfg.signals.noise_interval,
        amplitude=cfg.signals.noise_amplitude)
    return gain_design.GainDesignProblem(
        plant=plant, family=family, x0=cfg.x0, xhat0=cfg.xhat0[0],
        scenario_bank=bank, u=cfg.signals.build().u, theta=spec.theta,
        horizon=spec.horizon, step=spec.step)


def nominal_gain_vector(cfg: cfgmod.ScenarioConfig) -> Optional[np.ndarray]:
    gain = cfg.mode_specs[0].build(1).gain
    if isinstance(gain, observers.ConstantGain):
        return np.asarray(gain.L, dtype=float)
    return None


def design_gains(cfg: cfgmod.ScenarioConfig, bank_path) -> GainDesignOutcome:
    """Min-max search from the configured initial gains; the result is
    written to bank_path as a one-row gain bank CSV."""
    spec = cfg.gain_design
    problem = build_design_problem(cfg)
    nominal = nominal_gain_vector(cfg)
    inits = [row for row in spec.inits] if spec.inits is not None else None
    if inits is None:
        if nominal is None:
            raise cfgmod.ConfigError(
                "'gain_design.inits' required when the nominal gain is "
                "not a constant vector")
        inits = [nominal]
    bounds = None
    if spec.bound_lo is not None and spec.bound_hi is not None:
        bounds = (spec.bound_lo, spec.bound_hi)
    gain, cost = gain_design.minmax_gain_search(
        problem, inits, iters=spec.iters, bounds=bounds)
    nominal_cost = None
    if nominal is not None:
        nominal_cost = gain_design.worst_case_cost(problem, nominal)
    gain_design.save_gain_bank(bank_path, [gain])
    return GainDesignOutcome(gain=gain, cost=cost, nominal_gain=nominal,
                             nominal_cost=nominal_cost)
