"""Scenario configuration: strict TOML in, live objects out.

The schema is deliberately rigid. Every key is typed, unknown keys are
rejected, and error messages carry the full section path, so a typo fails
loudly instead of silently falling back to a default. load_config() parses
and validates; build_scenario() turns the result into a plant, a mode bank,
signal callables and an assembled supervisor ready to solve.
"""

from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:                       # Python < 3.11
    import tomli as tomllib

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import hybrid, observers, plants, supervisor


class ConfigError(Exception):
    """Configuration rejected; the message names the offending key path."""


_MISSING = object()


class _Table:
    """One TOML table with typed key extraction and leftover detection."""

    def __init__(self, raw, path: str):
        if not isinstance(raw, dict):
            raise ConfigError(f"[{path}] must be a table")
        self._raw = dict(raw)
        self._path = path

    def _key(self, name: str) -> str:
        return f"{self._path}.{name}" if self._path else name

    def _take(self, name: str, default):
        """(found, value); found False means return the default untouched."""
        if name not in self._raw:
            if default is _MISSING:
                raise ConfigError(f"missing required key '{self._key(name)}'")
            return False, default
        return True, self._raw.pop(name)

    def number(self, name: str, default=_MISSING) -> float:
        found, v = self._take(name, default)
        if not found:
            return v
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"'{self._key(name)}' must be a number")
        return float(v)

    def integer(self, name: str, default=_MISSING) -> int:
        found, v = self._take(name, default)
        if not found:
            return v
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"'{self._key(name)}' must be an integer")
        return int(v)

    def string(self, name: str, default=_MISSING) -> str:
        found, v = self._take(name, default)
        if not found:
            return v
        if not isinstance(v, str):
            raise ConfigError(f"'{self._key(name)}' must be a string")
        return v

    def boolean(self, name: str, default=_MISSING) -> bool:
        found, v = self._take(name, default)
        if not found:
            return v
        if not isinstance(v, bool):
            raise ConfigError(f"'{self._key(name)}' must be a boolean")
        return v

    def vector(self, name: str, default=_MISSING) -> Optional[np.ndarray]:
        found, v = self._take(name, default)
        if not found:
            return v
        if not isinstance(v, list) or not v or \
                any(isinstance(x, (bool, list, dict)) for x in v):
            raise ConfigError(f"'{self._key(name)}' must be a list of numbers")
        return np.asarray(v, dtype=float)

    def weight(self, name: str, default=_MISSING) -> Optional[np.ndarray]:
        # scalar or nested list; always returned as a 2-D matrix
        found, v = self._take(name, default)
        if not found:
            return v
        if isinstance(v, bool):
            raise ConfigError(f"'{self._key(name)}' must be a number or matrix")
        if isinstance(v, (int, float)):
            return np.array([[float(v)]])
        if isinstance(v, list) and v and all(
                isinstance(r, list) and r and
                all(isinstance(x, (int, float)) and not isinstance(x, bool)
                    for x in r)
                for r in v):
            m = np.asarray(v, dtype=float)
            if m.ndim == 2 and m.shape[0] == m.shape[1]:
                return m
        raise ConfigError(
            f"'{self._key(name)}' must be a scalar or a square matrix")

    def scalar_or_vector(self, name: str, default=_MISSING):
        found, v = self._take(name, default)
        if not found:
            return v
        if isinstance(v, bool):
            raise ConfigError(f"'{self._key(name)}' must be numeric")
        if isinstance(v, (int, float)):
            return float(v)
        if isinstance(v, list) and v and not \
                any(isinstance(x, (bool, list, dict)) for x in v):
            return np.asarray(v, dtype=float)
        raise ConfigError(
            f"'{self._key(name)}' must be a number or a list of numbers")

    def rows(self, name: str, default=_MISSING) -> Optional[np.ndarray]:
        # flat list -> one row, nested list -> one row per entry
        found, v = self._take(name, default)
        if not found:
            return v
        if not isinstance(v, list) or not v:
            raise ConfigError(f"'{self._key(name)}' must be a nonempty list")
        if all(isinstance(r, list) for r in v):
            return np.asarray(v, dtype=float)
        return np.asarray(v, dtype=float).reshape(1, -1)

    def table(self, name: str, required=True) -> Optional["_Table"]:
        v = self._raw.pop(name, None)
        if v is None:
            if required:
                raise ConfigError(f"missing required section [{self._key(name)}]")
            return None
        return _Table(v, self._key(name))

    def table_list(self, name: str) -> list:
        v = self._raw.pop(name, None)
        if not isinstance(v, list) or not v:
            raise ConfigError(
                f"missing required array of tables [[{self._key(name)}]]")
        return [_Table(entry, f"{self._key(name)}[{i + 1}]")
                for i, entry in enumerate(v)]

    def done(self):
        if self._raw:
            extras = ", ".join(sorted(self._raw))
            where = self._path or "top level"
            raise ConfigError(f"unknown key(s) in {where}: {extras}")


# ---------------------------------------------------------------------------
# Validated configuration objects


@dataclass
class ModeSpec:
    """One observer mode as configured; gains are built on demand."""

    kind: str               # "high_gain" | "constant" | "ekf"
    params: dict

    def build(self, index: int) -> observers.ObserverMode:
        p = self.params
        if self.kind == "high_gain":
            gain = observers.ConstantGain(
                observers.high_gain_gain(p["h"], p["d"]))
        elif self.kind == "constant":
            gain = observers.ConstantGain(p["L"])
        else:
            gain = observers.EkfGain(r_meas=p["r"], q_proc=p["q"],
                                     alpha=p["alpha"], p0=p["p0"])
        return observers.ObserverMode(index=index, gain=gain)


@dataclass
class SignalSpec:
    input: str = "none"             # "none" | "phev" | profile path
    noise: str = "none"             # "none" | "piecewise_linear" | "sinusoid"
    noise_seed: int = 0
    noise_interval: float = 0.01
    noise_amplitude: float = 0.1
    noise_freq: float = 10.0

    def build(self, noise_seed: Optional[int] = None) -> plants.SignalBundle:
        if self.input == "none":
            u = plants.zero_signal
        elif self.input == "phev":
            u = plants.default_phev_profile()
        else:
            u = plants.load_current_profile(self.input)
        if self.noise == "none":
            w = plants.zero_signal
        elif self.noise == "piecewise_linear":
            seed = self.noise_seed if noise_seed is None else noise_seed
            w = plants.PiecewiseLinearNoise(seed, self.noise_interval,
                                            self.noise_amplitude)
        else:
            w = plants.sinusoid_noise(self.noise_amplitude, self.noise_freq)
        return plants.SignalBundle(u=u, w=w)


@dataclass
class MonteCarloSpec:
    runs: int
    seed: int
    boxes: np.ndarray               # (n_x, 2) lo/hi per estimate component
    shared_init: bool = True        # every mode gets the same sampled row

    def sample_xhat0(self, run_index: int, n_modes: int) -> np.ndarray:
        """Per-run initial estimate, deterministic in (seed, run_index)."""
        rng = np.random.default_rng(
            np.random.SeedSequence([self.seed, run_index]))
        lo, hi = self.boxes[:, 0], self.boxes[:, 1]
        if self.shared_init:
            row = rng.uniform(lo, hi)
            return np.tile(row, (n_modes, 1))
        return rng.uniform(lo, hi, size=(n_modes, lo.size))

    def run_noise_seed(self, run_index: int) -> int:
        rng = np.random.default_rng(
            np.random.SeedSequence([self.seed, run_index, 1]))
        return int(rng.integers(2 ** 62))


@dataclass
class AssumptionSpec:
    lipschitz_k: float
    eigenvalues: np.ndarray


@dataclass
class GainDesignSpec:
    horizon: float = 1.0
    step: float = 1e-3
    theta: float = 0.0
    iters: int = 200
    inits: Optional[np.ndarray] = None       # one initial gain per row
    bound_lo: Optional[np.ndarray] = None
    bound_hi: Optional[np.ndarray] = None
    noise_seeds: tuple = (1, 2, 3)


@dataclass
class ScenarioConfig:
    name: str
    alpha: float
    plant_kind: str
    plant_params: dict
    solver: hybrid.SolverConfig
    sup: supervisor.SupervisorConfig
    sigma0: int
    x0: np.ndarray
    xhat0: np.ndarray               # (1, n) shared or (M, n) per mode
    eta0: object                    # scalar or (M,) vector
    mode_specs: list = field(default_factory=list)
    signals: SignalSpec = field(default_factory=SignalSpec)
    montecarlo: Optional[MonteCarloSpec] = None
    assumptions: Optional[AssumptionSpec] = None
    gain_design: Optional[GainDesignSpec] = None

    @property
    def n_modes(self) -> int:
        return len(self.mode_specs)


# ---------------------------------------------------------------------------
# Loading


_PLANT_DIMS = {"van_der_pol": 2, "battery": 2}


def _parse_mode(tbl: _Table, n_x: int) -> ModeSpec:
    kind = tbl.string("kind")
    if kind == "high_gain":
        spec = ModeSpec(kind, {"h": tbl.number("h"), "d": tbl.vector("d")})
        if spec.params["d"].size != n_x:
            raise ConfigError(f"'{tbl._path}.d' must have {n_x} entries")
    elif kind == "constant":
        spec = ModeSpec(kind, {"L": tbl.vector("L")})
        if spec.params["L"].size != n_x:
            raise ConfigError(f"'{tbl._path}.L' must have {n_x} entries")
    elif kind == "ekf":
        spec = ModeSpec(kind, {
            "r": tbl.number("r"),
            "q": tbl.weight("q"),
            "alpha": tbl.number("alpha"),
            "p0": tbl.weight("p0"),
        })
        if spec.params["p0"].shape != (n_x, n_x):
            raise ConfigError(f"'{tbl._path}.p0' must be {n_x}x{n_x}")
    else:
        raise ConfigError(
            f"'{tbl._path}.kind' must be high_gain, constant or ekf")
    tbl.done()
    return spec


def _parse_signals(tbl: Optional[_Table]) -> SignalSpec:
    if tbl is None:
        return SignalSpec()
    spec = SignalSpec(
        input=tbl.string("input", "none"),
        noise=tbl.string("noise", "none"),
        noise_seed=tbl.integer("noise_seed", 0),
        noise_interval=tbl.number("noise_interval", 0.01),
        noise_amplitude=tbl.number("noise_amplitude", 0.1),
        noise_freq=tbl.number("noise_freq", 10.0),
    )
    if spec.noise not in ("none", "piecewise_linear", "sinusoid"):
        raise ConfigError(
            "'signals.noise' must be none, piecewise_linear or sinusoid")
    tbl.done()
    return spec


def load_config(path) -> ScenarioConfig:
    """Parse and validate one scenario file; raises ConfigError on any
    schema violation, unknown key or parameter out of range."""
    try:
        raw = tomllib.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"not valid TOML: {exc}") from exc

    top = _Table(raw, "")

    sc = top.table("scenario")
    name = sc.string("name")
    alpha = sc.number("alpha")
    if alpha <= 0:
        raise ConfigError("'scenario.alpha' must be positive")
    sc.done()

    pl = top.table("plant")
    plant_kind = pl.string("kind")
    if plant_kind not in _PLANT_DIMS:
        raise ConfigError("'plant.kind' must be van_der_pol or battery")
    n_x = _PLANT_DIMS[plant_kind]
    plant_params = {}
    if plant_kind == "van_der_pol":
        plant_params["sat_level"] = pl.number("sat_level", 10.0)
    else:
        plant_params["tau"] = pl.number("tau", 7.0)
        plant_params["r_branch"] = pl.number("r_branch", 0.5e-3)
        plant_params["q_ah"] = pl.number("q_ah", 25.0)
        plant_params["r_int"] = pl.number("r_int", 1e-3)
    pl.done()

    so = top.table("solver")
    step = so.number("step")
    solver = hybrid.SolverConfig(
        step=step,
        event_tol=so.number("event_tol", step * 1e-3),
        t_end=so.number("t_end"),
    )
    so.done()

    su = top.table("supervisor")
    nu = su.number("nu")
    if not 0 < nu <= alpha:
        raise ConfigError(
            f"'supervisor.nu' must lie in (0, alpha]: nu = {nu}, "
            f"alpha = {alpha}")
    zeta = su.number("zeta", None)
    sup_cfg = supervisor.SupervisorConfig(
        nu=nu,
        lambda1=su.weight("lambda1"),
        lambda2=su.weight("lambda2"),
        epsilon=su.number("epsilon"),
        reset=su.integer("reset", 0),
        tie_break=su.string("tie_break", "lowest-index"),
        tie_seed=su.integer("tie_seed", 0),
        zeta=zeta,
    )
    sigma0 = su.integer("sigma0", 1)
    su.done()

    modes = [_parse_mode(t, n_x) for t in top.table_list("modes")]
    if len(modes) < 2:
        raise ConfigError("at least 2 modes required (nominal plus one)")

    ini = top.table("initial")
    x0 = ini.vector("x0")
    xhat0 = ini.rows("xhat0")
    eta0 = ini.scalar_or_vector("eta0")
    ini.done()
    if x0.size != n_x:
        raise ConfigError(f"'initial.x0' must have {n_x} entries")
    if xhat0.shape[1] != n_x or xhat0.shape[0] not in (1, len(modes)):
        raise ConfigError(
            f"'initial.xhat0' must be one row of {n_x} or one per mode")
    eta_arr = np.atleast_1d(np.asarray(eta0, dtype=float))
    if eta_arr.size not in (1, len(modes)):
        raise ConfigError("'initial.eta0' must be scalar or one per mode")
    if (eta_arr < 0).any():
        raise ConfigError("'initial.eta0' must be nonnegative")
    if not 1 <= sigma0 <= len(modes):
        raise ConfigError(f"'supervisor.sigma0' must lie in 1..{len(modes)}")

    signals = _parse_signals(top.table("signals", required=False))

    mc = None
    mct = top.table("montecarlo", required=False)
    if mct is not None:
        runs = mct.integer("runs")
        if runs < 1:
            raise ConfigError("'montecarlo.runs' must be >= 1")
        boxes = mct.rows("boxes")
        if boxes.shape != (n_x, 2):
            raise ConfigError(
                f"'montecarlo.boxes' must be {n_x} [lo, hi] pairs")
        if (boxes[:, 0] > boxes[:, 1]).any():
            raise ConfigError("'montecarlo.boxes' must satisfy lo <= hi")
        seed = mct.integer("seed")
        shared = mct.boolean("shared_init", True)
        mct.done()
        mc = MonteCarloSpec(runs=runs, seed=seed, boxes=boxes,
                            shared_init=shared)

    asmp = None
    at = top.table("assumptions", required=False)
    if at is not None:
        asmp = AssumptionSpec(
            lipschitz_k=at.number("lipschitz_k"),
            eigenvalues=at.vector("eigenvalues"),
        )
        at.done()

    gd = None
    gt = top.table("gain_design", required=False)
    if gt is not None:
        inits = gt.rows("inits", None)
        lo = gt.vector("bound_lo", None)
        hi = gt.vector("bound_hi", None)
        seeds = gt.vector("noise_seeds", None)
        gd = GainDesignSpec(
            horizon=gt.number("horizon", 1.0),
            step=gt.number("step", 1e-3),
            theta=gt.number("theta", 0.0),
            iters=gt.integer("iters", 200),
            inits=inits,
            bound_lo=lo,
            bound_hi=hi,
            noise_seeds=tuple(int(s) for s in seeds)
            if seeds is not None else (1, 2, 3),
        )
        gt.done()

    top.done()
    return ScenarioConfig(
        name=name, alpha=alpha, plant_kind=plant_kind,
        plant_params=plant_params, solver=solver, sup=sup_cfg,
        sigma0=sigma0, x0=x0, xhat0=xhat0, eta0=eta0, mode_specs=modes,
        signals=signals, montecarlo=mc, assumptions=asmp, gain_design=gd)


# ---------------------------------------------------------------------------
# Building live objects


@dataclass
class Scenario:
    """Everything one run needs: assembled supervisor plus its inputs."""

    config: ScenarioConfig
    plant: plants.PlantModel
    modes: list
    signals: plants.SignalBundle
    sup: supervisor.Supervisor
    q0: np.ndarray


def build_plant(cfg: ScenarioConfig) -> plants.PlantModel:
    if cfg.plant_kind == "van_der_pol":
        return plants.van_der_pol(
            plants.VanDerPolParams(sat_level=cfg.plant_params["sat_level"]))
    return plants.battery(plants.BatteryParams(
        tau=cfg.plant_params["tau"],
        r_branch=cfg.plant_params["r_branch"],
        q_ah=cfg.plant_params["q_ah"],
        r_int=cfg.plant_params["r_int"],
    ))


def build_scenario(cfg: ScenarioConfig,
                   xhat0_override: Optional[np.ndarray] = None,
                   noise_seed_override: Optional[int] = None,
                   reset_override: Optional[int] = None) -> Scenario:
    """Assemble the configured scenario. The overrides exist for batch
    runs: a sampled initial estimate, a per-run noise seed, and the CLI's
    reset flag."""
    sup_cfg = cfg.sup
    if reset_override is not None:
        sup_cfg = supervisor.SupervisorConfig(
            nu=sup_cfg.nu, lambda1=sup_cfg.lambda1, lambda2=sup_cfg.lambda2,
            epsilon=sup_cfg.epsilon, reset=int(reset_override),
            tie_break=sup_cfg.tie_break, tie_seed=sup_cfg.tie_seed,
            zeta=sup_cfg.zeta)
    plant = build_plant(cfg)
    modes = [spec.build(i + 1) for i, spec in enumerate(cfg.mode_specs)]
    signals = cfg.signals.build(noise_seed=noise_seed_override)
    sup = supervisor.assemble(plant, modes, sup_cfg, signals=signals)
    xhat0 = cfg.xhat0 if xhat0_override is None else xhat0_override
    if xhat0.shape[0] == 1:
        xhat0 = np.tile(xhat0, (len(modes), 1))
    q0 = sup.initial_state(cfg.x0, xhat0, cfg.eta0, sigma0=cfg.sigma0)
    return Scenario(config=cfg, plant=plant, modes=modes, signals=signals,
                    sup=sup, q0=q0)


def bundled_config_path(name: str) -> Path:
    """Path of a packaged scenario file, by bare name or filename."""
    stem = name if name.endswith(".toml") else f"{name}.toml"
    return Path(__file__).parent / "configs" / stem
