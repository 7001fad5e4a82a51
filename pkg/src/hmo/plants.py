"""Plant models and exogenous signal generators for the case studies.

Two plants are bundled: a Van der Pol oscillator with a saturated
nonlinearity, and a one-RC-branch equivalent-circuit battery whose state is
(RC-branch voltage [V], state of charge [%]). Signals (input current,
process disturbance, measurement noise) are plain callables of time so the
integrator can evaluate them at arbitrary instants.
"""

from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np


class OcvCurveMissing(Exception):
    """Battery output requested without a configured open-circuit curve."""


class MalformedProfile(Exception):
    """A current-profile CSV did not parse as (time_s, current_A) rows."""


# ---------------------------------------------------------------------------
# Van der Pol oscillator


@dataclass
class VanDerPolParams:
    sat_level: float = 10.0


VDP_A = np.array([[0.0, 1.0], [0.0, 0.0]])
VDP_B = np.array([0.0, 1.0])
VDP_C = np.array([1.0, 0.0])


def vdp_phi(x1, x2, sat_level=10.0):
    """Saturated Van der Pol nonlinearity; accepts scalars or arrays."""
    raw = -x1 + 0.5 * (1.0 - x1 * x1) * x2
    if isinstance(raw, np.ndarray):
        return np.minimum(np.maximum(raw, -sat_level), sat_level)
    if raw != raw:   # NaN must survive the saturation comparisons
        return raw
    if raw < -sat_level:
        return -sat_level
    return raw if raw < sat_level else sat_level


def vdp_dynamics(x: np.ndarray, p: VanDerPolParams = VanDerPolParams()) -> np.ndarray:
    return np.array([x[1], vdp_phi(x[0], x[1], p.sat_level)])


# ---------------------------------------------------------------------------
# Battery equivalent circuit


class OcvCurve:
    """Tabulated open-circuit voltage versus state of charge [%].

    Piecewise linear between knots, linearly extrapolated outside them with
    the end-segment slopes. The table must be strictly increasing in both
    coordinates.
    """

    def __init__(self, soc: np.ndarray, voltage: np.ndarray):
        soc = np.asarray(soc, dtype=float)
        voltage = np.asarray(voltage, dtype=float)
        if soc.ndim != 1 or soc.shape != voltage.shape or soc.size < 2:
            raise ValueError("curve needs matching 1-D soc/voltage tables")
        if not (np.all(np.diff(soc) > 0) and np.all(np.diff(voltage) > 0)):
            raise ValueError("curve must be strictly increasing")
        self.soc = soc
        self.voltage = voltage
        self._slopes = np.diff(voltage) / np.diff(soc)
        # plain-list twins for the scalar lookup path: this sits inside the
        # integrator's inner loop where numpy scalar ops dominate runtime
        self._soc_l = soc.tolist()
        self._v_l = voltage.tolist()
        self._s_l = self._slopes.tolist()
        self._top = soc.size - 2

    def _seg_scalar(self, s: float) -> int:
        i = bisect_right(self._soc_l, s) - 1
        if i < 0:
            return 0
        return self._top if i > self._top else i

    def _segment(self, s):
        i = np.searchsorted(self.soc, s, side="right") - 1
        return np.minimum(np.maximum(i, 0), self._top)

    def __call__(self, s):
        if not isinstance(s, np.ndarray):
            s = float(s)
            i = self._seg_scalar(s)
            return self._v_l[i] + self._s_l[i] * (s - self._soc_l[i])
        if s.ndim == 1 and s.size <= 8:
            # mode-bank sized batches: the scalar path beats fancy indexing
            out = np.empty(s.size)
            for j, sj in enumerate(s.tolist()):
                i = self._seg_scalar(sj)
                out[j] = self._v_l[i] + self._s_l[i] * (sj - self._soc_l[i])
            return out
        i = self._segment(s)
        return self.voltage[i] + self._slopes[i] * (s - self.soc[i])

    def slope(self, s):
        if not isinstance(s, np.ndarray):
            return self._s_l[self._seg_scalar(float(s))]
        return self._slopes[self._segment(s)]


def default_ocv_curve() -> OcvCurve:
    """Generic Li-ion shaped placeholder: 3.0 V at 0 % to 4.2 V at 100 %."""
    soc = np.linspace(0.0, 100.0, 21)
    voltage = np.array([
        3.00, 3.22, 3.36, 3.45, 3.51, 3.56, 3.60, 3.64, 3.67, 3.70, 3.73,
        3.76, 3.79, 3.83, 3.87, 3.91, 3.95, 4.00, 4.06, 4.13, 4.20,
    ])
    return OcvCurve(soc, voltage)


@dataclass
class BatteryParams:
    tau: float = 7.0                 # RC time constant [s]
    r_branch: float = 0.5e-3         # RC branch resistance [ohm]
    q_ah: float = 25.0               # cell capacity [Ah]
    r_int: float = 1e-3              # series resistance [ohm]
    ocv: Optional[OcvCurve] = field(default_factory=default_ocv_curve)

    @property
    def c(self) -> float:
        return self.tau / self.r_branch

    @property
    def q_sec(self) -> float:
        # ampere-seconds per percent, so u / q_sec is a SOC rate in %/s
        return self.q_ah * 3600.0 / 100.0


def battery_a(p: BatteryParams) -> np.ndarray:
    return np.array([[-1.0 / p.tau, 0.0], [0.0, 0.0]])


def battery_b(p: BatteryParams) -> np.ndarray:
    return np.array([-1.0 / p.c, 1.0 / p.q_sec])


BATTERY_C = np.array([-1.0, 0.0])


def battery_dynamics(x: np.ndarray, u: float, p: BatteryParams) -> np.ndarray:
    return np.array([-x[0] / p.tau - u / p.c, u / p.q_sec])


def battery_output(x: np.ndarray, u: float, w: float, p: BatteryParams) -> float:
    if p.ocv is None:
        raise OcvCurveMissing("battery output needs a tabulated OCV curve")
    return -x[0] + float(p.ocv(x[1])) - p.r_int * u + w


# ---------------------------------------------------------------------------
# Unified plant surface consumed by the supervisor assembly


@dataclass
class PlantModel:
    name: str
    state_dim: int
    dynamics: Callable   # (x, u, v) -> dx/dt
    output: Callable     # (x, u, w) -> y (scalar)
    params: object


def van_der_pol(params: Optional[VanDerPolParams] = None) -> PlantModel:
    p = params or VanDerPolParams()
    return PlantModel(
        name="van_der_pol",
        state_dim=2,
        dynamics=lambda x, u, v: vdp_dynamics(x, p),
        output=lambda x, u, w: x[0] + w,
        params=p,
    )


def battery(params: Optional[BatteryParams] = None) -> PlantModel:
    p = params or BatteryParams()
    return PlantModel(
        name="battery",
        state_dim=2,
        dynamics=lambda x, u, v: battery_dynamics(x, u, p),
        output=lambda x, u, w: battery_output(x, u, w, p),
        params=p,
    )


# ---------------------------------------------------------------------------
# Exogenous signals


def zero_signal(t: float) -> float:
    return 0.0


@dataclass
class SignalBundle:
    """Exogenous inputs: known input u, disturbance v, measurement noise w."""

    u: Callable = zero_signal
    v: Callable = zero_signal
    w: Callable = zero_signal


class PiecewiseLinearNoise:
    """Uniform noise interpolated linearly between equally spaced knots.

    Knot i carries the i-th draw of a Philox stream keyed by the seed, so a
    knot's value depends only on (seed, i), never on evaluation order. The
    knot cache grows on demand by regenerating the stream prefix.
    """

    def __init__(self, seed: int, interval: float = 0.01, amplitude: float = 0.1):
        if interval <= 0 or amplitude < 0:
            raise ValueError("interval must be positive, amplitude nonnegative")
        self.seed = int(seed)
        self.interval = float(interval)
        self.amplitude = float(amplitude)
        self._knots = np.empty(0)
        self._ensure(512)

    def _ensure(self, n: int):
        if n <= self._knots.size:
            return
        size = max(512, 1 << int(np.ceil(np.log2(n))))
        gen = np.random.Generator(np.random.Philox(key=self.seed))
        self._knots = gen.uniform(-self.amplitude, self.amplitude, size=size)

    def __call__(self, t: float) -> float:
        raw = t / self.interval
        i = int(raw)
        frac = raw - i
        # snap to the knot when t is one representation off a multiple
        if frac < 1e-9:
            self._ensure(i + 1)
            return float(self._knots[i])
        if frac > 1.0 - 1e-9:
            self._ensure(i + 2)
            return float(self._knots[i + 1])
        self._ensure(i + 2)
        return float((1.0 - frac) * self._knots[i] + frac * self._knots[i + 1])


def piecewise_linear_noise(seed: int, interval: float = 0.01,
                           amplitude: float = 0.1) -> PiecewiseLinearNoise:
    return PiecewiseLinearNoise(seed, interval, amplitude)


def sinusoid_noise(amplitude: float = 0.01, freq: float = 10.0) -> Callable:
    def w(t: float) -> float:
        return amplitude * np.sin(freq * t)
    return w


def load_current_profile(path) -> Callable:
    """Read a (time_s, current_A) CSV into a linearly interpolated callable.

    The profile holds its first/last value outside the tabulated range. One
    header line is tolerated; everything else must be numeric rows.
    """
    rows = []
    try:
        lines = Path(path).read_text().strip().splitlines()
    except OSError as exc:
        raise MalformedProfile(f"cannot read profile: {exc}") from exc
    for i, line in enumerate(lines):
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise MalformedProfile(f"line {i + 1}: expected 2 columns")
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError:
            if i == 0:
                continue  # header
            raise MalformedProfile(f"line {i + 1}: non-numeric entry") from None
    if len(rows) < 2:
        raise MalformedProfile("profile needs at least two samples")
    times = np.array([r[0] for r in rows])
    amps = np.array([r[1] for r in rows])
    if not np.all(np.diff(times) > 0):
        raise MalformedProfile("time column must be strictly increasing")

    def u(t: float) -> float:
        return float(np.interp(t, times, amps))

    return u


def default_phev_profile() -> Callable:
    """Synthetic pulsed load: repeating charge/discharge levels within 100 A.

    One 100 s cycle of eight held levels joined by 0.5 s ramps, tiled
    periodically. Negative current discharges the cell.
    """
    levels = [-40.0, -85.0, 30.0, -60.0, 0.0, -95.0, 45.0, -25.0]
    hold = 12.0
    ramp = 0.5
    knot_t, knot_u = [0.0], [levels[0]]
    t = 0.0
    for lev, nxt in zip(levels, levels[1:] + levels[:1]):
        t += hold
        knot_t.append(t)
        knot_u.append(lev)
        t += ramp
        knot_t.append(t)
        knot_u.append(nxt)
    period = t
    times = np.array(knot_t)
    amps = np.array(knot_u)

    def u(tq: float) -> float:
        return float(np.interp(tq % period, times, amps))

    return u
