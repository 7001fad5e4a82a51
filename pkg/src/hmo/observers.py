"""Observer mode bank: shared copy-plus-injection dynamics, per-mode gains.

Every mode integrates the same plant copy and differs only in its output
injection gain. Gains are either constant vectors or covariance-driven
(a continuous-time extended Kalman filter with a forgetting factor, whose
covariance rides along inside the hybrid state). Feasibility helpers check
the nominal high-gain design: eigenvalue placement, the Lyapunov certificate
and the minimum admissible gain parameter.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import plants


class NotHurwitz(Exception):
    """Requested observer eigenvalues do not all have negative real part."""


class CovarianceDivergence(Exception):
    """EKF covariance exceeded its configured ceiling during flow."""


# ---------------------------------------------------------------------------
# Gain providers


@dataclass
class ConstantGain:
    L: np.ndarray

    internal_dim: int = 0

    def __post_init__(self):
        self.L = np.asarray(self.L, dtype=float)

    def initial_internal(self) -> np.ndarray:
        return np.empty(0)


@dataclass
class EkfGain:
    """Forgetting-factor EKF gain: L = P C' / R with P from a Riccati flow.

    P is stored packed (upper triangle, row major) so it can live inside the
    flat hybrid state vector; packing keeps it symmetric by construction.
    """

    r_meas: float
    q_proc: np.ndarray
    alpha: float
    p0: np.ndarray
    ceiling: float = 1e9

    def __post_init__(self):
        self.q_proc = np.atleast_2d(np.asarray(self.q_proc, dtype=float))
        self.p0 = np.atleast_2d(np.asarray(self.p0, dtype=float))
        n = self.p0.shape[0]
        if self.p0.shape != (n, n) or self.q_proc.shape != (n, n):
            raise ValueError("P0 and Q must be square matrices of equal size")
        if self.r_meas <= 0:
            raise ValueError("measurement weight R must be positive")
        self._n = n
        iu = np.triu_indices(n)
        self._iu = iu
        self._alpha_eye = self.alpha * np.eye(n)
        self._q_flat = tuple(self.q_proc.ravel().tolist())

    @property
    def internal_dim(self) -> int:
        n = self._n
        return n * (n + 1) // 2

    def initial_internal(self) -> np.ndarray:
        return self.pack(self.p0)

    def pack(self, p: np.ndarray) -> np.ndarray:
        if self._n == 2:
            f = p.ravel().tolist()
            return np.array((f[0], f[1], f[3]))
        return p[self._iu]

    def unpack(self, packed: np.ndarray) -> np.ndarray:
        n = self._n
        if n == 2:
            p0, p1, p2 = packed.tolist()
            return np.array(((p0, p1), (p1, p2)))
        p = np.zeros((n, n))
        p[self._iu] = packed
        p.T[self._iu] = packed  # mirrors the strict upper triangle
        return p

    def gain(self, p: np.ndarray, c_lin: np.ndarray) -> np.ndarray:
        if self._n == 2:
            p00, p01, p10, p11 = p.ravel().tolist()
            c0, c1 = float(c_lin[0]), float(c_lin[1])
            r = self.r_meas
            return np.array(((p00 * c0 + p01 * c1) / r,
                             (p10 * c0 + p11 * c1) / r))
        return (p @ c_lin) / self.r_meas

    def riccati(self, p: np.ndarray, a_lin: np.ndarray,
                c_lin: np.ndarray) -> np.ndarray:
        """Covariance derivative for the forgetting-factor Riccati flow."""
        if self._n == 2:
            return self._riccati2(p, a_lin, c_lin)
        if _sym_eigmax(p) > self.ceiling:
            raise CovarianceDivergence(
                f"EKF covariance exceeded ceiling {self.ceiling:g}")
        af = a_lin + self._alpha_eye
        pc = p @ c_lin
        return af @ p + p @ af.T + self.q_proc - np.outer(pc, pc) / self.r_meas

    def _riccati2(self, p, a_lin, c_lin) -> np.ndarray:
        # scalar twin of the general formula, planar case
        p00, p01, p10, p11 = p.ravel().tolist()
        if 0.5 * (p00 + p11) + math.hypot(0.5 * (p00 - p11), p01) \
                > self.ceiling:
            raise CovarianceDivergence(
                f"EKF covariance exceeded ceiling {self.ceiling:g}")
        a00, a01, a10, a11 = a_lin.ravel().tolist()
        al = self.alpha
        af00, af01, af10, af11 = a00 + al, a01, a10, a11 + al
        c0, c1 = float(c_lin[0]), float(c_lin[1])
        r = self.r_meas
        pc0 = p00 * c0 + p01 * c1
        pc1 = p10 * c0 + p11 * c1
        q00, q01, q10, q11 = self._q_flat
        m00 = (af00 * p00 + af01 * p10) + (p00 * af00 + p01 * af01) \
            + q00 - pc0 * pc0 / r
        m01 = (af00 * p01 + af01 * p11) + (p00 * af10 + p01 * af11) \
            + q01 - pc0 * pc1 / r
        m10 = (af10 * p00 + af11 * p10) + (p10 * af00 + p11 * af01) \
            + q10 - pc1 * pc0 / r
        m11 = (af10 * p01 + af11 * p11) + (p10 * af10 + p11 * af11) \
            + q11 - pc1 * pc1 / r
        return np.array(((m00, m01), (m10, m11)))


def _sym_eigmax(p: np.ndarray) -> float:
    if p.shape == (2, 2):
        half_tr = 0.5 * (p[0, 0] + p[1, 1])
        rad = np.hypot(0.5 * (p[0, 0] - p[1, 1]), p[0, 1])
        return half_tr + rad
    return float(np.linalg.eigvalsh(p)[-1])


def ekf_gain_flow(gain: EkfGain, p: np.ndarray, a_lin: np.ndarray,
                  c_lin: np.ndarray):
    """One evaluation of the covariance flow; returns (Pdot, L)."""
    return gain.riccati(p, a_lin, c_lin), gain.gain(p, c_lin)


@dataclass
class ObserverMode:
    """One mode of the bank: an index (1 is the nominal mode) and a gain."""

    index: int
    gain: object  # ConstantGain or EkfGain


# ---------------------------------------------------------------------------
# Observer families: shared mode dynamics per plant type


class VdpObserverFamily:
    """Van der Pol copy dynamics with additive output injection."""

    n_x = 2

    def __init__(self, params: Optional[plants.VanDerPolParams] = None):
        self.params = params or plants.VanDerPolParams()

    def dynamics_batch(self, xh: np.ndarray, u: float, inj: np.ndarray) -> np.ndarray:
        out = np.empty_like(xh)
        out[:, 0] = xh[:, 1] + inj[:, 0]
        out[:, 1] = plants.vdp_phi(xh[:, 0], xh[:, 1], self.params.sat_level) \
            + inj[:, 1]
        return out

    def output_batch(self, xh: np.ndarray, u: float) -> np.ndarray:
        return xh[:, 0].copy()

    def linearize(self, xh: np.ndarray, u: float):
        x1, x2 = xh
        raw = -x1 + 0.5 * (1.0 - x1 ** 2) * x2
        if abs(raw) >= self.params.sat_level:
            row = np.zeros(2)
        else:
            row = np.array([-1.0 - x1 * x2, 0.5 * (1.0 - x1 ** 2)])
        a = np.vstack([[0.0, 1.0], row])
        return a, plants.VDP_C.copy()


class BatteryObserverFamily:
    """Equivalent-circuit copy dynamics; output uses the OCV curve slope
    for linearization."""

    n_x = 2

    def __init__(self, params: Optional[plants.BatteryParams] = None):
        self.params = params or plants.BatteryParams()
        self._a = plants.battery_a(self.params)
        self._b = plants.battery_b(self.params)

    def dynamics_batch(self, xh: np.ndarray, u: float, inj: np.ndarray) -> np.ndarray:
        return xh @ self._a.T + u * self._b + inj

    def output_batch(self, xh: np.ndarray, u: float) -> np.ndarray:
        p = self.params
        if p.ocv is None:
            raise plants.OcvCurveMissing("observer output needs the OCV curve")
        return -xh[:, 0] + p.ocv(xh[:, 1]) - p.r_int * u

    def linearize(self, xh: np.ndarray, u: float):
        c = np.array([-1.0, float(self.params.ocv.slope(xh[1]))])
        return self._a, c


class LinearObserverFamily:
    """Generic LTI family, mostly for tests and gain-design toys."""

    def __init__(self, a: np.ndarray, b: np.ndarray, c: np.ndarray):
        self.a = np.atleast_2d(np.asarray(a, dtype=float))
        self.b = np.asarray(b, dtype=float).reshape(self.a.shape[0])
        self.c = np.asarray(c, dtype=float).reshape(self.a.shape[0])
        self.n_x = self.a.shape[0]

    def dynamics_batch(self, xh, u, inj):
        return xh @ self.a.T + u * self.b + inj

    def output_batch(self, xh, u):
        return xh @ self.c

    def linearize(self, xh, u):
        return self.a, self.c.copy()


def observer_family_for(plant) -> object:
    """Copy-dynamics family matching a built-in plant model."""
    if plant.name == "van_der_pol":
        return VdpObserverFamily(plant.params)
    if plant.name == "battery":
        return BatteryObserverFamily(plant.params)
    raise ValueError(f"no observer family registered for plant {plant.name!r}")


def mode_dynamics(family, mode: ObserverMode, xh: np.ndarray, u: float,
                  y: float, internal: Optional[np.ndarray] = None) -> np.ndarray:
    """Single-mode derivative f_o(xhat, u, L (y - yhat)). For an EKF mode the
    packed covariance must be supplied."""
    yh = float(family.output_batch(xh[None, :], u)[0])
    if isinstance(mode.gain, EkfGain):
        _, c_lin = family.linearize(xh, u)
        L = mode.gain.gain(mode.gain.unpack(internal), c_lin)
    else:
        L = mode.gain.L
    inj = L * (y - yh)
    return family.dynamics_batch(xh[None, :], u, inj[None, :])[0]


# ---------------------------------------------------------------------------
# Nominal high-gain design helpers


def high_gain_gain(h: float, d: np.ndarray) -> np.ndarray:
    """Output injection L = diag(h, h^2, ...) D."""
    d = np.asarray(d, dtype=float)
    scales = np.power(float(h), np.arange(1, d.size + 1))
    return scales * d


def place_second_order(eigenvalues) -> np.ndarray:
    """Injection vector D for the chain-of-integrators pair with y = x1.

    A - D C must have the requested eigenvalues; for the 2x2 chain the
    characteristic polynomial is s^2 + d1 s + d2.
    """
    lam = np.asarray(eigenvalues, dtype=complex)
    if lam.size != 2:
        raise ValueError("exactly two eigenvalues expected")
    if np.any(lam.real >= 0):
        raise NotHurwitz(f"eigenvalues {eigenvalues} are not Hurwitz")
    d1 = -(lam[0] + lam[1])
    d2 = lam[0] * lam[1]
    if abs(d1.imag) > 1e-12 or abs(d2.imag) > 1e-12:
        raise ValueError("eigenvalues must be real or a conjugate pair")
    return np.array([d1.real, d2.real])


def solve_lyapunov_2x2(m: np.ndarray) -> np.ndarray:
    """Symmetric P with P M + M' P = -I, via the explicit 3x3 linear system."""
    m11, m12 = m[0]
    m21, m22 = m[1]
    sys = np.array([
        [2.0 * m11, 2.0 * m21, 0.0],
        [m12, m11 + m22, m21],
        [0.0, 2.0 * m12, 2.0 * m22],
    ])
    p11, p12, p22 = np.linalg.solve(sys, np.array([-1.0, 0.0, -1.0]))
    return np.array([[p11, p12], [p12, p22]])


@dataclass
class HighGainCertificate:
    d: np.ndarray
    p: np.ndarray
    lam_max: float
    lam_min: float
    h_star: float
    residual: float
    h1: Optional[float] = None
    satisfied: Optional[bool] = None


def verify_assumption_highgain(eigenvalues, lipschitz_k: float,
                               h1: Optional[float] = None) -> HighGainCertificate:
    """Certificate for the nominal high-gain mode on the 2-d chain form.

    Places D from the eigenvalues, solves the Lyapunov equation for P and
    returns the minimum admissible gain parameter h* = 2 lambda_max(P) K.
    When h1 is given, also reports whether h1 >= h*.
    """
    d = place_second_order(eigenvalues)
    m = plants.VDP_A - np.outer(d, plants.VDP_C)
    p = solve_lyapunov_2x2(m)
    residual = float(np.max(np.abs(p @ m + m.T @ p + np.eye(2))))
    lams = np.linalg.eigvalsh(p)
    lam_min, lam_max = float(lams[0]), float(lams[-1])
    h_star = 2.0 * lam_max * lipschitz_k
    return HighGainCertificate(
        d=d, p=p, lam_max=lam_max, lam_min=lam_min, h_star=h_star,
        residual=residual, h1=h1,
        satisfied=None if h1 is None else bool(h1 >= h_star),
    )


def assumption_iss_constants(lipschitz_k: float, p: np.ndarray):
    """ISS margin pair (delta1, delta2) = (K^2 / lambda_min(P), K^2)."""
    lam_min = float(np.linalg.eigvalsh(p)[0])
    return lipschitz_k ** 2 / lam_min, lipschitz_k ** 2
