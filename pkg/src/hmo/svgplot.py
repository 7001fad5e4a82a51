"""Line-chart SVG rendering for run traces.

Three stacked panels sharing the time axis: estimation error norms on a log
scale, the integrated monitor costs, and the active-mode staircase. The CSV
trace is the canonical record; these figures exist for a quick visual check,
so the layout is fixed and there are no styling knobs.
"""

import math

import numpy as np

__all__ = ["run_figure", "write_run_svg"]

# Fixed layout in user units (px).
_W = 880
_X0 = 66
_PW = _W - _X0 - 18
_PANEL_H = (218, 218, 110)
_PANEL_Y = (30, 298, 566)
_H = _PANEL_Y[-1] + _PANEL_H[-1] + 46

_COL_A = "#1f6fb5"
_COL_B = "#d95f02"
_GRID = "#d8d8d8"
_AXIS = "#444444"

_MAX_BUCKETS = 999   # min/max pairs, keeps every polyline under 2000 points


def _fmt(v: float) -> str:
    s = f"{v:g}"
    return "0" if s == "-0" else s


def _nice_ticks(lo: float, hi: float, target: int = 5):
    """Round tick positions covering [lo, hi]."""
    if not hi > lo:
        hi = lo + 1.0
    span = hi - lo
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-9 * span:
        ticks.append(0.0 if abs(v) < 1e-12 * span else v)
        v += step
    return ticks


def _decade_ticks(lo: float, hi: float):
    lo_e = math.ceil(math.log10(lo) - 1e-9)
    hi_e = math.floor(math.log10(hi) + 1e-9)
    step = max(1, (hi_e - lo_e) // 8 + 1)
    return [10.0 ** e for e in range(lo_e, hi_e + 1, step)]


def _decimate(t: np.ndarray, y: np.ndarray, buckets: int = _MAX_BUCKETS):
    """Min/max per bucket, order preserved; keeps envelopes visible."""
    n = t.size
    if n <= 2 * buckets:
        return t, y
    edges = np.linspace(0, n, buckets + 1).astype(int)
    ti, yi = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if a == b:
            continue
        seg = y[a:b]
        i_min = a + int(np.argmin(seg))
        i_max = a + int(np.argmax(seg))
        for i in sorted((i_min, i_max)):
            ti.append(t[i])
            yi.append(y[i])
    return np.asarray(ti), np.asarray(yi)


class _Panel:
    """Maps data coordinates onto one plot rectangle."""

    def __init__(self, y0, h, t_lo, t_hi, v_lo, v_hi, log_y=False):
        self.y0, self.h = y0, h
        self.t_lo, self.t_hi = t_lo, t_hi
        self.log_y = log_y
        if log_y:
            self.v_lo, self.v_hi = math.log10(v_lo), math.log10(v_hi)
        else:
            self.v_lo, self.v_hi = v_lo, v_hi

    def px(self, t):
        f = (t - self.t_lo) / (self.t_hi - self.t_lo)
        return _X0 + f * _PW

    def py(self, v):
        if self.log_y:
            v = math.log10(max(v, 10.0 ** self.v_lo))
        v = min(max(v, self.v_lo), self.v_hi)
        f = (v - self.v_lo) / (self.v_hi - self.v_lo)
        return self.y0 + self.h * (1.0 - f)

    def polyline(self, t, y, color, width=1.2):
        pts = " ".join(f"{self.px(a):.1f},{self.py(b):.1f}"
                       for a, b in zip(t, y))
        return (f'<polyline fill="none" stroke="{color}" '
                f'stroke-width="{width}" points="{pts}"/>')

    def frame(self, y_ticks, y_fmt=_fmt, x_labels=False, x_ticks=()):
        out = [f'<rect x="{_X0}" y="{self.y0}" width="{_PW}" '
               f'height="{self.h}" fill="none" stroke="{_AXIS}"/>']
        for v in y_ticks:
            yy = self.py(v)
            out.append(f'<line x1="{_X0}" y1="{yy:.1f}" x2="{_X0 + _PW}" '
                       f'y2="{yy:.1f}" stroke="{_GRID}"/>')
            out.append(f'<text x="{_X0 - 6}" y="{yy + 3.5:.1f}" '
                       f'text-anchor="end" font-size="11">{y_fmt(v)}</text>')
        for v in x_ticks:
            xx = self.px(v)
            out.append(f'<line x1="{xx:.1f}" y1="{self.y0}" x2="{xx:.1f}" '
                       f'y2="{self.y0 + self.h}" stroke="{_GRID}"/>')
            if x_labels:
                out.append(f'<text x="{xx:.1f}" y="{self.y0 + self.h + 16}" '
                           f'text-anchor="middle" font-size="11">'
                           f'{_fmt(v)}</text>')
        return out

    def legend(self, entries):
        out = []
        x = _X0 + _PW - 10
        for label, color in reversed(entries):
            w = 8 + 7 * len(label)
            x -= w + 26
            yy = self.y0 + 14
            out.append(f'<line x1="{x}" y1="{yy}" x2="{x + 20}" y2="{yy}" '
                       f'stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{x + 25}" y="{yy + 4}" font-size="11">'
                       f'{label}</text>')
        return out


def _log_fmt(v: float) -> str:
    e = round(math.log10(v))
    return f"1e{e:d}" if abs(e) > 3 else _fmt(v)


def _sigma_steps(t: np.ndarray, sigma: np.ndarray):
    """Staircase vertices: one pair per mode change."""
    ts = [float(t[0])]
    ss = [int(sigma[0])]
    for i in range(1, t.size):
        if sigma[i] != ss[-1]:
            ts.extend((float(t[i]), float(t[i])))
            ss.extend((ss[-1], int(sigma[i])))
    ts.append(float(t[-1]))
    ss.append(ss[-1])
    return np.asarray(ts), np.asarray(ss, dtype=float)


def run_figure(t, sigma, abs_e1, abs_e_sigma, j1, j_sigma,
               title: str = "") -> str:
    """Render the three-panel run summary; returns the SVG document text."""
    t = np.asarray(t, dtype=float)
    t_lo, t_hi = float(t[0]), float(t[-1])
    if not t_hi > t_lo:
        t_hi = t_lo + 1.0
    x_ticks = _nice_ticks(t_lo, t_hi, 8)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{_X0}" y="18" font-size="13" '
                     f'font-weight="bold">{title}</text>')

    # error norms, log scale
    e_all = np.concatenate([np.asarray(abs_e1), np.asarray(abs_e_sigma)])
    hi = float(np.max(e_all)) if e_all.size else 1.0
    if hi <= 0.0:
        hi = 1.0
    pos = e_all[e_all > 0.0]
    lo = float(np.min(pos)) if pos.size else hi * 1e-6
    lo = max(lo, hi * 1e-12)
    hi_e = 10.0 ** math.ceil(math.log10(hi) + 1e-9)
    lo_e = 10.0 ** math.floor(math.log10(lo))
    p = _Panel(_PANEL_Y[0], _PANEL_H[0], t_lo, t_hi, lo_e, hi_e, log_y=True)
    parts += p.frame(_decade_ticks(lo_e, hi_e), _log_fmt, x_ticks=x_ticks)
    parts.append(p.polyline(*_decimate(t, np.asarray(abs_e1)), _COL_A))
    parts.append(p.polyline(*_decimate(t, np.asarray(abs_e_sigma)), _COL_B))
    parts += p.legend([("|e_1|", _COL_A), ("|e_sigma|", _COL_B)])
    parts.append(f'<text x="{_X0}" y="{_PANEL_Y[0] - 8}" font-size="12">'
                 f'estimation error (log)</text>')

    # integrated monitor costs
    j_hi = float(max(np.max(j1), np.max(j_sigma), 1e-12)) * 1.05
    p = _Panel(_PANEL_Y[1], _PANEL_H[1], t_lo, t_hi, 0.0, j_hi)
    parts += p.frame(_nice_ticks(0.0, j_hi), x_ticks=x_ticks)
    parts.append(p.polyline(*_decimate(t, np.asarray(j1)), _COL_A))
    parts.append(p.polyline(*_decimate(t, np.asarray(j_sigma)), _COL_B))
    parts += p.legend([("J_1", _COL_A), ("J_sigma", _COL_B)])
    parts.append(f'<text x="{_X0}" y="{_PANEL_Y[1] - 8}" font-size="12">'
                 f'integrated monitor cost</text>')

    # active mode staircase
    sig = np.asarray(sigma)
    m_hi = float(np.max(sig)) + 0.5
    p = _Panel(_PANEL_Y[2], _PANEL_H[2], t_lo, t_hi, 0.5, m_hi)
    modes = list(range(1, int(np.max(sig)) + 1))
    parts += p.frame(modes, lambda v: f"{int(v)}", x_labels=True,
                     x_ticks=x_ticks)
    parts.append(p.polyline(*_sigma_steps(t, sig), "#222222", width=1.6))
    parts.append(f'<text x="{_X0}" y="{_PANEL_Y[2] - 8}" font-size="12">'
                 f'active mode sigma</text>')
    parts.append(f'<text x="{_X0 + _PW / 2:.0f}" y="{_H - 12}" '
                 f'text-anchor="middle" font-size="12">t [s]</text>')

    parts.append("</svg>")
    return "\n".join(parts)


def write_run_svg(path, t, sigma, abs_e1, abs_e_sigma, j1, j_sigma,
                  title: str = "") -> None:
    svg = run_figure(t, sigma, abs_e1, abs_e_sigma, j1, j_sigma, title)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg)
