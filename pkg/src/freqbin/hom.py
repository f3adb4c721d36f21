"""Hong-Ou-Mandel interference of a biphoton amplitude.

Coincidence probability at relative delay tau::

    P(tau) = 1/2 [1 - Re sum f(wa, wb) f*(wb, wa) exp(-i (wa - wb) tau) / sum |f|^2]

The sum over the grid collapses onto the diagonals wa - wb = k dw, so the
amplitude product is summed once per diagonal and each delay costs O(n).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.signal import find_peaks

from .errors import FringeError, InvalidGridError, NotNormalizedError
from .kernels import diagonal_sums
from .spectral import JointAmplitude

_NORM_TOL = 1e-6


@dataclass
class HomCurve:
    delays: np.ndarray
    probability: np.ndarray
    visibility: Optional[float] = None
    fringe_period: Optional[float] = None
    central: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "visibility": self.visibility,
            "fringe_period_s": self.fringe_period,
            "central_extremum": self.central,
            "n_points": int(len(self.delays)),
            "delay_min_s": float(self.delays[0]),
            "delay_max_s": float(self.delays[-1]),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def exchange_overlap_terms(f: JointAmplitude):
    """Diagonal sums of f(wa, wb) f*(wb, wa) and their frequency offsets (rad/s)."""
    grid = f.grid
    if not grid.is_square() or not grid.is_uniform():
        raise InvalidGridError("HOM needs identical uniform axes for both photons")
    prod = f.values * np.conj(f.values.T)
    g = diagonal_sums(np.ascontiguousarray(prod))
    n = grid.n_b
    omega = (np.arange(len(g)) - (n - 1)) * grid.step
    return g, omega


def _delay_axis(tau_range, n_points):
    if n_points < 2:
        raise ValueError("need at least two delay points")
    if np.ndim(tau_range) == 0:
        half = float(tau_range)
        if not half > 0:
            raise ValueError("delay half range must be positive")
        return np.linspace(-half, half, n_points)
    lo, hi = (float(v) for v in tau_range)
    if not hi > lo:
        raise ValueError("delay range must be increasing")
    return np.linspace(lo, hi, n_points)


def hom_curve(f: JointAmplitude, tau_range, n_points: int = 2001, tau_offset: float = 0.0, chunk: int = 256) -> HomCurve:
    """Coincidence probability over delays.

    ``tau_range`` is either a half width (symmetric range) or ``(lo, hi)``.
    ``tau_offset`` shifts the delay origin: P is evaluated at
    ``tau + tau_offset``. For the synthesized state the central fringe sits
    where ``tau + tau_offset = -(dt_h - dt_v)/2``, so passing
    ``tau_offset=-(dt_h - dt_v)/2`` centers it at zero delay.
    """
    norm = f.norm()
    if abs(norm - 1) > _NORM_TOL:
        raise NotNormalizedError(f"amplitude norm is {norm:.6g}, expected 1")
    tau = _delay_axis(tau_range, n_points)
    g, omega = exchange_overlap_terms(f)
    total = np.sum(np.abs(f.values) ** 2)
    keep = np.abs(g) > 1e-15 * np.max(np.abs(g))
    g, omega = g[keep], omega[keep]
    out = np.empty(len(tau))
    for s in range(0, len(tau), chunk):
        t = tau[s : s + chunk] + tau_offset
        phase = np.exp(-1j * np.outer(t, omega))
        out[s : s + chunk] = 0.5 * (1 - (phase @ g).real / total)
    curve = HomCurve(tau, np.clip(out, 0.0, 1.0))
    try:
        curve.fringe_period, curve.visibility, curve.central = fringe_metrics(curve)
    except FringeError:
        pass
    return curve


def _edge_baseline(p, frac=0.1):
    k = max(1, int(len(p) * frac))
    return float(np.mean(np.concatenate([p[:k], p[-k:]])))


def fringe_metrics(curve: HomCurve, min_samples_per_period: int = 8):
    """Return (period, visibility, 'dip' | 'peak') of the central feature.

    The period is the lowest-frequency strong component of |P - median(P)|.
    Taking the modulus makes an inverted central fringe (dip, peak, dip) read
    the same period as an upright one (dip, dip, dip). Only periods up to half
    the scanned range are considered.
    """
    tau = np.asarray(curve.delays, dtype=float)
    p = np.asarray(curve.probability, dtype=float)
    if len(p) < 16:
        raise FringeError("curve too short for fringe analysis")
    if np.ptp(p) < 1e-9:
        raise FringeError("curve has no fringe")
    dt = tau[1] - tau[0]
    a = np.abs(p - np.median(p))
    m = 8 * len(a)
    spec = np.abs(np.fft.rfft(a, m))
    freqs = np.fft.rfftfreq(m, dt)
    # at least two periods must fit in the scanned range
    lo = int(math.ceil(2 * m / (len(a) - 1)))
    s = spec[lo:]
    peaks, _ = find_peaks(s, height=0.5 * s.max())
    if len(peaks) == 0:
        raise FringeError("no dominant fringe frequency")
    k = int(peaks[0]) + lo
    y0, y1, y2 = spec[k - 1], spec[k], spec[k + 1]
    den = y0 - 2 * y1 + y2
    shift = 0.5 * (y0 - y2) / den if den < 0 else 0.0
    freq = freqs[k] + shift * (freqs[1] - freqs[0])
    period = 1.0 / freq
    if period < min_samples_per_period * dt:
        raise FringeError(f"curve undersampled: {period / dt:.2f} samples per period")
    p_far = _edge_baseline(p)
    ic = int(np.argmin(np.abs(tau)))
    p_c = p[ic]
    vis = abs(p_far - p_c) / p_far if p_far > 0 else math.nan
    return float(period), float(vis), "dip" if p_c < p_far else "peak"
