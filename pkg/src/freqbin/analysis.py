"""Schmidt decomposition, marginal spectra and frequency-bin detection."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks, resample

from .errors import EmptyReportError, InvalidGridError, UndefinedStateError
from .kernels import diagonal_sums
from .spectral import FrequencyGrid, JointAmplitude

FLAT_PHASE_WARNING = "amplitude recovered from intensity with flat phase; spectral phase discarded"


@dataclass
class SchmidtResult:
    coefficients: np.ndarray
    schmidt_number: float
    purity: float
    modes_retained: int
    warning: Optional[str] = None

    def to_dict(self, max_coefficients: int = 64) -> dict:
        return {
            "schmidt_number": self.schmidt_number,
            "purity": self.purity,
            "modes_retained": self.modes_retained,
            "dimension_proxy": self.schmidt_number**2,
            "coefficients": self.coefficients[:max_coefficients].tolist(),
            "warning": self.warning,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(**kw), indent=2)


def schmidt_decompose(f, threshold: float = 1e-3) -> SchmidtResult:
    """Schmidt coefficients of an amplitude matrix via SVD.

    Modes with coefficient below ``threshold * lambda_1`` are not counted in
    ``modes_retained`` but stay in every sum.
    """
    flat = isinstance(f, JointAmplitude) and f.flat_phase
    m = f.values if isinstance(f, JointAmplitude) else np.asarray(f)
    if not np.all(np.isfinite(m)):
        raise UndefinedStateError("amplitude contains non-finite values")
    if np.iscomplexobj(m) and not np.any(m.imag):
        m = m.real
    s = np.linalg.svd(m, compute_uv=False)
    total = np.sum(s**2)
    if total <= 0:
        raise UndefinedStateError("amplitude is identically zero")
    lam = s**2 / total
    p = float(np.sum(lam**2))
    return SchmidtResult(
        coefficients=lam,
        schmidt_number=1.0 / p,
        purity=p,
        modes_retained=int(np.count_nonzero(lam >= threshold * lam[0])),
        warning=FLAT_PHASE_WARNING if flat else None,
    )


def jsa_from_jsi(jsi, grid: Optional[FrequencyGrid] = None) -> JointAmplitude:
    """Square root of an intensity with zero phase."""
    jsi = np.asarray(jsi, dtype=float)
    if jsi.ndim != 2:
        raise ValueError("JSI must be a 2D array")
    if np.any(jsi < 0):
        raise ValueError("JSI has negative entries")
    if not np.any(jsi > 0):
        raise UndefinedStateError("JSI is identically zero")
    if grid is None:
        na, nb = jsi.shape
        grid = FrequencyGrid(np.arange(na, dtype=float), np.arange(nb, dtype=float), 0.0)
    return JointAmplitude(grid, np.sqrt(jsi).astype(complex), False, flat_phase=True)


def marginals(jsi, grid: FrequencyGrid):
    """Single-photon marginal spectra (row and column integrals)."""
    jsi = np.asarray(jsi, dtype=float)
    if jsi.shape != (grid.n_a, grid.n_b):
        raise InvalidGridError("JSI shape does not match the grid")
    da = grid.omega_a[1] - grid.omega_a[0]
    db = grid.omega_b[1] - grid.omega_b[0]
    return jsi.sum(axis=1) * db, jsi.sum(axis=0) * da


def difference_marginal(jsi, grid: FrequencyGrid):
    """Projection of the JSI onto the half-difference axis nu_- = (nu_a - nu_b)/2.

    Returns ``(axis_hz, density)``. The axis step is half the grid step, and
    the bin modulation of an antisymmetric synthesis has period exactly
    ``1/dt_minus`` on it, independent of the pump bandwidth.
    """
    jsi = np.asarray(jsi, dtype=float)
    if jsi.shape != (grid.n_a, grid.n_b):
        raise InvalidGridError("JSI shape does not match the grid")
    if not grid.is_square():
        raise InvalidGridError("difference projection needs identical axes")
    dw = grid.step
    k = np.arange(-(grid.n_b - 1), grid.n_a)
    axis = k * dw / (4 * math.pi)
    return axis, diagonal_sums(jsi) * dw


# --------------------------------------------------------------------------
# bin detection


@dataclass
class BinReport:
    centers: np.ndarray
    spacing: Optional[float]
    fwhm: np.ndarray
    count: int
    single_peak: bool
    threshold_db: float
    period_estimate: Optional[float] = None
    envelope: np.ndarray = field(default=None, repr=False)
    axis: np.ndarray = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "centers_hz": self.centers.tolist(),
            "spacing_hz": self.spacing,
            "fwhm_hz": [None if not math.isfinite(v) else v for v in self.fwhm.tolist()],
            "count": self.count,
            "single_peak": self.single_peak,
            "threshold_db": self.threshold_db,
            "period_estimate_hz": self.period_estimate,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _odd(n: float) -> int:
    n = max(1, int(round(n)))
    return n if n % 2 else n + 1


def rough_period(x, min_prominence: float = 0.01) -> Optional[float]:
    """Modulation period in samples from the first autocorrelation peak."""
    x = np.asarray(x, dtype=float)
    z = x - x.mean()
    n = len(z)
    spec = np.fft.rfft(z, 2 * n)
    ac = np.fft.irfft(np.abs(spec) ** 2)[: n // 2]
    if ac[0] <= 0:
        return None
    ac = ac / ac[0]
    peaks, props = find_peaks(ac, prominence=min_prominence)
    peaks = peaks[peaks >= 2]
    if len(peaks) == 0:
        return None
    p = int(peaks[0])
    y0, y1, y2 = ac[p - 1], ac[p], ac[p + 1] if p + 1 < len(ac) else ac[p]
    den = y0 - 2 * y1 + y2
    return p + (0.5 * (y0 - y2) / den if den < 0 else 0.0)


def _upsample(x, factor: int):
    if factor <= 1:
        return x.copy()
    n = len(x)
    ext = np.concatenate([x, x[::-1]])
    return resample(ext, 2 * n * factor)[: (n - 1) * factor + 1]


def modulation_phase(x, period):
    """Unwrapped phase of the first modulation harmonic.

    For x = g (1 + V cos phi) with a slowly varying positive envelope g, the
    band around 1/period isolates (V/2) g exp(i phi), so maxima of the
    modulation sit where phi is a multiple of 2 pi whatever the envelope
    slope. Returns phi on the sample positions.
    """
    n = len(x)
    m = 2 * n
    spec = np.fft.fft(x - x.mean(), m)
    f = np.fft.fftfreq(m)
    f0 = 1.0 / period
    u = (f - f0) / (0.5 * f0)
    band = np.where(np.abs(u) < 1, 0.5 * (1 + np.cos(np.pi * u)), 0.0)
    z = np.fft.ifft(spec * band)[:n]
    return np.unwrap(np.angle(z)), np.abs(z)


def _phase_center(phi, q, period):
    """Position near sample q where phi crosses a multiple of 2 pi, or None."""
    n = len(phi)
    i0 = max(0, int(math.floor(q - period / 2)))
    i1 = min(n - 1, int(math.ceil(q + period / 2)))
    seg = phi[i0 : i1 + 1]
    if len(seg) < 3 or np.any(np.diff(seg) <= 0):
        return None
    qi = int(round(q))
    target = 2 * math.pi * round(phi[min(max(qi, 0), n - 1)] / (2 * math.pi))
    if not seg[0] <= target <= seg[-1]:
        return None
    return float(np.interp(target, seg, np.arange(i0, i1 + 1)))


def _parabolic(y, p):
    if p <= 0 or p >= len(y) - 1:
        return float(p)
    y0, y1, y2 = y[p - 1], y[p], y[p + 1]
    den = y0 - 2 * y1 + y2
    if den >= 0:
        return float(p)
    return p + 0.5 * (y0 - y2) / den


def _half_width(x, p, left_stop, right_stop):
    """FWHM (samples) at half of x[p] by linear interpolation, NaN if no crossing."""
    half = x[p] / 2
    seg = x[left_stop : p + 1]
    below = np.nonzero(seg <= half)[0]
    if len(below) == 0:
        return math.nan
    i = left_stop + below[-1]
    xl = i + (x[i] - half) / (x[i] - x[i + 1])
    seg = x[p : right_stop + 1]
    below = np.nonzero(seg <= half)[0]
    if len(below) == 0:
        return math.nan
    j = p + below[0]
    xr = j - (x[j] - half) / (x[j] - x[j - 1])
    return xr - xl


def detect_bins(marginal, axis, threshold_db: float = -10.0) -> BinReport:
    """Find modulation peaks of a marginal spectrum.

    Peaks are local maxima where the smoothed envelope is within
    ``threshold_db`` of its own peak. The envelope is a moving average over
    three modulation periods, the period coming from the autocorrelation.
    Peak centers are refined on a band-limited upsampling of the marginal
    normalized by its one-period running mean, then moved to the nearest
    zero of the modulation phase (see ``modulation_phase``) so that a steep
    envelope does not pull them. Spacing is the median of successive center
    differences.
    """
    x = np.asarray(marginal, dtype=float)
    ax = np.asarray(axis, dtype=float)
    if x.shape != ax.shape or x.ndim != 1 or len(x) < 5:
        raise ValueError("marginal and axis must be 1D arrays of equal length >= 5")
    if np.any(x < 0):
        raise ValueError("marginal must be non-negative")
    if not np.any(x > 0):
        raise EmptyReportError("marginal is identically zero")
    if ax[-1] < ax[0]:
        x, ax = x[::-1], ax[::-1]
    d = np.diff(ax)
    if np.any(d <= 0):
        raise ValueError("axis must be strictly monotonic")
    if np.max(np.abs(d - d.mean())) > 1e-6 * abs(d.mean()):
        uni = np.linspace(ax[0], ax[-1], len(ax))
        x = np.interp(uni, ax, x)
        ax = uni
    step = ax[1] - ax[0]
    thr_lin = 10 ** (threshold_db / 10)

    period = rough_period(x)
    if period is None:
        env = uniform_filter1d(x, _odd(len(x) / 64), mode="nearest")
        peak = _plateau_argmax(env)
        c = _parabolic(env, peak)
        width = _half_width(x, peak, 0, len(x) - 1)
        return BinReport(
            centers=np.array([ax[0] + c * step]),
            spacing=None,
            fwhm=np.array([width * step]),
            count=1,
            single_peak=True,
            threshold_db=threshold_db,
            period_estimate=None,
            envelope=env,
            axis=ax,
        )

    env = uniform_filter1d(x, _odd(3 * period), mode="constant")
    thr = thr_lin * env.max()

    factor = max(1, int(math.ceil(32 / period)))
    xu = np.clip(_upsample(x, factor), 0, None)
    pu = period * factor
    local_mean = uniform_filter1d(xu, _odd(pu), mode="nearest")
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.where(local_mean > 0, xu / local_mean, 0.0)
    cand, _ = find_peaks(y, distance=max(1, int(0.6 * pu)))
    env_at = np.interp(cand / factor, np.arange(len(x)), env)
    keep = cand[(env_at >= thr) & (xu[cand] > 0)]
    if len(keep) == 0:
        raise EmptyReportError("no peaks above the threshold")

    phi, _ = modulation_phase(x, period)
    centers, widths = [], []
    for p in keep:
        c = _phase_center(phi, p / factor, period)
        c = _parabolic(y, int(p)) / factor if c is None else c
        pos = np.searchsorted(cand, p)
        lo = int(cand[pos - 1]) if pos > 0 else 0
        hi = int(cand[pos + 1]) if pos + 1 < len(cand) else len(xu) - 1
        centers.append(ax[0] + c * step)
        widths.append(_half_width(xu, int(p), lo, hi) / factor * step)
    centers = np.array(centers)
    spacing = float(np.median(np.diff(centers))) if len(centers) > 1 else None
    return BinReport(
        centers=centers,
        spacing=spacing,
        fwhm=np.array(widths),
        count=len(centers),
        single_peak=len(centers) == 1,
        threshold_db=threshold_db,
        period_estimate=period * step,
        envelope=env,
        axis=ax,
    )


def _plateau_argmax(x):
    m = x.max()
    idx = np.nonzero(x == m)[0]
    return int(round(idx.mean())) if len(idx) > 1 else int(idx[0])


# --------------------------------------------------------------------------
# single bins


def extract_bin(jsi, grid: FrequencyGrid, center_hz: float, window_hz: float) -> JointAmplitude:
    """Flat-phase amplitude of one bin and its anticorrelated partner.

    The crop is the square ``window_hz`` wide around ``(center, 2 nu0 - center)``
    where ``nu0`` is the degenerate frequency at the grid center.
    """
    jsi = np.asarray(jsi, dtype=float)
    if jsi.shape != (grid.n_a, grid.n_b):
        raise InvalidGridError("JSI shape does not match the grid")
    partner = 2 * grid.center / (2 * math.pi) - center_hz
    half = window_hz / 2
    nu_a, nu_b = grid.nu_a, grid.nu_b
    for c, ax in ((center_hz, nu_a), (partner, nu_b)):
        if c - half < ax[0] or c + half > ax[-1]:
            raise InvalidGridError("bin window extends outside the grid")
    ia = np.nonzero(np.abs(nu_a - center_hz) <= half)[0]
    ib = np.nonzero(np.abs(nu_b - partner) <= half)[0]
    if len(ia) < 2 or len(ib) < 2:
        raise InvalidGridError("bin window holds fewer than two grid points per axis")
    sa = slice(ia[0], ia[-1] + 1)
    sb = slice(ib[0], ib[-1] + 1)
    return jsa_from_jsi(jsi[sa, sb], grid.subgrid(sa, sb))


def modulation_contrast(profile, axis, period: float, n_phase: int = 16) -> float:
    """Valley-to-peak ratio of a profile folded onto one modulation period.

    Samples are averaged per phase bin over the whole profile, so 0 means
    fully resolved bins and 1 means no visible modulation.
    """
    y = np.asarray(profile, dtype=float)
    x = np.asarray(axis, dtype=float)
    if not period > 0:
        raise ValueError("period must be positive")
    ph = np.floor(np.mod(x / period, 1.0) * n_phase).astype(int) % n_phase
    s = np.bincount(ph, weights=y, minlength=n_phase)
    c = np.bincount(ph, minlength=n_phase)
    if np.any(c == 0):
        raise ValueError("profile too coarse for the requested phase bins")
    folded = s / c
    if not folded.max() > 0:
        raise EmptyReportError("profile is empty")
    return float(folded.min() / folded.max())


def expected_bin_count(envelope, axis, spacing, center, threshold_db=-10.0, half_width=math.inf, offset=0.0) -> int:
    """Number of modulation maxima ``center + (k + offset) * spacing`` where an
    unmodulated envelope is within ``threshold_db`` of its peak and which lie
    within ``half_width`` of ``center``."""
    env = np.asarray(envelope, dtype=float)
    ax = np.asarray(axis, dtype=float)
    if not spacing > 0:
        raise ValueError("spacing must be positive")
    reach = min(half_width, max(abs(ax[0] - center), abs(ax[-1] - center)))
    k = np.arange(-int(reach / spacing) - 1, int(reach / spacing) + 2)
    pos = center + (k + offset) * spacing
    inside = (np.abs(pos - center) < half_width) & (pos >= ax[0]) & (pos <= ax[-1])
    level = np.interp(pos, ax, env)
    return int(np.count_nonzero(inside & (level >= 10 ** (threshold_db / 10) * env.max())))
