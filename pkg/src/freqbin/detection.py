"""Monte-Carlo photon pairs, detectors, dispersion and coincidence counting."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import constants as K
from .errors import InvalidGridError, OutOfRangeError
from .kernels import candidate_pairs, deadtime_filter, greedy_select
from .spectral import FrequencyGrid

SIGNAL, IDLER, SYNC = 0, 1, 2
CHANNEL_NAMES = {SIGNAL: "signal", IDLER: "idler", SYNC: "sync"}

# pulses per shard; fixed so that the draw does not depend on the thread count
SHARD_PULSES = 1 << 24
BAND_HALF_WIDTH = 50e-9  # m, validity band of the linear dispersion model


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("FREQBIN_THREADS", "1")))
    except ValueError:
        return 1


def as_seed_sequence(rng) -> np.random.SeedSequence:
    """Accept an int, a SeedSequence or a Generator."""
    if isinstance(rng, np.random.SeedSequence):
        return rng
    if isinstance(rng, np.random.Generator):
        return np.random.SeedSequence(int(rng.integers(0, 2**63)))
    return np.random.SeedSequence(rng)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(as_seed_sequence(rng))


# --------------------------------------------------------------------------
# hardware models


@dataclass(frozen=True)
class DetectorSpec:
    """Single-photon detector: efficiency, Gaussian RMS jitter, darks, dead time."""

    efficiency: float = K.SNSPD_EFFICIENCY
    jitter: float = K.SNSPD_JITTER_FWHM * K.FWHM_TO_SIGMA
    dark_rate: float = K.SNSPD_DARK_RATE
    dead_time: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in [0, 1]")
        if self.jitter < 0 or self.dark_rate < 0 or self.dead_time < 0:
            raise ValueError("jitter, dark rate and dead time must be non-negative")

    @classmethod
    def from_fwhm(cls, efficiency, jitter_fwhm, dark_rate=0.0, dead_time=0.0):
        return cls(efficiency, jitter_fwhm * K.FWHM_TO_SIGMA, dark_rate, dead_time)

    @property
    def jitter_fwhm(self) -> float:
        return self.jitter / K.FWHM_TO_SIGMA


def compose_jitter(*sigmas: float) -> float:
    """Root-sum-square of independent Gaussian jitters."""
    return math.sqrt(sum(s * s for s in sigmas))


@dataclass(frozen=True)
class DispersionSpec:
    """Linear-in-wavelength group delay t = base + D (lambda - lambda_ref).

    ``D`` is in s/m (-895 ps/nm is -0.895 s/m). ``band`` is the half width
    (m) of the wavelength range where the linear model is trusted.
    """

    D: float = K.DCF50_DISPERSION
    lambda_ref: float = K.DCF_LAMBDA_REF
    base_delay: float = 0.0
    band: float = BAND_HALF_WIDTH

    def __post_init__(self):
        if not math.isfinite(self.D):
            raise ValueError("dispersion must be finite")
        if not self.lambda_ref > 0:
            raise ValueError("reference wavelength must be positive")

    @property
    def ps_per_nm(self) -> float:
        return self.D * 1e3

    def scaled(self, factor: float) -> "DispersionSpec":
        return DispersionSpec(self.D * factor, self.lambda_ref, self.base_delay, self.band)


def freq_to_time(d: DispersionSpec, omega):
    """Group delay of light at angular frequency ``omega``."""
    lam = 2 * math.pi * K.C_LIGHT / np.asarray(omega, dtype=float)
    if np.any(np.abs(lam - d.lambda_ref) > d.band):
        raise OutOfRangeError("frequency outside the modeled dispersion band")
    t = d.base_delay + d.D * (lam - d.lambda_ref)
    return t if np.ndim(t) else float(t)


def time_to_freq(d: DispersionSpec, t):
    """Inverse of ``freq_to_time`` (no band check)."""
    if d.D == 0:
        raise ValueError("zero dispersion cannot be inverted")
    lam = d.lambda_ref + (np.asarray(t, dtype=float) - d.base_delay) / d.D
    return 2 * math.pi * K.C_LIGHT / lam


def spectral_resolution(jitter_fwhm: float, d: DispersionSpec) -> float:
    """Wavelength resolution (m) set by the timing jitter."""
    if d.D == 0:
        raise ValueError("zero dispersion has no spectral resolution")
    return jitter_fwhm / abs(d.D)


# --------------------------------------------------------------------------
# events


@dataclass
class EventStream:
    """Time tags of one node. ``origin`` indexes the source pair, -1 for noise."""

    timestamps: np.ndarray
    node: np.ndarray
    channel: np.ndarray
    origin: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.timestamps)
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        self.node = np.broadcast_to(np.asarray(self.node, dtype=np.uint8), (n,)).copy()
        self.channel = np.broadcast_to(np.asarray(self.channel, dtype=np.uint8), (n,)).copy()
        if self.origin is None:
            self.origin = np.full(n, -1, dtype=np.int64)
        self.origin = np.asarray(self.origin, dtype=np.int64)

    def __len__(self):
        return len(self.timestamps)

    @classmethod
    def empty(cls, node=0, channel=SIGNAL):
        return cls(np.empty(0), node, channel, np.empty(0, dtype=np.int64))

    def take(self, idx) -> "EventStream":
        return EventStream(self.timestamps[idx], self.node[idx], self.channel[idx], self.origin[idx])

    def sorted(self) -> "EventStream":
        return self.take(np.argsort(self.timestamps, kind="stable"))

    def select(self, channel) -> "EventStream":
        return self.take(self.channel == channel)

    @staticmethod
    def merge(*streams) -> "EventStream":
        """Concatenate and stable-sort by time."""
        if not streams:
            return EventStream.empty()
        out = EventStream(
            np.concatenate([s.timestamps for s in streams]),
            np.concatenate([s.node for s in streams]),
            np.concatenate([s.channel for s in streams]),
            np.concatenate([s.origin for s in streams]),
        )
        return out.sorted()


@dataclass(frozen=True, eq=False)
class PairSource:
    """Normalized JSI probability table with pair and repetition rates."""

    jsi: np.ndarray
    grid: FrequencyGrid
    pair_rate: float = K.PAIR_RATE
    rep_rate: float = K.REP_RATE
    seed: Optional[int] = None

    def __post_init__(self):
        if self.jsi.shape != (self.grid.n_a, self.grid.n_b):
            raise InvalidGridError("JSI table does not match the grid")
        if not self.pair_rate > 0 or not self.rep_rate > 0:
            raise ValueError("pair and repetition rates must be positive")
        if np.any(self.jsi < 0) or abs(self.jsi.sum() - 1) > 1e-9:
            raise ValueError("JSI table must be non-negative and sum to 1")

    @classmethod
    def from_jsi(cls, jsi, grid, pair_rate=K.PAIR_RATE, rep_rate=K.REP_RATE, seed=None):
        jsi = np.asarray(jsi, dtype=float)
        total = jsi.sum()
        if not total > 0:
            raise ValueError("JSI is identically zero")
        return cls(jsi / total, grid, pair_rate, rep_rate, seed)


@dataclass
class PairDraws:
    emission: np.ndarray
    omega_a: np.ndarray
    omega_b: np.ndarray
    pulse: np.ndarray
    duration: float

    def __len__(self):
        return len(self.emission)


def _draw_shard(cdf, mean_per_pulse, p0, p1, ss):
    rng = np.random.default_rng(ss)
    n = rng.poisson(mean_per_pulse * (p1 - p0))
    pulses = np.sort(rng.integers(p0, p1, size=n))
    cells = np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right")
    return pulses, np.minimum(cells, len(cdf) - 1)


def sample_pair_events(src: PairSource, duration: float, rng=None) -> PairDraws:
    """Draw pairs locked to the pulse train.

    The pair count is Poisson with mean ``pair_rate * duration``; pulses are
    uniform over the ``duration * rep_rate`` pulses in the run, which is the
    same as an independent Poisson count per pulse. Frequencies come from the
    flattened JSI table by inverse CDF. Shards of ``SHARD_PULSES`` pulses get
    child seeds, so the result depends on the seed only.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    ss = as_seed_sequence(src.seed if rng is None else rng)
    n_pulses = max(1, int(math.floor(duration * src.rep_rate)))
    mean = src.pair_rate / src.rep_rate
    cdf = np.cumsum(src.jsi.ravel())
    bounds = list(range(0, n_pulses, SHARD_PULSES)) + [n_pulses]
    children = ss.spawn(len(bounds) - 1)
    jobs = [(cdf, mean, bounds[k], bounds[k + 1], children[k]) for k in range(len(children))]
    threads = min(thread_count(), len(jobs))
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(lambda a: _draw_shard(*a), jobs))
    else:
        parts = [_draw_shard(*a) for a in jobs]
    pulses = np.concatenate([p for p, _ in parts]).astype(np.int64)
    cells = np.concatenate([c for _, c in parts]).astype(np.int64)
    ia, ib = np.divmod(cells, src.grid.n_b)
    return PairDraws(
        emission=pulses / src.rep_rate,
        omega_a=src.grid.omega_a[ia],
        omega_b=src.grid.omega_b[ib],
        pulse=pulses,
        duration=float(duration),
    )


def apply_detector(
    pairs: PairDraws,
    arm: str,
    det: DetectorSpec,
    disp: Optional[DispersionSpec] = None,
    rng=None,
    node: int = 0,
    channel: Optional[int] = None,
    extra_delay: float = 0.0,
) -> EventStream:
    """Detect one photon of each pair.

    ``arm`` is ``'a'`` (signal) or ``'b'`` (idler). Each photon survives with
    probability ``efficiency``; its tag is emission + ``extra_delay`` +
    dispersive delay + Gaussian jitter. Dark counts are uniform over the run.
    A dead-time cut is applied after sorting, then negative tags are dropped.
    """
    if arm not in ("a", "b"):
        raise ValueError("arm must be 'a' or 'b'")
    if channel is None:
        channel = SIGNAL if arm == "a" else IDLER
    gen = as_generator(rng)
    omega = pairs.omega_a if arm == "a" else pairs.omega_b
    n = len(pairs)
    alive = np.nonzero(gen.random(n) < det.efficiency)[0]
    t = pairs.emission[alive] + extra_delay
    if disp is not None and len(alive):
        t = t + freq_to_time(disp, omega[alive])
    if det.jitter > 0:
        t = t + gen.normal(0.0, det.jitter, len(alive))
    n_dark = gen.poisson(det.dark_rate * pairs.duration) if det.dark_rate > 0 else 0
    dark = gen.random(n_dark) * pairs.duration
    times = np.concatenate([t, dark])
    origin = np.concatenate([alive.astype(np.int64), np.full(n_dark, -1, dtype=np.int64)])
    order = np.argsort(times, kind="stable")
    times, origin = times[order], origin[order]
    if det.dead_time > 0 and len(times):
        keep = deadtime_filter(times, det.dead_time)
        times, origin = times[keep], origin[keep]
    ok = times >= 0
    return EventStream(times[ok], node, channel, origin[ok])


# --------------------------------------------------------------------------
# coincidences


@dataclass
class Coincidences:
    index_a: np.ndarray
    index_b: np.ndarray
    delay: np.ndarray  # t_b - t_a - offset

    def __len__(self):
        return len(self.index_a)


def find_coincidences(ta, tb, window: float, offset: float = 0.0) -> Coincidences:
    """One-to-one greedy nearest matching with |t_b - t_a - offset| <= window/2.

    Candidates are visited by increasing |delay|; ties go to the pair whose
    earlier member is earlier, then by index. The rule is symmetric under
    exchanging the two streams (with the offset negated).
    """
    if not window > 0:
        raise ValueError("coincidence window must be positive")
    ta = np.ascontiguousarray(ta, dtype=float)
    tb = np.ascontiguousarray(tb, dtype=float)
    if len(ta) == 0 or len(tb) == 0:
        e = np.empty(0, dtype=np.int64)
        return Coincidences(e, e.copy(), np.empty(0))
    half = window / 2
    ci, cj = candidate_pairs(ta, tb, offset - half, offset + half)
    ci = np.asarray(ci, dtype=np.int64)
    cj = np.asarray(cj, dtype=np.int64)
    if len(ci) == 0:
        return Coincidences(ci, cj, np.empty(0))
    a = ta[ci]
    b = tb[cj] - offset
    d = b - a
    order = np.lexsort((cj, ci, np.maximum(a, b), np.minimum(a, b), np.abs(d))).astype(np.int64)
    keep = np.asarray(greedy_select(order, ci, cj, len(ta), len(tb)), dtype=bool)
    sel = order[keep[order]]
    sel = sel[np.argsort(ci[sel], kind="stable")]
    return Coincidences(ci[sel], cj[sel], d[sel])


@dataclass
class KlyshkoResult:
    singles_a: int
    singles_b: int
    coincidences: int
    klyshko: float
    defined: bool

    def to_dict(self) -> dict:
        return {
            "singles_a": self.singles_a,
            "singles_b": self.singles_b,
            "coincidences": self.coincidences,
            "klyshko": self.klyshko if self.defined else None,
            "defined": self.defined,
        }


def coincidences_and_klyshko(a: EventStream, b: EventStream, window: float = K.COINCIDENCE_WINDOW, offset: float = 0.0):
    """Singles, greedy coincidences and CC / sqrt(s_a s_b)."""
    sa, sb = len(a), len(b)
    if sa == 0 or sb == 0:
        return KlyshkoResult(sa, sb, 0, math.nan, False)
    cc = len(find_coincidences(a.timestamps, b.timestamps, window, offset))
    return KlyshkoResult(sa, sb, cc, cc / math.sqrt(sa * sb), True)


# --------------------------------------------------------------------------
# time-of-flight spectrometer


def pulse_reference(t, sync, period: float, lo: float = 0.0):
    """Time of each tag relative to its pump pulse, folded into [lo, lo + period).

    ``sync`` holds tags of (possibly every k-th) pump pulse; the pulse index
    between sync tags is counted with ``period``.
    """
    sync = np.asarray(sync, dtype=float)
    if len(sync) == 0:
        raise ValueError("sync stream is empty")
    t = np.asarray(t, dtype=float)
    u = t - lo
    idx = np.searchsorted(sync, u, side="right") - 1
    idx = np.clip(idx, 0, len(sync) - 1)
    s = sync[idx]
    m = np.floor((u - s) / period)
    return t - (s + m * period)


def edges_from_axis(axis):
    axis = np.asarray(axis, dtype=float)
    mid = 0.5 * (axis[1:] + axis[:-1])
    return np.concatenate([[axis[0] - (mid[0] - axis[0])], mid, [axis[-1] + (axis[-1] - mid[-1])]])


def tof_reconstruct(
    events_a: EventStream,
    events_b: EventStream,
    sync,
    disp: DispersionSpec,
    grid: FrequencyGrid,
    rep_rate: float = K.REP_RATE,
    window: Optional[float] = None,
    disp_b: Optional[DispersionSpec] = None,
) -> np.ndarray:
    """Rebuild the JSI from dispersed coincidences.

    Pairs are matched within ``window`` centered on the delay difference
    expected at the grid center. The default is two pulse periods: for
    anticorrelated photons sharing one dispersive module the difference
    spans twice the single-photon delay range. Each tag is referenced
    to its pump pulse, the reference window being centered on the delay of
    the grid center, then mapped back to frequency and histogrammed on the
    grid (cells centered on grid points). Returns counts.
    """
    sync = np.asarray(sync.timestamps if isinstance(sync, EventStream) else sync, dtype=float)
    if len(sync) == 0:
        raise ValueError("sync stream is empty")
    period = 1.0 / rep_rate
    disp_b = disp if disp_b is None else disp_b
    if window is None:
        window = 2 * period
    ca = freq_to_time(disp, grid.center)
    cb = freq_to_time(disp_b, grid.center)
    co = find_coincidences(events_a.timestamps, events_b.timestamps, window, offset=cb - ca)
    ta = events_a.timestamps[co.index_a]
    tb = events_b.timestamps[co.index_b]
    ra = pulse_reference(ta, sync, period, ca - period / 2)
    rb = pulse_reference(tb, sync, period, cb - period / 2)
    wa = time_to_freq(disp, ra)
    wb = time_to_freq(disp_b, rb)
    h, _, _ = np.histogram2d(wa, wb, bins=[edges_from_axis(grid.omega_a), edges_from_axis(grid.omega_b)])
    return h


def period_half_width(grid: FrequencyGrid, disp: DispersionSpec, rep_rate: float = K.REP_RATE) -> float:
    """Half width (Hz) of the band around the grid center whose dispersive
    delays fit in one pulse period."""
    nu0 = grid.center / (2 * math.pi)
    lam0 = K.C_LIGHT / nu0
    dlam = 0.5 / (rep_rate * abs(disp.D))
    # delay is linear in wavelength, so the red side is the narrower one in frequency
    return nu0 - K.C_LIGHT / (lam0 + dlam)


def crop_to_band(jsi, grid: FrequencyGrid, half_width_hz: float):
    """Keep the square of cells within ``half_width_hz`` of the degenerate
    frequency on both axes. Returns (jsi, subgrid)."""
    nu0 = grid.center / (2 * math.pi)
    ia = np.nonzero(np.abs(grid.nu_a - nu0) < half_width_hz)[0]
    ib = np.nonzero(np.abs(grid.nu_b - nu0) < half_width_hz)[0]
    if len(ia) < 2 or len(ib) < 2:
        raise InvalidGridError("band narrower than two grid cells")
    sa = slice(ia[0], ia[-1] + 1)
    sb = slice(ib[0], ib[-1] + 1)
    return np.asarray(jsi)[sa, sb], grid.subgrid(sa, sb)
