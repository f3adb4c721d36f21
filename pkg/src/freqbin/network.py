"""Two-node distribution: clocks, fiber link, remote detection and folding."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import constants as K
from .analysis import BinReport, detect_bins
from .detection import (
    IDLER,
    SIGNAL,
    SYNC,
    DetectorSpec,
    DispersionSpec,
    EventStream,
    PairSource,
    apply_detector,
    as_seed_sequence,
    find_coincidences,
    pulse_reference,
    sample_pair_events,
    time_to_freq,
)
from .errors import EmptyReportError

LOCAL_NODE, REMOTE_NODE = 0, 1


@dataclass(frozen=True)
class ClockModel:
    """Node clock: t' = t (1 + drift) + offset + N(0, jitter) [+ random walk].

    ``random_walk`` is the diffusion coefficient of an optional correlated
    error in s/sqrt(s).
    """

    offset: float = 0.0
    drift: float = 0.0
    jitter: float = K.SYNC_JITTER
    referenced: bool = True
    random_walk: float = 0.0

    def __post_init__(self):
        if self.jitter < 0 or self.random_walk < 0:
            raise ValueError("clock jitter must be non-negative")

    def apply(self, t, rng) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = t * (1 + self.drift) + self.offset
        if self.jitter > 0:
            out = out + rng.normal(0.0, self.jitter, len(t))
        if self.random_walk > 0 and len(t):
            order = np.argsort(t, kind="stable")
            ts = t[order]
            steps = np.diff(ts, prepend=0.0)
            walk = np.cumsum(rng.normal(0.0, 1.0, len(t)) * self.random_walk * np.sqrt(np.maximum(steps, 0)))
            out[order] += walk
        return out


@dataclass(frozen=True)
class FiberLink:
    length: float = K.LINK_LENGTH  # m
    group_index: float = K.LINK_GROUP_INDEX
    dispersion: float = K.LINK_DISPERSION  # s/m^2 (s per m of wavelength per m)
    loss_db: float = 0.0
    lambda_ref: float = K.LINK_LAMBDA_REF

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("link length must be non-negative")

    @property
    def delay(self) -> float:
        return self.length * self.group_index / K.C_LIGHT

    @property
    def transmission(self) -> float:
        return 10 ** (-self.loss_db / 10)

    def dispersion_spec(self) -> DispersionSpec:
        return DispersionSpec(self.dispersion * self.length, self.lambda_ref, self.delay, band=200e-9)


def simulate_two_node(
    src: PairSource,
    local_det: DetectorSpec,
    local_disp: DispersionSpec,
    remote_det: DetectorSpec,
    link: FiberLink,
    clocks=(ClockModel(), ClockModel()),
    duration: float = 1.0,
    rng=None,
    sync_every: int = 76_000,
):
    """Local node: dispersed signal photons plus pump sync tags every
    ``sync_every`` pulses. Remote node: idler photons after the link, no
    spectral resolution. Returns (local, remote) streams in node time.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    ss = as_seed_sequence(src.seed if rng is None else rng)
    s_pairs, s_loc, s_rem, s_cl, s_cr = ss.spawn(5)
    pairs = sample_pair_events(src, duration, s_pairs)
    sig = apply_detector(pairs, "a", local_det, local_disp, np.random.default_rng(s_loc), LOCAL_NODE, SIGNAL)
    rdet = replace(remote_det, efficiency=remote_det.efficiency * link.transmission)
    idl = apply_detector(
        pairs, "b", rdet, link.dispersion_spec(), np.random.default_rng(s_rem), REMOTE_NODE, IDLER
    )
    n_pulses = int(math.floor(duration * src.rep_rate))
    sync_t = np.arange(0, n_pulses, max(1, int(sync_every))) / src.rep_rate
    sync = EventStream(sync_t, LOCAL_NODE, SYNC)

    cl, cr = clocks
    g_loc = np.random.default_rng(s_cl)
    local = EventStream.merge(sig, sync)
    local.timestamps = cl.apply(local.timestamps, g_loc)
    remote = EventStream(cr.apply(idl.timestamps, np.random.default_rng(s_cr)), idl.node, idl.channel, idl.origin)
    # a node records nothing before its own start
    local = local.take(local.timestamps >= 0).sorted()
    remote = remote.take(remote.timestamps >= 0).sorted()
    return local, remote


# --------------------------------------------------------------------------
# folding


@dataclass
class FoldedHistogram:
    bin_width: float
    period: float
    origin: float  # time (relative to pulse) of the left edge of bin 0
    counts: np.ndarray
    n_coincidences: int = 0
    delay: float = 0.0
    referenced: bool = True

    @property
    def edges(self) -> np.ndarray:
        return self.origin + self.bin_width * np.arange(len(self.counts) + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.origin + self.bin_width * (np.arange(len(self.counts)) + 0.5)

    def to_dict(self) -> dict:
        return {
            "bin_width_s": self.bin_width,
            "period_s": self.period,
            "origin_s": self.origin,
            "n_bins": int(len(self.counts)),
            "n_coincidences": self.n_coincidences,
            "link_delay_s": self.delay,
            "referenced": self.referenced,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def estimate_link_delay(t_local, t_remote, max_lag: float = 100e-6, coarse: float = 1e-9, subset: int = 20000) -> float:
    """Gross remote-minus-local delay from the cross-correlation peak.

    A coarse histogram of remote-local differences within ``max_lag`` picks
    the peak; the median of differences inside +-5 coarse bins refines it.
    """
    ta = np.asarray(t_local, dtype=float)
    tb = np.asarray(t_remote, dtype=float)
    if len(ta) == 0 or len(tb) == 0:
        raise EmptyReportError("cannot estimate delay from an empty stream")
    step = max(1, len(ta) // subset)
    a = ta[::step]
    lo = np.searchsorted(tb, a - max_lag, side="left")
    hi = np.searchsorted(tb, a + max_lag, side="right")
    cnt = hi - lo
    ia = np.repeat(np.arange(len(a)), cnt)
    jb = np.repeat(lo, cnt) + (np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt))
    d = tb[jb] - a[ia]
    if len(d) == 0:
        raise EmptyReportError("no remote events within the lag range")
    nb = int(math.ceil(2 * max_lag / coarse))
    h, edges = np.histogram(d, bins=nb, range=(-max_lag, max_lag))
    k = int(np.argmax(h))
    c = 0.5 * (edges[k] + edges[k + 1])
    near = d[np.abs(d - c) <= 5 * coarse]
    return float(np.median(near))


def fold_and_histogram(
    local: EventStream,
    remote: EventStream,
    rep_rate: float = K.REP_RATE,
    bin_width: float = K.FOLD_BIN_WIDTH,
    window: Optional[float] = None,
    referenced: bool = True,
    center_delay: float = 0.0,
    delay: Optional[float] = None,
) -> FoldedHistogram:
    """Histogram of local (dispersed) arrival times modulo the pulse period,
    conditioned on a remote coincidence.

    ``center_delay`` is the local dispersive delay expected at the band
    center; the fold window is centered on it. With ``referenced`` the local
    tag is taken relative to the pulse train rebuilt from the local sync tags;
    otherwise the remote tag (shifted by the link delay) is the only time
    reference. ``delay`` overrides the cross-correlation estimate.
    """
    if not rep_rate > 0:
        raise ValueError("repetition rate must be positive")
    if not bin_width > 0:
        raise ValueError("bin width must be positive")
    period = 1.0 / rep_rate
    if window is None:
        window = period
    sig = local.select(SIGNAL)
    sync = local.select(SYNC)
    rem = remote.select(IDLER) if np.any(remote.channel == IDLER) else remote
    n_bins = int(math.ceil(period / bin_width - 1e-9))
    origin = center_delay - period / 2
    if len(sig) == 0 or len(rem) == 0:
        return FoldedHistogram(bin_width, period, origin, np.zeros(n_bins, dtype=np.int64), 0, 0.0, referenced)
    if delay is None:
        delay = estimate_link_delay(sig.timestamps, rem.timestamps)
    co = find_coincidences(sig.timestamps, rem.timestamps, window, offset=delay)
    t_loc = sig.timestamps[co.index_a]
    if referenced:
        if len(sync) == 0:
            raise ValueError("referenced folding needs sync tags in the local stream")
        x = pulse_reference(t_loc, sync.timestamps, period, origin)
    else:
        t_rem = rem.timestamps[co.index_b]
        x = t_loc - t_rem + delay + center_delay
        x = origin + np.mod(x - origin, period)
    idx = np.clip(np.floor((x - origin) / bin_width).astype(np.int64), 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    return FoldedHistogram(bin_width, period, origin, counts, len(co), float(delay), referenced)


def folded_spectrum(h: FoldedHistogram, disp: DispersionSpec):
    """Counts on a uniform frequency axis (Hz, ascending) from the time bins."""
    nu = time_to_freq(disp, h.centers) / (2 * math.pi)
    order = np.argsort(nu)
    nu = nu[order]
    counts = h.counts[order].astype(float)
    axis = np.linspace(nu[0], nu[-1], len(nu))
    return axis, np.interp(axis, nu, counts)


def resolve_report(h: FoldedHistogram, disp: DispersionSpec, threshold_db: float = -10.0) -> BinReport:
    """Map the folded histogram to frequency and detect bins."""
    if h.counts.sum() == 0:
        raise EmptyReportError("folded histogram is empty")
    axis, y = folded_spectrum(h, disp)
    return detect_bins(y, axis, threshold_db)
