import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from freqbin import constants as K
from freqbin import io
from freqbin.detection import (
    DetectorSpec,
    DispersionSpec,
    EventStream,
    PairSource,
    apply_detector,
    coincidences_and_klyshko,
    compose_jitter,
    crop_to_band,
    edges_from_axis,
    find_coincidences,
    freq_to_time,
    period_half_width,
    pulse_reference,
    sample_pair_events,
    spectral_resolution,
    time_to_freq,
    tof_reconstruct,
)
from freqbin.errors import OutOfRangeError
from freqbin.spectral import FrequencyGrid

# 130 ps / 895 ps/nm, in nm
RESOLUTION_NM = 0.14525139664804469

IDEAL = DetectorSpec(1.0, 0.0, 0.0)


def omega_of(lam):
    return 2 * math.pi * K.C_LIGHT / lam


@pytest.fixture(scope="module")
def band(f0, grid):
    disp = DispersionSpec(K.DCF50_DISPERSION)
    js, sub = crop_to_band(f0.intensity(), grid, period_half_width(grid, disp) * 0.999)
    return disp, js, sub


def sync_for(duration, every=76_000):
    return np.arange(0, int(duration * K.REP_RATE), every) / K.REP_RATE


# -- dispersion -------------------------------------------------------------


def test_one_nanometre_shift_gives_minus_895_ps():
    d = DispersionSpec(K.DCF50_DISPERSION)
    dt = freq_to_time(d, omega_of(1566e-9)) - freq_to_time(d, omega_of(1565e-9))
    assert dt == pytest.approx(-895e-12, rel=1e-9)
    assert d.ps_per_nm == pytest.approx(-895.0)


def test_reference_wavelength_maps_to_base_delay():
    d = DispersionSpec(K.DCF50_DISPERSION, 1565e-9, base_delay=3.2e-9)
    assert freq_to_time(d, omega_of(1565e-9)) == pytest.approx(3.2e-9, abs=1e-21)


def test_out_of_band_frequency_raises():
    d = DispersionSpec(K.DCF50_DISPERSION)
    with pytest.raises(OutOfRangeError):
        freq_to_time(d, omega_of(1700e-9))


def test_time_to_freq_inverts():
    d = DispersionSpec(K.DCF50_DISPERSION, 1565e-9, 1e-9)
    w = omega_of(np.linspace(1550e-9, 1600e-9, 11))
    assert np.allclose(time_to_freq(d, freq_to_time(d, w)), w, rtol=1e-13)


def test_resolution_from_system_jitter():
    r = spectral_resolution(K.SYSTEM_JITTER_FWHM, DispersionSpec(K.DCF50_DISPERSION))
    assert r * 1e9 == pytest.approx(RESOLUTION_NM, rel=1e-12)
    assert abs(r * 1e9 - 0.14) / 0.14 < 0.05


def test_jitter_composition_is_rss():
    assert compose_jitter(3.0, 4.0) == pytest.approx(5.0)


def test_detector_invariants():
    with pytest.raises(ValueError):
        DetectorSpec(1.2)
    with pytest.raises(ValueError):
        DetectorSpec(0.5, -1e-12)


def test_period_half_width_fits_one_period(grid):
    d = DispersionSpec(K.DCF50_DISPERSION)
    hw = period_half_width(grid, d)
    nu0 = grid.center / (2 * math.pi)
    t = freq_to_time(d, 2 * math.pi * np.array([nu0 - hw, nu0 + hw]))
    span = abs(t[0] - t[1])
    assert span <= K.PULSE_PERIOD * (1 + 1e-12)
    # the narrow (red) side touches half a period exactly
    assert abs(t[0] - freq_to_time(d, grid.center)) == pytest.approx(K.PULSE_PERIOD / 2, rel=1e-12)


# -- pair sampling ------------------------------------------------------------


def test_pair_count_is_poisson(band):
    _, js, sub = band
    src = PairSource.from_jsi(js, sub, pair_rate=0.196e6)
    n = len(sample_pair_events(src, 1.0, 11))
    assert abs(n - 196_000) < 3 * math.sqrt(196_000)


def test_pairs_locked_to_pulses(band):
    _, js, sub = band
    p = sample_pair_events(PairSource.from_jsi(js, sub, pair_rate=1e5), 0.1, 2)
    assert np.allclose(p.emission * K.REP_RATE, p.pulse, atol=1e-6)
    assert np.all(np.diff(p.emission) >= 0)


def test_delta_jsi_draws_one_cell(small_grid):
    jsi = np.zeros((small_grid.n_a, small_grid.n_b))
    jsi[100, 300] = 1.0
    p = sample_pair_events(PairSource.from_jsi(jsi, small_grid, pair_rate=1e5), 0.05, 3)
    assert len(p) > 0
    assert np.all(p.omega_a == small_grid.omega_a[100])
    assert np.all(p.omega_b == small_grid.omega_b[300])


def test_draws_match_table_chi_square():
    axis = np.linspace(-1.0, 1.0, 12) * 1e12 + 1.2e15
    g = FrequencyGrid(axis, axis.copy(), 1.2e15)
    rng = np.random.default_rng(0)
    table = rng.random((12, 12)) + 0.05
    src = PairSource.from_jsi(table, g, pair_rate=1e6, rep_rate=76e6)
    p = sample_pair_events(src, 1.0, 21)
    counts, _, _ = np.histogram2d(p.omega_a, p.omega_b, bins=[edges_from_axis(axis), edges_from_axis(axis)])
    expected = src.jsi * counts.sum()
    assert counts.sum() == pytest.approx(1e6, rel=5e-3)
    _, pval = stats.chisquare(counts.ravel(), expected.ravel())
    assert pval > 1e-3


def test_invalid_source_rejected(small_grid):
    with pytest.raises(ValueError):
        PairSource.from_jsi(np.zeros((small_grid.n_a, small_grid.n_b)), small_grid)
    with pytest.raises(ValueError):
        sample_pair_events(PairSource.from_jsi(np.ones((small_grid.n_a, small_grid.n_b)), small_grid), 0.0)


def test_sampling_does_not_depend_on_thread_count(band, monkeypatch):
    import freqbin.detection as det

    _, js, sub = band
    src = PairSource.from_jsi(js, sub, pair_rate=1e5)
    monkeypatch.setattr(det, "SHARD_PULSES", 1 << 22)
    monkeypatch.setenv("FREQBIN_THREADS", "1")
    a = sample_pair_events(src, 0.2, 4)
    monkeypatch.setenv("FREQBIN_THREADS", "3")
    b = sample_pair_events(src, 0.2, 4)
    assert np.array_equal(a.pulse, b.pulse) and np.array_equal(a.omega_a, b.omega_a)


# -- detector ---------------------------------------------------------------


def test_ideal_detector_reproduces_emission(band):
    _, js, sub = band
    p = sample_pair_events(PairSource.from_jsi(js, sub, pair_rate=1e5), 0.1, 5)
    ev = apply_detector(p, "a", IDEAL, None, 1)
    assert np.array_equal(ev.timestamps, p.emission)
    assert np.array_equal(ev.origin, np.arange(len(p)))


def test_zero_efficiency_leaves_darks(band):
    _, js, sub = band
    p = sample_pair_events(PairSource.from_jsi(js, sub, pair_rate=1e5), 1.0, 5)
    ev = apply_detector(p, "b", DetectorSpec(0.0, 0.0, 1000.0), None, 1)
    assert np.all(ev.origin == -1)
    assert abs(len(ev) - 1000) < 5 * math.sqrt(1000)
    assert np.all((ev.timestamps >= 0) & (ev.timestamps <= 1.0))


def test_efficiency_thins_stream(band):
    _, js, sub = band
    p = sample_pair_events(PairSource.from_jsi(js, sub, pair_rate=1e5), 1.0, 5)
    ev = apply_detector(p, "a", DetectorSpec(0.3, 0.0, 0.0), None, 9)
    assert len(ev) / len(p) == pytest.approx(0.3, abs=5 * math.sqrt(0.21 / len(p)))
    assert np.all(np.diff(ev.timestamps) >= 0)


def test_dead_time_cut(band):
    _, js, sub = band
    p = sample_pair_events(PairSource.from_jsi(js, sub, pair_rate=2e6), 0.05, 5)
    ev = apply_detector(p, "a", DetectorSpec(1.0, 0.0, 0.0, dead_time=50e-9), None, 1)
    assert np.all(np.diff(ev.timestamps) >= 50e-9)
    assert len(ev) < len(p)


def test_event_streams_deterministic(band):
    disp, js, sub = band
    src = PairSource.from_jsi(js, sub, pair_rate=2e5)
    det = DetectorSpec.from_fwhm(0.7, 80e-12, 100.0)

    def run():
        p = sample_pair_events(src, 0.2, 77)
        return io.events_to_records(apply_detector(p, "a", det, disp, 78)).tobytes()

    assert run() == run()


# -- coincidences -----------------------------------------------------------


def test_identical_streams_fully_coincident(rng):
    t = np.sort(rng.random(5000)) * 1e-2
    a = EventStream(t, 0, 0)
    r = coincidences_and_klyshko(a, EventStream(t.copy(), 0, 1), 1e-9)
    assert r.coincidences == r.singles_a == r.singles_b == 5000
    assert r.klyshko == 1.0


def test_empty_stream_is_undefined():
    r = coincidences_and_klyshko(EventStream.empty(), EventStream(np.array([1.0]), 0, 1))
    assert not r.defined and r.coincidences == 0
    assert r.to_dict()["klyshko"] is None


def test_accidentals_match_formula(rng):
    rate, dur, win = 1e6, 1.0, 10e-9
    ta = np.sort(rng.random(rng.poisson(rate * dur))) * dur
    tb = np.sort(rng.random(rng.poisson(rate * dur))) * dur
    cc = len(find_coincidences(ta, tb, win))
    expected = len(ta) * len(tb) * win / dur
    assert abs(cc - expected) < 5 * math.sqrt(expected)


def test_window_is_inclusive_half_width():
    co = find_coincidences(np.array([0.0, 1.0]), np.array([0.5e-9, 1.0 + 0.6e-9]), 1e-9)
    assert co.index_a.tolist() == [0]


def test_greedy_prefers_nearest():
    co = find_coincidences(np.array([0.0, 1.0e-9]), np.array([0.9e-9]), 3e-9)
    assert co.index_a.tolist() == [1] and co.index_b.tolist() == [0]


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.integers(0, 400), min_size=0, max_size=60),
    st.lists(st.integers(0, 400), min_size=0, max_size=60),
    st.integers(1, 30),
    st.integers(-10, 10),
)
def test_coincidences_symmetric(a, b, w, off):
    ta = np.sort(np.array(a, dtype=float))
    tb = np.sort(np.array(b, dtype=float))
    ab = find_coincidences(ta, tb, float(w), float(off))
    ba = find_coincidences(tb, ta, float(w), float(-off))
    assert len(ab) == len(ba)
    assert set(zip(ab.index_a.tolist(), ab.index_b.tolist())) == set(zip(ba.index_b.tolist(), ba.index_a.tolist()))
    assert np.all(np.abs(ab.delay) <= w / 2)
    assert len(set(ab.index_a.tolist())) == len(ab) == len(set(ab.index_b.tolist()))


def test_klyshko_from_quoted_rates():
    # reference singles and coincidence rates
    assert 0.196e6 / 1.970e6 == pytest.approx(0.0995, abs=5e-5)


def test_klyshko_unbiased_over_seeds(band):
    _, js, sub = band
    src = PairSource.from_jsi(js, sub, pair_rate=2e5)
    det = DetectorSpec(0.1, 0.0, 0.0)
    vals = []
    for child in np.random.SeedSequence(99).spawn(20):
        s_p, s_a, s_b = child.spawn(3)
        p = sample_pair_events(src, 1.0, s_p)
        r = coincidences_and_klyshko(apply_detector(p, "a", det, None, s_a), apply_detector(p, "b", det, None, s_b))
        vals.append(r.klyshko)
    vals = np.array(vals)
    sem = vals.std(ddof=1) / math.sqrt(len(vals))
    assert abs(vals.mean() - 0.1) < 2 * sem


# -- time-of-flight reconstruction ------------------------------------------


def test_pulse_reference_folds(rng):
    sync = np.arange(0, 10) * 5 * K.PULSE_PERIOD
    t = rng.random(200) * 45 * K.PULSE_PERIOD
    r = pulse_reference(t, sync, K.PULSE_PERIOD, -2e-9)
    assert np.all((r >= -2e-9) & (r < K.PULSE_PERIOD - 2e-9))
    k = (t - r) / K.PULSE_PERIOD
    assert np.allclose(k, np.round(k), atol=1e-6)


def test_empty_sync_raises(band):
    disp, _, sub = band
    e = EventStream(np.array([1e-9]), 0, 0)
    with pytest.raises(ValueError):
        tof_reconstruct(e, e, np.empty(0), disp, sub)
    with pytest.raises(ValueError):
        pulse_reference(np.array([0.0]), [], K.PULSE_PERIOD)


def test_noiseless_inversion_is_exact(band):
    # low rate so that no pulse carries two pairs
    disp, js, sub = band
    p = sample_pair_events(PairSource.from_jsi(js, sub, pair_rate=2000.0), 2.0, 5)
    assert np.bincount(p.pulse).max() == 1
    ea = apply_detector(p, "a", IDEAL, disp, 1)
    eb = apply_detector(p, "b", IDEAL, disp, 2)
    h = tof_reconstruct(ea, eb, sync_for(2.0), disp, sub)
    truth, _, _ = np.histogram2d(p.omega_a, p.omega_b, bins=[edges_from_axis(sub.omega_a), edges_from_axis(sub.omega_b)])
    assert np.array_equal(h, truth)


def test_noiseless_reconstruction_correlates(band, grid):
    disp, js, sub = band
    p = sample_pair_events(PairSource.from_jsi(js, sub, pair_rate=2e5), 1.0, 6)
    ea = apply_detector(p, "a", IDEAL, disp, 1)
    eb = apply_detector(p, "b", IDEAL, disp, 2)
    axis = np.linspace(sub.omega_a[0], sub.omega_a[-1], 32)
    rg = FrequencyGrid(axis, axis.copy(), grid.center)
    h = tof_reconstruct(ea, eb, sync_for(1.0), disp, rg)
    e = edges_from_axis(axis)
    wa = np.broadcast_to(sub.omega_a[:, None], js.shape).ravel()
    wb = np.broadcast_to(sub.omega_b[None, :], js.shape).ravel()
    analytic, _, _ = np.histogram2d(wa, wb, bins=[e, e], weights=js.ravel())
    assert np.corrcoef(h.ravel(), analytic.ravel())[0, 1] >= 0.999


def _line_width_nm(sigma, disp, sub, seed):
    jsi = np.zeros((sub.n_a, sub.n_b))
    jsi[sub.n_a // 2, sub.n_b // 2] = 1.0
    p = sample_pair_events(PairSource.from_jsi(jsi, sub, pair_rate=1e5), 0.5, seed)
    ev = apply_detector(p, "a", DetectorSpec(1.0, sigma, 0.0), disp, seed + 1)
    ref = pulse_reference(ev.timestamps, sync_for(0.5), K.PULSE_PERIOD, freq_to_time(disp, sub.center) - K.PULSE_PERIOD / 2)
    lam = 2 * math.pi * K.C_LIGHT / time_to_freq(disp, ref)
    return 2 * math.sqrt(2 * math.log(2)) * np.std(lam * 1e9)


def test_resolution_scales_with_jitter(band):
    disp, _, sub = band
    w1 = _line_width_nm(40e-12, disp, sub, 30)
    w2 = _line_width_nm(80e-12, disp, sub, 40)
    assert w2 / w1 == pytest.approx(2.0, rel=0.10)
    assert w1 == pytest.approx(spectral_resolution(40e-12 / K.FWHM_TO_SIGMA, disp) * 1e9, rel=0.10)
