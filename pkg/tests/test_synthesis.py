import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqbin import constants as K
from freqbin.analysis import detect_bins, difference_marginal
from freqbin.errors import InvalidGridError
from freqbin.kernels import diagonal_sums
from freqbin.pipelines import ridge_positions
from freqbin.spectral import FrequencyGrid, JointAmplitude, build_frequency_grid
from freqbin.synthesis import (
    StageGeometry,
    SynthesisConfig,
    apply_bidirectional,
    config_from_geometry,
    displacement_to_delays,
    interference_factor,
    jsi_from_amplitude,
    jta_transform,
    phase_from_path,
    resolve_delays,
)

# 4 * d / c for d = 100 um and 500 um, evaluated with mpmath
DT_100UM = 1.3342563807926081983e-12
DT_500UM = 6.6712819039630409915e-12


def test_displacement_examples():
    _, _, dt = displacement_to_delays(StageGeometry(100e-6, -100e-6))
    assert dt == pytest.approx(DT_100UM, rel=1e-15)
    assert round(dt * 1e12, 2) == 1.33
    _, _, dt = displacement_to_delays(StageGeometry(500e-6, -500e-6))
    assert dt == pytest.approx(DT_500UM, rel=1e-15)
    assert round(dt * 1e12, 2) == 6.67
    assert displacement_to_delays(StageGeometry()) == (0.0, 0.0, 0.0)


def test_path_multiplier_is_fixed():
    with pytest.raises(ValueError):
        StageGeometry(path_multiplier=1.0)


def test_phase_from_path():
    assert phase_from_path(StageGeometry(d3=K.PUMP_WAVELENGTH / 4)) == pytest.approx(math.pi, rel=1e-15)
    assert phase_from_path(StageGeometry(d3=200e-9)) / math.pi == pytest.approx(400 / 396, rel=1e-12)
    assert phase_from_path(StageGeometry(d3=0.0)) == 0.0
    assert phase_from_path(StageGeometry(d3=K.PUMP_WAVELENGTH / 2)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        phase_from_path(StageGeometry(d3=1e-7), pump_wavelength=0.0)


def test_config_invariants():
    with pytest.raises(ValueError):
        SynthesisConfig(dt_h=2 * K.PULSE_PERIOD)
    assert SynthesisConfig(phase=-math.pi / 2).phase == pytest.approx(1.5 * math.pi)
    assert SynthesisConfig(phase=2 * math.pi).phase == 0.0
    c = config_from_geometry(StageGeometry(100e-6, -100e-6, K.PUMP_WAVELENGTH / 4))
    assert c.dt_minus == pytest.approx(DT_100UM)
    assert c.phase == pytest.approx(math.pi)


def test_direct_delays_win_over_geometry():
    with pytest.warns(UserWarning):
        assert resolve_delays((1e-12, -1e-12), StageGeometry(1e-3, 0)) == (1e-12, -1e-12)


def test_constructive_and_destructive_origin(small_f0):
    up = apply_bidirectional(small_f0, SynthesisConfig(0.0, 0.0, 0.0))
    np.testing.assert_allclose(up.values, 2 * small_f0.values, rtol=1e-15)
    assert not up.normalized
    down = apply_bidirectional(small_f0, SynthesisConfig(0.0, 0.0, math.pi))
    assert np.max(np.abs(down.values)) <= 1e-15 * np.max(np.abs(small_f0.values))


def test_jsi_cosine_law(small_f0, small_grid):
    dt_h = 0.667e-12
    j = jsi_from_amplitude(apply_bidirectional(small_f0, SynthesisConfig(dt_h, -dt_h, 0.0)))
    wa = small_grid.omega_a[:, None]
    wb = small_grid.omega_b[None, :]
    expect = 2 * np.abs(small_f0.values) ** 2 * (1 + np.cos((wa - wb) * dt_h))
    np.testing.assert_allclose(j, expect, rtol=1e-9, atol=1e-12 * j.max())


def test_jsi_extremes():
    dt_h = 5e-12
    w0 = K.degenerate_omega()
    step = math.pi / dt_h / 8  # grid points land on maxima and zeros
    g = FrequencyGrid(w0 + step * np.arange(-32, 33), w0 + step * np.arange(-32, 33), w0)
    f = JointAmplitude(g, np.ones((65, 65), complex))
    j = jsi_from_amplitude(apply_bidirectional(f, SynthesisConfig(dt_h, -dt_h, 0.0)))
    k = np.arange(-32, 33)
    d = k[:, None] - k[None, :]  # (wa - wb) dt_h = d * pi / 8
    np.testing.assert_allclose(j[d % 16 == 0], 4.0, rtol=1e-12)
    np.testing.assert_allclose(j[d % 16 == 8], 0.0, atol=1e-12)


def test_jsi_of_real_amplitude():
    g = build_frequency_grid(1.0, 1.0, 8)
    v = np.arange(64, dtype=float).reshape(8, 8)
    assert np.array_equal(jsi_from_amplitude(JointAmplitude(g, v.astype(complex))), v**2)


def test_750_ghz_modulation(f0, grid):
    syn = SynthesisConfig.antisymmetric(2 * 0.667e-12)
    ax, m = difference_marginal(jsi_from_amplitude(apply_bidirectional(f0, syn)), grid)
    r = detect_bins(m, ax)
    assert r.spacing == pytest.approx(1 / (2 * 0.667e-12), rel=0.01)


def test_jta_round_trip(small_f0):
    f = apply_bidirectional(small_f0, SynthesisConfig.antisymmetric(10e-12, 0.3))
    t = jta_transform(f, "to_time")
    back = jta_transform(t, "to_frequency")
    rms = np.sqrt(np.mean(np.abs(back.values - f.values) ** 2) / np.mean(np.abs(f.values) ** 2))
    assert rms < 1e-9
    assert t.norm() == pytest.approx(f.norm(), rel=1e-6)
    assert t.step == pytest.approx(2 * math.pi / (small_f0.grid.n_a * small_f0.grid.step))


def _ridges(f):
    t = jta_transform(f, "to_time")
    proj = diagonal_sums(np.abs(t.values) ** 2)
    n = len(t.t_a)
    tm = np.arange(-(n - 1), n) * t.step
    return ridge_positions(proj, tm), proj, t


def test_jta_two_ridges(f0):
    r, _, _ = _ridges(apply_bidirectional(f0, SynthesisConfig.antisymmetric(10e-12)))
    assert len(r) == 2
    assert np.ptp(r) == pytest.approx(10e-12, rel=1e-3)


def test_jta_single_ridge_doubled(f0):
    r0, p0, t0 = _ridges(f0)
    r1, p1, t1 = _ridges(apply_bidirectional(f0, SynthesisConfig()))
    assert len(r1) == 1
    np.testing.assert_allclose(t1.values, 2 * t0.values, rtol=1e-12, atol=1e-15 * np.abs(t0.values).max())


def test_jta_analytic_shift():
    # a Gaussian JSA has a Gaussian JTA; the delayed copy is the same Gaussian shifted
    w0 = K.degenerate_omega()
    g = build_frequency_grid(w0, 2 * math.pi * 8e12, 256)
    s = 2 * math.pi * 0.5e12
    v = np.exp(-((g.omega_a[:, None] - w0) ** 2 + (g.omega_b[None, :] - w0) ** 2) / (2 * s**2))
    f = JointAmplitude(g, v.astype(complex))
    t0 = jta_transform(f, "to_time")
    # whole number of time steps, so the shifted copy lands on the grid
    ia = int(round(1e-12 / t0.step))
    dt = ia * t0.step
    t1 = jta_transform(apply_bidirectional(f, SynthesisConfig(dt, -dt, 0.0)), "to_time")
    shifted = np.roll(np.roll(t0.values, ia, 0), -ia, 1)
    np.testing.assert_allclose(t1.values, t0.values + shifted, atol=1e-9 * np.abs(t0.values).max())


def test_jta_nonuniform_grid_rejected():
    ax = np.array([0.0, 1.0, 2.0, 3.5, 4.0, 5.0, 6.0, 7.0])
    f = JointAmplitude(FrequencyGrid(ax, ax, 3.5), np.ones((8, 8), complex))
    with pytest.raises(InvalidGridError):
        jta_transform(f, "to_time")
    with pytest.raises(ValueError):
        jta_transform(f, "sideways")


def test_total_intensity_doubles_for_long_delay(f0):
    j = jsi_from_amplitude(apply_bidirectional(f0, SynthesisConfig.antisymmetric(40e-12, 1.0)))
    assert j.sum() / np.abs(f0.values).__pow__(2).sum() == pytest.approx(2.0, rel=0.02)


@settings(max_examples=25, deadline=None)
@given(
    st.floats(-20e-12, 20e-12),
    st.floats(-20e-12, 20e-12),
    st.floats(0, 2 * math.pi),
    st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False, allow_infinity=False),
)
def test_linear_in_amplitude(dt_h, dt_v, phi, c):
    g = build_frequency_grid(K.degenerate_omega(), 2 * math.pi * 4e12, 32)
    rng = np.random.default_rng(0)
    v = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
    syn = SynthesisConfig(dt_h, dt_v, phi)
    a = apply_bidirectional(JointAmplitude(g, c * v), syn).values
    b = apply_bidirectional(JointAmplitude(g, v), syn).values
    np.testing.assert_allclose(a, c * b, rtol=1e-12, atol=1e-12)
    ja = jsi_from_amplitude(JointAmplitude(g, a))
    jb = jsi_from_amplitude(JointAmplitude(g, b))
    np.testing.assert_allclose(ja, abs(c) ** 2 * jb, rtol=1e-10, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(2, 12))
def test_phase_flip_swaps_maxima_and_minima(m, sub):
    # grid step chosen so that a half period of the cosine is a whole number of steps
    dt_h = m * 1e-12
    w0 = K.degenerate_omega()
    step = math.pi / dt_h / sub
    ax = w0 + step * np.arange(-40, 41)
    g = FrequencyGrid(ax, ax.copy(), w0)
    h0 = interference_factor(g, SynthesisConfig(dt_h, -dt_h, 0.0))
    hp = interference_factor(g, SynthesisConfig(dt_h, -dt_h, math.pi))
    j0, jp = np.abs(h0) ** 2, np.abs(hp) ** 2
    # shifting wa by half a period (sub steps) maps the phi=0 pattern onto phi=pi
    np.testing.assert_allclose(jp[sub:, :], j0[:-sub, :], rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(j0 + jp, 4.0, rtol=1e-9)
