"""Bidirectional-pump synthesis and joint spectral/temporal transforms.

Fourier convention (both axes, continuous form)::

    F(ta, tb) = 1/(2 pi) * integral exp(+i wa ta + i wb tb) f(wa, wb) dwa dwb
    f(wa, wb) = 1/(2 pi) * integral exp(-i wa ta - i wb tb) F(ta, tb) dta dtb

The discrete version uses a time axis with step 2 pi / (n dw) and t=0 at
index n//2, so the pair is exactly unitary on the grid.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import constants as K
from .errors import InvalidGridError
from .spectral import FrequencyGrid, JointAmplitude


@dataclass(frozen=True)
class SynthesisConfig:
    """Per-polarization delays of the second pass and the relative phase.

    The phase is stored reduced to [0, 2 pi).
    """

    dt_h: float = 0.0
    dt_v: float = 0.0
    phase: float = 0.0
    pump_wavelength: float = K.PUMP_WAVELENGTH

    def __post_init__(self):
        for name in ("dt_h", "dt_v"):
            if abs(getattr(self, name)) > K.PULSE_PERIOD:
                raise ValueError(f"|{name}| exceeds the pump pulse period")
        object.__setattr__(self, "phase", float(self.phase) % (2 * math.pi))

    @classmethod
    def antisymmetric(cls, dt_minus: float, phase: float = 0.0, **kw):
        """Delays of equal size and opposite sign, dt_h - dt_v = dt_minus."""
        return cls(dt_minus / 2, -dt_minus / 2, phase, **kw)

    @property
    def dt_minus(self) -> float:
        return self.dt_h - self.dt_v

    @property
    def bin_spacing(self) -> float:
        """Marginal bin spacing 1/dt_minus in Hz (inf at zero delay)."""
        return math.inf if self.dt_minus == 0 else 1.0 / abs(self.dt_minus)


@dataclass(frozen=True)
class StageGeometry:
    """Mirror displacements from the temporal origin (m).

    Reflection doubles the optical path, so each delay is
    ``path_multiplier * d / c``.
    """

    d1: float = 0.0
    d2: float = 0.0
    d3: float = 0.0
    path_multiplier: float = 2.0

    def __post_init__(self):
        if self.path_multiplier != 2.0:
            raise ValueError("path multiplier is fixed at 2 (reflection)")


def displacement_to_delays(g: StageGeometry, c_light: float = K.C_LIGHT):
    """Return (dt_h, dt_v, dt_minus) for the given stage displacements."""
    dt_h = g.path_multiplier * g.d1 / c_light
    dt_v = g.path_multiplier * g.d2 / c_light
    return dt_h, dt_v, dt_h - dt_v


def phase_from_path(g: StageGeometry, pump_wavelength: float = K.PUMP_WAVELENGTH) -> float:
    """Relative phase from the pump mirror displacement, reduced mod 2 pi."""
    if not pump_wavelength > 0:
        raise ValueError("pump wavelength must be positive")
    return (2 * math.pi * g.path_multiplier * g.d3 / pump_wavelength) % (2 * math.pi)


def config_from_geometry(g: StageGeometry, pump_wavelength: float = K.PUMP_WAVELENGTH) -> SynthesisConfig:
    dt_h, dt_v, _ = displacement_to_delays(g)
    return SynthesisConfig(dt_h, dt_v, phase_from_path(g, pump_wavelength), pump_wavelength)


def resolve_delays(direct=None, geometry: StageGeometry | None = None):
    """Pick delays from direct values or stage displacements.

    Direct values win when both are present; a warning is issued.
    """
    if direct is not None and geometry is not None:
        warnings.warn("both delays and displacements given; displacements ignored", stacklevel=2)
    if direct is not None:
        return tuple(direct)
    if geometry is not None:
        return displacement_to_delays(geometry)[:2]
    return 0.0, 0.0


def interference_factor(grid: FrequencyGrid, cfg: SynthesisConfig) -> np.ndarray:
    """1 + exp(i phi) exp(-i (wa dt_h + wb dt_v)) on the grid.

    Absolute frequencies are used; the constant exp(-i w0 (dt_h + dt_v)) is
    equivalent to a shift of phi.
    """
    wa = grid.omega_a[:, None]
    wb = grid.omega_b[None, :]
    return 1.0 + np.exp(1j * cfg.phase) * np.exp(-1j * (wa * cfg.dt_h + wb * cfg.dt_v))


def apply_bidirectional(f: JointAmplitude, cfg: SynthesisConfig) -> JointAmplitude:
    """Superpose the delayed second-pass amplitude. Not renormalized."""
    return JointAmplitude(f.grid, f.values * interference_factor(f.grid, cfg), False)


def jsi_from_amplitude(f: JointAmplitude) -> np.ndarray:
    return np.abs(f.values) ** 2


# --------------------------------------------------------------------------
# time domain


@dataclass(frozen=True, eq=False)
class JointTemporalAmplitude:
    t_a: np.ndarray
    t_b: np.ndarray
    values: np.ndarray
    grid: FrequencyGrid  # conjugate frequency grid

    @property
    def step(self) -> float:
        return float(self.t_a[1] - self.t_a[0])

    def norm(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.step**2)


def time_axis(omega: np.ndarray) -> np.ndarray:
    n = len(omega)
    dt = 2 * math.pi / (n * (omega[1] - omega[0]))
    return (np.arange(n) - n // 2) * dt


def _to_time_axis(values, omega, t, axis):
    n = len(omega)
    dw = omega[1] - omega[0]
    m = np.arange(n)
    shape = [1, 1]
    shape[axis] = n
    pre = np.exp(1j * m * dw * t[0]).reshape(shape)
    post = np.exp(1j * omega[0] * t).reshape(shape)
    out = np.fft.ifft(values * pre, axis=axis) * n
    return out * post * (dw / math.sqrt(2 * math.pi))


def _to_freq_axis(values, omega, t, axis):
    n = len(omega)
    dw = omega[1] - omega[0]
    dt = t[1] - t[0]
    m = np.arange(n)
    shape = [1, 1]
    shape[axis] = n
    pre = np.exp(-1j * omega[0] * t).reshape(shape)
    post = np.exp(-1j * m * dw * t[0]).reshape(shape)
    out = np.fft.fft(values * pre, axis=axis)
    return out * post * (dt / math.sqrt(2 * math.pi))


def jta_transform(obj, direction: str = "to_time"):
    """Transform between joint spectral and joint temporal amplitudes."""
    if direction == "to_time":
        if not isinstance(obj, JointAmplitude):
            raise TypeError("to_time expects a JointAmplitude")
        grid = obj.grid
        if not grid.is_uniform():
            raise InvalidGridError("JTA transform requires a uniform grid")
        ta, tb = time_axis(grid.omega_a), time_axis(grid.omega_b)
        v = _to_time_axis(obj.values, grid.omega_a, ta, 0)
        v = _to_time_axis(v, grid.omega_b, tb, 1)
        return JointTemporalAmplitude(ta, tb, v, grid)
    if direction == "to_frequency":
        if not isinstance(obj, JointTemporalAmplitude):
            raise TypeError("to_frequency expects a JointTemporalAmplitude")
        grid = obj.grid
        v = _to_freq_axis(obj.values, grid.omega_a, obj.t_a, 0)
        v = _to_freq_axis(v, grid.omega_b, obj.t_b, 1)
        return JointAmplitude(grid, v, False)
    raise ValueError(f"unknown direction {direction!r}")
