"""Frequency grids, pump envelope, phase matching and the baseline JSA.

All frequencies are angular (rad/s) unless a name ends in ``_hz``.
Absolute amplitudes carry no units: every coupling constant is folded into a
single normalization.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import constants as K
from .errors import InvalidGridError, OutOfRangeError

_UNIFORM_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Rectangular grid of angular frequencies for the two photons."""

    omega_a: np.ndarray
    omega_b: np.ndarray
    center: float

    @property
    def n_a(self) -> int:
        return len(self.omega_a)

    @property
    def n_b(self) -> int:
        return len(self.omega_b)

    @property
    def step(self) -> float:
        return float(self.omega_a[1] - self.omega_a[0])

    @property
    def nu_a(self) -> np.ndarray:
        return self.omega_a / (2 * math.pi)

    @property
    def nu_b(self) -> np.ndarray:
        return self.omega_b / (2 * math.pi)

    def is_uniform(self) -> bool:
        for ax in (self.omega_a, self.omega_b):
            if len(ax) < 2:
                return False
            d = np.diff(ax)
            if np.any(d <= 0):
                return False
            if np.max(np.abs(d - d[0])) > _UNIFORM_RTOL * abs(d[0]):
                return False
        da = self.omega_a[1] - self.omega_a[0]
        db = self.omega_b[1] - self.omega_b[0]
        return abs(da - db) <= _UNIFORM_RTOL * abs(da)

    def is_square(self) -> bool:
        return self.n_a == self.n_b and np.allclose(
            self.omega_a, self.omega_b, rtol=0, atol=_UNIFORM_RTOL * abs(self.step)
        )

    def require_uniform(self):
        if not self.is_uniform():
            raise InvalidGridError("operation requires a uniform grid with equal steps on both axes")

    def subgrid(self, ia: slice, ib: slice) -> "FrequencyGrid":
        return FrequencyGrid(self.omega_a[ia].copy(), self.omega_b[ib].copy(), self.center)

    def __eq__(self, other):
        if not isinstance(other, FrequencyGrid):
            return NotImplemented
        return (
            self.center == other.center
            and np.array_equal(self.omega_a, other.omega_a)
            and np.array_equal(self.omega_b, other.omega_b)
        )


def build_frequency_grid(center: float, span: float, n: int) -> FrequencyGrid:
    """Square grid with ``n`` points per axis covering ``center +- span/2``."""
    if n < 8:
        raise InvalidGridError(f"need at least 8 grid points, got {n}")
    if not span > 0:
        raise InvalidGridError(f"span must be positive, got {span}")
    axis = np.linspace(center - span / 2, center + span / 2, int(n))
    return FrequencyGrid(axis, axis.copy(), float(center))


def default_grid(n: int = K.GRID_N, span: float = K.GRID_SPAN, pump_wavelength: float = K.PUMP_WAVELENGTH):
    return build_frequency_grid(K.degenerate_omega(pump_wavelength), span, n)


# --------------------------------------------------------------------------
# pump

_SECH_HALF = math.acosh(math.sqrt(2.0))  # sech^2(x) = 1/2


@dataclass(frozen=True, eq=False)
class PumpSpectrum:
    """Pump spectral amplitude, peak 1 at ``omega_p0``.

    ``fwhm_hz`` is the full width at half maximum of the amplitude envelope.
    For ``shape='tabulated'`` the envelope is linearly interpolated from
    ``table_offsets`` (rad/s relative to ``omega_p0``) and ``table_values``.
    """

    omega_p0: float
    fwhm_hz: float
    shape: str = "gaussian"
    table_offsets: Optional[np.ndarray] = None
    table_values: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.shape not in ("gaussian", "sech2", "tabulated"):
            raise ValueError(f"unsupported pump shape {self.shape!r}")
        if self.shape == "tabulated":
            if self.table_offsets is None or self.table_values is None:
                raise ValueError("tabulated pump needs table_offsets and table_values")
            if np.any(np.asarray(self.table_values) < 0):
                raise ValueError("pump envelope must be non-negative")
        elif not self.fwhm_hz > 0:
            raise ValueError("pump FWHM must be positive")

    @classmethod
    def from_wavelength(cls, wavelength=K.PUMP_WAVELENGTH, bandwidth=K.PUMP_BANDWIDTH_WL, shape="gaussian"):
        omega = 2 * math.pi * K.C_LIGHT / wavelength
        return cls(omega, K.wavelength_to_bandwidth(wavelength, bandwidth), shape)

    @property
    def sigma(self) -> float:
        """Gaussian RMS width of the amplitude in rad/s."""
        return 2 * math.pi * self.fwhm_hz * K.FWHM_TO_SIGMA


def pump_envelope(p: PumpSpectrum, omega_sum):
    """Pump amplitude at the sum frequency ``omega_sum``."""
    w = np.asarray(omega_sum, dtype=float)
    d = w - p.omega_p0
    if p.shape == "gaussian":
        out = np.exp(-(d**2) / (2 * p.sigma**2))
    elif p.shape == "sech2":
        x0 = (math.pi * p.fwhm_hz) / _SECH_HALF  # half width (rad/s) over acosh(sqrt 2)
        out = 1.0 / np.cosh(np.clip(d / x0, -350, 350)) ** 2
    else:
        offs = np.asarray(p.table_offsets, dtype=float)
        vals = np.asarray(p.table_values, dtype=float)
        if np.any(d < offs[0]) or np.any(d > offs[-1]):
            raise OutOfRangeError("pump table queried outside its tabulated range")
        out = np.interp(d, offs, vals) / np.max(vals)
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------
# phase matching


@dataclass(frozen=True, eq=False)
class PhaseMatchModel:
    """Phase mismatch model.

    ``linearized``: dk = dk0 + beta_h*(wa - omega0) + beta_v*(wb - omega0),
    with the grating vector already absorbed in ``dk0``.
    ``tabulated``: wave-vector curves ``curves[name] = (omega, k)`` for
    ``name`` in H, V, P, linearly interpolated.
    """

    variant: str = "linearized"
    dk0: float = 0.0
    beta_h: float = 0.0
    beta_v: float = 0.0
    omega0: float = field(default_factory=K.degenerate_omega)
    curves: Optional[dict] = None

    def __post_init__(self):
        if self.variant not in ("linearized", "tabulated"):
            raise ValueError(f"unknown phase-match variant {self.variant!r}")
        if self.variant == "linearized":
            if not all(math.isfinite(v) for v in (self.dk0, self.beta_h, self.beta_v)):
                raise ValueError("linearized coefficients must be finite")
        else:
            if not self.curves or set(self.curves) != {"H", "V", "P"}:
                raise ValueError("tabulated model needs curves H, V and P")

    @classmethod
    def default(cls, ridge_fwhm_hz=K.RIDGE_FWHM, length=K.CRYSTAL_LENGTH, mean_beta=K.MEAN_BETA, omega0=None):
        """Linearized model whose unmodulated marginal has the given FWHM."""
        # along the antidiagonal dk*L/2 = pi*dbeta*L*(nu_a - nu0); sinc^2 = 1/2 at 1.39156
        dbeta = 2 * 1.3915573 / (math.pi * length * ridge_fwhm_hz)
        return cls(
            "linearized",
            0.0,
            mean_beta + dbeta / 2,
            mean_beta - dbeta / 2,
            K.degenerate_omega() if omega0 is None else omega0,
        )

    def frequency_range(self):
        if self.variant != "tabulated":
            return (-math.inf, math.inf)
        lo = max(self.curves["H"][0][0], self.curves["V"][0][0])
        hi = min(self.curves["H"][0][-1], self.curves["V"][0][-1])
        return lo, hi


def _interp_checked(omega, table, name):
    x, y = table
    w = np.asarray(omega, dtype=float)
    if np.any(w < x[0]) or np.any(w > x[-1]):
        raise OutOfRangeError(f"k_{name} queried outside its tabulated range")
    return np.interp(w, x, y)


def phase_mismatch(m: PhaseMatchModel, poling_period: float, omega_a, omega_b):
    """Phase mismatch dk in rad/m."""
    wa = np.asarray(omega_a, dtype=float)
    wb = np.asarray(omega_b, dtype=float)
    if m.variant == "linearized":
        out = m.dk0 + m.beta_h * (wa - m.omega0) + m.beta_v * (wb - m.omega0)
    else:
        out = (
            _interp_checked(wa, m.curves["H"], "H")
            + _interp_checked(wb, m.curves["V"], "V")
            - _interp_checked(wa + wb, m.curves["P"], "P")
            - 2 * math.pi / poling_period
        )
    return out if np.ndim(out) else float(out)


def sinc(x):
    """sin(x)/x with the series 1 - x^2/6 near zero."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-12
    safe = np.where(small, 1.0, x)
    out = np.where(small, 1.0 - x * x / 6.0, np.sin(safe) / safe)
    return out if out.ndim else float(out)


def phase_matching_function(dk, length: float):
    """Integral of exp(-i dk z) over a crystal centered at z=0: L*sinc(dk L/2)."""
    if not length > 0:
        raise ValueError("crystal length must be positive")
    return length * sinc(np.asarray(dk) * length / 2)


@dataclass(frozen=True, eq=False)
class CrystalSpec:
    length: float = K.CRYSTAL_LENGTH
    poling_period: float = K.POLING_PERIOD
    model: PhaseMatchModel = field(default_factory=PhaseMatchModel.default)
    temperature: float = K.OVEN_TEMPERATURE  # metadata only

    def __post_init__(self):
        if not self.length > 0 or not self.poling_period > 0:
            raise ValueError("crystal length and poling period must be positive")


def load_phase_match_table(path, omega0=None) -> PhaseMatchModel:
    """Read wave-vector curves from a CSV with columns curve,frequency_hz,k_rad_per_m.

    ``curve`` is one of H, V, P. Rows for a curve need not be sorted.
    """
    rows = {"H": [], "V": [], "P": []}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"curve", "frequency_hz", "k_rad_per_m"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected columns {sorted(need)}")
        for row in reader:
            name = row["curve"].strip().upper()
            if name not in rows:
                raise ValueError(f"{path}: unknown curve {name!r}")
            rows[name].append((2 * math.pi * float(row["frequency_hz"]), float(row["k_rad_per_m"])))
    curves = {}
    for name, pts in rows.items():
        if len(pts) < 2:
            raise ValueError(f"{path}: curve {name} needs at least two points")
        arr = np.array(sorted(pts))
        curves[name] = (arr[:, 0], arr[:, 1])
    return PhaseMatchModel("tabulated", omega0=K.degenerate_omega() if omega0 is None else omega0, curves=curves)


# --------------------------------------------------------------------------
# joint spectral amplitude


@dataclass(frozen=True, eq=False)
class JointAmplitude:
    """Complex biphoton amplitude on a frequency grid.

    ``flat_phase`` marks amplitudes recovered from intensity data, whose
    spectral phase is unknown.
    """

    grid: FrequencyGrid
    values: np.ndarray
    normalized: bool = False
    flat_phase: bool = False

    def __post_init__(self):
        if self.values.shape != (self.grid.n_a, self.grid.n_b):
            raise InvalidGridError(
                f"amplitude shape {self.values.shape} does not match grid {(self.grid.n_a, self.grid.n_b)}"
            )

    def norm(self) -> float:
        """Integral of |f|^2 over the grid."""
        da = self.grid.omega_a[1] - self.grid.omega_a[0]
        db = self.grid.omega_b[1] - self.grid.omega_b[0]
        return float(np.sum(np.abs(self.values) ** 2) * da * db)

    def normalize(self) -> "JointAmplitude":
        n = self.norm()
        if n <= 0 or not math.isfinite(n):
            from .errors import UndefinedStateError

            raise UndefinedStateError("cannot normalize a zero amplitude")
        return replace(self, values=self.values / math.sqrt(n), normalized=True)

    def intensity(self) -> np.ndarray:
        return np.abs(self.values) ** 2


def build_jsa(grid: FrequencyGrid, pump: PumpSpectrum, crystal: CrystalSpec, normalize: bool = True) -> JointAmplitude:
    """f(wa, wb) = alpha(wa + wb) * sinc(dk L / 2) on every grid point."""
    m = crystal.model
    if m.variant == "tabulated":
        lo, hi = m.frequency_range()
        if grid.omega_a[0] < lo or grid.omega_b[0] < lo or grid.omega_a[-1] > hi or grid.omega_b[-1] > hi:
            raise OutOfRangeError("tabulated phase matching does not cover the grid")
    wa = grid.omega_a[:, None]
    wb = grid.omega_b[None, :]
    alpha = pump_envelope(pump, wa + wb)
    dk = phase_mismatch(m, crystal.poling_period, wa, wb)
    values = (alpha * sinc(dk * crystal.length / 2)).astype(complex)
    f = JointAmplitude(grid, values, False)
    return f.normalize() if normalize else f
