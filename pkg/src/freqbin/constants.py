"""Physical constants and the default experimental numbers used as presets."""
import math

C_LIGHT = 299_792_458.0  # m/s

PUMP_WAVELENGTH = 792e-9  # m
PUMP_BANDWIDTH_WL = 0.2e-9  # m, 3 dB bandwidth
REP_RATE = 76e6  # Hz
PULSE_PERIOD = 1.0 / REP_RATE  # s, 13.158 ns

CRYSTAL_LENGTH = 0.040  # m
POLING_PERIOD = 21.5e-6  # m
OVEN_TEMPERATURE = 42.0  # deg C, metadata only

# Linearized type-II phase matching. The difference of the two inverse group
# velocity offsets sets the antidiagonal ridge width, the mean sets the
# phase-matching width along the sum-frequency direction.
RIDGE_FWHM = 2.2e12  # Hz, single-photon marginal FWHM of the unmodulated JSI
MEAN_BETA = -5e-11  # s/m

GRID_N = 2048
GRID_SPAN = 2 * math.pi * 12e12  # rad/s

# Detection hardware. Jitters quoted as FWHM are converted to Gaussian RMS.
FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))
SNSPD_EFFICIENCY = 0.70
SNSPD_JITTER_FWHM = 80e-12
SNSPD_DARK_RATE = 100.0
SYSTEM_JITTER_FWHM = 130e-12
KLYSHKO_EFFICIENCY = 0.0997
COINCIDENCE_WINDOW = 3e-9

PAIR_RATE_PER_MW = 587.0  # detected pairs/s per mW
PUMP_POWER_MW = 341.0
PAIR_RATE = PAIR_RATE_PER_MW * PUMP_POWER_MW

DCF50_DISPERSION = -895e-12 / 1e-9  # s/m  (-895 ps/nm)
DCF_LAMBDA_REF = 1565e-9
DCF15_DISPERSION = DCF50_DISPERSION * 15.0 / 50.0  # -268.5 ps/nm

LINK_LENGTH = 1300.0  # m
LINK_GROUP_INDEX = 1.468
LINK_DISPERSION = 17e-12 / 1e-9 / 1e3  # s/m^2  (17 ps/nm/km)
LINK_LAMBDA_REF = 1550e-9
SYNC_JITTER = 28e-12  # s RMS
FOLD_BIN_WIDTH = 30e-12


def degenerate_omega(pump_wavelength=PUMP_WAVELENGTH):
    """Angular frequency of each photon at degeneracy (half the pump)."""
    return math.pi * C_LIGHT / pump_wavelength


def wavelength_to_bandwidth(center, width):
    """Convert a wavelength width to a frequency width, c*dl/l**2 (Hz)."""
    return C_LIGHT * width / center**2
