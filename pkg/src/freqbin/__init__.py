"""Frequency-bin biphoton synthesis: spectra, Schmidt analysis, HOM,
time-of-flight detection and a two-node network simulator."""

__version__ = "0.1.0"

from .analysis import (  # noqa: E402
    BinReport,
    SchmidtResult,
    detect_bins,
    difference_marginal,
    extract_bin,
    jsa_from_jsi,
    marginals,
    schmidt_decompose,
)
from .detection import (  # noqa: E402
    DetectorSpec,
    DispersionSpec,
    EventStream,
    PairSource,
    apply_detector,
    coincidences_and_klyshko,
    freq_to_time,
    sample_pair_events,
    tof_reconstruct,
)
from .hom import HomCurve, fringe_metrics, hom_curve  # noqa: E402
from .kernels import BACKEND  # noqa: E402
from .network import ClockModel, FiberLink, FoldedHistogram, fold_and_histogram, resolve_report, simulate_two_node  # noqa: E402
from .spectral import (  # noqa: E402
    CrystalSpec,
    FrequencyGrid,
    JointAmplitude,
    PhaseMatchModel,
    PumpSpectrum,
    build_frequency_grid,
    build_jsa,
    phase_matching_function,
    phase_mismatch,
    pump_envelope,
)
from .synthesis import (  # noqa: E402
    JointTemporalAmplitude,
    StageGeometry,
    SynthesisConfig,
    apply_bidirectional,
    displacement_to_delays,
    jsi_from_amplitude,
    jta_transform,
    phase_from_path,
)

__all__ = [
    "__version__",
    "BACKEND",
    "BinReport",
    "ClockModel",
    "CrystalSpec",
    "DetectorSpec",
    "DispersionSpec",
    "EventStream",
    "FiberLink",
    "FoldedHistogram",
    "FrequencyGrid",
    "HomCurve",
    "JointAmplitude",
    "JointTemporalAmplitude",
    "PairSource",
    "PhaseMatchModel",
    "PumpSpectrum",
    "SchmidtResult",
    "StageGeometry",
    "SynthesisConfig",
    "apply_bidirectional",
    "apply_detector",
    "build_frequency_grid",
    "build_jsa",
    "coincidences_and_klyshko",
    "detect_bins",
    "difference_marginal",
    "displacement_to_delays",
    "extract_bin",
    "fold_and_histogram",
    "freq_to_time",
    "fringe_metrics",
    "hom_curve",
    "jsa_from_jsi",
    "jsi_from_amplitude",
    "jta_transform",
    "marginals",
    "phase_from_path",
    "phase_matching_function",
    "phase_mismatch",
    "pump_envelope",
    "resolve_report",
    "sample_pair_events",
    "schmidt_decompose",
    "simulate_two_node",
    "tof_reconstruct",
]
