"""Photon-counting spectral analysis for N-photon path-entangled probes."""

__version__ = "0.1.0"

from .probe_model import (  # noqa: E402
    ModulationParams,
    ProbeParams,
    detection_rate,
    linearized_rate,
    operating_point,
    phase_at,
)
from .photon_sim import (  # noqa: E402
    CountSeries,
    DetectorImperfections,
    SimulationConfig,
    empirical_autocorrelation,
    simulate_counts,
    simulate_probe,
)
from .spectral import Spectrum, average_spectra, periodogram, shot_noise_level, to_db  # noqa: E402
from .analysis import SpectralSummary, noise_floor, peak_height, snr, snr_theory  # noqa: E402
from .oracle import PredictedSpectrum, predicted_snr, predicted_spectrum  # noqa: E402

__all__ = [
    "ModulationParams", "ProbeParams", "detection_rate", "linearized_rate", "operating_point", "phase_at",
    "CountSeries", "DetectorImperfections", "SimulationConfig", "empirical_autocorrelation",
    "simulate_counts", "simulate_probe",
    "Spectrum", "average_spectra", "periodogram", "shot_noise_level", "to_db",
    "SpectralSummary", "noise_floor", "peak_height", "snr", "snr_theory",
    "PredictedSpectrum", "predicted_snr", "predicted_spectrum",
]
