"""Closed-form spectrum and SNR predictions used as ground truth.

In the small-signal regime the PSD of an N-photon probe is a flat floor
``(flux/(2N) + background) / f0**2`` plus a line at the modulation frequency
of weight ``(flux * V * A)**2 / (16 * f0**2)``. On a periodogram grid of
resolution 1/T the line occupies a single bin whose height is that weight
times T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .analysis import snr_theory
from .photon_sim import SimulationConfig
from .probe_model import ModulationParams, ProbeParams, check_linear_regime


@dataclass(frozen=True)
class PredictedSpectrum:
    floor: float
    peak_value: float
    peak_freq: float
    resolution_bw: float

    @property
    def snr(self) -> float:
        """Line height over floor; excludes the floor's own contribution to the line bin."""
        return self.peak_value / self.floor

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.snr) if self.snr > 0 else -math.inf

    @property
    def line_bin_mean(self) -> float:
        """Expected periodogram value in the line bin (line plus floor)."""
        return self.peak_value + self.floor


def predicted_spectrum(
    probe: ProbeParams,
    mod: ModulationParams,
    cfg: SimulationConfig,
    background: float = 0.0,
) -> PredictedSpectrum:
    check_linear_regime(probe, mod)
    f0 = cfg.bin_rate
    floor = (probe.mean_rate + background) / f0**2
    peak = (probe.total_flux * probe.visibility * mod.amplitude) ** 2 / (16.0 * f0**2) * cfg.duration
    return PredictedSpectrum(floor, peak, mod.frequency, 1.0 / cfg.duration)


def predicted_snr(probe: ProbeParams, mod: ModulationParams, cfg: SimulationConfig) -> float:
    """Background-free line SNR for a record of length ``cfg.duration``, including V**2."""
    return snr_theory(probe, mod, include_visibility=True) * cfg.duration
