"""Fringe mathematics for N-photon path-entangled probes.

Maps time and probe parameters to instantaneous N-fold detection rates.
Everything here is a pure function; array arguments broadcast.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import LinearRegimeWarning

# Amplitude above this fraction of the visibility is flagged as non-linear.
LINEAR_REGIME_FRACTION = 0.2


@dataclass(frozen=True)
class ProbeParams:
    """Response parameters of an N-photon probe.

    Attributes
    ----------
    n_photons : int
        Photon number N of the path-entangled state.
    total_flux : float
        Detected photon flux in photons/s. The N-fold rate is normalised by
        1/N so that probes of different N carry the same optical energy.
    visibility : float
        Fringe visibility in [0, 1].
    fringe_sign : int
        +1 or -1, selecting which output port is monitored.
    """

    n_photons: int
    total_flux: float
    visibility: float = 1.0
    fringe_sign: int = 1

    def __post_init__(self):
        if int(self.n_photons) != self.n_photons or self.n_photons < 1:
            raise ValueError(f"n_photons must be a positive integer, got {self.n_photons!r}")
        if not self.total_flux > 0:
            raise ValueError(f"total_flux must be > 0, got {self.total_flux!r}")
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError(f"visibility must lie in [0, 1], got {self.visibility!r}")
        if self.fringe_sign not in (1, -1):
            raise ValueError(f"fringe_sign must be +1 or -1, got {self.fringe_sign!r}")

    @property
    def mean_rate(self) -> float:
        """Fringe-averaged N-fold detection rate, flux / (2N)."""
        return self.total_flux / (2 * self.n_photons)


@dataclass(frozen=True)
class ModulationParams:
    """Sinusoidal phase modulation ``amplitude*cos(2*pi*frequency*t) + operating_point``."""

    amplitude: float
    frequency: float
    operating_point: float

    def __post_init__(self):
        if not self.amplitude >= 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude!r}")
        if not self.frequency > 0:
            raise ValueError(f"frequency must be > 0, got {self.frequency!r}")

    @classmethod
    def at_mid_fringe(cls, n_photons: int, amplitude: float, frequency: float) -> "ModulationParams":
        return cls(amplitude, frequency, operating_point(n_photons))


def operating_point(n_photons: int) -> float:
    """Mid-fringe bias pi/(2N), where the fringe slope is steepest."""
    if int(n_photons) != n_photons or n_photons < 1:
        raise ValueError(f"n_photons must be a positive integer, got {n_photons!r}")
    return math.pi / (2 * n_photons)


def phase_at(t, mod: ModulationParams):
    """Instantaneous phase at time(s) ``t`` in seconds."""
    return mod.amplitude * np.cos(2 * np.pi * mod.frequency * np.asarray(t, dtype=float)) + mod.operating_point


def detection_rate(probe: ProbeParams, phase):
    """Exact N-fold detection rate in counts/s at the given phase(s).

    ``flux/(2N) * (1 + sign * V * cos(N * phase))``; never negative for V <= 1.
    """
    phase = np.asarray(phase, dtype=float)
    rate = probe.mean_rate * (1.0 + probe.fringe_sign * probe.visibility * np.cos(probe.n_photons * phase))
    # cos rounding can push a dark fringe to -1e-10
    rate = np.maximum(rate, 0.0)
    return float(rate) if rate.ndim == 0 else rate


def check_linear_regime(probe: ProbeParams, mod: ModulationParams) -> bool:
    """Warn and return False when the first-order fringe model is not trustworthy."""
    ok = True
    if mod.amplitude > LINEAR_REGIME_FRACTION * probe.visibility:
        warnings.warn(
            f"modulation amplitude {mod.amplitude:g} rad exceeds "
            f"{LINEAR_REGIME_FRACTION:g} x visibility ({probe.visibility:g})",
            LinearRegimeWarning,
            stacklevel=3,
        )
        ok = False
    if not math.isclose(mod.operating_point, operating_point(probe.n_photons), rel_tol=1e-9, abs_tol=1e-12):
        warnings.warn(
            f"operating point {mod.operating_point:g} rad is not mid-fringe "
            f"pi/(2N) = {operating_point(probe.n_photons):g} rad",
            LinearRegimeWarning,
            stacklevel=3,
        )
        ok = False
    return ok


def linearization_sign(probe: ProbeParams) -> int:
    # d cos(N phi)/d phi = -N at phi = pi/(2N)
    return -probe.fringe_sign


def linearized_rate(probe: ProbeParams, mod: ModulationParams, t):
    """First-order rate about mid-fringe.

    ``flux/(2N) - sign * (flux/2) * V * A * cos(2*pi*f*t)``. The oscillating
    amplitude ``(flux/2)*V*A`` does not depend on N. Intended as a diagnostic
    and test oracle; the simulator uses :func:`detection_rate`.
    """
    check_linear_regime(probe, mod)
    t = np.asarray(t, dtype=float)
    swing = 0.5 * probe.total_flux * probe.visibility * mod.amplitude
    rate = probe.mean_rate + linearization_sign(probe) * swing * np.cos(2 * np.pi * mod.frequency * t)
    return float(rate) if rate.ndim == 0 else rate


def linearization_bound(probe: ProbeParams, mod: ModulationParams) -> float:
    """Upper bound on |exact - linearized| rate from the second-order remainder."""
    return 0.5 * probe.total_flux * probe.visibility * (probe.n_photons * mod.amplitude) ** 2 / 2


def effective_visibility(visibility: float, signal_rate: float, background_rate: float) -> float:
    """Visibility diluted by an unmodulated background: V * s / (s + b)."""
    return visibility * signal_rate / (signal_rate + background_rate)


def intrinsic_visibility(measured: float, signal_rate: float, background_rate: float) -> float:
    """Invert :func:`effective_visibility`: the visibility needed before dilution."""
    v = measured * (signal_rate + background_rate) / signal_rate
    if v > 1.0:
        raise ValueError(
            f"measured visibility {measured:g} is unreachable with background "
            f"{background_rate:g}/s on signal {signal_rate:g}/s"
        )
    return v
