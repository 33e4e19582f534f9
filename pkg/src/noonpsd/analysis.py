"""Noise floor, line height and SNR extraction from (averaged) spectra."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats

from .errors import DataError
from .probe_model import ModulationParams, ProbeParams
from .spectral import Spectrum

DEFAULT_GUARD_BINS = 2
DEFAULT_THRESHOLD_SIGMA = 3.0
MIN_FLOOR_BINS = 10


class Peak(NamedTuple):
    value: float
    index: int
    frequency: float


@dataclass(frozen=True)
class SpectralSummary:
    """Line and floor statistics of one spectrum.

    ``floor_std`` is the spread of the floor bins about their mean; for an
    average of M periodograms it is roughly ``floor / sqrt(M)``, so it is the
    natural yardstick for whether a single line bin stands out.
    """

    floor: float
    floor_std: float
    peak: float
    snr: float
    snr_db: float
    detectable: bool
    threshold_sigma: float
    peak_freq: float
    peak_bin: int
    n_averaged: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


def _floor_mask(spectrum: Spectrum, peak_bin: int, guard_bins: int) -> np.ndarray:
    mask = np.ones(spectrum.psd.size, dtype=bool)
    mask[0] = False
    mask[max(peak_bin - guard_bins, 0) : peak_bin + guard_bins + 1] = False
    return mask


def noise_floor(spectrum: Spectrum, peak_freq: float, guard_bins: int = DEFAULT_GUARD_BINS) -> tuple:
    """Mean and standard deviation of the PSD away from DC and the line.

    Bins within ``guard_bins`` of the bin nearest ``peak_freq`` are excluded.
    """
    if int(guard_bins) != guard_bins or guard_bins < 0:
        raise ValueError(f"guard_bins must be a non-negative integer, got {guard_bins!r}")
    mask = _floor_mask(spectrum, spectrum.bin_index(peak_freq), int(guard_bins))
    n = int(mask.sum())
    if n < MIN_FLOOR_BINS:
        raise ValueError(f"only {n} bins left for the floor estimate; need >= {MIN_FLOOR_BINS}")
    values = spectrum.psd[mask]
    return float(values.mean()), float(values.std(ddof=1))


def peak_height(spectrum: Spectrum, peak_freq: float) -> Peak:
    """PSD value at the grid bin nearest ``peak_freq``."""
    j = spectrum.bin_index(peak_freq)
    return Peak(float(spectrum.psd[j]), j, float(spectrum.frequencies[j]))


def snr(
    spectrum: Spectrum,
    peak_freq: float,
    guard_bins: int = DEFAULT_GUARD_BINS,
    threshold_sigma: float = DEFAULT_THRESHOLD_SIGMA,
) -> SpectralSummary:
    """Summarise a spectrum. The line counts as detected when it exceeds
    ``floor + threshold_sigma * floor_std``.

    Raises :class:`DataError` when the floor is zero (no counts recorded).
    """
    floor, floor_std = noise_floor(spectrum, peak_freq, guard_bins)
    if not floor > 0:
        raise DataError("noise floor is zero; the record contains no fluctuations")
    pk = peak_height(spectrum, peak_freq)
    ratio = pk.value / floor
    return SpectralSummary(
        floor=floor,
        floor_std=floor_std,
        peak=pk.value,
        snr=ratio,
        snr_db=10.0 * math.log10(ratio) if ratio > 0 else -math.inf,
        detectable=bool(pk.value > floor + threshold_sigma * floor_std),
        threshold_sigma=float(threshold_sigma),
        peak_freq=pk.frequency,
        peak_bin=pk.index,
        n_averaged=spectrum.n_averaged,
    )


def snr_theory(probe: ProbeParams, mod: ModulationParams, include_visibility: bool = False) -> float:
    """Line SNR per unit resolution bandwidth, ``flux * A**2 * N / 8`` (1/s).

    Exact for unit visibility; multiply by the record length T to compare with
    a measured peak/floor ratio. ``include_visibility`` applies the V**2 factor
    by which an imperfect fringe reduces the line.
    """
    value = probe.total_flux * mod.amplitude**2 * probe.n_photons / 8.0
    if include_visibility:
        value *= probe.visibility**2
    return value


def flatness(spectrum: Spectrum):
    """Linear fit of the non-DC PSD against frequency.

    Returns ``(slope, slope_stderr)`` in counts^2/Hz per Hz.
    """
    fit = stats.linregress(spectrum.frequencies[1:], spectrum.psd[1:])
    return float(fit.slope), float(fit.stderr)


def fringe_visibility(phases, counts, n_photons: int) -> float:
    """Visibility of ``c0 * (1 + V cos(N*phase + delta))`` by linear least squares."""
    phases = np.asarray(phases, dtype=float)
    y = np.asarray(counts, dtype=float)
    design = np.column_stack([np.ones_like(phases), np.cos(n_photons * phases), np.sin(n_photons * phases)])
    (c0, a, b), *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(math.hypot(a, b) / c0)
