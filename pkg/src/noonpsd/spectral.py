"""Periodogram estimation in counts^2/Hz.

Normalisation
-------------
For K bins sampled at ``f0`` the one-sided estimate is::

    S[j] = |sum_k I_k exp(-2 pi i j k / K)|^2 / (K * f0),   j = 0 .. K//2

Interior bins are *not* doubled. With this convention a Poisson stream of
rate ``lam`` has a flat floor ``lam / f0**2`` and an on-grid cosine of
amplitude ``a`` counts gives a line of height ``a**2 * K / (4 * f0)``.
Bin 0 holds the squared mean; it is kept in the output but excluded from
every floor statistic. No window is applied, so off-grid tones scallop.

dB values are ``10*log10(S / 1 count^2/Hz)``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, GridMismatchError
from .photon_sim import CountSeries

DB_FLOOR = -300.0
CSV_DIGITS = 12
CSV_HEADER = "frequency_hz,psd_counts2_per_hz,psd_std,n_averaged"


@dataclass(eq=False)
class Spectrum:
    """One-sided PSD on the grid ``j / duration``, j = 0 .. K//2."""

    frequencies: np.ndarray
    psd: np.ndarray
    psd_std: Optional[np.ndarray] = None
    n_averaged: int = 1
    bin_rate: float = 1.0
    n_bins: int = 0
    label: str = ""

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.psd = np.asarray(self.psd, dtype=float)
        if self.psd_std is not None:
            self.psd_std = np.asarray(self.psd_std, dtype=float)
            if self.psd_std.shape != self.psd.shape:
                raise ValueError("psd_std must match psd in shape")
        if self.frequencies.shape != self.psd.shape or self.psd.ndim != 1:
            raise ValueError("frequencies and psd must be 1-d arrays of equal length")
        if np.any(self.psd < 0):
            raise ValueError("psd must be non-negative")
        if self.psd.size > 1 and np.any(np.diff(self.frequencies) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        if "\n" in self.label:
            raise ValueError("label must be a single line")

    def __len__(self) -> int:
        return self.psd.size

    @property
    def duration(self) -> float:
        return self.n_bins / self.bin_rate

    @property
    def resolution(self) -> float:
        """Grid spacing 1/T in Hz."""
        return self.bin_rate / self.n_bins

    def same_grid(self, other: "Spectrum") -> bool:
        return (
            self.n_bins == other.n_bins
            and self.bin_rate == other.bin_rate
            and np.array_equal(self.frequencies, other.frequencies)
        )

    def bin_index(self, frequency: float) -> int:
        """Index of the grid bin nearest ``frequency``."""
        if not self.frequencies[0] <= frequency <= self.frequencies[-1] + 0.5 * self.resolution:
            raise ValueError(
                f"frequency {frequency:g} Hz outside grid [{self.frequencies[0]:g}, {self.frequencies[-1]:g}] Hz"
            )
        return min(int(round(frequency / self.resolution)), self.psd.size - 1)

    def to_csv(self) -> str:
        fmt = f"{{:.{CSV_DIGITS}g}}"
        out = io.StringIO()
        out.write(f"# bin_rate_hz={float(self.bin_rate)!r}\n")
        out.write(f"# n_bins={self.n_bins}\n")
        out.write(f"# label={self.label}\n")
        out.write("# reference=1 count^2/Hz\n")
        out.write(CSV_HEADER + "\n")
        std = self.psd_std if self.psd_std is not None else [None] * self.psd.size
        for f, s, e in zip(self.frequencies.tolist(), self.psd.tolist(), list(std)):
            e_txt = "" if e is None else fmt.format(e)
            out.write(f"{fmt.format(f)},{fmt.format(s)},{e_txt},{self.n_averaged}\n")
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Spectrum":
        meta = {}
        rows = []
        header_seen = False
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].lstrip().partition("=")
                meta[key.strip()] = value
                continue
            if not header_seen:
                if line != CSV_HEADER:
                    raise DataError(f"line {lineno}: expected header {CSV_HEADER!r}")
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise DataError(f"line {lineno}: expected 4 fields, got {len(parts)}")
            try:
                rows.append((float(parts[0]), float(parts[1]), float(parts[2]) if parts[2] else None, int(parts[3])))
            except ValueError:
                raise DataError(f"line {lineno}: unparseable field in {line!r}") from None
        if not rows:
            raise DataError("spectrum file has no rows")
        stds = [r[2] for r in rows]
        if any(s is None for s in stds) and not all(s is None for s in stds):
            raise DataError("psd_std column must be all empty or all filled")
        try:
            return cls(
                np.array([r[0] for r in rows]),
                np.array([r[1] for r in rows]),
                None if stds[0] is None else np.array(stds),
                rows[0][3],
                float(meta["bin_rate_hz"]),
                int(meta["n_bins"]),
                meta.get("label", ""),
            )
        except (KeyError, ValueError) as exc:
            raise DataError(f"bad spectrum file: {exc}") from None


def _counts_array(series) -> tuple:
    if isinstance(series, CountSeries):
        return series.counts.astype(float), series.bin_rate, series.label
    raise TypeError(f"expected CountSeries, got {type(series).__name__}")


def periodogram(series: CountSeries) -> Spectrum:
    """One-sided periodogram of a count record (see module docstring)."""
    x, f0, label = _counts_array(series)
    k = x.size
    if k < 2:
        raise ValueError(f"need at least 2 bins, got {k}")
    psd = np.abs(np.fft.rfft(x)) ** 2 / (k * f0)
    freqs = np.fft.rfftfreq(k, d=1.0 / f0)
    return Spectrum(freqs, psd, None, 1, f0, k, label)


def two_sided_periodogram(series: CountSeries) -> np.ndarray:
    """All K bins of the periodogram, same normalisation as :func:`periodogram`."""
    x, f0, _ = _counts_array(series)
    return np.abs(np.fft.fft(x)) ** 2 / (x.size * f0)


def periodograms(series: Sequence[CountSeries]) -> np.ndarray:
    """Stacked one-sided periodograms, shape (M, K//2 + 1)."""
    x = np.stack([s.counts for s in series]).astype(float)
    f0 = series[0].bin_rate
    if any(s.bin_rate != f0 or s.counts.size != x.shape[1] for s in series):
        raise GridMismatchError("count series differ in bin rate or length")
    return np.abs(np.fft.rfft(x, axis=1)) ** 2 / (x.shape[1] * f0)


def average_spectra(spectra: Sequence[Spectrum]) -> Spectrum:
    """Per-bin mean and sample standard deviation of linear-scale spectra."""
    spectra = list(spectra)
    if not spectra:
        raise ValueError("no spectra to average")
    first = spectra[0]
    for s in spectra[1:]:
        if not first.same_grid(s):
            raise GridMismatchError("spectra do not share a frequency grid")
    stack = np.stack([s.psd for s in spectra])
    return _from_stack(stack, first.frequencies, first.bin_rate, first.n_bins, first.label)


def _from_stack(stack, frequencies, bin_rate, n_bins, label) -> Spectrum:
    m = stack.shape[0]
    std = stack.std(axis=0, ddof=1) if m > 1 else np.zeros(stack.shape[1])
    return Spectrum(frequencies, stack.mean(axis=0), std, m, bin_rate, n_bins, label)


def averaged_periodogram(series: Sequence[CountSeries]) -> Spectrum:
    """Equivalent to ``average_spectra(map(periodogram, series))``, vectorised."""
    series = list(series)
    stack = periodograms(series)
    k = series[0].counts.size
    f0 = series[0].bin_rate
    return _from_stack(stack, np.fft.rfftfreq(k, d=1.0 / f0), f0, k, series[0].label)


def shot_noise_level(flux: float, bin_rate: float) -> float:
    """Poisson floor ``flux / bin_rate**2`` in counts^2/Hz."""
    if flux < 0:
        raise ValueError(f"flux must be >= 0, got {flux!r}")
    if not bin_rate > 0:
        raise ValueError(f"bin_rate must be > 0, got {bin_rate!r}")
    return flux / bin_rate**2


def to_db(value):
    """10*log10 of a PSD (Spectrum, array or scalar); zeros map to ``DB_FLOOR``."""
    if isinstance(value, Spectrum):
        value = value.psd
    arr = np.asarray(value, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(arr > 0, 10.0 * np.log10(np.where(arr > 0, arr, 1.0)), DB_FLOOR)
    return float(out) if out.ndim == 0 else out
