"""Scripted reproductions: N-dependence at fixed flux, and acoustic volume sweeps.

Realization indices
-------------------
Records are seeded from ``(base_seed, realization_index)``. Indices are laid
out as ``(probe_slot << 40) | (trial << 24) | m`` with ``m < 2**24`` the
realization number, so probes never share noise, every volume of a sweep
reuses the same seeds for a given probe, and crossover trials draw fresh
blocks. Poisson draws at different means consume different amounts of the
stream, so reused seeds do not make neighbouring volumes share noise.
"""

from __future__ import annotations

import io
import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .analysis import DEFAULT_GUARD_BINS, DEFAULT_THRESHOLD_SIGMA, SpectralSummary, snr
from .errors import NoCrossoverError
from .oracle import PredictedSpectrum, predicted_spectrum
from .photon_sim import (
    NO_IMPERFECTIONS,
    CountSeries,
    DetectorImperfections,
    SimulationConfig,
    probe_rate_fn,
    simulate_realizations,
)
from .probe_model import ModulationParams, ProbeParams, intrinsic_visibility
from .spectral import Spectrum, averaged_periodogram

_SLOT_SHIFT = 40
_TRIAL_SHIFT = 24
_FMT = "{:.12g}"


def realization_block(probe_slot: int, trial: int = 0) -> int:
    """First realization index of a (probe, trial) block."""
    if not 0 <= trial < 1 << (_SLOT_SHIFT - _TRIAL_SHIFT):
        raise ValueError(f"trial {trial} out of range")
    return (probe_slot << _SLOT_SHIFT) | (trial << _TRIAL_SHIFT)


def _fmt(x) -> str:
    return _FMT.format(x)


def _check_block_size(sim: SimulationConfig):
    if sim.realizations >= 1 << _TRIAL_SHIFT:
        raise ValueError(f"at most {(1 << _TRIAL_SHIFT) - 1} realizations per block")


@dataclass(frozen=True)
class ProbeRun:
    """Averaged measurement of one probe at one modulation amplitude."""

    probe: ProbeParams
    imperfections: DetectorImperfections
    modulation: ModulationParams
    sample: CountSeries
    spectrum: Spectrum
    summary: SpectralSummary
    theory: PredictedSpectrum


def measure_probe(
    probe: ProbeParams,
    imp: DetectorImperfections,
    mod: ModulationParams,
    sim: SimulationConfig,
    first_index: int,
    guard_bins: int = DEFAULT_GUARD_BINS,
    threshold_sigma: float = DEFAULT_THRESHOLD_SIGMA,
    label: Optional[str] = None,
    n_jobs: int = 1,
) -> ProbeRun:
    """Simulate ``sim.realizations`` records, average their periodograms and summarise."""
    _check_block_size(sim)
    label = label if label is not None else f"N={probe.n_photons}"
    records = simulate_realizations(probe_rate_fn(probe, mod, imp), sim, first_index, label, n_jobs)
    spectrum = averaged_periodogram(records)
    summary = snr(spectrum, mod.frequency, guard_bins, threshold_sigma)
    theory = predicted_spectrum(probe, mod, sim, imp.background(probe.n_photons))
    return ProbeRun(probe, imp, mod, records[0], spectrum, summary, theory)


# --------------------------------------------------------------------------
# Photon-number comparison at fixed flux


@dataclass(frozen=True)
class Fig1Config:
    flux: float = 2e6
    bin_rate: float = 1e3
    duration: float = 1.0
    mod_freq: float = 20.0
    amplitude: float = 6.3e-2
    visibility: float = 1.0
    photon_numbers: tuple = (1, 2, 4)
    realizations: int = 100
    base_seed: int = 0
    guard_bins: int = DEFAULT_GUARD_BINS
    threshold_sigma: float = DEFAULT_THRESHOLD_SIGMA

    def __post_init__(self):
        object.__setattr__(self, "photon_numbers", tuple(self.photon_numbers))
        if not self.photon_numbers:
            raise ValueError("photon_numbers must not be empty")
        for n in self.photon_numbers:
            ProbeParams(n, self.flux, self.visibility)
        ModulationParams(self.amplitude, self.mod_freq, 0.0)
        _check_block_size(self.sim)

    @property
    def sim(self) -> SimulationConfig:
        return SimulationConfig(self.duration, self.bin_rate, self.realizations, self.base_seed)


@dataclass(frozen=True)
class Fig1Result:
    config: Fig1Config
    runs: tuple

    def run_for(self, n_photons: int) -> ProbeRun:
        for r in self.runs:
            if r.probe.n_photons == n_photons:
                return r
        raise KeyError(n_photons)


def fig1_theory(cfg: Fig1Config = Fig1Config(), n_jobs: int = 1) -> Fig1Result:
    """Same flux, same modulation, N in ``cfg.photon_numbers``, each at its own mid-fringe."""
    runs = []
    for slot, n in enumerate(cfg.photon_numbers):
        probe = ProbeParams(n, cfg.flux, cfg.visibility)
        mod = ModulationParams.at_mid_fringe(n, cfg.amplitude, cfg.mod_freq)
        runs.append(
            measure_probe(
                probe, NO_IMPERFECTIONS, mod, cfg.sim, realization_block(slot),
                cfg.guard_bins, cfg.threshold_sigma, n_jobs=n_jobs,
            )
        )
    return Fig1Result(cfg, tuple(runs))


def fig1_timetrace_csv(result: Fig1Result) -> str:
    runs = result.runs
    out = io.StringIO()
    out.write(f"# bin_rate_hz={float(result.config.bin_rate)!r}\n")
    cols = ["time_s"]
    for r in runs:
        cols += [f"counts_n{r.probe.n_photons}", f"theory_mean_n{r.probe.n_photons}"]
    out.write(",".join(cols) + "\n")
    sim = result.config.sim
    t_mid = sim.bin_midpoints()
    means = [probe_rate_fn(r.probe, r.modulation, r.imperfections)(t_mid) / sim.bin_rate for r in runs]
    t0 = runs[0].sample.bin_starts
    for k in range(sim.n_bins):
        row = [_fmt(t0[k])]
        for r, mu in zip(runs, means):
            row += [str(int(r.sample.counts[k])), _fmt(mu[k])]
        out.write(",".join(row) + "\n")
    return out.getvalue()


def fig1_psd_csv(result: Fig1Result) -> str:
    runs = result.runs
    out = io.StringIO()
    out.write(f"# n_averaged={result.config.realizations}\n")
    out.write("# reference=1 count^2/Hz\n")
    cols = ["frequency_hz"]
    for r in runs:
        n = r.probe.n_photons
        cols += [f"psd_n{n}", f"psd_std_n{n}", f"theory_floor_n{n}", f"theory_peak_n{n}"]
    out.write(",".join(cols) + "\n")
    freqs = runs[0].spectrum.frequencies
    for j in range(freqs.size):
        row = [_fmt(freqs[j])]
        for r in runs:
            row += [_fmt(r.spectrum.psd[j]), _fmt(r.spectrum.psd_std[j]), _fmt(r.theory.floor), _fmt(r.theory.peak_value)]
        out.write(",".join(row) + "\n")
    return out.getvalue()


def fig1_summary_csv(result: Fig1Result) -> str:
    out = io.StringIO()
    out.write("probe_n,floor,floor_std,peak,snr_db,theory_floor,theory_peak,theory_snr_db,detectable\n")
    for r in result.runs:
        s, th = r.summary, r.theory
        out.write(
            ",".join([
                str(r.probe.n_photons), _fmt(s.floor), _fmt(s.floor_std), _fmt(s.peak), _fmt(s.snr_db),
                _fmt(th.floor), _fmt(th.peak_value), _fmt(th.snr_db), str(s.detectable).lower(),
            ]) + "\n"
        )
    return out.getvalue()


# --------------------------------------------------------------------------
# Volume sweeps


@dataclass(frozen=True)
class SweepProbe:
    probe: ProbeParams
    imperfections: DetectorImperfections = NO_IMPERFECTIONS
    label: str = ""

    @property
    def name(self) -> str:
        return self.label or f"N={self.probe.n_photons}"


# Modulation depth at full volume. Chosen so the N=1 line in the
# experimental configuration sits ~20 dB above its floor at full drive,
# where the 100-average SNR gap is measurable to better than 0.1 dB.
DEFAULT_AMPLITUDE_AT_FULL = 0.1


@dataclass(frozen=True)
class SweepConfig:
    volumes: tuple
    amplitude_at_full: float
    probes: tuple
    mod_freq: float
    sim: SimulationConfig
    guard_bins: int = DEFAULT_GUARD_BINS
    threshold_sigma: float = DEFAULT_THRESHOLD_SIGMA

    def __post_init__(self):
        vols = tuple(float(v) for v in self.volumes)
        if not vols:
            raise ValueError("volumes must not be empty")
        if any(not 0 < v <= 1 for v in vols):
            raise ValueError("volumes must lie in (0, 1]")
        if any(b <= a for a, b in zip(vols, vols[1:])):
            raise ValueError("volumes must be strictly increasing")
        if not self.amplitude_at_full > 0:
            raise ValueError("amplitude_at_full must be > 0")
        if not self.probes:
            raise ValueError("at least one probe is required")
        if not self.mod_freq > 0:
            raise ValueError("mod_freq must be > 0")
        object.__setattr__(self, "volumes", vols)
        object.__setattr__(self, "probes", tuple(self.probes))
        _check_block_size(self.sim)

    def modulation(self, probe_index: int, volume: float) -> ModulationParams:
        n = self.probes[probe_index].probe.n_photons
        return ModulationParams.at_mid_fringe(n, volume * self.amplitude_at_full, self.mod_freq)

    def measure(self, probe_index: int, volume: float, trial: int = 0, n_jobs: int = 1) -> ProbeRun:
        sp = self.probes[probe_index]
        return measure_probe(
            sp.probe, sp.imperfections, self.modulation(probe_index, volume), self.sim,
            realization_block(probe_index, trial), self.guard_bins, self.threshold_sigma, sp.name, n_jobs,
        )


def experimental_probes(
    singles_rate: float = 8e4,
    coincidence_rate: float = 4e4,
    v1: float = 0.993,
    v2: float = 0.974,
    dark_rate: float = 100.0,
    car: float = 100.0,
) -> tuple:
    """Singles and two-photon probes of equal flux, with visibilities quoted *after*
    background dilution (the intrinsic fringe visibility is back-solved)."""
    flux1 = 2 * 1 * singles_rate
    flux2 = 2 * 2 * coincidence_rate
    accidentals = coincidence_rate / car
    singles = SweepProbe(
        ProbeParams(1, flux1, intrinsic_visibility(v1, singles_rate, dark_rate)),
        DetectorImperfections(dark_rate=dark_rate, window_note="detector dark counts"),
        "singles",
    )
    pairs = SweepProbe(
        ProbeParams(2, flux2, intrinsic_visibility(v2, coincidence_rate, accidentals)),
        DetectorImperfections(accidental_rate=accidentals, window_note=f"accidentals at CAR={car:g}"),
        "coincidences",
    )
    return singles, pairs


def experimental_sweep_config(
    volumes: Sequence[float] = tuple(np.round(np.linspace(0.1, 1.0, 10), 10)),
    realizations: int = 100,
    base_seed: int = 0,
    amplitude_at_full: float = DEFAULT_AMPLITUDE_AT_FULL,
    **probe_kwargs,
) -> SweepConfig:
    """440 Hz drive sampled at 10 kHz for 1 s; 80 kHz singles and 40 kHz coincidences."""
    return SweepConfig(
        volumes=tuple(volumes),
        amplitude_at_full=amplitude_at_full,
        probes=experimental_probes(**probe_kwargs),
        mod_freq=440.0,
        sim=SimulationConfig(1.0, 1e4, realizations, base_seed),
    )


@dataclass(frozen=True)
class SweepRecord:
    probe_index: int
    n_photons: int
    label: str
    volume: float
    amplitude: float
    summary: SpectralSummary
    theory: PredictedSpectrum


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    records: tuple

    def record(self, probe_index: int, volume: float) -> SweepRecord:
        for r in self.records:
            if r.probe_index == probe_index and math.isclose(r.volume, volume):
                return r
        raise KeyError((probe_index, volume))

    def for_probe(self, probe_index: int) -> list:
        return [r for r in self.records if r.probe_index == probe_index]

    def snr_differences(self, probe_a: int = 1, probe_b: int = 0) -> dict:
        """``snr_db(a) - snr_db(b)`` per volume."""
        return {
            v: self.record(probe_a, v).summary.snr_db - self.record(probe_b, v).summary.snr_db
            for v in self.config.volumes
        }

    def floor_separations(self, probe_a: int = 1, probe_b: int = 0) -> dict:
        """Floor of ``b`` over floor of ``a`` in dB, per volume."""
        return {
            v: 10 * math.log10(self.record(probe_b, v).summary.floor / self.record(probe_a, v).summary.floor)
            for v in self.config.volumes
        }


def volume_sweep(cfg: SweepConfig, n_jobs: int = 1) -> SweepResult:
    records = []
    for p, sp in enumerate(cfg.probes):
        for v in cfg.volumes:
            run = cfg.measure(p, v, n_jobs=n_jobs)
            records.append(
                SweepRecord(p, sp.probe.n_photons, sp.name, v, run.modulation.amplitude, run.summary, run.theory)
            )
    return SweepResult(cfg, tuple(records))


SWEEP_COLUMNS = (
    "probe_n", "volume", "floor", "floor_std", "peak", "snr_db",
    "theory_floor", "theory_peak", "theory_snr_db", "detectable",
)


def sweep_summary_csv(result: SweepResult) -> str:
    out = io.StringIO()
    out.write(",".join(SWEEP_COLUMNS) + "\n")
    for r in result.records:
        s, th = r.summary, r.theory
        out.write(
            ",".join([
                str(r.n_photons), _fmt(r.volume), _fmt(s.floor), _fmt(s.floor_std), _fmt(s.peak),
                _fmt(s.snr_db), _fmt(th.floor), _fmt(th.peak_value), _fmt(th.snr_db), str(s.detectable).lower(),
            ]) + "\n"
        )
    return out.getvalue()


@dataclass(frozen=True)
class Crossover:
    volume: float
    n_photons: int
    threshold_sigma: float
    trials: tuple = field(default_factory=tuple)


def _bisect_crossover(cfg: SweepConfig, probe_index: int, trial: int, rel_tol: float, n_jobs: int):
    """One bisection; returns ``(volume, censored)`` with censored in {None, "low", "high"}."""

    def detected(v):
        return cfg.measure(probe_index, v, trial, n_jobs).summary.detectable

    lo, hi = cfg.volumes[0], cfg.volumes[-1]
    if detected(lo):
        return lo, "low"
    if not detected(hi):
        return math.inf, "high"
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if detected(mid):
            hi = mid
        else:
            lo = mid
    return hi, None


def find_crossover(
    cfg: SweepConfig,
    probe_index: int = 0,
    n_trials: int = 1,
    rel_tol: float = 0.005,
    n_jobs: int = 1,
) -> Crossover:
    """Smallest volume at which the probe's line is detected, by bisection.

    The bracket is ``[min(volumes), max(volumes)]``. Near threshold the
    verdict rests on a single noisy bin, so one bisection scatters by roughly
    20 % in volume; ``n_trials`` independent bisections (fresh noise each)
    are combined by their median.

    A trial that already detects at the lower end (a chance false alarm, or
    a bracket that is too high) counts as the lower end; one that misses at
    the upper end counts as infinity. NoCrossoverError is raised only when
    such censored trials reach the median.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    results = [_bisect_crossover(cfg, probe_index, t, rel_tol, n_jobs) for t in range(n_trials)]
    trials = tuple(v for v, _ in results)
    low = sum(c == "low" for _, c in results)
    high = sum(c == "high" for _, c in results)
    if 2 * low >= n_trials:
        raise NoCrossoverError(
            f"probe {probe_index} is already detectable at the smallest volume {cfg.volumes[0]:g}"
            f" in {low} of {n_trials} trials"
        )
    if 2 * high >= n_trials:
        raise NoCrossoverError(
            f"probe {probe_index} is not detectable at the largest volume {cfg.volumes[-1]:g}"
            f" in {high} of {n_trials} trials"
        )
    return Crossover(
        float(np.median(trials)), cfg.probes[probe_index].probe.n_photons, cfg.threshold_sigma, trials
    )


# --------------------------------------------------------------------------
# Output helpers


def config_to_dict(obj) -> dict:
    """Dataclass config (possibly nested) as JSON-ready dict."""
    return json.loads(json.dumps(asdict(obj), default=_jsonable))


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serialisable: {type(x).__name__}")


def write_text(path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def write_manifest(path, manifest: dict) -> None:
    body = dict(manifest)
    body.setdefault("package_version", __version__)
    write_text(path, json.dumps(body, indent=2, sort_keys=True, default=_jsonable) + "\n")


def write_fig1_outputs(result: Fig1Result, out_dir) -> list:
    os.makedirs(out_dir, exist_ok=True)
    files = {
        "fig1_timetrace.csv": fig1_timetrace_csv(result),
        "fig1_psd.csv": fig1_psd_csv(result),
        "fig1_summary.csv": fig1_summary_csv(result),
    }
    for r in result.runs:
        files[f"fig1_counts_n{r.probe.n_photons}.csv"] = r.sample.to_csv()
    for name, text in files.items():
        write_text(os.path.join(out_dir, name), text)
    write_manifest(
        os.path.join(out_dir, "run_manifest.json"),
        {"command": "fig1", "config": config_to_dict(result.config), "seed_scheme": "splitmix64/PCG64",
         "realization_blocks": {f"N={r.probe.n_photons}": realization_block(i) for i, r in enumerate(result.runs)}},
    )
    return sorted(files) + ["run_manifest.json"]


def _crossover_record(c: Crossover) -> dict:
    # censored-high trials are infinite; JSON has no infinity, so they become null
    rec = config_to_dict(c)
    rec["trials"] = [t if math.isfinite(t) else None for t in c.trials]
    return rec


def write_sweep_outputs(result: SweepResult, out_dir, crossovers: Sequence[Crossover] = ()) -> list:
    os.makedirs(out_dir, exist_ok=True)
    write_text(os.path.join(out_dir, "sweep_summary.csv"), sweep_summary_csv(result))
    diffs = result.snr_differences() if len(result.config.probes) > 1 else {}
    write_manifest(
        os.path.join(out_dir, "run_manifest.json"),
        {
            "command": "sweep",
            "config": config_to_dict(result.config),
            "seed_scheme": "splitmix64/PCG64",
            "realization_blocks": {sp.name: realization_block(i) for i, sp in enumerate(result.config.probes)},
            "snr_difference_db": {_fmt(v): float(_fmt(d)) for v, d in diffs.items()},
            "crossovers": [_crossover_record(c) for c in crossovers],
        },
    )
    return ["sweep_summary.csv", "run_manifest.json"]
