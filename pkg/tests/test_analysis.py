import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from noonpsd.analysis import (
    SpectralSummary,
    noise_floor,
    peak_height,
    snr,
    snr_theory,
)
from noonpsd.errors import DataError
from noonpsd.experiments import measure_probe, realization_block
from noonpsd.photon_sim import NO_IMPERFECTIONS, SimulationConfig
from noonpsd.probe_model import ModulationParams, ProbeParams
from noonpsd.spectral import Spectrum


def flat_spectrum(n=101, level=1.0, line_bin=None, line=100.0):
    psd = np.full(n, level)
    if line_bin is not None:
        psd[line_bin] = line
    return Spectrum(np.arange(n, dtype=float), psd, bin_rate=2.0 * (n - 1), n_bins=2 * (n - 1))


def cosine_spectrum(a=63.0, k=1000, f0=1e3, f=20.0):
    n = np.arange(k)
    x = 1000 + a * np.cos(2 * np.pi * f * n / f0)
    psd = np.abs(np.fft.rfft(x)) ** 2 / (k * f0)
    return Spectrum(np.fft.rfftfreq(k, 1 / f0), psd, bin_rate=f0, n_bins=k)


def test_floor_excludes_line_and_dc():
    s = flat_spectrum(line_bin=40)
    s.psd[0] = 1e6
    assert noise_floor(s, 40.0, 2) == (1.0, 0.0)
    assert noise_floor(s, 40.0, 0) == (1.0, 0.0)


def test_floor_needs_enough_bins():
    s = flat_spectrum(n=14)
    with pytest.raises(ValueError, match="bins left"):
        noise_floor(s, 6.0, 2)
    with pytest.raises(ValueError):
        noise_floor(flat_spectrum(), 6.0, -1)


def test_peak_height_cosine_oracle():
    s = cosine_spectrum()
    pk = peak_height(s, 20.0)
    assert pk.index == 20 and pk.frequency == 20.0
    assert pk.value == pytest.approx(992.25, rel=1e-9)
    assert peak_height(s, 20.4).index == 20
    with pytest.raises(ValueError):
        peak_height(s, 900.0)


def test_snr_summary_fields():
    s = flat_spectrum(line_bin=30, line=50.0)
    rng = np.random.default_rng(0)
    s.psd[1:30] *= rng.uniform(0.9, 1.1, 29)
    out = snr(s, 30.0)
    assert out.peak == 50.0 and out.peak_bin == 30
    assert out.snr == out.peak / out.floor
    assert out.snr_db == pytest.approx(10 * math.log10(out.snr))
    assert out.detectable and out.threshold_sigma == 3.0
    record = json.loads(out.to_json())
    assert set(record) == set(SpectralSummary.__dataclass_fields__)


def test_flat_spectrum_not_detectable():
    rng = np.random.default_rng(1)
    s = Spectrum(np.arange(501.0), rng.exponential(1.0, 501), bin_rate=1000.0, n_bins=1000)
    s.psd[100] = s.psd[1:].mean()
    assert not snr(s, 100.0).detectable


def test_zero_floor_is_data_error():
    s = Spectrum(np.arange(50.0), np.zeros(50), bin_rate=98.0, n_bins=98)
    with pytest.raises(DataError):
        snr(s, 10.0)


def test_snr_theory_examples():
    mod = ModulationParams.at_mid_fringe(1, 0.063, 20.0)
    p1 = ProbeParams(1, 2e6)
    assert snr_theory(p1, mod) == pytest.approx(992.25)
    assert snr_theory(ProbeParams(2, 2e6), mod) == pytest.approx(2 * 992.25)
    assert snr_theory(p1, ModulationParams(0.0, 20.0, math.pi / 2)) == 0.0
    assert snr_theory(ProbeParams(1, 2e6, 0.5), mod) == pytest.approx(992.25)
    assert snr_theory(ProbeParams(1, 2e6, 0.5), mod, include_visibility=True) == pytest.approx(992.25 / 4)


SIM = SimulationConfig(1.0, 1e3, 100, base_seed=21)


@pytest.mark.parametrize("n, v, amplitude", [(1, 1.0, 0.063), (2, 0.9, 0.02), (4, 0.8, 0.01)])
def test_monte_carlo_snr_matches_theory(n, v, amplitude):
    probe = ProbeParams(n, 2e6, v)
    mod = ModulationParams.at_mid_fringe(n, amplitude, 20.0)
    theory = snr_theory(probe, mod, include_visibility=True) * SIM.duration
    assert theory >= 10
    run = measure_probe(probe, NO_IMPERFECTIONS, mod, SIM, realization_block(n))
    assert run.summary.snr == pytest.approx(theory, rel=0.10)


def test_zero_modulation_peak_within_floor_band():
    probe = ProbeParams(1, 2e6)
    run = measure_probe(probe, NO_IMPERFECTIONS, ModulationParams.at_mid_fringe(1, 0.0, 20.0), SIM, 0)
    s = run.summary
    assert abs(s.peak - s.floor) < 3 * s.floor_std
    assert not s.detectable


def test_detectability_monotone_in_amplitude():
    probe = ProbeParams(1, 2e6)
    # line/floor ratios 0, 0.01, 0.05, 0.5, 2, 10 against a 3/sqrt(100) = 0.3 threshold
    ratios = np.array([0.0, 0.01, 0.05, 0.5, 2.0, 10.0])
    amplitudes = np.sqrt(ratios * 8 / 2e6)
    verdicts = [
        measure_probe(probe, NO_IMPERFECTIONS, ModulationParams.at_mid_fringe(1, a, 20.0), SIM, 0).summary.detectable
        for a in amplitudes
    ]
    assert verdicts == sorted(verdicts)
    assert verdicts[0] is False and verdicts[-1] is True


def test_floor_std_tracks_averaging():
    probe = ProbeParams(2, 2e6)
    mod = ModulationParams.at_mid_fringe(2, 0.063, 20.0)
    run = measure_probe(probe, NO_IMPERFECTIONS, mod, SIM, 0)
    # averaged exponential ordinates: std ~ floor / sqrt(M)
    assert_allclose(run.summary.floor_std, run.summary.floor / math.sqrt(SIM.realizations), rtol=0.1)
