"""Strict INI-style run configuration.

Grammar (see README for a full example)::

    [simulation]      duration, bin_rate, realizations, base_seed
    [fig1]            flux, mod_freq, amplitude, visibility, photon_numbers,
                      guard_bins, threshold_sigma
    [sweep]           volumes, amplitude_at_full, mod_freq, guard_bins,
                      threshold_sigma, crossover_trials
    [probe.<name>]    n_photons, total_flux, visibility, fringe_sign,
                      dark_rate, accidental_rate
    [output]          dir, verbosity

Every key is optional; unknown sections or keys are rejected. Lists are
comma separated. ``[probe.*]`` sections, if any, replace the built-in
experimental probes of the sweep, in file order.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import ConfigError
from .experiments import (
    DEFAULT_AMPLITUDE_AT_FULL,
    Fig1Config,
    SweepConfig,
    SweepProbe,
    experimental_sweep_config,
)
from .photon_sim import DetectorImperfections, SimulationConfig
from .probe_model import ProbeParams

_U64 = (1 << 64) - 1


def _float(s):
    return float(s)


def _int(s):
    return int(s, 10)


def _seed(s):
    v = int(s, 10)
    if not 0 <= v <= _U64:
        raise ValueError("must be an unsigned 64-bit integer")
    return v


def _floats(s):
    return tuple(float(x) for x in s.split(",") if x.strip())


def _ints(s):
    return tuple(int(x, 10) for x in s.split(",") if x.strip())


SCHEMA = {
    "simulation": {"duration": _float, "bin_rate": _float, "realizations": _int, "base_seed": _seed},
    "fig1": {
        "flux": _float, "mod_freq": _float, "amplitude": _float, "visibility": _float,
        "photon_numbers": _ints, "guard_bins": _int, "threshold_sigma": _float,
    },
    "sweep": {
        "volumes": _floats, "amplitude_at_full": _float, "mod_freq": _float, "guard_bins": _int,
        "threshold_sigma": _float, "crossover_trials": _int,
    },
    "probe": {
        "n_photons": _int, "total_flux": _float, "visibility": _float, "fringe_sign": _int,
        "dark_rate": _float, "accidental_rate": _float,
    },
    "output": {"dir": str, "verbosity": _int},
}


@dataclass
class RunConfig:
    """Parsed configuration: typed values per section, only the keys present."""

    simulation: dict = field(default_factory=dict)
    fig1: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    probes: list = field(default_factory=list)
    output: dict = field(default_factory=dict)

    @property
    def out_dir(self) -> str:
        return self.output.get("dir", "out")

    @property
    def verbosity(self) -> int:
        return self.output.get("verbosity", 1)

    def _sim(self, default: SimulationConfig, seed: Optional[int], realizations: Optional[int]) -> SimulationConfig:
        values = dict(self.simulation)
        if seed is not None:
            values["base_seed"] = seed
        if realizations is not None:
            values["realizations"] = realizations
        try:
            return replace(default, **values)
        except ValueError as exc:
            raise ConfigError(f"[simulation]: {exc}") from None

    def fig1_config(self, seed: Optional[int] = None, realizations: Optional[int] = None) -> Fig1Config:
        base = Fig1Config()
        sim = self._sim(base.sim, seed, realizations)
        try:
            cfg = replace(
                base, **self.fig1, duration=sim.duration, bin_rate=sim.bin_rate,
                realizations=sim.realizations, base_seed=sim.base_seed,
            )
            # validate eagerly so errors surface as config errors
            for n in cfg.photon_numbers:
                ProbeParams(n, cfg.flux, cfg.visibility)
        except ValueError as exc:
            raise ConfigError(f"[fig1]: {exc}") from None
        return cfg

    def sweep_config(self, seed: Optional[int] = None, realizations: Optional[int] = None) -> SweepConfig:
        base = experimental_sweep_config()
        sim = self._sim(base.sim, seed, realizations)
        values = {k: v for k, v in self.sweep.items() if k != "crossover_trials"}
        try:
            if self.probes:
                values["probes"] = tuple(self._probe(name, p) for name, p in self.probes)
            return replace(base, sim=sim, **values)
        except ValueError as exc:
            raise ConfigError(f"[sweep]: {exc}") from None

    @property
    def crossover_trials(self) -> int:
        return self.sweep.get("crossover_trials", 0)

    @staticmethod
    def _probe(name: str, p: dict) -> SweepProbe:
        try:
            probe = ProbeParams(
                p["n_photons"], p["total_flux"], p.get("visibility", 1.0), p.get("fringe_sign", 1)
            )
            imp = DetectorImperfections(p.get("dark_rate", 0.0), p.get("accidental_rate", 0.0))
        except KeyError as exc:
            raise ConfigError(f"[probe.{name}]: missing required key {exc.args[0]}") from None
        except ValueError as exc:
            raise ConfigError(f"[probe.{name}]: {exc}") from None
        return SweepProbe(probe, imp, name)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    parser = configparser.ConfigParser(
        interpolation=None, default_section="__never__", inline_comment_prefixes=("#", ";"), strict=True
    )
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    cfg = RunConfig()
    for section in parser.sections():
        kind, dot, name = section.partition(".")
        if kind not in SCHEMA or (kind == "probe") != bool(dot and name):
            raise ConfigError(f"{source}: unknown section [{section}]")
        schema = SCHEMA[kind]
        values = {}
        for key, raw in parser.items(section):
            if key not in schema:
                raise ConfigError(f"{source}: unknown key '{key}' in [{section}]")
            try:
                values[key] = schema[key](raw.strip())
            except ValueError as exc:
                raise ConfigError(f"{source}: bad value for '{key}' in [{section}]: {raw!r} ({exc})") from None
        if kind == "probe":
            cfg.probes.append((name, values))
        else:
            setattr(cfg, kind, values)
    return cfg


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, source=path)


__all__ = ["RunConfig", "parse_config", "load_config", "SCHEMA", "DEFAULT_AMPLITUDE_AT_FULL"]
