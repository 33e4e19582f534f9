"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error,
4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .analysis import DEFAULT_GUARD_BINS, DEFAULT_THRESHOLD_SIGMA, snr
from .config import load_config
from .errors import ConfigError, DataError, NoCrossoverError
from .experiments import fig1_theory, find_crossover, volume_sweep, write_fig1_outputs, write_sweep_outputs
from .photon_sim import read_counts_csv
from .spectral import periodogram

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4

log = logging.getLogger("noonpsd")


class InvariantViolation(RuntimeError):
    pass


def _u64(text: str) -> int:
    v = int(text, 10)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    v = int(text, 10)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _setup_logging(quiet: bool, verbosity: int):
    level = logging.WARNING if quiet or verbosity <= 0 else (logging.DEBUG if verbosity >= 2 else logging.INFO)
    logging.basicConfig(level=level, format="%(message)s", stream=sys.stderr, force=True)


def _check_summary(summary):
    if not (summary.floor > 0 and np.isclose(summary.snr, summary.peak / summary.floor, rtol=1e-12)):
        raise InvariantViolation(f"inconsistent summary {summary}")


def cmd_fig1(args) -> int:
    run = load_config(args.config)
    _setup_logging(args.quiet, run.verbosity)
    cfg = run.fig1_config(args.seed, args.realizations)
    out = args.out or run.out_dir
    log.info("fig1: N=%s, %d realizations, seed %d", cfg.photon_numbers, cfg.realizations, cfg.base_seed)
    result = fig1_theory(cfg)
    for r in result.runs:
        _check_summary(r.summary)
        log.info(
            "  N=%d floor %.2f dB  peak %.2f dB  SNR %.2f dB",
            r.probe.n_photons, 10 * np.log10(r.summary.floor), 10 * np.log10(r.summary.peak), r.summary.snr_db,
        )
    for name in write_fig1_outputs(result, out):
        log.info("wrote %s/%s", out, name)
    return EXIT_OK


def cmd_sweep(args) -> int:
    run = load_config(args.config)
    _setup_logging(args.quiet, run.verbosity)
    cfg = run.sweep_config(args.seed, args.realizations)
    out = args.out or run.out_dir
    trials = args.crossover_trials if args.crossover_trials is not None else run.crossover_trials
    log.info("sweep: %d volumes x %d probes, %d realizations", len(cfg.volumes), len(cfg.probes), cfg.sim.realizations)
    result = volume_sweep(cfg)
    for r in result.records:
        _check_summary(r.summary)
    if len(cfg.probes) > 1:
        for v, d in result.snr_differences().items():
            log.info("  volume %.3g: SNR difference %.2f dB", v, d)
    crossovers = []
    if trials > 0:
        for p in range(len(cfg.probes)):
            c = find_crossover(cfg, p, n_trials=trials)
            log.info("  crossover %s: volume %.4g (%.1f sigma)", cfg.probes[p].name, c.volume, c.threshold_sigma)
            crossovers.append(c)
    for name in write_sweep_outputs(result, out, crossovers):
        log.info("wrote %s/%s", out, name)
    return EXIT_OK


def cmd_analyze(args) -> int:
    _setup_logging(args.quiet, 1)
    try:
        series = read_counts_csv(args.counts)
    except OSError as exc:
        raise DataError(f"cannot read {args.counts}: {exc.strerror}") from None
    try:
        summary = snr(periodogram(series), args.peak_freq, args.guard_bins, args.threshold_sigma)
    except DataError:
        raise
    except ValueError as exc:
        raise DataError(str(exc)) from None
    _check_summary(summary)
    print(summary.to_json())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noonpsd", description="Photon-counting PSD simulator for N00N probes.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", help="INI run configuration")
        p.add_argument("--seed", type=_u64, metavar="U64", help="override [simulation] base_seed")
        p.add_argument("--out", metavar="DIR", help="output directory (default: [output] dir or ./out)")
        p.add_argument("--realizations", type=_positive_int, metavar="M", help="spectra averaged per point")
        p.add_argument("--quiet", action="store_true", help="log warnings only")

    p = sub.add_parser("fig1", help="same-flux comparison of N = 1, 2, 4 probes")
    common(p)
    p.set_defaults(func=cmd_fig1)

    p = sub.add_parser("sweep", help="volume sweep of singles vs coincidences")
    common(p)
    p.add_argument("--crossover-trials", type=int, metavar="T", help="bisection trials per probe (0 = skip)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="summarise a bin_index,count CSV file")
    p.add_argument("counts", metavar="COUNTS_CSV", help="count file as written by fig1")
    p.add_argument("--peak-freq", type=float, required=True, metavar="HZ", help="frequency of the expected line")
    p.add_argument("--guard-bins", type=int, default=DEFAULT_GUARD_BINS, metavar="G",
                   help=f"bins either side of the line left out of the floor (default {DEFAULT_GUARD_BINS})")
    p.add_argument("--threshold-sigma", type=float, default=DEFAULT_THRESHOLD_SIGMA, metavar="K",
                   help=f"detection threshold in floor standard deviations (default {DEFAULT_THRESHOLD_SIGMA:g})")
    p.add_argument("--quiet", action="store_true", help="log warnings only")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, NoCrossoverError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
