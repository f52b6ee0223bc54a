"""Command-line interface: simulate, estimate, connectivity, compare.

Every subcommand reads/writes the formats in :mod:`specshrink.io`; all
numeric output goes to CSV files in ``--out-dir``.  On failure a single
diagnostic line is printed to stderr and the exit code is nonzero; output
files are written atomically, so failures never leave partial files.
"""

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import io as sio
from .connectivity import (apply_fdr, band_average, jackknife_band_stats,
                           pairwise_tests, partial_coherence)
from .core import FrequencyGrid
from .errors import DomainError, SpecshrinkError
from .multitaper import multitaper_estimator, select_taper_count
from .periodogram import mean_periodogram
from .shrinkage import PipelineOptions, shrinkage_pipeline
from .simulation import SimulationConfig, monte_carlo_compare, simulate_mixture
from .smoothing import SmoothingConfig, smoothed_estimator
from .timeseries import detrend, standardize
from .var import fit_var, select_var_order, var_spectrum

METHODS = ("raw_mean", "smoothed", "var", "multitaper", "shrinkage")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specshrink",
        description="Multivariate spectral estimation with shrinkage combination "
                    "of parametric and nonparametric estimators.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser(
        "simulate", help="generate the benchmark mixture dataset",
        description="Simulate the built-in 12-channel benchmark mixture process "
                    "(defaults: 120 trials of 256 samples at weights 0.65/0.35) "
                    "and write it as a binary trial-data file.")
    sim.add_argument("--trials", type=int, default=120, help="number of trials (default 120)")
    sim.add_argument("--samples", type=int, default=256, help="samples per trial (default 256)")
    sim.add_argument("--ma-weight", type=float, default=0.65,
                     help="weight of the moving-average part (default 0.65)")
    sim.add_argument("--ar-weight", type=float, default=0.35,
                     help="weight of the autoregressive part (default 0.35)")
    sim.add_argument("--burn-in", type=int, default=500,
                     help="discarded autoregressive start-up samples (default 500)")
    sim.add_argument("--sampling-rate", type=float, default=256.0,
                     help="sampling rate metadata in Hz (default 256)")
    sim.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    sim.add_argument("--out", required=True, help="output trial-data file")

    est = sub.add_parser(
        "estimate", help="estimate spectra from a trial-data file",
        description="Estimate the spectral density matrix and write "
                    "spectra.csv, cross_spectra.csv, and for the shrinkage method "
                    "weights.csv plus fit_report.txt.")
    _common_analysis_flags(est)
    est.add_argument("input", help="trial-data file (.mts binary or tidy .csv)")
    est.add_argument("--method", choices=METHODS, default=None,
                     help="estimator (default shrinkage)")
    est.add_argument("--tapers", type=int, default=None,
                     help="taper count for --method multitaper (default: risk-selected)")
    est.add_argument("--weight", type=float, default=None,
                     help="with --fixed: constant shrinkage weight in [0, 1]")
    est.add_argument("--fixed", action="store_true",
                     help="use the constant --weight instead of estimated weights")

    conn = sub.add_parser(
        "connectivity", help="band partial coherence and two-condition tests",
        description="Compute band-averaged partial coherence per condition; with two "
                    "input files, also jackknife each condition, Welch-test every "
                    "channel pair per band, and apply Benjamini-Hochberg FDR jointly "
                    "across all bands and pairs (tests.csv).")
    _common_analysis_flags(conn)
    conn.add_argument("inputs", nargs="+", help="one or two trial-data files")
    conn.add_argument("--band", action="append", default=None, metavar="NAME:LO:HI",
                      help="analysis band in Hz, repeatable (default alpha:8:12, beta:18:30)")
    conn.add_argument("--q", type=float, default=None,
                      help="FDR level for tests.csv (default 0.05)")

    comp = sub.add_parser(
        "compare", help="Monte Carlo estimator comparison on the benchmark process",
        description="Simulate replicate datasets of the benchmark mixture, run the "
                    "requested estimators, and write per-frequency mean squared error "
                    "curves (mse_spectral.csv, mse_pcoh.csv) and the mean shrinkage "
                    "weight curve (mean_weight.csv).")
    comp.add_argument("--reps", type=int, default=20, help="Monte Carlo replicates (default 20)")
    comp.add_argument("--seed", type=int, default=None, help="harness master seed (default 0)")
    comp.add_argument("--trials", type=int, default=120, help="trials per replicate (default 120)")
    comp.add_argument("--samples", type=int, default=256,
                      help="samples per trial (default 256)")
    comp.add_argument("--estimators", default="var,smoothed,multitaper,shrinkage",
                      help="comma-separated estimator list "
                           "(default var,smoothed,multitaper,shrinkage)")
    comp.add_argument("--windows", default=None,
                      help="comma-separated odd risk-window widths (default: the "
                           "configured window, 15 unless overridden)")
    comp.add_argument("--max-order", type=int, default=None,
                      help="largest candidate VAR order (default 8 for the harness)")
    comp.add_argument("--config", default=None, help="key = value configuration file")
    comp.add_argument("--out-dir", default=None, help="output directory (default .)")
    return parser


def _common_analysis_flags(sub):
    sub.add_argument("--config", default=None, help="key = value configuration file")
    sub.add_argument("--out-dir", default=None, help="output directory (default .)")
    sub.add_argument("--window", type=int, default=None,
                     help="odd risk-window width in Fourier bins (default 15)")
    sub.add_argument("--order", type=int, default=None,
                     help="fixed VAR order (default: selected by BIC)")
    sub.add_argument("--max-order", type=int, default=None,
                     help="largest candidate VAR order for BIC (default 10)")
    sub.add_argument("--fixed-span", type=int, default=None,
                     help="fixed smoothing span (default: per-trial risk selection)")
    sub.add_argument("--span-min", type=int, default=None,
                     help="smallest candidate smoothing span (default 3)")
    sub.add_argument("--span-max", type=int, default=None,
                     help="largest candidate smoothing span (default: automatic)")
    sub.add_argument("--detrend", choices=("none", "linear", "quadratic"), default="linear",
                     help="per-trial polynomial detrending (default linear)")
    sub.add_argument("--no-standardize", action="store_true",
                     help="skip per-trial, per-channel standardization")
    sub.add_argument("--sampling-rate", type=float, default=1.0,
                     help="sampling rate for CSV inputs, which carry none (default 1)")


def _load_config(args) -> sio.RunConfig:
    config = sio.read_config(args.config) if args.config else sio.RunConfig()
    overrides = {}
    for attr, key in (("window", "window"), ("max_order", "max_order"),
                      ("out_dir", "out_dir"), ("span_min", "span_min"),
                      ("span_max", "span_max"), ("seed", "seed")):
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "method", None) is not None:
        overrides["method"] = args.method
    if getattr(args, "q", None) is not None:
        overrides["fdr_q"] = args.q
    if getattr(args, "band", None):
        overrides["bands"] = sio.parse_bands(",".join(args.band))
    return replace(config, **overrides)


def _load_series(path, args):
    if str(path).endswith(".csv"):
        series = sio.read_trials_csv(path, sampling_rate=args.sampling_rate)
    else:
        series = sio.read_trials(path)
    if args.detrend != "none":
        series = detrend(series, order=1 if args.detrend == "linear" else 2)
    if not args.no_standardize:
        series = standardize(series)
    return series


def _pipeline_options(config: sio.RunConfig, args) -> PipelineOptions:
    return PipelineOptions(
        window=config.window,
        var_order=getattr(args, "order", None),
        max_order=config.max_order,
        span_grid=config.span_grid(),
        fixed_span=getattr(args, "fixed_span", None),
        fixed_weight=args.weight if getattr(args, "fixed", False) else None)


def _out_path(config: sio.RunConfig, name: str) -> str:
    os.makedirs(config.out_dir, exist_ok=True)
    return os.path.join(config.out_dir, name)


def cmd_simulate(args) -> int:
    config = SimulationConfig(n_trials=args.trials, n_samples=args.samples,
                              ma_weight=args.ma_weight, ar_weight=args.ar_weight,
                              burn_in=args.burn_in, seed=args.seed,
                              sampling_rate=args.sampling_rate)
    series = simulate_mixture(config)
    sio.write_trials(args.out, series)
    print(f"wrote {args.out}: n_trials={series.n_trials} n_channels={series.n_channels} "
          f"n_samples={series.n_samples} seed={args.seed}")
    return 0


def _spectra_rows(estimate, labels):
    hertz = estimate.grid.hertz
    for j in range(estimate.grid.n_frequencies):
        for p, label in enumerate(labels):
            yield hertz[j], label, estimate.matrices[j, p, p].real


def _cross_rows(estimate, labels):
    hertz = estimate.grid.hertz
    for j in range(estimate.grid.n_frequencies):
        for p in range(len(labels)):
            for q in range(p + 1, len(labels)):
                cell = estimate.matrices[j, p, q]
                yield hertz[j], labels[p], labels[q], cell.real, cell.imag


def cmd_estimate(args) -> int:
    config = _load_config(args)
    series = _load_series(args.input, args)
    if args.weight is not None and not args.fixed:
        raise DomainError("--weight requires --fixed")
    report_lines = []
    if config.method == "shrinkage":
        result = shrinkage_pipeline(series, _pipeline_options(config, args))
        estimate = result.estimate
        report_lines.append(f"var_order = {result.order}")
        report_lines.append("selected_spans = "
                            + ",".join(str(s) for s in result.smoothing.selected_spans))
        report_lines.append(f"window = {result.diagnostics.window}")
    elif config.method == "raw_mean":
        estimate = mean_periodogram(series)
    elif config.method == "smoothed":
        estimate, smoothing = smoothed_estimator(series, SmoothingConfig(
            span_grid=config.span_grid(), fixed_span=args.fixed_span))
        report_lines.append("selected_spans = "
                            + ",".join(str(s) for s in smoothing.selected_spans))
    elif config.method == "var":
        order = args.order if args.order is not None else \
            select_var_order(series, config.max_order).order
        estimate = var_spectrum(fit_var(series, order),
                                FrequencyGrid(series.n_samples, series.sampling_rate))
        report_lines.append(f"var_order = {order}")
    else:  # multitaper
        if args.tapers is not None:
            n_tapers = args.tapers
        else:
            grid = None if config.taper_max is None else tuple(range(1, config.taper_max + 1))
            n_tapers = select_taper_count(series, grid).median
        estimate = multitaper_estimator(series, n_tapers)
        report_lines.append(f"tapers = {n_tapers}")

    labels = series.channel_labels
    sio.write_csv(_out_path(config, "spectra.csv"),
                  ("frequency_hz", "channel", "value"), _spectra_rows(estimate, labels))
    sio.write_csv(_out_path(config, "cross_spectra.csv"),
                  ("frequency_hz", "channel_a", "channel_b", "real", "imag"),
                  _cross_rows(estimate, labels))
    if config.method == "shrinkage":
        diag = result.diagnostics
        rows = zip(estimate.grid.hertz, diag.param_risk, diag.nonparam_risk,
                   diag.separation, diag.weight_raw, diag.weight)
        sio.write_csv(_out_path(config, "weights.csv"),
                      ("frequency_hz", "alpha2", "beta2", "delta2", "w_raw", "w"), rows)
    if report_lines:
        sio.write_text(_out_path(config, "fit_report.txt"), "\n".join(report_lines) + "\n")
    print(f"estimated {config.method} spectra for {series.n_channels} channels "
          f"at {estimate.grid.n_frequencies} frequencies -> {config.out_dir}")
    return 0


def _matrix_rows(matrix, labels):
    for a in range(len(labels)):
        for b in range(len(labels)):
            yield labels[a], labels[b], matrix[a, b]


def cmd_connectivity(args) -> int:
    config = _load_config(args)
    if len(args.inputs) not in (1, 2):
        raise DomainError(f"expected one or two input files, got {len(args.inputs)}")
    conditions = [_load_series(path, args) for path in args.inputs]
    labels = conditions[0].channel_labels
    if len(conditions) == 2 and conditions[1].n_channels != conditions[0].n_channels:
        raise DomainError(
            f"conditions have different channel counts: {conditions[0].n_channels} "
            f"vs {conditions[1].n_channels}")
    options = _pipeline_options(config, args)
    suffixes = ("left", "right")

    per_condition = []
    for series in conditions:
        result = shrinkage_pipeline(series, options)
        per_condition.append(partial_coherence(result.estimate))
    for name, lo, hi in config.bands:
        for pcoh, suffix in zip(per_condition, suffixes):
            banded = band_average(pcoh, (lo, hi))
            stem = f"pcoh_{name}.csv" if len(conditions) == 1 else f"pcoh_{name}_{suffix}.csv"
            sio.write_csv(_out_path(config, stem),
                          ("channel_a", "channel_b", "value"),
                          _matrix_rows(banded.values, labels))

    if len(conditions) == 2:
        all_tests = []
        for name, lo, hi in config.bands:
            stats = [jackknife_band_stats(series, (lo, hi), options)
                     for series in conditions]
            all_tests.extend((name, test) for test in pairwise_tests(*stats))
        corrected = apply_fdr([test for _, test in all_tests], q=config.fdr_q)
        rows = [(f"{labels[test.channel_a]}-{labels[test.channel_b]}", band_name,
                 test.z_left, test.z_right, test.se_left, test.se_right,
                 test.t, test.p, test.rejected)
                for (band_name, _), test in zip(all_tests, corrected)]
        sio.write_csv(_out_path(config, "tests.csv"),
                      ("pair", "band", "z_left", "z_right", "se_left", "se_right",
                       "t", "p", "rejected"), rows)
        n_rejected = sum(test.rejected for test in corrected)
        print(f"{len(corrected)} tests across {len(config.bands)} bands, "
              f"{n_rejected} rejected at q={config.fdr_q} -> {config.out_dir}")
    else:
        print(f"band partial coherence for {len(config.bands)} bands -> {config.out_dir}")
    return 0


def cmd_compare(args) -> int:
    config = _load_config(args)
    estimators = tuple(s.strip() for s in args.estimators.split(",") if s.strip())
    if args.windows is not None:
        windows = tuple(int(w) for w in args.windows.split(","))
    else:
        windows = (config.window,)
    sim_config = SimulationConfig(n_trials=args.trials, n_samples=args.samples)
    result = monte_carlo_compare(
        config=sim_config, estimators=estimators, reps=args.reps,
        seed=config.seed, windows=windows,
        max_order=args.max_order if args.max_order is not None else 8,
        span_grid=config.span_grid())

    hertz = result.grid.hertz
    names = result.estimator_names
    for filename, curves in (("mse_spectral.csv", result.spectral_mse),
                             ("mse_pcoh.csv", result.pcoh_mse)):
        rows = ((hertz[j], *(curves[name][j] for name in names))
                for j in range(result.grid.n_frequencies))
        sio.write_csv(_out_path(config, filename), ("frequency_hz", *names), rows)
    weight_names = tuple(result.mean_weight)
    if weight_names:
        rows = ((hertz[j], *(result.mean_weight[name][j] for name in weight_names))
                for j in range(result.grid.n_frequencies))
        sio.write_csv(_out_path(config, "mean_weight.csv"),
                      ("frequency_hz", *weight_names), rows)
    print(f"{result.n_reps} replicates, estimators: {', '.join(names)} -> {config.out_dir}")
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "connectivity": cmd_connectivity,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (SpecshrinkError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
