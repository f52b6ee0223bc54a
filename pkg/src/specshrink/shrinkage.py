"""Frequency-wise shrinkage combination of parametric and nonparametric spectra.

At each frequency the combined estimator is the convex combination

    combined(w) = weight(w) * parametric(w) + (1 - weight(w)) * nonparametric(w),

where the parametric term is a fitted VAR spectrum and the nonparametric
term a smoothed periodogram.  The weight minimizes an estimated quadratic
risk built from three windowed distance curves, each a mean of squared
Hilbert-Schmidt distances over ``window`` consecutive Fourier frequencies
(wrapped around the conjugate-symmetric full circle):

* the parametric estimator's distance to the mean-periodogram pilot,
* the nonparametric estimator's distance to the same pilot,
* the separation between the two estimators.

The raw weight is ``(nonparam_risk - 0.5*(param_risk + nonparam_risk -
separation)) / separation``, truncated to [0, 1]; a zero separation
(identical estimators over the window) yields weight 0, favouring the
nonparametric estimator, though the combination is then invariant anyway.
"""

from dataclasses import dataclass

import numpy as np

from .core import FrequencyGrid, SpectralEstimate, hs_norm_sq
from .errors import (DimensionError, DomainError, InsufficientDataError,
                     SpecshrinkError, PipelineError)
from .periodogram import PeriodogramSet, compute_periodograms
from .smoothing import SmoothingConfig, smoothed_estimator
from .timeseries import MultiTrialSeries
from .var import VarModel, fit_var, select_var_order, var_spectrum

#: Default risk-window width (odd number of Fourier bins).
DEFAULT_WINDOW = 15


def _validate_window(window: int, n_samples: int):
    if not isinstance(window, (int, np.integer)) or window < 1 or window % 2 == 0:
        raise DomainError(f"risk window must be an odd integer >= 1, got {window!r}")
    if window >= n_samples:
        raise DomainError(
            f"risk window {window} does not fit a full circle of {n_samples} frequencies")


def _same_grid(a: SpectralEstimate, b: SpectralEstimate):
    if a.grid.n_samples != b.grid.n_samples or a.n_channels != b.n_channels:
        raise DimensionError(
            f"estimates are not comparable: ({a.grid.n_samples} samples, {a.n_channels} channels)"
            f" vs ({b.grid.n_samples} samples, {b.n_channels} channels)")


def _window_indices(window: int, grid: FrequencyGrid) -> np.ndarray:
    """Full-circle indices of each half-grid frequency's window, shape (n_freq, window)."""
    half = (window - 1) // 2
    offsets = np.arange(-half, half + 1)
    return (np.arange(grid.n_frequencies)[:, None] + offsets[None, :]) % grid.n_samples


def _windowed_distance(point: np.ndarray, other_full: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Mean over the window of ``||point(w) - other(w + w_k)||^2`` per frequency."""
    return hs_norm_sq(point[:, None, :, :] - other_full[idx]).mean(axis=1)


def risk_vs_pilot(estimate: SpectralEstimate, pilot: SpectralEstimate, window: int) -> np.ndarray:
    """Windowed mean squared distance from an estimator to the pilot.

    At each frequency ``w`` this is the mean over the window offsets ``w_k``
    of ``||estimate(w) - pilot(w + w_k)||^2`` (normalized Hilbert-Schmidt),
    with the pilot extended to the full circle by conjugate symmetry.
    For the parametric estimator this acts as a plug-in bias-plus-variance
    proxy; for the nonparametric estimator it is a local sample variance.

    Returns a nonnegative array of length ``n_frequencies``.
    """
    _same_grid(estimate, pilot)
    _validate_window(window, estimate.grid.n_samples)
    idx = _window_indices(window, estimate.grid)
    return _windowed_distance(estimate.matrices, pilot.full_circle(), idx)


def estimator_separation(first: SpectralEstimate, second: SpectralEstimate,
                         window: int) -> np.ndarray:
    """Symmetrized windowed mean squared distance between two estimators.

    Averages the two one-sided windowed distances (each estimator measured
    against the other's conjugate-extended window), so the result is exactly
    symmetric in its arguments.  Zero wherever the estimators agree over the
    whole window.
    """
    _same_grid(first, second)
    _validate_window(window, first.grid.n_samples)
    idx = _window_indices(window, first.grid)
    one = _windowed_distance(first.matrices, second.full_circle(), idx)
    other = _windowed_distance(second.matrices, first.full_circle(), idx)
    return 0.5 * (one + other)


def shrinkage_weight(param_risk, nonparam_risk, separation):
    """Risk-minimizing weight on the parametric estimator, raw and truncated.

    Parameters
    ----------
    param_risk, nonparam_risk, separation : float or ndarray
        Nonnegative, finite risk curves (broadcast together).

    Returns
    -------
    (raw, weight)
        ``raw = (nonparam_risk - 0.5*(param_risk + nonparam_risk - separation))
        / separation`` and ``weight = clip(raw, 0, 1)``.  Where
        ``separation == 0`` both are defined as 0.  Scalars in give floats
        back.
    """
    arrays = [np.asarray(a, dtype=float) for a in (param_risk, nonparam_risk, separation)]
    for arr, name in zip(arrays, ("param_risk", "nonparam_risk", "separation")):
        if not np.all(np.isfinite(arr)):
            raise DomainError(f"{name} contains non-finite values")
        if np.any(arr < 0):
            raise DomainError(f"{name} must be nonnegative")
    param, nonparam, sep = np.broadcast_arrays(*arrays)
    raw = np.zeros(sep.shape)
    np.divide(nonparam - 0.5 * (param + nonparam - sep), sep,
              out=raw, where=sep > 0)
    weight = np.clip(raw, 0.0, 1.0)
    if raw.ndim == 0:
        return float(raw), float(weight)
    return raw, weight


@dataclass(frozen=True)
class ShrinkageDiagnostics:
    """Per-frequency risk terms and weights behind a combined estimate.

    ``weight`` is exactly ``clip(weight_raw, 0, 1)``; the raw curve is kept
    so truncation can be inspected.
    """

    grid: FrequencyGrid
    window: int
    param_risk: np.ndarray
    nonparam_risk: np.ndarray
    separation: np.ndarray
    weight_raw: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        n = self.grid.n_frequencies
        for name in ("param_risk", "nonparam_risk", "separation", "weight_raw", "weight"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise DimensionError(f"{name} must have shape ({n},), got {arr.shape}")
            object.__setattr__(self, name, arr)
        _validate_window(self.window, self.grid.n_samples)
        for name in ("param_risk", "nonparam_risk", "separation"):
            if np.any(getattr(self, name) < 0):
                raise DomainError(f"{name} must be nonnegative")
        if not np.array_equal(self.weight, np.clip(self.weight_raw, 0.0, 1.0)):
            raise DomainError("weight must equal weight_raw truncated to [0, 1]")


def shrinkage_diagnostics(parametric: SpectralEstimate, nonparametric: SpectralEstimate,
                          pilot: SpectralEstimate, window: int = DEFAULT_WINDOW,
                          ) -> ShrinkageDiagnostics:
    """Compute all risk curves and weights for a pair of estimators."""
    _same_grid(parametric, nonparametric)
    _same_grid(parametric, pilot)
    param_risk = risk_vs_pilot(parametric, pilot, window)
    nonparam_risk = risk_vs_pilot(nonparametric, pilot, window)
    separation = estimator_separation(parametric, nonparametric, window)
    raw, weight = shrinkage_weight(param_risk, nonparam_risk, separation)
    return ShrinkageDiagnostics(grid=parametric.grid, window=window,
                                param_risk=param_risk, nonparam_risk=nonparam_risk,
                                separation=separation, weight_raw=raw, weight=weight)


def combine_estimates(parametric: SpectralEstimate, nonparametric: SpectralEstimate,
                      weight) -> SpectralEstimate:
    """Frequency-wise convex combination of two spectral estimates.

    ``weight`` is the per-frequency coefficient on the parametric estimate
    and must lie in [0, 1] exactly.  With weight identically 1 (or 0) the
    result equals the parametric (or nonparametric) input exactly.
    """
    _same_grid(parametric, nonparametric)
    w = np.asarray(weight, dtype=float)
    if w.ndim == 0:
        w = np.full(parametric.grid.n_frequencies, float(w))
    if w.shape != (parametric.grid.n_frequencies,):
        raise DimensionError(
            f"weight must be scalar or shape ({parametric.grid.n_frequencies},), got {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w < 0.0) or np.any(w > 1.0):
        raise DomainError("weights must lie in [0, 1]")
    mats = (w[:, None, None] * parametric.matrices
            + (1.0 - w)[:, None, None] * nonparametric.matrices)
    return SpectralEstimate(parametric.grid, mats, tag="shrinkage")


@dataclass(frozen=True)
class PipelineOptions:
    """Tuning knobs for :func:`shrinkage_pipeline`.

    ``var_order=None`` selects the order by BIC up to ``max_order``;
    ``fixed_span`` bypasses per-trial span selection; ``fixed_weight``
    bypasses risk estimation entirely and combines with a constant weight.
    """

    window: int = DEFAULT_WINDOW
    var_order: int | None = None
    max_order: int = 10
    span_grid: tuple[int, ...] | None = None
    fixed_span: int | None = None
    fixed_weight: float | None = None

    def __post_init__(self):
        if self.fixed_weight is not None and not 0.0 <= self.fixed_weight <= 1.0:
            raise DomainError(f"fixed_weight must lie in [0, 1], got {self.fixed_weight}")
        if self.var_order is not None and self.var_order < 1:
            raise DomainError(f"var_order must be >= 1, got {self.var_order}")


@dataclass(frozen=True)
class PipelineResult:
    """Everything the shrinkage pipeline produced, kept for audit.

    ``estimate`` is the combined spectral estimate; the parametric and
    nonparametric inputs, the pilot, the fitted VAR model and order, the
    smoothing record, and the weight diagnostics are all retained.
    """

    estimate: SpectralEstimate
    diagnostics: ShrinkageDiagnostics
    model: VarModel
    order: int
    parametric: SpectralEstimate
    nonparametric: SpectralEstimate
    pilot: SpectralEstimate
    smoothing: SmoothingConfig


def shrinkage_pipeline(series: MultiTrialSeries,
                       options: PipelineOptions | None = None) -> PipelineResult:
    """Run the whole estimation chain on multi-trial data.

    Stages: periodograms -> VAR order selection and fit -> VAR spectrum;
    per-trial span selection -> smoothed periodogram; windowed risk curves
    -> weights -> combined estimate.  Domain errors raised inside a stage
    are re-raised as :class:`PipelineError` naming that stage.
    """
    opts = options if options is not None else PipelineOptions()
    if series.n_trials < 2:
        raise InsufficientDataError(
            f"the shrinkage pipeline needs at least two trials, got {series.n_trials}")

    def stage(name, func):
        try:
            return func()
        except SpecshrinkError as err:
            raise PipelineError(name, str(err)) from err

    pgrams: PeriodogramSet = stage("periodogram", lambda: compute_periodograms(series))
    if opts.var_order is not None:
        order = opts.var_order
    else:
        order = stage("order_selection",
                      lambda: select_var_order(series, opts.max_order)).order
    model = stage("var_fit", lambda: fit_var(series, order))
    parametric = stage("var_spectrum", lambda: var_spectrum(model, pgrams.grid))
    nonparametric, smoothing = stage("smoothing", lambda: smoothed_estimator(
        series, SmoothingConfig(span_grid=opts.span_grid, fixed_span=opts.fixed_span),
        periodograms=pgrams))
    diagnostics = stage("weights", lambda: shrinkage_diagnostics(
        parametric, nonparametric, pgrams.mean, opts.window))
    if opts.fixed_weight is not None:
        const = np.full(pgrams.grid.n_frequencies, opts.fixed_weight)
        diagnostics = ShrinkageDiagnostics(
            grid=diagnostics.grid, window=diagnostics.window,
            param_risk=diagnostics.param_risk, nonparam_risk=diagnostics.nonparam_risk,
            separation=diagnostics.separation, weight_raw=const,
            weight=np.clip(const, 0.0, 1.0))
    estimate = stage("combine", lambda: combine_estimates(
        parametric, nonparametric, diagnostics.weight))
    return PipelineResult(estimate=estimate, diagnostics=diagnostics, model=model,
                          order=order, parametric=parametric, nonparametric=nonparametric,
                          pilot=pgrams.mean, smoothing=smoothing)
