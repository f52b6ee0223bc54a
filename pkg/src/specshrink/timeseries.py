"""Multi-trial time series container and per-trial preprocessing."""

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateChannelError, DimensionError, DomainError, InsufficientDataError


@dataclass(frozen=True)
class MultiTrialSeries:
    """``n_trials`` independent records of ``n_channels`` over ``n_samples`` points.

    Attributes
    ----------
    values : ndarray
        Real data, shape ``(n_trials, n_channels, n_samples)``; coerced to
        float64 and treated as immutable.
    sampling_rate : float
        Samples per second.
    channel_labels : tuple of str
        One label per channel; defaults to ``ch00, ch01, ...``.
    """

    values: np.ndarray
    sampling_rate: float = 1.0
    channel_labels: tuple[str, ...] = ()

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=float)
        if vals.ndim != 3:
            raise DimensionError(f"values must be (n_trials, n_channels, n_samples), got {vals.shape}")
        n_trials, n_channels, n_samples = vals.shape
        if n_trials < 1 or n_channels < 1:
            raise DimensionError(f"need at least one trial and one channel, got {vals.shape}")
        if n_samples < 2:
            raise InsufficientDataError(f"need n_samples >= 2, got {n_samples}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("values contain NaN or infinity")
        if not self.sampling_rate > 0:
            raise DomainError(f"sampling_rate must be positive, got {self.sampling_rate}")
        labels = tuple(self.channel_labels) or tuple(f"ch{p:02d}" for p in range(n_channels))
        if len(labels) != n_channels:
            raise DimensionError(f"{len(labels)} labels for {n_channels} channels")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "channel_labels", labels)

    @property
    def n_trials(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    @property
    def n_samples(self) -> int:
        return self.values.shape[2]

    def drop_trial(self, index: int) -> "MultiTrialSeries":
        """A copy with one trial removed (for leave-one-out resampling)."""
        if not 0 <= index < self.n_trials:
            raise DimensionError(f"trial index {index} out of range [0, {self.n_trials})")
        if self.n_trials < 2:
            raise InsufficientDataError("cannot drop the only trial")
        keep = np.delete(self.values, index, axis=0)
        return replace(self, values=keep)


def detrend(series: MultiTrialSeries, order: int = 1) -> MultiTrialSeries:
    """Remove a per-trial, per-channel polynomial trend of the given degree.

    Degree 0 removes the mean, degree 1 a straight line, and so on.  The fit
    is an exact least-squares projection computed against an orthonormal
    polynomial basis in time, so polynomial inputs of degree <= ``order``
    come back as (numerical) zero.
    """
    if order < 0:
        raise DomainError(f"polynomial degree must be >= 0, got {order}")
    n_samples = series.n_samples
    if n_samples <= order + 1:
        raise InsufficientDataError(
            f"need n_samples > degree + 1 to detrend; got {n_samples} samples for degree {order}")
    # Orthonormal basis of polynomials on a centred time axis keeps the
    # projection well conditioned for high degrees.
    t = np.linspace(-1.0, 1.0, n_samples)
    basis = np.vander(t, order + 1, increasing=True)
    q, _ = np.linalg.qr(basis)
    coefs = series.values @ q            # (n_trials, n_channels, order + 1)
    fitted = coefs @ q.T
    return replace(series, values=series.values - fitted)


def standardize(series: MultiTrialSeries) -> MultiTrialSeries:
    """Scale each (trial, channel) record to zero mean and unit sample variance.

    Variance uses the ``n - 1`` divisor.  A constant record has no scale to
    normalise by and raises :class:`DegenerateChannelError` naming the first
    offending trial and channel.
    """
    vals = series.values
    spread = np.ptp(vals, axis=2)
    sd = np.std(vals, axis=2, ddof=1)
    bad = (spread == 0.0) | (sd == 0.0)
    if np.any(bad):
        trial, channel = np.argwhere(bad)[0]
        raise DegenerateChannelError(
            f"channel {series.channel_labels[channel]!r} is constant in trial {trial}; "
            "cannot standardize a zero-variance record")
    centred = vals - vals.mean(axis=2, keepdims=True)
    return replace(series, values=centred / sd[:, :, None])
