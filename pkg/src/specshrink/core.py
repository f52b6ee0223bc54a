"""Shared foundations: frequency grids, spectral-matrix containers, matrix norms.

All estimators in this package produce a spectral density matrix per Fourier
frequency.  Only the closed half grid ``omega_j = 2*pi*j/T`` for
``j = 0 .. floor(T/2)`` is ever stored; values on the negative half circle
follow from conjugate symmetry, ``f(-omega) = conj(f(omega))``, and are
materialised on demand by :func:`extend_full_circle`.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionError, DomainError

#: Tags a spectral estimate may carry, identifying how it was produced.
ESTIMATOR_TAGS = ("raw_mean", "smoothed", "var", "multitaper", "shrinkage", "truth")

#: Default relative tolerance for Hermitian-deviation checks.
HERMITIAN_RTOL = 1e-10
#: Default relative tolerance (against the trace) for eigenvalue positivity checks.
PSD_RTOL = 1e-8


@dataclass(frozen=True)
class FrequencyGrid:
    """The discrete Fourier frequencies of a length-``n_samples`` record.

    Frequencies are ``omega_j = 2*pi*j / n_samples`` radians per sample for
    ``j = 0 .. floor(n_samples/2)``, i.e. the closed interval ``[0, pi]``.

    Parameters
    ----------
    n_samples : int
        Record length ``T``; must be at least 2.
    sampling_rate : float, optional
        Samples per second.  Only needed to express frequencies in hertz.
    """

    n_samples: int
    sampling_rate: float | None = None

    def __post_init__(self):
        if self.n_samples < 2:
            raise DimensionError(f"need n_samples >= 2, got {self.n_samples}")
        if self.sampling_rate is not None and not self.sampling_rate > 0:
            raise DomainError(f"sampling_rate must be positive, got {self.sampling_rate}")

    @property
    def n_frequencies(self) -> int:
        """Number of stored frequencies, ``floor(n_samples/2) + 1``."""
        return self.n_samples // 2 + 1

    @cached_property
    def omegas(self) -> np.ndarray:
        """Angular frequencies in radians per sample, shape ``(n_frequencies,)``."""
        out = 2.0 * np.pi * np.arange(self.n_frequencies) / self.n_samples
        out.flags.writeable = False
        return out

    @cached_property
    def hertz(self) -> np.ndarray:
        """Frequencies in Hz; requires ``sampling_rate``."""
        if self.sampling_rate is None:
            raise DomainError("grid has no sampling_rate; frequencies in Hz are undefined")
        out = self.omegas * self.sampling_rate / (2.0 * np.pi)
        out.flags.writeable = False
        return out

    def __len__(self) -> int:
        return self.n_frequencies


def symmetrize(matrices: np.ndarray) -> np.ndarray:
    """Return the Hermitian part ``(A + A^*) / 2``, batched over leading axes."""
    matrices = np.asarray(matrices)
    if matrices.ndim < 2 or matrices.shape[-1] != matrices.shape[-2]:
        raise DimensionError(f"expected square matrices, got shape {matrices.shape}")
    return 0.5 * (matrices + np.conj(np.swapaxes(matrices, -1, -2)))


def hs_norm_sq(matrices: np.ndarray) -> np.ndarray | float:
    """Normalised squared Hilbert-Schmidt norm, ``tr(A A^*) / P``.

    The normalisation by the matrix dimension ``P`` makes the norm of the
    identity equal to 1 regardless of dimension, so risk quantities are
    comparable across channel counts.

    Parameters
    ----------
    matrices : array_like
        One square matrix ``(P, P)`` or a batch ``(..., P, P)``.

    Returns
    -------
    float or ndarray
        Nonnegative real norm(s); a scalar for a single matrix, an array of
        the leading batch shape otherwise.
    """
    matrices = np.asarray(matrices)
    if matrices.ndim < 2 or matrices.shape[-1] != matrices.shape[-2]:
        raise DimensionError(f"expected square matrices, got shape {matrices.shape}")
    p = matrices.shape[-1]
    out = np.sum(np.abs(matrices) ** 2, axis=(-2, -1)) / p
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ValidationReport:
    """Numerical health of one or more spectral matrices.

    ``min_eigenvalue`` is the smallest eigenvalue of the Hermitian part
    ``(A + A^*)/2``, minimised over the batch.  Tolerances are relative:
    Hermitian deviation is compared against the largest matrix entry, the
    eigenvalue floor against the largest trace.
    """

    hermitian_deviation: float
    min_eigenvalue: float
    scale: float
    max_trace: float
    hermitian_rtol: float = HERMITIAN_RTOL
    psd_rtol: float = PSD_RTOL

    @property
    def hermitian_ok(self) -> bool:
        return self.hermitian_deviation <= self.hermitian_rtol * max(self.scale, 1e-300)

    @property
    def psd_ok(self) -> bool:
        return self.min_eigenvalue >= -self.psd_rtol * max(self.max_trace, 1e-300)

    @property
    def ok(self) -> bool:
        return self.hermitian_ok and self.psd_ok


def validate_spectral(matrices: np.ndarray,
                      hermitian_rtol: float = HERMITIAN_RTOL,
                      psd_rtol: float = PSD_RTOL) -> ValidationReport:
    """Check Hermitian symmetry and positive semidefiniteness.

    Parameters
    ----------
    matrices : array_like
        A single ``(P, P)`` matrix or a batch ``(..., P, P)``.
    hermitian_rtol, psd_rtol : float
        Relative tolerances recorded in the report.

    Returns
    -------
    ValidationReport
        Worst-case deviations over the batch plus pass/fail flags.
    """
    matrices = np.asarray(matrices, dtype=complex)
    if matrices.ndim < 2 or matrices.shape[-1] != matrices.shape[-2]:
        raise DimensionError(f"expected square matrices, got shape {matrices.shape}")
    conj_t = np.conj(np.swapaxes(matrices, -1, -2))
    deviation = float(np.max(np.abs(matrices - conj_t))) if matrices.size else 0.0
    scale = float(np.max(np.abs(matrices))) if matrices.size else 0.0
    herm = 0.5 * (matrices + conj_t)
    eigs = np.linalg.eigvalsh(herm)
    min_eig = float(np.min(eigs))
    max_trace = float(np.max(np.abs(np.trace(herm, axis1=-2, axis2=-1).real)))
    return ValidationReport(hermitian_deviation=deviation, min_eigenvalue=min_eig,
                            scale=scale, max_trace=max_trace,
                            hermitian_rtol=hermitian_rtol, psd_rtol=psd_rtol)


@dataclass(frozen=True)
class SpectralEstimate:
    """A spectral density matrix per frequency of a :class:`FrequencyGrid`.

    Attributes
    ----------
    grid : FrequencyGrid
        The frequencies the matrices live on.
    matrices : ndarray
        Complex array of shape ``(n_frequencies, P, P)``.
    tag : str
        Which estimator produced this; one of :data:`ESTIMATOR_TAGS`.
    """

    grid: FrequencyGrid
    matrices: np.ndarray
    tag: str = "raw_mean"

    def __post_init__(self):
        mats = np.ascontiguousarray(self.matrices, dtype=complex)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise DimensionError(f"matrices must be (n_freq, P, P), got {mats.shape}")
        if mats.shape[0] != self.grid.n_frequencies:
            raise DimensionError(
                f"{mats.shape[0]} matrices for a grid of {self.grid.n_frequencies} frequencies")
        if self.tag not in ESTIMATOR_TAGS:
            raise DomainError(f"unknown estimator tag {self.tag!r}; expected one of {ESTIMATOR_TAGS}")
        if not np.all(np.isfinite(mats.view(float))):
            raise DomainError("spectral matrices contain non-finite entries")
        object.__setattr__(self, "matrices", mats)

    @property
    def n_channels(self) -> int:
        return self.matrices.shape[1]

    def validate(self, hermitian_rtol: float = HERMITIAN_RTOL,
                 psd_rtol: float = PSD_RTOL) -> ValidationReport:
        """Worst-case Hermitian/PSD report over all frequencies."""
        return validate_spectral(self.matrices, hermitian_rtol, psd_rtol)

    def full_circle(self) -> np.ndarray:
        """Matrices on all ``n_samples`` Fourier frequencies via conjugate symmetry."""
        return extend_full_circle(self.matrices, self.grid.n_samples)


def exact_sum(stack: np.ndarray) -> np.ndarray:
    """Sum an array over its first axis with exactly rounded accumulation.

    Uses ``math.fsum`` per element, so the result is independent of the
    order of the summands.  This is what makes trial-order permutation
    invariance bit-exact in the estimators that advertise it.
    """
    arr = np.asarray(stack, dtype=float)
    if arr.ndim < 1:
        raise DimensionError("exact_sum needs at least one axis to reduce over")
    flat = arr.reshape(arr.shape[0], -1)
    out = np.fromiter((math.fsum(col) for col in flat.T), dtype=float, count=flat.shape[1])
    return out.reshape(arr.shape[1:])


def extend_full_circle(matrices: np.ndarray, n_samples: int) -> np.ndarray:
    """Extend half-grid matrices to the full circle of ``n_samples`` frequencies.

    Index ``j`` of the result holds the value at ``2*pi*j/n_samples`` for
    ``j = 0 .. n_samples - 1``; entries above the half grid are filled with
    ``conj(matrices[n_samples - j])``.

    Parameters
    ----------
    matrices : ndarray
        Shape ``(floor(n_samples/2) + 1, P, P)``.
    n_samples : int
        Full circle length ``T``.

    Returns
    -------
    ndarray
        Shape ``(n_samples, P, P)``.
    """
    matrices = np.asarray(matrices, dtype=complex)
    n_half = n_samples // 2 + 1
    if matrices.ndim != 3 or matrices.shape[0] != n_half:
        raise DimensionError(
            f"expected {n_half} half-grid matrices for n_samples={n_samples}, "
            f"got shape {matrices.shape}")
    out = np.empty((n_samples,) + matrices.shape[1:], dtype=complex)
    out[:n_half] = matrices
    out[n_half:] = np.conj(matrices[1:n_samples - n_half + 1][::-1])
    return out
