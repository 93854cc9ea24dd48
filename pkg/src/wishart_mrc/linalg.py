"""Hermitian linear algebra helpers and eigenvalue spectra."""

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DefinitenessError, DegenerateSpectrumError, DomainError, ShapeError

DEGENERACY_RTOL = 1e-9
PERTURBATION_STEP = 1e-7


class DegenerateSpectrumWarning(UserWarning):
    """Emitted when near-coincident eigenvalues are split apart."""


def _as_square(a):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ShapeError("matrix has non-finite entries")
    return a


def _check_hermitian(a, rtol=1e-12):
    scale = np.linalg.norm(a)
    if np.linalg.norm(a - a.conj().T) > rtol * max(scale, np.finfo(float).tiny):
        raise ShapeError("matrix is not Hermitian")


def min_relative_gap(values):
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return math.inf
    return float(np.min(np.diff(values) / np.abs(values[1:])))


@dataclass(frozen=True)
class EigenSpectrum:
    """Strictly ascending positive eigenvalues.

    ``multiplicity_guard`` is the smallest relative gap observed *before*
    any degeneracy handling; ``perturbed`` records whether the values were
    split apart.
    """

    values: tuple
    multiplicity_guard: float = math.inf
    perturbed: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size == 0:
            raise DomainError("spectrum must be a non-empty 1-d sequence")
        if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
            raise DefinitenessError(f"spectrum values must be positive: {vals}")
        if np.any(np.diff(vals) <= 0):
            raise DegenerateSpectrumError(f"spectrum not strictly ascending: {vals}")
        object.__setattr__(self, "values", tuple(float(v) for v in vals))

    @classmethod
    def from_values(cls, values, strict=False):
        """Sort ``values`` and apply the degeneracy policy.

        Below a relative gap of ``DEGENERACY_RTOL`` the i-th sorted value is
        scaled by ``1 + i * PERTURBATION_STEP`` (with a warning), or a
        :class:`DegenerateSpectrumError` is raised when ``strict``.
        """
        vals = np.sort(np.asarray(values, dtype=float).ravel())
        if vals.size and np.any(vals <= 0):
            raise DefinitenessError(f"spectrum values must be positive: {vals}")
        gap = min_relative_gap(vals)
        if gap >= DEGENERACY_RTOL:
            return cls(tuple(vals), gap, False)
        if strict:
            raise DegenerateSpectrumError(
                f"eigenvalues coincide (min relative gap {gap:.3g})"
            )
        warnings.warn(
            f"near-coincident eigenvalues (min relative gap {gap:.3g}); "
            f"perturbing by relative steps of {PERTURBATION_STEP:g}",
            DegenerateSpectrumWarning,
            stacklevel=2,
        )
        bumped = np.sort(vals * (1.0 + PERTURBATION_STEP * np.arange(vals.size)))
        return cls(tuple(bumped), gap, True)

    @classmethod
    def from_matrix(cls, a, strict=False):
        values, _ = hermitian_eig(a, require_pd=True)
        return cls.from_values(values, strict=strict)

    def __len__(self):
        return len(self.values)

    @property
    def array(self):
        return np.asarray(self.values)

    def det(self):
        return float(np.prod(self.values))

    def scaled(self, c):
        return EigenSpectrum(tuple(c * v for v in self.values), self.multiplicity_guard)


def hermitian_eig(a, require_pd=False):
    """Eigen-decomposition ``A = U diag(w) U^H`` with ``w`` ascending."""
    a = _as_square(a)
    _check_hermitian(a)
    w, u = np.linalg.eigh(a)
    if require_pd and np.any(w <= 0):
        raise DefinitenessError(f"matrix is not positive definite (min eig {w[0]:.3g})")
    return w, u


def hermitian_sqrt_psd(a):
    """Principal square root of a Hermitian positive semidefinite matrix."""
    a = _as_square(a)
    w, u = hermitian_eig(a)
    scale = max(np.linalg.norm(a, 2), np.finfo(float).tiny)
    if w[0] < -1e-12 * scale:
        raise DefinitenessError(f"matrix has a negative eigenvalue {w[0]:.3g}")
    root = (u * np.sqrt(np.clip(w, 0.0, None))) @ u.conj().T
    return 0.5 * (root + root.conj().T)


def determinant(a):
    """Determinant via partial-pivoting LU with explicit swap-sign tracking."""
    a = _as_square(a)
    if a.shape[0] == 0:
        return 1.0
    with warnings.catch_warnings():
        # an exactly singular matrix is a legitimate input here
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    swaps = int(np.count_nonzero(piv != np.arange(piv.size)))
    det = np.prod(np.diag(lu))
    return -det if swaps % 2 else det


def vandermonde(values):
    """prod_{i<j} (v_j - v_i); the empty product for a single value.

    Works for any sequence of numbers supporting subtraction and
    multiplication (floats, mpmath numbers).
    """
    v = list(values)
    out = 1.0 if not v else v[0] * 0 + 1
    for j in range(1, len(v)):
        for i in range(j):
            out *= v[j] - v[i]
    return out


def log_vandermonde(values):
    """``(sign, log|prod_{i<j}(v_j - v_i)|)`` for overflow-free prefactors."""
    v = np.asarray(values, dtype=float)
    diffs = np.concatenate([v[j] - v[:j] for j in range(1, v.size)]) if v.size > 1 else np.ones(0)
    sign = -1.0 if np.count_nonzero(diffs < 0) % 2 else 1.0
    if np.any(diffs == 0):
        return 0.0, -math.inf
    return sign, float(np.sum(np.log(np.abs(diffs))))


def multivariate_gamma_norm(n):
    """Normalised complex multivariate gamma ``prod_{i=0}^{n-1} i!``."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return float(math.prod(math.factorial(i) for i in range(n)))
