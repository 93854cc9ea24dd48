"""Uniform-linear-array correlation model and Kronecker Rayleigh channels."""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DefinitenessError, DomainError, ModelValidityError, ShapeError
from .linalg import EigenSpectrum, hermitian_eig, hermitian_sqrt_psd
from .maxeig import WishartPair

PD_RTOL = 1e-12


@dataclass(frozen=True)
class ArrayModelParams:
    """One end of the link: ULA geometry plus Gaussian angular spread.

    ``angle_spread_var`` is the variance (rad^2) of the angle perturbation.
    """

    antenna_count: int
    angle_spread_var: float
    spacing_wavelengths: float = 0.5
    mean_angle_rad: float = math.pi / 2

    def __post_init__(self):
        if self.antenna_count < 1:
            raise DomainError(f"antenna_count must be >= 1, got {self.antenna_count}")
        if not self.spacing_wavelengths > 0:
            raise DomainError("spacing must be positive")
        if not self.angle_spread_var >= 0:
            raise DomainError("angle spread variance must be non-negative")


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """Hermitian positive-definite matrix with unit diagonal."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ShapeError(f"correlation matrix must be square, got {a.shape}")
        if np.max(np.abs(a - a.conj().T), initial=0.0) > 1e-12:
            raise ShapeError("correlation matrix is not Hermitian")
        if not np.allclose(np.diag(a), 1.0, rtol=0, atol=1e-12):
            raise ShapeError("correlation matrix must have unit diagonal")
        np.fill_diagonal(a, 1.0)
        w, _ = hermitian_eig(a)
        if w[0] <= PD_RTOL * a.shape[0]:
            raise DefinitenessError(f"correlation matrix is not positive definite (min eig {w[0]:.3g})")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @classmethod
    def identity(cls, size):
        return cls(np.eye(size))

    @property
    def size(self):
        return self.entries.shape[0]

    def eigenvalues(self):
        return hermitian_eig(self.entries)[0]

    def det(self):
        return float(np.prod(self.eigenvalues()))


@dataclass(frozen=True)
class MimoConfig:
    """Antenna counts, correlation at both ends, and mean transmit SNR."""

    transmit_corr: CorrelationMatrix
    receive_corr: CorrelationMatrix
    mean_snr_linear: float = 1.0
    n_t: int = field(init=False)
    n_r: int = field(init=False)

    def __post_init__(self):
        if not self.mean_snr_linear > 0:
            raise DomainError("mean SNR must be positive")
        object.__setattr__(self, "n_t", self.transmit_corr.size)
        object.__setattr__(self, "n_r", self.receive_corr.size)

    @classmethod
    def from_models(cls, transmit, receive, mean_snr_linear=1.0):
        return cls(
            correlation_from_model(transmit, transmit=True),
            correlation_from_model(receive, transmit=False),
            mean_snr_linear,
        )

    @classmethod
    def uncorrelated(cls, n_t, n_r, mean_snr_linear=1.0):
        return cls(CorrelationMatrix.identity(n_t), CorrelationMatrix.identity(n_r), mean_snr_linear)


def model_entries(params, transmit=False):
    """Raw correlation entries of the ULA model (no definiteness check).

    Receive convention: ``exp(-j 2 pi (q-p) d cos t) exp(-(2 pi (q-p) d sin t s)^2 / 2)``;
    the transmit matrix uses ``(p-q)`` in the phase.
    """
    idx = np.arange(params.antenna_count)
    lag = idx[None, :] - idx[:, None]  # q - p
    if transmit:
        lag = -lag
    d = params.spacing_wavelengths
    theta = params.mean_angle_rad
    spread = math.sqrt(params.angle_spread_var)
    phase = np.exp(-2j * math.pi * lag * d * math.cos(theta))
    damping = np.exp(-0.5 * (2 * math.pi * lag * d * math.sin(theta) * spread) ** 2)
    return phase * damping


def correlation_from_model(params, transmit=False):
    """Correlation matrix ``R`` (receive) or ``S`` (``transmit=True``)."""
    entries = model_entries(params, transmit=transmit)
    try:
        return CorrelationMatrix(entries)
    except DefinitenessError as exc:
        raise ModelValidityError(
            f"array model gives a singular correlation matrix ({exc}); "
            f"params={params}"
        ) from exc


def to_wishart_pair(config, strict=False):
    """Map an antenna configuration to Wishart eigenvalue parameters.

    With ``N_r >= N_t`` the smaller side is the transmitter (``Omega = S``),
    otherwise the roles swap; the largest eigenvalue is the same either way.
    """
    s_vals = config.transmit_corr.eigenvalues()
    r_vals = config.receive_corr.eigenvalues()
    if config.n_r >= config.n_t:
        omega, sigma = s_vals, r_vals
    else:
        omega, sigma = r_vals, s_vals
    return WishartPair(
        EigenSpectrum.from_values(omega, strict=strict),
        EigenSpectrum.from_values(sigma, strict=strict),
    )


@dataclass(frozen=True, eq=False)
class ChannelSampler:
    """Caches the matrix square roots of a configuration for repeated draws."""

    config: MimoConfig

    def __post_init__(self):
        object.__setattr__(self, "_r_half", hermitian_sqrt_psd(self.config.receive_corr.entries))
        object.__setattr__(self, "_s_half", hermitian_sqrt_psd(self.config.transmit_corr.entries))

    def draw(self, rng, count=None):
        """``H = R^(1/2) H_w S^(1/2)`` with ``H_w`` i.i.d. CN(0, 1).

        Returns one ``(N_r, N_t)`` matrix, or a stack of ``count`` of them.
        """
        shape = (self.config.n_r, self.config.n_t)
        if count is not None:
            shape = (count,) + shape
        hw = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * math.sqrt(0.5)
        return self._r_half @ hw @ self._s_half


def sample_channel(config, rng, count=None):
    """Draw Kronecker-correlated Rayleigh channel matrices from ``rng``."""
    return ChannelSampler(config).draw(rng, count)
