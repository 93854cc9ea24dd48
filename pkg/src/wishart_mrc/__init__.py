"""Largest-eigenvalue statistics of doubly-correlated complex Wishart matrices
and the performance of transmit-beamforming / MRC links built on them."""

__version__ = "0.1.0"

from .channel import (
    ArrayModelParams,
    ChannelSampler,
    CorrelationMatrix,
    MimoConfig,
    correlation_from_model,
    sample_channel,
    to_wishart_pair,
)
from .errors import (
    ConditioningError,
    ConfigError,
    ContractError,
    DefinitenessError,
    DegenerateSpectrumError,
    DomainError,
    ModelValidityError,
    QuadratureError,
    ShapeError,
    WishartMRCError,
)
from .linalg import DegenerateSpectrumWarning, EigenSpectrum
from .maxeig import (
    WishartPair,
    build_psi,
    maxeig_cdf,
    maxeig_cdf_2x2,
    maxeig_cdf_n2,
    maxeig_pdf,
    maxeig_quantile,
)
from .montecarlo import EmpiricalDistribution, empirical_maxeig, empirical_ser, ks_distance
from .performance import (
    Modulation,
    SnrGrid,
    modulation_constants,
    outage_probability,
    ser_closed_form,
    ser_high_snr,
    ser_quadrature,
    snr_pdf,
)

__all__ = [
    "ArrayModelParams",
    "ChannelSampler",
    "ConditioningError",
    "ConfigError",
    "ContractError",
    "CorrelationMatrix",
    "DefinitenessError",
    "DegenerateSpectrumError",
    "DegenerateSpectrumWarning",
    "DomainError",
    "EigenSpectrum",
    "EmpiricalDistribution",
    "MimoConfig",
    "ModelValidityError",
    "Modulation",
    "QuadratureError",
    "ShapeError",
    "SnrGrid",
    "WishartMRCError",
    "WishartPair",
    "build_psi",
    "correlation_from_model",
    "empirical_maxeig",
    "empirical_ser",
    "ks_distance",
    "maxeig_cdf",
    "maxeig_cdf_2x2",
    "maxeig_cdf_n2",
    "maxeig_pdf",
    "maxeig_quantile",
    "modulation_constants",
    "outage_probability",
    "sample_channel",
    "ser_closed_form",
    "ser_high_snr",
    "ser_quadrature",
    "snr_pdf",
    "to_wishart_pair",
]
