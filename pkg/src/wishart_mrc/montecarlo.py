"""Monte-Carlo reference for the largest-eigenvalue statistics.

Samples are generated in fixed-size blocks. Block ``k`` draws from its own
PCG64 stream keyed by ``SeedSequence(seed, spawn_key=(k,))``, so the output
depends only on ``(config, sample_count, seed)`` and not on how many worker
threads generated it.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSampler
from .errors import ContractError, DomainError
from .special import gaussian_q

BLOCK_SIZE = 16384
WORKERS_ENV = "WISHART_MRC_WORKERS"
KS_ALPHA_001 = 1.63


def default_workers():
    """Worker count from ``WISHART_MRC_WORKERS``, else the CPU count."""
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            count = int(raw)
        except ValueError:
            raise DomainError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
        if count < 1:
            raise DomainError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
        return count
    return os.cpu_count() or 1


def ks_critical_value(sample_count, coeff=KS_ALPHA_001):
    """Asymptotic KS critical value ``coeff / sqrt(N)`` (alpha = 0.01 by default)."""
    return coeff / math.sqrt(sample_count)


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Sorted samples of the largest eigenvalue."""

    samples: np.ndarray
    seed: int = 0

    def __post_init__(self):
        arr = np.array(self.samples, dtype=float).ravel()
        if arr.size < 1:
            raise DomainError("empirical distribution needs at least one sample")
        if np.any(np.diff(arr) < 0):
            arr = np.sort(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def sample_count(self):
        return self.samples.size

    def ecdf(self, x):
        """Fraction of samples ``<= x``."""
        x = np.asarray(x, dtype=float)
        out = np.searchsorted(self.samples, x, side="right") / self.sample_count
        return float(out) if out.ndim == 0 else out

    def mean(self):
        return float(np.mean(self.samples))


def _block_ranges(sample_count, block_size):
    starts = range(0, sample_count, block_size)
    return [(k, min(block_size, sample_count - start)) for k, start in enumerate(starts)]


def block_rng(seed, block):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def gram_matrix(h):
    """``H^H H`` or ``H H^H``, whichever is smaller; both share ``lambda_max``."""
    if h.shape[-1] <= h.shape[-2]:
        return np.conj(np.swapaxes(h, -1, -2)) @ h
    return h @ np.conj(np.swapaxes(h, -1, -2))


def max_eigenmode(h):
    """Largest eigenvalue of ``H^H H`` and its unit eigenvector (the beamformer)."""
    w, u = np.linalg.eigh(np.conj(h.T) @ h)
    return float(w[-1]), u[:, -1]


def _max_eigs_block(sampler, seed, block, count):
    h = sampler.draw(block_rng(seed, block), count)
    return np.linalg.eigvalsh(gram_matrix(h))[:, -1]


def _sample_max_eigs(config, sample_count, seed, workers, block_size):
    if sample_count < 1:
        raise DomainError(f"sample_count must be >= 1, got {sample_count}")
    sampler = ChannelSampler(config)
    blocks = _block_ranges(int(sample_count), block_size)
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(blocks) == 1:
        parts = [_max_eigs_block(sampler, seed, k, c) for k, c in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda kc: _max_eigs_block(sampler, seed, *kc), blocks))
    return np.concatenate(parts)


def empirical_maxeig(config, sample_count, seed=0, workers=None, block_size=BLOCK_SIZE):
    """Draw ``sample_count`` channels and return the sorted ``lambda_max`` values."""
    lam = _sample_max_eigs(config, sample_count, seed, workers, block_size)
    return EmpiricalDistribution(np.sort(lam), seed)


def ser_from_samples(lam, mean_snr, mod):
    """``(mean, standard error)`` of ``a Q(sqrt(2 b mean_snr lambda))`` over ``lam``."""
    lam = np.asarray(lam, dtype=float).ravel()
    vals = mod.a * np.atleast_1d(gaussian_q(np.sqrt(2.0 * mod.b * mean_snr * lam)))
    if vals.size < 2:
        return float(vals[0]), math.inf
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / math.sqrt(vals.size))


def empirical_ser(config, mod, sample_count, seed=0, workers=None, block_size=BLOCK_SIZE):
    """Average of ``a Q(sqrt(2 b mean_snr lambda))`` over sampled channels.

    Returns ``(estimate, standard_error)``. Averaging the conditional error
    probability rather than counting symbol errors keeps the estimator
    usable at SERs well below ``1 / sample_count``, as long as the error
    events are not dominated by channel states rarer than that.
    """
    lam = _sample_max_eigs(config, sample_count, seed, workers, block_size)
    return ser_from_samples(lam, config.mean_snr_linear, mod)


def ks_distance(emp, cdf):
    """Kolmogorov-Smirnov distance between ``emp`` and a c.d.f. callable.

    ``cdf`` is evaluated once on the whole sample array.
    """
    x = emp.samples
    f = np.asarray(cdf(x), dtype=float).reshape(x.shape)
    if np.any(np.isnan(f)) or np.any(f < -1e-9) or np.any(f > 1.0 + 1e-9):
        raise ContractError("c.d.f. returned values outside [0, 1]")
    n = x.size
    i = np.arange(1, n + 1)
    return float(np.max(np.maximum(np.abs(i / n - f), np.abs((i - 1) / n - f))))
