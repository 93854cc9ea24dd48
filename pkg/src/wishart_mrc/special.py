"""Scalar special functions used by the closed-form eigenvalue statistics.

All functions accept floats; ``reg_lower_gamma_int``, ``exp_reg_gamma_stable``
and ``gaussian_q`` also broadcast over numpy arrays.
"""

import math

import numpy as np
from scipy import special as sps

from .errors import DomainError

# Tail series is used below this multiple of the order, direct form above.
SERIES_SWITCH_FACTOR = 0.5
_TAIL_RTOL = 1e-18
_MAX_TAIL_TERMS = 400

# eta_tilde switches to its convergent tail series for |y| below this.
ETA_SERIES_RADIUS = 0.8


def _as_float_array(y):
    arr = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"argument must be finite, got {y!r}")
    return arr


def _unwrap(arr):
    return float(arr) if arr.ndim == 0 else arr


def _partial_exp_sum(order, y):
    """sum_{k=0}^{order-1} y**k / k! (Horner form)."""
    acc = np.zeros_like(y)
    for k in range(order - 1, -1, -1):
        acc = 1.0 + acc * y / (k + 1)
    return acc


def reg_lower_gamma_int(ell, y):
    """Regularized lower incomplete gamma ``P(ell; y)`` for integer order.

    Equals ``1 - exp(-y) * sum_{k<ell} y**k / k!`` for any real ``y``. That
    finite form cancels near zero, so ``y >= 0`` goes to scipy's ``gammainc``
    and ``y < 0`` uses ``P(ell; -t) = exp(t) * sum_{k>=ell} (-t)**k / k!``.
    """
    if ell < 1:
        raise DomainError(f"order must be >= 1, got {ell}")
    arr = _as_float_array(y)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = sps.gammainc(ell, arr[pos])
    t = -arr[~pos]
    out[~pos] = np.exp(t) * _exp_reg_gamma_array(ell, t)
    return _unwrap(out)


def _tail_series(m, y):
    """sum_{k>=m} (-y)**k / k!, summed term by term in the dtype of ``y``."""
    one = np.ones((), dtype=y.dtype)
    log_fact = np.sum(np.log(np.arange(1, m + 1, dtype=y.dtype)))
    term = np.exp(m * np.log(np.where(y > 0, y, one)) - log_fact)
    term = np.where(y > 0, term, 0.0) * (-one) ** m
    total = term.copy()
    k = m
    for _ in range(_MAX_TAIL_TERMS):
        k += 1
        term = term * (-y) / k
        total = total + term
        if np.all(np.abs(term) <= _TAIL_RTOL * np.abs(total)):
            break
    return total


def _direct_form(m, y):
    return np.exp(-y) - _partial_exp_sum(m, -y)


def _exp_reg_gamma_array(m, arr):
    """Unchecked array kernel of :func:`exp_reg_gamma_stable`; keeps the dtype
    of ``arr`` (the determinant code runs it in extended precision)."""
    if m == 0:
        return np.exp(-arr)
    switch = SERIES_SWITCH_FACTOR * m
    small = arr < switch
    out = np.empty_like(arr)
    if np.any(small):
        out[small] = _tail_series(m, arr[small])
    if np.any(~small):
        out[~small] = _direct_form(m, arr[~small])
    return out


def exp_reg_gamma_stable(m, y):
    """``exp(-y) * P(m; -y)`` without cancellation at small ``y``.

    Equivalently ``sum_{k>=m} (-y)**k / k!``. Order ``m = 0`` is accepted
    and gives ``exp(-y)`` (needed for derivative rows with ``m - 1 = 0``).
    """
    if m < 0:
        raise DomainError(f"order must be >= 0, got {m}")
    arr = _as_float_array(y)
    if np.any(arr < 0):
        raise DomainError("argument must be non-negative")
    return _unwrap(_exp_reg_gamma_array(m, arr))


def odd_double_factorial_int(k):
    """Exact integer ``k!!`` for odd ``k >= -3`` (``(-1)!! = 1``, ``(-3)!! = -1``)."""
    if k != int(k) or k % 2 == 0 or k < -3:
        raise DomainError(f"expected odd integer >= -3, got {k}")
    k = int(k)
    if k == -3:
        return -1
    return math.prod(range(1, k + 1, 2))


def double_factorial_odd(k):
    """Odd double factorial ``k!!`` extended with ``(-1)!! = 1, (-3)!! = -1``.

    Returned as a float so large orders do not need big integers downstream.
    """
    return float(odd_double_factorial_int(k))


def _eta_tilde_series(ell, y, m):
    # sum_{k >= 2m-ell} (y/2)^k (2(k+ell)-3)!! / k!
    k = 2 * m - ell
    term = (y / 2.0) ** k * double_factorial_odd(2 * (k + ell) - 3) / math.factorial(k)
    total = term
    for _ in range(4 * _MAX_TAIL_TERMS):
        term *= (y / 2.0) * (2 * (k + ell) - 1) / (k + 1)
        k += 1
        total += term
        if abs(term) <= 1e-17 * abs(total):
            break
    return total


def eta_tilde(ell, y, m):
    """Finite kernel of the closed-form symbol error rate.

    ``(2l-3)!! (1-y)^(1/2-l) - sum_{k=0}^{2m-l-1} (y/2)^k (2(k+l)-3)!! / k!``

    The difference is a convergent tail series for ``|y| < 1``; inside
    ``ETA_SERIES_RADIUS`` that series is summed directly instead, since the
    two terms above agree to ``O(|y|^(2m-l))``.
    """
    if ell < 0 or m < 1:
        raise DomainError(f"need ell >= 0 and m >= 1, got ell={ell}, m={m}")
    if not math.isfinite(y) or y > 0:
        raise DomainError(f"eta_tilde needs finite y <= 0, got {y}")
    if y == 0.0:
        return 0.0
    if -y < ETA_SERIES_RADIUS:
        return _eta_tilde_series(ell, y, m)
    lead = double_factorial_odd(2 * ell - 3) * (1.0 - y) ** (0.5 - ell)
    partial = 0.0
    term = 1.0  # (y/2)^k / k!
    for k in range(2 * m - ell):
        if k:
            term *= (y / 2.0) / k
        partial += term * double_factorial_odd(2 * (k + ell) - 3)
    return lead - partial


def gaussian_q(x):
    """Standard normal upper tail probability ``Q(x) = erfc(x/sqrt 2)/2``."""
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("gaussian_q argument is NaN")
    return _unwrap(0.5 * sps.erfc(arr / math.sqrt(2.0)))
