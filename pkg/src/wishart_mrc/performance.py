"""Link-level metrics of transmit beamforming with MRC reception.

The output SNR is ``gamma = mean_snr * lambda_max``, so every metric here is
a functional of the largest-eigenvalue distribution in :mod:`maxeig`.
"""

import math
import re
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import integrate

from .errors import ConditioningError, ContractError, DomainError, QuadratureError
from .maxeig import _check_dimension, maxeig_cdf, maxeig_pdf, n2_weights
from .special import double_factorial_odd, eta_tilde, odd_double_factorial_int
from .linalg import vandermonde

ZERO_SNR_LIMIT = 1e-6
_MP_ETA_SERIES_RADIUS = 0.25
_MP_START_DIGITS = 40
_MP_GUARD_DIGITS = 20
_MP_MAX_DIGITS = 400
# e^{-t^2} below 1e-18 of its peak
_QUAD_TAIL = math.log(1e18)


@dataclass(frozen=True)
class Modulation:
    """Constants of ``P_s = E[a Q(sqrt(2 b gamma))]``."""

    name: str
    a: float
    b: float
    exact: bool = True

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise DomainError(f"modulation constants must be positive: a={self.a}, b={self.b}")


_FIXED = {
    "bpsk": (1.0, 1.0, True),
    "bfsk": (1.0, 0.5, True),
    "bfsk-orthogonal": (1.0, 0.5, True),
    "bfsk-min-correlation": (1.0, 0.715, True),
}
_ORDER_RE = re.compile(r"^(\d+)-(pam|psk)$")
SUPPORTED = ("bpsk", "bfsk-orthogonal", "bfsk-min-correlation", "qpsk", "<M>-pam", "<M>-psk")


def modulation_constants(name):
    """Look up a modulation by name (case-insensitive).

    ``M-PSK`` (including ``qpsk``) is flagged approximate: its SER is only
    approximately of the ``a Q(sqrt(2 b gamma))`` form.
    """
    key = name.strip().lower()
    if key in _FIXED:
        a, b, exact = _FIXED[key]
        return Modulation(key, a, b, exact)
    if key == "qpsk":
        key = "4-psk"
    match = _ORDER_RE.match(key)
    if match:
        order = int(match.group(1))
        if order >= 2:
            if match.group(2) == "pam":
                return Modulation(key, 2.0 * (order - 1) / order, 3.0 / (order**2 - 1), True)
            return Modulation(key, 2.0, math.sin(math.pi / order) ** 2, False)
    raise KeyError(f"unknown modulation {name!r}; supported: {', '.join(SUPPORTED)}")


@dataclass(frozen=True)
class SnrGrid:
    """Ascending mean-SNR points, kept in both linear and dB form."""

    points: tuple

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size == 0 or np.any(pts <= 0) or np.any(np.diff(pts) <= 0):
            raise DomainError("SNR grid must be non-empty, positive and ascending")
        object.__setattr__(self, "points", tuple(pts.tolist()))

    @classmethod
    def from_db(cls, db_values):
        return cls(tuple(10.0 ** (np.asarray(db_values, dtype=float) / 10.0)))

    @property
    def db_labels(self):
        # rounded so 10^(x/10) round trips print as the x that was typed
        return tuple(round(10.0 * math.log10(p), 10) + 0.0 for p in self.points)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


def _positive(value, name):
    if not (np.all(np.isfinite(value)) and np.all(np.asarray(value) > 0)):
        raise DomainError(f"{name} must be positive")


def snr_pdf(pair, mean_snr, gamma):
    """Density of the output SNR, ``f_lambda(gamma / mean_snr) / mean_snr``."""
    _positive(mean_snr, "mean_snr")
    _positive(gamma, "gamma")
    return maxeig_pdf(pair, np.asarray(gamma, dtype=float) / mean_snr) / mean_snr


def outage_probability(pair, mean_snr, threshold):
    """``P(gamma <= threshold)``."""
    _positive(mean_snr, "mean_snr")
    _positive(threshold, "threshold")
    return maxeig_cdf(pair, np.asarray(threshold, dtype=float) / mean_snr)


def _eta_tilde_mp(ell, y, m):
    """Extended-precision eta-tilde (``y`` an mpf); same series/direct split as floats."""
    eps = mpmath.mpf(2) ** (-mpmath.mp.prec)
    if y == 0:
        return mpmath.mpf(0)
    if -y < _MP_ETA_SERIES_RADIUS:
        k = 2 * m - ell
        term = (y / 2) ** k * odd_double_factorial_int(2 * (k + ell) - 3) / mpmath.factorial(k)
        total = term
        while abs(term) > eps * abs(total):
            term *= (y / 2) * (2 * (k + ell) - 1) / (k + 1)
            k += 1
            total += term
        return total
    lead = odd_double_factorial_int(2 * ell - 3) * (1 - y) ** (mpmath.mpf(1) / 2 - ell)
    partial = mpmath.mpf(0)
    term = mpmath.mpf(1)
    for k in range(2 * m - ell):
        if k:
            term *= (y / 2) / k
        partial += term * odd_double_factorial_int(2 * (k + ell) - 3)
    return lead - partial


def _ser_n2_bracket(a_rate, b_rate, m, gb, eta=eta_tilde):
    """Bracketed eta-tilde combination for one (p, t) term.

    ``a_rate = 1/(omega_2 sigma_p)``, ``b_rate = 1/(omega_1 sigma_t)`` and
    ``gb = mean_snr * b``. The cross terms carry ``(y/2)^l`` with the sign
    of ``y = -rate / gb`` kept.
    """
    ya = -a_rate / gb
    yb = -b_rate / gb
    out = eta(0, ya + yb, m)
    fact = 1
    for ell in range(m):
        if ell:
            fact *= ell
        out -= eta(ell, ya, m) * (yb / 2) ** ell / fact
        out -= eta(ell, yb, m) * (ya / 2) ** ell / fact
    return out


def _ser_closed_form_terms(w1, w2, sigma, mean_snr, mod, eta=eta_tilde, num=float):
    """Prefactor and per-(p, t) summands of the n = 2 closed form.

    ``w1`` pairs with ``sigma_t`` and ``w2`` with ``sigma_p``; the result must
    not depend on which omega is called which. ``num`` converts inputs into
    the working number type.
    """
    s = [num(v) for v in sigma]
    w1, w2 = num(w1), num(w2)
    m = len(s)
    gb = num(mean_snr) * num(mod.b)
    pref = w1 * w2 * num(mod.a) * num(mod.b) * num(mean_snr) / ((w2 - w1) * vandermonde(s))
    terms = [
        num(weight) * _ser_n2_bracket(1 / (w2 * s[p]), 1 / (w1 * s[t]), m, gb, eta)
        for p, t, weight in n2_weights(s, num)
    ]
    return pref, terms


def _ser_closed_form_mp(w1, w2, sigma, mean_snr, mod):
    """Assemble the closed form in extended precision.

    The finite sum cancels heavily (more so at low SNR and large m), so the
    working precision is raised until it exceeds the observed cancellation
    by at least ``_MP_GUARD_DIGITS``.
    """
    dps = _MP_START_DIGITS
    while True:
        with mpmath.workdps(dps):
            pref, terms = _ser_closed_form_terms(
                w1, w2, sigma, mean_snr, mod, eta=_eta_tilde_mp, num=mpmath.mpf
            )
            total = mpmath.fsum(terms)
            magnitude = mpmath.fsum(abs(t) for t in terms)
            if total != 0:
                lost = float(mpmath.log10(magnitude / abs(total)))
            else:
                lost = math.inf
            if dps >= lost + _MP_GUARD_DIGITS:
                return float(pref * total)
            if dps >= _MP_MAX_DIGITS:
                return float(pref * total) if total != 0 else 0.0
            dps = min(_MP_MAX_DIGITS, max(2 * dps, int(lost) + _MP_GUARD_DIGITS + 5))


def _require_n2(pair, what):
    if pair.n != 2:
        raise ContractError(
            f"{what} is only available for n = 2 (got n = {pair.n}); use ser_quadrature"
        )


def ser_closed_form(pair, mean_snr, mod):
    """Exact average SER for ``2 x m`` / ``m x 2`` links."""
    _require_n2(pair, "the closed-form SER")
    _check_dimension(pair)
    _positive(mean_snr, "mean_snr")
    if mean_snr < ZERO_SNR_LIMIT:
        return mod.a / 2.0
    w1, w2 = pair.omega.values
    value = _ser_closed_form_mp(w1, w2, pair.sigma.values, mean_snr, mod)
    if not (-1e-9 <= value <= mod.a / 2.0 + 1e-9):
        raise ConditioningError(
            f"closed-form SER {value:.6g} outside [0, a/2]",
            {**pair.describe(), "mean_snr": mean_snr, "mod": mod.name},
        )
    return min(max(value, 0.0), mod.a / 2.0)


def ser_quadrature(pair, mean_snr, mod, epsrel=1e-11):
    """Average SER by adaptive quadrature of the largest-eigenvalue c.d.f.

    Uses ``P_s = (a / sqrt(pi)) int_0^inf exp(-t^2) F(t^2 / (b mean_snr)) dt``,
    i.e. the ``u = t^2 / b`` form of the c.d.f. integral, which removes the
    ``u^(-1/2)`` endpoint singularity. Valid for any ``n <= m``.
    """
    _positive(mean_snr, "mean_snr")
    scale = 1.0 / (mod.b * mean_snr)

    def integrand(t):
        if t <= 0.0:
            return 0.0
        return math.exp(-t * t) * maxeig_cdf(pair, t * t * scale)

    # the integrand peaks near t^2 = n m at high SNR
    upper = math.sqrt(pair.n * pair.m + _QUAD_TAIL)
    value, err, info = integrate.quad(
        integrand, 0.0, upper, epsabs=0.0, epsrel=epsrel, limit=400, full_output=True
    )[:3]
    if err > max(1e3 * epsrel * abs(value), 1e-300):
        raise QuadratureError(
            f"SER quadrature did not converge (estimate {value:.6g}, error {err:.3g})",
            {**pair.describe(), "mean_snr": mean_snr, "mod": mod.name, "evaluations": info["neval"]},
        )
    return mod.a / math.sqrt(math.pi) * value


def ser_high_snr(pair, mean_snr, mod):
    """Leading high-SNR term of the SER for ``n = 2``; slope ``-2m`` in log-log."""
    _require_n2(pair, "the high-SNR SER")
    _positive(mean_snr, "mean_snr")
    m = pair.m
    det_omega = pair.omega.det()
    det_sigma = pair.sigma.det()
    coeff = (
        mod.a
        * double_factorial_odd(4 * m - 1)
        / (mod.b ** (2 * m) * 2.0 ** (2 * m + 1) * math.factorial(m) * math.factorial(m + 1))
    )
    return coeff / (det_omega**m * det_sigma**2) * np.asarray(mean_snr, dtype=float) ** (-2 * m)


def laplace_sum_direct(omega, sigma):
    """Double sum over (p, t) weighting ``(1/(w1 s_t) + 1/(w2 s_p)) / (s_p s_t)``."""
    w1, w2 = omega
    s = np.asarray(sigma, dtype=float)
    m = s.size
    total = []
    for p, t, weight in n2_weights(s):
        # weight carries (s_p s_t)^(m-1); strip it back to Delta_{m-2}
        delta = weight / (s[p] * s[t]) ** (m - 1)
        total.append(delta / (s[p] * s[t]) * (1.0 / (w1 * s[t]) + 1.0 / (w2 * s[p])))
    return math.fsum(total)


def laplace_sum_closed(omega, sigma):
    """Closed form ``-Delta_2(omega) Delta_m(sigma) / (det(omega) det(sigma)^2)``."""
    w1, w2 = omega
    s = np.asarray(sigma, dtype=float)
    return -(w2 - w1) * vandermonde(s) / (w1 * w2 * float(np.prod(s)) ** 2)


def leading_series_contribution(pair, mean_snr, mod, digits=50):
    """Contribution of the lowest-order (k = 2m) series term to the SER.

    The (p, t) sum cancels identically. It is assembled at ``digits``
    significant digits so the result reflects the algebra rather than
    double-precision rounding. Returns ``(contribution, sum of |terms|)``.
    """
    _require_n2(pair, "the series decomposition")
    m = pair.m
    with mpmath.workdps(digits):
        w1, w2 = (mpmath.mpf(v) for v in pair.omega.values)
        s = [mpmath.mpf(v) for v in pair.sigma.values]
        a, b, g = mpmath.mpf(mod.a), mpmath.mpf(mod.b), mpmath.mpf(mean_snr)
        terms = []
        for p, t, weight in n2_weights(s, mpmath.mpf):
            s_k = (1 / (w2 * s[p])) ** m * (1 / (w1 * s[t])) ** m / mpmath.factorial(m) ** 2
            terms.append(weight * s_k)
        # integral of u^(k - 3/2) e^{-bu} against the k = 2m coefficient
        pref = (
            a * b / (2 * mpmath.sqrt(mpmath.pi))
            * w1 * w2 / ((w2 - w1) * vandermonde(s))
            * g * (g * b) ** (-2 * m) * mpmath.gamma(2 * m - mpmath.mpf(1) / 2)
        )
        return float(pref * mpmath.fsum(terms)), float(abs(pref) * mpmath.fsum(abs(x) for x in terms))
