"""Distribution of the largest eigenvalue of a doubly-correlated complex Wishart matrix.

For ``X ~ CN(0, Sigma (x) Omega)`` with ``X`` of shape ``m x n`` (``n <= m``),
these functions give the c.d.f. and p.d.f. of ``lambda_max(X^H X)`` in
closed form, as functions of the eigenvalues of ``Omega`` and ``Sigma``
only. All evaluators broadcast over numpy arrays of ``x``.
"""

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import ConditioningError, ContractError, DomainError
from .linalg import EigenSpectrum, log_vandermonde, multivariate_gamma_norm, vandermonde
from .special import SERIES_SWITCH_FACTOR, _exp_reg_gamma_array, _partial_exp_sum, exp_reg_gamma_stable

MAX_DIMENSION = 12
PROB_TOL = 1e-9
Q_SERIES_RTOL = 1e-15
# above this c.d.f. value the complementary (tail) evaluation is used
TAIL_SWITCH = 0.5
# The determinants are ill-conditioned for clustered spectra (condition
# numbers of 1e6 at n = m = 4 are routine), so entries and LU run in the
# platform's extended type. Where long double is plain double this
# silently degrades to double-precision accuracy.
WORK_DTYPE = np.longdouble


@dataclass(frozen=True)
class WishartPair:
    """Eigenvalue parameters of the doubly-correlated Wishart matrix.

    ``omega`` has length ``n`` (the smaller dimension) and ``sigma`` length
    ``m``.
    """

    omega: EigenSpectrum
    sigma: EigenSpectrum

    def __post_init__(self):
        if not isinstance(self.omega, EigenSpectrum):
            object.__setattr__(self, "omega", EigenSpectrum.from_values(self.omega))
        if not isinstance(self.sigma, EigenSpectrum):
            object.__setattr__(self, "sigma", EigenSpectrum.from_values(self.sigma))
        if not 1 <= self.n <= self.m:
            raise ContractError(f"need 1 <= n <= m, got n={self.n}, m={self.m}")

    @classmethod
    def from_values(cls, omega, sigma, strict=False):
        return cls(
            EigenSpectrum.from_values(omega, strict=strict),
            EigenSpectrum.from_values(sigma, strict=strict),
        )

    @property
    def n(self):
        return len(self.omega)

    @property
    def m(self):
        return len(self.sigma)

    @property
    def tau(self):
        return self.m - self.n

    def describe(self):
        return {"n": self.n, "m": self.m, "omega": list(self.omega.values), "sigma": list(self.sigma.values)}


def _positive_grid(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"{name} must be positive and finite")
    return arr


def _unwrap(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def _check_dimension(pair):
    if pair.m > MAX_DIMENSION:
        raise ConditioningError(
            f"m = {pair.m} exceeds the supported maximum {MAX_DIMENSION} in double precision",
            pair.describe(),
        )


def _check_probability(values, pair, what="c.d.f."):
    if np.any(values < -PROB_TOL) or np.any(values > 1.0 + PROB_TOL) or np.any(np.isnan(values)):
        bad = values[(values < -PROB_TOL) | (values > 1 + PROB_TOL) | np.isnan(values)]
        raise ConditioningError(
            f"{what} evaluated outside [0, 1] (e.g. {bad.flat[0]:.6g})", pair.describe()
        )
    return np.clip(values, 0.0, 1.0)


def _gamma_rows(pair, x, order):
    """Entries exp(-x/(w s)) P(order; -x/(w s)) for every (omega_i, sigma_j)."""
    w = pair.omega.array.astype(WORK_DTYPE)
    s = pair.sigma.array.astype(WORK_DTYPE)
    y = np.asarray(x, dtype=WORK_DTYPE)[..., None, None] / (w[:, None] * s[None, :])
    return _exp_reg_gamma_array(order, y)


def _reduced_gamma_rows(pair, x, shift=0):
    """Gamma rows after eliminating the components spanned by the power rows.

    The power rows span ``sigma_j ** -k`` for ``k = n..m-1``, so a gamma row
    may use ``exp(-y) P(c; -y)`` for any order ``c`` in ``[n, m]`` without
    changing the determinant. Each row takes the order with the smallest
    max-norm, which removes the large polynomial parts that would otherwise
    cancel inside the LU factorisation at large ``x``.

    Returns ``(rows, orders)``; with ``shift=-1`` the rows are evaluated at
    ``order - 1`` for the same per-row orders (derivative rows).
    """
    n, m = pair.n, pair.m
    orders = np.arange(n, m + 1)
    stack = np.stack([_gamma_rows(pair, x, c) for c in orders])
    best = np.argmin(np.max(np.abs(stack), axis=-1), axis=0)  # (..., n)
    chosen = orders[best]
    if shift:
        rows = np.zeros_like(stack[0])
        for c in np.unique(chosen):
            rows = np.where((chosen == c)[..., None], _gamma_rows(pair, x, c + shift), rows)
        return rows, chosen
    rows = np.take_along_axis(stack, best[None, ..., None], axis=0)[0]
    return rows, chosen


def _psi_work(pair, x, reduced):
    m, tau = pair.m, pair.tau
    psi = np.empty(x.shape + (m, m), dtype=WORK_DTYPE)
    psi[..., :tau, :] = _power_rows(pair)
    if reduced:
        psi[..., tau:, :] = _reduced_gamma_rows(pair, x)[0]
    else:
        psi[..., tau:, :] = _gamma_rows(pair, x, m)
    return psi


def build_psi(pair, x, reduced=False):
    """The ``m x m`` matrix whose determinant drives the c.d.f.

    Rows ``i <= tau`` hold ``sigma_j ** -(m - i)``; the remaining ``n``
    rows hold ``exp(-x/(omega sigma)) P(m; -x/(omega sigma))``. With
    ``reduced`` the gamma rows are replaced by determinant-equivalent rows
    of lower order (see ``_reduced_gamma_rows``).
    """
    x = _positive_grid(x)
    return _psi_work(pair, x, reduced).astype(float)


def _lu_slogdet(mat):
    """Batched ``slogdet`` by partial-pivoting elimination in ``mat``'s dtype
    (``numpy.linalg`` only works in double)."""
    k = mat.shape[-1]
    batch = np.array(mat).reshape(-1, k, k)
    idx = np.arange(batch.shape[0])
    sign = np.ones(batch.shape[0], dtype=batch.dtype)
    logabs = np.zeros(batch.shape[0], dtype=batch.dtype)
    with np.errstate(divide="ignore", invalid="ignore"):
        for j in range(k):
            piv = j + np.argmax(np.abs(batch[:, j:, j]), axis=1)
            swap = piv != j
            if np.any(swap):
                row_j = batch[idx, j].copy()
                batch[idx, j] = batch[idx, piv]
                batch[idx, piv] = row_j
                sign = np.where(swap, -sign, sign)
            d = batch[:, j, j]
            sign = sign * np.sign(d)
            logabs = logabs + np.log(np.abs(d))
            if j + 1 < k:
                f = batch[:, j + 1 :, j] / np.where(d != 0, d, 1)[:, None]
                batch[:, j + 1 :, j:] -= f[:, :, None] * batch[:, None, j, j:]
    logabs = np.where(sign == 0, -np.inf, logabs)
    return sign.reshape(mat.shape[:-2]), logabs.reshape(mat.shape[:-2])


def _row_scaled_slogdet(mat):
    """slogdet after equilibrating rows to unit max-norm (better LU pivots)."""
    scale = np.max(np.abs(mat), axis=-1)
    scale = np.where(scale > 0, scale, 1.0)
    sign, logabs = _lu_slogdet(mat / scale[..., None])
    return sign, logabs + np.sum(np.log(scale), axis=-1)


def _log_prefactor(pair):
    """(sign, log|.|) of (-1)^n Gamma_n(n) det(W)^(n-1) det(S)^(m-1) / (D_n(W) D_m(S))."""
    n, m = pair.n, pair.m
    sw, lw = log_vandermonde(pair.omega.array)
    ss, ls = log_vandermonde(pair.sigma.array)
    logabs = (
        math.log(multivariate_gamma_norm(n))
        + (n - 1) * float(np.sum(np.log(pair.omega.array)))
        + (m - 1) * float(np.sum(np.log(pair.sigma.array)))
        - lw
        - ls
    )
    sign = (-1.0) ** n * sw * ss
    return sign, logabs


def _signed_sum(signs, logs):
    """Sum of ``sign * exp(log)`` terms (stacked on axis 0) as ``(sign, log|.|)``."""
    signs = np.stack(signs)
    logs = np.stack(logs)
    top = np.max(np.where(signs != 0, logs, -np.inf), axis=0)
    top = np.where(np.isfinite(top), top, 0.0)
    total = np.sum(signs * np.exp(logs - top), axis=0)
    with np.errstate(divide="ignore"):
        return np.sign(total), top + np.log(np.abs(total))


def _tail_rows(pair, x):
    """Exponential and polynomial parts of order-``n`` gamma rows.

    ``exp(-y) P(n; -y) = exp(-y) - p_n(y)`` with ``p_n(y) = sum_{k<n} (-y)^k / k!``.
    Also returns the derivative polynomial ``p_{n-1}`` and the rates ``1/(omega sigma)``.
    """
    w = pair.omega.array.astype(WORK_DTYPE)
    s = pair.sigma.array.astype(WORK_DTYPE)
    rate = 1 / (w[:, None] * s[None, :])
    y = np.asarray(x, dtype=WORK_DTYPE)[..., None, None] * rate
    return np.exp(-y), _partial_exp_sum(pair.n, -y), _partial_exp_sum(pair.n - 1, -y), rate


def _excess_det(power, e_rows, p_rows):
    """``det[power; e - p] - det[power; -p]`` as a sum over non-empty row subsets.

    Row ``i`` of the lower block is ``e_i`` when ``i`` is in the subset and
    ``-p_i`` otherwise. Every term carries at least one exponential row, so
    nothing cancels against the polynomial part.
    """
    n = e_rows.shape[-2]
    tau = power.shape[0]
    mat = np.empty(e_rows.shape[:-2] + (tau + n, e_rows.shape[-1]), dtype=e_rows.dtype)
    mat[..., :tau, :] = power
    signs, logs = [], []
    for mask in range(1, 1 << n):
        pick = np.array([(mask >> i) & 1 for i in range(n)], dtype=bool)
        mat[..., tau:, :] = np.where(pick[:, None], e_rows, -p_rows)
        sg, lg = _row_scaled_slogdet(mat)
        signs.append(sg)
        logs.append(lg)
    return _signed_sum(signs, logs)


def _power_rows(pair):
    s = pair.sigma.array.astype(WORK_DTYPE)
    m = pair.m
    return np.array([s ** -(m - (i + 1)) for i in range(pair.tau)], dtype=WORK_DTYPE).reshape(pair.tau, m)


def _cdf_direct(pair, x):
    n = pair.n
    half = n * (n - 1) // 2
    psign, plog = _log_prefactor(pair)
    dsign, dlog = _row_scaled_slogdet(_psi_work(pair, x, reduced=True))
    # (-x)^half = (-1)^half * x^half
    return psign * dsign * (-1.0) ** half * np.exp(plog + dlog - half * np.log(x))


def _cdf_tail(pair, x):
    """``F(x)`` as ``1 + (prefactor) * excess``: accurate when ``F`` is close to 1."""
    n = pair.n
    half = n * (n - 1) // 2
    psign, plog = _log_prefactor(pair)
    e, p, _, _ = _tail_rows(pair, x)
    dsign, dlog = _excess_det(_power_rows(pair), e, p)
    return 1.0 + psign * dsign * (-1.0) ** half * np.exp(plog + dlog - half * np.log(x))


@functools.lru_cache(maxsize=256)
def _switch_point(pair):
    """``x`` with ``F(x) = TAIL_SWITCH``, located with the direct form (well
    conditioned there). Beyond it the complementary form takes over."""

    def excess(x):
        return float(_cdf_direct(pair, np.atleast_1d(x))[0]) - TAIL_SWITCH

    lo = hi = float(np.max(pair.omega.array) * np.max(pair.sigma.array))
    while excess(lo) > 0:
        lo /= 2.0
    while excess(hi) < 0:
        hi *= 2.0
    return optimize.brentq(excess, lo, hi, xtol=1e-12 * hi)


def maxeig_cdf(pair, x):
    """``P(lambda_max <= x)`` from the general determinant formula.

    Above the median the complementary form is used, so ``1 - F`` keeps its
    relative accuracy in the upper tail.
    """
    _check_dimension(pair)
    x = _positive_grid(x)
    flat = np.atleast_1d(x)
    upper = flat > _switch_point(pair)
    value = np.empty_like(flat)
    if np.any(~upper):
        value[~upper] = _cdf_direct(pair, flat[~upper])
    if np.any(upper):
        value[upper] = _cdf_tail(pair, flat[upper])
    return _unwrap(_check_probability(value.reshape(x.shape), pair))


def _pdf_direct(pair, lam):
    n, m, tau = pair.n, pair.m, pair.tau
    half = n * (n - 1) // 2
    psi = _psi_work(pair, lam, reduced=True)
    w = pair.omega.array.astype(WORK_DTYPE)
    s = pair.sigma.array.astype(WORK_DTYPE)
    deriv = _reduced_gamma_rows(pair, lam, shift=-1)[0] / (w[:, None] * s[None, :])
    signs, logs = [], []
    if half:
        sg, lg = _row_scaled_slogdet(psi)
        signs.append(sg)
        logs.append(lg + math.log(half) - np.log(lam))  # n(n-1) detPsi / (2 lam)
    for row in range(tau, m):
        psi_l = psi.copy()
        psi_l[..., row, :] = deriv[..., row - tau, :]
        sg, lg = _row_scaled_slogdet(psi_l)
        signs.append(sg)
        logs.append(lg)
    return _signed_sum(signs, logs)


def _pdf_tail(pair, lam):
    """Same bracket with every determinant replaced by its excess over the
    all-polynomial part; those parts sum to zero identically."""
    n = pair.n
    half = n * (n - 1) // 2
    power = _power_rows(pair)
    e, p, dp, rate = _tail_rows(pair, lam)
    signs, logs = [], []
    if half:
        sg, lg = _excess_det(power, e, p)
        signs.append(sg)
        logs.append(lg + math.log(half) - np.log(lam))
    for row in range(n):
        e_l = e.copy()
        p_l = p.copy()
        e_l[..., row, :] = e[..., row, :] * rate[row]
        p_l[..., row, :] = dp[..., row, :] * rate[row]
        sg, lg = _excess_det(power, e_l, p_l)
        signs.append(sg)
        logs.append(lg)
    return _signed_sum(signs, logs)


def maxeig_pdf(pair, lam):
    """Density of ``lambda_max`` obtained by differentiating the c.d.f.

    The derivative of row ``l`` uses
    ``d/dx [e^{-x/c} P(m; -x/c)] = -(1/c) e^{-x/c} P(m-1; -x/c)``.
    """
    _check_dimension(pair)
    lam = _positive_grid(lam, "lambda")
    n = pair.n
    half = n * (n - 1) // 2
    psign, plog = _log_prefactor(pair)
    flat = np.atleast_1d(lam)
    upper = flat > _switch_point(pair)
    bsign = np.zeros_like(flat)
    blog = np.zeros_like(flat)
    if np.any(~upper):
        bsign[~upper], blog[~upper] = _pdf_direct(pair, flat[~upper])
    if np.any(upper):
        bsign[upper], blog[upper] = _pdf_tail(pair, flat[upper])
    with np.errstate(under="ignore"):
        value = -psign * (-1.0) ** half * bsign * np.exp(plog + blog - half * np.log(flat))
    value = np.where(bsign == 0, 0.0, value).reshape(lam.shape)
    if np.any(value < -PROB_TOL) or np.any(np.isnan(value)):
        raise ConditioningError("p.d.f. evaluated negative", pair.describe())
    return _unwrap(np.clip(value, 0.0, None))


def _require_n2(pair):
    if pair.n != 2:
        raise ContractError(f"this closed form needs n = 2, got n = {pair.n}")


def phi_index(t, p):
    """Sign index used by the n = 2 expansions (1-based ``t`` and ``p``)."""
    return t if t < p else t - 1


def _exp_tail_coeffs(u, count):
    """c_k = (-u)^k / k! for k = 0..count-1, stacked along axis 0."""
    c = np.empty((count,) + u.shape)
    c[0] = 1.0
    for k in range(1, count):
        c[k] = c[k - 1] * (-u) / k
    return c


def q_pt_series(x, a, b, m, rtol=Q_SERIES_RTOL, max_terms=400):
    """Product of two exponential tails as one double power series.

    Computes ``(1/x) sum_{k>=2m} sum_{l=m}^{k-m} (-xa)^l (-xb)^(k-l) / (l!(k-l)!)``.
    """
    x = np.asarray(x, dtype=float)
    cu = _exp_tail_coeffs(x * a, max_terms)
    cv = _exp_tail_coeffs(x * b, max_terms)
    total = np.zeros_like(x)
    for k in range(2 * m, max_terms):
        ell = np.arange(m, k - m + 1)
        term = np.sum(cu[ell] * cv[k - ell], axis=0)
        total = total + term
        if np.all(np.abs(term) <= rtol * np.abs(total)):
            break
    else:
        raise ConditioningError("Q series did not converge", {"x": x, "a": a, "b": b, "m": m})
    return total / x


def q_pt_direct(x, a, b, m):
    x = np.asarray(x, dtype=float)
    return exp_reg_gamma_stable(m, x * a) * exp_reg_gamma_stable(m, x * b) / x


def q_pt(x, a, b, m):
    """``Q_{p,t}`` with ``a = 1/(omega_2 sigma_p)`` and ``b = 1/(omega_1 sigma_t)``.

    The double series is used where both arguments are below the
    small-argument switch, the product of stable tails elsewhere.
    """
    x = np.asarray(x, dtype=float)
    switch = SERIES_SWITCH_FACTOR * m
    small = (x * a < switch) & (x * b < switch)
    out = np.empty_like(x)
    if np.any(small):
        out[small] = q_pt_series(x[small], a, b, m)
    if np.any(~small):
        out[~small] = q_pt_direct(x[~small], a, b, m)
    return out


def n2_weights(sigma, num=float):
    """Signed coefficients (-1)^(p+phi(t)) (s_p s_t)^(m-1) Delta_{m-2}(sigma without p, t).

    Returns a list of ``(p, t, weight)`` with 0-based ``p`` and ``t``.
    ``num`` selects the number type the weights are computed in.
    """
    s = [num(v) for v in sigma]
    m = len(s)
    out = []
    for p in range(1, m + 1):
        for t in range(1, m + 1):
            if t == p:
                continue
            rest = [v for i, v in enumerate(s) if i not in (p - 1, t - 1)]
            sign = -1 if (p + phi_index(t, p)) % 2 else 1
            weight = sign * (s[p - 1] * s[t - 1]) ** (m - 1) * vandermonde(rest)
            out.append((p - 1, t - 1, weight))
    return out


def maxeig_cdf_n2(pair, x):
    """Double-sum form of the c.d.f. for ``n = 2``, any ``m >= 2``.

    Each ``Q_{p,t}`` is the product of an omega_2 row entry (at sigma_p) and
    an omega_1 row entry (at sigma_t) divided by ``x``. Rows are taken in the
    same reduced order as the determinant form; when both rows keep order
    ``m`` and both arguments are small, the double power series is used.
    """
    _require_n2(pair)
    _check_dimension(pair)
    x = _positive_grid(x)
    w1, w2 = pair.omega.values
    s = pair.sigma.array
    m = pair.m
    rows, orders = _reduced_gamma_rows(pair, x)
    full_order = np.all(orders == m, axis=-1)
    switch = SERIES_SWITCH_FACTOR * m
    total = np.zeros_like(x)
    for p, t, weight in n2_weights(s):
        a, b = 1.0 / (w2 * s[p]), 1.0 / (w1 * s[t])
        q = rows[..., 1, p] * rows[..., 0, t] / x
        small = full_order & (x * a < switch) & (x * b < switch)
        if np.any(small):
            q = np.array(q, copy=True)
            q[small] = q_pt_series(x[small], a, b, m)
        total = total + weight * q
    value = total * (w1 * w2) / ((w2 - w1) * vandermonde(s))
    return _unwrap(_check_probability(np.asarray(value), pair))


def maxeig_cdf_2x2(pair, x):
    """Closed form for ``n = m = 2``."""
    if pair.n != 2 or pair.m != 2:
        raise ContractError(f"needs n = m = 2, got n={pair.n}, m={pair.m}")
    x = _positive_grid(x)
    w = pair.omega.values
    s = pair.sigma.values

    def g(y):
        # e^{-y} + y - 1 with a compensated series at small y
        return exp_reg_gamma_stable(2, y)

    total = np.zeros_like(x)
    for i in (1, 2):
        prod = np.ones_like(x)
        for j in (1, 2):
            prod = prod * g(x / (w[abs(i - j)] * s[j - 1]))
        total = total + (-1.0) ** i * prod
    value = w[0] * w[1] * s[0] * s[1] * total / (x * (s[1] - s[0]) * (w[1] - w[0]))
    return _unwrap(_check_probability(np.asarray(value), pair))



def maxeig_quantile(pair, q):
    """Inverse c.d.f. by bracketing and Brent's method (``0 < q < 1``)."""
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {q}")
    scale = float(np.max(pair.omega.array) * np.max(pair.sigma.array))
    lo = hi = scale
    while maxeig_cdf(pair, lo) > q:
        lo /= 4.0
    while maxeig_cdf(pair, hi) < q:
        hi *= 4.0
    return optimize.brentq(lambda x: maxeig_cdf(pair, x) - q, lo, hi, xtol=1e-14 * hi, rtol=1e-13)


def central_grid(pair, points=50, mass=0.99):
    """Evenly spaced ``x`` grid spanning the central ``mass`` of the distribution."""
    tail = 0.5 * (1.0 - mass)
    return np.linspace(maxeig_quantile(pair, tail), maxeig_quantile(pair, 1.0 - tail), points)
