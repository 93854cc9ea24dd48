import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from oracles import SER_REFERENCE_SPREADS, random_spectrum, rayleigh_ser_1x1
from strategies import spectra, wishart_pairs
from wishart_mrc.channel import ArrayModelParams, MimoConfig, to_wishart_pair
from wishart_mrc.errors import ContractError, DomainError
from wishart_mrc.linalg import EigenSpectrum, vandermonde
from wishart_mrc.maxeig import WishartPair, maxeig_pdf, maxeig_quantile, n2_weights
from wishart_mrc.montecarlo import empirical_maxeig, empirical_ser
from wishart_mrc.performance import (
    SUPPORTED,
    Modulation,
    SnrGrid,
    _ser_closed_form_mp,
    _ser_n2_bracket,
    laplace_sum_closed,
    laplace_sum_direct,
    leading_series_contribution,
    modulation_constants,
    outage_probability,
    ser_closed_form,
    ser_high_snr,
    ser_quadrature,
    snr_pdf,
)
from wishart_mrc.special import eta_tilde

RX_SPREAD, TX_SPREAD = SER_REFERENCE_SPREADS
BPSK = modulation_constants("bpsk")
PAM4 = modulation_constants("4-pam")
ALL_MODULATIONS = ["bpsk", "bfsk-orthogonal", "bfsk-min-correlation", "qpsk", "4-pam", "8-pam", "8-psk"]


def db(value):
    return 10.0 ** (value / 10.0)


def ser_reference_pair(n_t, n_r):
    return to_wishart_pair(ser_reference_config(n_t, n_r))


def ser_reference_config(n_t, n_r, snr=1.0):
    return MimoConfig.from_models(ArrayModelParams(n_t, TX_SPREAD), ArrayModelParams(n_r, RX_SPREAD), snr)


def outage_reference_config():
    rx, tx = math.pi / 64, math.pi / 16
    return MimoConfig.from_models(ArrayModelParams(2, tx), ArrayModelParams(4, rx), 1.0)


# -- modulation registry -------------------------------------------------------------------


def test_bpsk_constants():
    mod = modulation_constants("bpsk")
    assert (mod.a, mod.b, mod.exact) == (1.0, 1.0, True)


def test_pam4_constants():
    mod = modulation_constants("4-pam")
    assert (mod.a, mod.b, mod.exact) == (1.5, pytest.approx(0.2, rel=1e-15), True)


def test_qpsk_constants_flagged_approximate():
    mod = modulation_constants("QPSK")
    assert mod.a == 2.0
    assert mod.b == pytest.approx(0.5, rel=1e-15)
    assert not mod.exact


@pytest.mark.parametrize(
    "name, a, b",
    [("bfsk-orthogonal", 1.0, 0.5), ("bfsk-min-correlation", 1.0, 0.715), ("8-pam", 1.75, 3 / 63),
     ("8-psk", 2.0, math.sin(math.pi / 8) ** 2)],
)
def test_other_constants(name, a, b):
    mod = modulation_constants(name)
    assert (mod.a, mod.b) == (pytest.approx(a, rel=1e-15), pytest.approx(b, rel=1e-15))


def test_unknown_modulation_lists_registry():
    with pytest.raises(KeyError) as info:
        modulation_constants("16-qam")
    for name in SUPPORTED:
        assert name in str(info.value)


def test_modulation_rejects_non_positive():
    with pytest.raises(DomainError):
        Modulation("x", 0.0, 1.0)


def test_snr_grid_db_round_trip():
    grid = SnrGrid.from_db([0, 5, 10])
    assert grid.points[2] == pytest.approx(10.0, rel=1e-15)
    np.testing.assert_allclose(grid.db_labels, [0, 5, 10], atol=1e-12)


@pytest.mark.parametrize("points", [(), (1.0, 1.0), (2.0, 1.0), (-1.0,)])
def test_snr_grid_validation(points):
    with pytest.raises(DomainError):
        SnrGrid(points)


# -- output SNR density and outage ---------------------------------------------------------


@given(wishart_pairs(max_n=3, max_m=3))
def test_snr_pdf_unit_mean_is_maxeig_pdf(pair):
    for q in (0.1, 0.5, 0.9):
        x = maxeig_quantile(pair, q)
        assert snr_pdf(pair, 1.0, x) == maxeig_pdf(pair, x)


@settings(max_examples=10)
@given(wishart_pairs(max_n=3, max_m=3), st.floats(0.1, 100.0))
def test_snr_pdf_normalised(pair, mean_snr):
    edges = [0.0] + [mean_snr * maxeig_quantile(pair, q) for q in (0.01, 0.5, 0.99)] + [np.inf]
    total = sum(
        integrate.quad(lambda g: snr_pdf(pair, mean_snr, g) if g > 0 else 0.0, a, b, epsabs=1e-13, epsrel=1e-12,
                       limit=200)[0]
        for a, b in zip(edges[:-1], edges[1:])
    )
    assert total == pytest.approx(1.0, abs=1e-8)


@given(wishart_pairs(max_n=3, max_m=3), st.floats(0.1, 100.0), st.floats(0.05, 0.95))
def test_snr_pdf_scaling(pair, mean_snr, q):
    gamma = mean_snr * maxeig_quantile(pair, q)
    assert snr_pdf(pair, 2 * mean_snr, 2 * gamma) == pytest.approx(snr_pdf(pair, mean_snr, gamma) / 2, rel=1e-12)


def test_outage_limits():
    pair = ser_reference_pair(2, 4)
    assert outage_probability(pair, 1.0, 1e-12) < 1e-20
    assert outage_probability(pair, 1.0, 1e6) == 1.0


@given(wishart_pairs(), st.floats(0.01, 100), st.floats(0.01, 50))
def test_outage_functional_form(pair, mean_snr, threshold):
    assert outage_probability(pair, mean_snr, threshold) == outage_probability(pair, 1.0, threshold / mean_snr)


@given(wishart_pairs(), st.floats(0.1, 10))
def test_outage_monotone(pair, mean_snr):
    th = np.geomspace(0.01, 100, 60)
    p = outage_probability(pair, mean_snr, th)
    assert np.all(np.diff(p) >= 0)
    snrs = np.geomspace(0.1, 100, 30)
    q = [outage_probability(pair, g, 1.0) for g in snrs]
    assert np.all(np.diff(q) <= 0)


def test_outage_matches_monte_carlo():
    cfg = outage_reference_config()
    pair = to_wishart_pair(cfg)
    emp = empirical_maxeig(cfg, 10**5, seed=3)
    for q in (0.05, 0.25, 0.5, 0.75, 0.95):
        th = maxeig_quantile(pair, q)
        p_hat = emp.ecdf(th)
        se = math.sqrt(p_hat * (1 - p_hat) / emp.sample_count)
        assert abs(outage_probability(pair, 1.0, th) - p_hat) < 3 * se


# -- closed-form SER ------------------------------------------------------------------------


def test_closed_form_zero_snr_limit():
    pair = ser_reference_pair(2, 3)
    assert ser_closed_form(pair, 1e-9, BPSK) == 0.5
    # just above the cutoff the polynomial form is still exact
    for g in (2e-6, 1e-4, 1e-2):
        assert ser_closed_form(pair, g, BPSK) == pytest.approx(ser_quadrature(pair, g, BPSK), rel=1e-8)


@pytest.mark.parametrize("m", [2, 3, 4])
@pytest.mark.parametrize("mod", [BPSK, PAM4], ids=["bpsk", "4-pam"])
def test_closed_form_matches_quadrature_at_reference_configuration(m, mod):
    pair = ser_reference_pair(2, m)
    for snr_db in (0, 5, 10, 15, 20):
        g = db(snr_db)
        assert ser_closed_form(pair, g, mod) == pytest.approx(ser_quadrature(pair, g, mod), rel=1e-8)


@settings(max_examples=15)
@given(st.integers(2, 5).flatmap(lambda m: wishart_pairs(n=2, m=m)), st.sampled_from([0, 5, 10, 20, 30]),
       st.sampled_from(ALL_MODULATIONS))
def test_closed_form_matches_quadrature_random_spectra(pair, snr_db, name):
    mod = modulation_constants(name)
    g = db(snr_db)
    assert ser_closed_form(pair, g, mod) == pytest.approx(ser_quadrature(pair, g, mod), rel=1e-8)


def test_closed_form_near_asymptote_at_40db():
    pair = ser_reference_pair(2, 2)
    ratio = ser_closed_form(pair, db(40), BPSK) / ser_high_snr(pair, db(40), BPSK)
    assert ratio == pytest.approx(1.0, abs=0.02)


@given(st.integers(2, 5).flatmap(lambda m: wishart_pairs(n=2, m=m)), st.floats(0.5, 1000.0))
def test_closed_form_invariant_under_omega_relabelling(pair, mean_snr):
    w1, w2 = pair.omega.values
    s = pair.sigma.values
    a = _ser_closed_form_mp(w1, w2, s, mean_snr, BPSK)
    b = _ser_closed_form_mp(w2, w1, s, mean_snr, BPSK)
    assert a == pytest.approx(b, rel=1e-12)


def test_closed_form_rejects_other_n():
    pair = WishartPair.from_values([0.5, 1.0, 1.5], [0.5, 1.0, 1.5])
    with pytest.raises(ContractError, match="ser_quadrature"):
        ser_closed_form(pair, 10.0, BPSK)
    with pytest.raises(ContractError):
        ser_high_snr(pair, 10.0, BPSK)


def test_cross_terms_alternate_in_sign():
    """Dropping the (-1)^l carried by (y/2)^l breaks the closed form."""
    pair = ser_reference_pair(2, 3)
    w1, w2 = pair.omega.values
    s = pair.sigma.values
    g = db(10)
    m = 3

    def unsigned_bracket(a_rate, b_rate, m, gb, eta=eta_tilde):
        ya, yb = -a_rate / gb, -b_rate / gb
        out = eta(0, ya + yb, m)
        for ell in range(m):
            out -= eta(ell, ya, m) * abs(yb / 2) ** ell / math.factorial(ell)
            out -= eta(ell, yb, m) * abs(ya / 2) ** ell / math.factorial(ell)
        return out

    pref = w1 * w2 * BPSK.a * BPSK.b * g / ((w2 - w1) * vandermonde(s))
    signed = pref * sum(
        wt * _ser_n2_bracket(1 / (w2 * s[p]), 1 / (w1 * s[t]), m, g) for p, t, wt in n2_weights(s)
    )
    unsigned = pref * sum(
        wt * unsigned_bracket(1 / (w2 * s[p]), 1 / (w1 * s[t]), m, g) for p, t, wt in n2_weights(s)
    )
    reference = ser_quadrature(pair, g, BPSK)
    assert signed == pytest.approx(reference, rel=1e-4)
    assert abs(unsigned - reference) > 10 * reference


# -- quadrature SER ---------------------------------------------------------------------


@pytest.mark.parametrize("mean_snr", [0.1, 1.0, 10.0, 100.0, 1e4])
def test_quadrature_single_branch(mean_snr):
    pair = WishartPair.from_values([1.0], [1.0])
    assert ser_quadrature(pair, mean_snr, BPSK) == pytest.approx(rayleigh_ser_1x1(mean_snr), rel=1e-9)


@pytest.mark.parametrize("n_t, n_r", [(2, 2), (2, 3), (2, 4), (3, 3)])
def test_quadrature_matches_monte_carlo_at_10db(n_t, n_r):
    cfg = ser_reference_config(n_t, n_r, db(10))
    est, se = empirical_ser(cfg, BPSK, 10**6, seed=17)
    assert abs(ser_quadrature(to_wishart_pair(cfg), db(10), BPSK) - est) < 3 * se


# -- high-SNR asymptote --------------------------------------------------------------------


@given(spectra(2), st.integers(2, 5).flatmap(lambda m: spectra(m)), st.floats(1.0, 1e4))
def test_asymptote_determinant_scaling(omega, sigma, mean_snr):
    m = len(sigma)
    base = ser_high_snr(WishartPair.from_values(omega, sigma), mean_snr, BPSK)
    # halve det(sigma) by scaling every sigma_j by 2^(-1/m)
    half_sigma = WishartPair(EigenSpectrum.from_values(omega), EigenSpectrum.from_values(sigma).scaled(2 ** (-1 / m)))
    half_omega = WishartPair(EigenSpectrum.from_values(omega).scaled(2**-0.5), EigenSpectrum.from_values(sigma))
    assert ser_high_snr(half_sigma, mean_snr, BPSK) / base == pytest.approx(4.0, rel=1e-12)
    assert ser_high_snr(half_omega, mean_snr, BPSK) / base == pytest.approx(2.0**m, rel=1e-12)


@pytest.mark.parametrize("m", [2, 3])
def test_diversity_slope(m):
    pair = ser_reference_pair(2, m)
    lo, hi = ser_closed_form(pair, db(38), BPSK), ser_closed_form(pair, db(42), BPSK)
    slope = (math.log10(hi) - math.log10(lo)) / 0.4
    assert slope == pytest.approx(-2 * m, rel=0.02)


@given(st.integers(2, 4).flatmap(lambda m: wishart_pairs(n=2, m=m)), st.floats(0.3, 0.99))
def test_more_correlation_never_helps_asymptotically(pair, shrink):
    # rescale so det drops while the trace-normalised shape is kept
    base = ser_high_snr(pair, 1e3, BPSK)
    assert ser_high_snr(WishartPair(pair.omega.scaled(shrink), pair.sigma), 1e3, BPSK) >= base
    assert ser_high_snr(WishartPair(pair.omega, pair.sigma.scaled(shrink)), 1e3, BPSK) >= base


# -- identities of the derivation -----------------------------------------------------------


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_laplace_expansion_identity(m, rng):
    for _ in range(20):
        omega = random_spectrum(rng, 2)
        sigma = random_spectrum(rng, m)
        assert laplace_sum_direct(omega, sigma) == pytest.approx(laplace_sum_closed(omega, sigma), rel=1e-9)


@settings(max_examples=25)
@given(st.integers(2, 5).flatmap(lambda m: wishart_pairs(n=2, m=m)), st.floats(0.5, 1e4),
       st.sampled_from(ALL_MODULATIONS))
def test_leading_series_term_cancels(pair, mean_snr, name):
    mod = modulation_constants(name)
    contribution, scale = leading_series_contribution(pair, mean_snr, mod)
    ser = ser_closed_form(pair, mean_snr, mod)
    assert scale > 0
    assert abs(contribution) < 1e-12 * ser


@settings(max_examples=15)
@given(st.integers(2, 4).flatmap(lambda m: wishart_pairs(n=2, m=m)), st.sampled_from(ALL_MODULATIONS))
def test_ser_decreasing_in_snr(pair, name):
    mod = modulation_constants(name)
    values = [ser_closed_form(pair, db(x), mod) for x in range(-10, 41, 5)]
    assert all(b < a for a, b in zip(values, values[1:]))


@settings(max_examples=10)
@given(wishart_pairs(n=3, m=3), st.sampled_from(["bpsk", "4-pam"]))
def test_quadrature_ser_decreasing_in_snr_general_n(pair, name):
    mod = modulation_constants(name)
    values = [ser_quadrature(pair, db(x), mod) for x in range(-10, 31, 10)]
    assert all(b < a for a, b in zip(values, values[1:]))


def test_ser_bounded_by_half_a():
    pair = ser_reference_pair(2, 4)
    for name in ALL_MODULATIONS:
        mod = modulation_constants(name)
        for x in (-20, 0, 20):
            assert 0.0 <= ser_closed_form(pair, db(x), mod) <= mod.a / 2
