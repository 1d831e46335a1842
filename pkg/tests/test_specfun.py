import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from busyperiod.specfun import (
    LossOfPrecisionWarning,
    SeriesConvergenceError,
    bessel_i_scaled,
    bessel_i_scaled_seq,
    erfcx,
    gauss_laguerre,
    kummer_m_reg,
    log_bessel_i_seq,
    log_marcum_qbar,
    marcum_qbar,
    upper_gamma,
)
from busyperiod.tridiag import tridiag_eigen


@pytest.mark.parametrize("x", [1e-3, 0.1, 1.0, 7.5, 50.0, 600.0, 3e4, 3e5])
def test_scaled_bessel_sequence_matches_scipy(x):
    got = bessel_i_scaled_seq(40, x)
    ref = special.ive(np.arange(41), x)
    mask = ref > 1e-290
    np.testing.assert_allclose(got[mask], ref[mask], rtol=2e-13)


def test_scaled_bessel_at_zero():
    seq = bessel_i_scaled_seq(5, 0.0)
    np.testing.assert_array_equal(seq, [1, 0, 0, 0, 0, 0])


def test_negative_order_mirrors():
    assert bessel_i_scaled(-3, 2.5) == pytest.approx(bessel_i_scaled(3, 2.5), rel=1e-15)


def test_bessel_rejects_negative_argument():
    with pytest.raises(ValueError):
        bessel_i_scaled_seq(3, -1.0)


@pytest.mark.parametrize("z", [0.5 + 0.5j, 3.0 - 4.0j, -2.0 + 0.1j, 20.0 + 1.0j])
def test_complex_log_bessel_against_mpmath(z):
    got = np.exp(log_bessel_i_seq(6, z))
    ref = [complex(mpmath.besseli(n, z)) for n in range(7)]
    np.testing.assert_allclose(got, ref, rtol=1e-12)


@given(st.floats(0.01, 200.0))
@settings(max_examples=60, deadline=None)
def test_bessel_generating_function_sum(x):
    seq = bessel_i_scaled_seq(int(x + 40 * math.sqrt(x + 1) + 40), x)
    assert seq[0] + 2 * seq[1:].sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize(
    "a,b,ref",
    [(2.0, 1.0, 0.0818923036305939960894), (1.0, 2.0, 0.7309879399640900033215), (5.0, 7.0, 0.9722852137040365722029)],
)
def test_marcum_against_integral_oracle(a, b, ref):
    # reference values from adaptive quadrature of the defining integral at 30 digits
    for series in ("neu1", "neu2", "auto"):
        assert marcum_qbar(a, b, series=series) == pytest.approx(ref, rel=1e-12)


@given(st.floats(0.05, 12.0), st.floats(0.05, 12.0))
@settings(max_examples=80, deadline=None)
def test_marcum_matches_noncentral_chi2(a, b):
    ref = stats.ncx2.cdf(b * b, 2, a * a)
    assert marcum_qbar(a, b) == pytest.approx(ref, rel=1e-8, abs=1e-13)


def test_marcum_edge_arguments():
    assert marcum_qbar(1.5, 0.0) == 0.0
    assert marcum_qbar(0.0, 2.0) == pytest.approx(-math.expm1(-2.0), rel=1e-15)
    assert isinstance(marcum_qbar(1.0, 2.0), float)
    assert isinstance(marcum_qbar(1.0 + 0.1j, 2.0), complex)


def test_log_marcum_consistent():
    assert np.exp(log_marcum_qbar(3.0, 1.0)).real == pytest.approx(marcum_qbar(3.0, 1.0), rel=1e-13)
    assert np.exp(log_marcum_qbar(1.0, 3.0)).real == pytest.approx(marcum_qbar(1.0, 3.0), rel=1e-13)


def test_marcum_term_budget():
    with pytest.raises(SeriesConvergenceError):
        marcum_qbar(300.0, 200.0, max_terms=50)


@pytest.mark.parametrize("a,b,z", [(0.3, 1.7, 4.0), (-2.5, 3.2, 1.1), (1.0, 2.0, 0.7), (2.2, 0.5, 9.0), (0.7, 2.1, -6.0)])
def test_kummer_against_mpmath(a, b, z):
    ref = float(mpmath.hyp1f1(a, b, z) / mpmath.gamma(b))
    assert kummer_m_reg(a, b, z) == pytest.approx(ref, rel=1e-12)


def test_kummer_nonpositive_integer_b_limit():
    # limit b -> -n equals (a)_{n+1} z^{n+1} M(a+n+1, n+2, z) / (n+1)!
    a, z = 0.4, 2.0
    ref = float(mpmath.rf(a, 2) * z**2 * mpmath.hyp1f1(a + 2, 3, z) / 2)
    assert kummer_m_reg(0.4, -1.0, 2.0) == pytest.approx(ref, rel=1e-12)


def test_kummer_reference_values():
    rho = 0.75
    assert kummer_m_reg(1.0, 2.0, rho) == pytest.approx(math.expm1(rho) / rho, rel=1e-14)
    assert kummer_m_reg(0.0, 3.0, rho) == pytest.approx(1.0 / math.gamma(3.0), rel=1e-14)


def test_kummer_direct_series_warns_on_cancellation():
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        kummer_m_reg(0.5, 1.5, -40.0, transform=False)
    assert any(issubclass(w.category, LossOfPrecisionWarning) for w in rec)


def test_upper_gamma_half_is_erfc():
    x = np.array([0.1, 1.0, 4.0])
    np.testing.assert_allclose(upper_gamma(0.5, x), math.sqrt(math.pi) * special.erfc(np.sqrt(x)), rtol=1e-13)
    with pytest.raises(ValueError):
        upper_gamma(0.5, -1.0)


def test_erfcx_values():
    assert erfcx(0.0) == 1.0
    assert erfcx(30.0) == pytest.approx(1 / (30 * math.sqrt(math.pi)) * (1 - 1 / (2 * 900)), rel=1e-6)


@pytest.mark.parametrize("L", [4, 16, 64])
def test_gauss_laguerre_matches_numpy(L):
    x, w = gauss_laguerre(L)
    xr, wr = np.polynomial.laguerre.laggauss(L)
    np.testing.assert_allclose(x, xr, rtol=1e-12)
    np.testing.assert_allclose(w, wr, rtol=1e-9, atol=1e-300)


def test_gauss_laguerre_integrates_polynomials():
    x, w = gauss_laguerre(10)
    for k in range(19):
        assert np.sum(w * x**k) == pytest.approx(math.factorial(k), rel=1e-11)


@given(st.integers(2, 40), st.integers(0, 2**31 - 1))
@settings(max_examples=40, deadline=None)
def test_tridiag_eigen_matches_dense(n, seed):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=n)
    e = rng.uniform(0.1, 1.0, size=n - 1)
    vals, vecs = tridiag_eigen(d, e, rows=None)
    A = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    ref = np.linalg.eigvalsh(A)
    np.testing.assert_allclose(vals, ref, atol=1e-12 * max(1, np.abs(ref).max()))
    np.testing.assert_allclose(A @ vecs - vecs * vals, 0, atol=1e-10)


def test_tridiag_selected_rows_match_dense():
    rng = np.random.default_rng(3)
    n = 25
    d, e = rng.normal(size=n), rng.uniform(0.1, 1.0, size=n - 1)
    vals, (first, last) = tridiag_eigen(d, e, rows=(0, -1))
    ref_vals, ref_vecs = np.linalg.eigh(np.diag(d) + np.diag(e, 1) + np.diag(e, -1))
    np.testing.assert_allclose(vals, ref_vals, atol=1e-12)
    np.testing.assert_allclose(first**2, ref_vecs[0] ** 2, atol=1e-12)
    np.testing.assert_allclose(first * last, ref_vecs[0] * ref_vecs[-1], atol=1e-12)


def test_tridiag_input_checks():
    with pytest.raises(ValueError):
        tridiag_eigen([1.0, 2.0], [0.5, 0.5])
