import math

import numpy as np
import pytest
from scipy import special

from busyperiod.algebraic import cut_polynomial
from busyperiod.complexpole import (
    ComplexPoleDensity,
    IllConditionedError,
    beta_system,
    pdf_cut_bessel,
    pdf_cut_marcum,
    pdf_n1,
    pdf_n2,
    solve_cut_roots,
)
from busyperiod.model import ModelParams
from busyperiod.spectral import bp_distribution


def test_single_server_reference():
    p = ModelParams(1, 0.5)
    assert pdf_n1(p, 1.0) == pytest.approx(0.283759858471441858530293139222, rel=1e-14)
    assert pdf_n1(p, 0.0) == 1.0
    with pytest.raises(ValueError):
        pdf_n1(ModelParams(2, 0.5), 1.0)


@pytest.mark.parametrize("r", [0.05, 0.2, 0.25, 0.3, 0.6, 0.95])
def test_two_server_against_spectral(r):
    p = ModelParams(2, r)
    d = bp_distribution(p)
    for t in (0.0, 0.4, 3.0, 15.0, 60.0):
        assert pdf_n2(p, t) == pytest.approx(d.pdf(t), abs=1e-10)


def test_two_server_low_load_pole_term():
    # for r < 1/4 the long-time density is the pole term (1/2 - 2r) e^{(r - 1/2) t}
    p = ModelParams(2, 0.1)
    t = 200.0
    assert pdf_n2(p, t) == pytest.approx(0.3 * math.exp(-0.4 * t), rel=1e-6)


def test_cut_roots_have_small_residual():
    cp = cut_polynomial(ModelParams(6, 0.7))
    roots = solve_cut_roots(cp)
    assert len(roots) == 2 * 6 - 3
    assert np.max(np.abs(cp(roots))) < 1e-10


def test_ill_conditioning_is_reported():
    with pytest.raises(IllConditionedError):
        beta_system(ModelParams(40, 0.5))


def test_beta_system_structure():
    p = ModelParams(5, 0.6)
    bs = beta_system(p)
    assert np.all(np.abs(bs.beta) < 1)
    alpha = bs.alpha
    np.testing.assert_allclose(bs.beta**2 + 2 * alpha * bs.beta + 1, 0, atol=1e-12)
    assert bs.c0 == pytest.approx(-np.sum(bs.gamma))
    d = bs.to_dict()
    assert len(d["beta"]) == 7 and len(d["c0"]) == 2
    with pytest.raises(ValueError):
        beta_system(ModelParams(2, 0.5))


@pytest.mark.parametrize("N,r", [(3, 0.5), (6, 0.3), (8, 0.9)])
def test_marcum_and_bessel_forms_agree(N, r):
    p = ModelParams(N, r)
    bs = beta_system(p)
    for t in (0.0, 0.5, 4.0, 30.0):
        assert pdf_cut_marcum(p, bs, t) == pytest.approx(pdf_cut_bessel(p, bs, t), abs=1e-13)


def test_bessel_series_against_scipy():
    # the series sum beta^n I_n(T) against a direct scipy evaluation
    p = ModelParams(4, 0.45)
    bs = beta_system(p)
    t = 2.5
    T = 2 * math.sqrt(p.r) * t
    n = np.arange(0, 200)
    iv = special.ive(n, T) * math.exp(T - (1 + p.r) * t)
    series = np.array([np.sum(be ** n[1:] * iv[1:]) for be in bs.beta])
    ref = (bs.prefactor * (bs.c0 * iv[0] - 2 * np.sum(bs.gamma * series))).real
    assert pdf_cut_marcum(p, bs, t) == pytest.approx(ref, abs=1e-14)


@pytest.mark.parametrize("N,r", [(3, 0.3), (5, 0.6), (10, 0.9), (12, 0.5)])
def test_density_against_spectral(N, r):
    p = ModelParams(N, r)
    cd = ComplexPoleDensity(p)
    d = bp_distribution(p)
    t = np.linspace(0, 10 * d.mean(), 25)
    np.testing.assert_allclose(cd.pdf(t), d.pdf(t), atol=1e-10)


@pytest.mark.parametrize("N,r", [(2, 0.4), (4, 0.5)])
def test_survival_against_spectral(N, r):
    p = ModelParams(N, r)
    cd = ComplexPoleDensity(p)
    d = bp_distribution(p)
    for t in (0.0, 1.0, 8.0):
        assert cd.sf(t) == pytest.approx(d.sf(t), abs=1e-9)


def test_density_domain():
    with pytest.raises(ValueError):
        ComplexPoleDensity(ModelParams(3, 1.0))
    with pytest.raises(ValueError):
        ComplexPoleDensity(ModelParams(3, 1.5))
    with pytest.raises(ValueError):
        pdf_cut_marcum(ModelParams(3, 0.5), beta_system(ModelParams(3, 0.5)), -1.0)
