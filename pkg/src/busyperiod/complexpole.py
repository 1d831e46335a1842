"""Closed-form busy-period density from the roots of the cut polynomial.

The cut integral over the unit circle reduces to residues at the roots beta
of ``z^2 + 2 alpha z + 1`` inside the circle, each contributing a Bessel
series that sums to a complementary Marcum function.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from numpy.polynomial import polynomial as P

from . import algebraic
from .model import ModelParams
from .specfun import bessel_i_scaled, log_bessel_i_seq, log_marcum_qbar

UNIT_CIRCLE_TOL = 1e-9
ROOT_ERROR_TOL = 1e-7


class IllConditionedError(RuntimeError):
    """Root extraction lost too much accuracy; use the spectral engine instead."""


class UnitCircleDegeneracyError(ValueError):
    """A root beta lies on the unit circle."""


def solve_cut_roots(cp: algebraic.CutPolynomial) -> np.ndarray:
    """Roots of the monic cut polynomial via companion-matrix eigenvalues."""
    roots = P.polyroots(cp.coeffs).astype(complex)
    scale = np.array([np.sum(np.abs(cp.coeffs) * np.abs(z) ** np.arange(len(cp.coeffs))) for z in roots])
    resid = np.abs(P.polyval(roots, cp.coeffs))
    if np.any(resid > 1e-8 * scale):
        raise IllConditionedError(
            f"cut polynomial roots inaccurate for N={cp.n_servers} "
            f"(max relative residual {np.max(resid / scale):.1e}); use the spectral engine"
        )
    # first-order relative root error from coefficient rounding
    k = np.arange(len(cp.coeffs))
    dz = np.abs(P.polyval(roots, P.polyder(cp.coeffs))) * np.maximum(np.abs(roots), 1e-300)
    cond = np.array([np.sum(np.abs(cp.coeffs) * np.abs(z) ** k) for z in roots]) / dz
    est = float(np.max(cond)) * np.finfo(float).eps
    if est > ROOT_ERROR_TOL:
        raise IllConditionedError(
            f"cut polynomial roots ill-conditioned for N={cp.n_servers} "
            f"(estimated relative error {est:.1e}); use the spectral engine"
        )
    # snap conjugate pairs so the beta set is closed under conjugation
    real = np.abs(roots.imag) <= 1e-12 * np.maximum(1.0, np.abs(roots))
    roots[real] = roots[real].real
    return roots


@dataclass(frozen=True)
class BetaSystem:
    sigma_roots: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    c0: complex
    prefactor: float  # multiplies exp(-(1+r)t) [c0 I0 + 2 sum c_n I_n]

    def to_dict(self):
        cz = lambda a: [[float(z.real), float(z.imag)] for z in np.atleast_1d(a)]
        return {
            "sigma_roots": cz(self.sigma_roots),
            "alpha": cz(self.alpha),
            "beta": cz(self.beta),
            "gamma": cz(self.gamma),
            "c0": cz(self.c0)[0],
            "prefactor": self.prefactor,
        }


def beta_system(p: ModelParams, roots=None) -> BetaSystem:
    """Map cut-polynomial roots inside the unit circle and form the residues."""
    N, r = p.n_servers, p.r
    if N < 3:
        raise ValueError("beta_system needs N >= 3; N = 1, 2 have dedicated forms")
    cp = algebraic.cut_polynomial(p)
    roots = solve_cut_roots(cp) if roots is None else np.asarray(roots, dtype=complex)
    M = len(roots)
    sr = math.sqrt(r)
    alpha = (p.mu1 - 1.0 - roots) / (2.0 * sr)
    disc = np.sqrt(alpha * alpha - 1.0 + 0j)
    b1, b2 = -alpha + disc, -alpha - disc
    beta = np.where(np.abs(b1) < np.abs(b2), b1, b2)
    if np.any(np.abs(np.abs(beta) - 1.0) < UNIT_CIRCLE_TOL):
        raise UnitCircleDegeneracyError(f"a root maps onto the unit circle at N={N}, r={r}")
    gamma = np.empty(M, dtype=complex)
    for k in range(M):
        o = np.delete(beta, k)
        Dk = np.prod((beta[k] - o) * (beta[k] - 1.0 / o))
        gamma[k] = beta[k] ** (2 * N - 5) * (1.0 - beta[k] ** 2) / Dk
    # R_cut = K / C_N(sigma); K from the unnormalized product D+ D-
    log_k = float(np.sum(np.log(r * np.arange(1, N) / N))) - math.log(r * p.mu1 * abs(cp.scale_const))
    sign_k = math.copysign(1.0, cp.scale_const)
    pref = -0.5 * r * p.mu1 * sign_k * math.exp(log_k - 0.5 * M * math.log(r))
    return BetaSystem(roots, alpha, beta, gamma, complex(-np.sum(gamma)), pref)


def _log_beta_series(beta, T):
    # log sum_{n>=1} beta^n I_n(T) through the complementary Marcum function
    a = cmath.sqrt(T / beta)
    b = beta * a
    return log_marcum_qbar(a, b) + (a * a + b * b) / 2.0


def pdf_cut_marcum(p: ModelParams, bs: BetaSystem, t: float) -> float:
    """Cut part of the density as a finite sum of Marcum functions."""
    if t < 0:
        raise ValueError("t must be non-negative")
    r = p.r
    T = 2.0 * math.sqrt(r) * t
    if t == 0:
        return float((bs.prefactor * bs.c0).real)
    decay = -((1.0 - math.sqrt(r)) ** 2) * t
    base = bs.c0 * bessel_i_scaled(0, T) * math.exp(decay)
    acc = 0j
    for g, be in zip(bs.gamma, bs.beta):
        # |sum beta^n I_n(T)| <= exp(T): skip terms that cannot register
        if math.log(abs(g * bs.prefactor) + 1e-300) + decay < -745.0:
            continue
        acc += g * np.exp(_log_beta_series(be, T) - (1.0 + r) * t)
    val = bs.prefactor * (base - 2.0 * acc)
    return float(val.real)


def pdf_cut_bessel(p: ModelParams, bs: BetaSystem, t: float, tol=1e-17) -> float:
    """Cut part of the density from the explicit Bessel series (adaptive truncation)."""
    r = p.r
    T = 2.0 * math.sqrt(r) * t
    if t == 0:
        return float((bs.prefactor * bs.c0).real)
    bmax = float(np.max(np.abs(bs.beta)))
    nmax = int(T + 12 * math.sqrt(T + 1) + 40)
    while True:
        logi = log_bessel_i_seq(nmax, T).real - (1.0 + r) * t
        n = np.arange(nmax + 1)
        if n[-1] * math.log(bmax) + logi[-1] < math.log(tol) + logi.max():
            break
        nmax *= 2
    iv = np.exp(logi)
    series = np.array([np.sum(be ** n[1:] * iv[1:]) for be in bs.beta])
    val = bs.prefactor * (bs.c0 * iv[0] - 2.0 * np.sum(bs.gamma * series))
    return float(val.real)


def pole_terms(p: ModelParams):
    """Real poles of the MGF and their density coefficients from the algebraic engine."""
    if p.n_servers < 2:
        return np.zeros(0), np.zeros(0)
    poles = algebraic.algebraic_poles(p)
    dp = algebraic.d_polynomials(p)
    res = np.array([algebraic.algebraic_pole_residue(p, dp, s) for s in poles])
    return poles, res


def pdf_n1(p: ModelParams, t: float) -> float:
    """Single-server density exp(-(1+r)t) I_1(2 sqrt(r) t) / (sqrt(r) t)."""
    if p.n_servers != 1:
        raise ValueError("pdf_n1 requires N = 1")
    r = p.r
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0 or r == 0:
        return math.exp(-t)
    x = 2.0 * math.sqrt(r) * t
    return math.exp(-((1.0 - math.sqrt(r)) ** 2) * t) * bessel_i_scaled(1, x) / (math.sqrt(r) * t)


def pdf_n2(p: ModelParams, t: float) -> float:
    """Two-server density: Bessel and real-argument Marcum terms plus the pole below r = 1/4."""
    if p.n_servers != 2:
        raise ValueError("pdf_n2 requires N = 2")
    r = p.r
    if t < 0:
        raise ValueError("t must be non-negative")
    T = 2.0 * math.sqrt(r) * t
    decay = -((1.0 - math.sqrt(r)) ** 2) * t
    val = math.exp(decay) * (2.0 * min(r, 0.25) * bessel_i_scaled(0, T) + math.sqrt(r) * bessel_i_scaled(1, T))
    if r != 0.25 and t > 0:
        a1, b1 = (math.sqrt(t), math.sqrt(4 * r * t)) if r <= 0.25 else (math.sqrt(4 * r * t), math.sqrt(t))
        lq = log_marcum_qbar(a1, b1).real
        val -= 2.0 * abs(r - 0.25) * math.exp(lq - (r + 1.0) * t + 2.0 * (r + 0.25) * t)
    if r < 0.25:
        val += (0.5 - 2.0 * r) * math.exp((r - 0.5) * t)
    return val


class ComplexPoleDensity:
    """Full density (poles plus cut) with survival function by quadrature."""

    def __init__(self, p: ModelParams):
        p.require_ergodic()
        if not 0 < p.r < 1:
            raise ValueError("complex-pole method needs 0 < r < 1")
        self.params = p
        N = p.n_servers
        self.bs = beta_system(p) if N >= 3 else None
        self.poles, self.residues = pole_terms(p) if N >= 3 else (np.zeros(0), np.zeros(0))

    def pdf_cut(self, t):
        return pdf_cut_marcum(self.params, self.bs, t)

    def pdf(self, t):
        p = self.params
        if np.ndim(t):
            return np.array([self.pdf(float(x)) for x in np.ravel(t)]).reshape(np.shape(t))
        if p.n_servers == 1:
            return pdf_n1(p, t)
        if p.n_servers == 2:
            return pdf_n2(p, t)
        return self.pdf_cut(t) + float(np.sum(self.residues * np.exp(self.poles * t)))

    def sf(self, t):
        """Survival function: poles integrated exactly, the rest by adaptive quadrature."""
        p = self.params
        if np.ndim(t):
            return np.array([self.sf(float(x)) for x in np.ravel(t)]).reshape(np.shape(t))
        if t < 0:
            raise ValueError("t must be non-negative")
        if p.n_servers <= 2:
            f, pole = self.pdf, 0.0
        else:
            f = self.pdf_cut
            pole = float(np.sum(self.residues / -self.poles * np.exp(self.poles * t)))
        scale = 1.0 / p.x_minus
        head, _ = integrate.quad(f, t, t + 20 * scale, epsabs=1e-14, epsrel=1e-12, limit=400)
        tail, _ = integrate.quad(f, t + 20 * scale, np.inf, epsabs=1e-14, epsrel=1e-12, limit=400)
        return pole + head + tail
