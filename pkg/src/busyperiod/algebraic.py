"""Algebraic engine built on the determinant polynomials of the generator.

They give the continued-fraction MGF, the cut polynomial and the critical
traffic intensities at which a pole leaves through the cut edge.

Polynomials are numpy coefficient arrays, lowest degree first, in the
variable sigma = s + r + mu_1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .model import ModelParams
from .spectral import psi_pm


def eta_chain_mgf(p: ModelParams, s: float) -> float:
    """MGF by backward recursion eta_N = r psi_minus, eta_k = r mu_k / (sigma_k - eta_{k+1})."""
    N, r = p.n_servers, p.r
    _, psm = psi_pm(s, r)
    if N == 1:
        return float(psm)
    eta = r * psm
    for k in range(N - 1, 0, -1):
        den = s + r + k / N - eta
        if den == 0:
            raise ZeroDivisionError(f"continued fraction denominator vanished at level {k}")
        eta = r * (k / N) / den
    return float(eta / r)


def x_recursion(p: ModelParams):
    """Determinant polynomials X_0..X_N of the shifted generator, in sigma_1.

    Coefficientwise: x_n^(l) = mhat_{n-1} x_{n-1}^(l) + x_{n-1}^(l-1) - r mu_{n-1} x_{n-2}^(l),
    where mhat_n = mu_n - mu_1, X_0 = 0 and X_1 = 1.
    """
    N, r = p.n_servers, p.r
    if N < 2:
        raise ValueError("x_recursion needs N >= 2")
    X = [np.zeros(1), np.ones(1)]
    for n in range(2, N + 1):
        mhat = (n - 2) / N
        mu = (n - 1) / N
        prev, prev2 = X[-1], X[-2]
        cur = np.zeros(n)
        cur[: len(prev)] += mhat * prev
        cur[1 : len(prev) + 1] += prev
        cur[: len(prev2)] -= r * mu * prev2
        X.append(cur)
    return X


@dataclass(frozen=True)
class DPolynomials:
    D0: np.ndarray
    D1: np.ndarray


def d_polynomials(p: ModelParams) -> DPolynomials:
    """D0 = X_{N-1}, D1 = -r mu_{N-1} X_{N-2}."""
    N = p.n_servers
    X = x_recursion(p)
    return DPolynomials(X[N - 1].copy(), -p.r * ((N - 1) / N) * X[N - 2])


def _shift(N):
    # sigma_{N-1} - sigma_1 and mu_{N-1} - 1
    return (N - 2) / N, -1.0 / N


def dplus_dminus(p: ModelParams, dp: DPolynomials | None = None) -> np.ndarray:
    """Coefficients of D+ D- = D1^2 + D0[((mu_{N-1}-1) sig_{N-1} + r) D0 + (sig_{N-1} + mu_{N-1} - 1) D1]."""
    dp = d_polynomials(p) if dp is None else dp
    N, r = p.n_servers, p.r
    mh, m1 = _shift(N)
    sig_last = np.array([mh, 1.0])
    a = P.polyadd(m1 * sig_last, [r])
    c = P.polyadd(sig_last, [m1])
    inner = P.polyadd(P.polymul(a, dp.D0), P.polymul(c, dp.D1))
    return P.polytrim(P.polyadd(P.polymul(dp.D1, dp.D1), P.polymul(dp.D0, inner)), tol=0)


def _log_prod_rmu(p):
    N = p.n_servers
    return float(np.sum(np.log(p.r * np.arange(1, N) / N)))


def r_cut_algebraic(p: ModelParams, s, ddm=None):
    """R_cut(s) = prod_k(r mu_k) / (r mu_1 (D+ D-)(s))."""
    if p.n_servers == 1:
        return np.full(np.shape(s), 1.0 / p.r)
    ddm = dplus_dminus(p) if ddm is None else ddm
    sig = np.asarray(s, dtype=float) + p.r + p.mu1
    return math.exp(_log_prod_rmu(p)) / (p.r * p.mu1 * P.polyval(sig, ddm))


@dataclass(frozen=True)
class CutPolynomial:
    n_servers: int
    r: float
    coeffs: np.ndarray
    scale_const: float

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, sigma):
        return P.polyval(sigma, self.coeffs)


def cut_polynomial(p: ModelParams) -> CutPolynomial:
    """Monic form of D+ D- in sigma_1; ``scale_const`` is the leading coefficient."""
    if p.n_servers < 2:
        raise ValueError("the cut polynomial is defined for N >= 2")
    ddm = dplus_dminus(p)
    lead = ddm[-1]
    return CutPolynomial(p.n_servers, p.r, ddm / lead, float(lead))


def _critical_fn(N, y):
    p = ModelParams(N, y * y)
    dp = d_polynomials(p)
    s = -((1.0 - y) ** 2)
    sig1 = s + p.r + p.mu1
    mh, _ = _shift(N)
    return P.polyval(sig1, dp.D0) * (sig1 + mh - y) + P.polyval(sig1, dp.D1)


def critical_r(N: int, grid: int = 2000, tol: float = 1e-12) -> float:
    """Largest r in (0, 1) where a pole leaves through the near cut edge.

    Solves D0 (sigma_{N-1} - sqrt r) + D1 = 0 at s = -(1 - sqrt r)^2 in y = sqrt r.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if N == 1:
        return 0.0
    ys = np.linspace(1e-9, 1 - 1e-9, grid)
    vals = np.array([_critical_fn(N, y) for y in ys])
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]
    if idx.size == 0:
        raise RuntimeError(f"no critical intensity found for N = {N}")
    lo, hi = ys[idx[-1]], ys[idx[-1] + 1]
    flo = _critical_fn(N, lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = _critical_fn(N, mid)
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return float((0.5 * (lo + hi)) ** 2)


def _d_minus_plus(p, dp, s):
    _, psm = psi_pm(s, p.r)
    sig1 = s + p.r + p.mu1
    mh, m1 = _shift(p.n_servers)
    d0 = P.polyval(sig1, dp.D0)
    d1 = P.polyval(sig1, dp.D1)
    sig_last = sig1 + mh
    dm = d0 * (sig_last - p.r * psm) + d1
    dpl = d0 * (sig_last + m1 + p.r * psm) + d1  # r psi_+ = b - r psi_-, sig_last - b = m1
    return dm, dpl


def _polish_dminus(p, dp, s, iters=40):
    # secant iteration on D- starting from a companion-matrix root
    lo, hi = -p.x_minus, 0.0
    h = 1e-7 * max(abs(s), 1e-3)
    s0, s1 = s, min(s + h, -1e-300)
    f0 = _d_minus_plus(p, dp, s0)[0]
    f1 = _d_minus_plus(p, dp, s1)[0]
    for _ in range(iters):
        if f1 == f0:
            break
        s2 = s1 - f1 * (s1 - s0) / (f1 - f0)
        if not lo < s2 < hi:
            return None
        s0, f0, s1 = s1, f1, s2
        f1 = _d_minus_plus(p, dp, s1)[0]
        if abs(s1 - s0) <= 1e-15 * abs(s1):
            break
    sig1 = s1 + p.r + p.mu1
    scale = abs(P.polyval(sig1, dp.D0)) + abs(P.polyval(sig1, dp.D1))
    if abs(f1) > 1e-10 * scale:
        return None
    return s1


def algebraic_poles(p: ModelParams):
    """Real roots of D- in (-x_minus, 0).

    Candidates are the real roots of D+ D-, polished on D- itself so that
    spurious companion-matrix roots are discarded.
    """
    if p.n_servers < 2 or not 0 < p.r < 1:
        return np.zeros(0)
    dp = d_polynomials(p)
    roots = P.polyroots(dplus_dminus(p, dp))
    out = []
    for rt in roots:
        if abs(rt.imag) > 1e-6 * max(1.0, abs(rt)):
            continue
        s = rt.real - p.r - p.mu1
        if not -p.x_minus < s < 0:
            continue
        s = _polish_dminus(p, dp, s)
        if s is None:
            continue
        if all(abs(s - o) > 1e-9 * abs(s) for o in out):
            out.append(s)
    return np.array(sorted(out, reverse=True))


def algebraic_pole_residue(p: ModelParams, dp: DPolynomials | None, s: float) -> float:
    """Coefficient of exp(s t) in the density at a pole s of the MGF.

    (1/r) prod_k(r mu_k) (sigma_{N-1} + mu_{N-1} - 1 + 2 D1/D0) / (D+ D-)'(s).
    """
    dp = d_polynomials(p) if dp is None else dp
    sig1 = s + p.r + p.mu1
    d0 = P.polyval(sig1, dp.D0)
    if d0 == 0:
        raise ZeroDivisionError("D0 vanishes at the pole")
    d1 = P.polyval(sig1, dp.D1)
    mh, m1 = _shift(p.n_servers)
    deriv = P.polyval(sig1, P.polyder(dplus_dminus(p, dp)))
    return math.exp(_log_prod_rmu(p)) / p.r * (sig1 + mh + m1 + 2 * d1 / d0) / deriv
