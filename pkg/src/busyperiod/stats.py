"""Summary statistics of busy-period laws."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, logsumexp

from .model import ExponentialMixture, ModelParams, mixture_log_pdf, mixture_log_sf
from .specfun import gauss_laguerre

EULER_GAMMA = 0.57721566490153286061


class QuadratureConvergenceError(RuntimeError):
    pass


class UnderflowError(ValueError):
    pass


def exact_mean(p: ModelParams) -> float:
    """Mean busy period (1/r)[(Nr)^N / (N!(1-r)) + sum_{k=1}^{N-1} (Nr)^k / k!]."""
    N, r = p.n_servers, p.r
    if r >= 1:
        raise ValueError("the mean busy period diverges for r >= 1")
    if r == 0:
        return float(N)
    lnr = math.log(N * r)
    k = np.arange(1, N + 1)
    logs = k * lnr - gammaln(k + 1)
    logs[-1] -= math.log1p(-r)
    return float(np.exp(logsumexp(logs) - math.log(r)))


def mixture_mean(m: ExponentialMixture) -> float:
    return float(np.dot(m.nodes, m.weights))


def mixture_logmean(m: ExponentialMixture) -> float:
    """E[ln T] = sum_l w_l ln u_l - gamma_e."""
    return float(np.dot(m.weights, np.log(m.nodes)) - EULER_GAMMA)


def _entropy_at(m, L):
    x, gw = gauss_laguerre(L)
    u, w = m.nodes, m.weights
    pos = w > 0
    u, w = u[pos], w[pos]
    # inner[l, q] = log sum_k (w_k/u_k) exp(-x_q u_l / u_k)
    logc = np.log(w / u)
    total = 0.0
    step = max(1, 2**22 // (len(u) * L))
    for i in range(0, len(u), step):
        ul = u[i : i + step]
        arg = logc[None, :, None] - (ul[:, None, None] / u[None, :, None]) * x[None, None, :]
        inner = logsumexp(arg, axis=1)
        total -= float(np.sum(w[i : i + step, None] * inner * gw[None, :]))
    return total


def _entropy_logtime(m, h):
    # trapezoid rule in y = ln t for -int p ln p dt; the integrand decays like
    # e^y on the left and doubly exponentially on the right
    u = m.nodes
    y = np.arange(math.log(u.min()) - 40.0, math.log(u.max()) + math.log(60.0), h)
    lp = mixture_log_pdf(m, np.exp(y))
    return float(-h * np.sum(np.exp(lp + y) * lp))


def mixture_entropy(m: ExponentialMixture, L_quad: int = 64, tol: float = 1e-6,
                    method: str = "logtime", L_max: int = 512) -> float:
    """Differential entropy -E[ln p(T)] of an exponential mixture.

    ``method='logtime'`` integrates -p ln p with the trapezoid rule in ln t,
    halving the step until the result moves by less than ``tol``.
    ``method='laguerre'`` writes T = u_l V with V ~ Exp(1) and sums over nodes
    with an L-point Gauss-Laguerre rule in V, doubling L from ``L_quad``.
    Either raises QuadratureConvergenceError when refinement stalls.
    """
    if L_quad < 32:
        raise ValueError("L_quad must be >= 32")
    if method == "logtime":
        h = 0.1
        h1 = _entropy_logtime(m, h)
        while True:
            h /= 2
            h2 = _entropy_logtime(m, h)
            if abs(h2 - h1) <= tol:
                return h2
            if h < 1e-3:
                raise QuadratureConvergenceError(f"entropy changed by {abs(h2 - h1):.2e} on halving the step")
            h1 = h2
    if method != "laguerre":
        raise ValueError("method must be 'logtime' or 'laguerre'")
    h1 = _entropy_at(m, L_quad)
    L = L_quad
    while True:
        L *= 2
        h2 = _entropy_at(m, L)
        if abs(h2 - h1) <= tol:
            return h2
        if L >= L_max:
            raise QuadratureConvergenceError(f"entropy changed by {abs(h2 - h1):.2e} on doubling to L_quad={L}")
        h1 = h2


def hazard(d, t):
    """PDF / SF of a busy-period distribution (or a bare mixture)."""
    m = getattr(d, "mixture", d)
    lf = mixture_log_sf(m, t)
    if np.any(~np.isfinite(lf)):
        t_max = float(np.min(np.atleast_1d(t)[~np.isfinite(np.atleast_1d(lf))]))
        raise UnderflowError(f"survival function underflows at t = {t_max}; use smaller t")
    val = np.exp(mixture_log_pdf(m, t) - lf)
    return float(val) if np.ndim(val) == 0 else val


def regeneration_sf(d, t):
    """Survival function of idle period (rate r) plus one busy period.

    sum_l w_l (r e^{-x_l t} - x_l e^{-r t}) / (r - x_l) with x_l = 1/u_l, written
    as e^{-rt} + r (e^{-x t} - e^{-r t}) / (r - x) and evaluated with expm1 so
    that nodes close to r cause no cancellation.
    """
    m = d.mixture
    r = d.params.r
    x = 1.0 / m.nodes
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    tt = t[:, None]
    dlt = r - x[None, :]
    ert = np.exp(-r * tt)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        small = np.abs(dlt * tt) < 1.0
        diff_small = ert * np.expm1(np.where(small, dlt * tt, 0.0))
        diff_big = np.exp(-x[None, :] * tt) - ert
        diff = np.where(small, diff_small, diff_big)
        ratio = np.where(np.abs(dlt) < 1e-300, tt * ert, diff / np.where(dlt == 0, 1.0, dlt))
    terms = ert + r * ratio
    val = terms @ m.weights
    return float(val[0]) if scalar else val
