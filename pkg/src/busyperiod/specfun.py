"""Special functions needed by the busy-period engines.

The Bessel and Marcum routines accept complex arguments; the rest are real.
"""

from __future__ import annotations

import cmath
import functools
import math
import warnings

import numpy as np
from scipy import special

from .tridiag import tridiag_eigen

MAX_MARCUM_TERMS = 10**6


class SeriesConvergenceError(RuntimeError):
    """A series did not reach its truncation criterion within the term budget."""


class LossOfPrecisionWarning(RuntimeWarning):
    pass


def _miller_ratios(nmax, z):
    # I_n/I_{n-1} for n = 1..top by backward recursion, top chosen so the
    # minimal solution has converged well below nmax and the normalization tail.
    top = int(nmax + 12.0 * math.sqrt(abs(z) + 1.0) + 30)
    rho = np.zeros(top + 2, dtype=complex if isinstance(z, complex) else float)
    two_over_z = 2.0 / z
    nxt = 0.0
    for k in range(top, 0, -1):
        nxt = 1.0 / (k * two_over_z + nxt)
        rho[k] = nxt
    return rho[1 : top + 1]


def bessel_i_scaled_seq(nmax, x):
    """Return ``exp(-x) * I_n(x)`` for n = 0..nmax as an array (x real, >= 0).

    Uses Miller's backward recurrence on the ratios I_n/I_{n-1}, normalized
    with the generating-function identity ``I_0 + 2*sum(I_n) = exp(x)``.
    """
    x = float(x)
    if x < 0 or not math.isfinite(x):
        raise ValueError(f"bessel_i_scaled requires finite x >= 0, got {x}")
    nmax = int(nmax)
    out = np.zeros(nmax + 1)
    if x == 0.0:
        out[0] = 1.0
        return out
    rho = _miller_ratios(nmax, x)
    prods = np.cumprod(rho)
    i0 = 1.0 / (1.0 + 2.0 * prods.sum())
    out[0] = i0
    out[1:] = i0 * prods[:nmax]
    return out


def bessel_i_scaled(n, x):
    """``exp(-x) * I_n(x)`` for integer order n (negative orders mirror) and x >= 0."""
    n = abs(int(n))
    if np.ndim(x) == 0:
        return float(bessel_i_scaled_seq(n, x)[n])
    return np.array([bessel_i_scaled_seq(n, xi)[n] for xi in np.ravel(x)]).reshape(np.shape(x))


def log_bessel_i_seq(nmax, z):
    """Principal-branch ``log I_n(z)`` for n = 0..nmax and complex z.

    Reflection ``I_n(-z) = (-1)^n I_n(z)`` keeps the recursion in Re z >= 0.
    """
    z = complex(z)
    n = np.arange(nmax + 1)
    if z == 0:
        out = np.full(nmax + 1, -np.inf + 0j)
        out[0] = 0.0
        return out
    shift = 0.0
    if z.real < 0:
        z = -z
        shift = 1j * np.pi
    rho = _miller_ratios(nmax, z if z.imag else z.real)
    rho = rho.astype(complex)
    with np.errstate(divide="ignore"):
        logs = np.cumsum(np.log(rho))
    norm = 1.0 + 2.0 * np.exp(logs).sum()
    log_i0 = -cmath.log(norm) + z
    out = np.empty(nmax + 1, dtype=complex)
    out[0] = log_i0
    out[1:] = log_i0 + logs[:nmax]
    return out + shift * n


@functools.lru_cache(maxsize=16)
def _log_bessel_cached(nmax, z):
    # Marcum sums sharing the product ab reuse one Bessel sequence
    out = log_bessel_i_seq(nmax, z)
    out.flags.writeable = False
    return out


def _logsumexp(v):
    v = np.asarray(v, dtype=complex)
    m = np.max(v.real)
    if not np.isfinite(m):
        return complex(m)
    return complex(np.log(np.sum(np.exp(v - m))) + m)


def _neumann_log_terms(a, b, which, max_terms):
    # log of each term of the chosen Neumann series (prefactor included),
    # truncated once a post-peak term is negligible.
    z = a * b
    if abs(z.imag) <= 1e-15 * abs(z):
        z = complex(z.real)
    q = b / a
    log_q = cmath.log(q)
    pref = -(a * a + b * b) / 2.0
    nmax = int(abs(z) + 12.0 * math.sqrt(abs(z) + 1.0) + 40)
    while True:
        if nmax > max_terms:
            raise SeriesConvergenceError(
                f"Marcum Q series not converged within {max_terms} terms (a={a}, b={b})"
            )
        log_i = _log_bessel_cached(nmax, z)
        n = np.arange(nmax + 1)
        if which == 1:
            logt = pref + n[1:] * log_q + log_i[1:]
        else:
            logt = pref - n * log_q + log_i
        mag = logt.real
        peak = int(np.argmax(mag))
        m = mag.max()
        if not np.isfinite(m):
            return logt[:1]
        # relative to the partial sum, or to the peak term when complex terms cancel
        partial = np.abs(np.cumsum(np.exp(logt - m)))
        ref = np.maximum(partial, 1.0)
        small = np.nonzero((np.arange(len(mag)) > peak) & (mag - m < np.log(1e-17 * ref)))[0]
        if small.size:
            return logt[: small[0] + 1]
        nmax *= 2


def marcum_qbar(a, b, series="auto", max_terms=MAX_MARCUM_TERMS):
    """Complementary Marcum function ``1 - Q(a, b)`` for complex arguments.

    ``series='neu1'`` sums ``exp(-(a^2+b^2)/2) * sum_{n>=1} (b/a)^n I_n(ab)``;
    ``'neu2'`` evaluates ``1 - exp(-(a^2+b^2)/2) * sum_{n>=0} (a/b)^n I_n(ab)``.
    ``'auto'`` picks the first when |b/a| < 1. Real non-negative inputs give a
    float, anything else a complex number.
    """
    real_in = np.isrealobj(a) and np.isrealobj(b) and a >= 0 and b >= 0
    a, b = complex(a), complex(b)
    if b == 0:
        val = 0j
    elif a == 0:
        val = -_cexpm1(-b * b / 2.0)
    else:
        which = {"auto": 1 if abs(b / a) < 1 else 2, "neu1": 1, "neu2": 2}[series]
        logt = _neumann_log_terms(a, b, which, max_terms)
        s = np.exp(_logsumexp(logt))
        val = s if which == 1 else 1.0 - s
    return float(val.real) if real_in else complex(val)


def _cexpm1(z):
    """``exp(z) - 1`` without cancellation near zero for complex ``z``."""
    z = complex(z)
    if z.imag == 0:
        return complex(math.expm1(z.real))
    return complex(special.expm1(z))


def log_marcum_qbar(a, b, max_terms=MAX_MARCUM_TERMS):
    """Principal log of ``marcum_qbar(a, b)``; safe when prefactors over/underflow."""
    a, b = complex(a), complex(b)
    if b == 0:
        return complex(-np.inf)
    if a == 0:
        return cmath.log(-_cexpm1(-b * b / 2.0))
    if abs(b / a) < 1:
        return _logsumexp(_neumann_log_terms(a, b, 1, max_terms))
    return cmath.log(1.0 - np.exp(_logsumexp(_neumann_log_terms(a, b, 2, max_terms))))


def kummer_m_reg(a, b, z, transform=True):
    """Regularized confluent hypergeometric function ``M(a, b, z) / Gamma(b)``.

    Negative z is mapped through ``e^z * M(b - a, b, -z)`` so the power series
    only runs with positive argument; ``transform=False`` sums the series
    directly. A LossOfPrecisionWarning is raised when the remaining
    cancellation exceeds eight digits.
    """
    a, b, z = float(a), float(b), float(z)
    if z < 0 and transform:
        return math.exp(z) * kummer_m_reg(b - a, b, -z)
    a_term = a <= 0 and a == round(a)
    if b <= 0 and b == round(b):
        k = int(1 - b)
        if a_term and -a < k:
            return 0.0
        t = 1.0
        for j in range(k):
            t *= (a + j) * z / (j + 1)
    else:
        k = 0
        t = float(special.rgamma(b))
    total = 0.0
    abs_total = 0.0
    while True:
        total += t
        abs_total += abs(t)
        if t == 0.0 and (a_term or z == 0.0):
            break
        t *= (a + k) * z / ((k + 1) * (b + k))
        k += 1
        if k > abs(a) + abs(z) and abs(t) <= 1e-17 * abs(total):
            break
        if k > 100000:
            raise SeriesConvergenceError(f"Kummer series did not converge for {(a, b, z)}")
    if total != 0.0 and abs_total > 1e8 * abs(total):
        warnings.warn(
            f"kummer_m_reg{(a, b, z)}: cancellation of {abs_total / abs(total):.1e}",
            LossOfPrecisionWarning,
            stacklevel=2,
        )
    return total


def upper_gamma(n, x):
    """Upper incomplete gamma function Gamma(n, x)."""
    if n <= 0 or np.any(np.asarray(x) < 0):
        raise ValueError("upper_gamma requires n > 0 and x >= 0")
    return special.gammaincc(n, x) * special.gamma(n)


def erfcx(x):
    """Scaled complementary error function exp(x^2) erfc(x)."""
    return special.erfcx(x)


def gauss_laguerre(L):
    """Nodes and weights of the L-point Gauss-Laguerre rule (Golub-Welsch)."""
    if L < 1:
        raise ValueError("L must be >= 1")
    k = np.arange(L)
    nodes, vecs = tridiag_eigen(2.0 * k + 1.0, k[1:].astype(float), rows=(0,))
    return nodes, vecs[0] ** 2
