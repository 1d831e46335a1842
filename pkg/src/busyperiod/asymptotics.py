"""Large-N limits: the infinite-server busy period through zeros of Kummer
functions, and two-exponential and erfcx laws at constant r.

Zeros are stored as an integer part and an offset, chi = -n + delta with
delta in [0, 1], so that nearly coincident zeros can be differenced exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .model import ExponentialMixture, ModelParams
from .specfun import erfcx
from .spectral import bp_distribution
from .stats import EULER_GAMMA, exact_mean


class BracketError(RuntimeError):
    """A Kummer zero was not found inside its integer bracket."""


def _log_coef(rho, k):
    return k * math.log(rho) - math.lgamma(k + 1)


def _kmax(rho, n):
    return int(max(n, rho) + 10 * math.sqrt(rho + 1) + 40)


def _denominator_fn(rho, n, delta):
    # sin(pi d)/pi * sum_k rho^k/(k! (s+k)) at s = -n + d; zeros match M(s, s+1, rho)
    if delta == 0.0:
        return math.exp(_log_coef(rho, n))
    if delta == 1.0:
        return -math.exp(_log_coef(rho, n - 1))
    ks = np.arange(_kmax(rho, n) + 1)
    c = np.exp(ks * math.log(rho) - np.array([math.lgamma(k + 1) for k in ks]))
    return math.sin(math.pi * delta) / math.pi * float(np.sum(c / ((ks - n) + delta)))


def _numerator_residue(rho, j):
    # residue at s = -j of sum_k rho^k/(k! (s+k)(s+k+1))
    if j == 0:
        return 1.0
    return math.exp(_log_coef(rho, j - 1)) * (rho / j - 1.0)


def _numerator_fn(rho, n, delta):
    # same construction for M(s, s+2, rho)
    if delta == 0.0:
        return _numerator_residue(rho, n)
    if delta == 1.0:
        return -_numerator_residue(rho, n - 1)
    ks = np.arange(_kmax(rho, n) + 1)
    c = np.exp(ks * math.log(rho) - np.array([math.lgamma(k + 1) for k in ks]))
    x0 = (ks - n) + delta
    x1 = (ks - n + 1) + delta
    return math.sin(math.pi * delta) / math.pi * float(np.sum(c / (x0 * x1)))


def _solve_offset(fn, rho, n, what):
    f0, f1 = fn(rho, n, 0.0), fn(rho, n, 1.0)
    if f0 == 0.0:
        return 0.0
    if f1 == 0.0:
        return 1.0
    if np.sign(f0) == np.sign(f1):
        raise BracketError(f"no sign change for {what} zero in ({-n}, {-n + 1}) at rho={rho}")
    return optimize.brentq(lambda d: fn(rho, n, d), 0.0, 1.0, xtol=1e-300, rtol=1e-15, maxiter=500)


@dataclass(frozen=True)
class KummerZeroTable:
    rho: float
    chi_int: np.ndarray  # chi_l = -chi_int[l] + chi_off[l]
    chi_off: np.ndarray
    chi1_int: np.ndarray
    chi1_off: np.ndarray

    @property
    def L(self):
        return len(self.chi_int)

    @property
    def chi(self):
        return -self.chi_int + self.chi_off

    @property
    def chi1(self):
        return -self.chi1_int + self.chi1_off

    def to_dict(self):
        return {"rho": self.rho, "chi": self.chi.tolist(), "chi1": self.chi1.tolist()}

    def bracket_violations(self):
        """List of violated ordering relations, checked on the exact offsets."""
        out = []
        rho = self.rho
        for i in range(self.L):
            l = i + 1
            if not (self.chi_int[i] == l and 0 < self.chi_off[i] < 1):
                out.append(f"{l - 1} < -chi_{l} < {l}")
            n1, d1 = self.chi1_int[i], self.chi1_off[i]
            if l <= math.floor(rho):
                ok = n1 == l and 0 <= d1 < 1  # l-1 < -chi1 <= l
            else:
                ok = n1 == l + 1 and 0 < d1 <= 1  # l <= -chi1 < l+1
            if not ok:
                out.append(f"bracket of chi1_{l}")
            if i + 1 < self.L:
                # -chi1_l < -chi_{l+1}
                if not _diff(n1, d1, self.chi_int[i + 1], self.chi_off[i + 1]) > 0:
                    out.append(f"-chi1_{l} < -chi_{l + 1}")
        if rho == round(rho) and 1 <= rho <= self.L and self.chi1[int(rho) - 1] != -rho:
            out.append(f"chi1_{int(rho)} = -{int(rho)}")
        return out


def kummer_zeros(rho: float, L: int) -> KummerZeroTable:
    """First L zeros of M(s, s+1, rho) and M(s, s+2, rho) (regularized), by bisection
    inside integer brackets."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    if L < 1:
        raise ValueError("L must be >= 1")
    ci = np.arange(1, L + 1)
    co = np.array([_solve_offset(_denominator_fn, rho, n, "denominator") for n in ci])
    fl = math.floor(rho)
    c1i = np.array([l if l <= fl else l + 1 for l in range(1, L + 1)])
    c1o = np.array([_solve_offset(_numerator_fn, rho, n, "numerator") for n in c1i])
    return KummerZeroTable(float(rho), ci, co, c1i, c1o)


def _diff(n_a, d_a, n_b, d_b):
    # chi_a - chi_b without cancellation
    return (n_b - n_a) + (d_a - d_b)


def mminf_weights(zt: KummerZeroTable) -> np.ndarray:
    """SF weights from the residues of the truncated product form of the MGF."""
    L = zt.L
    chi = zt.chi
    w = np.empty(L)
    for k in range(L):
        nk, dk = zt.chi_int[k], zt.chi_off[k]
        logw, sign = 0.0, 1.0
        for l in range(L):
            if l < L - 1:
                # numerator factor 1 - chi_k / chi1_l = (chi1_l - chi_k) / chi1_l
                num = _diff(zt.chi1_int[l], zt.chi1_off[l], nk, dk) / zt.chi1[l]
                logw += math.log(abs(num))
                sign *= math.copysign(1.0, num)
            if l != k:
                den = _diff(zt.chi_int[l], zt.chi_off[l], nk, dk) / chi[l]
                logw -= math.log(abs(den))
                sign *= math.copysign(1.0, den)
        w[k] = sign * math.exp(logw)
    return w


def mminf_mixture(zt: KummerZeroTable) -> ExponentialMixture:
    """Infinite-server BP survival function as a mixture, in units of the mean service time."""
    w = mminf_weights(zt)
    if np.any(w <= 0):
        raise ValueError(f"non-positive weight with L = {zt.L}; increase L")
    return ExponentialMixture(-1.0 / zt.chi, w, ("asymptotic",) * zt.L)


def mminf_distribution(rho: float, tol: float = 1e-10, L_max: int = 200):
    """Zero table and mixture with L grown until the last ratio factor is within tol of 1."""
    L = 8
    while True:
        zt = kummer_zeros(rho, L)
        gap = abs(_diff(zt.chi1_int[-2], zt.chi1_off[-2], zt.chi_int[-1], zt.chi_off[-1]) / zt.chi[-1])
        if gap < tol:
            return zt, mminf_mixture(zt)
        if L >= L_max:
            raise RuntimeError(f"zero table did not converge within L = {L_max}")
        L = min(2 * L, L_max)


def mminf_mean(rho: float) -> float:
    """Closed-form mean (e^rho - 1) / rho."""
    return math.expm1(rho) / rho


def m_scale(p: ModelParams) -> float:
    """Time scale (Lambda / mu_1)^2 of the r = 1 busy period; Lambda = prod_{k=2}^{N-1} r/mu_k."""
    N = p.n_servers
    k = np.arange(2, N)
    log_lam = float(np.sum(math.log(p.r) - np.log(k / N))) if N > 2 else 0.0
    return math.exp(2.0 * (log_lam + math.log(N)))


def m_scale_stirling(N: int) -> float:
    """Large-N approximation e^{2N} / (2 pi N) of ``m_scale`` at r = 1."""
    return math.exp(2.0 * N) / (2.0 * math.pi * N)


def const_r_unity_sf(p: ModelParams, t):
    """Large-N survival law at r = 1, erfcx(sqrt(t)), with t in units of ``m_scale``."""
    if p.r != 1:
        raise ValueError("const_r_unity_sf requires r = 1")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    val = erfcx(np.sqrt(t))
    return float(val) if val.ndim == 0 else val


def const_r_unity_pdf(t):
    """Density 1/sqrt(pi t) - erfcx(sqrt t) of the scaled r = 1 law."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("time must be positive")
    val = 1.0 / np.sqrt(math.pi * t) - erfcx(np.sqrt(t))
    return float(val) if val.ndim == 0 else val


def const_r_unity_logmean(p: ModelParams) -> float:
    """Mean of ln T under the scaled law: ln m - Euler's constant."""
    return math.log(m_scale(p)) - EULER_GAMMA


@dataclass(frozen=True)
class TwoExpAsymptotic:
    nu: float
    m_bp: float
    m_dprime: float
    m_prime: float

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        val = (1.0 - self.nu) * np.exp(-t / self.m_dprime) + self.nu * np.exp(-self.nu * t / self.m_prime)
        return float(val) if val.ndim == 0 else val

    @property
    def tail_rate(self):
        return self.nu / self.m_prime

    def to_mixture(self):
        return ExponentialMixture(
            np.array([self.m_dprime, self.m_prime / self.nu]),
            np.array([1.0 - self.nu, self.nu]),
            ("asymptotic", "asymptotic"),
        )


def const_r_two_exp(p: ModelParams, dist=None) -> TwoExpAsymptotic:
    """Two-exponential large-N law; the pole nearest zero supplies the tail weight."""
    if not 0 < p.r < 1:
        raise ValueError("const_r_two_exp requires 0 < r < 1")
    dist = bp_distribution(p) if dist is None else dist
    if len(dist.poles.zeta) == 0:
        raise ValueError(f"no pole at N={p.n_servers}, r={p.r}; use the exact distribution")
    nu = float(dist.poles.weights[0])
    m_bp = exact_mean(p)
    m2 = (1.0 - nu) * p.n_servers
    return TwoExpAsymptotic(nu, m_bp, m2, m_bp - (1.0 - nu) * m2)
