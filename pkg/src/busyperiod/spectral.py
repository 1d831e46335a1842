"""Spectral engine: the busy-period law assembled from the eigen-decomposition
of the birth-death generator, its real poles and a quadrature of the branch cut.

The generator restricted to states 1..N-1 is tridiagonal with diagonal
-(r + n/N), super-diagonal r and sub-diagonal (n+1)/N. A diagonal similarity
makes it symmetric with off-diagonal sqrt(r (n+1)/N).

Three resolvent entries drive everything:

    G11(s) = sum_k v11_k / (s - xi_k),  G22 likewise,
    G12(s) = c / prod_k (s - xi_k),     c = product of the off-diagonals.

The closed form for G12 is the cofactor identity for the corner entry of a
tridiagonal inverse; it is algebraically equal to sum_k v12_k / (s - xi_k)
but does not suffer the cancellation that sum exhibits when N is large.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .model import BusyPeriodDistribution, ExponentialMixture, ModelParams, PoleSet
from .tridiag import tridiag_eigen

SMALL_R_THRESHOLD = 1e-4
NEAR_UNITY_TRIGGER = 1e-9


class PoleProximityError(ValueError):
    pass


class PoleCountMismatch(RuntimeError):
    pass


class SmallRCriterionError(ValueError):
    pass


def psi_pm(s, r):
    """Both branches of the single-server MGF root pair.

    ``psi_minus`` is the branch with value 1 at s = 0 (the single-server MGF);
    ``psi_plus = 1 / (r * psi_minus)``. Real input inside the cut, where the
    discriminant is negative, raises; pass complex s to get complex values.
    """
    is_complex = np.iscomplexobj(s)
    s = np.asarray(s, dtype=complex if is_complex else float)
    b = s + r + 1.0
    disc = _disc(s, r)
    if not is_complex:
        disc = np.where((disc < 0) & (disc > -1e-13 * b * b), 0.0, disc)
        if np.any(disc < 0):
            raise ValueError("s lies on the branch cut; evaluate with complex s")
        sq = np.sqrt(disc)
    else:
        sq = np.sqrt(disc)
        sq = np.where((sq / b).real < 0, -sq, sq)
    big = b + sq
    psi_minus = 2.0 / big
    psi_plus = big / (2.0 * r) if r > 0 else np.full_like(big, np.inf)
    if psi_minus.ndim == 0:
        return psi_plus[()], psi_minus[()]
    return psi_plus, psi_minus


def _disc(s, r):
    # (s + r + 1)^2 - 4r in factored form, exact near either cut edge
    sr = math.sqrt(r)
    return (s + (1.0 - sr) ** 2) * (s + (1.0 + sr) ** 2)


def _sqrt_disc(s, r):
    return math.sqrt(max(_disc(s, r), 0.0))


def _psi_plus_minus_inv_r(s, r):
    # psi_plus(s) - 1/r without cancellation near s = 0.
    sq = _sqrt_disc(s, r)
    return (s + (2.0 * s * (1.0 + r) + s * s) / (sq + 1.0 - r)) / (2.0 * r)


def build_generator(p: ModelParams):
    """Symmetrized generator: (diagonal, off-diagonal) of dimension N-1."""
    N = p.n_servers
    if N < 2:
        raise ValueError("N = 1 has an empty generator; use the single-server closed form")
    k = np.arange(1, N)
    diag = -(p.r + k / N)
    off = np.sqrt(p.r * np.arange(2, N) / N)
    return diag, off


@dataclass(frozen=True)
class SpectralData:
    xi: np.ndarray
    v11: np.ndarray
    v12: np.ndarray
    v22: np.ndarray
    log_c12: float
    log_lambda: float = float("nan")

    @property
    def lambda_const(self):
        return math.exp(self.log_lambda)

    @property
    def size(self):
        return len(self.xi)

    def completeness(self):
        return float(self.v11.sum()), float(self.v22.sum()), float(self.v12.sum())


def _projectors(xi, first, last, off):
    n = len(xi)
    v11, v22 = first**2, last**2
    v12 = first * last
    log_c = float(np.sum(np.log(off))) if np.all(off > 0) else -np.inf
    if n >= 2 and np.isfinite(log_c):
        diff = xi[:, None] - xi[None, :]
        np.fill_diagonal(diff, 1.0)
        log_dp = np.log(np.abs(diff)).sum(axis=1)
        sign = np.where(np.arange(n) % 2 == (n - 1) % 2, 1.0, -1.0)
        v12 = sign * np.exp(log_c - log_dp)
        big1 = v11 >= v22
        v22 = np.where(big1, v12**2 / np.where(big1, v11, 1.0), v22)
        v11 = np.where(big1, v11, v12**2 / np.where(big1, 1.0, v22))
    elif n == 1:
        log_c = 0.0
    return v11, v12, v22, log_c


def eig_tridiag(diag, offdiag):
    """Eigenvalues and end-component projector products of a symmetric tridiagonal.

    ``v12`` is taken from the cofactor identity v12_k = c / prod_{l != k}(xi_k - xi_l)
    which has full relative accuracy even when both end components are tiny;
    the smaller of ``v11``/``v22`` is then recovered from v11 * v22 = v12^2.
    """
    off = np.asarray(offdiag, dtype=float)
    xi, (first, last) = tridiag_eigen(diag, off, rows=(0, -1))
    return SpectralData(xi, *_projectors(xi, first, last, off))


def log_det_neg_generator(p: ModelParams):
    """log det(-M) from the subtraction-free pivot recursion of the chain.

    Pivots are r + e_k with e_1 = mu_1 and e_{k+1} = mu_{k+1} e_k / (r + e_k).
    """
    N, r = p.n_servers, p.r
    e = 1.0 / N
    total = math.log(r + e)
    for k in range(2, N):
        e = (k / N) * e / (r + e)
        total += math.log(r + e)
    return total


def spectral_data(p: ModelParams) -> SpectralData:
    """Eigen-data of the generator for the parameters p."""
    N = p.n_servers
    if N == 1:
        empty = np.zeros(0)
        return SpectralData(empty, empty, empty, empty, 0.0, 0.0)
    diag, off = build_generator(p)
    xi, (first, last) = tridiag_eigen(diag, off, rows=(0, -1))
    if N > 2 and p.r > 0:
        # The eigenvalue nearest the origin can be exponentially small (a
        # metastable well); rebuild it from the exact determinant so it keeps
        # full relative accuracy.
        top = int(np.argmax(xi))
        others = np.delete(xi, top)
        xi[top] = -math.exp(log_det_neg_generator(p) - np.sum(np.log(-others)))
    k = np.arange(2, N)
    log_lambda = float(np.sum(np.log(p.r) - np.log(k / N))) if p.r > 0 else -np.inf
    return SpectralData(xi, *_projectors(xi, first, last, off), log_lambda)


def _diffs(sd, s, anchor=None):
    """s - xi_l for every l; with anchor=(k, delta) s is xi_k + delta exactly."""
    if anchor is None:
        return s - sd.xi
    k, delta = anchor
    d = (sd.xi[k] - sd.xi) + delta
    d[k] = delta
    return d


def _log_g12(sd, d):
    return sd.log_c12 - np.sum(np.log(np.abs(d))), float(np.prod(np.sign(d)))


def resolvents(sd: SpectralData, s: float):
    """(G11, G12, G22) at real s away from the eigenvalues."""
    d = s - sd.xi
    if np.any(np.abs(d) < 1e-13):
        raise PoleProximityError(f"s = {s} is within 1e-13 of an eigenvalue")
    lg, sg = _log_g12(sd, d)
    return float(np.sum(sd.v11 / d)), sg * math.exp(lg), float(np.sum(sd.v22 / d))


def _log_f0(sd, p):
    # log(1/r - G22(0)) through the resolvent identity:
    # 1/r - G22(0) = prod_{n<N} mu_n / (r * prod_k(-xi_k)).
    N = p.n_servers
    return float(np.sum(np.log(np.arange(1, N) / N)) - math.log(p.r) - np.sum(np.log(-sd.xi)))


def _pole_fn_zero_form(sd, p, s, log_f0):
    # psi_plus - G22 written as f(0) + increments, accurate for tiny |s|.
    d = s - sd.xi
    return math.exp(log_f0) + _psi_plus_minus_inv_r(s, p.r) + s * np.sum(sd.v22 / (d * -sd.xi))


def _pole_fn(sd, p, s, anchor=None):
    d = _diffs(sd, s, anchor)
    psp, _ = psi_pm(s, p.r)
    return psp - np.sum(sd.v22 / d)


def _pole_fn_deriv(sd, p, s, anchor=None):
    d = _diffs(sd, s, anchor)
    sq = _sqrt_disc(s, p.r)
    psp, _ = psi_pm(s, p.r)
    return psp / sq + np.sum(sd.v22 / d**2)


def mgf(sd: SpectralData, p: ModelParams, s):
    """phi_1(s) = mu_1 [G11 + G12^2 / (psi_plus - G22)] for real s right of all poles."""
    mu1 = p.mu1
    if p.n_servers == 1:
        return psi_pm(s, p.r)[1]
    d = s - sd.xi
    g11 = np.sum(sd.v11 / d)
    if p.r == 0:
        return mu1 * g11
    lg, _ = _log_g12(sd, d)
    f = _pole_fn_zero_form(sd, p, s, _log_f0(sd, p))
    return mu1 * (g11 + math.exp(2 * lg) / f)


def count_poles(sd: SpectralData, p: ModelParams) -> int:
    """A-priori count of real poles of the MGF in (-x_minus, 0)."""
    if p.n_servers == 1 or p.r >= 1 or p.r == 0:
        return 0 if p.r > 0 else p.n_servers - 1
    xm = p.x_minus
    inside = int(np.sum(-sd.xi < xm))
    _, g12_0, _ = resolvents(sd, 0.0)
    s = -xm
    d = s - sd.xi
    g22_edge = np.sum(sd.v22 / d) if np.all(d != 0) else np.inf
    edge = g22_edge - psi_pm(s, p.r)[0] > 0
    return inside - int(g12_0 <= 0) + int(edge)


def _solve_anchor(sd, p, k, direction, width):
    # Root of the pole function at xi_k + direction*delta, delta in (0, width].
    def g(delta):
        return _pole_fn(sd, p, sd.xi[k] + direction * delta, (k, direction * delta))

    near_sign = -direction  # f -> -inf just right of xi_k, +inf just left
    lo = width / 2.0
    while np.sign(g(lo)) != near_sign:
        lo /= 16.0
        if lo < 1e-300:
            raise RuntimeError(f"no sign change next to eigenvalue {sd.xi[k]}")
    delta = optimize.brentq(g, lo, width, xtol=1e-300, rtol=1e-15, maxiter=500)
    return sd.xi[k] + direction * delta, (k, direction * delta)


@dataclass(frozen=True)
class _Pole:
    zeta: float
    anchor: tuple | None
    next_to_origin: bool = False


def _residue_weight(sd, p, pole):
    s = pole.zeta
    d = _diffs(sd, s, pole.anchor)
    lg, _ = _log_g12(sd, d)
    sq = _sqrt_disc(s, p.r)
    psp = psi_pm(s, p.r)[0]
    k22 = np.sum(sd.v22 / d**2)
    j = math.exp(2 * lg) * sq / (psp + k22 * sq)
    return p.mu1 * j / -s


def near_unity_pole_guard(sd: SpectralData, p: ModelParams):
    """Linearized pole next to the origin: zeta = -f(0) / f'(0).

    Equivalent to -(mu_1/sqrt(Lambda)) G12(0) / [1/(1-r) - r G22'(0)].
    """
    f0 = math.exp(_log_f0(sd, p))
    fp0 = 1.0 / (p.r * (1.0 - p.r)) + np.sum(sd.v22 / sd.xi**2)
    return -f0 / fp0


def _guard_active(sd, p):
    return abs(1.0 / p.r - np.sum(sd.v22 / -sd.xi)) < NEAR_UNITY_TRIGGER


def _find_poles_raw(sd, p):
    if p.n_servers == 1 or p.r >= 1 or p.r == 0:
        return []
    xm = p.x_minus
    asym = [k for k in range(sd.size) if sd.xi[k] > -xm]
    asym.sort(key=lambda k: sd.xi[k])
    ends = [("edge", -xm)] + [("xi", k) for k in asym] + [("zero", 0.0)]
    log_f0 = _log_f0(sd, p)
    poles = []
    last_bracket = False
    for (lt, lv), (rt, rv) in zip(ends[:-1], ends[1:]):
        last_bracket = rt == "zero"
        lo = lv if lt == "edge" else sd.xi[lv]
        hi = 0.0 if rt == "zero" else sd.xi[rv]
        if lt == "edge":
            d0 = lo - sd.xi
            if np.any(d0 == 0) or _pole_fn(sd, p, lo) >= 0:
                continue
        n_before = len(poles)
        mid = 0.5 * (lo + hi)
        fmid = _pole_fn_zero_form(sd, p, mid, log_f0) if rt == "zero" else _pole_fn(sd, p, mid)
        if fmid == 0:
            poles.append(_Pole(mid, None))
        elif fmid > 0:
            if lt == "xi":
                z, anc = _solve_anchor(sd, p, lv, +1.0, mid - lo)
                poles.append(_Pole(z, anc))
            else:
                z = optimize.brentq(lambda s: _pole_fn(sd, p, s), lo, mid, xtol=1e-300, rtol=1e-15)
                poles.append(_Pole(z, None))
        else:
            if rt == "xi":
                z, anc = _solve_anchor(sd, p, rv, -1.0, hi - mid)
                poles.append(_Pole(z, anc))
            else:
                fz = lambda s: _pole_fn_zero_form(sd, p, s, log_f0)
                z = optimize.brentq(fz, mid, 0.0, xtol=1e-300, rtol=1e-15, maxiter=1000)
                poles.append(_Pole(z, None))
        if last_bracket and len(poles) > n_before:
            q = poles[-1]
            poles[-1] = _Pole(q.zeta, q.anchor, True)

    if _guard_active(sd, p):
        g12_0 = resolvents(sd, 0.0)[1]
        naive = 1.0 / p.r - np.sum(sd.v22 / -sd.xi)
        z = near_unity_pole_guard(sd, p)
        z -= _pole_fn_zero_form(sd, p, z, log_f0) / _pole_fn_deriv(sd, p, z)
        # Same sign: the bracket next to the origin holds the root and the
        # linearized value replaces it. Opposite signs mean a naive search
        # would have missed it, so it is appended unless already found.
        found = bool(poles) and poles[-1].next_to_origin
        if np.sign(g12_0) == np.sign(naive) or found:
            if found:
                poles[-1] = _Pole(z, None, True)
            else:
                poles.append(_Pole(z, None, True))
        else:
            poles.append(_Pole(z, None, True))
    return poles


def find_poles(sd: SpectralData, p: ModelParams) -> PoleSet:
    """Real MGF poles in (-x_minus, 0) with their survival-function weights."""
    raw = _find_poles_raw(sd, p)
    expected = count_poles(sd, p)
    if len(raw) != expected:
        raise PoleCountMismatch(f"root search found {len(raw)} poles, formula predicts {expected}")
    raw.sort(key=lambda q: -q.zeta)
    zeta = np.array([q.zeta for q in raw])
    w = np.array([_residue_weight(sd, p, q) for q in raw])
    return PoleSet(zeta, w)


def r_cut(sd: SpectralData, p: ModelParams, s):
    """Cut function H12^2 / (Pi^2 - b Pi H22 + r H22^2) at real s (vectorized).

    Each point is evaluated relative to its nearest eigenvalue xi_k after
    multiplying numerator and denominator by (s - xi_k)^2, so the value stays
    finite (and accurate) at and near the eigenvalues.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    r = p.r
    if p.n_servers == 1:
        return np.full(s.shape, 1.0 / r)
    d = s[:, None] - sd.xi[None, :]
    k = np.argmin(np.abs(d), axis=1)
    rows = np.arange(len(s))
    dk = d[rows, k]
    d_rest = d.copy()
    d_rest[rows, k] = 1.0
    log_num = 2.0 * (sd.log_c12 - np.sum(np.log(np.abs(d_rest)), axis=1))
    v22_rest = np.broadcast_to(sd.v22, d.shape).copy()
    v22_rest[rows, k] = 0.0
    h = sd.v22[k] + dk * np.sum(v22_rest / d_rest, axis=1)
    b = s + r + 1.0
    disc = _disc(s, r)
    on_cut = disc <= 0
    sq = np.sqrt(np.abs(disc))
    den = np.where(
        on_cut,
        r * ((h - dk * b / (2 * r)) ** 2 + dk * dk * sq**2 / (4 * r * r)),
        r * (h - dk * (b + sq) / (2 * r)) * (h - dk * (b - sq) / (2 * r)),
    )
    bad = (den == 0) | ~np.isfinite(den)
    if np.any(bad):
        raise ZeroDivisionError(f"cut function denominator degenerate at s = {s[bad][0]}")
    return np.sign(den) * np.exp(log_num - np.log(np.abs(den)))


def cut_mixture(sd: SpectralData, p: ModelParams, L: int = 400, rule: str = "midpoint"):
    """Quadrature of the branch cut as exponential nodes.

    Returns (rates x_n, weights w_n) with survival contribution
    sum_n w_n exp(-x_n t). ``rule='midpoint'`` uses the first-kind mapping with
    mid-point abscissae; ``'trapezoid'`` the second-kind form.
    """
    if L < 8:
        raise ValueError("L must be >= 8")
    r = p.r
    if not 0 < r <= 1:
        raise ValueError("cut quadrature needs 0 < r <= 1")
    sr = math.sqrt(r)
    alpha = 0.5 * (sr + 1.0 / sr)
    if rule == "midpoint":
        tau = (np.arange(1, L + 1) - 0.5) / L
        x = 1.0 + r + 2.0 * sr * np.cos(np.pi * tau)
        half_c2 = 2.0 * np.cos(0.5 * np.pi * tau) ** 2
        shape = np.sin(0.5 * np.pi * tau) ** 2 / (1.0 + (alpha - 1.0) / half_c2)
        pref = 2.0 * p.mu1 * sr / L
    elif rule == "trapezoid":
        tau = np.arange(1, L) / L
        x = 1.0 + r + 2.0 * sr * np.cos(np.pi * tau)
        shape = np.sin(np.pi * tau) ** 2 / (alpha + np.cos(np.pi * tau))
        pref = p.mu1 * sr / L
    else:
        raise ValueError(f"unknown rule {rule!r}")
    x = np.clip(x, p.x_minus, p.x_plus)
    w = pref * shape * r_cut(sd, p, -x)
    return x, w


def _cut_converged(sd, p, L, tol=1e-10, max_L=400 * 3**5):
    x, w = cut_mixture(sd, p, L)
    while True:
        L3 = 3 * L
        x3, w3 = cut_mixture(sd, p, L3)
        m1, m3 = np.sum(w / x), np.sum(w3 / x3)
        # the mean diverges at r = 1, so only the weight total is checked there
        mean_ok = p.r == 1 or abs(m3 - m1) <= tol * max(1.0, m3)
        if abs(w3.sum() - w.sum()) < tol and mean_ok:
            return x3, w3, L3
        if L3 > max_L:
            raise RuntimeError(f"cut quadrature not converged at L = {L3}")
        x, w, L = x3, w3, L3


def small_r_mixture(sd: SpectralData, p: ModelParams) -> ExponentialMixture:
    """Light-traffic law: nodes -1/xi_k, weights mu_1 v11_k / |xi_k|."""
    if sd.size and np.max(np.abs(sd.v12)) >= SMALL_R_THRESHOLD and p.r > 0:
        raise SmallRCriterionError("max |v12| >= 1e-4; use the general path")
    keep = sd.v11 > 0
    return ExponentialMixture(
        -1.0 / sd.xi[keep], p.mu1 * sd.v11[keep] / -sd.xi[keep], ("pole",) * int(keep.sum())
    )


def bp_distribution(p: ModelParams, L: int = 400, certify: bool = True) -> BusyPeriodDistribution:
    """Busy-period law as an exponential mixture (poles plus cut quadrature)."""
    p.require_ergodic()
    N, r = p.n_servers, p.r
    no_poles = PoleSet(np.zeros(0), np.zeros(0))
    if r == 0:
        mix = ExponentialMixture([float(N)], [1.0], ("pole",))
        return BusyPeriodDistribution(p, mix, PoleSet(np.array([-p.mu1]), np.ones(1)), p.mu1, "pure-death")
    sd = spectral_data(p)
    diag = {}
    if N >= 2 and r < 1 and np.max(np.abs(sd.v12)) < SMALL_R_THRESHOLD:
        mix = small_r_mixture(sd, p)
        return BusyPeriodDistribution(
            p, mix, PoleSet(sd.xi[::-1].copy(), mix.weights[::-1].copy()), -sd.xi.max(), "small-r"
        )
    poles = find_poles(sd, p) if N >= 2 else no_poles
    if certify:
        x, w, L = _cut_converged(sd, p, L)
    else:
        x, w = cut_mixture(sd, p, L)
    nodes = np.concatenate([-1.0 / poles.zeta, 1.0 / x])
    weights = np.concatenate([poles.weights, w])
    origins = ("pole",) * len(poles) + ("cut",) * len(x)
    mix = ExponentialMixture(nodes, weights, origins)
    tail = -poles.zeta[0] if len(poles) else p.x_minus
    diag.update(quadrature_size=L, pole_count=len(poles), total_weight=mix.total_weight)
    method = "cut-only" if r == 1 else "general"
    return BusyPeriodDistribution(p, mix, poles, tail, method, diag)


def r1_tail_amplitude(p: ModelParams):
    """Amplitude c of the r = 1 tail SF ~ c / sqrt(pi t): mu_1 R_cut(0) = 1 / prod_{n<N} mu_n."""
    N = p.n_servers
    return float(np.exp(-np.sum(np.log(np.arange(1, N) / N))))


def _r1_integral(p, t, sd, moment):
    if p.r != 1:
        raise ValueError("the r = 1 integrals require r = 1")
    sd = spectral_data(p) if sd is None else sd

    def one(tt):
        if tt < 0:
            raise ValueError("time must be non-negative")
        f = lambda w: (4 * w * w) ** moment * math.exp(-4 * tt * w * w) * r_cut(sd, p, -4 * w * w)[0] * math.sqrt(1 - w * w)
        brk = min(1.0, 6.0 / math.sqrt(tt)) if tt > 36 else 1.0
        # dyadic segments toward w = 0: R_cut varies on several scales when N is large
        val, hi = 0.0, brk
        for _ in range(200):
            lo = 0.5 * hi
            seg = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-10, limit=200)[0]
            val += seg
            hi = lo
            if abs(seg) <= 1e-17 * abs(val):
                break
        val += integrate.quad(f, 0.0, hi, epsabs=1e-16 * abs(val), epsrel=1e-12)[0]
        if brk < 1.0:
            val += integrate.quad(f, brk, 1.0, epsabs=1e-13 * val, epsrel=1e-11, limit=400)[0]
        return 4.0 * p.mu1 / math.pi * val

    t = np.asarray(t, dtype=float)
    out = np.array([one(tt) for tt in np.ravel(t)]).reshape(t.shape)
    return float(out) if out.ndim == 0 else out


def r1_sf(p: ModelParams, t, sd: SpectralData | None = None):
    """Survival function at r = 1, where the law is pure cut.

    F(t) = (4 mu_1 / pi) int_0^1 exp(-4 t w^2) R_cut(-4 w^2) sqrt(1 - w^2) dw.
    """
    return _r1_integral(p, t, sd, 0)


def r1_pdf(p: ModelParams, t, sd: SpectralData | None = None):
    """Density at r = 1: the SF integrand weighted by the rate 4 w^2."""
    return _r1_integral(p, t, sd, 1)


def r1_lomax_sf(p: ModelParams, t):
    """Lomax proxy (1 + pi t / [mu_1 R_cut(0)]^2)^(-1/2) for the r = 1 law."""
    c = r1_tail_amplitude(p)
    return (1.0 + math.pi * np.asarray(t, dtype=float) / c**2) ** -0.5


def cut_tail_asymptote(p: ModelParams, t, sd: SpectralData | None = None):
    """Leading large-t term of the cut survival function for 0 < r < 1."""
    r = p.r
    if not 0 < r < 1:
        raise ValueError("cut_tail_asymptote requires 0 < r < 1")
    sd = spectral_data(p) if sd is None else sd
    a = (math.sqrt(r) + 1.0 / math.sqrt(r)) / 4.0 - 0.5
    rate = 4.0 * a * math.sqrt(r)
    rc = r_cut(sd, p, -rate)[0]
    t = np.asarray(t, dtype=float)
    return p.mu1 / (8.0 * math.sqrt(math.pi) * a * r**0.25) * rc * t**-1.5 * np.exp(-rate * t)


def diagnostics(p: ModelParams, dist: BusyPeriodDistribution | None = None):
    """The four structural checks: spectrum, completeness, pole count, weight total."""
    sd = spectral_data(p)
    dist = bp_distribution(p) if dist is None else dist
    s11, s22, s12 = sd.completeness()
    # first and last basis vectors coincide for a 1x1 generator
    e12 = 1.0 if sd.size == 1 else 0.0
    comp = float(max(abs(s11 - 1), abs(s22 - 1), abs(s12 - e12))) if sd.size else 0.0
    out = {
        "eigenvalues_negative": {"ok": bool(np.all(sd.xi < 0)), "residual": float(sd.xi.max(initial=-1.0))},
        "completeness": {"ok": comp < 1e-10, "residual": comp},
        "total_weight": {
            "ok": bool(abs(dist.mixture.total_weight - 1) < 1e-8),
            "residual": float(dist.mixture.total_weight - 1),
        },
    }
    if 0 < p.r < 1 and p.n_servers >= 2:
        g11, g12, g22 = resolvents(sd, 0.0)
        ident = p.mu1 * g12 / math.sqrt(sd.lambda_const) + p.r * g22 - 1 if p.n_servers > 2 else (
            p.mu1 * g12 + p.r * g22 - 1
        )
        n_formula = count_poles(sd, p)
        out["pole_count"] = {"ok": n_formula == len(dist.poles) or dist.method == "small-r",
                             "residual": n_formula - len(dist.poles), "count": n_formula}
        out["resolvent_identity"] = {"ok": bool(abs(ident) < 1e-8), "residual": float(ident)}
    return out
