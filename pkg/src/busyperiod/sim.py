"""Regenerative simulation of the M/M/c occupancy chain.

Also provides the nearest-neighbour entropy estimator and percentile
bootstrap intervals used to compare simulated samples with exact values.

Simulated durations are reported in model time units (service rate 1/N per
server); ``t_stop`` is given in mean-service-time units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams
from .stats import EULER_GAMMA, exact_mean

STATISTICS = ("mean", "logmean", "entropy")


class InsufficientDataError(RuntimeError):
    """Too few busy periods for a meaningful estimate."""


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    t_stop: float = 1e6
    seed: int = 20240101
    min_expected_bps: float = 10.0
    batch: int = 4096

    def __post_init__(self):
        if not self.t_stop > 0:
            raise ValueError("t_stop must be positive")
        if not 0 < self.params.r < 1:
            raise ValueError("simulation requires 0 < r < 1")

    @property
    def time_scale(self):
        # model time units per mean service time
        return float(self.params.n_servers)

    def expected_cycles(self):
        r = self.params.r
        return self.t_stop * self.time_scale / (exact_mean(self.params) + 1.0 / r)


@dataclass(frozen=True)
class BpSample:
    durations: np.ndarray
    n_cycles: int
    seed: int
    params: ModelParams

    def to_csv(self, path):
        p = self.params
        header = f"# n_servers={p.n_servers} r={p.r!r} seed={self.seed} n_cycles={self.n_cycles}\nduration"
        np.savetxt(path, self.durations, fmt="%.17g", header=header, comments="")


def _exp(rng, rate):
    # inverse-CDF exponential draws
    return -np.log1p(-rng.random(rate.shape)) / rate


def _busy_periods(rng, p: ModelParams, count: int) -> np.ndarray:
    """Lengths of ``count`` independent busy periods, simulated side by side."""
    N, r = p.n_servers, p.r
    n = np.ones(count, dtype=np.int64)
    acc = np.zeros(count)
    idx = np.arange(count)
    out = np.empty(count)
    while idx.size:
        down = np.minimum(n, N) / N
        rate = r + down
        acc += _exp(rng, rate)
        up = rng.random(idx.size) * rate < r
        n += np.where(up, 1, -1)
        done = n == 0
        if done.any():
            out[idx[done]] = acc[done]
            keep = ~done
            n, acc, idx = n[keep], acc[keep], idx[keep]
    return out


def simulate_bp(cfg: SimConfig) -> BpSample:
    """Busy periods completed within ``t_stop`` of a chain started empty."""
    p = cfg.params
    if cfg.expected_cycles() < cfg.min_expected_bps:
        raise InsufficientDataError(
            f"expected {cfg.expected_cycles():.2f} busy periods for N={p.n_servers}, r={p.r}; "
            f"need at least {cfg.min_expected_bps:g}"
        )
    rng = np.random.default_rng(cfg.seed)
    horizon = cfg.t_stop * cfg.time_scale
    clock = 0.0
    kept = []
    cycles = 0
    while clock < horizon:
        idle = -np.log1p(-rng.random(cfg.batch)) / p.r
        bp = _busy_periods(rng, p, cfg.batch)
        ends = clock + np.cumsum(idle + bp)
        ok = ends <= horizon
        k = int(np.count_nonzero(ok))
        kept.append(bp[:k])
        cycles += k
        clock = float(ends[-1])
    durations = np.concatenate(kept)
    if durations.size == 0:
        raise InsufficientDataError("no busy period completed before t_stop")
    return BpSample(durations, cycles, cfg.seed, p)


def _nn_terms(x):
    x = np.sort(np.asarray(x, dtype=float))
    M = x.size
    if M < 2:
        raise ValueError("need at least two observations")
    gaps = np.diff(x)
    left = np.concatenate(([np.inf], gaps))
    right = np.concatenate((gaps, [np.inf]))
    rho = np.minimum(left, right)
    if np.any(rho == 0):
        if np.all(gaps == 0):
            raise ValueError("all observations identical: entropy estimate diverges")
        raise ValueError("duplicate observations: nearest-neighbour distance is zero")
    return np.log((M - 1) * rho) + math.log(2.0) + EULER_GAMMA


def nn_entropy(sample) -> float:
    """One-dimensional nearest-neighbour (Kozachenko-Leonenko) entropy estimate."""
    return float(np.mean(_nn_terms(sample)))


@dataclass(frozen=True)
class ConfidenceInterval:
    lo: float
    estimate: float
    hi: float

    def contains(self, x):
        return self.lo <= x <= self.hi


def _per_point(sample, statistic):
    if statistic == "mean":
        return np.asarray(sample, dtype=float)
    if statistic == "logmean":
        return np.log(sample)
    if statistic == "entropy":
        return _nn_terms(sample)
    raise ValueError(f"unknown statistic {statistic!r}; choose from {STATISTICS}")


def bootstrap_ci(sample, statistic="mean", B=1000, alpha=0.01, rng=None,
                 entropy_mode="nn-ensemble", max_retries=100):
    """Central (1 - alpha) percentile bootstrap interval.

    For the entropy, ``entropy_mode='nn-ensemble'`` resamples the per-point
    nearest-neighbour terms of the original sample; ``'dedupe'`` recomputes the
    estimator on each resample after removing duplicate values.
    """
    return bootstrap_cis(sample, (statistic,), B, alpha, rng, entropy_mode, max_retries)[statistic]


def bootstrap_cis(sample, statistics=STATISTICS, B=1000, alpha=0.01, rng=None,
                  entropy_mode="nn-ensemble", max_retries=100, chunk_elems=2**24):
    """Intervals for several statistics from one shared set of resamples."""
    if B < 200:
        raise ValueError("B must be >= 200")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if entropy_mode not in ("nn-ensemble", "dedupe"):
        raise ValueError("entropy_mode must be 'nn-ensemble' or 'dedupe'")
    rng = np.random.default_rng() if rng is None else rng
    x = np.asarray(sample, dtype=float)
    M = x.size
    if M < 2:
        raise InsufficientDataError("bootstrap needs at least two observations")
    dedupe = entropy_mode == "dedupe" and "entropy" in statistics
    vec_stats = [s for s in statistics if not (dedupe and s == "entropy")]
    terms = {s: _per_point(np.unique(x) if dedupe and s == "entropy" else x, s) for s in statistics}
    reps = {s: np.empty(B) for s in statistics}
    per = max(1, chunk_elems // M)
    b = 0
    while b < B:
        nb = min(per, B - b)
        ix = rng.integers(0, M, size=(nb, M))
        for s in vec_stats:
            reps[s][b : b + nb] = terms[s][ix].mean(axis=1)
        if dedupe:
            for j in range(nb):
                u = np.unique(x[ix[j]])
                tries = 0
                while u.size < 2:
                    tries += 1
                    if tries > max_retries:
                        raise InsufficientDataError("degenerate resamples for the entropy")
                    u = np.unique(x[rng.integers(0, M, size=M)])
                reps["entropy"][b + j] = nn_entropy(u)
        b += nb
    q = [100 * alpha / 2, 100 * (1 - alpha / 2)]
    out = {}
    for s in statistics:
        lo, hi = np.percentile(reps[s], q)
        out[s] = ConfidenceInterval(float(lo), float(np.mean(terms[s])), float(hi))
    return out
