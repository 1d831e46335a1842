"""Parameter and distribution types shared by the computational engines.

Internal time unit: the mean service time of a single server is N. With n
busy servers the departure rate is therefore n/N, while the arrival rate
equals the total traffic intensity r.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

SCHEMA_VERSION = 1
ORIGINS = ("pole", "cut", "asymptotic")


@dataclass(frozen=True)
class ModelParams:
    n_servers: int
    r: float
    t_scale: float = 1.0

    def __post_init__(self):
        if int(self.n_servers) != self.n_servers or self.n_servers < 1:
            raise ValueError(f"n_servers must be a positive integer, got {self.n_servers}")
        if not (math.isfinite(self.r) and self.r >= 0):
            raise ValueError(f"r must be finite and >= 0, got {self.r}")
        if not self.t_scale > 0:
            raise ValueError("t_scale must be positive")
        object.__setattr__(self, "n_servers", int(self.n_servers))
        object.__setattr__(self, "r", float(self.r))

    @property
    def N(self):
        return self.n_servers

    def mu(self, n):
        """Departure rate with n busy servers (n may be an array)."""
        return np.asarray(n, dtype=float) / self.n_servers if np.ndim(n) else n / self.n_servers

    @property
    def mu1(self):
        return 1.0 / self.n_servers

    @property
    def rho(self):
        return self.n_servers * self.r

    @property
    def x_minus(self):
        return (1.0 - math.sqrt(self.r)) ** 2

    @property
    def x_plus(self):
        return (1.0 + math.sqrt(self.r)) ** 2

    def require_ergodic(self, allow_boundary=True):
        if self.r > 1 or (self.r == 1 and not allow_boundary):
            raise ValueError(f"r = {self.r} lies outside the ergodic region")


def _fmt(x):
    return format(float(x), ".17g")


@dataclass(frozen=True)
class ExponentialMixture:
    """Survival function ``sum_l w_l exp(-t / u_l)``: BP = U * V with V ~ Exp(1)."""

    nodes: np.ndarray
    weights: np.ndarray
    origins: tuple = field(default=())

    def __post_init__(self):
        u = np.atleast_1d(np.asarray(self.nodes, dtype=float)).copy()
        w = np.atleast_1d(np.asarray(self.weights, dtype=float)).copy()
        if u.shape != w.shape or u.ndim != 1:
            raise ValueError("nodes and weights must be 1-d arrays of equal length")
        if not np.all(np.isfinite(u)) or np.any(u <= 0):
            raise ValueError("mixture nodes must be finite and positive")
        if not np.all(np.isfinite(w)) or np.any(w < -1e-12):
            raise ValueError(f"mixture weight below tolerance: min {w.min()!r}")
        origins = tuple(self.origins) if len(self.origins) else ("cut",) * len(u)
        if len(origins) != len(u) or any(o not in ORIGINS for o in origins):
            raise ValueError("origins must name one of pole/cut/asymptotic per node")
        u.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "nodes", u)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "origins", origins)

    def __len__(self):
        return len(self.nodes)

    @property
    def total_weight(self):
        return float(self.weights.sum())

    def sf(self, t):
        return mixture_sf(self, t)

    def pdf(self, t):
        return mixture_pdf(self, t)

    def mean(self):
        return float(np.dot(self.nodes, self.weights))

    def sample(self, rng, size=None):
        return mixture_sample(self, rng, size)

    def combine(self, other):
        return ExponentialMixture(
            np.concatenate([self.nodes, other.nodes]),
            np.concatenate([self.weights, other.weights]),
            self.origins + other.origins,
        )

    def to_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["node", "weight", "origin"])
        for u, w, o in zip(self.nodes, self.weights, self.origins):
            wr.writerow([_fmt(u), _fmt(w), o])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(
            [float(r["node"]) for r in rows],
            [float(r["weight"]) for r in rows],
            tuple(r["origin"] for r in rows),
        )

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "nodes": [float(_fmt(u)) for u in self.nodes],
            "weights": [float(_fmt(w)) for w in self.weights],
            "origins": list(self.origins),
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(d["nodes"], d["weights"], tuple(d["origins"]))


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    return t


def mixture_sf(m, t):
    """Survival function of an exponential mixture."""
    t = _check_t(t)
    val = np.exp(-np.multiply.outer(t, 1.0 / m.nodes)) @ m.weights
    return float(val) if val.ndim == 0 else val


def mixture_pdf(m, t):
    t = _check_t(t)
    val = np.exp(-np.multiply.outer(t, 1.0 / m.nodes)) @ (m.weights / m.nodes)
    return float(val) if val.ndim == 0 else val


def mixture_log_sf(m, t):
    """log SF via log-sum-exp, usable deep in the tail."""
    t = _check_t(t)
    pos = m.weights > 0
    if not pos.any():
        return np.full(t.shape, -np.inf) if t.ndim else -np.inf
    lw = np.log(m.weights[pos])
    arg = lw - np.multiply.outer(t, 1.0 / m.nodes[pos])
    mx = arg.max(axis=-1, keepdims=True)
    return np.squeeze(mx, -1) + np.log(np.exp(arg - mx).sum(axis=-1))


def mixture_log_pdf(m, t):
    t = _check_t(t)
    pos = m.weights > 0
    if not pos.any():
        return np.full(t.shape, -np.inf) if t.ndim else -np.inf
    lw = np.log(m.weights[pos] / m.nodes[pos])
    arg = lw - np.multiply.outer(t, 1.0 / m.nodes[pos])
    mx = arg.max(axis=-1, keepdims=True)
    return np.squeeze(mx, -1) + np.log(np.exp(arg - mx).sum(axis=-1))


def mixture_sample(m, rng, size=None):
    """Draw U from the node law and V ~ Exp(1); return U * V."""
    p = np.clip(m.weights, 0.0, None)
    p = p / p.sum()
    u = rng.choice(m.nodes, size=size, p=p)
    return u * rng.standard_exponential(size)


@dataclass(frozen=True)
class PoleSet:
    zeta: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.zeta)


@dataclass(frozen=True)
class BusyPeriodDistribution:
    params: ModelParams
    mixture: ExponentialMixture
    poles: PoleSet
    tail_rate: float
    method: str = "general"
    diagnostics: dict = field(default_factory=dict)

    def sf(self, t):
        return mixture_sf(self.mixture, t)

    def pdf(self, t):
        return mixture_pdf(self.mixture, t)

    def mean(self):
        return self.mixture.mean()
