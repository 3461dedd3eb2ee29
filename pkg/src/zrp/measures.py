"""Invariant product measures and their finite-torus conditionings.

For a rate g the single-site weights are w(0) = 1, w(k) = prod_{j<=k} 1/g(j),
and the fugacity-phi marginal is P(k) = w(k) phi^k / z(phi). Everything is
computed in log space: for superlinear g the weights underflow float64 by
k ~ 30, while log w stays tame.

Truncation is certified, never guessed: the support is cut at the first K
with phi/g(K+1) <= 1/2 whose geometric tail bound is below the requested
relative tolerance. Downstream identities (density, mean rate) inherit that
tolerance.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .configuration import Configuration, truncate
from .errors import CertificationError, ConfigError, RateRangeError
from .kernel import Kernel
from .parallel import TAG_SAMPLE, derived_rng
from .rates import RateFn, rate_to_json
from .sites import Site, box_sites

MAX_TRUNCATION = 100_000


def partition_function(rate: RateFn, phi: float, tol: float = 1e-12):
    """(log_z, K, tail_bound): log normalization, certified support cut,
    and the relative mass bound for everything beyond K."""
    if not (phi > 0) or not math.isfinite(phi):
        raise ConfigError(f"fugacity must be positive and finite, got {phi!r}")
    if not (0 < tol < 1e-2):
        raise ConfigError("tolerance must be in (0, 1e-2)")
    log_phi = math.log(phi)
    log_terms = [0.0]  # k = 0
    log_w = 0.0
    k = 0
    while True:
        # certification attempt at current K = k: needs g(K+1)
        try:
            g_next = rate.g(k + 1)
        except RateRangeError as e:
            raise CertificationError(
                f"cannot certify tail at phi={phi}: rate undefined past k={k} ({e})") from None
        if g_next <= 0:
            ratio = math.inf
        else:
            ratio = phi / g_next
        if ratio <= 0.5:
            log_z_partial = logsumexp(log_terms)
            log_tail = log_terms[-1] + math.log(ratio / (1.0 - ratio)) if ratio > 0 else -math.inf
            tail_rel = math.exp(min(log_tail - log_z_partial, 0.0))
            if tail_rel <= tol:
                return float(log_z_partial), k, float(tail_rel)
        if k >= MAX_TRUNCATION:
            raise CertificationError(
                f"cannot certify tail at phi={phi} within {MAX_TRUNCATION} terms "
                f"(last ratio phi/g(K+1) = {ratio:.3g})")
        k += 1
        if g_next <= 0:
            raise CertificationError(
                f"g({k}) = 0: weights w(k) are undefined, no product measure exists")
        log_w -= math.log(g_next)
        log_terms.append(log_w + k * log_phi)


@dataclass
class FugacityMeasure:
    rate: RateFn
    phi: float
    tol: float
    K: int
    log_z: float
    tail_bound: float
    log_w: np.ndarray   # log w(k), k = 0..K
    pmf: np.ndarray     # P(k), k = 0..K (sums to 1 - tail)
    cdf: np.ndarray

    def density(self) -> float:
        """Mean occupancy per site."""
        return float(np.dot(np.arange(self.K + 1), self.pmf))

    def mean_rate(self) -> float:
        """E[g(occupancy)]; equals phi up to the certified tail."""
        gv = np.array([self.rate.g(k) for k in range(self.K + 1)])
        return float(np.dot(gv, self.pmf))

    def sample_marginal(self, u: float) -> int:
        """Inverse CDF; u in [0, 1)."""
        return int(min(np.searchsorted(self.cdf, u, side="right"), self.K))

    def to_json(self) -> dict:
        return {"rate": rate_to_json(self.rate), "phi": self.phi, "tol": self.tol,
                "K": self.K, "log_z": self.log_z, "tail_bound": self.tail_bound}

    def pmf_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "p_k"])
        for k in range(self.K + 1):
            w.writerow([k, repr(float(self.pmf[k]))])
        return buf.getvalue()


def fugacity_measure(rate: RateFn, phi: float, tol: float = 1e-12) -> FugacityMeasure:
    log_z, K, tail = partition_function(rate, phi, tol)
    log_w = np.zeros(K + 1)
    for k in range(1, K + 1):
        log_w[k] = log_w[k - 1] - math.log(rate.g(k))
    log_terms = log_w + np.arange(K + 1) * math.log(phi)
    pmf = np.exp(log_terms - log_z)
    cdf = np.cumsum(pmf)
    return FugacityMeasure(rate=rate, phi=phi, tol=tol, K=K, log_z=log_z,
                           tail_bound=tail, log_w=log_w, pmf=pmf, cdf=cdf)


def density(measure: FugacityMeasure) -> float:
    return measure.density()


def fugacity_identity(measure: FugacityMeasure) -> float:
    """E[g] under the measure; the invariance identity says this is phi."""
    return measure.mean_rate()


def sample_marginal(measure: FugacityMeasure, u: float) -> int:
    return measure.sample_marginal(u)


def sample_box_config(measure: FugacityMeasure, n: int, d: int, rng_or_seed) -> Configuration:
    """i.i.d. marginals on [-n, n]^d, zero outside."""
    if n < 0:
        raise ConfigError("box radius must be >= 0")
    rng = (derived_rng(rng_or_seed, TAG_SAMPLE)
           if isinstance(rng_or_seed, (int, np.integer)) else rng_or_seed)
    sites = box_sites(n, d)
    u = rng.random(len(sites))
    ks = np.minimum(np.searchsorted(measure.cdf, u, side="right"), measure.K)
    occ = {x: int(k) for x, k in zip(sites, ks) if k > 0}
    return Configuration(d, occ)


def restrict_measure(config_sampler, n: int):
    """Wrap a Configuration sampler so everything outside [-n, n]^d is dropped."""
    if n < 0:
        raise ConfigError("box radius must be >= 0")

    def sampler(rng) -> Configuration:
        return truncate(config_sampler(rng), n)

    return sampler


# ------------------------------------------------------- canonical (fixed N)

def compositions(total: int, parts: int):
    """All tuples of `parts` non-negative ints summing to `total`."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def torus_sites(sites_per_dim: int, d: int) -> list[Site]:
    """Site labels for an L^d torus; centered when L is odd (matching the
    engine's periodic boxes), 0..L-1 otherwise."""
    L = sites_per_dim
    if L % 2 == 1:
        return box_sites(L // 2, d)
    rng1 = list(range(L))
    if d == 1:
        return rng1
    sites = [()]
    for _ in range(d):
        sites = [s + (c,) for s in sites for c in rng1]
    return sites


@dataclass
class CanonicalTorusMeasure:
    rate: RateFn
    sites_per_dim: int
    d: int
    N: int
    sites: list[Site]
    states: list[tuple[int, ...]]
    probs: np.ndarray

    def sample(self, rng) -> Configuration:
        i = int(rng.choice(len(self.states), p=self.probs))
        state = self.states[i]
        return Configuration(self.d, {x: k for x, k in zip(self.sites, state) if k > 0})

    def marginal(self, site: Site) -> np.ndarray:
        """P(occupancy at site = k), k = 0..N."""
        j = self.sites.index(site)
        out = np.zeros(self.N + 1)
        for state, p in zip(self.states, self.probs):
            out[state[j]] += p
        return out

    def marginal_csv(self, site: Site) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "p_k"])
        for k, p in enumerate(self.marginal(site)):
            w.writerow([k, repr(float(p))])
        return buf.getvalue()


def canonical_torus_measure(rate: RateFn, sites_per_dim: int, d: int,
                            N: int) -> CanonicalTorusMeasure:
    """Product weights prod_x w(eta(x)) conditioned on total mass N, on an
    L^d torus. Exact enumeration; guarded to L^d <= 5 sites and N <= 6."""
    L = sites_per_dim
    if L < 1:
        raise ConfigError("need at least one site per dimension")
    M = L ** d
    if M > 5:
        raise ConfigError(f"exact canonical enumeration capped at 5 sites, got {M}")
    if not (0 <= N <= 6):
        raise ConfigError(f"exact canonical enumeration capped at N <= 6, got {N}")
    log_w = np.zeros(N + 1)
    for k in range(1, N + 1):
        g = rate.g(k)
        if g <= 0:
            raise ConfigError(f"g({k}) = 0: canonical weights undefined")
        log_w[k] = log_w[k - 1] - math.log(g)
    sites = torus_sites(L, d)
    states = list(compositions(N, M))
    logp = np.array([sum(log_w[k] for k in st) for st in states])
    logp -= logp.max()
    probs = np.exp(logp)
    probs /= probs.sum()
    return CanonicalTorusMeasure(rate=rate, sites_per_dim=L, d=d, N=N,
                                 sites=sites, states=states, probs=probs)
