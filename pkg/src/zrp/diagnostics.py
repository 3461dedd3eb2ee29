"""Verification diagnostics: generator identities, martingale residuals,
stationarity (exact and statistical), coupling inequalities, flux laws.

Statistical checks report z-scores against 4*SE bands or chi-square p-values;
structural checks (order preservation, conservation, replay) are exact and
raise InvariantViolation or report zero-tolerance violation counts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2 as chi2_dist

from .configuration import Configuration, intervals, snapshots
from .engine import OPEN, BoundaryPolicy, periodic, simulate
from .errors import ConfigError, InvariantViolation
from .kernel import Kernel, is_nearest_neighbour_1d, nn_kernel_1d
from .localfn import LocalFunction
from .measures import FugacityMeasure, canonical_torus_measure, fugacity_measure
from .noise import HarrisNoise
from .parallel import TAG_GILLESPIE, TAG_SAMPLE, derived_rng, replica_map
from .rates import RateFn
from .sites import Site, fold_into_box, in_box, site_add, site_sub

# --------------------------------------------------------------- generator

def _route(x: Site, z: Site, policy: BoundaryPolicy):
    """(dst, kind) for a displacement z out of x under the boundary policy;
    kind None marks a wrap onto the source (state no-op)."""
    raw = site_add(x, z)
    if policy.kind == "open":
        return raw, "jump"
    if policy.kind == "killed":
        return (raw, "jump") if in_box(raw, policy.n) else (raw, "kill")
    dst = fold_into_box(raw, policy.n)
    if dst == x:
        return dst, None
    return dst, "jump" if dst == raw else "periodic-wrap"


def _candidate_sources(f: LocalFunction, kernel: Kernel, policy: BoundaryPolicy):
    """Support of f plus every site that can send a particle into it."""
    out = set(f.support)
    for a in f.support:
        for z, _p in kernel.support():
            src = site_sub(a, z)
            if policy.kind == "periodic":
                src = fold_into_box(src, policy.n)
            out.add(src)
    return sorted(out, key=lambda s: (s,) if isinstance(s, int) else s)


def _perturbed_value(f: LocalFunction, occ: dict, x: Site, k: int, dst) -> float:
    """f after moving one particle x -> dst (dst None = removal), restoring occ."""
    if k == 1:
        del occ[x]
    else:
        occ[x] = k - 1
    kd = None
    if dst is not None:
        kd = occ.get(dst, 0)
        occ[dst] = kd + 1
    v = f.value(occ)
    if dst is not None:
        if kd == 0:
            del occ[dst]
        else:
            occ[dst] = kd
    occ[x] = k
    return v


def _generator_apply_dict(f: LocalFunction, occ: dict, rate: RateFn,
                          kernel: Kernel, policy: BoundaryPolicy,
                          sources=None) -> float:
    g = rate.g
    if sources is None:
        sources = _candidate_sources(f, kernel, policy)
    support = f.support if isinstance(f.support, set) else set(f.support)
    f0 = f.value(occ)
    total = 0.0
    for x in sources:
        k = occ.get(x, 0)
        if k == 0:
            continue
        gx = g(k)
        if gx == 0.0:
            continue
        for z, p in kernel.support():
            dst, kind = _route(x, z, policy)
            if kind is None:
                continue
            if kind == "kill":
                if x not in support:
                    continue
                v = _perturbed_value(f, occ, x, k, None)
            else:
                if x not in support and dst not in support:
                    continue
                v = _perturbed_value(f, occ, x, k, dst)
            total += gx * p * (v - f0)
    return total


def generator_apply(f: LocalFunction, eta: Configuration, rate: RateFn,
                    kernel: Kernel, policy: BoundaryPolicy = OPEN) -> float:
    """(Lf)(eta): exact finite sum over the moves that can change f.

    For one particle at site x with f = min(eta(0), M): moving it away from 0
    contributes -g(1) * (mass of offsets leaving 0), matching the defining sum
    over ordered pairs with the no-op convention at empty sources.
    """
    if eta.d != kernel.d:
        raise ConfigError("configuration and kernel dimensions differ")
    occ = dict(eta.occ)
    return _generator_apply_dict(f, occ, rate, kernel, policy)


# ----------------------------------------------------------- report plumbing

def _mean_se(values: np.ndarray) -> tuple[float, float]:
    m = float(np.mean(values))
    if len(values) < 2:
        return m, math.inf
    se = float(np.std(values, ddof=1) / math.sqrt(len(values)))
    return m, se


@dataclass
class Report:
    test: str
    passed: bool
    statistic: float
    threshold: float
    seed: int | None = None
    n_replicas: int | None = None
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"test": self.test, "statistic": self.statistic,
               "threshold": self.threshold, "pass": bool(self.passed),
               "seed": self.seed, "n_replicas": self.n_replicas}
        out.update(self.extras)
        return out


# ------------------------------------------------------- martingale residual

def _abar(f: LocalFunction, kernel: Kernel, policy: BoundaryPolicy):
    return _candidate_sources(f, kernel, policy)


def _martingale_worker(r, f, eta0, rate, kernel, policy, T, seed, grid):
    noise = HarrisNoise(seed, (r,))
    traj = simulate(eta0, rate, kernel, policy, T, noise)
    g = rate.g
    sources = _candidate_sources(f, kernel, policy)
    f0 = f.value(eta0.occ)
    integral = 0.0
    rate_mass = 0.0  # integral of sum_{x in Abar} g(eta_s(x)) ds
    gi = 0
    m_grid = np.empty(len(grid))
    lf_grid = np.empty(len(grid))
    f_grid = np.empty(len(grid))
    for t0, t1, occ in intervals(traj):
        lf = _generator_apply_dict(f, occ, rate, kernel, policy, sources)
        while gi < len(grid) and t0 <= grid[gi] < t1:
            fv = f.value(occ)
            m_grid[gi] = fv - f0 - (integral + lf * (grid[gi] - t0))
            lf_grid[gi] = lf
            f_grid[gi] = fv
            gi += 1
        dt = t1 - t0
        integral += lf * dt
        rate_mass += dt * sum(g(occ.get(x, 0)) for x in sources)
    occT = dict(traj.final.occ)
    lfT = _generator_apply_dict(f, occT, rate, kernel, policy, sources)
    while gi < len(grid):
        fv = f.value(occT)
        m_grid[gi] = fv - f0 - integral
        lf_grid[gi] = lfT
        f_grid[gi] = fv
        gi += 1
    return m_grid, rate_mass, f_grid, lf_grid


def martingale_residual(f: LocalFunction, eta0: Configuration, rate: RateFn,
                        kernel: Kernel, policy: BoundaryPolicy, T: float,
                        replicas: int, seed: int, grid=None,
                        threads: int = 1) -> Report:
    """E[M_T] for M_t = f(eta_t) - f(eta_0) - int_0^t (Lf)(eta_s) ds.

    Passes when |mean| <= 4 SE at the horizon and the empirical variance of
    M_T respects the optional-quadratic-variation bound
    8 B^2 E[int sum_{x in Abar} g(eta_s(x)) ds] (within its own 4 SE band).
    """
    if grid is None:
        grid = np.linspace(T / 8, T, 8)
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < 0) or np.any(grid > T) or np.any(np.diff(grid) <= 0):
        raise ConfigError("grid must be increasing inside [0, T]")
    rows = replica_map(_martingale_worker, replicas, threads=threads,
                       args=(f, eta0, rate, kernel, policy, T, seed, grid))
    M = np.stack([row[0] for row in rows])
    mass = np.array([row[1] for row in rows])
    mT = M[:, -1]
    mean, se = _mean_se(mT)
    z = abs(mean) / se if se > 0 else (0.0 if mean == 0 else math.inf)

    var = float(np.var(mT, ddof=1))
    qv_bound = 8.0 * f.bound ** 2 * float(np.mean(mass))
    m4 = float(np.mean((mT - np.mean(mT)) ** 4))
    se_var = math.sqrt(max(m4 - var ** 2, 0.0) / len(mT))
    qv_ok = var <= qv_bound + 4.0 * se_var

    grid_mean = M.mean(axis=0)
    grid_se = M.std(axis=0, ddof=1) / math.sqrt(replicas)
    return Report(
        test="martingale_residual", passed=bool(z <= 4.0 and qv_ok),
        statistic=z, threshold=4.0, seed=seed, n_replicas=replicas,
        extras={"mean": mean, "se": se, "grid": grid.tolist(),
                "grid_mean": grid_mean.tolist(), "grid_se": grid_se.tolist(),
                "var_MT": var, "qv_bound": qv_bound, "qv_ok": bool(qv_ok),
                "f": f.label, "final_mean_f": float(np.mean([row[2][-1] for row in rows]))})


def _forward_worker(r, f, eta0, rate, kernel, policy, T, seed, grid):
    m_grid, _mass, f_grid, lf_grid = _martingale_worker(
        r, f, eta0, rate, kernel, policy, T, seed, grid)
    # integral of Lf up to each grid point recovers from M and f:
    # I(tau) = f(tau) - f(0) - M(tau)
    f0 = f.value(eta0.occ)
    i_grid = f_grid - f0 - m_grid
    return f_grid, lf_grid, i_grid


def forward_equation_check(f: LocalFunction, eta0: Configuration, rate: RateFn,
                           kernel: Kernel, policy: BoundaryPolicy, T: float,
                           replicas: int, seed: int, grid=None,
                           threads: int = 1) -> Report:
    """Windowed forward equation: for interior grid windows,
    E[f(eta_{t+}) - f(eta_{t-})] = E[int Lf ds] exactly; the report also
    carries the central-difference dE[f]/dt against E[Lf] as curves.
    """
    if grid is None:
        grid = np.linspace(0.0, T, 9)
    grid = np.asarray(grid, dtype=float)
    if len(grid) < 3:
        raise ConfigError("need at least 3 grid points")
    rows = replica_map(_forward_worker, replicas, threads=threads,
                       args=(f, eta0, rate, kernel, policy, T, seed, grid))
    F = np.stack([row[0] for row in rows])
    L = np.stack([row[1] for row in rows])
    I = np.stack([row[2] for row in rows])

    zs = []
    for j in range(1, len(grid) - 1):
        d_r = F[:, j + 1] - F[:, j - 1] - (I[:, j + 1] - I[:, j - 1])
        m, se = _mean_se(d_r)
        zs.append(abs(m) / se if se > 0 else (0.0 if m == 0 else math.inf))
    zmax = max(zs)

    ef = F.mean(axis=0)
    elf = L.mean(axis=0)
    deriv = np.full(len(grid), np.nan)
    deriv[1:-1] = (ef[2:] - ef[:-2]) / (grid[2:] - grid[:-2])
    return Report(
        test="forward_equation", passed=bool(zmax <= 4.0), statistic=zmax,
        threshold=4.0, seed=seed, n_replicas=replicas,
        extras={"grid": grid.tolist(), "E_f": ef.tolist(),
                "E_Lf": elf.tolist(), "dEf_dt_central": deriv.tolist(),
                "window_z": zs, "f": f.label})


# ------------------------------------------------------ exact stationarity

def _torus_index_map(sites, sites_per_dim: int, d: int):
    idx = {x: i for i, x in enumerate(sites)}
    L = sites_per_dim

    def fold(x):
        if L % 2 == 1:
            return fold_into_box(x, L // 2)
        if isinstance(x, int):
            return x % L
        return tuple(c % L for c in x)

    return idx, fold


def stationarity_exact(rate: RateFn, kernel: Kernel, sites_per_dim: int,
                       d: int, N: int) -> Report:
    """Global balance residual of the conditioned product measure under the
    folded-kernel torus generator. Exact enumeration; residual should be
    rounding-level (threshold 1e-12 relative to the largest state flux)."""
    meas = canonical_torus_measure(rate, sites_per_dim, d, N)
    idx, fold = _torus_index_map(meas.sites, sites_per_dim, d)
    g = rate.g
    offsets = kernel.support()
    state_index = {st: i for i, st in enumerate(meas.states)}
    n_states = len(meas.states)
    inflow = np.zeros(n_states)
    outflow = np.zeros(n_states)
    for si, st in enumerate(meas.states):
        pi = meas.probs[si]
        for i, x in enumerate(meas.sites):
            k = st[i]
            if k == 0:
                continue
            gx = g(k)
            if gx == 0.0:
                continue
            for z, p in offsets:
                y = fold(site_add(x, z))
                j = idx[y]
                if j == i:
                    continue
                lst = list(st)
                lst[i] -= 1
                lst[j] += 1
                ti = state_index[tuple(lst)]
                flux = pi * gx * p
                outflow[si] += flux
                inflow[ti] += flux
    residual = float(np.max(np.abs(inflow - outflow))) if n_states else 0.0
    scale = float(np.max(outflow)) if n_states else 0.0
    threshold = 1e-12 * scale
    passed = residual <= threshold if scale > 0 else residual == 0.0
    return Report(test="stationarity_exact", passed=bool(passed),
                  statistic=residual, threshold=threshold,
                  extras={"n_states": n_states, "scale": scale,
                          "sites": sites_per_dim ** d, "N": N})


# -------------------------------------------------- statistical stationarity

def _stationarity_worker(r, measure, rate, kernel, torus_n, T, seed, start, N):
    d = kernel.d
    rng = derived_rng(seed, TAG_SAMPLE, r)
    origin: Site = 0 if d == 1 else (0,) * d
    if start == "grand":
        from .measures import sample_box_config
        eta0 = sample_box_config(measure, torus_n, d, rng)
    elif start == "canonical":
        from .measures import sample_box_config
        for _ in range(100_000):
            eta0 = sample_box_config(measure, torus_n, d, rng)
            if eta0.total() == N:
                break
        else:
            raise ConfigError("canonical rejection sampling failed; N too unlikely")
    elif start == "point":
        eta0 = Configuration(d, {origin: N})
    else:
        raise ConfigError(f"unknown start {start!r}")
    noise = HarrisNoise(seed, (r,))
    traj = simulate(eta0, rate, kernel, periodic(torus_n), T, noise)
    return eta0.count(origin), traj.final.count(origin)


def _chi2_one_sample(counts: np.ndarray, probs: np.ndarray):
    """Merge the right tail so every expected cell count is >= 5."""
    R = counts.sum()
    exp = probs * R
    hi = len(exp)
    while hi > 2 and exp[hi - 1:].sum() < 5.0:
        hi -= 1
    obs = np.concatenate([counts[:hi - 1], [counts[hi - 1:].sum()]])
    ex = np.concatenate([exp[:hi - 1], [exp[hi - 1:].sum()]])
    stat = float(np.sum((obs - ex) ** 2 / ex))
    dof = len(obs) - 1
    return stat, dof, float(chi2_dist.sf(stat, dof))


def _chi2_two_sample(c1: np.ndarray, c2: np.ndarray):
    pooled = c1 + c2
    hi = len(pooled)
    while hi > 2 and pooled[hi - 1:].sum() < 10.0:
        hi -= 1

    def squash(c):
        return np.concatenate([c[:hi - 1], [c[hi - 1:].sum()]])

    o1, o2 = squash(c1).astype(float), squash(c2).astype(float)
    n1, n2 = o1.sum(), o2.sum()
    pool = (o1 + o2) / (n1 + n2)
    e1, e2 = pool * n1, pool * n2
    mask = pool > 0
    stat = float(np.sum((o1[mask] - e1[mask]) ** 2 / e1[mask])
                 + np.sum((o2[mask] - e2[mask]) ** 2 / e2[mask]))
    dof = int(mask.sum()) - 1
    return stat, dof, float(chi2_dist.sf(stat, dof))


def stationarity_statistical(rate: RateFn, kernel: Kernel, phi: float,
                             torus_n: int, T: float, replicas: int, seed: int,
                             start: str = "grand", alpha: float = 0.01,
                             threads: int = 1, tol: float = 1e-12) -> Report:
    """Simulate the torus from a stationary (or deliberately non-stationary)
    start and chi-square the time-T origin occupancy against the invariant
    marginal (one-sample for product starts, two-sample vs. the initial
    histogram for canonical starts)."""
    d = kernel.d
    measure = fugacity_measure(rate, phi, tol)
    M = (2 * torus_n + 1) ** d
    N = int(round(measure.density() * M))
    rows = replica_map(_stationarity_worker, replicas, threads=threads,
                       args=(measure, rate, kernel, torus_n, T, seed, start, N))
    k0 = np.array([a for a, _ in rows])
    kT = np.array([b for _, b in rows])
    kmax = int(max(kT.max(), k0.max(), measure.K))
    countsT = np.bincount(kT, minlength=kmax + 1)
    if start == "canonical":
        counts0 = np.bincount(k0, minlength=kmax + 1)
        stat, dof, p = _chi2_two_sample(counts0, countsT)
    else:
        probs = np.zeros(kmax + 1)
        probs[:measure.K + 1] = measure.pmf
        probs[-1] += max(0.0, 1.0 - probs.sum())
        stat, dof, p = _chi2_one_sample(countsT, probs)
    return Report(test="stationarity_statistical", passed=bool(p >= alpha),
                  statistic=stat, threshold=alpha, seed=seed,
                  n_replicas=replicas,
                  extras={"p_value": p, "dof": dof, "start": start,
                          "alpha": alpha, "torus_n": torus_n, "T": T,
                          "phi": phi, "histogram": countsT.tolist()})


# ----------------------------------------------------- engine cross-check

def chi2_joint_two_sample(cells_a: dict, cells_b: dict,
                          min_pooled: float = 10.0):
    """Homogeneity chi-square over categorical cells (dict key -> count).
    Rare cells (pooled count < min_pooled) are merged into one."""
    keys = sorted(set(cells_a) | set(cells_b),
                  key=lambda k: (-(cells_a.get(k, 0) + cells_b.get(k, 0)), str(k)))
    kept = [k for k in keys
            if cells_a.get(k, 0) + cells_b.get(k, 0) >= min_pooled]
    rest = [k for k in keys if k not in set(kept)]
    if rest or len(kept) < 2:
        # merge the sparse remainder; drop one kept cell into it if needed
        while len(kept) >= 2 and sum(cells_a.get(k, 0) + cells_b.get(k, 0)
                                     for k in rest) < min_pooled:
            rest.append(kept.pop())
        o1 = np.array([cells_a.get(k, 0) for k in kept]
                      + [sum(cells_a.get(k, 0) for k in rest)], dtype=float)
        o2 = np.array([cells_b.get(k, 0) for k in kept]
                      + [sum(cells_b.get(k, 0) for k in rest)], dtype=float)
    else:
        o1 = np.array([cells_a.get(k, 0) for k in kept], dtype=float)
        o2 = np.array([cells_b.get(k, 0) for k in kept], dtype=float)
    n1, n2 = o1.sum(), o2.sum()
    pool = (o1 + o2) / (n1 + n2)
    mask = pool > 0
    e1, e2 = pool * n1, pool * n2
    stat = float(np.sum((o1[mask] - e1[mask]) ** 2 / e1[mask])
                 + np.sum((o2[mask] - e2[mask]) ** 2 / e2[mask]))
    dof = int(mask.sum()) - 1
    return stat, dof, float(chi2_dist.sf(stat, dof))


def _engine_pair_worker(r, eta0, rate, kernel, policy, T, seed, window):
    from .engine import simulate_gillespie
    noise = HarrisNoise(seed, (r,))
    th = simulate(eta0, rate, kernel, policy, T, noise)
    rng = derived_rng(seed, TAG_GILLESPIE, r)
    tg = simulate_gillespie(eta0, rate, kernel, policy, T, rng)
    key_h = tuple(th.final.count(x) for x in window)
    key_g = tuple(tg.final.count(x) for x in window)
    return key_h, key_g


def engine_agreement_check(eta0: Configuration, rate: RateFn, kernel: Kernel,
                           policy: BoundaryPolicy, T: float, replicas: int,
                           seed: int, window=None, alpha: float = 0.001,
                           threads: int = 1) -> Report:
    """Two-sample chi-square between the thinning construction and the
    total-rate clock sampler on the joint time-T occupancy of a site window.
    The two engines share nothing but the model, so agreement here checks
    the thinning logic end to end."""
    if window is None:
        from .sites import box_sites
        window = box_sites(1, kernel.d)
    rows = replica_map(_engine_pair_worker, replicas, threads=threads,
                       args=(eta0, rate, kernel, policy, T, seed, tuple(window)))
    cells_h: dict = {}
    cells_g: dict = {}
    for kh, kg in rows:
        cells_h[kh] = cells_h.get(kh, 0) + 1
        cells_g[kg] = cells_g.get(kg, 0) + 1
    stat, dof, p = chi2_joint_two_sample(cells_h, cells_g)
    return Report(test="engine_agreement", passed=bool(p >= alpha),
                  statistic=stat, threshold=alpha, seed=seed,
                  n_replicas=replicas,
                  extras={"p_value": p, "dof": dof, "alpha": alpha,
                          "window": [list((x,)) if isinstance(x, int) else list(x)
                                     for x in window],
                          "n_cells_harris": len(cells_h),
                          "n_cells_gillespie": len(cells_g)})


# ------------------------------------------------------------- j discrepancy

def _j_dicts(a: dict, b: dict) -> int:
    sites = set(a) | set(b) | {0}
    lo, hi = min(sites), max(sites)
    run = 0
    best_r = -(1 << 62)
    for x in range(0, hi + 1):
        run += a.get(x, 0) - b.get(x, 0)
        if run > best_r:
            best_r = run
    run = 0
    best_l = 0  # n = 0: empty left block
    for x in range(-1, lo - 1, -1):
        run += a.get(x, 0) - b.get(x, 0)
        if run > best_l:
            best_l = run
    return max(0, best_r + best_l)


def j_discrepancy(zeta: Configuration, psi: Configuration) -> int:
    """Largest positive excess of zeta over psi on any window [n, m] with
    n <= 0 <= m (d=1): the number of zeta particles with no psi partner
    reachable without crossing the origin."""
    if zeta.d != 1 or psi.d != 1:
        raise ConfigError("the discrepancy functional is d=1 only")
    return _j_dicts(dict(zeta.occ), dict(psi.occ))


def _j_worker(r, zeta0, psi0, rate, kernel, T, seed):
    noise = HarrisNoise(seed, (r,))
    tz = simulate(zeta0, rate, kernel, OPEN, T, noise, tag="zeta")
    tp = simulate(psi0, rate, kernel, OPEN, T, noise, tag="psi")
    occz = dict(zeta0.occ)
    occp = dict(psi0.occ)
    j0 = _j_dicts(occz, occp)
    ez, ep = tz.events, tp.events
    iz = ip = 0
    n_off_origin = 0
    violations = 0
    from .configuration import _apply_event
    while iz < len(ez) or ip < len(ep):
        tz_next = ez[iz][0] if iz < len(ez) else math.inf
        tp_next = ep[ip][0] if ip < len(ep) else math.inf
        t = min(tz_next, tp_next)
        # a shared atom fires in both runs at the identical float time; apply
        # the whole instant before checking the inequality
        while iz < len(ez) and ez[iz][0] == t:
            _apply_event(occz, ez[iz])
            iz += 1
        while ip < len(ep) and ep[ip][0] == t:
            if ep[ip][1] == 0:
                n_off_origin += 1
            _apply_event(occp, ep[ip])
            ip += 1
        if _j_dicts(occz, occp) > j0 + n_off_origin:
            violations += 1
    return violations


def j_inequality_check(zeta0: Configuration, psi0: Configuration, rate: RateFn,
                       kernel: Kernel, T: float, replicas: int, seed: int,
                       threads: int = 1) -> Report:
    """Couple the two marginals through one noise field and verify, at every
    event instant, that the discrepancy never grows beyond its initial value
    plus the number of psi departures from the origin. Zero tolerance."""
    if is_nearest_neighbour_1d(kernel) is None:
        raise ConfigError("the discrepancy inequality needs a d=1 nearest-neighbour kernel")
    rows = replica_map(_j_worker, replicas, threads=threads,
                       args=(zeta0, psi0, rate, kernel, T, seed))
    total = int(sum(rows))
    return Report(test="j_inequality", passed=total == 0, statistic=float(total),
                  threshold=0.0, seed=seed, n_replicas=replicas,
                  extras={"violations": total})


# ------------------------------------------------------------- Poisson flux

def _flux_worker(r, measure, rate, torus_n, T, seed, start, N):
    rng = derived_rng(seed, TAG_SAMPLE, r)
    if start == "grand":
        from .measures import sample_box_config
        eta0 = sample_box_config(measure, torus_n, 1, rng)
    elif start == "point":
        eta0 = Configuration(1, {0: N})
    else:
        raise ConfigError(f"unknown start {start!r}")
    noise = HarrisNoise(seed, (r,))
    kernel = nn_kernel_1d(1.0)
    traj = simulate(eta0, rate, kernel, periodic(torus_n), T, noise)
    return sum(1 for ev in traj.events if ev[1] == -1)


def poisson_flux_check(rate: RateFn, phi: float, torus_n: int, T: float,
                       replicas: int, seed: int, start: str = "grand",
                       threads: int = 1, tol: float = 1e-12) -> Report:
    """Under the stationary product start and totally asymmetric d=1 jumps,
    the count of -1 -> 0 crossings in [0, T] should be Poisson with mean
    phi*T: mean and index of dispersion both inside 4*SE bands."""
    if torus_n < 1:
        raise ConfigError("need torus radius >= 1")
    measure = fugacity_measure(rate, phi, tol)
    M = 2 * torus_n + 1
    N = int(round(measure.density() * M))
    counts = np.array(replica_map(_flux_worker, replicas, threads=threads,
                                  args=(measure, rate, torus_n, T, seed, start, N)),
                      dtype=float)
    mean, se = _mean_se(counts)
    target = phi * T
    z_mean = abs(mean - target) / se if se > 0 else math.inf
    var = float(np.var(counts, ddof=1))
    dispersion = var / mean if mean > 0 else math.inf
    se_disp = math.sqrt(2.0 / (replicas - 1))
    z_disp = abs(dispersion - 1.0) / se_disp
    z = max(z_mean, z_disp)
    return Report(test="poisson_flux", passed=bool(z <= 4.0), statistic=z,
                  threshold=4.0, seed=seed, n_replicas=replicas,
                  extras={"mean": mean, "target_mean": target,
                          "dispersion": dispersion, "z_mean": z_mean,
                          "z_dispersion": z_disp, "start": start,
                          "torus_n": torus_n, "T": T, "phi": phi})


# -------------------------------------------------------- mass conservation

def _mass_torus_worker(r, measure, rate, kernel, torus_n, T, seed):
    rng = derived_rng(seed, TAG_SAMPLE, r)
    from .measures import sample_box_config
    eta0 = sample_box_config(measure, torus_n, kernel.d, rng)
    noise = HarrisNoise(seed, (r,))
    traj = simulate(eta0, rate, kernel, periodic(torus_n), T, noise)
    if traj.kill_count() != 0:
        raise InvariantViolation("kill event on a torus")
    if traj.final.total() != eta0.total():
        raise InvariantViolation(
            f"mass not conserved on torus: {eta0.total()} -> {traj.final.total()}")
    origin: Site = 0 if kernel.d == 1 else (0,) * kernel.d
    return traj.final.count(origin)


def _mass_schedule_worker(r, measure, rate, kernel, schedule, T, seed):
    rng = derived_rng(seed, TAG_SAMPLE, r)
    from .configuration import truncate
    from .measures import sample_box_config
    base = sample_box_config(measure, schedule[-1], kernel.d, rng)
    noise = HarrisNoise(seed, (r,))
    origin: Site = 0 if kernel.d == 1 else (0,) * kernel.d
    outs = []
    for n in schedule:
        traj = simulate(truncate(base, n), rate, kernel, OPEN, T, noise,
                        tag=f"n={n}")
        outs.append(traj.final.count(origin))
    for a, b in zip(outs, outs[1:]):
        if a > b:
            raise InvariantViolation(
                f"origin occupancy decreased when the box grew: {outs}")
    return tuple(outs)


def mass_conservation_check(rate: RateFn, kernel: Kernel, phi: float,
                            torus_n: int, T: float, replicas: int, seed: int,
                            schedule=None, threads: int = 1,
                            tol: float = 1e-12) -> Report:
    """Torus runs conserve total mass exactly (audited per replica) and keep
    E[eta_T(origin)] at the invariant density. With a schedule of open boxes,
    the per-replica origin occupancies are nested (shared noise, exact) and
    the largest-box mean must reach the density from below within 4 SE."""
    measure = fugacity_measure(rate, phi, tol)
    rho = measure.density()
    vals = np.array(replica_map(_mass_torus_worker, replicas, threads=threads,
                                args=(measure, rate, kernel, torus_n, T, seed)),
                    dtype=float)
    mean, se = _mean_se(vals)
    z = abs(mean - rho) / se if se > 0 else math.inf
    extras = {"torus_mean": mean, "density": rho, "z": z, "phi": phi}
    passed = z <= 4.0
    if schedule is not None:
        schedule = tuple(int(n) for n in schedule)
        if any(b <= a for a, b in zip(schedule, schedule[1:])):
            raise ConfigError("schedule must be strictly increasing")
        rows = np.array(replica_map(_mass_schedule_worker, replicas,
                                    threads=threads,
                                    args=(measure, rate, kernel, schedule, T, seed)),
                        dtype=float)
        means = rows.mean(axis=0)
        se_last = float(np.std(rows[:, -1], ddof=1) / math.sqrt(len(rows)))
        gap = rho - float(means[-1])
        extras.update({"schedule": list(schedule),
                       "schedule_means": means.tolist(),
                       "gap_to_density": gap, "se_last": se_last})
        passed = passed and gap <= 4.0 * se_last
    return Report(test="mass_conservation", passed=bool(passed), statistic=z,
                  threshold=4.0, seed=seed, n_replicas=replicas, extras=extras)
