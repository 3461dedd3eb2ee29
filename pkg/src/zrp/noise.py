"""Deterministic space-time Poisson field driving the event engine.

Each site x carries a unit-intensity Poisson process on height x time, with
an independent U[0,1) direction mark per atom. A site holding k particles
fires at the atoms with height y <= g(k); higher atoms are thinned. Runs only
ever need atoms up to a height cap, so the field is materialized lazily in
rectangular windows:

    height bands  [0,1), [1,2), [2,4), ... (global, run-independent edges)
    time slabs    [s, s+1), s = 0, 1, ...

The atoms of window (site, band, slab) are a pure function of
(master seed, path, site, band, slab). Raising a cap adds whole bands and can
never change atoms already seen, and any two runs sharing a HarrisNoise see
the identical field: that is what turns shared noise into the monotone
couplings (truncation levels, two-marginal order, the (p,q) family).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .parallel import TAG_HARRIS, derived_rng
from .sites import Site, site_seed_path

TIME_SLAB = 1.0


def band_bounds(b: int) -> tuple[float, float]:
    if b == 0:
        return 0.0, 1.0
    return float(2 ** (b - 1)), float(2 ** b)


def bands_for(cap: float) -> int:
    """Smallest band count whose ceiling covers rate `cap`."""
    if cap <= 0.0:
        return 0
    if cap <= 1.0:
        return 1
    return 1 + math.ceil(math.log2(cap))


def band_ceiling(m: int) -> float:
    return 0.0 if m == 0 else float(2 ** (m - 1))


@dataclass
class HarrisNoise:
    master: int
    path: tuple[int, ...] = ()
    _cache: dict = field(default_factory=dict, repr=False)

    def child(self, *path: int) -> "HarrisNoise":
        """Independent sub-field (e.g. one per replica)."""
        return HarrisNoise(self.master, self.path + tuple(int(p) for p in path))

    def window(self, site: Site, band: int, slab: int):
        """(times, heights, marks) of the atoms in one window, cached.

        Times are absolute (inside [slab, slab+1)), heights inside the band,
        marks U[0,1). Arrays are read-only by convention.
        """
        key = (site, band, slab)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        lo, hi = band_bounds(band)
        rng = derived_rng(self.master, TAG_HARRIS, *self.path,
                          *site_seed_path(site), band, slab)
        n = int(rng.poisson((hi - lo) * TIME_SLAB))
        ts = slab * TIME_SLAB + rng.random(n) * TIME_SLAB
        ys = lo + (hi - lo) * rng.random(n)
        us = rng.random(n)
        out = (ts, ys, us)
        self._cache[key] = out
        return out

    def clear_cache(self) -> None:
        self._cache.clear()
