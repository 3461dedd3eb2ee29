"""Translation-invariant, finite-range jump kernels p(z) on Z^d.

A kernel is the common law of the jump displacement: when a site fires, the
particle moves from x to x + z with probability p(z). Support must be finite,
must not contain the zero offset, and the weights must sum to 1.

Two inverse-CDF conventions coexist:
  * sample_jump orders the support lexicographically (works in any d);
  * the d=1 nearest-neighbour family construction instead maps u <= p to +1
    (sample_jump_pq), which is what makes the simultaneous (p,q)-coupling
    order-preserving. Engine code picks the right one per use.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .sites import Site, site_coords, site_from_coords

PROB_TOL = 1e-12


@dataclass(frozen=True)
class Kernel:
    d: int
    # support sorted lexicographically by offset coordinates
    offsets: tuple[tuple[int, ...], ...]
    probs: tuple[float, ...]
    # derived, filled in __post_init__
    cum: tuple[float, ...] = field(default=(), compare=False)
    range: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError("kernel dimension must be >= 1")
        if not self.offsets:
            raise ConfigError("kernel support is empty")
        seen = set()
        for z in self.offsets:
            if len(z) != self.d:
                raise ConfigError(f"offset {z} does not match d={self.d}")
            if all(c == 0 for c in z):
                raise ConfigError("kernel support must not contain the zero offset")
            if z in seen:
                raise ConfigError(f"duplicate offset {z}")
            seen.add(z)
        if list(self.offsets) != sorted(self.offsets):
            raise ConfigError("offsets must be sorted lexicographically")
        if any(p <= 0 for p in self.probs) or len(self.probs) != len(self.offsets):
            raise ConfigError("each offset needs a probability > 0")
        s = float(sum(self.probs))
        if abs(s - 1.0) > PROB_TOL:
            raise ConfigError(f"kernel probabilities sum to {s!r}, not 1")
        cum = tuple(np.cumsum(self.probs).tolist())
        object.__setattr__(self, "cum", cum)
        object.__setattr__(self, "range", max(max(abs(c) for c in z) for z in self.offsets))

    # offsets in the package's site representation (ints when d=1)
    def support(self) -> list[tuple[Site, float]]:
        if self.d == 1:
            return [(z[0], p) for z, p in zip(self.offsets, self.probs)]
        return list(zip(self.offsets, self.probs))


def make_kernel(support, d: int | None = None) -> Kernel:
    """support: iterable of (offset, prob); offsets as ints (d=1) or tuples."""
    items = []
    for z, p in support:
        zc = site_coords(z) if not isinstance(z, (list,)) else tuple(int(c) for c in z)
        items.append((zc, float(p)))
    if d is None:
        if not items:
            raise ConfigError("kernel support is empty")
        d = len(items[0][0])
    items.sort(key=lambda it: it[0])
    return Kernel(d=d, offsets=tuple(z for z, _ in items), probs=tuple(p for _, p in items))


def nn_kernel_1d(p: float, q: float | None = None) -> Kernel:
    """Nearest-neighbour d=1 kernel: +1 with prob p, -1 with prob q = 1-p."""
    if q is None:
        q = 1.0 - p
    if p < 0 or q < 0:
        raise ConfigError("p, q must be non-negative")
    if abs(p + q - 1.0) > PROB_TOL:
        raise ConfigError(f"p + q = {p + q!r} must be 1")
    support = []
    if q > 0:
        support.append(((-1,), q))
    if p > 0:
        support.append(((1,), p))
    return Kernel(d=1, offsets=tuple(z for z, _ in support), probs=tuple(w for _, w in support))


def symmetric_nn_kernel(d: int) -> Kernel:
    """Simple random walk kernel: 2d nearest neighbours, weight 1/(2d) each."""
    offs = []
    for i in range(d):
        for s in (-1, 1):
            z = [0] * d
            z[i] = s
            offs.append(tuple(z))
    offs.sort()
    return Kernel(d=d, offsets=tuple(offs), probs=tuple([1.0 / (2 * d)] * (2 * d)))


def mean_drift(kernel: Kernel) -> tuple[float, ...]:
    return tuple(float(sum(p * z[i] for z, p in zip(kernel.offsets, kernel.probs)))
                 for i in range(kernel.d))


def is_nearest_neighbour_1d(kernel: Kernel):
    """(p, q) if the kernel is d=1 with support inside {-1, +1}, else None."""
    if kernel.d != 1:
        return None
    p = q = 0.0
    for z, w in zip(kernel.offsets, kernel.probs):
        if z == (1,):
            p = w
        elif z == (-1,):
            q = w
        else:
            return None
    return (p, q)


def sample_jump(kernel: Kernel, u: float) -> Site:
    """Inverse CDF over the lexicographically ordered support; u in [0, 1)."""
    i = bisect_right(kernel.cum, u)
    if i >= len(kernel.offsets):  # u == 1 - eps rounding guard
        i = len(kernel.offsets) - 1
    z = kernel.offsets[i]
    return z[0] if kernel.d == 1 else z


def sample_jump_pq(p: float, u: float) -> int:
    """The d=1 family convention: +1 iff u <= p, else -1."""
    return 1 if u <= p else -1


def kernel_to_json(kernel: Kernel) -> dict:
    return {
        "d": kernel.d,
        "support": [{"z": list(z), "p": p} for z, p in zip(kernel.offsets, kernel.probs)],
    }


def kernel_from_json(obj: dict) -> Kernel:
    try:
        d = int(obj["d"])
        raw = obj["support"]
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"kernel spec needs 'd' and 'support': {e}") from None
    items = []
    for ent in raw:
        try:
            z = site_coords(site_from_coords(ent["z"], d))
            p = float(ent["p"])
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"bad kernel support entry {ent!r}: {e}") from None
        items.append((z, p))
    items.sort(key=lambda it: it[0])
    return Kernel(d=d, offsets=tuple(z for z, _ in items), probs=tuple(p for _, p in items))
