"""Jump rate functions g: N -> [0, inf).

Contract for every family: g(0) = 0, g is non-decreasing, and g grows without
bound over its representable domain. Values are memoized; instances are
immutable after construction and safe for concurrent reads (the memo only
ever appends, and entries are pure functions of k).

h(n) = max increment of g over 1..n drives the clock-speed bounds used by the
moment estimates: a site holding i particles empties no faster than a rate
h(i) clock ticks relative to a rate-1 walk.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, RateRangeError
from .kernel import Kernel, mean_drift

MAX_RATE = 1e300  # beyond this, refuse rather than hand out inf

_MONO_SLACK = 0.0  # monotonicity is required exactly; rounding noise is the caller's bug


@dataclass
class RateFn:
    family: str
    a: float | None = None            # power: g(k) = k**a
    c: float | None = None            # exp: g(k) = c * e**(theta k), k >= 1
    theta: float | None = None
    table: tuple[float, ...] | None = None
    fn: Callable[[int], float] | None = None   # custom formula
    label: str = ""
    _memo: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.family == "power":
            if self.a is None or not (self.a > 0):
                raise ConfigError("power rate needs exponent a > 0")
        elif self.family == "exp":
            if self.c is None or self.theta is None or self.c <= 0 or self.theta <= 0:
                raise ConfigError("exp rate needs scale c > 0 and base theta > 0")
        elif self.family == "table":
            if not self.table or len(self.table) < 2:
                raise ConfigError("table rate needs at least [g(0), g(1)]")
            t = tuple(float(v) for v in self.table)
            if t[0] != 0.0:
                raise ConfigError("rate table must start with g(0) = 0")
            for j in range(1, len(t)):
                if t[j] < t[j - 1] - _MONO_SLACK:
                    raise ConfigError(f"rate table decreases at k={j}: {t[j-1]} -> {t[j]}")
                if not math.isfinite(t[j]) or t[j] > MAX_RATE:
                    raise ConfigError(f"rate table entry at k={j} exceeds representable range")
            self.table = t
        elif self.family == "custom":
            if self.fn is None:
                raise ConfigError("custom rate needs a callable")
            if float(self.fn(0)) != 0.0:
                raise ConfigError("custom rate must satisfy g(0) = 0")
        else:
            raise ConfigError(f"unknown rate family {self.family!r}")
        self._memo = [0.0]

    def max_k(self) -> int | None:
        """Largest k for which g(k) is defined (None = unbounded domain)."""
        return len(self.table) - 1 if self.family == "table" else None

    def _compute(self, k: int) -> float:
        if self.family == "power":
            v = float(k) ** self.a
        elif self.family == "exp":
            v = self.c * math.exp(self.theta * k)
        elif self.family == "table":
            if k >= len(self.table):
                raise RateRangeError(
                    f"rate table has {len(self.table)} entries, g({k}) undefined")
            v = self.table[k]
        else:
            v = float(self.fn(k))
        if not math.isfinite(v) or v > MAX_RATE:
            raise RateRangeError(f"g({k}) = {v!r} outside representable range")
        return v

    def g(self, k: int) -> float:
        if k < 0:
            raise ConfigError("occupancies are non-negative")
        memo = self._memo
        if k < len(memo):
            return memo[k]
        for j in range(len(memo), k + 1):
            v = self._compute(j)
            if v < memo[-1]:
                raise ConfigError(f"rate function decreases at k={j}: {memo[-1]} -> {v}")
            memo.append(v)
        return memo[k]

    def h(self, n: int) -> float:
        """Running max of increments: h(n) = max_{1<=j<=n} g(j) - g(j-1); h(0) = 0."""
        if n <= 0:
            return 0.0
        self.g(n)
        m = self._memo
        return max(m[j] - m[j - 1] for j in range(1, n + 1))


def power_rate(a: float) -> RateFn:
    return RateFn(family="power", a=float(a), label=f"k^{a:g}")


def exp_rate(c: float, theta: float) -> RateFn:
    return RateFn(family="exp", c=float(c), theta=float(theta),
                  label=f"{c:g}*e^({theta:g}k)")


def table_rate(values, label: str = "table") -> RateFn:
    return RateFn(family="table", table=tuple(float(v) for v in values), label=label)


def custom_rate(fn: Callable[[int], float], label: str = "custom") -> RateFn:
    return RateFn(family="custom", fn=fn, label=label)


def rate_to_json(rate: RateFn) -> dict:
    if rate.family == "power":
        return {"family": "power", "a": rate.a}
    if rate.family == "exp":
        return {"family": "exp", "c": rate.c, "theta": rate.theta}
    if rate.family == "table":
        return {"family": "table", "values": list(rate.table)}
    raise ConfigError("custom rates have no JSON form; use a table")


def rate_from_json(obj: dict) -> RateFn:
    try:
        fam = obj["family"]
    except (KeyError, TypeError):
        raise ConfigError("rate spec needs a 'family' field") from None
    try:
        if fam == "power":
            return power_rate(float(obj["a"]))
        if fam == "exp":
            return exp_rate(float(obj["c"]), float(obj["theta"]))
        if fam == "table":
            return table_rate(obj["values"])
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"bad rate spec {obj!r}: {e}") from None
    raise ConfigError(f"unknown rate family {fam!r}")


def check_exponential_bound(rate: RateFn, c: float, theta: float, n_max: int) -> bool:
    """Does g(n) <= c * e**(theta n) hold for all 1 <= n <= n_max?

    n_max = 0 is vacuously true (g(0) = 0 <= c).
    """
    if c <= 0 or theta <= 0:
        raise ConfigError("need c > 0 and theta > 0")
    for n in range(1, n_max + 1):
        if rate.g(n) > c * math.exp(theta * n):
            return False
    return True


@dataclass(frozen=True)
class CorollaryReport:
    a_estimate: float
    condition_a: bool
    condition_b: bool
    drift: tuple[float, ...]
    n_max_used: int
    fit_points: tuple[int, ...]
    heuristic: bool = True  # finite-sample evidence, not a proof

    def to_json(self) -> dict:
        return {
            "a_estimate": self.a_estimate,
            "condition_a": self.condition_a,
            "condition_b": self.condition_b,
            "drift": list(self.drift),
            "n_max_used": self.n_max_used,
            "heuristic": self.heuristic,
        }


SLOPE_MARGIN = 0.1


def check_corollary_conditions(rate: RateFn, kernel: Kernel, n_max: int = 10_000,
                               fit_window: int = 50) -> CorollaryReport:
    """Finite-sample test of the two sufficient growth conditions.

    condition_a: zero mean drift and h(n) growing no faster than n^a for some
    a < 2/d, judged by the least-squares slope of log h vs log n over
    fit_window log-spaced points in [sqrt(n_max), n_max].
    condition_b: h(n) * n^(-1/d) decreasing over those points and halving
    across the window.

    Both are advisory (heuristic=True): a slope fit on a finite range proves
    nothing, it only flags obviously super-critical growth.
    """
    if fit_window < 10:
        raise ConfigError("fit_window must be >= 10")
    if n_max < fit_window:
        raise ConfigError("n_max must be >= fit_window")
    d = kernel.d

    # clip to the representable range of g (tables, steep formulas)
    hi = n_max
    mk = rate.max_k()
    if mk is not None:
        hi = min(hi, mk)
    while hi > 1:
        try:
            rate.g(hi)
            break
        except RateRangeError:
            hi = hi // 2
    lo = max(2, int(math.isqrt(hi)))
    pts = np.unique(np.geomspace(lo, hi, num=fit_window).astype(int))
    pts = pts[pts >= 1]

    hvals = np.array([rate.h(int(n)) for n in pts])
    mask = hvals > 0
    if mask.sum() >= 2:
        slope = float(np.polyfit(np.log(pts[mask]), np.log(hvals[mask]), 1)[0])
    else:
        slope = float("nan")

    drift = mean_drift(kernel)
    zero_drift = all(abs(c) <= 1e-12 for c in drift)
    cond_a = bool(zero_drift and math.isfinite(slope) and slope < 2.0 / d - SLOPE_MARGIN)

    v = hvals * pts.astype(float) ** (-1.0 / d)
    decreasing = bool(np.all(v[1:] <= v[:-1] * (1 + 1e-9)))
    halves = bool(v[-1] < v[0] / 2)
    cond_b = decreasing and halves

    return CorollaryReport(a_estimate=slope, condition_a=cond_a, condition_b=cond_b,
                           drift=drift, n_max_used=int(hi), fit_points=tuple(int(n) for n in pts))
