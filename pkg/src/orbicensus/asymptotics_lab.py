"""Counting and density experiments for commensurability classes.

Every count here is exact: a segmented pass over 1..N computes, per integer, the
squarefree flag, Phi, the number of prime factors and "has a prime factor split in
Q(sqrt(delta))" flags. Counts are then binned against integer thresholds, so
parallel aggregation only ever adds integers.

Over Q the volume of a class is (pi/3) Phi(D), so Phi ordering is volume ordering.
"""

from __future__ import annotations

import bisect
import functools
import math
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core_arith import PrimeTable, kronecker, map_segments, profile_segment, segment_ranges, trial_factor
from .errors import ConfigurationError, DomainError, FitError, IncompleteTableError
from .geodesics_heights import geodesic_length_from_trace, trace_field_delta
from .quadratic_fields import QuadraticField, field_from_delta, fundamental_discriminants, ideal_phi_factors
from .quaternion_census import QuaternionAlgebraQ, base_covolume_3d, induced_algebra, phi

# shortest possible closed geodesic on an arithmetic surface over Q (trace 3)
MIN_TRACE_LENGTH = geodesic_length_from_trace(3)
ZETA4 = math.pi**4 / 90


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class DensityCurve:
    grid: tuple[float, ...]
    counts: tuple[int, ...]
    totals: tuple[int, ...]
    fit: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(x) for x in self.grid))
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        object.__setattr__(self, "totals", tuple(int(t) for t in self.totals))
        if not (len(self.grid) == len(self.counts) == len(self.totals)):
            raise DomainError("grid, counts and totals must have equal length")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise DomainError("grid must be strictly increasing")
        if any(c < 0 or c > t for c, t in zip(self.counts, self.totals)):
            raise DomainError("need 0 <= count <= total at every grid point")
        if self.fit is not None and not all(math.isfinite(v) for v in self.fit):
            raise FitError(f"non-finite fit {self.fit}")

    def __len__(self) -> int:
        return len(self.grid)

    @property
    def ratios(self) -> tuple[float, ...]:
        return tuple(c / t if t else math.nan for c, t in zip(self.counts, self.totals))

    def densities(self) -> tuple[float, ...]:
        """count / x at each grid point."""
        return tuple(c / x for c, x in zip(self.counts, self.grid))

    def with_fit(self, fit: tuple[float, float] | None) -> "DensityCurve":
        return replace(self, fit=fit)

    def at(self, x: float) -> tuple[int, int]:
        i = self.grid.index(float(x))
        return self.counts[i], self.totals[i]


@dataclass(frozen=True)
class HFunctionSpec:
    """Field-size cutoff h(x): either (log x)^exponent or a fixed threshold."""

    exponent: float | None = None
    threshold: float | None = None

    def __post_init__(self):
        if (self.exponent is None) == (self.threshold is None):
            raise ConfigurationError("give exactly one of exponent or threshold")
        if self.exponent is not None and not self.exponent < 0.5:
            raise ConfigurationError(f"h(x) = (log x)^a needs a < 1/2, got {self.exponent}")

    def __call__(self, x: float) -> float:
        if self.threshold is not None:
            return float(self.threshold)
        return math.log(x) ** self.exponent if x > 1 else 0.0


def geometric_grid(x_min: float, x_max: float, points: int) -> tuple[float, ...]:
    """``points`` geometrically spaced values from x_min to x_max inclusive.

    Values within 1e-9 relative of an integer are snapped to it, so decades land exactly.
    """
    if points < 1 or x_min <= 0 or x_max < x_min:
        raise ConfigurationError(f"bad grid ({x_min}, {x_max}, {points})")
    if points == 1:
        return (float(x_min),)
    if x_max == x_min:
        raise ConfigurationError("a grid with several points needs x_max > x_min")
    a, b = math.log10(x_min), math.log10(x_max)
    out = []
    for i in range(points):
        x = 10.0 ** (a + (b - a) * i / (points - 1))
        r = round(x)
        out.append(float(r) if abs(x - r) <= 1e-9 * x else x)
    return tuple(out)


# ---------------------------------------------------------------------------
# search bound for Phi(d) <= x


@functools.lru_cache(maxsize=1024)
def phi_search_bound(x: float) -> int:
    """Integer N with: d squarefree and Phi(d) <= x implies d <= N.

    With k distinct prime factors, d / Phi(d) <= r_k = prod p/(p-1) over the first k
    primes and d >= p_1 ... p_k, so d <= x r_k for some k with p_1...p_k <= x r_k.
    """
    if x < 1:
        return 0
    best = math.floor(x)
    prim, r, p = 1, 1.0, 1
    while True:
        p += 1
        while any(p % q == 0 for q in range(2, math.isqrt(p) + 1)):
            p += 1
        prim *= p
        r *= p / (p - 1)
        cap = x * r * (1 + 1e-12)
        if prim > cap:
            return best
        best = max(best, math.floor(cap))


# ---------------------------------------------------------------------------
# the segmented counting engine


@dataclass(frozen=True)
class Selector:
    """Which squarefree n to count.

    ``mode``: "all"; "embeds_any" (some listed field has no split prime dividing n);
    "split_all" (every listed field has a split prime dividing n).
    """

    mode: str = "all"
    fields: tuple[int, ...] = ()
    even: bool = False
    exclude_one: bool = False

    def __post_init__(self):
        if self.mode not in ("all", "embeds_any", "split_all"):
            raise ConfigurationError(f"unknown selector mode {self.mode!r}")


def _segment_counts(lo, hi, *, primes, thresholds, key, deltas, selectors):
    prof = profile_segment(lo, hi, primes, deltas)
    n = prof.n
    keyvals = prof.phi if key == "phi" else n
    where = {d: i for i, d in enumerate(deltas)}
    base = prof.squarefree & (keyvals <= thresholds[-1])
    out = np.zeros((len(selectors), len(thresholds)), dtype=np.int64)
    for s, sel in enumerate(selectors):
        m = base.copy()
        if sel.even:
            m &= prof.omega % 2 == 0
        if sel.exclude_one:
            m &= n > 1
        if sel.mode == "embeds_any":
            ok = np.zeros_like(m)
            for d in sel.fields:
                ok |= ~prof.split[where[d]]
            m &= ok
        elif sel.mode == "split_all":
            for d in sel.fields:
                m &= prof.split[where[d]]
        bins = np.searchsorted(thresholds, keyvals[m], side="left")
        out[s] = np.bincount(bins, minlength=len(thresholds))[: len(thresholds)]
    return out


def _sieving_primes(table: PrimeTable, root: int) -> np.ndarray:
    """Primes up to and including the first prime >= root (the segment engine checks coverage)."""
    i = int(np.searchsorted(table.primes, root, side="left"))
    if i >= len(table.primes):
        raise IncompleteTableError(f"need a prime >= {root}, table limit is {table.limit}")
    return table.primes[: i + 1]


def count_on_grid(
    grid: Sequence[float],
    selectors: Sequence[Selector],
    key: str,
    table: PrimeTable,
    workers: int = 1,
) -> np.ndarray:
    """Cumulative counts, shape (len(selectors), len(grid)), of n with key(n) <= x.

    ``key`` is "phi" (order by Phi(n)) or "n" (order by n itself).
    """
    if key not in ("phi", "n"):
        raise ConfigurationError(f"key must be 'phi' or 'n', got {key!r}")
    thresholds = np.array([math.floor(x) for x in grid], dtype=np.int64)
    if len(thresholds) == 0:
        return np.zeros((len(selectors), 0), dtype=np.int64)
    if np.any(np.diff(thresholds) < 0):
        raise DomainError("grid must be ascending")
    top = int(thresholds[-1])
    if top < 1:
        return np.zeros((len(selectors), len(thresholds)), dtype=np.int64)
    limit = phi_search_bound(top) if key == "phi" else top
    primes = _sieving_primes(table, math.isqrt(limit))
    deltas = tuple(sorted({d for s in selectors for d in s.fields}))
    func = functools.partial(
        _segment_counts, primes=primes, thresholds=thresholds, key=key, deltas=deltas, selectors=tuple(selectors)
    )
    parts = map_segments(func, segment_ranges(1, limit + 1), workers)
    return np.cumsum(np.sum(parts, axis=0), axis=1)


# ---------------------------------------------------------------------------
# Phi-bounded counts of algebras admitting a given field


def _embeds_selector(K: QuadraticField, parity: bool) -> Selector:
    # A real field cannot sit in a definite algebra (odd number of finite ramified primes).
    return Selector("embeds_any", (K.delta,), even=parity and K.is_real)


def count_phi_bounded_embeddable(K: QuadraticField, x: float, table: PrimeTable) -> int:
    """Squarefree d with Phi(d) <= x and no prime factor split in K.

    Only the finite ramification is tested (d ranges over all squarefree integers).
    """
    if x < 1:
        return 0
    return int(count_on_grid([x], [_embeds_selector(K, False)], "phi", table)[0, 0])


def phi_embeddable_curve(K: QuadraticField, grid: Sequence[float], table: PrimeTable, workers: int = 1) -> DensityCurve:
    """counts: as :func:`count_phi_bounded_embeddable`; totals: all squarefree d with Phi(d) <= x."""
    res = count_on_grid(grid, [_embeds_selector(K, False), Selector()], "phi", table, workers)
    return DensityCurve(tuple(grid), tuple(res[0]), tuple(res[1]))


def disc_embeddable_curve(K: QuadraticField, grid: Sequence[float], table: PrimeTable, workers: int = 1) -> DensityCurve:
    """Algebras over Q with disc_f <= x admitting K (full local criterion), against all disc_f <= x."""
    res = count_on_grid(grid, [_embeds_selector(K, True), Selector()], "n", table, workers)
    return DensityCurve(tuple(grid), tuple(res[0]), tuple(res[1]))


def count_all_classes_2d(x: float, table: PrimeTable, include_split: bool = True) -> int:
    """Indefinite algebras (even number of ramified primes) with Phi(disc) <= x."""
    if x < 1:
        return 0
    sel = Selector(even=True, exclude_one=not include_split)
    return int(count_on_grid([x], [sel], "phi", table)[0, 0])


def all_classes_curve(grid: Sequence[float], table: PrimeTable, include_split: bool = True, workers: int = 1) -> DensityCurve:
    sel = Selector(even=True, exclude_one=not include_split)
    res = count_on_grid(grid, [sel], "phi", table, workers)
    return DensityCurve(tuple(grid), tuple(res[0]), tuple(res[0]))


# ---------------------------------------------------------------------------
# algebras avoiding every small quadratic field


def admits_no_small_field(D: int, H: float) -> bool:
    """True iff no quadratic field with |disc| <= H embeds in the indefinite algebra of disc D."""
    if D < 1:
        raise DomainError(f"D must be >= 1, got {D}")
    ps = [p for p, _ in trial_factor(D)]
    return all(any(kronecker(delta, p) == 1 for p in ps) for delta in fundamental_discriminants(H))


def no_small_field_curve(
    grid: Sequence[float], h: HFunctionSpec, table: PrimeTable, include_split: bool = False, workers: int = 1
) -> DensityCurve:
    """counts: indefinite algebras with disc_f <= x and no field of |disc| <= h(x);
    totals: all indefinite algebras with disc_f <= x."""
    grid = tuple(grid)
    total_sel = Selector(even=True, exclude_one=not include_split)
    counts = [0] * len(grid)
    totals = [0] * len(grid)
    # group grid points sharing the same field set, one pass per group
    groups: dict[tuple[int, ...], list[int]] = {}
    for i, x in enumerate(grid):
        groups.setdefault(tuple(fundamental_discriminants(h(x))), []).append(i)
    for fields, idx in groups.items():
        sub = [grid[i] for i in idx]
        sel = Selector("split_all", fields, even=True, exclude_one=not include_split)
        res = count_on_grid(sub, [sel, total_sel], "n", table, workers)
        for j, i in enumerate(idx):
            counts[i], totals[i] = int(res[0, j]), int(res[1, j])
    return DensityCurve(grid, tuple(counts), tuple(totals))


def density_no_small_field(x: float, h: HFunctionSpec, table: PrimeTable, include_split: bool = False) -> DensityCurve:
    return no_small_field_curve([x], h, table, include_split)


# ---------------------------------------------------------------------------
# short systoles


def short_trace_fields(x0: float) -> tuple[int, ...]:
    """Discriminants of Q(sqrt(t^2 - 4)) over hyperbolic traces t with length(t) <= x0."""
    if x0 < MIN_TRACE_LENGTH:
        return ()
    tmax = math.floor(2 * math.cosh(x0 / 2))
    while tmax >= 3 and geodesic_length_from_trace(tmax) > x0:
        tmax -= 1
    while geodesic_length_from_trace(tmax + 1) <= x0:
        tmax += 1
    return tuple(sorted({trace_field_delta(t) for t in range(3, tmax + 1)}))


def short_systole_curve(
    x0: float, grid: Sequence[float], table: PrimeTable, include_split: bool = False, workers: int = 1
) -> DensityCurve:
    """counts: classes over Q with Phi(D) <= x and class systole <= x0; totals: all such classes."""
    fields = short_trace_fields(x0)
    total_sel = Selector(even=True, exclude_one=not include_split)
    if not fields:
        warnings.warn(f"x0 = {x0} is below the shortest possible length {MIN_TRACE_LENGTH:.6f}; no class is short", stacklevel=2)
        res = count_on_grid(grid, [total_sel], "phi", table, workers)
        return DensityCurve(tuple(grid), (0,) * len(grid), tuple(res[0]))
    sel = Selector("embeds_any", fields, even=True, exclude_one=not include_split)
    res = count_on_grid(grid, [sel, total_sel], "phi", table, workers)
    return DensityCurve(tuple(grid), tuple(res[0]), tuple(res[1]))


def short_systole_density(x0: float, x: float, table: PrimeTable, include_split: bool = False) -> DensityCurve:
    return short_systole_curve(x0, [x], table, include_split)


# ---------------------------------------------------------------------------
# fits


def _design(curve: DensityCurve, min_points: int = 4):
    x = np.array(curve.grid)
    c = np.array(curve.counts, dtype=np.float64)
    if len(x) < min_points:
        raise FitError(f"need at least {min_points} grid points, got {len(x)}")
    if np.any(c <= 0):
        raise FitError("all counts must be positive for a log-space fit")
    return x, c


def fit_power_log(curve: DensityCurve) -> tuple[float, float]:
    """(c, a) minimizing sum (log count - log c - log x - a log log x)^2."""
    x, c = _design(curve)
    if np.any(x <= math.e):
        raise FitError("log log x needs x > e")
    u = np.log(np.log(x))
    if np.ptp(u) == 0:
        raise FitError("degenerate grid")
    y = np.log(c) - np.log(x)
    A = np.column_stack([np.ones_like(u), u])
    (logc, a), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(math.exp(logc)), float(a)


def fit_power_law(curve: DensityCurve) -> tuple[float, float]:
    """(c, a) minimizing sum (log count - log c - a log x)^2; a is the growth exponent."""
    x, c = _design(curve)
    u = np.log(x)
    if np.ptp(u) == 0:
        raise FitError("degenerate grid")
    A = np.column_stack([np.ones_like(u), u])
    (logc, a), *_ = np.linalg.lstsq(A, np.log(c), rcond=None)
    return float(math.exp(logc)), float(a)


# ---------------------------------------------------------------------------
# classes over imaginary quadratic fields containing a geodesic surface


def surface_exactness_cutoff(delta_max: int) -> float:
    """Volumes below this are unaffected by truncating to fields with |disc| <= delta_max.

    Uses L(2, chi) >= zeta(4)/zeta(2) for every quadratic character.
    """
    return (delta_max + 1) ** 1.5 * ZETA4 / (4 * math.pi**2)


def _even_subset_phis(factors: list[int], phi_max: float) -> list[int]:
    out: list[int] = []

    def rec(start: int, prod: int, size: int):
        if size % 2 == 0:
            out.append(prod)
        for i in range(start, len(factors)):
            nxt = prod * factors[i]
            if nxt > phi_max:
                break
            rec(i + 1, nxt, size + 1)

    rec(0, 1, 0)
    return out


@dataclass(frozen=True)
class SurfaceField:
    delta: int
    base_volume: float
    induced_phi: int
    cocompact: bool


def surface_fields(B0: QuaternionAlgebraQ, volume_max: float, delta_max: int) -> list[SurfaceField]:
    """Imaginary quadratic fields with |disc| <= delta_max whose base covolume is <= volume_max."""
    if B0.disc_f == 1 or not B0.indefinite:
        raise DomainError("B0 must be an indefinite division algebra over Q")
    out = []
    floor_const = ZETA4 / (4 * math.pi**2)
    for delta in fundamental_discriminants(delta_max, sign=-1):
        if abs(delta) ** 1.5 * floor_const > volume_max:
            continue
        L = field_from_delta(delta)
        v = base_covolume_3d(L)
        if v > volume_max:
            continue
        B = induced_algebra(B0, L)
        out.append(SurfaceField(delta, v, phi(B.ramified_ideals), B.cocompact))
    return out


def geodesic_surface_density(
    B0: QuaternionAlgebraQ,
    volume_max: float,
    delta_max: int,
    table: PrimeTable,
    points: int = 9,
    decades: float = 2.0,
) -> tuple[DensityCurve, DensityCurve]:
    """(with_surface, all_classes) on a geometric volume grid ending at ``volume_max``.

    with_surface counts fields L with covolume(B0 tensor L) <= V (one class per L, split
    ones included); all_classes counts every class over the same fields. Totals of both
    curves are the all-classes counts.
    """
    cutoff = surface_exactness_cutoff(delta_max)
    if volume_max > cutoff:
        warnings.warn(f"volume_max {volume_max:g} exceeds the exactness cutoff {cutoff:g} for delta_max {delta_max}", stacklevel=2)
    grid = geometric_grid(volume_max / 10**decades, volume_max, points)
    fields = surface_fields(B0, volume_max, delta_max)
    phi_top = volume_max / min(f.base_volume for f in fields) if fields else 0.0
    primes = table.primes_up_to(phi_top + 1)
    surface_vols = sorted(f.base_volume * f.induced_phi for f in fields)
    all_vols: list[float] = []
    for f in fields:
        phi_max = volume_max / f.base_volume
        factors = ideal_phi_factors(f.delta, phi_max, primes).tolist()
        all_vols.extend(f.base_volume * p for p in _even_subset_phis(factors, phi_max))
    all_vols.sort()
    with_surface = [bisect.bisect_right(surface_vols, V) for V in grid]
    everything = [bisect.bisect_right(all_vols, V) for V in grid]
    return DensityCurve(grid, with_surface, everything), DensityCurve(grid, everything, everything)
