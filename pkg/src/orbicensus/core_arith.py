"""Prime sieving, factorization, Kronecker characters and mean-value inequalities over Z.

Everything here is pure given a :class:`PrimeTable`; tables are immutable and can be
shared between worker processes.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, IncompleteTableError

MAX_LIMIT = 2**40
# Above this the least-prime-factor array is not materialized.
LPF_LIMIT = 2**26
SEGMENT_SIZE = 2**21

CACHE_MAGIC = b"OCPT"
CACHE_VERSION = 1


# ---------------------------------------------------------------------------
# prime tables


@dataclass(frozen=True, eq=False)
class PrimeTable:
    """Primes up to ``limit`` plus (for moderate limits) a least-prime-factor array."""

    limit: int
    primes: np.ndarray
    lpf: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.primes.setflags(write=False)
        if self.lpf is not None:
            self.lpf.setflags(write=False)

    def __len__(self) -> int:
        return len(self.primes)

    def least_prime_factor(self, n: int) -> int:
        if n < 2:
            raise DomainError(f"least prime factor undefined for {n}")
        if n > self.limit:
            raise IncompleteTableError(f"{n} exceeds table limit {self.limit}")
        if self.lpf is not None:
            return int(self.lpf[n])
        for p in self.primes:
            p = int(p)
            if p * p > n:
                return n
            if n % p == 0:
                return p
        return n

    def is_prime(self, n: int) -> bool:
        if n > self.limit:
            raise IncompleteTableError(f"{n} exceeds table limit {self.limit}")
        if n < 2:
            return False
        i = int(np.searchsorted(self.primes, n))
        return i < len(self.primes) and int(self.primes[i]) == n

    def primes_up_to(self, y: float) -> np.ndarray:
        if y > self.limit:
            raise IncompleteTableError(f"primes up to {y} requested from table of limit {self.limit}")
        return self.primes[: int(np.searchsorted(self.primes, math.floor(y), side="right"))]

    def require(self, y: float) -> None:
        if y > self.limit:
            raise IncompleteTableError(f"computation needs primes up to {y:g}, table limit is {self.limit}")

    # -- on-disk cache: "OCPT", version byte, <u64 limit, bit-packed primality bitmap of 0..limit
    def save(self, path: str | Path) -> None:
        bitmap = np.zeros(self.limit + 1, dtype=bool)
        bitmap[self.primes] = True
        payload = np.packbits(bitmap, bitorder="little").tobytes()
        with open(path, "wb") as fh:
            fh.write(CACHE_MAGIC + bytes([CACHE_VERSION]) + struct.pack("<Q", self.limit) + payload)

    @classmethod
    def load(cls, path: str | Path) -> "PrimeTable":
        data = Path(path).read_bytes()
        if data[:4] != CACHE_MAGIC:
            raise ConfigurationError(f"{path}: not a prime-table cache (bad magic)")
        if data[4] != CACHE_VERSION:
            raise ConfigurationError(f"{path}: unsupported cache version {data[4]}")
        (limit,) = struct.unpack("<Q", data[5:13])
        bits = np.unpackbits(np.frombuffer(data[13:], dtype=np.uint8), bitorder="little")[: limit + 1]
        primes = np.flatnonzero(bits).astype(np.int64)
        return cls(limit, primes, _lpf_array(limit, primes) if limit <= LPF_LIMIT else None)


def _lpf_array(limit: int, primes: np.ndarray | None = None) -> np.ndarray:
    lpf = np.zeros(limit + 1, dtype=np.int32)
    for p in range(2, math.isqrt(limit) + 1):
        if lpf[p] == 0:
            s = lpf[p * p :: p]
            s[s == 0] = p
    idx = np.flatnonzero(lpf[2:] == 0) + 2
    lpf[idx] = idx
    return lpf


def _bitmap_primes(limit: int) -> np.ndarray:
    """Plain Eratosthenes; used for small limits and as the base of segmented sieving."""
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_p[p]:
            is_p[p * p :: p] = False
    return np.flatnonzero(is_p).astype(np.int64)


def _segmented_primes(limit: int, size: int = SEGMENT_SIZE) -> np.ndarray:
    base = _bitmap_primes(math.isqrt(limit))
    chunks = [base]
    lo = base[-1] + 1 if len(base) else 2
    while lo <= limit:
        hi = min(lo + size, limit + 1)
        seg = np.ones(hi - lo, dtype=bool)
        for p in base:
            p = int(p)
            if p * p >= hi:
                break
            start = max(p * p, ((lo + p - 1) // p) * p)
            seg[start - lo :: p] = False
        chunks.append(np.flatnonzero(seg).astype(np.int64) + lo)
        lo = hi
    return np.concatenate(chunks)


def sieve_primes(limit: int) -> PrimeTable:
    """Build a :class:`PrimeTable` with every prime ``<= limit``."""
    if not isinstance(limit, (int, np.integer)) or limit < 2 or limit > MAX_LIMIT:
        raise ConfigurationError(f"sieve limit must be an integer in [2, 2^40], got {limit!r}")
    limit = int(limit)
    if limit <= LPF_LIMIT:
        lpf = _lpf_array(limit)
        primes = np.flatnonzero(lpf[2:] == np.arange(2, limit + 1)).astype(np.int64) + 2
        return PrimeTable(limit, primes, lpf)
    return PrimeTable(limit, _segmented_primes(limit))


@lru_cache(maxsize=4)
def _cached_primes(limit: int) -> np.ndarray:
    arr = _bitmap_primes(limit)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# factorization


@dataclass(frozen=True)
class FactoredInteger:
    value: int
    factors: tuple[tuple[int, int], ...]

    def __post_init__(self):
        prod = 1
        last = 1
        for p, e in self.factors:
            if p <= last or e < 1:
                raise DomainError(f"malformed factorization {self.factors}")
            last = p
            prod *= p**e
        if prod != self.value:
            raise DomainError(f"factors {self.factors} do not multiply to {self.value}")

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    @property
    def num_factors(self) -> int:
        return len(self.factors)

    @property
    def is_squarefree(self) -> bool:
        return all(e == 1 for _, e in self.factors)


def factorize(n: int, table: PrimeTable) -> FactoredInteger:
    if n < 1:
        raise DomainError(f"cannot factor {n}")
    n = int(n)
    if n <= table.limit and table.lpf is not None:
        out: list[tuple[int, int]] = []
        m = n
        lpf = table.lpf
        while m > 1:
            p = int(lpf[m])
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
        return FactoredInteger(n, tuple(out))
    return _trial_factor(n, table)


def _trial_factor(n: int, table: PrimeTable) -> FactoredInteger:
    out = []
    m = n
    for p in table.primes:
        p = int(p)
        if p * p > m:
            break
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
    if m > 1:
        if m > table.limit and int(table.primes[-1]) ** 2 < m:
            raise IncompleteTableError(f"cofactor {m} of {n} is not certified prime by table of limit {table.limit}")
        out.append((m, 1))
    return FactoredInteger(n, tuple(out))


def trial_factor(n: int) -> list[tuple[int, int]]:
    """Table-free trial division, for small arguments and independent oracles."""
    out = []
    m = abs(n)
    p = 2
    while p * p <= m:
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if m > 1:
        out.append((m, 1))
    return out


def is_squarefree(n: int) -> bool:
    if n == 0:
        return False
    return all(e == 1 for _, e in trial_factor(n))


# ---------------------------------------------------------------------------
# Kronecker characters


@lru_cache(maxsize=65536)
def is_fundamental_discriminant(delta: int) -> bool:
    if delta in (0, 1):
        return False
    r = delta % 4
    if r == 1:
        return is_squarefree(delta)
    if r == 0:
        m = delta // 4
        return m % 4 in (2, 3) and is_squarefree(m)
    return False


def _kron2(a: int) -> int:
    """(a/2) in the Kronecker sense."""
    if a % 2 == 0:
        return 0
    return 1 if a % 8 in (1, 7) else -1


def _kronecker_unchecked(a: int, n: int) -> int:
    if n == 1:
        return 1
    result = 1
    while n % 2 == 0:
        n //= 2
        result *= _kron2(a)
        if result == 0:
            return 0
    # Jacobi symbol (a/n), n odd positive
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def kronecker(delta: int, n: int) -> int:
    """Kronecker symbol (delta/n) for a fundamental discriminant (or 1) and n >= 1."""
    if n < 1:
        raise DomainError(f"kronecker needs n >= 1, got {n}")
    if delta == 1:
        return 1
    if not is_fundamental_discriminant(delta):
        raise DomainError(f"{delta} is not a fundamental discriminant")
    return _kronecker_unchecked(delta, n)


def _jacobi_vec(a: int, n: np.ndarray) -> np.ndarray:
    """Jacobi symbol (a/n) for a fixed integer and an array of odd positive n."""
    n = n.astype(np.int64).copy()
    a_arr = np.mod(a, n)
    res = np.ones(len(n), dtype=np.int8)
    live = np.flatnonzero(a_arr != 0)
    while len(live):
        while True:
            ev = live[a_arr[live] % 2 == 0]
            if not len(ev):
                break
            a_arr[ev] //= 2
            r = n[ev] % 8
            flip = ev[(r == 3) | (r == 5)]
            res[flip] = -res[flip]
        a_l, n_l = n[live], a_arr[live]
        flip = live[(a_l % 4 == 3) & (n_l % 4 == 3)]
        res[flip] = -res[flip]
        n[live] = n_l
        a_arr[live] = a_l % n_l
        live = live[a_arr[live] != 0]
    return np.where(n == 1, res, 0).astype(np.int8)


@lru_cache(maxsize=4096)
def kronecker_table(delta: int) -> np.ndarray:
    """Values of n -> (delta/n) over one period 0..|delta|-1 (length 1 for delta = 1)."""
    if delta == 1:
        out = np.ones(1, dtype=np.int8)
    else:
        if not is_fundamental_discriminant(delta):
            raise DomainError(f"{delta} is not a fundamental discriminant")
        q = abs(delta)
        n = np.arange(1, q, dtype=np.int64)
        v2 = np.zeros(len(n), dtype=np.int64)
        odd = n.copy()
        while True:
            ev = odd % 2 == 0
            if not ev.any():
                break
            odd[ev] //= 2
            v2[ev] += 1
        two = _kron2(delta)
        if two == 0:
            pow2 = (v2 == 0).astype(np.int8)
        elif two == 1:
            pow2 = np.ones(len(n), dtype=np.int8)
        else:
            pow2 = np.where(v2 % 2 == 0, 1, -1).astype(np.int8)
        out = np.zeros(q, dtype=np.int8)
        out[1:] = pow2 * _jacobi_vec(delta, odd)
    out.setflags(write=False)
    return out


def chi_values(delta: int, n: np.ndarray) -> np.ndarray:
    """Vectorized kronecker(delta, n) for positive integer arrays."""
    tab = kronecker_table(delta)
    return tab[np.asarray(n) % len(tab)]


# ---------------------------------------------------------------------------
# squarefree iteration


def squarefree_mask(limit: int) -> np.ndarray:
    """Boolean array m with m[n] = mu(n)^2 for 0 <= n <= limit (m[0] = False)."""
    mask = np.ones(limit + 1, dtype=bool)
    mask[0] = False
    for p in range(2, math.isqrt(limit) + 1):
        mask[p * p :: p * p] = False
    return mask


def iterate_squarefree(limit: int, table: PrimeTable, visitor: Callable[[FactoredInteger], None] | None = None) -> Iterator[FactoredInteger]:
    """Yield every squarefree n <= limit in ascending order, factored.

    ``visitor`` (optional) is called on each value before it is yielded.
    """
    table.require(limit)
    if limit < 1:
        return
    mask = squarefree_mask(limit)
    for n in np.flatnonzero(mask):
        fi = factorize(int(n), table)
        if visitor is not None:
            visitor(fi)
        yield fi


# ---------------------------------------------------------------------------
# segmented multiplicative profiles (the workhorse of the density experiments)


@dataclass
class SegmentProfile:
    """Arithmetic data for lo <= n < hi.

    ``phi`` and ``omega`` are meaningful only where ``squarefree`` holds; ``split[k]``
    flags n having a prime factor p with chi_k(p) = +1.
    """

    lo: int
    hi: int
    squarefree: np.ndarray
    phi: np.ndarray
    omega: np.ndarray
    split: tuple[np.ndarray, ...]

    @property
    def n(self) -> np.ndarray:
        return np.arange(self.lo, self.hi, dtype=np.int64)


def profile_segment(lo: int, hi: int, primes: np.ndarray, deltas: Sequence[int] = ()) -> SegmentProfile:
    if lo < 1 or hi <= lo:
        raise DomainError(f"bad segment [{lo}, {hi})")
    root = math.isqrt(hi - 1)
    if len(primes) == 0 or (int(primes[-1]) < root and root >= 2):
        raise IncompleteTableError(f"segment [{lo}, {hi}) needs primes up to {root}")
    m = hi - lo
    small = np.ones(m, dtype=np.int64)
    phi = np.ones(m, dtype=np.int64)
    omega = np.zeros(m, dtype=np.int8)
    sqf = np.ones(m, dtype=bool)
    tabs = [kronecker_table(d) for d in deltas]
    split = [np.zeros(m, dtype=bool) for _ in deltas]
    for p in primes[: int(np.searchsorted(primes, root, side="right"))]:
        p = int(p)
        s = (-lo) % p
        small[s::p] *= p
        phi[s::p] *= p - 1
        omega[s::p] += 1
        pp = p * p
        sqf[(-lo) % pp :: pp] = False
        for k, tab in enumerate(tabs):
            if tab[p % len(tab)] == 1:
                split[k][s::p] = True
    large = np.arange(lo, hi, dtype=np.int64) // small
    big = large > 1
    phi[big] *= large[big] - 1
    omega[big] += 1
    for k, tab in enumerate(tabs):
        split[k] |= big & (tab[large % len(tab)] == 1)
    return SegmentProfile(lo, hi, sqf, phi, omega, tuple(split))


def segment_ranges(lo: int, hi: int, size: int = SEGMENT_SIZE) -> list[tuple[int, int]]:
    return [(a, min(a + size, hi)) for a in range(lo, hi, size)]


def map_segments(func: Callable, ranges: Sequence[tuple[int, int]], workers: int = 1) -> list:
    """Apply ``func(lo, hi)`` to each range; results come back in range order."""
    if workers <= 1 or len(ranges) <= 1:
        return [func(a, b) for a, b in ranges]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(func, [a for a, _ in ranges], [b for _, b in ranges]))


# ---------------------------------------------------------------------------
# mean value theorem and sieve inequalities


@dataclass(frozen=True)
class MultiplicativeFunctionSpec:
    """Nonnegative multiplicative f given by its values f(p^nu) <= bound.

    ``vectorized(ps, nu)``, when given, must agree with ``evaluator`` elementwise; it
    only speeds up bulk evaluation.
    """

    evaluator: Callable[[int, int], float]
    bound: float | None
    vectorized: Callable[[np.ndarray, int], np.ndarray] | None = field(default=None, compare=False)

    def at(self, p: int, nu: int) -> float:
        v = float(self.evaluator(p, nu))
        if not (0.0 <= v <= self.bound):
            raise DomainError(f"f({p}^{nu}) = {v} outside [0, {self.bound}]")
        return v

    def at_many(self, ps: np.ndarray, nu: int) -> np.ndarray:
        if self.vectorized is not None:
            v = np.asarray(self.vectorized(np.asarray(ps, dtype=np.int64), nu), dtype=np.float64)
        else:
            v = np.array([float(self.evaluator(int(p), nu)) for p in ps], dtype=np.float64)
        bad = (v < 0) | ~(v <= self.bound)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise DomainError(f"f({int(ps[i])}^{nu}) = {v[i]} outside [0, {self.bound}]")
        return v


_MASK64 = 0xFFFFFFFFFFFFFFFF


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def _splitmix64_vec(x: np.ndarray) -> np.ndarray:
    # uint64 arithmetic wraps modulo 2^64, matching the masked integer version
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def random_multiplicative(seed: int, bound: float = 1.0) -> MultiplicativeFunctionSpec:
    """Deterministic pseudo-random f with f(p^nu) uniform in [0, bound]."""
    if not 0 <= seed < 2**40:
        raise ConfigurationError(f"seed must be in [0, 2^40), got {seed}")

    def ev(p: int, nu: int) -> float:
        h = _splitmix64(_splitmix64(seed * 1_000_003 + p) ^ nu)
        return bound * (h >> 11) / 2.0**53

    def vec(ps: np.ndarray, nu: int) -> np.ndarray:
        x = np.uint64(seed * 1_000_003) + ps.astype(np.uint64)
        h = _splitmix64_vec(_splitmix64_vec(x) ^ np.uint64(nu))
        return bound * (h >> np.uint64(11)).astype(np.float64) / 2.0**53

    return MultiplicativeFunctionSpec(ev, bound, vec)


def constant_multiplicative(c: float) -> MultiplicativeFunctionSpec:
    return MultiplicativeFunctionSpec(lambda p, nu: c, c, lambda ps, nu: np.full(len(ps), float(c)))


def squarefree_indicator() -> MultiplicativeFunctionSpec:
    return MultiplicativeFunctionSpec(
        lambda p, nu: 1.0 if nu == 1 else 0.0, 1.0, lambda ps, nu: np.full(len(ps), 1.0 if nu == 1 else 0.0)
    )


def multiplicative_values(f: MultiplicativeFunctionSpec, x: int, table: PrimeTable) -> np.ndarray:
    """Array v with v[n] = f(n) for 0 <= n <= x (v[0] = 0)."""
    table.require(x)
    vals = np.ones(x + 1, dtype=np.float64)
    vals[0] = 0.0
    for p in table.primes_up_to(x):
        p = int(p)
        fac = np.full(x // p, f.at(p, 1))
        q, nu = p, 1
        while q * p <= x:
            q *= p
            nu += 1
            fac[q // p - 1 :: q // p] = f.at(p, nu)
        vals[p::p] *= fac
    return vals


B_NU_MAX = 40
# Terms with p <= B_TAIL_SIEVE are summed exactly; beyond it a Chebyshev bound is used.
B_TAIL_SIEVE = 5 * 10**6
# Rosser-Schoenfeld: theta(t) < 1.01624 t for all t > 0.
THETA_CONST = 1.01624
B_NEGLIGIBLE = 1e-18


def _prime_power_weight(r: np.ndarray | float, start: int):
    """sum_{nu >= start} nu r^nu in closed form."""
    return r**start * (start - (start - 1) * r) / (1 - r) ** 2


@dataclass(frozen=True)
class MeanValueReport:
    x: float
    lhs: float
    rhs: float
    A: float
    B: float
    B_tail: float
    holds: bool


def prime_sum_constant(f: MultiplicativeFunctionSpec, x: float, table: PrimeTable) -> float:
    """sup over 0 < y <= x of sum_{p<=y} f(p) log p / y.

    The ratio only drops between consecutive primes, so the supremum is a maximum over
    y = p.
    """
    ps = table.primes_up_to(x)
    if not len(ps):
        return 0.0
    fp = f.at_many(ps, 1)
    return float(np.max(np.cumsum(fp * np.log(ps)) / ps))


def prime_power_constant(f: MultiplicativeFunctionSpec) -> tuple[float, float]:
    """(B, tail): an upper bound for sum_p sum_{nu>=2} f(p^nu) nu log p / p^nu.

    Terms are exact for p <= 5 * 10^6 until they fall below 1e-18 (at most nu = 40);
    ``tail`` bounds everything else, using f <= M and theta(t) < 1.01624 t.
    """
    M = f.bound
    ps = _cached_primes(B_TAIL_SIEVE)
    pf = ps.astype(np.float64)
    lp = np.log(pf)
    r = 1.0 / pf
    exact = 0.0
    tail = 0.0
    active = np.arange(len(ps))
    for nu in range(2, B_NU_MAX + 1):
        vals = f.at_many(ps[active], nu)
        exact += math.fsum(vals * nu * lp[active] * r[active] ** nu)
        rest = M * lp[active] * _prime_power_weight(r[active], nu + 1)
        done = (rest < B_NEGLIGIBLE) | (nu == B_NU_MAX)
        tail += math.fsum(rest[done])
        active = active[~done]
        if not len(active):
            break
    # p > P: sum_{nu>=2} nu p^-nu <= 2 p^-2 / (1 - 1/P)^2 and partial summation against theta
    P = float(B_TAIL_SIEVE)
    tail += M * (2.0 / (1 - 1 / P) ** 2) * 2 * THETA_CONST / P
    return exact + tail, tail


def mean_value_constants(f: MultiplicativeFunctionSpec, x: float, table: PrimeTable) -> tuple[float, float, float]:
    """(A, B, B_tail) for the prime-sum and prime-power hypotheses of the mean value theorem."""
    B, tail = prime_power_constant(f)
    return prime_sum_constant(f, x, table), B, tail


def mean_value_bound_check(f: MultiplicativeFunctionSpec, x: float, table: PrimeTable) -> MeanValueReport:
    """Check sum_{n<=x} f(n) <= (A+B+1) x/log x sum_{n<=x} f(n)/n with computed A, B."""
    if f.bound is None or not math.isfinite(f.bound) or f.bound < 0:
        raise DomainError("mean value check needs a finite bound on f at prime powers")
    if x < 2:
        raise DomainError(f"x must be >= 2, got {x}")
    xi = int(math.floor(x))
    vals = multiplicative_values(f, xi, table)
    lhs = math.fsum(vals)
    harmonic = math.fsum(vals[1:] / np.arange(1, xi + 1))
    A, B, tail = mean_value_constants(f, x, table)
    rhs = (A + B + 1) * x / math.log(x) * harmonic
    return MeanValueReport(x, lhs, rhs, A, B, tail, lhs <= rhs)


@dataclass(frozen=True)
class SieveCount:
    count: int
    bound: float

    @property
    def ratio(self) -> float:
        return self.count / self.bound


def sieve_count_bound(in_sieve: Callable[[int], bool], x: float, table: PrimeTable) -> SieveCount:
    """Exact count of squarefree n <= x free of sieved primes, against x prod(1 - 1/p)."""
    xi = int(math.floor(x))
    table.require(xi)
    if xi < 1:
        return SieveCount(0, max(x, 0.0))
    ok = squarefree_mask(xi)
    log_prod = 0.0
    for p in table.primes_up_to(xi):
        p = int(p)
        if in_sieve(p):
            ok[p::p] = False
            log_prod += math.log1p(-1.0 / p)
    return SieveCount(int(ok.sum()), x * math.exp(log_prod))


def split_prime_predicate(delta: int) -> Callable[[int], bool]:
    tab = kronecker_table(delta)
    return lambda p: bool(tab[p % len(tab)] == 1)


@dataclass(frozen=True)
class MertensReport:
    sum: float
    half_loglog: float

    @property
    def difference(self) -> float:
        return self.sum - self.half_loglog


def mertens_split_sum(delta: int, y: float, table: PrimeTable) -> MertensReport:
    """Sum of 1/p over primes p <= y split in Q(sqrt(delta)), against (1/2) log log y."""
    if y < 3:
        raise DomainError(f"y must be >= 3 for log log y, got {y}")
    ps = table.primes_up_to(y)
    split = ps[chi_values(delta, ps) == 1]
    return MertensReport(math.fsum(1.0 / split.astype(np.float64)), 0.5 * math.log(math.log(y)))
