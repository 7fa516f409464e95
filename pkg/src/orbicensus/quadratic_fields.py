"""Quadratic fields over Q: discriminants, splitting, units, L(2, chi) and prime ideals."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np
from sympy.ntheory import sqrt_mod

from .core_arith import (
    PrimeTable,
    chi_values,
    is_fundamental_discriminant,
    is_squarefree,
    kronecker,
    kronecker_table,
    squarefree_mask,
)
from .errors import ConfigurationError, DomainError

ZETA2 = math.pi**2 / 6
L2_TOLERANCE = 1e-8
CF_STEP_CAP = 10**6


class Signature(enum.Enum):
    REAL = "real"
    IMAGINARY = "imaginary"


class Splitting(enum.Enum):
    SPLIT = "split"
    INERT = "inert"
    RAMIFIED = "ramified"


@dataclass(frozen=True)
class QuadraticField:
    d: int
    delta: int
    signature: Signature

    @property
    def is_real(self) -> bool:
        return self.signature is Signature.REAL

    @property
    def is_imaginary(self) -> bool:
        return self.signature is Signature.IMAGINARY

    def __str__(self) -> str:
        return f"Q(sqrt({self.d}))"


def make_field(d: int) -> QuadraticField:
    if d in (0, 1) or not is_squarefree(d):
        raise DomainError(f"Q(sqrt({d})) needs squarefree d not in {{0, 1}}")
    delta = d if d % 4 == 1 else 4 * d
    return QuadraticField(d, delta, Signature.REAL if d > 0 else Signature.IMAGINARY)


def field_from_delta(delta: int) -> QuadraticField:
    if not is_fundamental_discriminant(delta):
        raise DomainError(f"{delta} is not a fundamental discriminant")
    return make_field(delta if delta % 4 == 1 else delta // 4)


def splitting_type(K: QuadraticField, p: int) -> Splitting:
    return {1: Splitting.SPLIT, -1: Splitting.INERT, 0: Splitting.RAMIFIED}[kronecker(K.delta, p)]


def fundamental_discriminants(x: float, sign: int = 0) -> list[int]:
    """Fundamental discriminants with |delta| <= x, ordered by |delta| (negative first).

    ``sign`` restricts to positive (+1) or negative (-1) discriminants.
    """
    out = []
    for a in range(3, int(math.floor(x)) + 1):
        for s in (-1, 1):
            if sign and s != sign:
                continue
            if is_fundamental_discriminant(s * a):
                out.append(s * a)
    return out


def count_quadratic_fields(x: float) -> int:
    """Number of fundamental discriminants (both signs) with |delta| <= x."""
    X = int(math.floor(x))
    if X < 3:
        return 0
    sqf = squarefree_mask(X)
    m = np.arange(X + 1)
    total = int(np.count_nonzero(sqf & (m % 4 == 1) & (m > 1)))  # delta = m > 0
    total += int(np.count_nonzero(sqf & (m % 4 == 3)))  # delta = -m
    q = X // 4
    if q >= 1:
        s, mm = sqf[: q + 1], m[: q + 1]
        total += int(np.count_nonzero(s & ((mm % 4 == 2) | (mm % 4 == 3))))  # delta = 4m
        total += int(np.count_nonzero(s & ((mm % 4 == 2) | (mm % 4 == 1))))  # delta = -4m
    return total


# ---------------------------------------------------------------------------
# units of real quadratic fields


@dataclass(frozen=True)
class FundamentalUnit:
    """The unit (a + b sqrt(delta)) / 2 > 1 with exact integer coordinates."""

    delta: int
    a: int
    b: int
    norm: int
    regulator: float

    def __post_init__(self):
        if self.a * self.a - self.delta * self.b * self.b != 4 * self.norm or self.norm not in (1, -1):
            raise DomainError(f"({self.a} + {self.b} sqrt({self.delta}))/2 is not a unit of norm +-1")

    @property
    def trace(self) -> int:
        return self.a

    @property
    def value(self) -> float:
        return math.exp(self.regulator)

    @property
    def minpoly(self) -> tuple[int, int, int]:
        """Coefficients (highest degree first) of x^2 - a x + norm."""
        return (1, -self.a, self.norm)

    def squared(self) -> "FundamentalUnit":
        a = (self.a**2 + self.delta * self.b**2) // 2
        return FundamentalUnit(self.delta, a, self.a * self.b, 1, 2 * self.regulator)


def _unit_log(delta: int, a: int, b: int) -> float:
    with mpmath.workdps(40):
        return float(mpmath.log((mpmath.mpf(a) + mpmath.mpf(b) * mpmath.sqrt(delta)) / 2))


@lru_cache(maxsize=None)
def _fundamental_unit(delta: int) -> FundamentalUnit:
    # Continued fraction of (delta + sqrt(delta))/2; the product of the complete quotients
    # over one period of the purely periodic tail is the fundamental unit.
    r = math.isqrt(delta)
    P, Q = delta, 2
    a0 = (P + r) // Q
    P, Q = a0 * Q - P, (delta - (a0 * Q - P) ** 2) // Q
    start = (P, Q)
    x, y, den = 1, 0, 1  # running product (x + y sqrt(delta)) / den
    for _ in range(CF_STEP_CAP):
        x, y = x * P + y * delta, x + y * P
        den *= Q
        g = math.gcd(math.gcd(x, y), den)
        x, y, den = x // g, y // g, den // g
        a = (P + r) // Q
        P = a * Q - P
        Q = (delta - P * P) // Q
        if (P, Q) == start:
            break
    else:
        raise ConfigurationError(f"continued fraction period for delta={delta} exceeds {CF_STEP_CAP} steps")
    if (2 * x) % den or (2 * y) % den:
        raise ArithmeticError(f"unit for delta={delta} not in the half-integral normalization")
    a, b = 2 * x // den, 2 * y // den
    norm = (a * a - delta * b * b) // 4
    return FundamentalUnit(delta, a, b, norm, _unit_log(delta, a, b))


def fundamental_unit(K: QuadraticField) -> FundamentalUnit:
    if not K.is_real:
        raise DomainError(f"{K} is imaginary; its unit group is finite")
    return _fundamental_unit(K.delta)


def norm_one_unit(K: QuadraticField) -> FundamentalUnit:
    """Generator > 1 of the norm-one units: the fundamental unit or its square."""
    eps = fundamental_unit(K)
    return eps if eps.norm == 1 else eps.squared()


# ---------------------------------------------------------------------------
# L(2, chi) and zeta_K(2)


@lru_cache(maxsize=8192)
def dirichlet_L2(delta: int, tol: float = L2_TOLERANCE) -> float:
    """L(2, chi_delta) by direct summation.

    Summing to N, a multiple of q = |delta|, leaves a tail bounded by q / (2 N^2)
    (partial summation with |sum_{n<=t} chi(n)| <= q/2 and vanishing sums over periods).
    """
    if delta == 1:
        return ZETA2
    tab = kronecker_table(delta).astype(np.float64)
    q = len(tab)
    N = q * max(1, math.ceil(math.sqrt(q / (2 * tol)) / q))
    total = 0.0
    for lo in range(0, N, 2**20):
        n = np.arange(lo + 1, min(lo + 2**20, N) + 1, dtype=np.int64)
        nf = n.astype(np.float64)
        total += float(np.sum(tab[n % q] / (nf * nf)))
    return total


def zeta_k2(K: QuadraticField) -> float:
    return ZETA2 * dirichlet_L2(K.delta)


# ---------------------------------------------------------------------------
# prime ideals of imaginary quadratic fields


@dataclass(frozen=True, order=True)
class PrimeIdealIQ:
    """Prime ideal of an imaginary quadratic order, ordered by (norm, p, conjugate_index).

    For a split prime, ``conjugate_index`` 0 labels the ideal (p, omega - r) with r the
    smaller root mod p of the minimal polynomial of omega = (delta + sqrt(delta))/2.
    """

    norm: int
    p: int
    conjugate_index: int
    splitting: Splitting = field(compare=False)

    def __post_init__(self):
        expected = self.p * self.p if self.splitting is Splitting.INERT else self.p
        if self.norm != expected:
            raise DomainError(f"norm {self.norm} inconsistent with {self.splitting.value} prime {self.p}")
        if self.conjugate_index not in (0, 1) or (self.conjugate_index == 1 and self.splitting is not Splitting.SPLIT):
            raise DomainError(f"bad conjugate index {self.conjugate_index}")

    @property
    def phi_factor(self) -> int:
        return self.norm - 1

    def label(self) -> str:
        return f"P{self.norm}" + ("'" if self.conjugate_index else "")


def omega_roots(delta: int, p: int) -> tuple[int, ...]:
    """Roots mod p of x^2 - delta x + (delta^2 - delta)/4, ascending."""
    c = (delta * delta - delta) // 4
    if p == 2:
        return tuple(r for r in (0, 1) if (r * r - delta * r + c) % 2 == 0)

    inv2 = (p + 1) // 2
    roots = {((delta + s) * inv2) % p for s in sqrt_mod(delta % p, p, all_roots=True)}
    return tuple(sorted(roots))


def prime_ideals_up_to(K: QuadraticField, norm_bound: int, table: PrimeTable) -> list[PrimeIdealIQ]:
    if not K.is_imaginary:
        raise DomainError(f"prime ideal enumeration is only provided for imaginary fields, got {K}")
    if norm_bound < 2:
        return []
    table.require(norm_bound)
    ps = table.primes_up_to(norm_bound)
    chi = chi_values(K.delta, ps)
    out = []
    for p, c in zip(ps.tolist(), chi.tolist()):
        if c == 1:
            out.append(PrimeIdealIQ(p, p, 0, Splitting.SPLIT))
            out.append(PrimeIdealIQ(p, p, 1, Splitting.SPLIT))
        elif c == 0:
            out.append(PrimeIdealIQ(p, p, 0, Splitting.RAMIFIED))
        elif p * p <= norm_bound:
            out.append(PrimeIdealIQ(p * p, p, 0, Splitting.INERT))
    out.sort()
    return out


def ideal_phi_factors(delta: int, phi_bound: float, primes: np.ndarray) -> np.ndarray:
    """Sorted multiset of (norm - 1) over prime ideals with norm - 1 <= phi_bound."""
    ps = primes[primes <= phi_bound + 1]
    chi = chi_values(delta, ps)
    split = ps[chi == 1] - 1
    ram = ps[chi == 0] - 1
    inert = ps[chi == -1]
    inert = inert * inert - 1
    inert = inert[inert <= phi_bound]
    return np.sort(np.concatenate([split, split, ram, inert]))
