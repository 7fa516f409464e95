"""Mahler measures, Weil heights, geodesic lengths and class systoles over Q."""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np
import sympy

from .core_arith import kronecker_table, trial_factor
from .errors import DomainError, NonHyperbolicError
from .quadratic_fields import QuadraticField, fundamental_discriminants, field_from_delta, norm_one_unit

MAX_DEGREE = 16
RESIDUAL_TOL = 1e-10
TRACE_CAP = 10**6
# Beyond this coefficient size roots leave double range; switch to mpmath.
FLOAT_COEFF_LIMIT = 1e150


@dataclass(frozen=True)
class IntegerPolynomial:
    """Integer polynomial, coefficients highest degree first."""

    coefficients: tuple[int, ...]

    def __post_init__(self):
        coeffs = tuple(int(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if not coeffs or coeffs[0] == 0:
            raise DomainError("leading coefficient must be nonzero")
        if len(coeffs) - 1 > MAX_DEGREE:
            raise DomainError(f"degree {len(coeffs) - 1} exceeds {MAX_DEGREE}")

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, z):
        acc = 0
        for c in self.coefficients:
            acc = acc * z + c
        return acc


@dataclass(frozen=True)
class FieldProfile:
    n_k: int
    r1: int
    r2: int

    def __post_init__(self):
        if self.n_k != self.r1 + 2 * self.r2:
            raise DomainError(f"signature ({self.r1}, {self.r2}) incompatible with degree {self.n_k}")


Q_PROFILE = FieldProfile(1, 1, 0)


@dataclass(frozen=True)
class SystoleResult:
    trace: int
    field_delta: int

    @property
    def length(self) -> float:
        return geodesic_length_from_trace(self.trace)


# ---------------------------------------------------------------------------
# roots and Mahler measure


def _polish(coeffs: np.ndarray, roots: np.ndarray) -> np.ndarray:
    """A few Newton steps, each kept only where it lowers the residual."""
    d = np.polyder(coeffs)
    for _ in range(4):
        val = np.polyval(coeffs, roots)
        fp = np.polyval(d, roots)
        ok = fp != 0
        cand = np.where(ok, roots - val / np.where(ok, fp, 1), roots)
        better = np.abs(np.polyval(coeffs, cand)) < np.abs(val)
        roots = np.where(better, cand, roots)
    return roots


def _quadratic_moduli(a, b, c, big: bool) -> list:
    if big:
        with mpmath.workdps(40):
            a, b, c = mpmath.mpf(a), mpmath.mpf(b), mpmath.mpf(c)
            s = mpmath.sqrt(mpmath.mpc(b * b - 4 * a * c))
            q = -(b + s) / 2 if b >= 0 else -(b - s) / 2
            return [abs(q / a), abs(c / q)] if q != 0 else [mpmath.mpf(0), mpmath.mpf(0)]
    s = complex(b * b - 4 * a * c) ** 0.5
    # stable pair: q = -(b + sign(b) s)/2, roots q/a and c/q
    q = -(b + s) / 2 if b >= 0 else -(b - s) / 2
    return [abs(q / a), abs(c / q)] if q != 0 else [0.0, 0.0]


def _root_moduli(p: IntegerPolynomial) -> list:
    """|roots| of p, as floats when safe and mpmath numbers otherwise."""
    coeffs = p.coefficients
    big = max(abs(c) for c in coeffs) > FLOAT_COEFF_LIMIT
    if p.degree == 1:
        return [abs(mpmath.mpf(coeffs[1]) / coeffs[0]) if big else abs(coeffs[1] / coeffs[0])]
    if p.degree == 2:
        return _quadratic_moduli(*coeffs, big=big)
    if big:
        with mpmath.workdps(50):
            return [abs(r) for r in mpmath.polyroots(list(coeffs), maxsteps=500, extraprec=200)]
    arr = np.array(coeffs, dtype=np.float64)
    roots = _polish(arr, np.roots(arr).astype(np.complex128))
    norm = float(np.max(np.abs(arr)))
    resid = np.abs(np.polyval(arr, roots)) / np.maximum(1.0, np.abs(roots)) ** p.degree
    if np.any(resid > RESIDUAL_TOL * norm):
        raise ArithmeticError(f"root residual {resid.max():.3g} too large for {coeffs}")
    return list(np.abs(roots))


def log_mahler_measure(p: IntegerPolynomial) -> float:
    if p.degree < 1:
        raise DomainError("Mahler measure needs degree >= 1")
    total = math.log(abs(p.coefficients[0]))
    for m in _root_moduli(p):
        if m > 1:
            total += float(mpmath.log(m)) if isinstance(m, mpmath.mpf) else math.log(m)
    return max(total, 0.0)


def mahler_measure(p: IntegerPolynomial) -> float:
    """|lead| * prod max(1, |root|); overflows to inf for astronomically large measures."""
    lm = log_mahler_measure(p)
    try:
        return math.exp(lm)
    except OverflowError:
        return math.inf


def _has_rational_root(coeffs: Sequence[int]) -> bool:
    lead, const = coeffs[0], coeffs[-1]
    if const == 0:
        return True
    def divisors(n):
        n = abs(n)
        return [d for d in range(1, math.isqrt(n) + 1) if n % d == 0 for d in {d, n // d}]
    poly = IntegerPolynomial(tuple(coeffs))
    for num in divisors(const):
        for den in divisors(lead):
            for s in (1, -1):
                if poly(Fraction(s * num, den)) == 0:
                    return True
    return False


def is_irreducible(p: IntegerPolynomial) -> bool:
    """Irreducibility over Q: exact tests through degree 3, sympy factorization above."""
    c = p.coefficients
    if math.gcd(*c) != 1 and p.degree >= 1:
        c = tuple(x // math.gcd(*c) for x in c)
    if p.degree == 1:
        return True
    if p.degree == 2:
        disc = c[1] * c[1] - 4 * c[0] * c[2]
        return disc < 0 or math.isqrt(disc) ** 2 != disc
    if p.degree == 3:
        return not _has_rational_root(c)
    x = sympy.Symbol("x")
    return sympy.Poly(list(c), x, domain="QQ").is_irreducible


def weil_height(p: IntegerPolynomial, assert_irreducible: bool = True) -> float:
    """Absolute logarithmic Weil height of a root of the minimal polynomial ``p``."""
    if assert_irreducible and not is_irreducible(p):
        raise DomainError(f"{p.coefficients} is reducible; not a minimal polynomial")
    return log_mahler_measure(p) / p.degree


# ---------------------------------------------------------------------------
# lengths and systoles


def geodesic_length_from_trace(t: int) -> float:
    if abs(t) <= 2:
        raise NonHyperbolicError(f"trace {t} is not hyperbolic")
    return 2.0 * math.acosh(abs(t) / 2.0)


@lru_cache(maxsize=None)
def trace_field_delta(t: int) -> int:
    """Fundamental discriminant of Q(sqrt(t^2 - 4))."""
    core = 1
    for p, e in trial_factor(t * t - 4):
        if e % 2:
            core *= p
    return core if core % 4 == 1 else 4 * core


def _split_divides(delta: int, primes: Sequence[int]) -> bool:
    tab = kronecker_table(delta)
    q = len(tab)
    return any(tab[p % q] == 1 for p in primes)


def _ramified_primes(B) -> tuple[int, ...]:
    if B.infinite_ramified:
        raise DomainError("class systoles are defined for indefinite algebras only")
    return tuple(p for p, _ in trial_factor(B.disc_f))


def unit_systole_upper_bound(B, K: QuadraticField) -> float | None:
    """Length 2 log(u) of the norm-one unit u of K when K embeds in B, else None."""
    if not K.is_real:
        raise DomainError(f"{K} is imaginary; no hyperbolic unit")
    if _split_divides(K.delta, _ramified_primes(B)):
        return None
    return 2.0 * norm_one_unit(K).regulator


def _trace_search_bound(primes: tuple[int, ...]) -> int:
    """Trace of the norm-one unit of the first embeddable real field (ascending delta)."""
    limit = 64
    while True:
        for delta in fundamental_discriminants(limit, sign=1):
            if not _split_divides(delta, primes):
                return norm_one_unit(field_from_delta(delta)).trace
        limit *= 4


def class_systole_Q(B) -> SystoleResult:
    """Smallest hyperbolic trace t with Q(sqrt(t^2 - 4)) embedding in B."""
    primes = _ramified_primes(B)
    bound = None
    t = 3
    while True:
        delta = trace_field_delta(t)
        if not _split_divides(delta, primes):
            return SystoleResult(t, delta)
        if bound is None:
            bound = _trace_search_bound(primes)
        t += 1
        if t > min(bound, TRACE_CAP):
            raise ArithmeticError(f"no embeddable trace found up to {min(bound, TRACE_CAP)} for disc {B.disc_f}")


def short_geodesic_field_bound(x0: float, profile: FieldProfile = Q_PROFILE) -> float:
    if x0 <= 0:
        raise DomainError(f"x0 must be positive, got {x0}")
    return math.exp(2 * (profile.n_k + x0))


def silverman_lower_bound(delta_rel_norm: int, profile: FieldProfile = Q_PROFILE) -> float:
    if delta_rel_norm < 1:
        raise DomainError("relative discriminant norm must be >= 1")
    n = profile.n_k
    return -(profile.r1 + profile.r2) * math.log(2) / (2 * n) + math.log(delta_rel_norm) / (4 * n)


def brindza_unit_height_bound(L_degree: int, regulator: float) -> float:
    if L_degree < 2:
        raise DomainError("field degree must be at least 2")
    n = L_degree
    return 6**n * n ** (5 * n) * regulator


def min_group_systole_relation(class_systole: float) -> float:
    """Lower bound for the systole of every group in the class (squares land in Gamma^min)."""
    if class_systole <= 0:
        raise DomainError("systole must be positive")
    return class_systole / 2


def quadratic_minpoly(a: int, b: int, delta: int) -> IntegerPolynomial:
    """Minimal polynomial of (a + b sqrt(delta))/2, b != 0, a = b*delta mod 2."""
    if b == 0 or (a - b * delta) % 2:
        raise DomainError(f"({a} + {b} sqrt({delta}))/2 is not a primitive quadratic integer")
    return IntegerPolynomial((1, -a, (a * a - b * b * delta) // 4))
