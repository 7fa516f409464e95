"""Quaternion algebras over Q and imaginary quadratic fields; covolumes and class enumeration."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, Union

from .core_arith import FactoredInteger, PrimeTable, is_squarefree, iterate_squarefree, kronecker, sieve_primes, trial_factor
from .errors import DomainError
from .geodesics_heights import class_systole_Q, geodesic_length_from_trace
from .quadratic_fields import (
    ZETA2,
    PrimeIdealIQ,
    QuadraticField,
    Splitting,
    field_from_delta,
    fundamental_discriminants,
    omega_roots,
    prime_ideals_up_to,
    zeta_k2,
)

SMALL_DELTA_MAX = 24


@dataclass(frozen=True)
class QuaternionAlgebraQ:
    """Quaternion algebra over Q, fixed by its finite discriminant and the real place.

    Use :meth:`from_disc` to get the unique algebra with a given finite discriminant.
    """

    disc_f: int
    infinite_ramified: bool

    def __post_init__(self):
        if self.disc_f < 1 or not is_squarefree(self.disc_f):
            raise DomainError(f"finite discriminant must be squarefree and positive, got {self.disc_f}")
        if (len(trial_factor(self.disc_f)) + self.infinite_ramified) % 2:
            raise DomainError(f"odd number of ramified places for disc {self.disc_f}")

    @classmethod
    def from_disc(cls, disc_f: int) -> "QuaternionAlgebraQ":
        if disc_f < 1 or not is_squarefree(disc_f):
            raise DomainError(f"finite discriminant must be squarefree and positive, got {disc_f}")
        return cls(disc_f, len(trial_factor(disc_f)) % 2 == 1)

    @property
    def indefinite(self) -> bool:
        return not self.infinite_ramified

    @cached_property
    def ramified_primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in trial_factor(self.disc_f))


@dataclass(frozen=True)
class QuaternionAlgebraIQ:
    base: QuadraticField
    ramified_ideals: frozenset[PrimeIdealIQ]

    def __post_init__(self):
        if not self.base.is_imaginary:
            raise DomainError(f"base field {self.base} must be imaginary quadratic")
        object.__setattr__(self, "ramified_ideals", frozenset(self.ramified_ideals))
        if len(self.ramified_ideals) % 2:
            raise DomainError("an algebra over an imaginary quadratic field ramifies at an even number of primes")

    @property
    def cocompact(self) -> bool:
        return bool(self.ramified_ideals)

    def sorted_ideals(self) -> list[PrimeIdealIQ]:
        return sorted(self.ramified_ideals)


Algebra = Union[QuaternionAlgebraQ, QuaternionAlgebraIQ]


@dataclass(frozen=True)
class CensusRecord:
    algebra: Algebra
    phi: int
    covolume: float
    cocompact: bool
    systole_trace: int | None = None
    small_embeddable_deltas: tuple[int, ...] = ()

    @property
    def systole_length(self) -> float | None:
        return None if self.systole_trace is None else geodesic_length_from_trace(self.systole_trace)

    @property
    def num_factors(self) -> int:
        if isinstance(self.algebra, QuaternionAlgebraQ):
            return len(self.algebra.ramified_primes)
        return len(self.algebra.ramified_ideals)

    @property
    def disc_label(self) -> str:
        if isinstance(self.algebra, QuaternionAlgebraQ):
            return str(self.algebra.disc_f)
        # a trailing ' marks the second ideal above a split prime
        return ";".join(i.label()[1:] for i in self.algebra.sorted_ideals())


# ---------------------------------------------------------------------------


def admits_embedding_Q(B: QuaternionAlgebraQ, K: QuadraticField) -> bool:
    """Local criterion: no ramified place of B splits in K."""
    if B.infinite_ramified and K.is_real:
        return False
    return all(kronecker(K.delta, p) != 1 for p in B.ramified_primes)


def phi(disc: Union[int, FactoredInteger, Iterable[PrimeIdealIQ]]) -> int:
    """prod (|p| - 1) over the prime divisors of a squarefree integer or ideal set."""
    if isinstance(disc, FactoredInteger):
        if not disc.is_squarefree:
            raise DomainError(f"{disc.value} is not squarefree")
        return math.prod(p - 1 for p in disc.primes)
    if isinstance(disc, (int,)) and not isinstance(disc, bool):
        if disc < 1:
            raise DomainError(f"phi needs a positive argument, got {disc}")
        fs = trial_factor(disc)
        if any(e > 1 for _, e in fs):
            raise DomainError(f"{disc} is not squarefree")
        return math.prod(p - 1 for p, _ in fs)
    ideals = list(disc)
    if len(set(ideals)) != len(ideals):
        raise DomainError("repeated prime ideal: argument is not squarefree")
    return math.prod(i.norm - 1 for i in ideals)


def fuchsian_covolume(delta_k_abs: float, zeta_k2_value: float, n_k: int, phi_value: int) -> float:
    return 8 * math.pi * delta_k_abs**1.5 * zeta_k2_value * phi_value / (4 * math.pi**2) ** n_k


def kleinian_covolume(delta_abs: float, zeta_value: float, n_k: int, phi_value: int) -> float:
    return delta_abs**1.5 * zeta_value * phi_value / (4 * math.pi**2) ** (n_k - 1)


def covolume_2d(B: QuaternionAlgebraQ) -> float:
    if not B.indefinite:
        raise DomainError(f"disc {B.disc_f} is definite; no Fuchsian group")
    return fuchsian_covolume(1, ZETA2, 1, phi(B.disc_f))


def base_covolume_3d(K: QuadraticField) -> float:
    return kleinian_covolume(abs(K.delta), zeta_k2(K), 2, 1)


def covolume_3d(B: QuaternionAlgebraIQ) -> float:
    return kleinian_covolume(abs(B.base.delta), zeta_k2(B.base), 2, phi(B.ramified_ideals))


def _ideals_above(L: QuadraticField, p: int) -> list[PrimeIdealIQ]:
    c = kronecker(L.delta, p)
    if c == 1:
        return [PrimeIdealIQ(p, p, 0, Splitting.SPLIT), PrimeIdealIQ(p, p, 1, Splitting.SPLIT)]
    if c == 0:
        return [PrimeIdealIQ(p, p, 0, Splitting.RAMIFIED)]
    return [PrimeIdealIQ(p * p, p, 0, Splitting.INERT)]


def induced_algebra(B0: QuaternionAlgebraQ, L: QuadraticField) -> QuaternionAlgebraIQ:
    """B0 tensor L: ramified exactly at the primes of L over split p | disc(B0)."""
    if not B0.indefinite or B0.disc_f == 1:
        raise DomainError("B0 must be an indefinite division algebra (disc > 1)")
    if not L.is_imaginary:
        raise DomainError(f"{L} must be imaginary quadratic")
    ram = [i for p in B0.ramified_primes if kronecker(L.delta, p) == 1 for i in _ideals_above(L, p)]
    return QuaternionAlgebraIQ(L, frozenset(ram))


# ---------------------------------------------------------------------------
# enumeration


@dataclass(frozen=True)
class CensusOptions:
    include_split: bool = False
    with_systole: bool = False
    small_delta_max: int = SMALL_DELTA_MAX


@lru_cache(maxsize=8)
def _small_fields(delta_max: int) -> tuple[QuadraticField, ...]:
    return tuple(field_from_delta(d) for d in fundamental_discriminants(delta_max))


def small_embeddable_deltas(B: QuaternionAlgebraQ, delta_max: int = SMALL_DELTA_MAX) -> tuple[int, ...]:
    return tuple(K.delta for K in _small_fields(delta_max) if admits_embedding_Q(B, K))


def record_2d(D: int, options: CensusOptions = CensusOptions()) -> CensusRecord:
    B = QuaternionAlgebraQ.from_disc(D)
    return CensusRecord(
        algebra=B,
        phi=phi(D),
        covolume=covolume_2d(B),
        cocompact=D > 1,
        systole_trace=class_systole_Q(B).trace if options.with_systole else None,
        small_embeddable_deltas=small_embeddable_deltas(B, options.small_delta_max),
    )


def enumerate_classes_2d(disc_max: int, options: CensusOptions = CensusOptions(), table: PrimeTable | None = None) -> Iterator[CensusRecord]:
    """Indefinite algebras over Q with disc_f <= disc_max, ascending by disc."""
    if disc_max < 1:
        return
    table = table or sieve_primes(max(disc_max, 2))
    for fi in iterate_squarefree(disc_max, table):
        if fi.num_factors % 2:
            continue
        if fi.value == 1 and not options.include_split:
            continue
        yield record_2d(fi.value, options)


def _even_subsets(ideals: list[PrimeIdealIQ], phi_max: float) -> Iterator[tuple[int, tuple[PrimeIdealIQ, ...]]]:
    factors = [i.norm - 1 for i in ideals]
    chosen: list[PrimeIdealIQ] = []

    def rec(start: int, prod: int):
        if len(chosen) % 2 == 0:
            yield prod, tuple(chosen)
        for i in range(start, len(ideals)):
            nxt = prod * factors[i]
            if nxt > phi_max:
                break
            chosen.append(ideals[i])
            yield from rec(i + 1, nxt)
            chosen.pop()

    yield from rec(0, 1)


def enumerate_classes_3d(K: QuadraticField, volume_max: float, table: PrimeTable) -> Iterator[CensusRecord]:
    """All classes over K with covolume <= volume_max, by increasing phi then ideal labels."""
    base = base_covolume_3d(K)
    if volume_max < base:
        warnings.warn(f"volume bound {volume_max} is below the minimal covolume {base:.6f} over {K}", stacklevel=2)
        return
    phi_max = volume_max / base
    ideals = prime_ideals_up_to(K, int(math.floor(phi_max)) + 1, table)
    found = sorted(_even_subsets(ideals, phi_max), key=lambda item: (item[0], item[1]))
    for ph, subset in found:
        B = QuaternionAlgebraIQ(K, frozenset(subset))
        vol = kleinian_covolume(abs(K.delta), zeta_k2(K), 2, ph)
        if vol <= volume_max:
            yield CensusRecord(B, ph, vol, bool(subset))


def ideal_generator_root(K: QuadraticField, ideal: PrimeIdealIQ) -> int | None:
    """Residue r with ideal = (p, omega - r); None for inert primes."""
    if ideal.splitting is Splitting.INERT:
        return None
    roots = omega_roots(K.delta, ideal.p)
    return roots[ideal.conjugate_index]
