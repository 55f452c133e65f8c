"""Exact algebra of eventually-periodic integer sets.

A :class:`CosetUnion` denotes a finite union of residue classes
``{k in Z : k mod N in residues}``.  All operations are exact set
semantics computed over the lcm of the moduli involved and renormalized
to the minimal modulus, so equality of values is equality of the
denoted subsets of Z.  The empty set is the canonical ``(1, {})``.

Units are the caller's business; the affine layer stores doubled
("twice-level") integers here so half-integer levels stay integral.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Iterable, Iterator, Optional


def _lcm(a: int, b: int) -> int:
    return a // gcd(a, b) * b


@dataclass(frozen=True)
class CosetUnion:
    """A finite union of residue classes, in canonical minimal-modulus form."""

    modulus: int
    residues: frozenset[int]

    def __post_init__(self) -> None:
        if self.modulus < 1:
            raise ValueError("modulus must be positive")
        if any(not (0 <= r < self.modulus) for r in self.residues):
            raise ValueError("residues out of range")

    def is_empty(self) -> bool:
        return not self.residues

    def contains(self, k: int) -> bool:
        return k % self.modulus in self.residues

    __contains__ = contains

    def residues_mod(self, k: int) -> frozenset[int]:
        """Image of the set under reduction mod ``k``."""
        if k < 1:
            raise ValueError("k must be positive")
        ell = _lcm(self.modulus, k)
        step = self.modulus
        out = set()
        for r in self.residues:
            for t in range(r, ell, step):
                out.add(t % k)
        return frozenset(out)

    def min_nonneg(self) -> int:
        """Smallest nonnegative element; the set must be nonempty."""
        if not self.residues:
            raise ValueError("empty set has no elements")
        return min(self.residues)

    def elements(self, lo: int, hi: int) -> Iterator[int]:
        """Elements k with lo <= k <= hi, ascending."""
        for k in range(lo, hi + 1):
            if k % self.modulus in self.residues:
                yield k

    def __repr__(self) -> str:
        inner = ",".join(str(r) for r in sorted(self.residues))
        return f"CosetUnion({self.modulus},{{{inner}}})"


EMPTY = CosetUnion(1, frozenset())
INTEGERS = CosetUnion(1, frozenset({0}))


def normalize(modulus: int, residues: Iterable[int]) -> CosetUnion:
    """Canonical minimal-modulus form of the set {r + modulus*Z : r in residues}."""
    if modulus < 1:
        raise ValueError("modulus must be positive")
    res = frozenset(r % modulus for r in residues)
    if not res:
        return EMPTY
    best = modulus
    for d in range(1, modulus + 1):
        if modulus % d:
            continue
        if all((r + d) % modulus in res for r in res):
            best = d
            break
    return CosetUnion(best, frozenset(r % best for r in res))


def coset(offset: int, period: int) -> CosetUnion:
    """The single class offset + period*Z."""
    return normalize(period, [offset])


def _aligned(a: CosetUnion, b: CosetUnion) -> tuple[int, frozenset[int], frozenset[int]]:
    ell = _lcm(a.modulus, b.modulus)
    ra = frozenset(t for r in a.residues for t in range(r, ell, a.modulus))
    rb = frozenset(t for r in b.residues for t in range(r, ell, b.modulus))
    return ell, ra, rb


def sumset(a: CosetUnion, b: CosetUnion) -> CosetUnion:
    """Exact {x + y : x in a, y in b}; both sets are lcm-periodic, so the sum is too."""
    if a.is_empty() or b.is_empty():
        return EMPTY
    ell, ra, rb = _aligned(a, b)
    return normalize(ell, {(r + s) % ell for r in ra for s in rb})


def negate(a: CosetUnion) -> CosetUnion:
    return normalize(a.modulus, [-r for r in a.residues])


def shift(a: CosetUnion, k: int) -> CosetUnion:
    return normalize(a.modulus, [r + k for r in a.residues])


def scale(a: CosetUnion, c: int) -> CosetUnion:
    """Exact {c*x : x in a}; c must be nonzero (c=0 would collapse to a finite set)."""
    if c == 0:
        raise ValueError("scale by zero is not a coset union")
    m = abs(c) * a.modulus
    return normalize(m, [c * r for r in a.residues])


def intersect(a: CosetUnion, b: CosetUnion) -> CosetUnion:
    ell, ra, rb = _aligned(a, b)
    return normalize(ell, ra & rb)


def union(a: CosetUnion, b: CosetUnion) -> CosetUnion:
    ell, ra, rb = _aligned(a, b)
    return normalize(ell, ra | rb)


def difference(a: CosetUnion, b: CosetUnion) -> CosetUnion:
    ell, ra, rb = _aligned(a, b)
    return normalize(ell, ra - rb)


def is_subset(a: CosetUnion, b: CosetUnion) -> bool:
    ell, ra, rb = _aligned(a, b)
    return ra <= rb


def is_coset(a: CosetUnion) -> Optional[tuple[int, int]]:
    """(offset, period) if the set is a single class p + nZ, else None."""
    if a.is_empty():
        return None
    if len(a.residues) == 1:
        return next(iter(a.residues)), a.modulus
    return None


def window(a: CosetUnion, bound: int) -> tuple[int, ...]:
    """Truncation to [-bound, bound], ascending; the brute-force oracle view."""
    return tuple(a.elements(-bound, bound))
