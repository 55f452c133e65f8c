"""Finite crystallographic root systems and predicates on their subsets.

Coordinates are stored in half-epsilon integer units (every textbook
coordinate doubled) so the F_4/E-type half-integer roots and the BC_n
divisible roots are all integral.  The bilinear form is then the plain
integer dot product, valued in quarter-(eps,eps) units.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterator, Optional

from .errors import IllegalRank, NonReduced, NotARoot, NotIrreducible, NotSubrootSystem, NotSymmetric

RootVector = tuple[int, ...]


class LengthClass(Enum):
    SHORT = "short"
    LONG = "long"
    DIVISIBLE = "divisible"


_LACING = {"A": 1, "D": 1, "E6": 1, "E7": 1, "E8": 1, "B": 2, "C": 2, "F4": 2, "BC": 2, "G2": 3}

_IRREDUCIBLE_CACHE: dict[tuple[str, int], bool] = {}


def _unit(dim: int, i: int, value: int) -> list[int]:
    v = [0] * dim
    v[i] = value
    return v


def _pm_pairs(dim: int, scale_i: int, scale_j: int) -> list[RootVector]:
    out = []
    for i in range(dim):
        for j in range(i + 1, dim):
            for si in (1, -1):
                for sj in (1, -1):
                    v = [0] * dim
                    v[i] = si * scale_i
                    v[j] = sj * scale_j
                    out.append(tuple(v))
    return out


def _signed_units(dim: int, scale: int) -> list[RootVector]:
    return [tuple(_unit(dim, i, s * scale)) for i in range(dim) for s in (1, -1)]


def _roots_for(type_label: str, rank: int) -> tuple[int, list[RootVector]]:
    """(ambient dimension, roots in half-eps units) for a legal (type, rank)."""
    if type_label == "A":
        dim = rank + 1
        roots = []
        for i in range(dim):
            for j in range(dim):
                if i != j:
                    v = [0] * dim
                    v[i], v[j] = 2, -2
                    roots.append(tuple(v))
        return dim, roots
    if type_label == "B":
        return rank, _signed_units(rank, 2) + _pm_pairs(rank, 2, 2)
    if type_label == "C":
        return rank, _signed_units(rank, 4) + _pm_pairs(rank, 2, 2)
    if type_label == "D":
        return rank, _pm_pairs(rank, 2, 2)
    if type_label == "BC":
        return rank, _signed_units(rank, 2) + _signed_units(rank, 4) + _pm_pairs(rank, 2, 2)
    if type_label == "G2":
        roots = []
        for i, j in itertools.permutations(range(3), 2):
            v = [0, 0, 0]
            v[i], v[j] = 2, -2
            roots.append(tuple(v))
        for i in range(3):
            j, k = [x for x in range(3) if x != i]
            for s in (1, -1):
                v = [0, 0, 0]
                v[i], v[j], v[k] = 4 * s, -2 * s, -2 * s
                roots.append(tuple(v))
        return 3, roots
    if type_label == "F4":
        roots = _signed_units(4, 2) + _pm_pairs(4, 2, 2)
        roots += [tuple(signs) for signs in itertools.product((1, -1), repeat=4)]
        return 4, roots
    if type_label == "E8":
        roots = _pm_pairs(8, 2, 2)
        for signs in itertools.product((1, -1), repeat=8):
            if signs.count(-1) % 2 == 0:
                roots.append(signs)
        return 8, roots
    if type_label == "E7":
        roots = [r for r in _pm_pairs(8, 2, 2) if all(r[i] == 0 for i in (6, 7))]
        roots += [(0, 0, 0, 0, 0, 0, 2, -2), (0, 0, 0, 0, 0, 0, -2, 2)]
        for signs in itertools.product((1, -1), repeat=6):
            if signs.count(-1) % 2 == 1:
                roots.append(signs + (-1, 1))
                roots.append(tuple(-s for s in signs) + (1, -1))
        return 8, roots
    if type_label == "E6":
        roots = [r for r in _pm_pairs(8, 2, 2) if all(r[i] == 0 for i in (5, 6, 7))]
        for signs in itertools.product((1, -1), repeat=5):
            if signs.count(-1) % 2 == 0:
                roots.append(signs + (-1, -1, 1))
                roots.append(tuple(-s for s in signs) + (1, 1, -1))
        return 8, roots
    raise IllegalRank(f"unknown type label {type_label!r}")


_LEGAL_RANGE = {
    "A": (1, None), "B": (2, None), "C": (3, None), "D": (4, None), "BC": (1, None),
    "G2": (2, 2), "F4": (4, 4), "E6": (6, 6), "E7": (7, 7), "E8": (8, 8),
}


@dataclass(frozen=True)
class FiniteRootSystem:
    """A finite root system with exact integer coordinates and pairing."""

    type_label: str
    rank: int
    dim: int
    roots: tuple[RootVector, ...]
    _root_set: frozenset[RootVector] = field(repr=False)
    _norms: tuple[int, ...] = field(repr=False)

    def __contains__(self, v: RootVector) -> bool:
        return v in self._root_set

    def dot(self, x: RootVector, y: RootVector) -> int:
        return sum(a * b for a, b in zip(x, y))

    def cartan(self, beta: RootVector, alpha: RootVector) -> int:
        """(beta, alpha^vee), always an integer for roots."""
        num = 2 * self.dot(beta, alpha)
        den = self.dot(alpha, alpha)
        q, r = divmod(num, den)
        if r:
            raise NotARoot(f"non-integral pairing for {beta} vs {alpha}")
        return q

    def is_irreducible(self) -> bool:
        key = (self.type_label, self.rank)
        if key not in _IRREDUCIBLE_CACHE:
            comps = decompose_finite(FiniteSubset(self, frozenset(self.roots)))
            _IRREDUCIBLE_CACHE[key] = len(comps) == 1
        return _IRREDUCIBLE_CACHE[key]

    def __hash__(self) -> int:
        return hash((self.type_label, self.rank))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FiniteRootSystem) and self.roots == other.roots


def build_finite(type_label: str, rank: int) -> FiniteRootSystem:
    """Construct the root system of the given type, roots in lexicographic order."""
    if type_label not in _LEGAL_RANGE:
        raise IllegalRank(f"unknown type label {type_label!r}")
    lo, hi = _LEGAL_RANGE[type_label]
    if rank < lo or (hi is not None and rank > hi):
        raise IllegalRank(f"rank {rank} out of range for type {type_label}")
    return _build_unchecked(type_label, rank)


def _build_unchecked(type_label: str, rank: int) -> FiniteRootSystem:
    # rank-2 C is reached by the affine layer (B_2 and C_2 realize the same
    # system in different orientations); the public range check excludes it.
    dim, roots = _roots_for(type_label, rank)
    ordered = tuple(sorted(set(roots)))
    norms = tuple(sorted({sum(a * a for a in r) for r in ordered}))
    return FiniteRootSystem(type_label, rank, dim, ordered, frozenset(ordered), norms)


def lacing_number(system: FiniteRootSystem) -> int:
    """1, 2 or 3 depending on the type; BC counts as 2."""
    if not system.is_irreducible():
        raise NotIrreducible(system.type_label)
    return _LACING[system.type_label]


def length_class(system: FiniteRootSystem, root: RootVector) -> LengthClass:
    if root not in system:
        raise NotARoot(repr(root))
    if len(system._norms) == 1:
        return LengthClass.SHORT
    half = tuple(c // 2 for c in root)
    if all(c % 2 == 0 for c in root) and half in system:
        return LengthClass.DIVISIBLE
    n = system.dot(root, root)
    reduced_norms = [m for m in system._norms if m != max(system._norms)] \
        if system.type_label == "BC" else list(system._norms)
    return LengthClass.SHORT if n == min(reduced_norms) else LengthClass.LONG


def reflect_finite(system: FiniteRootSystem, alpha: RootVector, beta: RootVector) -> RootVector:
    """s_alpha(beta) = beta - (beta, alpha^vee) alpha."""
    if alpha not in system or beta not in system:
        raise NotARoot(f"{alpha} or {beta}")
    c = system.cartan(beta, alpha)
    return tuple(b - c * a for a, b in zip(alpha, beta))


def negate_root(v: RootVector) -> RootVector:
    return tuple(-c for c in v)


@dataclass(frozen=True)
class FiniteSubset:
    """A subset of a finite root system."""

    owner: FiniteRootSystem
    members: frozenset[RootVector]

    def __post_init__(self) -> None:
        bad = [v for v in self.members if v not in self.owner]
        if bad:
            raise NotARoot(repr(bad[0]))

    def sorted_members(self) -> list[RootVector]:
        return sorted(self.members)


def is_symmetric_finite(subset: FiniteSubset) -> bool:
    return all(negate_root(v) in subset.members for v in subset.members)


def closure_failure(subset: FiniteSubset) -> Optional[tuple[RootVector, RootVector, RootVector]]:
    """Lexicographically smallest (a, b, a+b) with a,b in the subset and a+b a root outside it."""
    members = subset.sorted_members()
    sys_ = subset.owner
    for a in members:
        for b in members:
            if b < a:
                continue
            s = tuple(x + y for x, y in zip(a, b))
            if any(s) and s in sys_ and s not in subset.members:
                return (a, b, s)
    return None


def is_closed_finite(subset: FiniteSubset) -> tuple[bool, Optional[tuple]]:
    w = closure_failure(subset)
    return (w is None), w


def is_subroot_finite(subset: FiniteSubset) -> bool:
    """Stability under s_alpha for every alpha in the subset."""
    for a in subset.members:
        for b in subset.members:
            if reflect_finite(subset.owner, a, b) not in subset.members:
                return False
    return True


def is_semiclosed_finite(subset: FiniteSubset) -> bool:
    """Not closed, and every closure failure has the permitted length signature."""
    if not is_symmetric_finite(subset):
        raise NotSymmetric("semi-closed is defined for symmetric subsets")
    sys_ = subset.owner
    failures = []
    for a in subset.members:
        for b in subset.members:
            s = tuple(x + y for x, y in zip(a, b))
            if any(s) and s in sys_ and s not in subset.members:
                failures.append((a, b, s))
    if not failures:
        return False
    if sys_.type_label == "BC":
        allowed = {
            (LengthClass.SHORT, LengthClass.SHORT, LengthClass.DIVISIBLE),
            (LengthClass.LONG, LengthClass.LONG, LengthClass.DIVISIBLE),
        }
    else:
        allowed = {(LengthClass.SHORT, LengthClass.SHORT, LengthClass.LONG)}
    return all(
        (length_class(sys_, a), length_class(sys_, b), length_class(sys_, s)) in allowed
        for a, b, s in failures
    )


def decompose_finite(subset: FiniteSubset) -> list[FiniteSubset]:
    """Connected components of the non-orthogonality graph, ordered by least member."""
    members = subset.sorted_members()
    sys_ = subset.owner
    seen: set[RootVector] = set()
    comps = []
    for start in members:
        if start in seen:
            continue
        comp = {start}
        frontier = [start]
        while frontier:
            x = frontier.pop()
            for y in members:
                if y not in comp and sys_.dot(x, y) != 0:
                    comp.add(y)
                    frontier.append(y)
        seen |= comp
        comps.append(FiniteSubset(sys_, frozenset(comp)))
    return sorted(comps, key=lambda c: min(c.members))


def _span_rank(vectors: list[RootVector]) -> int:
    rows = [[Fraction(c) for c in v] for v in vectors]
    rank = 0
    cols = len(rows[0]) if rows else 0
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = rows[r][c]
        rows[r] = [x / inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        r += 1
        rank += 1
    return rank


def expand_in_base(base: list[RootVector], v: RootVector) -> Optional[tuple[Fraction, ...]]:
    """Coefficients of v in the given base vectors, or None if v is outside the span."""
    n = len(base)
    dim = len(v)
    rows = [[Fraction(base[j][i]) for j in range(n)] + [Fraction(v[i])] for i in range(dim)]
    r = 0
    pivots = []
    for c in range(n):
        piv = next((i for i in range(r, dim) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = rows[r][c]
        rows[r] = [x / inv for x in rows[r]]
        for i in range(dim):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    coeffs = [Fraction(0)] * n
    for i, c in enumerate(pivots):
        coeffs[c] = rows[i][n]
    for i in range(r, dim):
        if rows[i][n] != 0:
            return None
    return tuple(coeffs)


def base_of_subroot(subset: FiniteSubset) -> list[RootVector]:
    """Indecomposable positive roots w.r.t. a generic linear functional.

    The functional x -> sum M^i x_i with M exceeding twice any coordinate
    magnitude never vanishes on a nonzero integer vector, so it splits the
    subset into positives and negatives.
    """
    if not subset.members:
        return []
    ok, _ = is_closed_finite(subset)
    if not (ok and is_subroot_finite(subset)):
        raise NotSubrootSystem("base extraction needs a closed subroot system")
    for v in subset.members:
        if tuple(2 * c for c in v) in subset.members:
            raise NonReduced(repr(v))
    big = 2 * max(abs(c) for v in subset.members for c in v) + 1
    dim = len(next(iter(subset.members)))
    def functional(v: RootVector) -> int:
        return sum(c * big ** (dim - 1 - i) for i, c in enumerate(v))
    positives = [v for v in subset.sorted_members() if functional(v) > 0]
    pos_set = set(positives)
    base = []
    for v in positives:
        decomposable = any(
            tuple(a - b for a, b in zip(v, u)) in pos_set for u in positives if u != v
        )
        if not decomposable:
            base.append(v)
    base.sort()
    assert len(base) == _span_rank(list(subset.members))
    return base


def additive_closure_finite(subset: FiniteSubset) -> FiniteSubset:
    """Smallest closed superset inside the same system."""
    cur = set(subset.members)
    sys_ = subset.owner
    changed = True
    while changed:
        changed = False
        for a, b in itertools.product(list(cur), repeat=2):
            s = tuple(x + y for x, y in zip(a, b))
            if any(s) and s in sys_ and s not in cur:
                cur.add(s)
                changed = True
    return FiniteSubset(sys_, frozenset(cur))


def enumerate_symmetric_closed_finite(system: FiniteRootSystem) -> Iterator[FiniteSubset]:
    """All nonempty symmetric closed subsets, by increasing support."""
    pos = sorted(v for v in system.roots if v > negate_root(v))
    for k in range(1, len(pos) + 1):
        for combo in itertools.combinations(pos, k):
            members = frozenset(combo) | frozenset(negate_root(v) for v in combo)
            sub = FiniteSubset(system, members)
            ok, _ = is_closed_finite(sub)
            if ok:
                yield sub
