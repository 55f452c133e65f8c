"""Subsets of a real affine root system as gradient-indexed level data.

A LeveledSubset maps each gradient root that occurs to the exact set of
twice-levels at which it occurs (a nonempty CosetUnion contained in the
level lattice of its length class).  The empty subset is represented and
treated as vacuously closed; the textbook definition demands closed
subsets be nonempty, so callers that care should check explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import gcd
from typing import Optional

from . import cosets
from .affine import AffineRootSystem
from .cosets import CosetUnion
from .errors import InputError, NonReduced, NotClosed, NotInGradient, NotSubrootSystem, NotSymmetric
from .finite import FiniteSubset, RootVector, base_of_subroot, decompose_finite, expand_in_base
from .finite import is_closed_finite, is_semiclosed_finite, negate_root


def vec_add(a: RootVector, b: RootVector) -> RootVector:
    return tuple(x + y for x, y in zip(a, b))


class GradientStatus(Enum):
    CLOSED = "closed"
    SEMI_CLOSED = "semi-closed"
    NEITHER = "neither"


@dataclass(frozen=True)
class ClosureWitness:
    """A pair whose sum escapes the subset, with the missing level classes."""

    alpha: RootVector
    beta: RootVector
    total: RootVector
    missing: CosetUnion

    def example_twice_level(self) -> int:
        m = self.missing
        return min(m.elements(-m.modulus, m.modulus), key=lambda t: (abs(t), t))


@dataclass(frozen=True)
class ReflectionWitness:
    """A reflection s_alpha(beta) escaping the subset."""

    alpha: RootVector
    alpha_twice_level: int
    beta: RootVector
    beta_twice_level: int
    image: RootVector
    image_twice_level: int


class LeveledSubset:
    def __init__(self, system: AffineRootSystem, levels: dict[RootVector, CosetUnion]):
        clean: dict[RootVector, CosetUnion] = {}
        for root, cu in levels.items():
            if cu.is_empty():
                continue
            if root not in system.gradient:
                raise InputError(f"{root} is not a gradient root of {system.label()}")
            if not cosets.is_subset(cu, system.lam_of_root(root)):
                raise InputError(f"levels {cu} of {root} violate the level lattice")
            clean[root] = cu
        self.system = system
        self.levels = clean
        self._sorted = tuple(sorted(clean))

    def gradient(self) -> FiniteSubset:
        return FiniteSubset(self.system.gradient, frozenset(self.levels))

    def gradient_roots(self) -> tuple[RootVector, ...]:
        return self._sorted

    def zed(self, root: RootVector) -> CosetUnion:
        if root not in self.levels:
            raise NotInGradient(repr(root))
        return self.levels[root]

    def is_empty(self) -> bool:
        return not self.levels

    def contains_root(self, root: RootVector, twice_level: int) -> bool:
        cu = self.levels.get(root)
        return cu is not None and cu.contains(twice_level)

    def moduli_lcm(self) -> int:
        out = 1
        for cu in self.levels.values():
            out = out // gcd(out, cu.modulus) * cu.modulus
        return out

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, LeveledSubset)
            and self.system == other.system
            and self.levels == other.levels
        )

    def __hash__(self) -> int:
        return hash((self.system, tuple(sorted(self.levels.items(), key=lambda kv: kv[0]))))

    def __repr__(self) -> str:
        return f"LeveledSubset({self.system.label()}, {len(self.levels)} gradient roots)"


def union_subsets(a: LeveledSubset, b: LeveledSubset) -> LeveledSubset:
    if a.system != b.system:
        raise InputError("cannot union subsets of different systems")
    levels = dict(a.levels)
    for root, cu in b.levels.items():
        levels[root] = cosets.union(levels[root], cu) if root in levels else cu
    return LeveledSubset(a.system, levels)


def is_symmetric(psi: LeveledSubset) -> bool:
    for root, cu in psi.levels.items():
        other = psi.levels.get(negate_root(root))
        if other is None or other != cosets.negate(cu):
            return False
    return True


def closure_witness(psi: LeveledSubset) -> Optional[ClosureWitness]:
    """Lexicographically smallest closure violation, or None when closed."""
    sys_ = psi.system
    grad = psi.gradient_roots()
    for a in grad:
        za = psi.levels[a]
        for b in grad:
            if b < a:
                continue
            total = vec_add(a, b)
            if not any(total) or total not in sys_.gradient:
                continue
            reachable = cosets.intersect(
                cosets.sumset(za, psi.levels[b]), sys_.lam_of_root(total)
            )
            target = psi.levels.get(total, cosets.EMPTY)
            if not cosets.is_subset(reachable, target):
                return ClosureWitness(a, b, total, cosets.difference(reachable, target))
    return None


def is_closed(psi: LeveledSubset) -> tuple[bool, Optional[ClosureWitness]]:
    w = closure_witness(psi)
    return (w is None), w


def subroot_witness(psi: LeveledSubset) -> Optional[ReflectionWitness]:
    """Smallest reflection violation, or None when psi is a subroot system."""
    if not is_symmetric(psi):
        raise NotSymmetric("subroot check needs a symmetric subset")
    sys_ = psi.system
    grad = psi.gradient_roots()
    for a in grad:
        za = psi.levels[a]
        for b in grad:
            zb = psi.levels[b]
            c = sys_.gradient.cartan(b, a)
            image = tuple(y - c * x for x, y in zip(a, b))
            required = zb if c == 0 else cosets.sumset(zb, cosets.scale(za, -c))
            target = psi.levels.get(image, cosets.EMPTY)
            if cosets.is_subset(required, target):
                continue
            missing = cosets.difference(required, target)
            t_img = min(
                missing.elements(-missing.modulus, missing.modulus), key=lambda t: (abs(t), t)
            )
            r, s = _witness_pair(za, zb, c, t_img)
            return ReflectionWitness(a, r, b, s, image, t_img)
    return None


def _witness_pair(za: CosetUnion, zb: CosetUnion, c: int, t_img: int) -> tuple[int, int]:
    bound = 2 * za.modulus * zb.modulus + abs(t_img) + 2 * abs(c) * za.modulus + 4
    for r in sorted(za.elements(-bound, bound), key=lambda x: (abs(x), x)):
        s = t_img + c * r
        if zb.contains(s):
            return r, s
    raise AssertionError("witness pair must exist")


def is_subroot_system(psi: LeveledSubset) -> tuple[bool, Optional[ReflectionWitness]]:
    w = subroot_witness(psi)
    return (w is None), w


def symmetric_special_split(psi: LeveledSubset) -> tuple[LeveledSubset, LeveledSubset]:
    """(symmetric part, special part) of a closed subset; both closed again."""
    ok, w = is_closed(psi)
    if not ok:
        raise NotClosed(repr(w))
    sym: dict[RootVector, CosetUnion] = {}
    spec: dict[RootVector, CosetUnion] = {}
    for root, cu in psi.levels.items():
        opposite = psi.levels.get(negate_root(root), cosets.EMPTY)
        shared = cosets.intersect(cu, cosets.negate(opposite))
        rest = cosets.difference(cu, shared)
        if not shared.is_empty():
            sym[root] = shared
        if not rest.is_empty():
            spec[root] = rest
    parts = (LeveledSubset(psi.system, sym), LeveledSubset(psi.system, spec))
    for part in parts:
        ok, w = is_closed(part)
        if not ok:
            raise AssertionError(f"split part not closed: {w}")
    return parts


def decompose(psi: LeveledSubset) -> list[LeveledSubset]:
    """Partition by non-orthogonality of gradients, ordered by least root."""
    comps = decompose_finite(psi.gradient())
    return [
        LeveledSubset(psi.system, {r: psi.levels[r] for r in comp.members}) for comp in comps
    ]


def gradient_status(psi: LeveledSubset) -> GradientStatus:
    if not is_symmetric(psi):
        raise NotSymmetric("gradient status needs a symmetric subset")
    ok, w = is_closed(psi)
    if not ok:
        raise NotClosed(repr(w))
    grad = psi.gradient()
    closed, _ = is_closed_finite(grad)
    if closed:
        return GradientStatus.CLOSED
    if is_semiclosed_finite(grad):
        return GradientStatus.SEMI_CLOSED
    return GradientStatus.NEITHER


@dataclass(frozen=True)
class LinearLevels:
    """An additive choice of anchor levels: values on a base, extended linearly."""

    base: tuple[RootVector, ...]
    values: tuple[int, ...]

    def value_of(self, root: RootVector) -> int:
        if not self.base:
            raise NotInGradient(repr(root))
        coeffs = expand_in_base(list(self.base), root)
        if coeffs is None:
            raise NotInGradient(repr(root))
        total = sum(c * v for c, v in zip(coeffs, self.values))
        if isinstance(total, Fraction):
            if total.denominator != 1:
                raise NotInGradient(f"{root} has non-integral coefficients")
            return int(total)
        return int(total)


def linear_levels(psi: LeveledSubset) -> Optional[LinearLevels]:
    """Anchor levels per Z-linearity, or None when the additive precondition fails."""
    grad = psi.gradient()
    for v in grad.members:
        if tuple(2 * c for c in v) in grad.members:
            raise NonReduced(repr(v))
    if psi.is_empty():
        return LinearLevels((), ())
    closed, _ = is_closed_finite(grad)
    if not closed:
        return None
    roots = psi.gradient_roots()
    for a in roots:
        for b in roots:
            total = vec_add(a, b)
            if any(total) and total in grad.members:
                if not cosets.is_subset(
                    cosets.sumset(psi.levels[a], psi.levels[b]), psi.levels[total]
                ):
                    return None
    try:
        base = base_of_subroot(grad)
    except NotSubrootSystem:
        return None
    values = tuple(psi.levels[b].min_nonneg() for b in base)
    p = LinearLevels(tuple(base), values)
    for r in roots:
        if not psi.levels[r].contains(p.value_of(r)):
            return None
    return p


def subset_to_dict(psi: LeveledSubset) -> dict:
    """JSON form; coordinates in half-eps units, levels in twice-level units."""
    return {
        "type": psi.system.label(),
        "roots": [
            {
                "coords": list(root),
                "levels": {"modulus": cu.modulus, "residues": sorted(cu.residues)},
            }
            for root, cu in sorted(psi.levels.items())
        ],
    }


def subset_from_dict(data: dict, system: Optional[AffineRootSystem] = None) -> LeveledSubset:
    from .affine import build_affine

    if system is None:
        system = build_affine(data["type"])
    levels: dict[RootVector, CosetUnion] = {}
    for entry in data["roots"]:
        root = tuple(int(c) for c in entry["coords"])
        lv = entry["levels"]
        cu = cosets.normalize(int(lv["modulus"]), [int(r) for r in lv["residues"]])
        if root in levels:
            cu = cosets.union(levels[root], cu)
        levels[root] = cu
    return LeveledSubset(system, levels)
