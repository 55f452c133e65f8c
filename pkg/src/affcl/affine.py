"""Real affine root systems: a finite gradient plus per-length level constraints.

Levels are stored doubled ("twice-level" units) throughout, so the
half-integer short-root levels of the non-reduced ambient stay integral.
A root is the pair (gradient vector, twice_level) and is real exactly when
the twice_level lies in the level lattice of its length class.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator

from . import cosets
from .cosets import CosetUnion
from .errors import IllegalRank, InputError, NotARoot
from .finite import (
    FiniteRootSystem,
    LengthClass,
    RootVector,
    _build_unchecked,
    build_finite,
    lacing_number,
    length_class,
)


@dataclass(frozen=True)
class AffineType:
    """Kind tag plus the index n of the family member.

    kind is one of "untwisted" (with finite_label), "A2n-1", "Dn+1", "E6^2",
    "D4^3", "A2n".  For untwisted types n is the finite rank.
    """

    kind: str
    finite_label: str
    n: int

    def label(self) -> str:
        if self.kind == "untwisted":
            return f"{self.finite_label}{self.n}^(1)"
        if self.kind == "A2n-1":
            return f"A{2 * self.n - 1}^(2)"
        if self.kind == "Dn+1":
            return f"D{self.n + 1}^(2)"
        if self.kind == "E6^2":
            return "E6^(2)"
        if self.kind == "D4^3":
            return "D4^(3)"
        if self.kind == "A2n":
            return f"A{2 * self.n}^(2)"
        raise ValueError(self.kind)


_TYPE_RE = re.compile(r"^([A-G])(\d+)\^?\(?([123])\)?$")


def parse_affine_type(text: str) -> AffineType:
    """Parse labels like "A2^(1)", "D5^(2)", "D3^2", "D4^(3)"."""
    m = _TYPE_RE.match(text.strip())
    if not m:
        raise InputError(f"cannot parse affine type {text!r}")
    letter, idx_s, twist_s = m.groups()
    idx, twist = int(idx_s), int(twist_s)
    if twist == 1:
        label = {"E": f"E{idx}", "F": "F4", "G": "G2"}.get(letter, letter)
        if letter in ("E", "F", "G"):
            return AffineType("untwisted", label, idx)
        return AffineType("untwisted", letter, idx)
    if twist == 2:
        if letter == "A" and idx % 2 == 0:
            if idx < 2:
                raise IllegalRank(text)
            return AffineType("A2n", "BC", idx // 2)
        if letter == "A" and idx % 2 == 1:
            if idx < 3:
                raise IllegalRank(text)
            return AffineType("A2n-1", "C", (idx + 1) // 2)
        if letter == "D":
            if idx < 3:
                raise IllegalRank(text)
            return AffineType("Dn+1", "B", idx - 1)
        if letter == "E" and idx == 6:
            return AffineType("E6^2", "F4", 4)
        raise InputError(f"no twisted type {text!r}")
    if twist == 3:
        if letter == "D" and idx == 4:
            return AffineType("D4^3", "G2", 2)
        raise InputError(f"no triple twist {text!r}")
    raise InputError(text)


@dataclass(frozen=True)
class AffineRoot:
    gradient_root: RootVector
    twice_level: int


class AffineRootSystem:
    """Gradient system plus the level lattice of each length class."""

    def __init__(self, affine_type: AffineType):
        self.affine_type = affine_type
        kind = affine_type.kind
        if kind == "untwisted":
            self.gradient = build_finite(affine_type.finite_label, affine_type.n)
        elif kind == "A2n-1" and affine_type.n == 2:
            # B_2 ~ C_2 degenerate member, realized in the C orientation.
            self.gradient = _build_unchecked("C", 2)
        else:
            self.gradient = build_finite(affine_type.finite_label, affine_type.n)
        self.m = lacing_number(self.gradient)
        if kind == "untwisted":
            lam = {LengthClass.SHORT: cosets.coset(0, 2), LengthClass.LONG: cosets.coset(0, 2)}
        elif kind == "A2n":
            lam = {
                LengthClass.SHORT: cosets.coset(1, 2),
                LengthClass.LONG: cosets.coset(0, 2),
                LengthClass.DIVISIBLE: cosets.coset(0, 4),
            }
        else:
            lam = {
                LengthClass.SHORT: cosets.coset(0, 2),
                LengthClass.LONG: cosets.coset(0, 2 * self.m),
            }
        self._lambda = lam
        self._length_cache: dict[RootVector, LengthClass] = {}

    def label(self) -> str:
        return self.affine_type.label()

    def is_twisted(self) -> bool:
        return self.affine_type.kind != "untwisted"

    def length_of(self, root: RootVector) -> LengthClass:
        if root not in self._length_cache:
            self._length_cache[root] = length_class(self.gradient, root)
        return self._length_cache[root]

    def lam(self, cls: LengthClass) -> CosetUnion:
        return self._lambda[cls]

    def lam_of_root(self, root: RootVector) -> CosetUnion:
        return self._lambda[self.length_of(root)]

    def is_real_root(self, gradient_root: RootVector, twice_level: int) -> bool:
        if gradient_root not in self.gradient:
            raise NotARoot(repr(gradient_root))
        return self.lam_of_root(gradient_root).contains(twice_level)

    def real_roots_window(self, bound: int) -> list[AffineRoot]:
        """All real roots with |level| <= bound (true units), deterministic order."""
        if bound < 0:
            raise ValueError("bound must be >= 0")
        out = []
        for v in self.gradient.roots:
            lam = self.lam_of_root(v)
            for t in lam.elements(-2 * bound, 2 * bound):
                out.append(AffineRoot(v, t))
        return out

    def __eq__(self, other: object) -> bool:
        return isinstance(other, AffineRootSystem) and self.affine_type == other.affine_type

    def __hash__(self) -> int:
        return hash(self.affine_type)

    def __repr__(self) -> str:
        return f"AffineRootSystem({self.label()})"


def build_affine(affine_type: AffineType | str) -> AffineRootSystem:
    if isinstance(affine_type, str):
        affine_type = parse_affine_type(affine_type)
    if affine_type.kind == "untwisted" and affine_type.finite_label == "BC":
        raise IllegalRank("no untwisted type with non-reduced gradient")
    if affine_type.kind == "Dn+1" and affine_type.n < 2:
        raise IllegalRank(affine_type.label())
    if affine_type.kind == "A2n-1" and affine_type.n < 2:
        raise IllegalRank(affine_type.label())
    if affine_type.kind == "A2n" and affine_type.n < 1:
        raise IllegalRank(affine_type.label())
    return AffineRootSystem(affine_type)


def format_level(twice_level: int) -> str:
    """Human rendering of a twice-level: integers plainly, halves as p/2."""
    if twice_level % 2 == 0:
        return str(twice_level // 2)
    return f"{twice_level}/2"


def format_coset_union(cu: CosetUnion) -> str:
    """Human rendering such as "1/2+2Z" or "4Z u (1+4Z)" in true level units."""
    if cu.is_empty():
        return "{}"
    parts = []
    for r in sorted(cu.residues):
        if cu.modulus % 2 == 0 and r % 2 == 0:
            off, step = r // 2, cu.modulus // 2
            step_s = "Z" if step == 1 else f"{step}Z"
            parts.append(f"{off}+{step_s}" if off else step_s)
        else:
            parts.append(f"({format_level(r)}+{format_level(cu.modulus)}Z)")
    return " u ".join(parts)


def iter_positive_gradient(system: AffineRootSystem) -> Iterator[RootVector]:
    for v in system.gradient.roots:
        if v > tuple(-c for c in v):
            yield v
