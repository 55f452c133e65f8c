"""Brute-force ground truth on finite windows, exhaustive enumeration, and
randomized agreement checks against the periodic representation.

Window level sets are bitmask integers (bit i holds twice-level i - offset),
which keeps the additive/reflection sweeps cheap even at bounds of a few
thousand levels.
"""

from __future__ import annotations

import itertools
import os
import random
from dataclasses import dataclass
from math import gcd
from typing import Iterator, Optional

from . import cosets
from .affine import AffineRoot, AffineRootSystem
from .cosets import CosetUnion
from .errors import BudgetExceeded, NotSymmetric
from .finite import RootVector, negate_root
from .subsets import (
    LeveledSubset,
    is_closed,
    is_subroot_system,
    is_symmetric,
    vec_add,
)

DEFAULT_BUDGET = int(os.environ.get("AFFCL_BUDGET", "2000000"))


def _iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _shift(mask: int, by: int) -> int:
    return mask << by if by >= 0 else mask >> (-by)


@dataclass
class WindowSubset:
    """A finite set of real roots with |twice level| <= bound2."""

    system: AffineRootSystem
    bound2: int
    masks: dict[RootVector, int]

    def window_mask(self) -> int:
        return (1 << (2 * self.bound2 + 1)) - 1

    def contains(self, root: RootVector, twice_level: int) -> bool:
        m = self.masks.get(root, 0)
        idx = twice_level + self.bound2
        return 0 <= idx <= 2 * self.bound2 and bool(m >> idx & 1)

    def members(self) -> list[AffineRoot]:
        out = []
        for root in sorted(self.masks):
            for idx in _iter_bits(self.masks[root]):
                out.append(AffineRoot(root, idx - self.bound2))
        return out

    def size(self) -> int:
        return sum(m.bit_count() for m in self.masks.values())

    def truncated(self, bound2: int) -> "WindowSubset":
        if bound2 > self.bound2:
            raise ValueError("cannot grow a window by truncation")
        shift = self.bound2 - bound2
        win = (1 << (2 * bound2 + 1)) - 1
        masks = {}
        for root, m in self.masks.items():
            mm = (m >> shift) & win
            if mm:
                masks[root] = mm
        return WindowSubset(self.system, bound2, masks)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, WindowSubset)
            and self.system == other.system
            and self.bound2 == other.bound2
            and {r: m for r, m in self.masks.items() if m}
            == {r: m for r, m in other.masks.items() if m}
        )


def window_of(psi: LeveledSubset, bound: int) -> WindowSubset:
    """Truncation of a periodic subset to |level| <= bound (true units)."""
    if bound < 1:
        raise ValueError("bound must be >= 1")
    b2 = 2 * bound
    masks = {}
    for root, cu in psi.levels.items():
        m = 0
        for t in cu.elements(-b2, b2):
            m |= 1 << (t + b2)
        if m:
            masks[root] = m
    return WindowSubset(psi.system, b2, masks)


def window_from_levels(
    system: AffineRootSystem, data: dict[RootVector, list[int]], bound: Optional[int] = None
) -> WindowSubset:
    """Window from explicit twice-levels per root (finite, possibly aperiodic sets)."""
    peak = max((abs(t) for ts in data.values() for t in ts), default=1)
    b2 = 2 * bound if bound is not None else peak
    b2 = max(b2, peak)
    masks = {}
    for root, ts in data.items():
        m = 0
        for t in ts:
            if not system.is_real_root(root, t):
                raise ValueError(f"{root} at twice-level {t} is not a real root")
            m |= 1 << (t + b2)
        if m:
            masks[root] = m
    return WindowSubset(system, b2, masks)


def window_is_symmetric(w: WindowSubset) -> bool:
    rev = 2 * w.bound2
    for root, m in w.masks.items():
        neg = w.masks.get(negate_root(root), 0)
        flipped = int(bin(m + (1 << (rev + 1)))[3:][::-1], 2)
        if flipped != neg:
            return False
    return True


def window_closure_violation(
    w: WindowSubset, cap2: Optional[int] = None
) -> Optional[tuple[AffineRoot, AffineRoot, AffineRoot]]:
    """Smallest pair in w whose real sum (within the cap) is missing."""
    sys_ = w.system
    roots = sorted(w.masks)
    for a in roots:
        for b in roots:
            total = vec_add(a, b)
            if not any(total) or total not in sys_.gradient:
                continue
            lamg = sys_.lam_of_root(total)
            tm = w.masks.get(total, 0)
            for ia in _iter_bits(w.masks[a]):
                for ib in _iter_bits(w.masks[b]):
                    t = (ia - w.bound2) + (ib - w.bound2)
                    if not lamg.contains(t):
                        continue
                    if cap2 is not None and abs(t) > cap2:
                        continue
                    if not (0 <= t + w.bound2 <= 2 * w.bound2) or not tm >> (t + w.bound2) & 1:
                        return (
                            AffineRoot(a, ia - w.bound2),
                            AffineRoot(b, ib - w.bound2),
                            AffineRoot(total, t),
                        )
    return None


def window_subroot_violation(
    w: WindowSubset, cap2: Optional[int] = None
) -> Optional[tuple[AffineRoot, AffineRoot, AffineRoot]]:
    """Smallest reflection s_a(b) escaping w (within the cap)."""
    if not window_is_symmetric(w):
        raise NotSymmetric("subroot check needs a symmetric window")
    sys_ = w.system
    roots = sorted(w.masks)
    for a in roots:
        for b in roots:
            c = sys_.gradient.cartan(b, a)
            image = tuple(y - c * x for x, y in zip(a, b))
            im = w.masks.get(image, 0)
            for ia in sorted(_iter_bits(w.masks[a]), key=lambda i: (abs(i - w.bound2), i)):
                ta = ia - w.bound2
                for ib in sorted(_iter_bits(w.masks[b]), key=lambda i: (abs(i - w.bound2), i)):
                    t = (ib - w.bound2) - c * ta
                    if cap2 is not None and abs(t) > cap2:
                        continue
                    if not (0 <= t + w.bound2 <= 2 * w.bound2) or not im >> (t + w.bound2) & 1:
                        return (AffineRoot(a, ta), AffineRoot(b, ib - w.bound2), AffineRoot(image, t))
    return None


def _lam_mask(system: AffineRootSystem, root: RootVector, ext2: int, cache: dict) -> int:
    cls = system.length_of(root)
    if cls not in cache:
        mm = 0
        for t in system.lam(cls).elements(-ext2, ext2):
            mm |= 1 << (t + ext2)
        cache[cls] = mm
    return cache[cls]


def window_is_closed(w: WindowSubset, cap2: Optional[int] = None) -> bool:
    """Mask-based bulk version of the closure check (no witness)."""
    sys_ = w.system
    ext2 = w.bound2
    cap2 = ext2 if cap2 is None else min(cap2, ext2)
    capmask = ((1 << (2 * cap2 + 1)) - 1) << (ext2 - cap2)
    lam_cache: dict = {}
    roots = sorted(w.masks)
    for a in roots:
        ma = w.masks[a]
        for b in roots:
            total = vec_add(a, b)
            if not any(total) or total not in sys_.gradient:
                continue
            cand = 0
            for ia in _iter_bits(ma):
                cand |= _shift(w.masks[b], ia - ext2)
            cand &= capmask & _lam_mask(sys_, total, ext2, lam_cache)
            if cand & ~w.masks.get(total, 0):
                return False
    return True


def window_is_subroot(w: WindowSubset, cap2: Optional[int] = None) -> bool:
    """Mask-based bulk version of the reflection-stability check (no witness)."""
    if not window_is_symmetric(w):
        raise NotSymmetric("subroot check needs a symmetric window")
    sys_ = w.system
    ext2 = w.bound2
    cap2 = ext2 if cap2 is None else min(cap2, ext2)
    capmask = ((1 << (2 * cap2 + 1)) - 1) << (ext2 - cap2)
    roots = sorted(w.masks)
    for a in roots:
        ma = w.masks[a]
        for b in roots:
            c = sys_.gradient.cartan(b, a)
            image = tuple(y - c * x for x, y in zip(a, b))
            cand = 0
            for ia in _iter_bits(ma):
                cand |= _shift(w.masks[b], -c * (ia - ext2))
            cand &= capmask
            if cand & ~w.masks.get(image, 0):
                return False
    return True


def default_margin(w: WindowSubset, modulus_hint: int = 0) -> int:
    """4 * (max level magnitude) + 2 * modulus, in true units, at least 4."""
    peak2 = 0
    for m in w.masks.values():
        for i in _iter_bits(m):
            peak2 = max(peak2, abs(i - w.bound2))
    return max(4, 2 * peak2 + modulus_hint)


def _extend(w: WindowSubset, ext2: int) -> dict[RootVector, int]:
    delta = ext2 - w.bound2
    return {root: m << delta for root, m in w.masks.items()}


def _sweep_closure(
    system: AffineRootSystem, masks: dict[RootVector, int], ext2: int, reflections: bool
) -> None:
    window = (1 << (2 * ext2 + 1)) - 1
    lam_masks: dict[RootVector, int] = {}

    def lam_mask(root: RootVector) -> int:
        if root not in lam_masks:
            mm = 0
            for t in system.lam_of_root(root).elements(-ext2, ext2):
                mm |= 1 << (t + ext2)
            lam_masks[root] = mm
        return lam_masks[root]

    grad = system.gradient
    changed = True
    while changed:
        changed = False
        roots = [r for r in sorted(masks) if masks[r]]
        for a in roots:
            ma = masks.get(a, 0)
            if not ma:
                continue
            for b in roots:
                mb = masks.get(b, 0)
                if not mb:
                    continue
                total = vec_add(a, b)
                if any(total) and total in grad:
                    cand = 0
                    for ia in _iter_bits(ma):
                        cand |= _shift(mb, ia - ext2)
                    cand &= window & lam_mask(total)
                    new = cand & ~masks.get(total, 0)
                    if new:
                        masks[total] = masks.get(total, 0) | new
                        changed = True
                if reflections:
                    c = grad.cartan(b, a)
                    image = tuple(y - c * x for x, y in zip(a, b))
                    cand = 0
                    for ia in _iter_bits(ma):
                        cand |= _shift(mb, -c * (ia - ext2))
                    cand &= window
                    new = cand & ~masks.get(image, 0)
                    if new:
                        masks[image] = masks.get(image, 0) | new
                        changed = True


def window_closure(w: WindowSubset, margin: Optional[int] = None) -> WindowSubset:
    """Additive closure computed at an enlarged bound, reported truncated."""
    margin2 = 2 * (margin if margin is not None else default_margin(w))
    ext2 = w.bound2 + margin2
    masks = _extend(w, ext2)
    _sweep_closure(w.system, masks, ext2, reflections=False)
    return WindowSubset(w.system, ext2, masks).truncated(w.bound2)


def window_subroot_closure(w: WindowSubset, margin: Optional[int] = None) -> WindowSubset:
    """Additive plus reflection closure, truncated back to the window."""
    if not window_is_symmetric(w):
        raise NotSymmetric("subroot closure needs a symmetric window")
    margin2 = 2 * (margin if margin is not None else default_margin(w))
    ext2 = w.bound2 + margin2
    masks = _extend(w, ext2)
    _sweep_closure(w.system, masks, ext2, reflections=True)
    return WindowSubset(w.system, ext2, masks).truncated(w.bound2)


# ---------------------------------------------------------------------------
# exhaustive enumeration


def enumerate_symmetric_closed(
    system: AffineRootSystem, max_modulus: int, budget: Optional[int] = None
) -> Iterator[LeveledSubset]:
    """All nonempty symmetric closed subsets whose level sets are unions of
    cosets with (true) modulus dividing max_modulus, in deterministic order
    (by gradient support size, then lexicographically).

    The search fixes a symmetric gradient support, discards supports whose
    missing sums cannot be avoided by any level assignment, and then
    backtracks over residue bitmasks mod 2*max_modulus with sum lower
    bounds and difference upper bounds pruning each step.
    """
    if max_modulus < 1:
        raise ValueError("max_modulus must be positive")
    budget = budget if budget is not None else DEFAULT_BUDGET
    T = 2 * max_modulus
    full = (1 << T) - 1
    grad = system.gradient
    big = 2 * max(abs(c) for v in grad.roots for c in v) + 1
    dim = grad.dim

    def functional(v: RootVector) -> int:
        return sum(c * big ** (dim - 1 - i) for i, c in enumerate(v))

    def rot(mask: int, by: int) -> int:
        by %= T
        return ((mask << by) | (mask >> (T - by))) & full

    def sum_mask(ma: int, mb: int) -> int:
        out = 0
        m = ma
        while m:
            low = m & -m
            out |= rot(mb, low.bit_length() - 1)
            m ^= low
        return out

    def neg_mask(m: int) -> int:
        out = 0
        while m:
            low = m & -m
            out |= 1 << ((T - (low.bit_length() - 1)) % T)
            m ^= low
        return out

    pos = sorted((r for r in grad.roots if functional(r) > 0), key=functional)
    allowed = {}
    for r in grad.roots:
        lam = system.lam_of_root(r)
        m = 0
        for t in range(T):
            if cosets.is_subset(cosets.coset(t, T), lam):
                m |= 1 << t
        allowed[r] = m
    counter = [0]

    def spend(k: int = 1) -> None:
        counter[0] += k
        if counter[0] > budget:
            raise BudgetExceeded(f"enumeration exceeded {budget} steps")

    def support_feasible(signed: set[RootVector]) -> bool:
        # a missing sum is avoidable only if some residue pair escapes its lattice
        for x in signed:
            for y in signed:
                total = vec_add(x, y)
                if not any(total) or total not in grad or total in signed:
                    continue
                if sum_mask(allowed[x], allowed[y]) & ~allowed[total] & full == 0:
                    return False
        return True

    def assignments(support: list[RootVector]) -> Iterator[dict[RootVector, int]]:
        signed = set(support) | {negate_root(r) for r in support}
        values: dict[RootVector, int] = {}

        def table(root: RootVector) -> Optional[int]:
            if root in values:
                return values[root]
            neg = negate_root(root)
            if neg in values:
                return neg_mask(values[neg])
            return None

        def rec(idx: int) -> Iterator[dict[RootVector, int]]:
            spend()
            if idx == len(support):
                yield dict(values)
                return
            gamma = support[idx]
            assigned_signed = [
                r for r in signed if table(r) is not None
            ]
            lower = 0
            for x in assigned_signed:
                for y in assigned_signed:
                    if vec_add(x, y) == gamma:
                        lower |= sum_mask(table(x), table(y))
            lower &= allowed[gamma]
            upper = allowed[gamma]
            for x in assigned_signed:
                sx = table(x)
                y = vec_add(gamma, x)
                if not any(y) or y not in grad:
                    continue
                sy = table(y)
                if sy is not None:
                    bad = 0
                    for t in range(T):
                        if not upper >> t & 1:
                            continue
                        reach = rot(sx, t) & allowed[y]
                        if reach & ~sy:
                            bad |= 1 << t
                    upper &= ~bad
                elif y not in signed:
                    bad = 0
                    for t in range(T):
                        if not upper >> t & 1:
                            continue
                        if rot(sx, t) & allowed[y]:
                            bad |= 1 << t
                    upper &= ~bad
            if lower & ~upper:
                return
            free = upper & ~lower
            free_bits = [i for i in range(T) if free >> i & 1]
            for fm in range(1 << len(free_bits)):
                extra = 0
                for bi, i in enumerate(free_bits):
                    if fm >> bi & 1:
                        extra |= 1 << i
                mask = lower | extra
                if not mask:
                    continue
                values[gamma] = mask
                yield from rec(idx + 1)
                del values[gamma]

        yield from rec(0)

    def emit(support: list[RootVector], values: dict[RootVector, int]) -> Optional[LeveledSubset]:
        levels = {}
        for r in support:
            residues = [t for t in range(T) if values[r] >> t & 1]
            cu = cosets.normalize(T, residues)
            levels[r] = cu
            levels[negate_root(r)] = cosets.negate(cu)
        psi = LeveledSubset(system, levels)
        ok, _ = is_closed(psi)
        return psi if ok else None

    for size in range(1, len(pos) + 1):
        for combo in itertools.combinations(pos, size):
            spend()
            signed = set(combo) | {negate_root(r) for r in combo}
            if not support_feasible(signed):
                continue
            support = sorted(combo, key=functional)
            for values in assignments(support):
                psi = emit(support, values)
                if psi is not None:
                    yield psi


# ---------------------------------------------------------------------------
# randomized generation and agreement


def additive_closure(psi: LeveledSubset) -> LeveledSubset:
    """Smallest closed superset in the periodic representation."""
    system = psi.system
    levels: dict[RootVector, CosetUnion] = dict(psi.levels)
    changed = True
    while changed:
        changed = False
        roots = sorted(levels)
        for a in roots:
            for b in roots:
                total = vec_add(a, b)
                if not any(total) or total not in system.gradient:
                    continue
                reach = cosets.intersect(
                    cosets.sumset(levels[a], levels[b]), system.lam_of_root(total)
                )
                if reach.is_empty():
                    continue
                cur = levels.get(total, cosets.EMPTY)
                if not cosets.is_subset(reach, cur):
                    levels[total] = cosets.union(cur, reach)
                    changed = True
    return LeveledSubset(system, levels)


def random_subset(
    system: AffineRootSystem,
    seed: int,
    max_modulus: int = 8,
    max_pairs: int = 3,
    max_classes: int = 2,
) -> LeveledSubset:
    """Seeded symmetric closed subset: a sparse symmetric seed, then closure."""
    rng = random.Random(seed)
    for attempt in itertools.count():
        modulus = rng.randint(1, max_modulus)
        T = 2 * modulus
        pos = sorted(r for r in system.gradient.roots if r > negate_root(r))
        picked = rng.sample(pos, k=min(len(pos), rng.randint(1, max_pairs)))
        levels: dict[RootVector, CosetUnion] = {}
        ok = True
        for root in picked:
            options = [t % T for t in system.lam_of_root(root).elements(0, T - 1)]
            if not options:
                ok = False
                break
            chosen = rng.sample(options, k=min(len(options), rng.randint(1, max_classes)))
            cu = cosets.normalize(T, chosen)
            levels[root] = cu
            levels[negate_root(root)] = cosets.negate(cu)
        if not ok:
            continue
        psi = additive_closure(LeveledSubset(system, levels))
        if not psi.is_empty():
            return psi
        if attempt > 50:
            raise RuntimeError("random generation failed to produce a subset")
    raise AssertionError


def agree(predicate: str, psi: LeveledSubset, bound: int) -> bool:
    """Evaluate a periodic predicate and its window realization; True iff equal."""
    w = window_of(psi, bound)
    cap2 = w.bound2
    if predicate == "symmetric":
        return is_symmetric(psi) == window_is_symmetric(w)
    if predicate == "closed":
        ok, _ = is_closed(psi)
        return ok == window_is_closed(w, cap2=cap2)
    if predicate == "subroot":
        ok, _ = is_subroot_system(psi)
        return ok == window_is_subroot(w, cap2=cap2)
    raise ValueError(f"unknown predicate {predicate!r}")
