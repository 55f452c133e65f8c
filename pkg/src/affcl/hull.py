"""Minimal closed-subroot hulls and the fiber analysis of the generating map.

The hull fixpoint runs over residues modulo L = 2 * m * lcm(moduli): every
set produced by level sums and reflections of L-periodic sets is again
L-periodic, so the computation is exact.  The result is re-verified as a
closed subroot system containing the input and, by default, cross-checked
against the window oracle; disagreement raises HullRepresentationError.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import gcd
from typing import Optional

from . import cosets
from .affine import AffineRootSystem, build_affine
from .cosets import CosetUnion
from .errors import (
    HullRepresentationError,
    NotIrreducible,
    NotSubrootSystem,
    NotSymmetric,
    ParameterViolation,
)
from .finite import LengthClass, RootVector, negate_root
from .oracle import WindowSubset, window_of, window_subroot_closure
from .subsets import (
    LeveledSubset,
    decompose,
    is_closed,
    is_subroot_system,
    is_symmetric,
    vec_add,
)


def euler_phi(k: int) -> int:
    """Euler's totient."""
    if k < 1:
        raise ValueError("totient needs a positive argument")
    out = k
    n = k
    p = 2
    while p * p <= n:
        if n % p == 0:
            out -= out // p
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out -= out // n
    return out


def _hull_modulus(psi: LeveledSubset) -> int:
    l2 = 2
    for cu in psi.levels.values():
        l2 = l2 // gcd(l2, cu.modulus) * cu.modulus
    for cls in (LengthClass.SHORT, LengthClass.LONG, LengthClass.DIVISIBLE):
        try:
            lam = psi.system.lam(cls)
        except KeyError:
            continue
        l2 = l2 // gcd(l2, lam.modulus) * lam.modulus
    return 2 * psi.system.m * l2


def _residues_mod(cu: CosetUnion, L: int) -> frozenset[int]:
    return cu.residues_mod(L)


def subroot_hull(psi: LeveledSubset, cross_check: bool = True) -> LeveledSubset:
    """Smallest closed subroot system containing a symmetric subset."""
    if not is_symmetric(psi):
        raise NotSymmetric("hull is defined for symmetric subsets")
    if psi.is_empty():
        return psi
    system = psi.system
    grad = system.gradient
    L2 = _hull_modulus(psi)
    lam_res = {
        cls: frozenset(t % L2 for t in system.lam(cls).elements(0, L2 - 1))
        for cls in (LengthClass.SHORT, LengthClass.LONG, LengthClass.DIVISIBLE)
        if cls in system._lambda
    }
    cur: dict[RootVector, set[int]] = {
        root: set(_residues_mod(cu, L2)) for root, cu in psi.levels.items()
    }
    changed = True
    while changed:
        changed = False
        roots = sorted(r for r in cur if cur[r])
        for a in roots:
            sa = cur[a]
            for b in roots:
                sb = cur[b]
                total = vec_add(a, b)
                if any(total) and total in grad:
                    allow = lam_res[system.length_of(total)]
                    new = {(x + y) % L2 for x in sa for y in sb} & allow
                    tgt = cur.setdefault(total, set())
                    if not new <= tgt:
                        tgt |= new
                        changed = True
                c = grad.cartan(b, a)
                image = tuple(y - c * x for x, y in zip(a, b))
                new = {(y - c * x) % L2 for x in sa for y in sb}
                tgt = cur.setdefault(image, set())
                if not new <= tgt:
                    assert new <= lam_res[system.length_of(image)]
                    tgt |= new
                    changed = True
    levels = {root: cosets.normalize(L2, s) for root, s in cur.items() if s}
    result = LeveledSubset(system, levels)
    _verify_hull(psi, result, L2, cross_check)
    return result


def _verify_hull(psi: LeveledSubset, result: LeveledSubset, L2: int, cross_check: bool) -> None:
    for root, cu in psi.levels.items():
        if root not in result.levels or not cosets.is_subset(cu, result.levels[root]):
            raise HullRepresentationError("hull lost part of its input")
    ok, w = is_closed(result)
    if not ok:
        raise HullRepresentationError(f"hull not closed: {w}")
    ok, w = is_subroot_system(result)
    if not ok:
        raise HullRepresentationError(f"hull not reflection-stable: {w}")
    if cross_check:
        bound = 10 * (L2 // 2)
        w0 = window_of(psi, bound)
        closure = window_subroot_closure(w0, margin=L2)
        if closure != window_of(result, bound):
            raise HullRepresentationError("hull disagrees with the window oracle")


def hull_of_window(w: WindowSubset) -> LeveledSubset:
    """Hull of a finite (possibly aperiodic) symmetric window set.

    Closes at growing bounds until the discovered period stabilizes twice,
    then converts to the periodic representation and re-verifies.
    """
    system = w.system
    peak2 = max(
        (abs(i - w.bound2) for m in w.masks.values() for i in _bits(m)), default=2
    )
    candidate: Optional[dict[RootVector, CosetUnion]] = None
    for scale in (8, 16, 32, 64, 128):
        ext2 = scale * max(peak2, 2)
        wide = WindowSubset(
            system, ext2, {root: m << (ext2 - w.bound2) for root, m in w.masks.items()}
        )
        closure = window_subroot_closure(wide, margin=2 * peak2 + 8)
        found = _detect_periodic(closure, peak2)
        if found is not None and found == candidate:
            result = LeveledSubset(system, candidate)
            okc, _ = is_closed(result)
            oks, _ = is_subroot_system(result)
            if not (okc and oks):
                raise HullRepresentationError("periodic limit fails verification")
            for root, m in w.masks.items():
                for i in _bits(m):
                    if not result.contains_root(root, i - w.bound2):
                        raise HullRepresentationError("periodic limit lost input roots")
            return result
        candidate = found
    raise HullRepresentationError("window hull period did not stabilize")


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _detect_periodic(
    w: WindowSubset, peak2: int
) -> Optional[dict[RootVector, CosetUnion]]:
    safe2 = w.bound2 - 2 * peak2 - 4
    if safe2 <= 4:
        return None
    out: dict[RootVector, CosetUnion] = {}
    for root, mask in w.masks.items():
        levels = {i - w.bound2 for i in _bits(mask)}
        zone = [t for t in range(-safe2, safe2 + 1)]
        present = {t for t in levels if abs(t) <= safe2}
        if not present:
            continue
        hit = None
        for n2 in range(1, safe2 // 3 + 1):
            residues = {t % n2 for t in present}
            if all((t % n2 in residues) == (t in present) for t in zone):
                hit = cosets.normalize(n2, residues)
                break
        if hit is None:
            return None
        out[root] = hit
    return out or None


@dataclass(frozen=True)
class FiberClass:
    kind: str  # "singleton", "infinite" or "unknown"
    description: str = ""


def fiber_class(psi: LeveledSubset) -> FiberClass:
    """Size class of the set of symmetric subsets sharing psi's hull."""
    comps = decompose(psi)
    if len(comps) != 1:
        raise NotIrreducible("fiber classification needs an irreducible subset")
    okc, _ = is_closed(psi)
    oks, _ = is_subroot_system(psi) if is_symmetric(psi) else (False, None)
    if not (okc and oks):
        raise NotSubrootSystem("fiber classification needs a closed subroot system")
    grad_roots = psi.gradient_roots()
    if len(grad_roots) == 2:
        return FiberClass("unknown", "rank-one gradients are not covered")
    norms = {psi.system.gradient.dot(r, r) for r in grad_roots}
    if len(grad_roots) == 8 and len(norms) == 2:
        from .families import TypeIForm, recognize

        form = recognize(psi)
        if isinstance(form, TypeIForm):
            return FiberClass("singleton")
        return FiberClass("infinite", "two-coset families with every even long period")
    return FiberClass("singleton")


def fiber_b2(psi: LeveledSubset, r: int):
    """The two-coset subsets with long period 2*r*n_s hulling back to psi.

    The anchor classes are pinned to those of psi (each further even shift
    of an anchor hulls to the same set as well; the family is reported per
    anchor).  Returns the list of family data, phi(2r) of them.
    """
    from .families import TypeIIForm, TypeIIIB2Form, construct_form, recognize

    if r < 1:
        raise ParameterViolation("r must be a positive integer")
    form = recognize(psi)
    if not isinstance(form, TypeIIForm):
        raise ParameterViolation("fiber enumeration needs the two-period subroot shape")
    if len(form.roots) != 8:
        raise ParameterViolation("fiber enumeration needs a B2-type gradient")
    n_s = form.n_s
    n_ell = 2 * r * n_s
    system = psi.system
    norms = sorted({system.gradient.dot(v, v) for v in form.roots})
    shorts = sorted(
        v for v in form.roots if system.gradient.dot(v, v) == norms[0] and v > negate_root(v)
    )
    u1, u2 = shorts
    anchors = []
    for u in (u1, u2):
        t = psi.levels[u].min_nonneg()  # twice units, coset mod 2*n_s
        true_class = (t // 2) % n_s
        p_true = true_class if true_class % 2 == 0 else true_class + n_s
        anchors.append(2 * p_true)
    out = []
    for a1 in range(1, n_ell):
        if gcd(a1, n_ell) != n_s:
            continue
        a2 = (n_ell - a1) % n_ell
        candidate = TypeIIIB2Form((u1, u2), (anchors[0], anchors[1]), n_ell, a1, a2, _orientation(system))
        built = construct_form(system, candidate)
        hull = subroot_hull(built, cross_check=False)
        if hull != psi:
            raise HullRepresentationError(f"fiber element {a1} does not hull back")
        out.append(candidate)
    if len(out) != euler_phi(2 * r):
        raise HullRepresentationError(
            f"fiber count {len(out)} differs from phi({2 * r}) = {euler_phi(2 * r)}"
        )
    return out


def _orientation(system: AffineRootSystem) -> str:
    return {"Dn+1": "B", "A2n-1": "C", "E6^2": "F4", "A2n": "C"}.get(
        system.affine_type.kind, "B"
    )


def maximal_nonsubroot_example(n_ell: int, a1: int) -> LeveledSubset:
    """The two-coset subset over the full B_2 gradient with coprime odd class.

    Symmetric, not a subroot system, and its hull is the full root system.
    (It fails additive closure; see the library notes on the two-coset
    family.)  Maximality is vacuous: no symmetric closed non-subroot subset
    exists over this gradient, which the small-modulus oracle scan in the
    test suite confirms.
    """
    if n_ell < 4 or n_ell % 2:
        raise ParameterViolation("n_ell must be an even integer >= 4")
    if a1 % 2 == 0:
        raise ParameterViolation("a_1 must be odd")
    if a1 == n_ell // 2:
        raise ParameterViolation("a_1 must differ from n_ell/2")
    if gcd(a1, n_ell) != 1:
        raise ParameterViolation("a_1 must be coprime to n_ell")
    from .families import TypeIIIB2Form, construct_form

    system = build_affine("D3^(2)")
    form = TypeIIIB2Form(((2, 0), (0, 2)), (0, 0), n_ell, a1 % n_ell, (n_ell - a1) % n_ell, "B")
    psi = construct_form(system, form)
    hull = subroot_hull(psi, cross_check=False)
    full = LeveledSubset(
        system, {root: system.lam_of_root(root) for root in system.gradient.roots}
    )
    if hull != full:
        raise HullRepresentationError("example does not hull to the full system")
    return psi
