"""Constructors and the recognizer for the canonical families of symmetric
closed subsets.

Every family dataclass stores enough to rebuild its subset exactly:
moduli and offsets in true level units, anchor values in twice-level
units (so the non-reduced ambient's half-integer anchors stay integral).
``recognize`` inverts ``construct_form`` on every symmetric closed subset
whose gradient has no excluded component.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Union

from . import cosets
from .affine import AffineRootSystem
from .cosets import CosetUnion
from .errors import NotClosed, NotSemiClosed, NotSymmetric, ParameterViolation
from .finite import (
    FiniteSubset,
    LengthClass,
    RootVector,
    decompose_finite,
    expand_in_base,
    is_closed_finite,
    is_semiclosed_finite,
    is_subroot_finite,
    negate_root,
    _span_rank,
)
from .subsets import (
    GradientStatus,
    LeveledSubset,
    LinearLevels,
    closure_witness,
    decompose,
    gradient_status,
    is_closed,
    is_symmetric,
    union_subsets,
    vec_add,
)


# ---------------------------------------------------------------------------
# form dataclasses


@dataclass(frozen=True)
class TypeIComponent:
    """One irreducible piece with a single level class p_alpha + nZ per root."""

    roots: tuple[RootVector, ...]
    anchor_roots: tuple[RootVector, ...]
    anchor_values: tuple[int, ...]  # twice-levels
    n: int  # true modulus

    def linear(self) -> LinearLevels:
        return LinearLevels(self.anchor_roots, self.anchor_values)


@dataclass(frozen=True)
class TypeIForm:
    components: tuple[TypeIComponent, ...]

    family = "TypeI"


@dataclass(frozen=True)
class TypeIIForm:
    """Shorts at p + n_s Z, longs at p + m n_s Z, one irreducible gradient."""

    roots: tuple[RootVector, ...]
    anchor_roots: tuple[RootVector, ...]
    anchor_values: tuple[int, ...]
    n_s: int  # true modulus of the short classes

    family = "TypeII"

    def linear(self) -> LinearLevels:
        return LinearLevels(self.anchor_roots, self.anchor_values)


@dataclass(frozen=True)
class TypeIIIB2Form:
    """The two-coset family on a B_2-type gradient.

    Symmetric by construction; additively closed only in the boundary case
    a_1 = a_2 = n_ell/2, and a subroot system exactly there (where it is
    the TypeII shape with n_s = n_ell/2; ``recognize`` reports it so).
    """

    short_pair: tuple[RootVector, RootVector]
    p: tuple[int, int]  # twice-levels at the two positive shorts, both ≡ 0 mod 4
    n_ell: int  # true, even
    a1: int
    a2: int
    orientation: str  # "B", "C" or "F4", by the ambient realization

    family = "TypeIIIB2"


@dataclass(frozen=True)
class DnSemiClosedForm:
    """Two parity-split B-parts plus a closed subroot remainder of long roots."""

    j_even: tuple[int, ...]
    j_odd: tuple[int, ...]
    b_even: TypeIComponent
    b_odd: TypeIComponent
    long_components: tuple[TypeIComponent, ...]

    family = "DnSemiClosed"


@dataclass(frozen=True)
class A2nMinus1SemiClosedForm:
    """Split by I = {i : 2eps_i present}: a closed-gradient part on I and a
    type-D long-root part off I."""

    I: tuple[int, ...]
    inner: Optional["ClassifiedForm"]
    d_components: tuple[TypeIComponent, ...]

    family = "A2nMinus1SemiClosed"


@dataclass(frozen=True)
class D43Form:
    """Short-root family of the order-3 twist: levels r-periodic with
    residues (shift, shift+ell, ell) on (eps_i-eps_j, eps_i-eps_k, eps_j-eps_k).

    shift ≡ 0 (mod 3) and ell !≡ 0 (mod 3); the shift parameter covers the
    sets whose 3Z-class root is pinned away from 0 mod r.
    """

    perm: tuple[int, int, int]
    r: int
    ell: int
    shift: int = 0

    family = "D43Form"


@dataclass(frozen=True)
class E62FormI2:
    I: tuple[int, int]
    mu: RootVector
    anchor_roots: tuple[RootVector, ...]
    anchor_values: tuple[int, ...]
    n: int

    family = "E62Form"
    case = 2

    def linear(self) -> LinearLevels:
        return LinearLevels(self.anchor_roots, self.anchor_values)


@dataclass(frozen=True)
class E62FormI4:
    j1: tuple[int, int]
    j2: tuple[int, int]
    anchor_values: tuple[int, int, int, int]  # twice-levels at eps_1..eps_4
    n: int

    family = "E62Form"
    case = 4


@dataclass(frozen=True)
class E62FormI0:
    pair0: tuple[RootVector, RootVector]  # special shorts, even levels
    pair1: tuple[RootVector, RootVector]  # special shorts, odd levels
    p0: tuple[int, int]
    p1: tuple[int, int]
    m0: int
    m1: int

    family = "E62Form"
    case = 0


@dataclass(frozen=True)
class PsiTauForm:
    I: tuple[int, ...]
    J: tuple[int, ...]
    tau: int
    p: tuple[int, ...]  # twice-levels (odd) at eps_i for i in I

    family = "PsiTau"


@dataclass(frozen=True)
class PsiKForm:
    I: tuple[int, ...]
    k: int
    p: tuple[int, ...]

    family = "PsiK"


@dataclass(frozen=True)
class UnionForm:
    """Orthogonal union of per-component forms (mixed BC or TypeII+long cases)."""

    parts: tuple["ClassifiedForm", ...]

    family = "Union"


@dataclass(frozen=True)
class Unclassified:
    reason: str
    detail: str = ""

    family = "Unclassified"


ClassifiedForm = Union[
    TypeIForm,
    TypeIIForm,
    TypeIIIB2Form,
    DnSemiClosedForm,
    A2nMinus1SemiClosedForm,
    D43Form,
    E62FormI2,
    E62FormI4,
    E62FormI0,
    PsiTauForm,
    PsiKForm,
    UnionForm,
    Unclassified,
]


# ---------------------------------------------------------------------------
# small helpers


def _eps(system: AffineRootSystem, i: int) -> RootVector:
    v = [0] * system.gradient.dim
    v[i - 1] = 2
    return tuple(v)


def _require(cond: bool, constraint: str) -> None:
    if not cond:
        raise ParameterViolation(constraint)


def _base_for_span(roots: list[RootVector]) -> list[RootVector]:
    """Indecomposable positive roots; assumes an abstract subroot system."""
    big = 2 * max(abs(c) for v in roots for c in v) + 1
    dim = len(roots[0])

    def functional(v: RootVector) -> int:
        return sum(c * big ** (dim - 1 - i) for i, c in enumerate(v))

    positives = sorted(v for v in roots if functional(v) > 0)
    pos_set = set(positives)
    base = [
        v
        for v in positives
        if not any(tuple(a - b for a, b in zip(v, u)) in pos_set for u in positives if u != v)
    ]
    assert len(base) == _span_rank(roots)
    return base


def _component_levels(comp: TypeIComponent, system: AffineRootSystem) -> dict[RootVector, CosetUnion]:
    _require(comp.n >= 1, "component modulus must be positive")
    lin = comp.linear()
    out = {}
    for root in comp.roots:
        p = lin.value_of(root)
        cu = cosets.coset(p, 2 * comp.n)
        _require(
            cosets.is_subset(cu, system.lam_of_root(root)),
            f"levels of {root} escape the level lattice (n={comp.n})",
        )
        out[root] = cu
    return out


def _check_closed(psi: LeveledSubset) -> LeveledSubset:
    w = closure_witness(psi)
    if w is not None:
        raise ParameterViolation(
            f"parameters produce a non-closed set: {w.alpha}+{w.beta} -> {w.total} misses {w.missing}"
        )
    return psi


def _norm_split(system: AffineRootSystem, roots: tuple[RootVector, ...]):
    norms = sorted({system.gradient.dot(r, r) for r in roots})
    by_norm = {n: [r for r in roots if system.gradient.dot(r, r) == n] for n in norms}
    return norms, by_norm


# ---------------------------------------------------------------------------
# construct_form


def construct_form(system: AffineRootSystem, form: ClassifiedForm) -> LeveledSubset:
    """Materialize a family datum as a LeveledSubset, validating its constraints."""
    if isinstance(form, TypeIForm):
        levels: dict[RootVector, CosetUnion] = {}
        for comp in form.components:
            for root, cu in _component_levels(comp, system).items():
                _require(root not in levels, "components must be disjoint")
                levels[root] = cu
        return _check_closed(LeveledSubset(system, levels))
    if isinstance(form, TypeIIForm):
        return _construct_type2(system, form)
    if isinstance(form, TypeIIIB2Form):
        return _construct_type3(system, form)
    if isinstance(form, DnSemiClosedForm):
        return _construct_dn_semiclosed(system, form)
    if isinstance(form, A2nMinus1SemiClosedForm):
        return _construct_a2nm1(system, form)
    if isinstance(form, D43Form):
        return _construct_d43(system, form)
    if isinstance(form, E62FormI2):
        return _construct_e62_i2(system, form)
    if isinstance(form, E62FormI4):
        return _construct_e62_i4(system, form)
    if isinstance(form, E62FormI0):
        return _construct_e62_i0(system, form)
    if isinstance(form, PsiTauForm):
        return _construct_psi_tau(system, form)
    if isinstance(form, PsiKForm):
        return _construct_psi_k(system, form)
    if isinstance(form, UnionForm):
        parts = [construct_form(system, p) for p in form.parts]
        out = parts[0]
        for p in parts[1:]:
            out = union_subsets(out, p)
        return _check_closed(out)
    raise ParameterViolation(f"cannot construct {form!r}")


def _construct_type2(system: AffineRootSystem, form: TypeIIForm) -> LeveledSubset:
    m = system.m
    _require(form.n_s >= 1, "n_s must be positive")
    _require(form.n_s % m != 0, "n_s must not be divisible by the lacing number")
    norms, by_norm = _norm_split(system, form.roots)
    _require(len(norms) == 2, "TypeII needs a two-length gradient")
    _require(norms[1] == m * norms[0], "length ratio must match the lacing number")
    lin = form.linear()
    levels = {}
    for root in form.roots:
        p = lin.value_of(root)
        n_true = form.n_s if system.gradient.dot(root, root) == norms[0] else m * form.n_s
        cu = cosets.coset(p, 2 * n_true)
        _require(
            cosets.is_subset(cu, system.lam_of_root(root)),
            f"levels of {root} escape the level lattice",
        )
        levels[root] = cu
    return _check_closed(LeveledSubset(system, levels))


def _construct_type3(system: AffineRootSystem, form: TypeIIIB2Form) -> LeveledSubset:
    u1, u2 = form.short_pair
    grad = system.gradient
    _require(u1 in grad and u2 in grad, "short pair must be gradient roots")
    _require(grad.dot(u1, u2) == 0, "short pair must be orthogonal")
    plus, minus = vec_add(u1, u2), vec_add(u1, negate_root(u2))
    _require(plus in grad and minus in grad, "u1 +- u2 must be roots")
    _require(form.n_ell >= 2 and form.n_ell % 2 == 0, "n_ell must be even and positive")
    for a in (form.a1, form.a2):
        _require(0 <= a < form.n_ell, "a_i must lie in [0, n_ell)")
        _require(a % 2 == 1, "a_i must be odd")
    _require((form.a1 + form.a2) % form.n_ell == 0, "a_1 + a_2 must vanish mod n_ell")
    p1, p2 = form.p
    _require(p1 % 4 == 0 and p2 % 4 == 0, "anchors at the shorts must be even levels")
    two_n = 2 * form.n_ell
    levels = {
        u1: cosets.shift(cosets.normalize(two_n, [0, 2 * form.a1]), p1),
        negate_root(u1): cosets.shift(cosets.normalize(two_n, [0, 2 * form.a2]), -p1),
        u2: cosets.shift(cosets.normalize(two_n, [0, 2 * form.a2]), p2),
        negate_root(u2): cosets.shift(cosets.normalize(two_n, [0, 2 * form.a1]), -p2),
        plus: cosets.coset(p1 + p2, two_n),
        negate_root(plus): cosets.coset(-p1 - p2, two_n),
        minus: cosets.coset(p1 - p2, two_n),
        negate_root(minus): cosets.coset(p2 - p1, two_n),
    }
    # Knowingly no closure check: the family is additively closed only in the
    # boundary case a_1 = a_2 = n_ell/2.
    return LeveledSubset(system, levels)


def _construct_dn_semiclosed(system: AffineRootSystem, form: DnSemiClosedForm) -> LeveledSubset:
    _require(system.affine_type.kind == "Dn+1", "family lives over a B-type gradient")
    _require(bool(form.j_even) and bool(form.j_odd), "both parity parts must be nonempty")
    _require(not set(form.j_even) & set(form.j_odd), "parity parts must be disjoint")
    used = set(form.j_even) | set(form.j_odd)
    levels: dict[RootVector, CosetUnion] = {}
    for comp, parity in ((form.b_even, 0), (form.b_odd, 2)):
        comp_levels = _component_levels(comp, system)
        _require(comp.n % 2 == 0, "B-part moduli must be even")
        for root, cu in comp_levels.items():
            if system.length_of(root) == LengthClass.SHORT:
                _require(
                    all(t % 4 == parity for t in cu.residues),
                    "short levels must respect the parity split",
                )
            levels[root] = cu
    for comp in form.long_components:
        for root, cu in _component_levels(comp, system).items():
            _require(
                system.length_of(root) == LengthClass.LONG,
                "remainder components must consist of long roots",
            )
            _require(
                all(c == 0 for idx in used for c in [root[idx - 1]]),
                "remainder must avoid the parity-part indices",
            )
            _require(root not in levels, "components must be disjoint")
            levels[root] = cu
    psi = _check_closed(LeveledSubset(system, levels))
    _require(
        is_semiclosed_finite(psi.gradient()), "gradient of the assembled set must be semi-closed"
    )
    return psi


def _construct_a2nm1(system: AffineRootSystem, form: A2nMinus1SemiClosedForm) -> LeveledSubset:
    _require(system.affine_type.kind == "A2n-1", "family lives over a C-type gradient")
    n = system.gradient.rank
    _require(set(form.I) <= set(range(1, n + 1)), "I out of range")
    _require(len(set(form.I)) < n, "I must be a proper index subset")
    pieces = []
    if form.inner is not None:
        inner = construct_form(system, form.inner)
        for root in inner.levels:
            support = {i + 1 for i, c in enumerate(root) if c}
            _require(support <= set(form.I), "inner part must be supported on I")
        pieces.append(inner)
    for comp in form.d_components:
        for root in comp.roots:
            support = {i + 1 for i, c in enumerate(root) if c}
            _require(not support & set(form.I), "long part must avoid I")
            _require(
                system.length_of(root) == LengthClass.SHORT and len(support) == 2,
                "long part consists of eps_i +- eps_j roots",
            )
        pieces.append(LeveledSubset(system, _component_levels(comp, system)))
    _require(bool(pieces), "form is empty")
    psi = pieces[0]
    for extra in pieces[1:]:
        psi = union_subsets(psi, extra)
    psi = _check_closed(psi)
    _require(
        is_semiclosed_finite(psi.gradient()), "gradient of the assembled set must be semi-closed"
    )
    return psi


def _d43_root(system: AffineRootSystem, i: int, j: int) -> RootVector:
    v = [0, 0, 0]
    v[i - 1], v[j - 1] = 2, -2
    return tuple(v)


def _construct_d43(system: AffineRootSystem, form: D43Form) -> LeveledSubset:
    _require(system.affine_type.kind == "D4^3", "family lives over the order-3 twist")
    _require(sorted(form.perm) == [1, 2, 3], "perm must be a permutation of (1,2,3)")
    _require(form.r > 0 and form.r % 3 == 0, "r must be a positive multiple of 3")
    _require(0 <= form.ell < form.r and form.ell % 3 != 0, "ell must avoid 0 mod 3")
    _require(0 <= form.shift < form.r and form.shift % 3 == 0, "shift must be 0 mod 3")
    i, j, k = form.perm
    two_r = 2 * form.r
    levels: dict[RootVector, CosetUnion] = {}
    for (a, b), t in (
        ((i, j), 2 * form.shift),
        ((j, k), 2 * form.ell),
        ((i, k), 2 * (form.shift + form.ell)),
    ):
        levels[_d43_root(system, a, b)] = cosets.coset(t, two_r)
        levels[_d43_root(system, b, a)] = cosets.coset(-t, two_r)
    return _check_closed(LeveledSubset(system, levels))


def _special_shorts(system: AffineRootSystem) -> list[RootVector]:
    return [r for r in system.gradient.roots if all(abs(c) == 1 for c in r)]


def _d_mu_family(system: AffineRootSystem, mu: RootVector, I: tuple[int, ...]) -> set[RootVector]:
    out: set[RootVector] = set()
    for i in I:
        out |= {_eps(system, i), negate_root(_eps(system, i))}
    idx = [i - 1 for i in I]
    for signs in itertools.product((1, -1), repeat=len(idx)):
        v = list(mu)
        for pos, s in zip(idx, signs):
            v[pos] = s
        out |= {tuple(v), negate_root(tuple(v))}
    return out


def _construct_e62_i2(system: AffineRootSystem, form: E62FormI2) -> LeveledSubset:
    _require(system.affine_type.kind == "E6^2", "family lives over the F4 gradient")
    _require(len(form.I) == 2 and all(1 <= i <= 4 for i in form.I), "I must be two indices")
    _require(all(abs(c) == 1 for c in form.mu), "mu must be a special short root")
    _require(form.n >= 2 and form.n % 2 == 0, "n must be even and positive")
    roots = tuple(sorted(_d_mu_family(system, form.mu, form.I)))
    lin = form.linear()
    pi, pj = (lin.value_of(_eps(system, i)) for i in form.I)
    _require((pi + pj) % 4 == 2, "anchors at eps_i, eps_j must have opposite parity")
    comp = TypeIComponent(roots, form.anchor_roots, form.anchor_values, form.n)
    psi = _check_closed(LeveledSubset(system, _component_levels(comp, system)))
    _require(is_semiclosed_finite(psi.gradient()), "gradient must be semi-closed")
    return psi


def _construct_e62_i4(system: AffineRootSystem, form: E62FormI4) -> LeveledSubset:
    _require(system.affine_type.kind == "E6^2", "family lives over the F4 gradient")
    _require(sorted(form.j1 + form.j2) == [1, 2, 3, 4], "J_1, J_2 must partition the indices")
    _require(form.n >= 2 and form.n % 2 == 0, "n must be even and positive")
    for idx, t in enumerate(form.anchor_values, start=1):
        want = 0 if idx in form.j1 else 2
        _require(t % 4 == want, "anchor parities must follow the partition")
    anchors = tuple(_eps(system, i) for i in (1, 2, 3, 4))
    roots = set()
    for r in system.gradient.roots:
        if system.length_of(r) == LengthClass.SHORT:
            roots.add(r)
        else:
            support = tuple(sorted(i + 1 for i, c in enumerate(r) if c))
            if support == tuple(sorted(form.j1)) or support == tuple(sorted(form.j2)):
                roots.add(r)
    comp = TypeIComponent(tuple(sorted(roots)), anchors, form.anchor_values, form.n)
    psi = _check_closed(LeveledSubset(system, _component_levels(comp, system)))
    _require(is_semiclosed_finite(psi.gradient()), "gradient must be semi-closed")
    return psi


def _construct_e62_i0(system: AffineRootSystem, form: E62FormI0) -> LeveledSubset:
    _require(system.affine_type.kind == "E6^2", "family lives over the F4 gradient")
    quad = form.pair0 + form.pair1
    _require(all(all(abs(c) == 1 for c in mu) for mu in quad), "pairs must be special shorts")
    for a, b in itertools.combinations(quad, 2):
        _require(system.gradient.dot(a, b) == 0, "the four specials must be orthogonal")
    _require(all(t % 4 == 0 for t in form.p0), "pair0 anchors must be even levels")
    _require(all(t % 4 == 2 for t in form.p1), "pair1 anchors must be odd levels")
    _require(form.m0 % 2 == 0 and form.m0 >= 2, "m0 must be even")
    _require(form.m1 % 2 == 0 and form.m1 >= 2, "m1 must be even")
    levels: dict[RootVector, CosetUnion] = {}
    for (mu_a, mu_b), (pa, pb), n in (
        (form.pair0, form.p0, form.m0),
        (form.pair1, form.p1, form.m1),
    ):
        comp_roots = sorted(
            {mu_a, mu_b, vec_add(mu_a, mu_b), vec_add(mu_a, negate_root(mu_b))}
            | {negate_root(v) for v in
               {mu_a, mu_b, vec_add(mu_a, mu_b), vec_add(mu_a, negate_root(mu_b))}}
        )
        comp = TypeIComponent(tuple(comp_roots), (mu_a, mu_b), (pa, pb), n)
        levels.update(_component_levels(comp, system))
    psi = _check_closed(LeveledSubset(system, levels))
    _require(is_semiclosed_finite(psi.gradient()), "gradient must be semi-closed")
    return psi


def _b_i_roots(system: AffineRootSystem, I: tuple[int, ...]) -> list[RootVector]:
    out = []
    for i in I:
        out += [_eps(system, i), negate_root(_eps(system, i))]
    for i, j in itertools.combinations(sorted(I), 2):
        for si in (1, -1):
            for sj in (1, -1):
                v = [0] * system.gradient.dim
                v[i - 1], v[j - 1] = 2 * si, 2 * sj
                out.append(tuple(v))
    return out


def _construct_psi_tau(system: AffineRootSystem, form: PsiTauForm) -> LeveledSubset:
    _require(system.affine_type.kind == "A2n", "family lives over the non-reduced gradient")
    _require(bool(form.I), "I must be nonempty")
    _require(form.tau >= 2 and form.tau % 2 == 0, "tau must be a positive even integer")
    _require(set(form.J) <= set(form.I), "J must be a subset of I")
    _require(len(form.p) == len(form.I), "one anchor per index")
    lin_anchors, lin_values = [], []
    for i, t in zip(form.I, form.p):
        _require(t % 2 == 1, "short anchors are half-integer levels")
        want = 1 if i in form.J else 3
        _require(t % 4 == want, "anchor classes must follow J")
        lin_anchors.append(_eps(system, i))
        lin_values.append(t)
    comp = TypeIComponent(
        tuple(sorted(_b_i_roots(system, form.I))), tuple(lin_anchors), tuple(lin_values), form.tau
    )
    psi = _check_closed(LeveledSubset(system, _component_levels(comp, system)))
    return psi


def _construct_psi_k(system: AffineRootSystem, form: PsiKForm) -> LeveledSubset:
    _require(system.affine_type.kind == "A2n", "family lives over the non-reduced gradient")
    _require(bool(form.I), "I must be nonempty")
    _require(form.k >= 1 and form.k % 2 == 1, "k must be a positive odd integer")
    _require(len(form.p) == len(form.I), "one anchor per index")
    _require(all(t % 2 == 1 for t in form.p), "short anchors are half-integer levels")
    lin = LinearLevels(tuple(_eps(system, i) for i in form.I), form.p)
    levels: dict[RootVector, CosetUnion] = {}
    for root in _b_i_roots(system, form.I):
        levels[root] = cosets.coset(lin.value_of(root), 2 * form.k)
    for i, t in zip(form.I, form.p):
        div = tuple(2 * c for c in _eps(system, i))
        levels[div] = cosets.coset(2 * t + 2 * form.k, 4 * form.k)
        levels[negate_root(div)] = cosets.coset(-2 * t - 2 * form.k, 4 * form.k)
    return _check_closed(LeveledSubset(system, levels))


# ---------------------------------------------------------------------------
# recognition


def recognize(psi: LeveledSubset) -> ClassifiedForm:
    """Identify the canonical family of a symmetric closed subset.

    Output round-trips: construct_form(system, recognize(psi)) == psi for
    every recognized form.  Subsets with a gradient component consisting of
    a single +- pair (outside the non-reduced ambient's short pairs) are
    reported Unclassified("A1Component").
    """
    if not is_symmetric(psi):
        raise NotSymmetric("recognition needs a symmetric subset")
    ok, w = is_closed(psi)
    if not ok:
        raise NotClosed(repr(w))
    if psi.is_empty():
        return TypeIForm(())
    kind = psi.system.affine_type.kind
    comps = decompose(psi)
    if kind == "A2n":
        return _finish(psi, _recognize_bc(psi, comps))
    for c in comps:
        if len(c.levels) == 2:
            return Unclassified("A1Component", repr(min(c.levels)))
    status = gradient_status(psi)
    if status is GradientStatus.CLOSED:
        return _finish(psi, _recognize_closed(psi, comps))
    if status is GradientStatus.SEMI_CLOSED:
        if kind == "Dn+1":
            form = _recognize_dn(psi, comps)
        elif kind == "A2n-1":
            form = _recognize_a2nm1(psi, comps)
        elif kind == "D4^3":
            form = _recognize_d43(psi)
        elif kind == "E6^2":
            form = _recognize_e62(psi, comps)
        else:
            return Unclassified("SemiClosedGradientOnUntwistedAmbient")
        return _finish(psi, form)
    return Unclassified("GradientNeitherClosedNorSemiClosed")


def _finish(psi: LeveledSubset, form: ClassifiedForm) -> ClassifiedForm:
    if isinstance(form, Unclassified):
        return form
    rebuilt = construct_form(psi.system, form)
    if rebuilt != psi:
        return Unclassified("ReconstructionMismatch", repr(form))
    return form


def _try_type1_component(c: LeveledSubset) -> Optional[TypeIComponent]:
    cus = list(c.levels.values())
    mods = {cu.modulus for cu in cus}
    if len(mods) != 1 or any(len(cu.residues) != 1 for cu in cus):
        return None
    n2 = mods.pop()
    if n2 % 2:
        return None
    roots = tuple(sorted(c.levels))
    base = tuple(_base_for_span(list(roots)))
    values = tuple(c.levels[b].min_nonneg() for b in base)
    comp = TypeIComponent(roots, base, values, n2 // 2)
    lin = comp.linear()
    for r in roots:
        if c.levels[r] != cosets.coset(lin.value_of(r), n2):
            return None
    return comp


def _try_type2(c: LeveledSubset) -> Optional[TypeIIForm]:
    system = c.system
    m = system.m
    roots = tuple(sorted(c.levels))
    norms, by_norm = _norm_split(system, roots)
    if len(norms) != 2 or norms[1] != m * norms[0]:
        return None
    cus = list(c.levels.values())
    if any(len(cu.residues) != 1 for cu in cus):
        return None
    short_mods = {c.levels[r].modulus for r in by_norm[norms[0]]}
    long_mods = {c.levels[r].modulus for r in by_norm[norms[1]]}
    if len(short_mods) != 1 or len(long_mods) != 1:
        return None
    n2 = short_mods.pop()
    if n2 % 2 or long_mods.pop() != m * n2:
        return None
    n_s = n2 // 2
    if n_s % m == 0:
        return None
    base = tuple(_base_for_span(list(roots)))
    values = tuple(c.levels[b].min_nonneg() for b in base)
    form = TypeIIForm(roots, base, values, n_s)
    lin = form.linear()
    for r in roots:
        n_true = n_s if system.gradient.dot(r, r) == norms[0] else m * n_s
        if c.levels[r] != cosets.coset(lin.value_of(r), 2 * n_true):
            return None
    return form


def _recognize_closed(psi: LeveledSubset, comps: list[LeveledSubset]) -> ClassifiedForm:
    parts: list[ClassifiedForm | TypeIComponent] = []
    for c in comps:
        t1 = _try_type1_component(c)
        if t1 is not None:
            parts.append(t1)
            continue
        t2 = _try_type2(c)
        if t2 is not None:
            parts.append(t2)
            continue
        return Unclassified("UnrecognizedClosedComponent", repr(min(c.levels)))
    if all(isinstance(p, TypeIComponent) for p in parts):
        return TypeIForm(tuple(parts))  # type: ignore[arg-type]
    if len(parts) == 1:
        return parts[0]  # type: ignore[return-value]
    wrapped = tuple(
        TypeIForm((p,)) if isinstance(p, TypeIComponent) else p for p in parts
    )
    return UnionForm(wrapped)


def _recognize_dn(psi: LeveledSubset, comps: list[LeveledSubset]) -> ClassifiedForm:
    system = psi.system
    j_even, j_odd = [], []
    for root in psi.gradient_roots():
        if system.length_of(root) != LengthClass.SHORT:
            continue
        idx = next(i + 1 for i, cc in enumerate(root) if cc)
        if root[idx - 1] < 0:
            continue
        residues = psi.levels[root].residues
        if all(t % 4 == 0 for t in residues):
            j_even.append(idx)
        elif all(t % 4 == 2 for t in residues):
            j_odd.append(idx)
        else:
            return Unclassified("MixedParityShort", repr(root))
    if not j_even or not j_odd:
        return Unclassified("MissingParityClass")
    b_parts: dict[int, TypeIComponent] = {}
    long_comps = []
    for c in comps:
        support = {i + 1 for r in c.levels for i, cc in enumerate(r) if cc}
        has_short = any(system.length_of(r) == LengthClass.SHORT for r in c.levels)
        comp_form = _try_type1_component(c)
        if comp_form is None:
            return Unclassified("UnrecognizedComponent", repr(min(c.levels)))
        if has_short:
            if support == set(j_even):
                b_parts[0] = comp_form
            elif support == set(j_odd):
                b_parts[2] = comp_form
            else:
                return Unclassified("ShortComponentOffParts", repr(sorted(support)))
        else:
            if support & (set(j_even) | set(j_odd)):
                return Unclassified("LongComponentTouchingParts")
            long_comps.append(comp_form)
    if 0 not in b_parts or 2 not in b_parts:
        return Unclassified("MissingBPart")
    return DnSemiClosedForm(
        tuple(sorted(j_even)), tuple(sorted(j_odd)), b_parts[0], b_parts[2], tuple(long_comps)
    )


def _recognize_a2nm1(psi: LeveledSubset, comps: list[LeveledSubset]) -> ClassifiedForm:
    system = psi.system
    I = sorted(
        i + 1
        for i in range(system.gradient.dim)
        if tuple(4 if j == i else 0 for j in range(system.gradient.dim)) in psi.levels
    )
    inner_comps, d_comps = [], []
    for c in comps:
        support = {i + 1 for r in c.levels for i, cc in enumerate(r) if cc}
        if support <= set(I):
            inner_comps.append(c)
        elif not support & set(I):
            d_comps.append(c)
        else:
            return Unclassified("ComponentStraddlingI", repr(sorted(support)))
    inner_form: Optional[ClassifiedForm] = None
    if inner_comps:
        inner_union = inner_comps[0]
        for extra in inner_comps[1:]:
            inner_union = union_subsets(inner_union, extra)
        inner_form = _recognize_closed(inner_union, inner_comps)
        if isinstance(inner_form, Unclassified):
            return inner_form
    d_forms = []
    for c in d_comps:
        f = _try_type1_component(c)
        if f is None:
            return Unclassified("UnrecognizedComponent", repr(min(c.levels)))
        d_forms.append(f)
    return A2nMinus1SemiClosedForm(tuple(I), inner_form, tuple(d_forms))


def _recognize_d43(psi: LeveledSubset) -> ClassifiedForm:
    system = psi.system
    shorts = {
        r for r in system.gradient.roots if system.length_of(r) == LengthClass.SHORT
    }
    if set(psi.levels) != shorts:
        return Unclassified("GradientNotShortRoots")
    mods = {cu.modulus for cu in psi.levels.values()}
    if len(mods) != 1 or any(len(cu.residues) != 1 for cu in psi.levels.values()):
        return Unclassified("LevelsNotSingleCosets")
    n2 = mods.pop()
    r_true = n2 // 2
    if r_true % 3:
        return Unclassified("ModulusNotMultipleOfThree")
    candidates = []
    for perm in itertools.permutations((1, 2, 3)):
        i, j, k = perm
        t_ij = psi.levels[_d43_root(system, i, j)].min_nonneg()
        shift = (t_ij // 2) % r_true
        if shift % 3:
            continue
        ell = (psi.levels[_d43_root(system, j, k)].min_nonneg() // 2) % r_true
        if ell % 3 == 0:
            continue
        if psi.levels[_d43_root(system, i, k)] != cosets.coset(2 * (shift + ell), n2):
            continue
        candidates.append(D43Form(perm, r_true, ell, shift))
    if not candidates:
        return Unclassified("NoPermutationFits")
    return min(candidates, key=lambda f: (f.perm, f.shift, f.ell))


def _recognize_e62(psi: LeveledSubset, comps: list[LeveledSubset]) -> ClassifiedForm:
    system = psi.system
    I = tuple(sorted(i for i in (1, 2, 3, 4) if _eps(system, i) in psi.levels))
    if len(I) % 2:
        return Unclassified("OddShortUnitCount", repr(I))
    if len(I) == 2:
        if len(comps) != 1:
            return Unclassified("UnexpectedComponents")
        specials = sorted(r for r in psi.levels if all(abs(cc) == 1 for cc in r))
        if not specials:
            return Unclassified("NoSpecialShort")
        mu = specials[0]
        if set(psi.levels) != _d_mu_family(system, mu, I):
            return Unclassified("GradientNotDmuFamily")
        comp = _try_type1_component(psi)
        if comp is None:
            return Unclassified("LevelsNotSingleCosets")
        anchors = (_eps(system, I[0]), _eps(system, I[1]), mu)
        values = tuple(psi.levels[a].min_nonneg() for a in anchors)
        return E62FormI2(I, mu, anchors, values, comp.n)
    if len(I) == 4:
        j1, j2 = [], []
        for i in I:
            residues = psi.levels[_eps(system, i)].residues
            if all(t % 4 == 0 for t in residues):
                j1.append(i)
            elif all(t % 4 == 2 for t in residues):
                j2.append(i)
            else:
                return Unclassified("MixedParityShort", repr(i))
        if len(j1) != 2 or len(j2) != 2:
            return Unclassified("BadParityPartition", repr((j1, j2)))
        comp = _try_type1_component(psi)
        if comp is None:
            return Unclassified("LevelsNotSingleCosets")
        values = tuple(psi.levels[_eps(system, i)].min_nonneg() for i in (1, 2, 3, 4))
        return E62FormI4(tuple(j1), tuple(j2), values, comp.n)
    if len(comps) != 2:
        return Unclassified("ExpectedTwoComponents")
    pair_data = []
    for c in comps:
        pos_specials = sorted(
            r for r in c.levels if all(abs(cc) == 1 for cc in r) and r > negate_root(r)
        )
        if len(pos_specials) != 2:
            return Unclassified("ComponentNotSpecialB2")
        comp_form = _try_type1_component(c)
        if comp_form is None:
            return Unclassified("LevelsNotSingleCosets")
        t = tuple(c.levels[mu].min_nonneg() for mu in pos_specials)
        pair_data.append((tuple(pos_specials), t, comp_form.n))
    evens = [d for d in pair_data if all(v % 4 == 0 for v in d[1])]
    odds = [d for d in pair_data if all(v % 4 == 2 for v in d[1])]
    if len(evens) != 1 or len(odds) != 1:
        return Unclassified("BadComponentParities")
    (pair0, p0, m0), (pair1, p1, m1) = evens[0], odds[0]
    return E62FormI0(pair0, pair1, p0, p1, m0, m1)


def _recognize_bc(psi: LeveledSubset, comps: list[LeveledSubset]) -> ClassifiedForm:
    system = psi.system
    parts: list[ClassifiedForm | TypeIComponent] = []
    short_seen = False
    for c in comps:
        has_short = any(system.length_of(r) == LengthClass.SHORT for r in c.levels)
        if has_short:
            if short_seen:
                return Unclassified("MultipleShortComponents")
            short_seen = True
            f = _recognize_bc_short(system, c)
            if isinstance(f, Unclassified):
                return f
            parts.append(f)
            continue
        if len(c.levels) == 2:
            return Unclassified("A1Component", repr(min(c.levels)))
        t1 = _try_type1_component(c)
        if t1 is not None:
            parts.append(t1)
            continue
        t2 = _try_type2(c)
        if t2 is not None:
            parts.append(t2)
            continue
        return Unclassified("UnrecognizedComponent", repr(min(c.levels)))
    if len(parts) == 1 and not isinstance(parts[0], TypeIComponent):
        return parts[0]  # type: ignore[return-value]
    if all(isinstance(p, TypeIComponent) for p in parts):
        return TypeIForm(tuple(parts))  # type: ignore[arg-type]
    wrapped = tuple(
        TypeIForm((p,)) if isinstance(p, TypeIComponent) else p for p in parts
    )
    return UnionForm(wrapped)


def _recognize_bc_short(system: AffineRootSystem, c: LeveledSubset) -> ClassifiedForm:
    I = tuple(
        sorted(i for i in range(1, system.gradient.dim + 1) if _eps(system, i) in c.levels)
    )
    shorts = {i: c.levels[_eps(system, i)] for i in I}
    class_counts = {i: len(cu.residues_mod(4)) for i, cu in shorts.items()}
    counts = set(class_counts.values())
    if len(counts) != 1:
        return Unclassified("MixedShortClassCounts", repr(class_counts))
    count = counts.pop()
    if count == 1:
        if any(len(cu.residues) != 1 for cu in shorts.values()):
            return Unclassified("LevelsNotSingleCosets")
        mods = {cu.modulus for cu in shorts.values()}
        if len(mods) != 1:
            return Unclassified("MixedModuli")
        tau = mods.pop() // 2
        expected = set(_b_i_roots(system, I))
        if set(c.levels) != expected:
            return Unclassified("GradientNotBI")
        p = tuple(shorts[i].min_nonneg() for i in I)
        J = tuple(i for i, t in zip(I, p) if t % 4 == 1)
        return PsiTauForm(I, J, tau, p)
    if count == 2:
        if any(len(cu.residues) != 1 for cu in shorts.values()):
            return Unclassified("LevelsNotSingleCosets")
        mods = {cu.modulus for cu in shorts.values()}
        if len(mods) != 1:
            return Unclassified("MixedModuli")
        k = mods.pop() // 2
        if k % 2 == 0:
            return Unclassified("EvenShortModulus")
        expected = set(_b_i_roots(system, I)) | {
            s
            for i in I
            for s in (
                tuple(2 * cc for cc in _eps(system, i)),
                negate_root(tuple(2 * cc for cc in _eps(system, i))),
            )
        }
        if set(c.levels) != expected:
            return Unclassified("GradientNotBCI")
        p = tuple(shorts[i].min_nonneg() for i in I)
        return PsiKForm(I, k, p)
    return Unclassified("ImpossibleShortClasses")
