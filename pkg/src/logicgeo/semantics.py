"""Value-set semantics: each formula of sort X denotes a subset of H^X.

Value sets are dense boolean arrays indexed like their point space.  The
evaluation map val is compositional: equalities compare term value columns,
connectives are pointwise boolean algebra, the existential quantifier is a
cylindrification along one coordinate axis, and a substitution node pulls a
value set back along the induced map of point spaces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import kernels
from .algebra import (FiniteAlgebra, Point, PointSpace, automorphisms,
                      ensure_space_size, space_perm_map, term_column)
from .errors import AlgebraError, ContextError, LogicGeoError
from .formulas import (DEFAULT_MAX_FRAGMENT, And, Equality, Exists, Forall,
                       Formula, FormulaSet, Fragment, Not, Or, Subst)
from .terms import TermMap, Var, VarContext


@dataclass(frozen=True, eq=False)
class ValueSet:
    """An immutable subset of a point space, stored as dense booleans."""

    space: PointSpace
    bits: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.bits, dtype=bool)
        if arr.shape != (self.space.size,):
            raise ContextError(
                f"value set needs {self.space.size} bits, got shape {arr.shape}"
            )
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    # -- constructors
    @classmethod
    def empty(cls, space: PointSpace) -> "ValueSet":
        return cls(space, np.zeros(space.size, dtype=bool))

    @classmethod
    def full(cls, space: PointSpace) -> "ValueSet":
        return cls(space, np.ones(space.size, dtype=bool))

    @classmethod
    def from_indices(cls, space: PointSpace, indices: Iterable[int]) -> "ValueSet":
        bits = np.zeros(space.size, dtype=bool)
        for i in indices:
            if not (0 <= i < space.size):
                raise IndexError(f"point index {i} outside 0..{space.size - 1}")
            bits[i] = True
        return cls(space, bits)

    @classmethod
    def from_points(
        cls, space: PointSpace, points: Iterable[Sequence[int] | Point]
    ) -> "ValueSet":
        return cls.from_indices(space, (space.index_of(p) for p in points))

    # -- structure
    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ValueSet):
            return NotImplemented
        return self.space == other.space and bool(np.array_equal(self.bits, other.bits))

    def __hash__(self) -> int:
        return hash((self.space, self.bits.tobytes()))

    def __len__(self) -> int:
        return int(self.bits.sum())

    def __invert__(self) -> "ValueSet":
        return ValueSet(self.space, ~self.bits)

    def _check_same_space(self, other: "ValueSet") -> None:
        if self.space != other.space:
            raise ContextError("value sets live in different point spaces")

    def __and__(self, other: "ValueSet") -> "ValueSet":
        self._check_same_space(other)
        return ValueSet(self.space, self.bits & other.bits)

    def __or__(self, other: "ValueSet") -> "ValueSet":
        self._check_same_space(other)
        return ValueSet(self.space, self.bits | other.bits)

    def issubset(self, other: "ValueSet") -> bool:
        self._check_same_space(other)
        return not bool(np.any(self.bits & ~other.bits))

    def issuperset(self, other: "ValueSet") -> bool:
        return other.issubset(self)

    @property
    def is_full(self) -> bool:
        return bool(self.bits.all())

    @property
    def is_empty(self) -> bool:
        return not bool(self.bits.any())

    def indices(self) -> np.ndarray:
        return np.nonzero(self.bits)[0]

    def contains_index(self, i: int) -> bool:
        return bool(self.bits[i])

    def contains_point(self, mu: Point | Sequence[int]) -> bool:
        return bool(self.bits[self.space.index_of(mu)])

    def point_tuples(self) -> list[tuple[int, ...]]:
        return [self.space.decode(int(i)) for i in self.indices()]

    def points(self) -> Iterator[Point]:
        for i in self.indices():
            yield self.space.point(int(i))

    def label(self, limit: int | None = None) -> str:
        """Serialize as sorted decimal point tuples: '{(0,0), (1,1)}'."""
        tuples = self.point_tuples()
        shown = tuples if limit is None else tuples[:limit]
        body = ", ".join("(" + ",".join(str(v) for v in t) + ")" for t in shown)
        if limit is not None and len(tuples) > limit:
            body += ", ..."
        return "{" + body + "}"

    def __repr__(self) -> str:
        return f"<ValueSet {len(self)}/{self.space.size} over {{{self.space.ctx.label()}}}>"


# ---------------------------------------------------------------------------
# Evaluation.

_VAL_CACHE: dict[tuple[Formula, FiniteAlgebra], ValueSet] = {}
_VAL_CACHE_CAP = 200_000


def clear_val_cache() -> None:
    _VAL_CACHE.clear()


def val(
    u: Formula, alg: FiniteAlgebra, *, max_space: int | None = None
) -> ValueSet:
    """The value set of a formula over its own sort's point space.

    Memoized per (formula, algebra); the cache is observably pure because
    value sets are immutable.
    """
    key = (u, alg)
    hit = _VAL_CACHE.get(key)
    if hit is not None:
        return hit
    if isinstance(u, Equality):
        space = PointSpace(u.sort, alg.size)
        ensure_space_size(space, max_space)
        lcol = term_column(u.lhs, u.sort, alg)
        rcol = term_column(u.rhs, u.sort, alg)
        out = ValueSet(space, lcol == rcol)
    elif isinstance(u, Not):
        out = ~val(u.body, alg, max_space=max_space)
    elif isinstance(u, And):
        out = val(u.left, alg, max_space=max_space) & val(u.right, alg, max_space=max_space)
    elif isinstance(u, Or):
        out = val(u.left, alg, max_space=max_space) | val(u.right, alg, max_space=max_space)
    elif isinstance(u, Exists):
        out = quantify_exists(val(u.body, alg, max_space=max_space), u.var)
    elif isinstance(u, Forall):
        inner = quantify_exists(~val(u.body, alg, max_space=max_space), u.var)
        out = ~inner
    elif isinstance(u, Subst):
        inner = val(u.body, alg, max_space=max_space)
        out = pullback_substitution(inner, u.smap, alg, max_space=max_space)
    else:
        raise LogicGeoError(f"cannot evaluate {type(u).__name__}")
    if len(_VAL_CACHE) >= _VAL_CACHE_CAP:
        _VAL_CACHE.clear()
    _VAL_CACHE[key] = out
    return out


def quantify_exists(a: ValueSet, x: str) -> ValueSet:
    """Cylindrification: smear a value set along the axis of one variable."""
    j = a.space.ctx.index(x)
    n = a.space.n
    k = len(a.space.ctx)
    cube = a.bits.reshape((n,) * k)
    smeared = np.broadcast_to(cube.any(axis=j, keepdims=True), cube.shape)
    return ValueSet(a.space, smeared.reshape(-1))


def quantify_forall(a: ValueSet, x: str) -> ValueSet:
    return ~quantify_exists(~a, x)


def restrict_context(a: ValueSet, sub: VarContext) -> ValueSet:
    """Section of a value set onto a sub-context.

    Only defined when the set is cylindrical over every dropped variable, so
    the section carries the same information as the original set.
    """
    ctx = a.space.ctx
    if not sub.issubset(ctx):
        raise ContextError(
            f"{{{sub.label()}}} is not a sub-context of {{{ctx.label()}}}"
        )
    dropped = [x for x in ctx.names if x not in sub]
    for x in dropped:
        if quantify_exists(a, x) != a:
            raise ContextError(
                f"value set is not cylindrical over {x}; cannot restrict to "
                f"{{{sub.label()}}}"
            )
    n = a.space.n
    cube = a.bits.reshape((n,) * len(ctx))
    idx = tuple(slice(None) if x in sub else 0 for x in ctx.names)
    return ValueSet(PointSpace(sub, n), np.reshape(cube[idx], -1))


def pullback_substitution(
    a: ValueSet,
    smap: TermMap,
    alg: FiniteAlgebra,
    *,
    max_space: int | None = None,
) -> ValueSet:
    """The value set over the map's target whose points land in `a` after
    composing with the map: the semantic action of a substitution node."""
    if a.space.ctx != smap.source:
        raise ContextError(
            f"value set over {{{a.space.ctx.label()}}} cannot be pulled back "
            f"along a map with source {{{smap.source.label()}}}"
        )
    if a.space.n != alg.size:
        raise AlgebraError("value set carrier does not match the algebra")
    tspace = PointSpace(smap.target, alg.size)
    ensure_space_size(tspace, max_space)
    if len(smap.source) == 0:
        bits = np.full(tspace.size, bool(a.bits[0]))
        return ValueSet(tspace, bits)
    cols = np.stack(
        [term_column(img, smap.target, alg) for img in smap.images]
    )
    idx = kernels.pack_columns(cols, alg.size, tspace.size)
    return ValueSet(tspace, a.bits[idx])


def point_cylinder(
    mu: Point, window: VarContext, alg: FiniteAlgebra,
    *, max_space: int | None = None,
) -> ValueSet:
    """All window points that agree with mu on mu's own context."""
    if not mu.ctx.issubset(window):
        raise ContextError(
            f"point context {{{mu.ctx.label()}}} is not inside the window "
            f"{{{window.label()}}}"
        )
    space = PointSpace(window, alg.size)
    ensure_space_size(space, max_space)
    bits = np.ones(space.size, dtype=bool)
    for name in mu.ctx.names:
        col = term_column(Var(name), window, alg)
        bits &= col == mu.value(name)
    return ValueSet(space, bits)


def orbit_closure(a: ValueSet, alg: FiniteAlgebra) -> ValueSet:
    """Union of the images of a value set under all automorphisms acting
    coordinatewise."""
    if a.space.n != alg.size:
        raise AlgebraError("value set carrier does not match the algebra")
    out = np.zeros(a.space.size, dtype=bool)
    for perm in automorphisms(alg):
        out |= a.bits[space_perm_map(a.space, perm)]
    return ValueSet(a.space, out)


# ---------------------------------------------------------------------------
# Logical kernels and theories.

def lker_contains(mu: Point, u: Formula, alg: FiniteAlgebra) -> bool:
    """Whether the formula holds at the point: membership in LKer(mu)."""
    if mu.ctx != u.sort:
        raise ContextError(
            f"point over {{{mu.ctx.label()}}} against a formula of sort "
            f"{{{u.sort.label()}}}"
        )
    return val(u, alg).contains_point(mu)


@dataclass(frozen=True)
class KernelView:
    """The restriction of a point's logical kernel to a fragment, as a
    bitmask over the fragment's canonical enumeration."""

    point: Point
    fragment: Fragment
    bits: int
    size: int

    def member(self, i: int) -> bool:
        if not (0 <= i < self.size):
            raise IndexError(f"formula index {i} outside 0..{self.size - 1}")
        return bool((self.bits >> i) & 1)

    def member_count(self) -> int:
        return int(self.bits).bit_count()


def lker_restrict(
    mu: Point, frag: Fragment, alg: FiniteAlgebra,
    *, max_fragment: int = DEFAULT_MAX_FRAGMENT,
) -> KernelView:
    """Bitmask of the fragment formulas holding at the point.

    The restriction of an ultrafilter: for every formula whose negation is
    also in the fragment, exactly one of the two bits is set.  That sanity
    invariant is checked here.
    """
    if mu.ctx != frag.sort:
        raise ContextError(
            f"point over {{{mu.ctx.label()}}} against a fragment of sort "
            f"{{{frag.sort.label()}}}"
        )
    formulas = frag.formulas(max_fragment)
    space = PointSpace(frag.sort, alg.size)
    p = space.index_of(mu)
    bits = 0
    for i, u in enumerate(formulas):
        if val(u, alg).contains_index(p):
            bits |= 1 << i
    view = KernelView(mu, frag, bits, len(formulas))
    for i, j in frag.negation_pairs(max_fragment):
        if view.member(i) == view.member(j):
            raise LogicGeoError(
                "kernel restriction violates the ultrafilter property"
            )
    return view


def theory_contains(alg: FiniteAlgebra, u: Formula) -> bool:
    """Whether the formula holds at every point of its sort's space."""
    return val(u, alg).is_full


def theory_restrict(
    alg: FiniteAlgebra, frag: Fragment,
    *, max_fragment: int = DEFAULT_MAX_FRAGMENT,
) -> FormulaSet:
    """The fragment formulas valid in the algebra, in fragment order."""
    formulas = frag.formulas(max_fragment)
    keep = tuple(u for u in formulas if theory_contains(alg, u))
    return FormulaSet(frag.sort, keep)
