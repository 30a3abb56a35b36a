"""Galois correspondence between formula sets and point sets, and the type
machinery built on it.

The two closure operators pair a set of formulas T with its solution set
(the points satisfying all of T) and a point set A with the formulas holding
on all of A.  Restricted to a fragment both sides are finite, but fragments
explode combinatorially with depth, so the deep operations here run on the
*definable value family*: the set of distinct value sets of fragment
formulas, each carried by a canonical witness formula.  Closure, isotypy and
equivalence queries depend on formulas only through their value sets, so the
family gives the same answers as the literal fragment at a small fraction of
the cost; the unit tests cross-check the two routes on enumerable fragments.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .algebra import (FiniteAlgebra, Point, PointSpace, ensure_space_size,
                      point_substitution_map, term_column, _table_array)
from .errors import (AlgebraError, ContextError, FamilyLimitError,
                     LogicGeoError)
from .formulas import (DEFAULT_MAX_FRAGMENT, And, Equality, Exists, Formula,
                       FormulaSet, Fragment, Not, Or, Subst)
from .semantics import (ValueSet, orbit_closure, point_cylinder,
                        pullback_substitution, quantify_exists,
                        theory_contains, val)
from .terms import App, Signature, Term, TermMap, Var, VarContext

DEFAULT_MAX_FAMILY = 200_000


# ---------------------------------------------------------------------------
# Basic Galois operators.

def solution_set(
    T: FormulaSet | Iterable[Formula],
    alg: FiniteAlgebra,
    *,
    sort: VarContext | None = None,
    max_space: int | None = None,
) -> ValueSet:
    """Points satisfying every formula of T; the full space when T is empty.

    An empty plain iterable needs an explicit sort; a FormulaSet carries one.
    """
    if isinstance(T, FormulaSet):
        use_sort = T.sort
        formulas: Sequence[Formula] = T.formulas
    else:
        formulas = tuple(T)
        if sort is not None:
            use_sort = sort
        elif formulas:
            use_sort = formulas[0].sort
        else:
            raise ContextError("empty formula collection needs an explicit sort")
    space = PointSpace(use_sort, alg.size)
    ensure_space_size(space, max_space)
    out = ValueSet.full(space)
    for u in formulas:
        if u.sort != use_sort:
            raise ContextError(
                f"formula of sort {{{u.sort.label()}}} in a system of sort "
                f"{{{use_sort.label()}}}"
            )
        out = out & val(u, alg, max_space=max_space)
    return out


def formula_closure(
    a: ValueSet,
    frag: Fragment,
    alg: FiniteAlgebra,
    *,
    max_fragment: int = DEFAULT_MAX_FRAGMENT,
) -> FormulaSet:
    """The fragment formulas holding on every point of `a`, in fragment order."""
    if a.space.ctx != frag.sort:
        raise ContextError(
            f"value set over {{{a.space.ctx.label()}}} against a fragment of "
            f"sort {{{frag.sort.label()}}}"
        )
    if a.space.n != alg.size:
        raise AlgebraError("value set carrier does not match the algebra")
    keep = tuple(
        u for u in frag.formulas(max_fragment)
        if a.issubset(val(u, alg))
    )
    return FormulaSet(frag.sort, keep)


# ---------------------------------------------------------------------------
# The definable value family.
#
# Terms are explored as functions: at each rank the newly reachable term
# columns (evaluated jointly over all participating algebras) are kept, one
# canonical representative term per distinct column tuple.  Formula values
# are then closed under the connectives in rounds, one round per connective
# level, with canonical witness formulas built from the representatives.
# Block L handles joint rank L: new equality values between representatives
# first, then rounds 1..L.  A block that adds neither a new term column nor
# a new value certifies saturation: every deeper block is a no-op.

@dataclass(frozen=True)
class FamilyEntry:
    formula: Formula
    cdepth: int
    values: tuple[ValueSet, ...]


@dataclass(frozen=True)
class ValueFamily:
    algebras: tuple[FiniteAlgebra, ...]
    fragment: Fragment
    entries: tuple[FamilyEntry, ...]
    productive: tuple[bool, ...]  # one flag per built block
    stopped_early: bool

    @property
    def saturation_depth(self) -> int | None:
        """The depth from which the family is provably complete, or None if
        the last built block was still productive."""
        if not self.productive:
            return 0
        if self.productive[-1]:
            return None
        last = 0
        for i, flag in enumerate(self.productive):
            if flag:
                last = i
        return last

    def values_for(self, side: int) -> list[ValueSet]:
        return [e.values[side] for e in self.entries]


def _new_rep_columns(
    reps: list[tuple[Term, tuple[np.ndarray, ...]]],
    level_sizes: list[int],
    algebras: tuple[FiniteAlgebra, ...],
    sig: Signature,
    seen: dict[tuple[bytes, ...], int],
    rank: int,
    sort: VarContext,
    with_adjoined: bool,
    cap: int,
) -> list[tuple[Term, tuple[np.ndarray, ...]]]:
    """Representative terms of joint rank `rank` whose column tuple is new."""
    out: list[tuple[Term, tuple[np.ndarray, ...]]] = []

    def try_add(term: Term, cols: tuple[np.ndarray, ...]) -> None:
        key = tuple(c.tobytes() for c in cols)
        if key in seen:
            return
        if len(seen) >= cap:
            raise FamilyLimitError(
                f"term function family exceeds the cap {cap}"
            )
        seen[key] = len(seen)
        out.append((term, cols))

    if rank == 0:
        for name in sort.names:
            cols = tuple(term_column(Var(name), sort, alg) for alg in algebras)
            try_add(Var(name), cols)
        for name, arity in sig.ops:
            if arity == 0 and (with_adjoined or name not in sig.adjoined):
                cols = tuple(term_column(App(name), sort, alg) for alg in algebras)
                try_add(App(name), cols)
        return out
    total = len(reps)
    lower = total - level_sizes[-1]
    for name, arity in sig.ops:
        if arity == 0:
            continue
        for combo in product(range(total), repeat=arity):
            if rank > 1 and max(combo) < lower:
                continue
            arg_terms = tuple(reps[c][0] for c in combo)
            new_cols = []
            for side, alg in enumerate(algebras):
                argcols = np.stack([reps[c][1][side] for c in combo])
                idx = kernels.pack_columns(
                    argcols, alg.size, argcols.shape[1]
                )
                new_cols.append(_table_array(alg, name)[idx])
            try_add(App(name, arg_terms), tuple(new_cols))
    return out


def build_value_family(
    algebras: Sequence[FiniteAlgebra],
    frag: Fragment,
    *,
    max_entries: int = DEFAULT_MAX_FAMILY,
    stop_when_stable: bool = False,
    max_space: int | None = None,
) -> ValueFamily:
    """Distinct value-set tuples of the fragment's formulas, jointly over one
    or more algebras of the same signature, each with a canonical witness."""
    algs = tuple(algebras)
    if not algs:
        raise AlgebraError("value family needs at least one algebra")
    for alg in algs:
        if alg.sig.ops != frag.sig.ops:
            raise AlgebraError(
                f"algebra {alg.name!r} does not match the fragment signature"
            )
    sort = frag.sort
    for alg in algs:
        ensure_space_size(PointSpace(sort, alg.size), max_space)

    spaces = tuple(PointSpace(sort, alg.size) for alg in algs)
    k = len(sort)
    axes = {x: sort.index(x) for x in sort.names}

    def exists_raw(col: np.ndarray, n: int, j: int) -> np.ndarray:
        cube = col.reshape((n,) * k)
        smeared = np.broadcast_to(cube.any(axis=j, keepdims=True), cube.shape)
        return smeared.reshape(-1)

    reps: list[tuple[Term, tuple[np.ndarray, ...]]] = []
    rep_seen: dict[tuple[bytes, ...], int] = {}
    level_sizes: list[int] = []
    entries: list[FamilyEntry] = []
    # raw boolean columns parallel to `entries`; the hot loops below combine
    # these directly and wrap a ValueSet only when a value is genuinely new
    raw: list[tuple[np.ndarray, ...]] = []
    cdepths: list[int] = []
    value_seen: dict[tuple[bytes, ...], int] = {}
    productive: list[bool] = []
    stopped = False

    def try_add_value(formula: Formula, cdepth: int,
                      cols: tuple[np.ndarray, ...]) -> bool:
        key = tuple(c.tobytes() for c in cols)
        if key in value_seen:
            return False
        if len(entries) >= max_entries:
            raise FamilyLimitError(
                f"value family exceeds the cap {max_entries}"
            )
        value_seen[key] = len(entries)
        values = tuple(ValueSet(sp, c) for sp, c in zip(spaces, cols))
        entries.append(FamilyEntry(formula, cdepth, values))
        raw.append(cols)
        cdepths.append(cdepth)
        return True

    for block in range(frag.depth + 1):
        added = False
        new_reps = _new_rep_columns(
            reps, level_sizes, algs, frag.sig, rep_seen, block,
            sort, frag.with_adjoined, max_entries,
        )
        if new_reps:
            added = True
        level_sizes.append(len(new_reps))
        old_total = len(reps)
        reps.extend(new_reps)
        # new equality values: pairs of representatives with max rank == block
        for i in range(len(reps)):
            for j in range(len(reps)):
                if block > 0 and i < old_total and j < old_total:
                    continue
                cols = tuple(
                    reps[i][1][side] == reps[j][1][side]
                    for side in range(len(algs))
                )
                u = Equality(reps[i][0], reps[j][0], sort)
                if try_add_value(u, 0, cols):
                    added = True
        for r in range(1, block + 1):
            total = len(entries)
            exact = [i for i in range(total) if cdepths[i] == r - 1]
            lower = [i for i in range(total) if cdepths[i] <= r - 1]
            for i in exact:
                cols = tuple(~c for c in raw[i])
                if try_add_value(Not(entries[i].formula), r, cols):
                    added = True
            for i in lower:
                vlist = exact if cdepths[i] < r - 1 else lower
                for j in vlist:
                    cols = tuple(c & d for c, d in zip(raw[i], raw[j]))
                    if try_add_value(
                        And(entries[i].formula, entries[j].formula), r, cols
                    ):
                        added = True
                    cols = tuple(c | d for c, d in zip(raw[i], raw[j]))
                    if try_add_value(
                        Or(entries[i].formula, entries[j].formula), r, cols
                    ):
                        added = True
            for x in sort.names:
                j = axes[x]
                for i in exact:
                    cols = tuple(
                        exists_raw(c, alg.size, j)
                        for c, alg in zip(raw[i], algs)
                    )
                    if try_add_value(Exists(x, entries[i].formula), r, cols):
                        added = True
        productive.append(added)
        if stop_when_stable and not added:
            stopped = True
            break
    return ValueFamily(algs, frag, tuple(entries), tuple(productive), stopped)


def saturating_depth(
    alg: FiniteAlgebra,
    sort: VarContext,
    *,
    with_adjoined: bool = True,
    max_depth: int = 8,
    max_entries: int = DEFAULT_MAX_FAMILY,
) -> int:
    """Smallest depth whose fragment already generates every definable value
    set: found by growing the family until a block adds nothing."""
    frag = Fragment(sort, max_depth, alg.sig, with_adjoined)
    family = build_value_family(
        (alg,), frag, max_entries=max_entries, stop_when_stable=True
    )
    depth = family.saturation_depth
    if depth is None:
        raise LogicGeoError(
            f"no stabilization within depth {max_depth} over "
            f"{{{sort.label()}}}"
        )
    return depth


# ---------------------------------------------------------------------------
# Double closure and elementarity.

def double_closure(
    a: ValueSet,
    frag: Fragment,
    alg: FiniteAlgebra,
    *,
    max_entries: int = DEFAULT_MAX_FAMILY,
) -> ValueSet:
    """The intersection of all fragment-definable value sets containing `a`:
    the solution set of the formula closure of `a`."""
    if a.space.ctx != frag.sort:
        raise ContextError(
            f"value set over {{{a.space.ctx.label()}}} against a fragment of "
            f"sort {{{frag.sort.label()}}}"
        )
    if a.space.n != alg.size:
        raise AlgebraError("value set carrier does not match the algebra")
    family = build_value_family((alg,), frag, max_entries=max_entries)
    out = ValueSet.full(a.space)
    for entry in family.entries:
        v = entry.values[0]
        if a.issubset(v):
            out = out & v
    return out


def is_elementary(
    a: ValueSet,
    frag: Fragment,
    alg: FiniteAlgebra,
    *,
    max_entries: int = DEFAULT_MAX_FAMILY,
) -> bool:
    return double_closure(a, frag, alg, max_entries=max_entries) == a


def elementary_closure_oracle(a: ValueSet, alg: FiniteAlgebra) -> ValueSet:
    """Brute-force prediction of the closure in the constant-free setting:
    the orbit closure under the automorphism group."""
    return orbit_closure(a, alg)


# ---------------------------------------------------------------------------
# Point types.

@dataclass(frozen=True)
class TypeFingerprint:
    """The restriction of a type to a fragment, as a bitmask over the
    fragment's canonical enumeration."""

    fragment_label: str
    size: int
    bits: int

    def member(self, i: int) -> bool:
        if not (0 <= i < self.size):
            raise IndexError(f"formula index {i} outside 0..{self.size - 1}")
        return bool((self.bits >> i) & 1)

    def member_count(self) -> int:
        return int(self.bits).bit_count()

    def bits_hex(self) -> str:
        return format(self.bits, "x")

    def digest(self) -> str:
        """Short stable identifier for report lines."""
        nbytes = (self.size + 7) // 8
        raw = self.size.to_bytes(8, "little") + int(self.bits).to_bytes(
            max(nbytes, 1), "little"
        )
        return hashlib.sha256(raw).hexdigest()[:12]


def mt_type_contains(mu: Point, u: Formula, alg: FiniteAlgebra) -> bool:
    """Membership of a formula in the point's model-theoretic type.

    Two provably equivalent routes are evaluated and compared: pinning the
    point's variables to adjoined constants and asking the elementary theory,
    and containment of the point's cylinder in the formula's value set.
    """
    window = u.sort
    smu = point_substitution_map(mu, window, alg)
    route_syntactic = theory_contains(alg, Subst(smu, u))
    cylinder = point_cylinder(mu, window, alg)
    route_semantic = cylinder.issubset(val(u, alg))
    if route_syntactic != route_semantic:
        raise LogicGeoError(
            "type membership routes disagree; this indicates an internal bug"
        )
    return route_syntactic


def mt_type_restrict(
    mu: Point, frag: Fragment, alg: FiniteAlgebra,
    *, max_fragment: int = DEFAULT_MAX_FRAGMENT,
) -> TypeFingerprint:
    """Fingerprint of the point's type on a window fragment."""
    if not mu.ctx.issubset(frag.sort):
        raise ContextError(
            f"point context {{{mu.ctx.label()}}} is not inside the window "
            f"{{{frag.sort.label()}}}"
        )
    formulas = frag.formulas(max_fragment)
    cylinder = point_cylinder(mu, frag.sort, alg)
    bits = 0
    for i, u in enumerate(formulas):
        if cylinder.issubset(val(u, alg)):
            bits |= 1 << i
    return TypeFingerprint(frag.label(), len(formulas), bits)


@dataclass(frozen=True)
class TypeClass:
    fingerprint: TypeFingerprint
    count: int
    representative: Point


def lg_type_census(
    alg: FiniteAlgebra, frag: Fragment,
    *, max_fragment: int = DEFAULT_MAX_FRAGMENT,
    max_space: int | None = None,
) -> list[TypeClass]:
    """Realized kernel fingerprints on the fragment, with point counts and
    first-realizing representatives, in order of first realization."""
    formulas = frag.formulas(max_fragment)
    space = PointSpace(frag.sort, alg.size)
    ensure_space_size(space, max_space)
    if formulas:
        matrix = np.stack([val(u, alg).bits for u in formulas])
    else:
        matrix = np.zeros((0, space.size), dtype=bool)
    census: dict[int, list[int]] = {}
    order: list[int] = []
    for p in range(space.size):
        col = np.packbits(matrix[:, p], bitorder="little").tobytes()
        key = int.from_bytes(col, "little") if col else 0
        if key not in census:
            census[key] = [0, p]
            order.append(key)
        census[key][0] += 1
    label = frag.label()
    return [
        TypeClass(
            TypeFingerprint(label, len(formulas), key),
            census[key][0],
            space.point(census[key][1]),
        )
        for key in order
    ]


def lg_type_space(
    alg: FiniteAlgebra, frag: Fragment,
    *, max_fragment: int = DEFAULT_MAX_FRAGMENT,
) -> tuple[TypeFingerprint, ...]:
    """The set of fingerprints realized by points, in first-realized order."""
    return tuple(tc.fingerprint for tc in lg_type_census(
        alg, frag, max_fragment=max_fragment
    ))


# ---------------------------------------------------------------------------
# Comparisons between algebras.

@dataclass(frozen=True)
class IsotypyReport:
    isotyped: bool
    checked_entries: int
    witness_formula: Formula | None = None
    witness_algebra: str | None = None
    witness_point: Point | None = None


@dataclass(frozen=True)
class EquivalenceReport:
    equivalent: bool
    checked_systems: int
    witness_formula: Formula | None = None
    witness_system: tuple[Formula, ...] | None = None


def _profile_keys(family: ValueFamily, side: int, prefix: int) -> list[bytes]:
    """Per-point kernel profiles over the first `prefix` family entries."""
    space = PointSpace(family.fragment.sort, family.algebras[side].size)
    if prefix == 0:
        return [b""] * space.size
    matrix = np.stack([e.values[side].bits for e in family.entries[:prefix]])
    packed = np.packbits(matrix, axis=0, bitorder="little")
    return [packed[:, p].tobytes() for p in range(space.size)]


def lg_isotyped_on_fragment(
    a: FiniteAlgebra,
    b: FiniteAlgebra,
    frag: Fragment,
    *,
    max_entries: int = DEFAULT_MAX_FAMILY,
) -> IsotypyReport:
    """Whether the two algebras realize the same kernel profiles on the
    fragment.  On a mismatch the witness is the first family entry (in
    canonical order) at which the realized profile sets diverge, together
    with a point realizing an unmatched profile."""
    family = build_value_family((a, b), frag, max_entries=max_entries)
    total = len(family.entries)
    keys_a = _profile_keys(family, 0, total)
    keys_b = _profile_keys(family, 1, total)
    if set(keys_a) == set(keys_b):
        return IsotypyReport(True, total)
    lo, hi = 1, total
    while lo < hi:
        mid = (lo + hi) // 2
        if set(_profile_keys(family, 0, mid)) != set(_profile_keys(family, 1, mid)):
            hi = mid
        else:
            lo = mid + 1
    prefix = lo
    pa = _profile_keys(family, 0, prefix)
    pb = _profile_keys(family, 1, prefix)
    set_a, set_b = set(pa), set(pb)
    witness_formula = family.entries[prefix - 1].formula
    for p, key in enumerate(pa):
        if key not in set_b:
            return IsotypyReport(
                False, prefix, witness_formula, a.name,
                PointSpace(frag.sort, a.size).point(p),
            )
    for p, key in enumerate(pb):
        if key not in set_a:
            return IsotypyReport(
                False, prefix, witness_formula, b.name,
                PointSpace(frag.sort, b.size).point(p),
            )
    raise LogicGeoError("profile divergence vanished; this indicates a bug")


def lg_equivalent_on_fragment(
    a: FiniteAlgebra,
    b: FiniteAlgebra,
    frag: Fragment,
    *,
    samples: int = 32,
    seed: int = 0,
    max_entries: int = DEFAULT_MAX_FAMILY,
) -> EquivalenceReport:
    """Whether every tested formula system closes identically over the two
    algebras: for each system T and each fragment value, containment of the
    solution set of T is the same on both sides.  Tests the empty system,
    every singleton, the full family, and seeded random subsets."""
    family = build_value_family((a, b), frag, max_entries=max_entries)
    total = len(family.entries)
    space_a = PointSpace(frag.sort, a.size)
    space_b = PointSpace(frag.sort, b.size)
    systems: list[tuple[int, ...]] = [()]
    systems.extend((i,) for i in range(total))
    if total:
        systems.append(tuple(range(total)))
    rng = random.Random(seed)
    for _ in range(samples):
        if not total:
            break
        size = rng.randint(1, total)
        systems.append(tuple(sorted(rng.sample(range(total), size))))
    checked = 0
    for system in systems:
        sol_a = ValueSet.full(space_a)
        sol_b = ValueSet.full(space_b)
        for i in system:
            sol_a = sol_a & family.entries[i].values[0]
            sol_b = sol_b & family.entries[i].values[1]
        checked += 1
        for entry in family.entries:
            in_a = sol_a.issubset(entry.values[0])
            in_b = sol_b.issubset(entry.values[1])
            if in_a != in_b:
                return EquivalenceReport(
                    False, checked, entry.formula,
                    tuple(family.entries[i].formula for i in system),
                )
    return EquivalenceReport(True, checked)


def morphism_check(
    smap: TermMap, a: ValueSet, b: ValueSet, alg: FiniteAlgebra
) -> bool:
    """Whether the map of affine spaces induced by a term map sends the
    first set into the second: composition with the map lands in `b` for
    every point of `a`."""
    if a.space.ctx != smap.target:
        raise ContextError(
            f"first set lives over {{{a.space.ctx.label()}}}, expected the "
            f"map target {{{smap.target.label()}}}"
        )
    if b.space.ctx != smap.source:
        raise ContextError(
            f"second set lives over {{{b.space.ctx.label()}}}, expected the "
            f"map source {{{smap.source.label()}}}"
        )
    return a.issubset(pullback_substitution(b, smap, alg))
