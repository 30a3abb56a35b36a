"""Finite algebras given by operation tables, affine points, and point spaces.

Operation tables are stored flat and row-major: the value of an arity-a
operation at arguments ``(v_1, ..., v_a)`` sits at flat index
``sum(v_i * n**(a-i))``, i.e. big-endian in the arguments, matching the
point-space index convention.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterator, Sequence

import numpy as np

from . import kernels
from .errors import (AlgebraError, ContextError, ParseError, SpaceLimitError)
from .terms import (App, Signature, Term, TermMap, Var, VarContext,
                    format_term, parse_term, term_vars, tokenize)

DEFAULT_MAX_SPACE = 2 ** 24


@dataclass(frozen=True)
class FiniteAlgebra:
    """A finite algebra: carrier {0, ..., size-1} plus one table per operation."""

    name: str
    sig: Signature
    size: int
    tables: tuple[tuple[int, ...], ...]

    def table(self, opname: str) -> tuple[int, ...]:
        for (n, _), tbl in zip(self.sig.ops, self.tables):
            if n == opname:
                return tbl
        raise AlgebraError(f"algebra {self.name!r} has no operation {opname!r}")

    def __post_init__(self) -> None:
        validate_algebra(self)

    def apply(self, opname: str, *args: int) -> int:
        tbl = self.table(opname)
        arity = self.sig.arity(opname)
        if len(args) != arity:
            raise AlgebraError(
                f"operation {opname!r} expects {arity} arguments, got {len(args)}"
            )
        idx = 0
        for v in args:
            idx = idx * self.size + v
        return tbl[idx]

    @property
    def has_adjoined(self) -> bool:
        return bool(self.sig.adjoined)

    def constant_name(self, h: int) -> str:
        """Name of the adjoined constant for carrier element h."""
        if not (0 <= h < self.size):
            raise AlgebraError(f"no carrier element {h} in {self.name!r}")
        name = f"c{h}"
        if name not in self.sig.adjoined:
            raise AlgebraError(
                f"algebra {self.name!r} has no adjoined constants; "
                f"call adjoin_constants first"
            )
        return name


def validate_algebra(alg: FiniteAlgebra) -> None:
    """Check table shapes and entry ranges; raises AlgebraError with the
    offending operation named."""
    n = alg.size
    if n < 1:
        raise AlgebraError(f"algebra {alg.name!r} has empty carrier")
    if len(alg.tables) != len(alg.sig.ops):
        raise AlgebraError(
            f"algebra {alg.name!r} has {len(alg.tables)} tables for "
            f"{len(alg.sig.ops)} operations"
        )
    for (opname, arity), tbl in zip(alg.sig.ops, alg.tables):
        expect = n ** arity
        if len(tbl) != expect:
            raise AlgebraError(
                f"operation {opname!r}: table has {len(tbl)} entries, "
                f"expected {n}^{arity} = {expect}"
            )
        for i, v in enumerate(tbl):
            if not (0 <= v < n):
                raise AlgebraError(
                    f"operation {opname!r}: entry {v} at index {i} outside "
                    f"carrier 0..{n - 1}"
                )


@lru_cache(maxsize=512)
def _table_array(alg: FiniteAlgebra, opname: str) -> np.ndarray:
    arr = np.array(alg.table(opname), dtype=np.uint8)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Points and point spaces.

@dataclass(frozen=True)
class Point:
    """An assignment of carrier values to the variables of a context."""

    ctx: VarContext
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.values) != len(self.ctx):
            raise ContextError(
                f"point over {{{self.ctx.label()}}} needs {len(self.ctx)} "
                f"values, got {len(self.values)}"
            )

    def value(self, name: str) -> int:
        return self.values[self.ctx.index(name)]

    def as_dict(self) -> dict[str, int]:
        return dict(zip(self.ctx.names, self.values))

    def label(self) -> str:
        return "(" + ",".join(str(v) for v in self.values) + ")"


@dataclass(frozen=True)
class PointSpace:
    """The affine space H^X for a context X over a carrier of a given size.

    Indexing is big-endian in the context order: the first variable is the
    most significant digit.
    """

    ctx: VarContext
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise AlgebraError("point space needs a nonempty carrier")

    @property
    def size(self) -> int:
        return self.n ** len(self.ctx)

    def strides(self) -> tuple[int, ...]:
        k = len(self.ctx)
        out = [0] * k
        s = 1
        for j in range(k - 1, -1, -1):
            out[j] = s
            s *= self.n
        return tuple(out)

    def index_of(self, values: Sequence[int] | Point) -> int:
        if isinstance(values, Point):
            if values.ctx != self.ctx:
                raise ContextError(
                    f"point over {{{values.ctx.label()}}} does not live in the "
                    f"space over {{{self.ctx.label()}}}"
                )
            values = values.values
        if len(values) != len(self.ctx):
            raise ContextError(
                f"expected {len(self.ctx)} coordinates, got {len(values)}"
            )
        idx = 0
        for v in values:
            if not (0 <= v < self.n):
                raise AlgebraError(f"coordinate {v} outside carrier 0..{self.n - 1}")
            idx = idx * self.n + v
        return idx

    def decode(self, index: int) -> tuple[int, ...]:
        if not (0 <= index < self.size):
            raise IndexError(f"point index {index} outside 0..{self.size - 1}")
        k = len(self.ctx)
        out = [0] * k
        for j in range(k - 1, -1, -1):
            out[j] = index % self.n
            index //= self.n
        return tuple(out)

    def point(self, index: int) -> Point:
        return Point(self.ctx, self.decode(index))

    def points(self) -> Iterator[Point]:
        for i in range(self.size):
            yield self.point(i)


def ensure_space_size(space: PointSpace, limit: int | None = None) -> None:
    cap = DEFAULT_MAX_SPACE if limit is None else limit
    if space.size > cap:
        raise SpaceLimitError(
            f"point space over {{{space.ctx.label()}}} has {space.size} points, "
            f"exceeding the limit {cap}"
        )


def enum_points(
    ctx: VarContext, alg: FiniteAlgebra, *, limit: int | None = None
) -> Iterator[Point]:
    """Stream the points of H^X in index order."""
    space = PointSpace(ctx, alg.size)
    ensure_space_size(space, limit)
    return space.points()


# ---------------------------------------------------------------------------
# Term evaluation: single points and whole spaces.

def eval_term(t: Term, mu: Point, alg: FiniteAlgebra) -> int:
    if isinstance(t, Var):
        return mu.value(t.name)
    if not alg.sig.has(t.op):
        raise AlgebraError(f"algebra {alg.name!r} has no operation {t.op!r}")
    return alg.apply(t.op, *(eval_term(a, mu, alg) for a in t.args))


def compile_term_program(
    t: Term, ctx: VarContext, alg: FiniteAlgebra
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Flatten a term into the postfix program consumed by the kernels."""
    code: list[int] = []
    op_index: dict[str, int] = {}
    metas: list[tuple[int, int]] = []  # (arity, offset)
    table_parts: list[np.ndarray] = []
    offset = 0

    def walk(term: Term) -> None:
        nonlocal offset
        if isinstance(term, Var):
            code.append(-(ctx.index(term.name) + 1))
            return
        if not alg.sig.has(term.op):
            raise AlgebraError(f"algebra {alg.name!r} has no operation {term.op!r}")
        arity = alg.sig.arity(term.op)
        if len(term.args) != arity:
            raise AlgebraError(
                f"operation {term.op!r} expects {arity} arguments, "
                f"got {len(term.args)}"
            )
        for a in term.args:
            walk(a)
        if term.op not in op_index:
            tbl = _table_array(alg, term.op)
            op_index[term.op] = len(metas)
            metas.append((arity, offset))
            table_parts.append(tbl)
            offset += len(tbl)
        code.append(op_index[term.op])

    walk(t)
    arities = np.array([m[0] for m in metas], dtype=np.int64)
    offsets = np.array([m[1] for m in metas], dtype=np.int64)
    tables = (np.concatenate(table_parts) if table_parts
              else np.zeros(0, dtype=np.uint8))
    return np.array(code, dtype=np.int64), arities, offsets, tables


@lru_cache(maxsize=4096)
def term_column(t: Term, ctx: VarContext, alg: FiniteAlgebra) -> np.ndarray:
    """Values of a term at every point of H^ctx, as a locked uint8 array."""
    code, arities, offsets, tables = compile_term_program(t, ctx, alg)
    space = PointSpace(ctx, alg.size)
    col = kernels.eval_postfix(
        code, arities, offsets, tables, alg.size, len(ctx), space.size
    )
    col.setflags(write=False)
    return col


# ---------------------------------------------------------------------------
# Identities.

def check_identities(alg: FiniteAlgebra) -> tuple[bool, dict | None]:
    """Verify the signature's identities over all assignments, vectorized.

    Returns (True, None), or (False, witness) for the first violated
    identity in declaration order at its smallest assignment index, where
    the witness carries the identity text and the offending assignment.
    """
    for lhs, rhs in alg.sig.identities:
        names = term_vars(lhs) | term_vars(rhs)
        ctx = VarContext(tuple(names))
        space = PointSpace(ctx, alg.size)
        ensure_space_size(space)
        lcol = term_column(lhs, ctx, alg)
        rcol = term_column(rhs, ctx, alg)
        bad = np.nonzero(lcol != rcol)[0]
        if bad.size:
            values = space.decode(int(bad[0]))
            return False, {
                "identity": f"{format_term(lhs)} == {format_term(rhs)}",
                "point": dict(zip(ctx.names, values)),
            }
    return True, None


# ---------------------------------------------------------------------------
# Automorphisms, isomorphisms, orbits.

def _bijection_search(
    a: FiniteAlgebra, b: FiniteAlgebra
) -> Iterator[tuple[int, ...]]:
    """Backtracking search for carrier bijections a -> b respecting all
    tables.  Yields permutations in lexicographic order."""
    n = a.size
    tables_a = [(arity, a.table(name)) for name, arity in a.sig.ops]
    tables_b = [(arity, b.table(name)) for name, arity in b.sig.ops]
    perm = [-1] * n
    used = [False] * n

    def consistent(i: int) -> bool:
        assigned = [v for v in range(n) if perm[v] >= 0]
        for (arity, ta), (_, tb) in zip(tables_a, tables_b):
            if arity == 0:
                res = ta[0]
                if perm[res] >= 0 and perm[res] != tb[0]:
                    return False
                continue
            for args in product(assigned, repeat=arity):
                if i not in args:
                    continue
                idx = 0
                for v in args:
                    idx = idx * n + v
                res = ta[idx]
                if perm[res] < 0:
                    continue
                jdx = 0
                for v in args:
                    jdx = jdx * n + perm[v]
                if tb[jdx] != perm[res]:
                    return False
        return True

    def verify_all() -> bool:
        for (arity, ta), (_, tb) in zip(tables_a, tables_b):
            for args in product(range(n), repeat=arity):
                idx = 0
                jdx = 0
                for v in args:
                    idx = idx * n + v
                    jdx = jdx * n + perm[v]
                if tb[jdx] != perm[ta[idx]]:
                    return False
        return True

    def extend(i: int) -> Iterator[tuple[int, ...]]:
        if i == n:
            if verify_all():
                yield tuple(perm)
            return
        for cand in range(n):
            if used[cand]:
                continue
            perm[i] = cand
            used[cand] = True
            if consistent(i):
                yield from extend(i + 1)
            perm[i] = -1
            used[cand] = False

    yield from extend(0)


def automorphisms(alg: FiniteAlgebra) -> list[tuple[int, ...]]:
    """All automorphisms as carrier permutations, lexicographically ordered;
    the identity comes first."""
    return list(_bijection_search(alg, alg))


def is_isomorphic(
    a: FiniteAlgebra, b: FiniteAlgebra
) -> tuple[bool, tuple[int, ...] | None]:
    """Isomorphism verdict plus a witness bijection when one exists."""
    if a.sig.ops != b.sig.ops:
        raise AlgebraError(
            f"signature mismatch: {a.sig.label()} vs {b.sig.label()}"
        )
    if a.size != b.size:
        return False, None
    for perm in _bijection_search(a, b):
        return True, perm
    return False, None


def space_perm_map(space: PointSpace, perm: Sequence[int]) -> np.ndarray:
    """Index map sending each point to its image under the coordinatewise
    action of a carrier permutation."""
    parr = np.array(perm, dtype=np.int64)
    if parr.shape != (space.n,):
        raise AlgebraError(
            f"permutation of length {parr.size} on a carrier of size {space.n}"
        )
    return kernels.permute_digits(parr, space.n, len(space.ctx), space.size)


def apply_perm_to_point(perm: Sequence[int], mu: Point) -> Point:
    return Point(mu.ctx, tuple(perm[v] for v in mu.values))


def orbit_partition(
    alg: FiniteAlgebra, ctx: VarContext, *, limit: int | None = None
) -> list[list[int]]:
    """Orbits of Aut(alg) acting coordinatewise on H^ctx.

    Orbits are listed by their smallest point index; each orbit lists its
    point indices increasingly.
    """
    space = PointSpace(ctx, alg.size)
    ensure_space_size(space, limit)
    maps = [space_perm_map(space, p) for p in automorphisms(alg)]
    seen = np.zeros(space.size, dtype=bool)
    orbits: list[list[int]] = []
    for p in range(space.size):
        if seen[p]:
            continue
        orbit = sorted({int(m[p]) for m in maps})
        for q in orbit:
            seen[q] = True
        orbits.append(orbit)
    return orbits


# ---------------------------------------------------------------------------
# Constructions on algebras.

def adjoin_constants(alg: FiniteAlgebra) -> FiniteAlgebra:
    """Extend the signature with one constant c<h> per carrier element h.

    Applying this to an algebra that already has adjoined constants (or any
    operation named like one) is an error.
    """
    for h in range(alg.size):
        if alg.sig.has(f"c{h}"):
            raise AlgebraError(
                f"algebra {alg.name!r} already has an operation named 'c{h}'; "
                f"constants appear to be adjoined"
            )
    new_ops = alg.sig.ops + tuple((f"c{h}", 0) for h in range(alg.size))
    new_adjoined = alg.sig.adjoined + tuple(f"c{h}" for h in range(alg.size))
    new_sig = Signature(new_ops, alg.sig.identities, new_adjoined)
    new_tables = alg.tables + tuple((h,) for h in range(alg.size))
    out = FiniteAlgebra(alg.name, new_sig, alg.size, new_tables)
    validate_algebra(out)
    return out


def relabel(
    alg: FiniteAlgebra, perm: Sequence[int], name: str | None = None
) -> FiniteAlgebra:
    """Transport the structure along a carrier permutation, giving an
    isomorphic copy: new_op(perm(a), ...) = perm(old_op(a, ...))."""
    n = alg.size
    if sorted(perm) != list(range(n)):
        raise AlgebraError("relabel needs a permutation of the carrier")
    new_tables = []
    for (opname, arity), tbl in zip(alg.sig.ops, alg.tables):
        new_tbl = [0] * len(tbl)
        for args in product(range(n), repeat=arity):
            idx = 0
            jdx = 0
            for v in args:
                idx = idx * n + v
                jdx = jdx * n + perm[v]
            new_tbl[jdx] = perm[tbl[idx]]
        new_tables.append(tuple(new_tbl))
    out = FiniteAlgebra(
        name or f"{alg.name}_relabel", alg.sig, n, tuple(new_tables)
    )
    validate_algebra(out)
    return out


def point_substitution_map(
    mu: Point, window: VarContext, alg: FiniteAlgebra
) -> TermMap:
    """The endomorphism of W(window) pinning each variable of mu's context to
    the adjoined constant naming its value and fixing the other variables."""
    if not alg.has_adjoined:
        raise AlgebraError(
            f"algebra {alg.name!r} has no adjoined constants; "
            f"call adjoin_constants first"
        )
    if not mu.ctx.issubset(window):
        raise ContextError(
            f"point context {{{mu.ctx.label()}}} is not inside the window "
            f"{{{window.label()}}}"
        )
    images = []
    for name in window.names:
        if name in mu.ctx:
            images.append(App(alg.constant_name(mu.value(name))))
        else:
            images.append(Var(name))
    return TermMap(window, window, tuple(images))


# ---------------------------------------------------------------------------
# Algebra files.  Line oriented; '#' starts a comment.  Fields:
#   name <ident>
#   size <int>
#   op <ident> <arity> <v0> <v1> ... (row-major flat table)
#   const <ident> <value>
#   identity <term> == <term>

def loads_algebra(text: str, *, fallback_name: str = "algebra") -> FiniteAlgebra:
    name = None
    size = None
    ops: list[tuple[str, int]] = []
    tables: list[tuple[int, ...]] = []
    identity_lines: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        key = parts[0]
        rest = parts[1] if len(parts) > 1 else ""
        if key == "name":
            name = rest.strip()
        elif key == "size":
            try:
                size = int(rest)
            except ValueError:
                raise ParseError(f"line {lineno}: size must be an integer") from None
        elif key == "op":
            fields = rest.split()
            if len(fields) < 2:
                raise ParseError(f"line {lineno}: op needs a name and an arity")
            opname = fields[0]
            try:
                arity = int(fields[1])
                entries = tuple(int(v) for v in fields[2:])
            except ValueError:
                raise ParseError(
                    f"line {lineno}: op entries must be integers"
                ) from None
            ops.append((opname, arity))
            tables.append(entries)
        elif key == "const":
            fields = rest.split()
            if len(fields) != 2:
                raise ParseError(f"line {lineno}: const needs a name and a value")
            try:
                value = int(fields[1])
            except ValueError:
                raise ParseError(
                    f"line {lineno}: const value must be an integer"
                ) from None
            ops.append((fields[0], 0))
            tables.append((value,))
        elif key == "identity":
            identity_lines.append((lineno, rest))
        else:
            raise ParseError(f"line {lineno}: unknown field {key!r}")
    if size is None:
        raise ParseError("algebra file must declare a size")
    base_sig = Signature(tuple(ops))
    identities = []
    for lineno, body in identity_lines:
        if "==" not in body:
            raise ParseError(f"line {lineno}: identity needs '=='")
        # variables of an identity are whatever names are not operations
        var_names = {
            tok.text
            for tok in tokenize(body)
            if tok.kind == "name" and not base_sig.has(tok.text)
        }
        ctx = VarContext(tuple(var_names))
        left_text, right_text = body.split("==", 1)
        try:
            lhs = parse_term(left_text.strip(), ctx, base_sig)
            rhs = parse_term(right_text.strip(), ctx, base_sig)
        except ParseError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
        identities.append((lhs, rhs))
    sig = Signature(tuple(ops), tuple(identities))
    alg = FiniteAlgebra(name or fallback_name, sig, size, tuple(tables))
    ok, witness = check_identities(alg)
    if not ok:
        raise AlgebraError(
            f"declared identity fails in {alg.name!r}: "
            f"{witness['identity']} at {witness['point']}"
        )
    return alg


def load_algebra(path: str) -> FiniteAlgebra:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    fallback = os.path.splitext(os.path.basename(path))[0]
    return loads_algebra(text, fallback_name=fallback)


def dumps_algebra(alg: FiniteAlgebra) -> str:
    lines = [f"name {alg.name}", f"size {alg.size}"]
    for (opname, arity), tbl in zip(alg.sig.ops, alg.tables):
        if arity == 0:
            lines.append(f"const {opname} {tbl[0]}")
        else:
            lines.append(f"op {opname} {arity} " + " ".join(str(v) for v in tbl))
    for lhs, rhs in alg.sig.identities:
        lines.append(f"identity {format_term(lhs)} == {format_term(rhs)}")
    return "\n".join(lines) + "\n"
