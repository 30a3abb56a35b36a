"""Sorted first-order formulas over term equalities, and bounded fragments.

Grammar (ASCII):

    formula := '(' formula ')' | term '==' term | '!' formula
             | formula '&' formula | formula '|' formula
             | 'E' var '.' formula | 'A' var '.' formula
             | '[' var ':=' term {',' var ':=' term} ']' formula

Precedence: '!' binds tighter than '&', which binds tighter than '|'.  A
quantifier body extends maximally to the right; a substitution prefix binds
like '!'.  'A' is surface syntax only: the parser rewrites it to '!E!'.

Every formula carries a sort, the variable context it lives over.  Quantified
variables must belong to the sort: the existential quantifier acts inside a
fixed context rather than removing a variable.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Union

from .errors import (ContextError, FragmentLimitError, LogicGeoError,
                     ParseError)
from .terms import (Signature, Term, TermMap, Token, VarContext, enum_terms_by_depth,
                    format_term, parse_term_at, term_depth, term_vars, tokenize)

DEFAULT_MAX_FRAGMENT = 100_000


@dataclass(frozen=True)
class Equality:
    """Atomic formula: two terms over the node's sort are equal."""

    lhs: Term
    rhs: Term
    sort: VarContext

    def __post_init__(self) -> None:
        extra = (term_vars(self.lhs) | term_vars(self.rhs)) - set(self.sort.names)
        if extra:
            raise ContextError(
                f"equality uses variables outside its sort: {sorted(extra)}"
            )

    def __repr__(self) -> str:
        return f"<{format_formula(self)}>"


@dataclass(frozen=True)
class Not:
    body: "Formula"

    @property
    def sort(self) -> VarContext:
        return self.body.sort

    def __repr__(self) -> str:
        return f"<{format_formula(self)}>"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"

    def __post_init__(self) -> None:
        if self.left.sort != self.right.sort:
            raise ContextError(
                f"conjunction of formulas over different sorts: "
                f"{{{self.left.sort.label()}}} vs {{{self.right.sort.label()}}}"
            )

    @property
    def sort(self) -> VarContext:
        return self.left.sort

    def __repr__(self) -> str:
        return f"<{format_formula(self)}>"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"

    def __post_init__(self) -> None:
        if self.left.sort != self.right.sort:
            raise ContextError(
                f"disjunction of formulas over different sorts: "
                f"{{{self.left.sort.label()}}} vs {{{self.right.sort.label()}}}"
            )

    @property
    def sort(self) -> VarContext:
        return self.left.sort

    def __repr__(self) -> str:
        return f"<{format_formula(self)}>"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"

    def __post_init__(self) -> None:
        if self.var not in self.body.sort:
            raise ContextError(
                f"quantified variable {self.var!r} not in sort "
                f"{{{self.body.sort.label()}}}"
            )

    @property
    def sort(self) -> VarContext:
        return self.body.sort

    def __repr__(self) -> str:
        return f"<{format_formula(self)}>"


@dataclass(frozen=True)
class Forall:
    """Surface-level universal quantifier; normalized away before evaluation."""

    var: str
    body: "Formula"

    def __post_init__(self) -> None:
        if self.var not in self.body.sort:
            raise ContextError(
                f"quantified variable {self.var!r} not in sort "
                f"{{{self.body.sort.label()}}}"
            )

    @property
    def sort(self) -> VarContext:
        return self.body.sort

    def __repr__(self) -> str:
        return f"<{format_formula(self)}>"


@dataclass(frozen=True)
class Subst:
    """Substitution node: the body lives over the map's source context, the
    node itself over the target context."""

    smap: TermMap
    body: "Formula"

    def __post_init__(self) -> None:
        if self.body.sort != self.smap.source:
            raise ContextError(
                f"substitution body sort {{{self.body.sort.label()}}} does not "
                f"match the map source {{{self.smap.source.label()}}}"
            )

    @property
    def sort(self) -> VarContext:
        return self.smap.target

    def __repr__(self) -> str:
        return f"<{format_formula(self)}>"


Formula = Union[Equality, Not, And, Or, Exists, Forall, Subst]


def formula_depth(u: Formula) -> int:
    """Connective/quantifier depth; equalities sit at depth 0."""
    if isinstance(u, Equality):
        return 0
    if isinstance(u, (Not, Exists, Forall, Subst)):
        return 1 + formula_depth(u.body)
    return 1 + max(formula_depth(u.left), formula_depth(u.right))


def term_rank(u: Formula) -> int:
    """Largest depth of a term occurring in the formula."""
    if isinstance(u, Equality):
        return max(term_depth(u.lhs), term_depth(u.rhs))
    if isinstance(u, (Not, Exists, Forall)):
        return term_rank(u.body)
    if isinstance(u, Subst):
        img = max((term_depth(t) for t in u.smap.images), default=0)
        return max(term_rank(u.body), img)
    return max(term_rank(u.left), term_rank(u.right))


def free_vars(u: Formula) -> frozenset[str]:
    if isinstance(u, Equality):
        return term_vars(u.lhs) | term_vars(u.rhs)
    if isinstance(u, Not):
        return free_vars(u.body)
    if isinstance(u, (And, Or)):
        return free_vars(u.left) | free_vars(u.right)
    if isinstance(u, (Exists, Forall)):
        return free_vars(u.body) - {u.var}
    out: frozenset[str] = frozenset()
    for name in free_vars(u.body):
        out = out | term_vars(u.smap.image(name))
    return out


def var_occurrences(u: Formula) -> list[tuple[str, bool]]:
    """All term-level variable occurrences as (name, occurs bound) pairs.

    Not defined on substitution nodes, whose occurrences are not literal.
    """
    out: list[tuple[str, bool]] = []

    def walk_term(t: Term, bound: frozenset[str]) -> None:
        for name in _term_occurrences(t):
            out.append((name, name in bound))

    def walk(f: Formula, bound: frozenset[str]) -> None:
        if isinstance(f, Equality):
            walk_term(f.lhs, bound)
            walk_term(f.rhs, bound)
        elif isinstance(f, Not):
            walk(f.body, bound)
        elif isinstance(f, (And, Or)):
            walk(f.left, bound)
            walk(f.right, bound)
        elif isinstance(f, (Exists, Forall)):
            walk(f.body, bound | {f.var})
        else:
            raise LogicGeoError(
                "occurrence analysis is not defined on substitution nodes"
            )

    walk(u, frozenset())
    return out


def _term_occurrences(t: Term) -> Iterator[str]:
    from .terms import Var
    if isinstance(t, Var):
        yield t.name
        return
    for a in t.args:
        yield from _term_occurrences(a)


def is_special(u: Formula, xvars: VarContext) -> bool:
    """True when every occurrence of an xvars variable is free and every
    occurrence of any other variable is bound."""
    for name, bound in var_occurrences(u):
        if name in xvars:
            if bound:
                return False
        elif not bound:
            return False
    return True


def normalize_universal(u: Formula) -> Formula:
    """Rewrite every universal quantifier as negation-exists-negation."""
    if isinstance(u, Equality):
        return u
    if isinstance(u, Not):
        return Not(normalize_universal(u.body))
    if isinstance(u, And):
        return And(normalize_universal(u.left), normalize_universal(u.right))
    if isinstance(u, Or):
        return Or(normalize_universal(u.left), normalize_universal(u.right))
    if isinstance(u, Exists):
        return Exists(u.var, normalize_universal(u.body))
    if isinstance(u, Forall):
        return Not(Exists(u.var, Not(normalize_universal(u.body))))
    return Subst(u.smap, normalize_universal(u.body))


# ---------------------------------------------------------------------------
# Parser.

class _FormulaParser:
    def __init__(self, text: str, sig: Signature):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0
        self.sig = sig

    def peek(self) -> Token:
        return self.toks[self.i]

    def take(self) -> Token:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, sym: str) -> None:
        tok = self.take()
        if not (tok.kind == "sym" and tok.text == sym):
            raise ParseError(
                f"expected {sym!r}, found {tok.text or 'end of input'!r}",
                self.text, tok.pos,
            )

    def at_sym(self, sym: str) -> bool:
        tok = self.peek()
        return tok.kind == "sym" and tok.text == sym

    def formula(self, ctx: VarContext) -> Formula:
        left = self.conjunction(ctx)
        while self.at_sym("|"):
            self.take()
            left = Or(left, self.conjunction(ctx))
        return left

    def conjunction(self, ctx: VarContext) -> Formula:
        left = self.unary(ctx)
        while self.at_sym("&"):
            self.take()
            left = And(left, self.unary(ctx))
        return left

    def unary(self, ctx: VarContext) -> Formula:
        tok = self.peek()
        if self.at_sym("!"):
            self.take()
            return Not(self.unary(ctx))
        if self.at_sym("("):
            self.take()
            inner = self.formula(ctx)
            self.expect(")")
            return inner
        if self.at_sym("["):
            self.take()
            return self.substitution(ctx)
        if tok.kind == "name" and tok.text in ("E", "A"):
            self.take()
            var_tok = self.take()
            if var_tok.kind != "name":
                raise ParseError("expected a variable after the quantifier",
                                 self.text, var_tok.pos)
            self.expect(".")
            if var_tok.text not in ctx:
                raise ParseError(
                    f"quantified variable {var_tok.text!r} not in sort "
                    f"{{{ctx.label()}}}",
                    self.text, var_tok.pos,
                )
            body = self.formula(ctx)
            if tok.text == "E":
                return Exists(var_tok.text, body)
            return Forall(var_tok.text, body)
        return self.atom(ctx)

    def atom(self, ctx: VarContext) -> Formula:
        lhs, self.i = parse_term_at(self.toks, self.i, ctx, self.sig, self.text)
        self.expect("==")
        rhs, self.i = parse_term_at(self.toks, self.i, ctx, self.sig, self.text)
        return Equality(lhs, rhs, ctx)

    def substitution(self, ctx: VarContext) -> Formula:
        bindings: dict[str, Term] = {}
        order_pos = self.peek().pos
        while True:
            name_tok = self.take()
            if name_tok.kind != "name":
                raise ParseError("expected a variable in substitution binding",
                                 self.text, name_tok.pos)
            self.expect(":=")
            image, self.i = parse_term_at(self.toks, self.i, ctx, self.sig, self.text)
            if name_tok.text in bindings:
                raise ParseError(
                    f"variable {name_tok.text!r} bound twice in substitution",
                    self.text, name_tok.pos,
                )
            bindings[name_tok.text] = image
            if self.at_sym(","):
                self.take()
                continue
            break
        self.expect("]")
        try:
            source = VarContext(tuple(bindings))
        except ContextError as exc:
            raise ParseError(str(exc), self.text, order_pos) from None
        smap = TermMap.from_assignments(source, ctx, bindings)
        body = self.unary(source)
        return Subst(smap, body)


def parse_formula(text: str, sort: VarContext, sig: Signature) -> Formula:
    """Parse a formula over the given sort; universal quantifiers are
    normalized away, so the result contains no Forall nodes."""
    p = _FormulaParser(text, sig)
    out = p.formula(sort)
    tok = p.peek()
    if tok.kind != "end":
        raise ParseError(f"unexpected input after formula: {tok.text!r}",
                         text, tok.pos)
    return normalize_universal(out)


# ---------------------------------------------------------------------------
# Printer.  format_formula(parse_formula(s)) round-trips on Forall-free
# formulas.  The tail flag tracks whether the formula extends to the end of
# its enclosing region, which is when a quantifier may print bare.

def format_formula(u: Formula) -> str:
    return _render(u, 1, True)


def _render(u: Formula, min_prec: int, tail: bool) -> str:
    if isinstance(u, Equality):
        return f"{format_term(u.lhs)} == {format_term(u.rhs)}"
    if isinstance(u, Not):
        return "!" + _render(u.body, 3, tail)
    if isinstance(u, Subst):
        return f"[{u.smap.label()}]" + _render(u.body, 3, False)
    if isinstance(u, (Exists, Forall)):
        kw = "E" if isinstance(u, Exists) else "A"
        inner = f"{kw} {u.var} . " + _render(u.body, 1, True)
        return inner if tail else f"({inner})"
    if isinstance(u, And):
        me = 2
        if me < min_prec:
            return "(" + _render(u, 1, True) + ")"
        left = _render(u.left, 2, False)
        right = _render(u.right, 3, tail)
        return f"{left} & {right}"
    me = 1
    if me < min_prec:
        return "(" + _render(u, 1, True) + ")"
    left = _render(u.left, 1, False)
    right = _render(u.right, 2, tail)
    return f"{left} | {right}"


# ---------------------------------------------------------------------------
# Formula sets: a finite bunch of formulas sharing one sort.

@dataclass(frozen=True)
class FormulaSet:
    sort: VarContext
    formulas: tuple[Formula, ...]

    def __post_init__(self) -> None:
        for f in self.formulas:
            if f.sort != self.sort:
                raise ContextError(
                    f"formula over {{{f.sort.label()}}} in a set of sort "
                    f"{{{self.sort.label()}}}"
                )

    def __iter__(self) -> Iterator[Formula]:
        return iter(self.formulas)

    def __len__(self) -> int:
        return len(self.formulas)

    def __contains__(self, f: object) -> bool:
        return f in self.formulas


# ---------------------------------------------------------------------------
# Fragments: the finite, canonically ordered slice of all formulas over a
# sort whose connective depth and term depth are both bounded by `depth`.
#
# The enumeration is levelled by joint rank max(connective depth, term
# depth): block 0, block 1, ...  Each block lists its new equalities first,
# ordered by (left term, right term) in term enumeration order, then its new
# compound formulas level by level, negations before conjunctions before
# disjunctions before quantifications, operands in enumeration order (for
# quantifiers: quantified variable in context order outermost).  Blocks only
# depend on their own index, so the fragment at depth d+1 extends the
# fragment at depth d as a prefix.

@dataclass(frozen=True)
class Fragment:
    sort: VarContext
    depth: int
    sig: Signature
    with_adjoined: bool = True

    def __post_init__(self) -> None:
        if self.depth < 0:
            raise ValueError("fragment depth must be nonnegative")

    def label(self) -> str:
        consts = "adj" if self.with_adjoined else "noadj"
        return (f"{{{self.sort.label()}}}|d={self.depth}|{self.sig.label()}"
                f"|{consts}")

    def term_levels(self) -> tuple[tuple[Term, ...], ...]:
        return _term_levels(self.sort, self.sig, self.depth, self.with_adjoined)

    def base_terms(self) -> tuple[Term, ...]:
        return tuple(t for level in self.term_levels() for t in level)

    def equality_pairs_at(self, rank: int) -> Iterator[tuple[Term, Term]]:
        """New equality term pairs of joint rank exactly `rank`."""
        levels = self.term_levels()
        cum = [t for level in levels[: rank + 1] for t in level]
        lo = len(cum) - len(levels[rank])
        for i, w in enumerate(cum):
            for j, w2 in enumerate(cum):
                if rank > 0 and i < lo and j < lo:
                    continue
                yield (w, w2)

    def size(self) -> int:
        """Number of fragment formulas, computed without materializing."""
        return _fragment_size(self)

    def formulas_iter(self) -> Iterator[Formula]:
        """Stream the fragment in canonical order, without a size check."""
        return _iter_fragment(self)

    def formulas(self, max_size: int = DEFAULT_MAX_FRAGMENT) -> tuple[Formula, ...]:
        total = self.size()
        if total > max_size:
            raise FragmentLimitError(
                f"fragment {self.label()} has {total} formulas, exceeding the "
                f"limit {max_size}"
            )
        return _fragment_formulas(self)

    def index_map(self, max_size: int = DEFAULT_MAX_FRAGMENT) -> dict[Formula, int]:
        self.formulas(max_size)
        return _fragment_index(self)

    def negation_pairs(
        self, max_size: int = DEFAULT_MAX_FRAGMENT
    ) -> tuple[tuple[int, int], ...]:
        """Pairs (i, j) where formula j is the negation of formula i."""
        formulas = self.formulas(max_size)
        index = self.index_map(max_size)
        out = []
        for i, f in enumerate(formulas):
            j = index.get(Not(f))
            if j is not None:
                out.append((i, j))
        return tuple(out)

    def sample(self, rng: random.Random, count: int) -> list[Formula]:
        """Deterministic random members of the fragment (no duplicates)."""
        base = self.base_terms()
        if not base:
            return []
        kinds = ["eq", "not", "and", "or"]
        if len(self.sort):
            kinds.append("exists")

        def draw(budget: int) -> Formula:
            kind = "eq" if budget == 0 else rng.choice(kinds)
            if kind == "eq":
                return Equality(rng.choice(base), rng.choice(base), self.sort)
            if kind == "not":
                return Not(draw(budget - 1))
            if kind == "and":
                return And(draw(budget - 1), draw(budget - 1))
            if kind == "or":
                return Or(draw(budget - 1), draw(budget - 1))
            return Exists(rng.choice(self.sort.names), draw(budget - 1))

        out: list[Formula] = []
        seen: set[Formula] = set()
        attempts = 0
        while len(out) < count and attempts < 50 * count:
            attempts += 1
            f = draw(self.depth)
            if f not in seen:
                seen.add(f)
                out.append(f)
        return out


@lru_cache(maxsize=256)
def _term_levels(
    sort: VarContext, sig: Signature, depth: int, with_adjoined: bool
) -> tuple[tuple[Term, ...], ...]:
    levels = enum_terms_by_depth(
        sort, sig, depth, include_adjoined=with_adjoined
    )
    return tuple(tuple(level) for level in levels)


def _pool_lists(
    entries: list[tuple[Formula, int, int]], c: int, block: int
) -> tuple[list, list, list, list]:
    """Operand candidate lists for sub-level (block, c), in enumeration order:
    all with cdepth <= c-1, those with cdepth == c-1, those with term rank ==
    block, and those with both."""
    all_le, exact_cd, tr_exact, both = [], [], [], []
    for e in entries:
        _, cd, tr = e
        if cd > c - 1:
            continue
        all_le.append(e)
        if cd == c - 1:
            exact_cd.append(e)
            if tr == block:
                both.append(e)
        if tr == block:
            tr_exact.append(e)
    return all_le, exact_cd, tr_exact, both


def _iter_fragment(frag: Fragment) -> Iterator[Formula]:
    entries: list[tuple[Formula, int, int]] = []
    sort = frag.sort
    for block in range(frag.depth + 1):
        for w, w2 in frag.equality_pairs_at(block):
            f = Equality(w, w2, sort)
            entries.append((f, 0, block))
            yield f
        for c in range(1, block + 1):
            all_le, exact_cd, tr_exact, both = _pool_lists(entries, c, block)
            neg_src = exact_cd if c == block else both
            new: list[tuple[Formula, int, int]] = []
            for g, _, tr in neg_src:
                f = Not(g)
                new.append((f, c, tr))
                yield f
            for make in (And, Or):
                for g, cd, tr in all_le:
                    need_cd = cd < c - 1
                    need_tr = c < block and tr < block
                    if need_cd and need_tr:
                        vlist = both
                    elif need_cd:
                        vlist = exact_cd
                    elif need_tr:
                        vlist = tr_exact
                    else:
                        vlist = all_le
                    for h, _, tr2 in vlist:
                        f = make(g, h)
                        new.append((f, c, max(tr, tr2)))
                        yield f
            for x in sort.names:
                for g, _, tr in neg_src:
                    f = Exists(x, g)
                    new.append((f, c, tr))
                    yield f
            entries.extend(new)


def _fragment_size(frag: Fragment) -> int:
    d = frag.depth
    levels = frag.term_levels()
    m = [len(level) for level in levels]
    cum = []
    acc = 0
    for v in m:
        acc += v
        cum.append(acc)
    k = len(frag.sort)
    # cnt[c][t]: formulas with connective depth c and term rank t
    cnt = [[0] * (d + 1) for _ in range(d + 1)]
    total = 0

    def upto(cmax: int, tmax: int) -> int:
        if cmax < 0 or tmax < 0:
            return 0
        return sum(cnt[ci][ti] for ci in range(cmax + 1) for ti in range(tmax + 1))

    for block in range(d + 1):
        eq_new = cum[block] ** 2 - (cum[block - 1] ** 2 if block > 0 else 0)
        cnt[0][block] += eq_new
        total += eq_new
        for c in range(1, block + 1):
            if c == block:
                neg_by_t = [cnt[c - 1][t] for t in range(block + 1)]
            else:
                neg_by_t = [0] * (block + 1)
                neg_by_t[block] = cnt[c - 1][block]
            pair_by_t = [0] * (block + 1)
            if c == block:
                trange = range(block + 1)
            else:
                trange = range(block, block + 1)
            for t in trange:
                f11 = upto(c - 1, t) ** 2
                f01 = upto(c - 2, t) ** 2
                f10 = upto(c - 1, t - 1) ** 2
                f00 = upto(c - 2, t - 1) ** 2
                pair_by_t[t] = f11 - f01 - f10 + f00
            for t in range(block + 1):
                add = neg_by_t[t] + 2 * pair_by_t[t] + k * neg_by_t[t]
                cnt[c][t] += add
                total += add
    return total


@lru_cache(maxsize=64)
def _fragment_formulas(frag: Fragment) -> tuple[Formula, ...]:
    return tuple(_iter_fragment(frag))


@lru_cache(maxsize=64)
def _fragment_index(frag: Fragment) -> dict[Formula, int]:
    return {f: i for i, f in enumerate(_fragment_formulas(frag))}
