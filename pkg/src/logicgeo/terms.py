"""Terms of the free algebra over a finite variable context, and maps between them.

A variable context is a finite ordered set of variable names.  The order is
canonical: names are compared by (alphabetic prefix, numeric suffix), so
``x2 < x10 < y1``.  Terms are variables or operation applications; every term
lives over some context, but the term objects themselves carry no context,
which keeps them shareable between contexts that agree on the variables used.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, Mapping, Union

from .errors import ContextError, LimitError, ParseError, SignatureError

# Quantifier keywords of the formula syntax; not usable as variable or
# operation names so that the tokenizer never has to guess.
RESERVED_WORDS = frozenset({"E", "A"})

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_NAME_KEY_RE = re.compile(r"([A-Za-z_]+?)(\d*)\Z")


def name_sort_key(name: str) -> tuple[str, int, str]:
    """Canonical ordering key for variable names: prefix, then numeric suffix."""
    m = _NAME_KEY_RE.match(name)
    if m is None:
        return (name, -1, name)
    prefix, digits = m.groups()
    return (prefix, int(digits) if digits else -1, name)


def _check_ident(name: str, what: str, err: type = ContextError) -> None:
    if not _IDENT_RE.match(name):
        raise err(f"{what} {name!r} is not a valid identifier")
    if name in RESERVED_WORDS:
        raise err(f"{what} {name!r} is a reserved word")


@dataclass(frozen=True)
class VarContext:
    """A finite set of variable names in canonical order."""

    names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        names = tuple(self.names)
        for nm in names:
            _check_ident(nm, "variable name")
        if len(set(names)) != len(names):
            raise ContextError(f"duplicate variable in context: {names}")
        object.__setattr__(self, "names", tuple(sorted(names, key=name_sort_key)))

    @classmethod
    def of(cls, spec: str | Iterable[str]) -> "VarContext":
        """Build a context from 'x1,x2' or an iterable of names."""
        if isinstance(spec, str):
            parts = [p.strip() for p in spec.replace(",", " ").split()]
            return cls(tuple(p for p in parts if p))
        return cls(tuple(spec))

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: object) -> bool:
        return name in self.names

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ContextError(
                f"variable {name!r} not in context {{{self.label()}}}"
            ) from None

    def union(self, other: "VarContext") -> "VarContext":
        return VarContext(tuple(set(self.names) | set(other.names)))

    def issubset(self, other: "VarContext") -> bool:
        return set(self.names) <= set(other.names)

    def label(self) -> str:
        return ",".join(self.names) if self.names else "-"


@dataclass(frozen=True)
class Var:
    """A variable occurrence."""

    name: str


@dataclass(frozen=True)
class App:
    """An operation applied to argument terms; arity 0 gives a constant."""

    op: str
    args: tuple["Term", ...] = ()


Term = Union[Var, App]


def term_depth(t: Term) -> int:
    if isinstance(t, Var) or not t.args:
        return 0
    return 1 + max(term_depth(a) for a in t.args)


def term_vars(t: Term) -> frozenset[str]:
    if isinstance(t, Var):
        return frozenset((t.name,))
    out: frozenset[str] = frozenset()
    for a in t.args:
        out = out | term_vars(a)
    return out


def format_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if not t.args:
        return t.op
    return f"{t.op}({', '.join(format_term(a) for a in t.args)})"


@dataclass(frozen=True)
class Signature:
    """Operation names with arities, optional defining identities, and the
    names of any adjoined constants (constants naming carrier elements)."""

    ops: tuple[tuple[str, int], ...]
    identities: tuple[tuple[Term, Term], ...] = ()
    adjoined: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        seen = set()
        for name, arity in self.ops:
            _check_ident(name, "operation name", SignatureError)
            if name in seen:
                raise SignatureError(f"duplicate operation name {name!r}")
            seen.add(name)
            if arity < 0:
                raise SignatureError(f"operation {name!r} has negative arity")
        arities = dict(self.ops)
        for name in self.adjoined:
            if arities.get(name) != 0:
                raise SignatureError(
                    f"adjoined constant {name!r} is not an arity-0 operation"
                )
        for lhs, rhs in self.identities:
            for side in (lhs, rhs):
                self._check_term(side)

    def _check_term(self, t: Term) -> None:
        if isinstance(t, Var):
            return
        if t.op not in dict(self.ops):
            raise SignatureError(f"identity uses unknown operation {t.op!r}")
        if len(t.args) != dict(self.ops)[t.op]:
            raise SignatureError(
                f"identity applies {t.op!r} to {len(t.args)} arguments"
            )
        for a in t.args:
            self._check_term(a)

    def has(self, name: str) -> bool:
        return any(name == n for n, _ in self.ops)

    def arity(self, name: str) -> int:
        for n, a in self.ops:
            if n == name:
                return a
        raise SignatureError(f"unknown operation {name!r}")

    @property
    def consts(self) -> tuple[str, ...]:
        return tuple(n for n, a in self.ops if a == 0)

    def label(self) -> str:
        parts = ",".join(f"{n}/{a}" for n, a in self.ops)
        if self.adjoined:
            parts += ";adj=" + ",".join(self.adjoined)
        return parts


# ---------------------------------------------------------------------------
# Tokenizer shared by the term and formula parsers.

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<sym>==|:=|[!&|().,\[\]]))"
)


@dataclass(frozen=True)
class Token:
    kind: str  # "name", "sym", or "end"
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            # Skip trailing whitespace; anything else is a stray character.
            rest = text[i:]
            if rest.strip() == "":
                break
            bad = rest.strip()[0]
            raise ParseError(f"unexpected character {bad!r}", text, i + rest.index(bad))
        if m.group("name") is not None:
            toks.append(Token("name", m.group("name"), m.start("name")))
        else:
            toks.append(Token("sym", m.group("sym"), m.start("sym")))
        i = m.end()
    toks.append(Token("end", "", len(text)))
    return toks


def parse_term(text: str, ctx: VarContext, sig: Signature) -> Term:
    """Parse a single term over the given context and signature."""
    toks = tokenize(text)
    t, i = parse_term_at(toks, 0, ctx, sig, text)
    if toks[i].kind != "end":
        raise ParseError(
            f"unexpected input after term: {toks[i].text!r}", text, toks[i].pos
        )
    return t


def parse_term_at(
    toks: list[Token], i: int, ctx: VarContext, sig: Signature, text: str
) -> tuple[Term, int]:
    """Cursor-style term parser; also used inside the formula parser."""
    tok = toks[i]
    if tok.kind != "name":
        raise ParseError(f"expected a term, found {tok.text or 'end of input'!r}",
                         text, tok.pos)
    name = tok.text
    i += 1
    if toks[i].kind == "sym" and toks[i].text == "(":
        if not sig.has(name):
            raise ParseError(f"unknown operation {name!r}", text, tok.pos)
        arity = sig.arity(name)
        if arity == 0:
            raise ParseError(f"constant {name!r} takes no arguments", text, tok.pos)
        i += 1
        args: list[Term] = []
        while True:
            arg, i = parse_term_at(toks, i, ctx, sig, text)
            args.append(arg)
            if toks[i].kind == "sym" and toks[i].text == ",":
                i += 1
                continue
            break
        if not (toks[i].kind == "sym" and toks[i].text == ")"):
            raise ParseError("expected ',' or ')' in argument list", text, toks[i].pos)
        i += 1
        if len(args) != arity:
            raise ParseError(
                f"operation {name!r} expects {arity} arguments, got {len(args)}",
                text, tok.pos,
            )
        return App(name, tuple(args)), i
    if sig.has(name):
        if name in ctx:
            raise ParseError(
                f"name {name!r} is both a variable and an operation", text, tok.pos
            )
        if sig.arity(name) == 0:
            return App(name), i
        raise ParseError(
            f"operation {name!r} expects {sig.arity(name)} arguments", text, tok.pos
        )
    if name in ctx:
        return Var(name), i
    raise ParseError(f"unknown symbol {name!r}", text, tok.pos)


# ---------------------------------------------------------------------------
# Maps between free algebras: a variable of the source context is sent to a
# term over the target context.

@dataclass(frozen=True)
class TermMap:
    """A map W(source) -> W(target), determined by images of source variables."""

    source: VarContext
    target: VarContext
    images: tuple[Term, ...]

    def __post_init__(self) -> None:
        if len(self.images) != len(self.source):
            raise ContextError(
                f"term map needs {len(self.source)} images, got {len(self.images)}"
            )
        for name, img in zip(self.source.names, self.images):
            extra = term_vars(img) - set(self.target.names)
            if extra:
                raise ContextError(
                    f"image of {name!r} uses variables outside the target "
                    f"context: {sorted(extra)}"
                )

    @classmethod
    def from_assignments(
        cls, source: VarContext, target: VarContext, mapping: Mapping[str, Term]
    ) -> "TermMap":
        images = []
        for name in source.names:
            if name not in mapping:
                raise ContextError(f"term map is missing an image for {name!r}")
            images.append(mapping[name])
        extra = set(mapping) - set(source.names)
        if extra:
            raise ContextError(f"term map binds unknown variables: {sorted(extra)}")
        return cls(source, target, tuple(images))

    @classmethod
    def identity(cls, ctx: VarContext) -> "TermMap":
        return cls(ctx, ctx, tuple(Var(n) for n in ctx.names))

    def image(self, name: str) -> Term:
        return self.images[self.source.index(name)]

    def as_dict(self) -> dict[str, Term]:
        return dict(zip(self.source.names, self.images))

    def label(self) -> str:
        return ", ".join(
            f"{n}:={format_term(t)}" for n, t in zip(self.source.names, self.images)
        )

    def __call__(self, t: Term) -> Term:
        return apply_term_map(self, t)


def apply_term_map(s: TermMap, t: Term) -> Term:
    if isinstance(t, Var):
        return s.image(t.name)
    return App(t.op, tuple(apply_term_map(s, a) for a in t.args))


def compose_term_maps(outer: TermMap, inner: TermMap) -> TermMap:
    """The map sending each source variable of `inner` through both maps."""
    if inner.target != outer.source:
        raise ContextError(
            f"cannot compose: inner target {{{inner.target.label()}}} differs "
            f"from outer source {{{outer.source.label()}}}"
        )
    return TermMap(
        inner.source, outer.target,
        tuple(apply_term_map(outer, img) for img in inner.images),
    )


def single_swap_map(ctx: VarContext, x: str, w: Term) -> TermMap:
    """The endomorphism of W(ctx) sending x to w and fixing everything else."""
    ctx.index(x)
    extra = term_vars(w) - set(ctx.names)
    if extra:
        raise ContextError(f"replacement term uses unknown variables: {sorted(extra)}")
    return TermMap(
        ctx, ctx, tuple(w if n == x else Var(n) for n in ctx.names)
    )


# ---------------------------------------------------------------------------
# Canonical term enumeration, levelled by depth.  Level 0 lists variables in
# context order, then arity-0 operations in signature order; level k lists,
# operation by operation in signature order, the applications whose arguments
# come from lower levels (at least one of depth exactly k-1), the argument
# tuples in lexicographic order of their enumeration indices.

def enum_terms_by_depth(
    ctx: VarContext,
    sig: Signature,
    depth: int,
    *,
    include_adjoined: bool = True,
    max_terms: int = 500_000,
) -> list[list[Term]]:
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    level0: list[Term] = [Var(n) for n in ctx.names]
    for name, arity in sig.ops:
        if arity == 0 and (include_adjoined or name not in sig.adjoined):
            level0.append(App(name))
    levels = [level0]
    cumulative: list[Term] = list(level0)
    cum_sizes = [len(level0)]  # cum_sizes[k] = number of terms of depth <= k
    for k in range(1, depth + 1):
        total = cum_sizes[-1]
        prev = cum_sizes[-2] if len(cum_sizes) >= 2 else 0
        new_count = 0
        for _, arity in sig.ops:
            if arity >= 1:
                new_count += total ** arity - prev ** arity
        if cum_sizes[-1] + new_count > max_terms:
            raise LimitError(
                f"term enumeration to depth {k} over {{{ctx.label()}}} needs "
                f"{cum_sizes[-1] + new_count} terms, exceeding the cap {max_terms}"
            )
        # keep only tuples whose deepest argument has depth exactly k-1
        threshold = prev if k > 1 else 0
        level: list[Term] = []
        for name, arity in sig.ops:
            if arity == 0:
                continue
            for combo in product(range(total), repeat=arity):
                if k > 1 and max(combo) < threshold:
                    continue
                level.append(App(name, tuple(cumulative[c] for c in combo)))
        levels.append(level)
        cumulative.extend(level)
        cum_sizes.append(len(cumulative))
    return levels


def enum_terms(
    ctx: VarContext,
    sig: Signature,
    depth: int,
    *,
    include_adjoined: bool = True,
    max_terms: int = 500_000,
) -> list[Term]:
    """All terms of depth <= depth, in canonical enumeration order."""
    out: list[Term] = []
    for level in enum_terms_by_depth(
        ctx, sig, depth, include_adjoined=include_adjoined, max_terms=max_terms
    ):
        out.extend(level)
    return out
