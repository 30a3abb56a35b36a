"""Batch command-line surface.

Loads finite algebras from table files, evaluates formulas, closes point and
formula sets, enumerates types and orbits, and compares algebras.  All
reports are deterministic: plain text by default, JSON under --structured.

Exit status: 0 on success, 1 on usage or parse errors, 2 when a configured
limit (space size, fragment size, family size) is exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from typing import Sequence

from .algebra import (DEFAULT_MAX_SPACE, FiniteAlgebra, Point, PointSpace,
                      automorphisms, ensure_space_size, is_isomorphic,
                      load_algebra, orbit_partition)
from .errors import LimitError, LogicGeoError, UsageError
from .formulas import (DEFAULT_MAX_FRAGMENT, Formula, Fragment, format_formula,
                       free_vars, parse_formula)
from .geometry import (DEFAULT_MAX_FAMILY, TypeClass, double_closure,
                       formula_closure, lg_equivalent_on_fragment,
                       lg_isotyped_on_fragment, lg_type_census,
                       mt_type_restrict, solution_set)
from .semantics import ValueSet, restrict_context, val
from .terms import VarContext, tokenize

POINT_LIMIT_PLAIN = 32
POINT_LIMIT_JSON = 4096


@dataclass
class Workspace:
    """Loaded algebras plus the limits every command runs under."""

    algebras: dict[str, FiniteAlgebra] = field(default_factory=dict)
    window: int = 0
    max_space: int = DEFAULT_MAX_SPACE
    max_fragment: int = DEFAULT_MAX_FRAGMENT
    max_family: int = DEFAULT_MAX_FAMILY
    seed: int = 0
    structured: bool = False

    def load(self, path: str) -> None:
        try:
            alg = load_algebra(path)
        except OSError as exc:
            raise UsageError(f"cannot read algebra file {path!r}: {exc}")
        if alg.name in self.algebras:
            raise UsageError(f"algebra name {alg.name!r} loaded twice")
        self.algebras[alg.name] = alg

    def get(self, name: str) -> FiniteAlgebra:
        if name not in self.algebras:
            known = ", ".join(sorted(self.algebras)) or "none"
            raise UsageError(
                f"algebra {name!r} is not loaded (loaded: {known}); "
                f"pass --load FILE"
            )
        return self.algebras[name]


# ---------------------------------------------------------------------------
# Argument helpers.

def _parse_sort(text: str) -> VarContext:
    if text.strip() in ("-", ""):
        return VarContext(())
    names = [part.strip() for part in text.split(",")]
    if any(not name for name in names):
        raise UsageError(f"malformed sort {text!r}; expected e.g. x1,x2 or -")
    return VarContext.of(names)


def _parse_points(text: str, space: PointSpace) -> list[Point]:
    """Parse a whitespace-separated list of tuples like '(1,2) (0,0)'."""
    out: list[Point] = []
    for chunk in text.split():
        body = chunk.strip()
        if not (body.startswith("(") and body.endswith(")")):
            raise UsageError(f"malformed point {chunk!r}; expected e.g. (1,2)")
        inner = body[1:-1].strip()
        coords: tuple[int, ...]
        if not inner:
            coords = ()
        else:
            try:
                coords = tuple(int(p.strip()) for p in inner.split(","))
            except ValueError:
                raise UsageError(
                    f"malformed point {chunk!r}; coordinates must be integers"
                ) from None
        if len(coords) != len(space.ctx):
            raise UsageError(
                f"point {chunk!r} has {len(coords)} coordinates, sort "
                f"{{{space.ctx.label()}}} needs {len(space.ctx)}"
            )
        for v in coords:
            if not (0 <= v < space.n):
                raise UsageError(
                    f"point {chunk!r} has coordinate {v} outside 0..{space.n - 1}"
                )
        out.append(Point(space.ctx, coords))
    return out


def _quantified_names(text: str) -> list[str]:
    """Names bound by a quantifier anywhere in the formula text."""
    toks = tokenize(text)
    out = []
    for i, tok in enumerate(toks[:-1]):
        if tok.kind == "name" and tok.text in ("E", "A"):
            nxt = toks[i + 1]
            if nxt.kind == "name" and nxt.text not in ("E", "A"):
                out.append(nxt.text)
    return out


def _eval_on_sort(
    text: str, sort: VarContext, alg: FiniteAlgebra, ws: Workspace
) -> tuple[Formula, ValueSet]:
    """Parse and evaluate formula text whose value lives over `sort`.

    Quantified variables may fall outside the user's sort; they are adjoined
    for parsing and the resulting value set, cylindrical over them, is
    restricted back down.  Free variables must all lie in the sort.
    """
    extra = [x for x in _quantified_names(text) if x not in sort]
    parse_sort = sort.union(VarContext.of(extra)) if extra else sort
    ensure_space_size(PointSpace(parse_sort, alg.size), ws.max_space)
    u = parse_formula(text, parse_sort, alg.sig)
    stray = [x for x in sorted(free_vars(u), key=parse_sort.index)
             if x not in sort]
    if stray:
        raise UsageError(
            f"free variable {stray[0]!r} is not in the sort {{{sort.label()}}}"
        )
    a = val(u, alg, max_space=ws.max_space)
    if extra:
        a = restrict_context(a, sort)
    return u, a


def _points_payload(a: ValueSet, limit: int) -> tuple[list[list[int]], bool]:
    tuples = a.point_tuples()
    shown = tuples[:limit]
    return [list(t) for t in shown], len(tuples) > limit


def _emit(ws: Workspace, lines: list[str], payload: dict) -> None:
    if ws.structured:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in lines:
            print(line)


# ---------------------------------------------------------------------------
# Commands.

def cmd_eval(ws: Workspace, args: argparse.Namespace) -> int:
    alg = ws.get(args.algebra)
    sort = _parse_sort(args.sort)
    u, a = _eval_on_sort(args.formula, sort, alg, ws)
    lines = [
        f"formula: {format_formula(u)}",
        f"algebra: {alg.name}",
        f"sort: {{{sort.label()}}}",
        f"value: {a.label(POINT_LIMIT_PLAIN)}",
        f"count: {len(a)}/{a.space.size}",
        f"full: {'yes' if a.is_full else 'no'}",
    ]
    points, truncated = _points_payload(a, POINT_LIMIT_JSON)
    payload = {
        "command": "eval",
        "algebra": alg.name,
        "sort": list(sort.names),
        "formula": format_formula(u),
        "count": len(a),
        "space": a.space.size,
        "full": a.is_full,
        "points": points,
        "points_truncated": truncated,
    }
    _emit(ws, lines, payload)
    return 0


def cmd_close(ws: Workspace, args: argparse.Namespace) -> int:
    alg = ws.get(args.algebra)
    sort = _parse_sort(args.sort)
    if (args.points is None) == (not args.formula):
        raise UsageError("pass exactly one of --points or --formula")
    space = PointSpace(sort, alg.size)
    ensure_space_size(space, ws.max_space)
    if args.points is not None:
        pts = _parse_points(args.points, space)
        a = ValueSet.from_points(space, pts)
        source = "points"
        input_formulas: list[str] = []
    else:
        formulas = [
            parse_formula(text, sort, alg.sig) for text in args.formula
        ]
        a = solution_set(formulas, alg, sort=sort, max_space=ws.max_space)
        source = "formulas"
        input_formulas = [format_formula(u) for u in formulas]
    frag = Fragment(sort, args.depth, alg.sig)
    closed_set = double_closure(a, frag, alg, max_entries=ws.max_family)
    closed = closed_set == a
    lines = [
        f"close: algebra={alg.name} sort={{{sort.label()}}} depth={args.depth}",
        f"input ({source}): {a.label(POINT_LIMIT_PLAIN)}",
        f"input count: {len(a)}/{space.size}",
    ]
    payload = {
        "command": "close",
        "algebra": alg.name,
        "sort": list(sort.names),
        "depth": args.depth,
        "input_source": source,
        "input_formulas": input_formulas,
        "input_count": len(a),
        "space": space.size,
    }
    if frag.size() <= ws.max_fragment:
        holding = formula_closure(a, frag, alg, max_fragment=ws.max_fragment)
        lines.append(
            f"formulas holding on input: {len(holding.formulas)} of {frag.size()}"
        )
        payload["fragment_size"] = frag.size()
        payload["holding_count"] = len(holding.formulas)
    pts, truncated = _points_payload(closed_set, POINT_LIMIT_JSON)
    lines += [
        f"closure: {closed_set.label(POINT_LIMIT_PLAIN)}",
        f"closure count: {len(closed_set)}/{space.size}",
        f"closed: {'yes' if closed else 'no'}",
    ]
    payload.update({
        "closure_points": pts,
        "closure_truncated": truncated,
        "closure_count": len(closed_set),
        "closed": closed,
    })
    _emit(ws, lines, payload)
    return 0


def cmd_types(ws: Workspace, args: argparse.Namespace) -> int:
    alg = ws.get(args.algebra)
    sort = _parse_sort(args.sort)
    space = PointSpace(sort, alg.size)
    ensure_space_size(space, ws.max_space)
    orbits = orbit_partition(alg, sort, limit=ws.max_space)
    if args.mode == "lg":
        frag = Fragment(sort, args.depth, alg.sig)
        census = lg_type_census(
            alg, frag, max_fragment=ws.max_fragment, max_space=ws.max_space
        )
        window_names: list[str] = list(sort.names)
    else:
        extra = [f"y{i + 1}" for i in range(ws.window)]
        window = sort.union(VarContext.of(extra)) if extra else sort
        wfrag = Fragment(window, args.depth, alg.sig)
        window_names = list(window.names)
        groups: dict[int, list[int]] = {}
        order: list[int] = []
        fps = {}
        for p in range(space.size):
            mu = space.point(p)
            fp = mt_type_restrict(
                mu, wfrag, alg, max_fragment=ws.max_fragment
            )
            key = fp.bits
            if key not in groups:
                groups[key] = []
                order.append(key)
                fps[key] = fp
            groups[key].append(p)
        census = []
        for key in order:
            census.append(TypeClass(fps[key], len(groups[key]),
                                    space.point(groups[key][0])))
        frag = wfrag
    lines = [
        f"types: algebra={alg.name} sort={{{sort.label()}}} "
        f"depth={args.depth} mode={args.mode}",
    ]
    if args.mode == "mt":
        lines.append(f"window: {{{','.join(window_names)}}}"
                     if window_names else "window: {-}")
    lines += [
        f"fragment: {frag.size()} formulas",
        f"fingerprints: {len(census)}",
    ]
    classes = []
    for i, tc in enumerate(census):
        lines.append(
            f"[{i + 1}] count={tc.count} example={tc.representative.label()} "
            f"true={tc.fingerprint.member_count()}/{tc.fingerprint.size} "
            f"digest={tc.fingerprint.digest()}"
        )
        classes.append({
            "count": tc.count,
            "example": list(tc.representative.values),
            "true_count": tc.fingerprint.member_count(),
            "fragment_size": tc.fingerprint.size,
            "digest": tc.fingerprint.digest(),
        })
    lines.append(f"orbits: {len(orbits)}")
    payload = {
        "command": "types",
        "algebra": alg.name,
        "sort": list(sort.names),
        "depth": args.depth,
        "mode": args.mode,
        "window": window_names,
        "fragment_size": frag.size(),
        "fingerprints": classes,
        "orbit_count": len(orbits),
    }
    _emit(ws, lines, payload)
    return 0


def cmd_equiv(ws: Workspace, args: argparse.Namespace) -> int:
    a = ws.get(args.algebra1)
    b = ws.get(args.algebra2)
    sort = _parse_sort(args.sort)
    frag = Fragment(sort, args.depth, a.sig)
    iso_report = lg_isotyped_on_fragment(
        a, b, frag, max_entries=ws.max_family
    )
    eq_report = lg_equivalent_on_fragment(
        a, b, frag, seed=ws.seed, max_entries=ws.max_family
    )
    isomorphic, perm = is_isomorphic(a, b)
    lines = [
        f"equiv: {a.name} vs {b.name} sort={{{sort.label()}}} depth={args.depth}",
        f"isotyped: {'yes' if iso_report.isotyped else 'no'}",
    ]
    payload = {
        "command": "equiv",
        "algebra1": a.name,
        "algebra2": b.name,
        "sort": list(sort.names),
        "depth": args.depth,
        "isotyped": iso_report.isotyped,
        "isotyped_checked": iso_report.checked_entries,
        "equivalent": eq_report.equivalent,
        "equivalent_checked": eq_report.checked_systems,
        "isomorphic": isomorphic,
    }
    if not iso_report.isotyped:
        wf = format_formula(iso_report.witness_formula)
        lines.append(f"  witness formula: {wf}")
        lines.append(
            f"  unmatched point: {iso_report.witness_point.label()} "
            f"in {iso_report.witness_algebra}"
        )
        payload["isotyped_witness"] = wf
        payload["isotyped_witness_algebra"] = iso_report.witness_algebra
        payload["isotyped_witness_point"] = list(iso_report.witness_point.values)
    lines.append(f"equivalent: {'yes' if eq_report.equivalent else 'no'}")
    if not eq_report.equivalent:
        wf = format_formula(eq_report.witness_formula)
        lines.append(f"  witness formula: {wf}")
        lines.append(f"  over a system of {len(eq_report.witness_system)} formulas")
        payload["equivalent_witness"] = wf
        payload["equivalent_system"] = [
            format_formula(u) for u in eq_report.witness_system
        ]
    lines.append(f"isomorphic: {'yes' if isomorphic else 'no'}")
    if isomorphic:
        lines.append(f"  carrier map: {' '.join(str(v) for v in perm)}")
        payload["isomorphism"] = list(perm)
    _emit(ws, lines, payload)
    return 0


def cmd_orbits(ws: Workspace, args: argparse.Namespace) -> int:
    alg = ws.get(args.algebra)
    sort = _parse_sort(args.sort)
    space = PointSpace(sort, alg.size)
    ensure_space_size(space, ws.max_space)
    auts = automorphisms(alg)
    orbits = orbit_partition(alg, sort, limit=ws.max_space)
    lines = [
        f"orbits: algebra={alg.name} sort={{{sort.label()}}}",
        f"automorphisms: {len(auts)}",
        f"orbits: {len(orbits)}",
    ]
    reps = []
    for i, orbit in enumerate(orbits):
        rep = space.point(orbit[0])
        lines.append(f"[{i + 1}] size={len(orbit)} rep={rep.label()}")
        reps.append({"size": len(orbit), "rep": list(rep.values)})
    payload = {
        "command": "orbits",
        "algebra": alg.name,
        "sort": list(sort.names),
        "automorphism_count": len(auts),
        "orbit_count": len(orbits),
        "orbits": reps,
    }
    _emit(ws, lines, payload)
    return 0


# ---------------------------------------------------------------------------
# Parser and entry point.

class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="logicgeo",
        description="Finite-model logical geometry over algebras "
                    "given by operation tables.",
    )
    parser.add_argument(
        "--load", action="append", default=[], metavar="FILE",
        help="load an algebra table file (repeatable)",
    )
    parser.add_argument("--window", type=int, default=0, metavar="N",
                        help="extra window variables for mt types")
    parser.add_argument("--max-space", type=int, default=DEFAULT_MAX_SPACE,
                        metavar="B", help="largest point space size")
    parser.add_argument("--max-fragment", type=int,
                        default=DEFAULT_MAX_FRAGMENT, metavar="F",
                        help="largest fragment enumerated literally")
    parser.add_argument("--max-family", type=int, default=DEFAULT_MAX_FAMILY,
                        metavar="V", help="largest definable value family")
    parser.add_argument("--seed", type=int, default=0, metavar="S",
                        help="seed for sampled formula systems")
    parser.add_argument("--structured", action="store_true",
                        help="emit JSON instead of plain text")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("eval", help="evaluate a formula to its value set")
    p.add_argument("algebra")
    p.add_argument("formula")
    p.add_argument("sort", help="comma-separated variables, or - for empty")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("close", help="Galois double closure of a point or "
                                     "formula set")
    p.add_argument("algebra")
    p.add_argument("sort")
    p.add_argument("depth", type=int)
    p.add_argument("--points", metavar="PTS",
                   help="whitespace-separated tuples, e.g. '(1,2) (0,0)'")
    p.add_argument("--formula", action="append", default=[], metavar="F",
                   help="member of the closing system (repeatable)")
    p.set_defaults(func=cmd_close)

    p = sub.add_parser("types", help="realized type fingerprints on a fragment")
    p.add_argument("algebra")
    p.add_argument("sort")
    p.add_argument("depth", type=int)
    p.add_argument("--mode", choices=("lg", "mt"), default="lg")
    p.set_defaults(func=cmd_types)

    p = sub.add_parser("equiv", help="compare two algebras: isotypy, "
                                     "equivalence, isomorphism")
    p.add_argument("algebra1")
    p.add_argument("algebra2")
    p.add_argument("depth", type=int)
    p.add_argument("--sort", default="x1")
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("orbits", help="automorphism orbits on a point space")
    p.add_argument("algebra")
    p.add_argument("sort")
    p.set_defaults(func=cmd_orbits)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            raise UsageError("missing command (eval, close, types, equiv, orbits)")
        ws = Workspace(
            window=args.window,
            max_space=args.max_space,
            max_fragment=args.max_fragment,
            max_family=args.max_family,
            seed=args.seed,
            structured=args.structured,
        )
        for path in args.load:
            ws.load(path)
        return args.func(ws, args)
    except SystemExit as exc:  # argparse --help
        code = exc.code
        return int(code) if isinstance(code, int) else 0
    except LimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LogicGeoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
