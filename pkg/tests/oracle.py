"""Independent brute-force oracles for the test suite.

Everything here works over explicit point dictionaries and pure-python
recursion: no numpy, no shared evaluation code with the package.  The
package's vectorized results are compared against these.
"""

from __future__ import annotations

import itertools

from logicgeo.formulas import And, Equality, Exists, Forall, Not, Or, Subst
from logicgeo.terms import App, Var


def table_dict(alg):
    """Operation tables as nested dicts: name -> {arg tuple: value}."""
    out = {}
    for (name, arity), flat in zip(alg.sig.ops, alg.tables):
        table = {}
        for i, args in enumerate(itertools.product(range(alg.size), repeat=arity)):
            table[args] = flat[i]
        out[name] = table
    return out


def brute_eval_term(term, env, tables):
    """Evaluate a term at a point given as a name->value dict."""
    if isinstance(term, Var):
        return env[term.name]
    args = tuple(brute_eval_term(arg, env, tables) for arg in term.args)
    return tables[term.op][args]


def brute_points(names, n):
    """All points of the space as dicts, in big-endian index order."""
    for combo in itertools.product(range(n), repeat=len(names)):
        yield dict(zip(names, combo))


def brute_val(u, n, tables):
    """The set of satisfying points as a frozenset of value tuples,
    ordered like the formula's sort."""
    names = u.sort.names
    out = set()
    for env in brute_points(names, n):
        if brute_holds(u, env, n, tables):
            out.add(tuple(env[x] for x in names))
    return frozenset(out)


def brute_holds(u, env, n, tables):
    """Truth of a formula at one point dict."""
    if isinstance(u, Equality):
        return brute_eval_term(u.lhs, env, tables) == brute_eval_term(
            u.rhs, env, tables
        )
    if isinstance(u, Not):
        return not brute_holds(u.body, env, n, tables)
    if isinstance(u, And):
        return brute_holds(u.left, env, n, tables) and brute_holds(
            u.right, env, n, tables
        )
    if isinstance(u, Or):
        return brute_holds(u.left, env, n, tables) or brute_holds(
            u.right, env, n, tables
        )
    if isinstance(u, Exists):
        for v in range(n):
            inner = dict(env)
            inner[u.var] = v
            if brute_holds(u.body, inner, n, tables):
                return True
        return False
    if isinstance(u, Forall):
        for v in range(n):
            inner = dict(env)
            inner[u.var] = v
            if not brute_holds(u.body, inner, n, tables):
                return False
        return True
    if isinstance(u, Subst):
        pulled = {
            y: brute_eval_term(img, env, tables)
            for y, img in zip(u.smap.source.names, u.smap.images)
        }
        return brute_holds(u.body, pulled, n, tables)
    raise TypeError(f"unknown formula node {type(u).__name__}")


def value_tuples(a):
    """Package ValueSet -> frozenset of point tuples, for comparison."""
    return frozenset(a.point_tuples())


def brute_orbit_closure(points, perms):
    """Apply every carrier permutation coordinatewise to a set of tuples."""
    out = set()
    for p in points:
        for perm in perms:
            out.add(tuple(perm[v] for v in p))
    return frozenset(out)


def is_homomorphic_perm(perm, a, b):
    """Check that a carrier bijection maps a's tables onto b's."""
    ta, tb = table_dict(a), table_dict(b)
    for (name, arity), _ in zip(a.sig.ops, a.tables):
        for args in itertools.product(range(a.size), repeat=arity):
            mapped = tuple(perm[v] for v in args)
            if perm[ta[name][args]] != tb[name][mapped]:
                return False
    return True
