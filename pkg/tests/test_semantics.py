"""Value-set evaluation against the dict-based oracle, plus the quantifier,
equality, and substitution laws evaluation must satisfy."""

import random

import numpy as np
import pytest

import logicgeo as lg
from logicgeo import (And, Equality, Exists, Forall, Fragment, Not, Or,
                      Point, PointSpace, Subst, ValueSet)
from logicgeo.semantics import (clear_val_cache, lker_contains, lker_restrict,
                                orbit_closure, point_cylinder,
                                pullback_substitution, quantify_exists,
                                quantify_forall, restrict_context,
                                theory_contains, theory_restrict, val)
from logicgeo.terms import compose_term_maps, single_swap_map

from oracle import (brute_holds, brute_orbit_closure, brute_val, table_dict,
                    value_tuples)

X1 = lg.VarContext.of("x1")
X2 = lg.VarContext.of("x1,x2")
X3 = lg.VarContext.of("x1,x2,x3")


def sampled(alg, sort, depth, count, seed):
    frag = Fragment(sort, depth, alg.sig)
    return frag.sample(random.Random(seed), count)


# ---------------------------------------------------------------------------
# ValueSet mechanics.

def test_value_set_constructors_and_queries():
    space = PointSpace(X2, 2)
    empty = ValueSet.empty(space)
    full = ValueSet.full(space)
    assert empty.is_empty and not empty.is_full and len(empty) == 0
    assert full.is_full and len(full) == 4
    a = ValueSet.from_points(space, [(0, 0), (1, 1)])
    assert a == ValueSet.from_indices(space, [0, 3])
    assert a.point_tuples() == [(0, 0), (1, 1)]
    assert a.contains_point((1, 1)) and not a.contains_point((0, 1))
    assert a.contains_index(0) and not a.contains_index(1)
    assert list(a.indices()) == [0, 3]
    assert [p.values for p in a.points()] == [(0, 0), (1, 1)]


def test_value_set_boolean_structure():
    space = PointSpace(X1, 3)
    a = ValueSet.from_indices(space, [0, 1])
    b = ValueSet.from_indices(space, [1, 2])
    assert (a & b) == ValueSet.from_indices(space, [1])
    assert (a | b) == ValueSet.full(space)
    assert ~a == ValueSet.from_indices(space, [2])
    assert (a & b).issubset(a) and a.issubset(a | b)
    assert (a | b).issuperset(b)
    assert hash(a) == hash(ValueSet.from_indices(space, [0, 1]))
    assert a != b and a == ValueSet.from_indices(space, [1, 0])


def test_value_set_label():
    space = PointSpace(X2, 2)
    a = ValueSet.from_points(space, [(1, 0), (0, 0)])
    assert a.label() == "{(0,0), (1,0)}"
    assert a.label(limit=1) == "{(0,0), ...}"
    assert ValueSet.empty(space).label() == "{}"


def test_value_set_errors():
    space = PointSpace(X2, 2)
    with pytest.raises(lg.ContextError):
        ValueSet(space, np.zeros(3, dtype=bool))
    with pytest.raises(IndexError):
        ValueSet.from_indices(space, [4])
    other = ValueSet.full(PointSpace(X1, 2))
    with pytest.raises(lg.ContextError):
        ValueSet.full(space) & other


def test_value_set_bits_are_immutable():
    space = PointSpace(X1, 2)
    mine = np.zeros(2, dtype=bool)
    a = ValueSet(space, mine)
    mine[0] = True
    assert a.is_empty, "value sets must copy their input bits"
    with pytest.raises(ValueError):
        a.bits[0] = True


# ---------------------------------------------------------------------------
# val against the brute-force oracle.

def test_val_matches_oracle_exhaustively_at_depth_one(z2, z3):
    for alg in (z2, z3):
        tables = table_dict(alg)
        for u in Fragment(X1, 1, alg.sig).formulas():
            assert value_tuples(val(u, alg)) == brute_val(u, alg.size, tables)


def test_val_matches_oracle_on_samples(z3, k4):
    for alg in (z3, k4):
        tables = table_dict(alg)
        for u in sampled(alg, X2, 2, 200, seed=13):
            assert value_tuples(val(u, alg)) == brute_val(u, alg.size, tables), u


def test_val_matches_oracle_on_substitution_trees(z3):
    rng = random.Random(21)
    tables = table_dict(z3)
    terms2 = lg.enum_terms(X2, z3.sig, 1)
    terms1 = lg.enum_terms(X1, z3.sig, 1)
    for _ in range(60):
        down = lg.TermMap.from_assignments(
            X1, X2, {"x1": rng.choice(terms2)})
        up = lg.TermMap.from_assignments(
            X2, X1, {"x1": rng.choice(terms1), "x2": rng.choice(terms1)})
        body = rng.choice(sampled(z3, X1, 1, 30, seed=5))
        u = Subst(up, Subst(down, body))
        assert u.sort == X1
        assert value_tuples(val(u, z3)) == brute_val(u, z3.size, tables)


def test_val_handles_forall_nodes(z3):
    tables = table_dict(z3)
    for body in sampled(z3, X2, 1, 40, seed=3):
        f = Forall("x2", body)
        assert value_tuples(val(f, z3)) == brute_val(f, z3.size, tables)
        assert val(f, z3) == quantify_forall(val(body, z3), "x2")


def test_val_over_empty_sort(z2c):
    empty_ctx = lg.VarContext.of(())
    truth = lg.parse_formula("c0 == c0", empty_ctx, z2c.sig)
    lie = lg.parse_formula("c0 == c1", empty_ctx, z2c.sig)
    assert val(truth, z2c).is_full and len(val(truth, z2c)) == 1
    assert val(lie, z2c).is_empty
    # pulling a sentence back into a nonempty context fills or clears it
    into = lg.TermMap.from_assignments(empty_ctx, X1, {})
    assert val(Subst(into, truth), z2c).is_full
    assert val(Subst(into, lie), z2c).is_empty


def test_val_is_memoized(z3):
    clear_val_cache()
    u = lg.parse_formula("E x2 . add(x1, x2) == x1", X2, z3.sig)
    first = val(u, z3)
    assert val(u, z3) is first
    clear_val_cache()
    again = val(u, z3)
    assert again == first


def test_val_space_limit(z3):
    u = lg.parse_formula("x1 == x2", X2, z3.sig)
    with pytest.raises(lg.SpaceLimitError):
        val(u, z3, max_space=4)


# ---------------------------------------------------------------------------
# Quantifier laws.

def test_exists_of_empty_is_empty():
    space = PointSpace(X2, 3)
    assert quantify_exists(ValueSet.empty(space), "x1").is_empty


def test_exists_laws_on_samples(z3, k4):
    for alg in (z3, k4):
        bodies = sampled(alg, X2, 1, 60, seed=7)
        for u in bodies:
            a = val(u, alg)
            ex1 = quantify_exists(a, "x1")
            assert a.issubset(ex1)
            assert quantify_exists(ex1, "x1") == ex1
            assert (quantify_exists(quantify_exists(a, "x2"), "x1")
                    == quantify_exists(ex1, "x2"))
        for u, w in zip(bodies[::2], bodies[1::2]):
            a, b = val(u, alg), val(w, alg)
            eb = quantify_exists(b, "x1")
            assert quantify_exists(a & eb, "x1") == quantify_exists(a, "x1") & eb


def test_forall_is_dual_to_exists(z3):
    for u in sampled(z3, X2, 1, 30, seed=9):
        a = val(u, z3)
        assert quantify_forall(a, "x1") == ~quantify_exists(~a, "x1")
        assert quantify_forall(a, "x1").issubset(a)


def test_quantifier_rejects_foreign_variable(z3):
    a = ValueSet.full(PointSpace(X1, 3))
    with pytest.raises(lg.ContextError):
        quantify_exists(a, "zz")


# ---------------------------------------------------------------------------
# Equality laws.

def test_equality_laws(z3, k4):
    for alg in (z3, k4):
        terms = lg.enum_terms(X2, alg.sig, 1)
        space = PointSpace(X2, alg.size)
        for w in terms:
            assert val(Equality(w, w, X2), alg) == ValueSet.full(space)
        rng = random.Random(15)
        for _ in range(40):
            w, w2, w3 = (rng.choice(terms) for _ in range(3))
            sym = val(Equality(w, w2, X2), alg)
            assert sym == val(Equality(w2, w, X2), alg)
            trans = sym & val(Equality(w2, w3, X2), alg)
            assert trans.issubset(val(Equality(w, w3, X2), alg))


def test_equality_congruence(z3):
    rng = random.Random(16)
    terms = lg.enum_terms(X2, z3.sig, 1)
    for _ in range(30):
        w1, w1b, w2, w2b = (rng.choice(terms) for _ in range(4))
        premise = (val(Equality(w1, w1b, X2), z3)
                   & val(Equality(w2, w2b, X2), z3))
        conclusion = val(
            Equality(lg.App("add", (w1, w2)), lg.App("add", (w1b, w2b)), X2),
            z3)
        assert premise.issubset(conclusion)


# ---------------------------------------------------------------------------
# Substitution laws.

def test_substitution_respects_equality_images(z3):
    # applying a map to both sides of an equality is the same as pulling
    # the equality's value set back along the map
    rng = random.Random(31)
    terms = lg.enum_terms(X2, z3.sig, 1)
    for _ in range(30):
        smap = lg.TermMap.from_assignments(
            X2, X2, {"x1": rng.choice(terms), "x2": rng.choice(terms)})
        w, w2 = rng.choice(terms), rng.choice(terms)
        u = Equality(w, w2, X2)
        direct = val(Equality(smap(w), smap(w2), X2), z3)
        assert val(Subst(smap, u), z3) == direct


def test_substitutions_agreeing_off_bound_variable(z3):
    # maps that differ only at x give the same pullback of E x . A
    rng = random.Random(33)
    terms = lg.enum_terms(X2, z3.sig, 1)
    for u in sampled(z3, X2, 1, 25, seed=6):
        t_shared = rng.choice(terms)
        s1 = lg.TermMap.from_assignments(
            X2, X2, {"x1": rng.choice(terms), "x2": t_shared})
        s2 = lg.TermMap.from_assignments(
            X2, X2, {"x1": rng.choice(terms), "x2": t_shared})
        f = Exists("x1", u)
        assert val(Subst(s1, f), z3) == val(Subst(s2, f), z3)


def test_substitution_commutes_with_exists_under_support(z3):
    # when s fixes x and no other image mentions x, s commutes with E x
    rng = random.Random(34)
    x2_only = [t for t in lg.enum_terms(X2, z3.sig, 1)
               if lg.term_vars(t) <= {"x2"}]
    for u in sampled(z3, X2, 1, 25, seed=8):
        smap = lg.TermMap.from_assignments(
            X2, X2, {"x1": lg.Var("x1"), "x2": rng.choice(x2_only)})
        lhs = val(Subst(smap, Exists("x1", u)), z3)
        rhs = val(Exists("x1", Subst(smap, u)), z3)
        assert lhs == rhs


def test_pinned_substitution_respects_equality(z3):
    # replacing the pin w by any w' equal to it at the point keeps the
    # pulled-back value set: s[x:=w]*a  and  w == w'  force  s[x:=w']*a
    rng = random.Random(35)
    terms = lg.enum_terms(X2, z3.sig, 1)
    for u in sampled(z3, X2, 1, 25, seed=10):
        w, w2 = rng.choice(terms), rng.choice(terms)
        s_w = single_swap_map(X2, "x1", w)
        s_w2 = single_swap_map(X2, "x1", w2)
        lhs = val(Subst(s_w, u), z3) & val(Equality(w, w2, X2), z3)
        assert lhs.issubset(val(Subst(s_w2, u), z3))


def test_pullback_functoriality(z3):
    rng = random.Random(36)
    terms2 = lg.enum_terms(X2, z3.sig, 1)
    terms1 = lg.enum_terms(X1, z3.sig, 1)
    for u in sampled(z3, X2, 1, 20, seed=12):
        inner = lg.TermMap.from_assignments(
            X2, X1, {"x1": rng.choice(terms1), "x2": rng.choice(terms1)})
        outer = lg.TermMap.from_assignments(
            X1, X2, {"x1": rng.choice(terms2)})
        both = compose_term_maps(outer, inner)
        a = val(u, z3)
        assert (pullback_substitution(a, both, z3)
                == pullback_substitution(
                    pullback_substitution(a, inner, z3), outer, z3))
        assert val(Subst(both, u), z3) == val(Subst(outer, Subst(inner, u)), z3)


def test_pullback_errors(z3, z2):
    a = val(lg.parse_formula("x1 == x1", X1, z3.sig), z3)
    wrong_source = lg.TermMap.identity(X2)
    with pytest.raises(lg.ContextError):
        pullback_substitution(a, wrong_source, z3)
    with pytest.raises(lg.AlgebraError):
        pullback_substitution(a, lg.TermMap.identity(X1), z2)


# ---------------------------------------------------------------------------
# Context restriction.

def test_restrict_context_sections_cylinders(z3):
    tables = table_dict(z3)
    for u in sampled(z3, X2, 1, 30, seed=14):
        a = val(Exists("x2", u), z3)
        sec = restrict_context(a, X1)
        assert sec.space.ctx == X1
        want = {t[0] for t in value_tuples(a)}
        assert {t[0] for t in sec.point_tuples()} == want


def test_restrict_context_errors(z3):
    u = lg.parse_formula("x1 == x2", X2, z3.sig)
    with pytest.raises(lg.ContextError):
        restrict_context(val(u, z3), X1)  # x1 == x2 is not cylindrical
    a = val(lg.parse_formula("x1 == x1", X1, z3.sig), z3)
    with pytest.raises(lg.ContextError):
        restrict_context(a, X2)  # not a sub-context


def test_restrict_context_identity(z3):
    u = lg.parse_formula("x1 == x2", X2, z3.sig)
    a = val(u, z3)
    assert restrict_context(a, X2) == a


# ---------------------------------------------------------------------------
# Point cylinders.

def test_point_cylinder_matches_brute(z3):
    window = lg.VarContext.of("x1,x2,y1")
    for vals in ((0,), (2,)):
        mu = Point(X1, vals)
        cyl = point_cylinder(mu, window, z3)
        want = {(vals[0], a, b) for a in range(3) for b in range(3)}
        assert value_tuples(cyl) == want
    mu2 = Point(X2, (1, 2))
    cyl2 = point_cylinder(mu2, window, z3)
    assert value_tuples(cyl2) == {(1, 2, b) for b in range(3)}


def test_point_cylinder_requires_subcontext(z3):
    with pytest.raises(lg.ContextError):
        point_cylinder(Point(X2, (0, 0)), X1, z3)


# ---------------------------------------------------------------------------
# Orbit closure.

def test_orbit_closure_matches_brute(z3, k4):
    for alg in (z3, k4):
        perms = lg.automorphisms(alg)
        space = PointSpace(X2, alg.size)
        rng = random.Random(17)
        for _ in range(25):
            pts = {(rng.randrange(alg.size), rng.randrange(alg.size))
                   for _ in range(rng.randrange(1, 6))}
            a = ValueSet.from_points(space, pts)
            closed = orbit_closure(a, alg)
            assert value_tuples(closed) == brute_orbit_closure(pts, perms)
            assert a.issubset(closed)
            assert orbit_closure(closed, alg) == closed


def test_orbit_closure_of_definable_sets_is_trivial(z3):
    # constant-free definable sets are unions of orbits already
    for u in sampled(z3, X2, 1, 40, seed=19):
        a = val(u, z3)
        assert orbit_closure(a, z3) == a


def test_orbit_closure_carrier_mismatch(z3):
    a = ValueSet.full(PointSpace(X1, 2))
    with pytest.raises(lg.AlgebraError):
        orbit_closure(a, z3)


# ---------------------------------------------------------------------------
# Logical kernels and theories.

def test_lker_contains_and_restrict(z2):
    frag = Fragment(X1, 1, z2.sig)
    formulas = frag.formulas()
    for mu in PointSpace(X1, z2.size).points():
        view = lker_restrict(mu, frag, z2)
        assert view.size == len(formulas)
        members = [i for i in range(view.size) if view.member(i)]
        assert view.member_count() == len(members)
        for i in (0, 1, len(formulas) - 1):
            assert view.member(i) == lker_contains(mu, formulas[i], z2)
        with pytest.raises(IndexError):
            view.member(view.size)


def test_lker_context_mismatch(z2):
    frag = Fragment(X1, 1, z2.sig)
    with pytest.raises(lg.ContextError):
        lker_restrict(Point(X2, (0, 0)), frag, z2)
    u = lg.parse_formula("x1 == x1", X1, z2.sig)
    with pytest.raises(lg.ContextError):
        lker_contains(Point(X2, (0, 0)), u, z2)


def test_theory_is_intersection_of_kernels(z2, z3):
    for alg in (z2, z3):
        frag = Fragment(X1, 1, alg.sig)
        formulas = frag.formulas()
        th = theory_restrict(alg, frag)
        views = [lker_restrict(mu, frag, alg)
                 for mu in PointSpace(X1, alg.size).points()]
        for i, u in enumerate(formulas):
            in_all = all(v.member(i) for v in views)
            assert (u in th) == in_all == theory_contains(alg, u)


def test_theory_membership_examples(z2, z3):
    always = lg.parse_formula("add(x1, x1) == add(x2, x2)", X2, z2.sig)
    assert theory_contains(z2, always)          # both sides are 0 in Z2
    assert not theory_contains(z3, always)
    cancel = lg.parse_formula("E x2 . add(x1, x2) == x1", X2, z3.sig)
    assert theory_contains(z3, cancel)
