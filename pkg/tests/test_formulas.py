"""Formula ASTs, the parser/printer pair, and canonical fragments."""

import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import logicgeo as lg
from logicgeo import (And, Equality, Exists, Forall, FormulaSet, Fragment,
                      Not, Or, Subst)
from logicgeo.formulas import (formula_depth, free_vars, is_special,
                               normalize_universal, term_rank,
                               var_occurrences)

SIG = lg.Signature((("add", 2),))
X1 = lg.VarContext.of("x1")
X2 = lg.VarContext.of("x1,x2")


def eq(text, ctx=X2):
    return lg.parse_formula(text, ctx, SIG)


# ---------------------------------------------------------------------------
# Node validation.

def test_equality_rejects_stray_variables():
    with pytest.raises(lg.ContextError):
        Equality(lg.Var("x1"), lg.Var("y9"), X2)


def test_connectives_reject_sort_mismatch():
    a = eq("x1 == x1", X1)
    b = eq("x1 == x2", X2)
    with pytest.raises(lg.ContextError):
        And(a, b)
    with pytest.raises(lg.ContextError):
        Or(b, a)


def test_quantifier_rejects_foreign_variable():
    a = eq("x1 == x1", X1)
    with pytest.raises(lg.ContextError):
        Exists("x2", a)
    with pytest.raises(lg.ContextError):
        Forall("x2", a)


def test_subst_requires_matching_source():
    smap = lg.TermMap.from_assignments(
        X1, X2, {"x1": lg.parse_term("add(x1, x2)", X2, SIG)})
    body_ok = eq("x1 == x1", X1)
    f = Subst(smap, body_ok)
    assert f.sort == X2
    with pytest.raises(lg.ContextError):
        Subst(smap, eq("x1 == x2", X2))


def test_sort_propagates_through_nodes():
    a = eq("x1 == x2")
    assert Not(a).sort == X2
    assert And(a, a).sort == X2
    assert Exists("x1", a).sort == X2


# ---------------------------------------------------------------------------
# Depth, rank, free variables, occurrence analysis.

def test_formula_depth_and_term_rank():
    a = eq("add(x1, x2) == x1")
    assert formula_depth(a) == 0
    assert term_rank(a) == 1
    f = Not(And(a, Exists("x2", a)))
    assert formula_depth(f) == 3
    assert term_rank(f) == 1
    g = eq("x1 == add(add(x1, x2), add(x2, x2))")
    assert term_rank(g) == 2


def test_free_vars_through_quantifiers_and_subst():
    a = eq("x1 == x2")
    assert free_vars(a) == {"x1", "x2"}
    assert free_vars(Exists("x2", a)) == {"x1"}
    assert free_vars(Exists("x1", Exists("x2", a))) == set()
    # the substitution replaces x1 by a term in the target variables
    smap = lg.TermMap.from_assignments(
        X1, X2, {"x1": lg.parse_term("add(x1, x2)", X2, SIG)})
    f = Subst(smap, Exists("x1", eq("x1 == x1", X1)))
    assert free_vars(f) == set()
    g = Subst(smap, eq("x1 == x1", X1))
    assert free_vars(g) == {"x1", "x2"}


def test_var_occurrences_and_specialness():
    f = eq("E x2 . x1 == x2")
    assert var_occurrences(f) == [("x1", False), ("x2", True)]
    assert is_special(f, X1)
    assert not is_special(eq("x1 == x2"), X1)          # x2 occurs free
    assert not is_special(eq("E x1 . x1 == x1"), X1)   # x1 occurs bound
    smap = lg.TermMap.identity(X2)
    with pytest.raises(lg.LogicGeoError):
        var_occurrences(Subst(smap, eq("x1 == x1")))


def test_normalize_universal_rewrites_forall():
    inner = Equality(lg.Var("x1"), lg.Var("x1"), X1)
    f = normalize_universal(Forall("x1", inner))
    assert f == Not(Exists("x1", Not(inner)))


# ---------------------------------------------------------------------------
# Parser.

def test_parser_precedence():
    a = eq("x1 == x1 | x1 == x2 & x2 == x2")
    assert isinstance(a, Or) and isinstance(a.right, And)
    b = eq("(x1 == x1 | x1 == x2) & x2 == x2")
    assert isinstance(b, And) and isinstance(b.left, Or)
    c = eq("!x1 == x1 & x2 == x2")
    assert isinstance(c, And) and isinstance(c.left, Not)


def test_parser_quantifier_extends_to_end():
    a = eq("E x1 . x1 == x1 & x2 == x2")
    assert isinstance(a, Exists) and isinstance(a.body, And)
    b = eq("(E x1 . x1 == x1) & x2 == x2")
    assert isinstance(b, And) and isinstance(b.left, Exists)


def test_parser_forall_is_normalized():
    a = eq("A x1 . x1 == x2")
    assert a == Not(Exists("x1", Not(eq("x1 == x2"))))


def test_parser_substitution_binding():
    f = eq("[x1 := add(x2, x2)] E x1 . x1 == x1")
    assert isinstance(f, Subst)
    assert f.sort == X2
    assert f.smap.source == X1
    assert f.body.sort == X1


def test_parser_errors():
    with pytest.raises(lg.ParseError):
        eq("x1 == x1 x2")                 # trailing junk
    with pytest.raises(lg.ParseError):
        eq("E y9 . x1 == x1")             # quantified var outside sort
    with pytest.raises(lg.ParseError):
        eq("[x1 := x2, x1 := x1] x1 == x1")  # duplicate binding
    with pytest.raises(lg.ParseError):
        eq("x1 ==")                       # missing right-hand term
    with pytest.raises(lg.ParseError):
        eq("(x1 == x1")                   # unclosed paren
    with pytest.raises(lg.ParseError):
        eq("y9 == x1")                    # unknown variable in a term


def test_parse_error_reports_position():
    try:
        eq("x1 == x1 &")
    except lg.ParseError as exc:
        assert "position 10" in str(exc)
    else:
        pytest.fail("expected a parse error")


# ---------------------------------------------------------------------------
# Printer round-trips.

def test_roundtrip_on_full_fragment():
    frag = Fragment(X2, 1, SIG)
    for f in frag.formulas():
        assert lg.parse_formula(lg.format_formula(f), X2, SIG) == f


def test_roundtrip_on_samples():
    frag = Fragment(X2, 3, SIG)
    rng = random.Random(2)
    batch = frag.sample(rng, 150)
    assert len(batch) == 150
    for f in batch:
        assert lg.parse_formula(lg.format_formula(f), X2, SIG) == f


def test_roundtrip_subst():
    smap = lg.TermMap.from_assignments(
        X1, X2, {"x1": lg.parse_term("add(x1, x2)", X2, SIG)})
    for body in (eq("x1 == x1", X1),
                 Exists("x1", eq("x1 == add(x1, x1)", X1)),
                 Not(eq("x1 == x1", X1))):
        f = Subst(smap, body)
        assert lg.parse_formula(lg.format_formula(f), X2, SIG) == f


TERM_POOL = tuple(lg.enum_terms(X2, SIG, 1))

formula_st = st.recursive(
    st.builds(Equality,
              st.sampled_from(TERM_POOL),
              st.sampled_from(TERM_POOL),
              st.just(X2)),
    lambda kids: st.one_of(
        st.builds(Not, kids),
        st.builds(And, kids, kids),
        st.builds(Or, kids, kids),
        st.builds(Exists, st.sampled_from(X2.names), kids),
        st.builds(Forall, st.sampled_from(X2.names), kids),
    ),
    max_leaves=10,
)


@settings(max_examples=150, deadline=None)
@given(formula_st)
def test_roundtrip_random_asts(f):
    text = lg.format_formula(f)
    assert lg.parse_formula(text, X2, SIG) == normalize_universal(f)


# ---------------------------------------------------------------------------
# Formula sets.

def test_formula_set_checks_sorts():
    a = eq("x1 == x1", X1)
    s = FormulaSet(X1, (a,))
    assert len(s) == 1 and a in s and list(s) == [a]
    with pytest.raises(lg.ContextError):
        FormulaSet(X2, (a,))


# ---------------------------------------------------------------------------
# Fragments.

def brute_depth1_fragment(sort, sig):
    """All formulas with connective depth <= 1 and term rank <= 1, built
    directly from the grammar, as a set."""
    terms = [t for level in lg.enum_terms_by_depth(sort, sig, 1)
             for t in level]
    eqs = [Equality(w, w2, sort) for w in terms for w2 in terms]
    out = set(eqs)
    out.update(Not(f) for f in eqs)
    out.update(And(f, g) for f in eqs for g in eqs)
    out.update(Or(f, g) for f in eqs for g in eqs)
    out.update(Exists(x, f) for x in sort.names for f in eqs)
    return out


def test_fragment_counts_against_brute_grammar():
    frag = Fragment(X1, 1, SIG)
    got = frag.formulas()
    assert frag.size() == len(got) == 44
    assert set(got) == brute_depth1_fragment(X1, SIG)
    assert len(set(got)) == len(got)


def test_fragment_size_matches_stream():
    # depth-2 streams stay feasible only when the term pool stops growing,
    # which is what the constant-only signatures arrange
    sig_const = lg.Signature((("c0", 0),))
    sig_mixed = lg.Signature((("add", 2), ("c0", 0)))
    cases = [
        Fragment(X1, 1, SIG),
        Fragment(X2, 1, SIG),
        Fragment(lg.VarContext.of(()), 1, SIG),
        Fragment(X1, 2, sig_const),
        Fragment(lg.VarContext.of(()), 1, sig_mixed),
    ]
    for frag in cases:
        n = sum(1 for _ in frag.formulas_iter())
        assert frag.size() == n, frag.label()


def test_fragment_depth_prefix_property():
    small = Fragment(X1, 1, SIG)
    big = Fragment(X1, 2, SIG)
    head = list(itertools.islice(big.formulas_iter(), small.size()))
    assert tuple(head) == small.formulas()


def test_fragment_members_respect_bounds():
    frag = Fragment(X2, 1, SIG)
    for f in frag.formulas():
        assert formula_depth(f) <= 1
        assert term_rank(f) <= 1


def test_fragment_limit():
    frag = Fragment(X2, 1, SIG)
    with pytest.raises(lg.FragmentLimitError):
        frag.formulas(max_size=10)


def test_fragment_index_map_and_negation_pairs():
    frag = Fragment(X1, 1, SIG)
    formulas = frag.formulas()
    index = frag.index_map()
    assert all(formulas[index[f]] == f for f in formulas)
    pairs = frag.negation_pairs()
    assert pairs, "depth-1 fragments contain negations of their equalities"
    for i, j in pairs:
        assert formulas[j] == Not(formulas[i])


def test_fragment_sample_is_deterministic_and_inside():
    frag = Fragment(X1, 2, SIG)
    a = frag.sample(random.Random(9), 40)
    b = frag.sample(random.Random(9), 40)
    assert a == b
    assert len(set(a)) == len(a)
    for f in a:
        assert formula_depth(f) <= 2 and term_rank(f) <= 2
    # on a fragment small enough to index, samples are actual members
    small = Fragment(X1, 1, SIG)
    index = small.index_map()
    for f in small.sample(random.Random(4), 25):
        assert f in index


def test_fragment_adjoined_toggle(z2c):
    with_c = Fragment(X1, 1, z2c.sig)
    base_names = {t.op for t in with_c.base_terms() if isinstance(t, lg.App)}
    assert "c0" in base_names or "c1" in base_names
    # z2c declares its constant natively, so it is not "adjoined" and the
    # toggle must not remove it
    assert with_c.size() == Fragment(X1, 1, z2c.sig, with_adjoined=False).size()


def test_fragment_adjoined_toggle_on_marked_constants(z2a):
    with_adj = Fragment(X1, 1, z2a.sig)
    without = Fragment(X1, 1, z2a.sig, with_adjoined=False)
    assert with_adj.size() > without.size()
    names = {t.op for t in without.base_terms() if isinstance(t, lg.App)}
    assert not (names & set(z2a.sig.adjoined))


def test_equality_pairs_at_skips_known_pairs():
    frag = Fragment(X1, 1, SIG)
    lvl0 = frag.term_levels()[0]
    at0 = list(frag.equality_pairs_at(0))
    assert at0 == [(w, w2) for w in lvl0 for w2 in lvl0]
    old = set(at0)
    for pair in frag.equality_pairs_at(1):
        assert pair not in old


def test_fragment_rejects_negative_depth():
    with pytest.raises(ValueError):
        Fragment(X1, -1, SIG)
