"""Logical geometry over finite algebras.

First-order formulas over a variety signature are evaluated to subsets of
finite affine point spaces; the Galois correspondence between formula sets
and point sets, and the type machinery built on it, run exactly on explicit
tables.
"""

from .algebra import (FiniteAlgebra, Point, PointSpace, adjoin_constants,
                      automorphisms, check_identities, dumps_algebra,
                      enum_points, eval_term, is_isomorphic, load_algebra,
                      loads_algebra, orbit_partition, point_substitution_map,
                      relabel, term_column)
from .errors import (AlgebraError, ContextError, FamilyLimitError,
                     FragmentLimitError, LimitError, LogicGeoError,
                     ParseError, SignatureError, SpaceLimitError, UsageError)
from .formulas import (And, Equality, Exists, Forall, Formula, FormulaSet,
                       Fragment, Not, Or, Subst, formula_depth, format_formula,
                       free_vars, is_special, normalize_universal,
                       parse_formula, term_rank, var_occurrences)
from .geometry import (EquivalenceReport, FamilyEntry, IsotypyReport,
                       TypeClass, TypeFingerprint, ValueFamily,
                       build_value_family, double_closure,
                       elementary_closure_oracle, formula_closure,
                       is_elementary, lg_equivalent_on_fragment,
                       lg_isotyped_on_fragment, lg_type_census, lg_type_space,
                       morphism_check, mt_type_contains, mt_type_restrict,
                       saturating_depth, solution_set)
from .kernels import active_backend, set_backend, use_backend
from .semantics import (KernelView, ValueSet, clear_val_cache, lker_contains,
                        lker_restrict, orbit_closure, point_cylinder,
                        pullback_substitution, quantify_exists,
                        quantify_forall, restrict_context, theory_contains,
                        theory_restrict, val)
from .terms import (App, Signature, Term, TermMap, Var, VarContext,
                    apply_term_map, compose_term_maps, enum_terms,
                    enum_terms_by_depth, format_term, parse_term,
                    single_swap_map, term_depth, term_vars)

__version__ = "0.1.0"

__all__ = [
    "AlgebraError", "And", "App", "ContextError", "Equality",
    "EquivalenceReport", "Exists", "FamilyEntry", "FamilyLimitError",
    "FiniteAlgebra", "Forall", "Formula", "FormulaSet", "Fragment",
    "FragmentLimitError", "IsotypyReport", "KernelView", "LimitError",
    "LogicGeoError", "Not", "Or", "ParseError", "Point", "PointSpace",
    "Signature", "SignatureError", "SpaceLimitError", "Subst", "Term",
    "TermMap", "TypeClass", "TypeFingerprint", "UsageError", "ValueFamily",
    "ValueSet", "Var", "VarContext", "active_backend", "adjoin_constants",
    "apply_term_map", "automorphisms", "build_value_family",
    "check_identities", "clear_val_cache", "compose_term_maps",
    "double_closure", "dumps_algebra", "elementary_closure_oracle",
    "enum_points", "enum_terms", "enum_terms_by_depth", "eval_term",
    "formula_closure", "formula_depth", "format_formula", "format_term",
    "free_vars", "is_elementary", "is_isomorphic", "is_special",
    "lg_equivalent_on_fragment", "lg_isotyped_on_fragment", "lg_type_census",
    "lg_type_space", "lker_contains", "lker_restrict", "load_algebra",
    "loads_algebra", "morphism_check", "mt_type_contains", "mt_type_restrict",
    "normalize_universal", "orbit_closure", "orbit_partition", "parse_formula",
    "parse_term", "point_cylinder", "point_substitution_map",
    "pullback_substitution", "quantify_exists", "quantify_forall", "relabel",
    "restrict_context", "saturating_depth", "set_backend", "single_swap_map",
    "solution_set", "term_column", "term_depth", "term_rank", "term_vars",
    "theory_contains", "theory_restrict", "use_backend", "val",
    "var_occurrences",
]
