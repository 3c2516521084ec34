"""Secure information-flow connections between autonomous security lattices."""

from .lattice import Lattice, build_lattice, load_lattice
from .connection import (LagoisConnection, MonotoneMap, Violation,
                         budpoint_representative, build_from_closures,
                         check_connection, check_tightness, coarsen, compose,
                         connection_violations, decompose, find_adjoint,
                         identity_connection, semi_inverse_connection)
from .flowlang import (Program, StorePair, VarDecl, adversary_pairs,
                       exec_program, gen_well_typed, ni_trial, parse_program,
                       run_ni_suite, typecheck, typecheck_phrase)
from .dlm import (Label, Policy, PrincipalMapPair, PrincipalsHierarchy,
                  check_lifted_connection, cross_declassify_check,
                  declassify_check, label_equiv, label_join, label_leq,
                  lift_label, parse_label)

__version__ = "0.1.0"

__all__ = [
    "Lattice", "build_lattice", "load_lattice",
    "LagoisConnection", "MonotoneMap", "Violation", "budpoint_representative",
    "build_from_closures", "check_connection", "check_tightness", "coarsen",
    "compose", "connection_violations", "decompose", "find_adjoint",
    "identity_connection", "semi_inverse_connection",
    "Program", "StorePair", "VarDecl", "adversary_pairs", "exec_program",
    "gen_well_typed", "ni_trial", "parse_program", "run_ni_suite",
    "typecheck", "typecheck_phrase",
    "Label", "Policy", "PrincipalMapPair", "PrincipalsHierarchy",
    "check_lifted_connection", "cross_declassify_check", "declassify_check",
    "label_equiv", "label_join", "label_leq", "lift_label", "parse_label",
    "__version__",
]
