"""Constraint-aware k-anonymization by cell suppression.

The package splits into: a relation layer (CSV-backed tables with a
suppression mark), a constraint layer (count constraints with arithmetic
bounds and a small text syntax), satisfaction checking, a logic layer
over fixed-bound constraints (implication, satisfiability, minimal
cover), and solvers that search for a minimum-suppression k-anonymous
output meeting every constraint.
"""

__version__ = "0.1.0"

from .constraints import (
    BinOp,
    Constraint,
    ConstraintKind,
    EvalContext,
    FrequencyRange,
    Literal,
    Round,
    RoundMode,
    StarCount,
    UNIVERSAL_RANGE,
    Var,
    VarKind,
    ceil_to_multiple,
    eval_bound,
    floor_to_multiple,
)
from .checking import (
    SatReport,
    all_satisfied,
    check_all,
    check_diversity,
    check_fairness,
    referenced_star_attributes,
)
from .dsl import format_bound, format_constraint, parse_constraint_line, parse_constraints
from .errors import (
    AnonError,
    ContractError,
    DslError,
    EvalError,
    IngestError,
    InferenceError,
    LintWarning,
    OracleCapError,
    ParseError,
    SchemaError,
    SemanticError,
)
from .inference import (
    Axiom,
    FixedConstraint,
    InferenceOutcome,
    Satisfiable,
    Unsatisfiable,
    implies,
    is_satisfiable,
    minimal_cover,
    range_for_target,
    to_fixed,
    to_fixed_all,
)
from .relation import (
    STAR,
    Relation,
    TargetValue,
    count_stars,
    count_target,
    dump_relation,
    info_loss,
    is_k_anonymous,
    load_relation,
    refines,
)
from .solver import (
    Aborted,
    Clustering,
    Infeasible,
    Limits,
    Problem,
    Solution,
    SolverStats,
    Unknown,
    build_anonymized,
    decide,
    oracle_min_loss,
    solve_exact,
    solve_greedy,
)

__all__ = [
    "__version__",
    # relation layer
    "STAR",
    "Relation",
    "TargetValue",
    "load_relation",
    "dump_relation",
    "count_target",
    "count_stars",
    "refines",
    "is_k_anonymous",
    "info_loss",
    # constraint layer
    "FrequencyRange",
    "UNIVERSAL_RANGE",
    "Literal",
    "Var",
    "VarKind",
    "StarCount",
    "BinOp",
    "Round",
    "RoundMode",
    "Constraint",
    "ConstraintKind",
    "EvalContext",
    "ceil_to_multiple",
    "floor_to_multiple",
    "eval_bound",
    "parse_constraints",
    "parse_constraint_line",
    "format_constraint",
    "format_bound",
    # checking
    "SatReport",
    "check_diversity",
    "check_fairness",
    "check_all",
    "all_satisfied",
    "referenced_star_attributes",
    # inference
    "FixedConstraint",
    "Axiom",
    "InferenceOutcome",
    "range_for_target",
    "implies",
    "Satisfiable",
    "Unsatisfiable",
    "is_satisfiable",
    "minimal_cover",
    "to_fixed",
    "to_fixed_all",
    # solver
    "Clustering",
    "Limits",
    "Problem",
    "Solution",
    "Infeasible",
    "Aborted",
    "Unknown",
    "SolverStats",
    "build_anonymized",
    "oracle_min_loss",
    "solve_exact",
    "solve_greedy",
    "decide",
    # errors
    "AnonError",
    "IngestError",
    "SchemaError",
    "ContractError",
    "EvalError",
    "DslError",
    "ParseError",
    "SemanticError",
    "InferenceError",
    "OracleCapError",
    "LintWarning",
]
