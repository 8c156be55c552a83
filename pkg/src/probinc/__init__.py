"""Inconsistency measurement for conditional probabilistic knowledge bases."""

from .feasibility import (
    Distribution,
    MisReport,
    build_cs,
    is_consistent,
    is_free,
    minimal_inconsistent_subsets,
)
from .kb import (
    CompiledKB,
    KnowledgeBase,
    ProbabilisticConstraint,
    characteristic,
    check_self_consistency,
    compile_kb,
    load_kb,
    parse_kb,
    serialize_kb,
)
from .logic import Signature, Variable, enumerate_worlds, models, satisfies
from .measure import (
    MeasureResult,
    SolverConfig,
    characteristic_inconsistency,
    conditional_deviation,
    grid_oracle,
    inc_star,
    inc_star_normalized,
    repair,
    total_deviation,
)
from .shapley import CoalitionGame, ShapleyReport, shapley_generic, shapley_inconsistency

__all__ = [
    "CoalitionGame",
    "CompiledKB",
    "Distribution",
    "KnowledgeBase",
    "MeasureResult",
    "MisReport",
    "ProbabilisticConstraint",
    "ShapleyReport",
    "Signature",
    "SolverConfig",
    "Variable",
    "build_cs",
    "characteristic",
    "characteristic_inconsistency",
    "check_self_consistency",
    "compile_kb",
    "conditional_deviation",
    "enumerate_worlds",
    "grid_oracle",
    "inc_star",
    "inc_star_normalized",
    "is_consistent",
    "is_free",
    "load_kb",
    "minimal_inconsistent_subsets",
    "models",
    "parse_kb",
    "repair",
    "satisfies",
    "serialize_kb",
    "shapley_generic",
    "shapley_inconsistency",
    "total_deviation",
]
