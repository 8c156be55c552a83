"""Seeded generator of small random knowledge bases for property checks."""

from __future__ import annotations

import numpy as np

from .kb import KnowledgeBase, ProbabilisticConstraint, check_self_consistency
from .logic import TOP, And, Formula, Literal, Not, Or, Signature


def random_formula(rng: np.random.Generator, names: tuple[str, ...], depth: int = 2) -> Formula:
    roll = rng.random()
    if depth == 0 or roll < 0.45:
        lit = Literal(names[rng.integers(len(names))])
        return Not(lit) if rng.random() < 0.4 else lit
    if roll < 0.55:
        return Not(random_formula(rng, names, depth - 1))
    left = random_formula(rng, names, depth - 1)
    right = random_formula(rng, names, depth - 1)
    return And(left, right) if roll < 0.8 else Or(left, right)


def random_constraint(
    rng: np.random.Generator, sig: Signature, grid: float = 0.05, names: tuple[str, ...] | None = None
) -> ProbabilisticConstraint:
    """A self-consistent constraint whose probability is a multiple of ``grid``."""
    names = names or sig.names
    steps = int(round(1 / grid))
    while True:
        consequent = random_formula(rng, names)
        antecedent = TOP if rng.random() < 0.5 else random_formula(rng, names)
        p = round(int(rng.integers(steps + 1)) * grid, 10)
        c = ProbabilisticConstraint(consequent, antecedent, p)
        if check_self_consistency(c, sig):
            return c


def random_kb(
    rng: np.random.Generator,
    max_vars: int = 2,
    max_constraints: int = 4,
    grid: float = 0.05,
    min_constraints: int = 1,
) -> KnowledgeBase:
    n_vars = int(rng.integers(1, max_vars + 1))
    sig = Signature.binary(*"ABCDEFGH"[:n_vars])
    size = int(rng.integers(min_constraints, max_constraints + 1))
    return KnowledgeBase(sig, tuple(random_constraint(rng, sig, grid) for _ in range(size)))
