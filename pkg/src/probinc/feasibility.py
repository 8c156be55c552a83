"""Consistency of knowledge bases as linear feasibility over the simplex of Ω.

Each constraint ``(A|B)[d]`` becomes the row Σ_{Mod(AB)} α − d·Σ_{Mod(B)} α = 0.
Together with Σ α = 1 and α ≥ 0 the knowledge base is consistent iff this
system is feasible. Note that P(B) = 0 satisfies any ``(A|B)[d]``, so
``{(A|B)[0.9], (!A|B)[0.9]}`` is consistent.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .kb import CompiledKB, KnowledgeBase, compile_kb

FEASIBILITY_TOL = 1e-8
WITNESS_TOL = 1e-9
DEFAULT_SUBSET_CAP = 20

_PIVOT_EPS = 1e-12
_COST_EPS = 1e-11


class SubsetCapExceeded(ValueError):
    def __init__(self, size: int, cap: int):
        super().__init__(f"knowledge base has {size} constraints, subset enumeration cap is {cap}")
        self.size = size
        self.cap = cap


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector α over the worlds of a signature, indexed by world index."""

    alpha: np.ndarray

    def __post_init__(self):
        a = np.array(self.alpha, dtype=float)
        if a.ndim != 1:
            raise ValueError("alpha must be a vector")
        if (a < 0).any():
            raise ValueError("probabilities must be non-negative")
        if abs(a.sum() - 1.0) > WITNESS_TOL:
            raise ValueError(f"probabilities sum to {a.sum()!r}, not 1")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)

    @classmethod
    def uniform(cls, world_count: int) -> Distribution:
        return cls(np.full(world_count, 1.0 / world_count))

    @classmethod
    def from_weights(cls, weights) -> Distribution:
        """Clip tiny negatives from numerical solvers and renormalize."""
        w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        return cls(w / w.sum())

    def __len__(self) -> int:
        return len(self.alpha)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Distribution) and np.array_equal(self.alpha, other.alpha)

    def prob(self, mask: np.ndarray) -> float:
        return float(self.alpha[np.asarray(mask, dtype=bool)].sum())


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Rows ``constraint_rows @ α = 0``, ``sum_row @ α = 1`` and ``α ≥ 0``."""

    constraint_rows: np.ndarray
    sum_row: np.ndarray

    @property
    def world_count(self) -> int:
        return self.sum_row.shape[0]

    def equality_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        a = np.vstack([self.constraint_rows, self.sum_row[None, :]])
        b = np.zeros(a.shape[0])
        b[-1] = 1.0
        return a, b

    def residuals(self, alpha: np.ndarray) -> np.ndarray:
        a, b = self.equality_matrix()
        return a @ alpha - b


@dataclass(frozen=True)
class MisReport:
    subsets: tuple[tuple[int, ...], ...]
    free: tuple[bool, ...]


def build_cs(ckb: CompiledKB) -> LinearSystem:
    rows = ckb.rows.reshape(len(ckb.kb), ckb.world_count)
    return LinearSystem(rows.copy(), np.ones(ckb.world_count))


def phase_one(a: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray]:
    """Minimize the sum of artificial variables for ``a x = b, x ≥ 0``.

    Dense tableau simplex with Bland's rule for both the entering and the
    leaving variable, so the pivot sequence is fully determined by the input.
    Returns the optimal artificial sum and the final ``x``.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    neg = b < 0
    a[neg] *= -1
    b[neg] *= -1
    r, n = a.shape
    tab = np.zeros((r + 1, n + r + 1))
    tab[:r, :n] = a
    tab[:r, n : n + r] = np.eye(r)
    tab[:r, -1] = b
    tab[r, :n] = -a.sum(axis=0)
    tab[r, -1] = -b.sum()
    basis = list(range(n, n + r))

    for _ in range(50 * (n + r) + 1000):
        costs = tab[r, : n + r]
        entering = next((j for j in range(n + r) if costs[j] < -_COST_EPS), None)
        if entering is None:
            break
        col = tab[:r, entering]
        best, leave = None, None
        for i in range(r):
            if col[i] > _PIVOT_EPS:
                ratio = tab[i, -1] / col[i]
                if (
                    best is None
                    or ratio < best - 1e-15
                    or (abs(ratio - best) <= 1e-15 and basis[i] < basis[leave])
                ):
                    best, leave = ratio, i
        if leave is None:  # cannot happen in phase one, the objective is bounded below
            break
        tab[leave] /= tab[leave, entering]
        for i in range(r + 1):
            if i != leave and tab[i, entering] != 0.0:
                tab[i] -= tab[i, entering] * tab[leave]
        basis[leave] = entering
    else:
        raise RuntimeError("phase-one simplex did not terminate")

    x = np.zeros(n + r)
    for i, j in enumerate(basis):
        x[j] = tab[i, -1]
    return float(x[n:].sum()), x[:n]


def _refine(a: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Re-solve on the support of ``x`` to wash out pivoting round-off."""
    x = np.clip(x, 0.0, None)
    support = np.flatnonzero(x > 0)
    if support.size == 0:
        return x
    sol, *_ = np.linalg.lstsq(a[:, support], b, rcond=None)
    if (sol >= 0).all():
        y = np.zeros_like(x)
        y[support] = sol
        if np.abs(a @ y - b).max() <= np.abs(a @ x - b).max():
            return y
    return x


def _solve_rows(rows: np.ndarray, world_count: int) -> Optional[np.ndarray]:
    a = np.vstack([rows.reshape(-1, world_count), np.ones((1, world_count))])
    b = np.zeros(a.shape[0])
    b[-1] = 1.0
    infeasibility, x = phase_one(a, b)
    if infeasibility > FEASIBILITY_TOL:
        return None
    x = _refine(a, b, x)
    return x / x.sum()


def is_consistent(kb: KnowledgeBase | CompiledKB) -> tuple[bool, Optional[Distribution]]:
    """Decide whether ``kb`` has a model; on success also return one."""
    ckb = kb if isinstance(kb, CompiledKB) else compile_kb(kb)
    if len(ckb.kb) == 0:
        return True, Distribution.uniform(ckb.world_count)
    x = _solve_rows(ckb.rows, ckb.world_count)
    if x is None:
        return False, None
    return True, Distribution.from_weights(x)


def minimal_inconsistent_subsets(
    kb: KnowledgeBase | CompiledKB, cap: int = DEFAULT_SUBSET_CAP
) -> MisReport:
    """All inclusion-minimal inconsistent subsets, as sorted index tuples.

    Candidates are visited by increasing size. A candidate containing an
    already found MIS is skipped; any other inconsistent candidate has only
    consistent proper subsets and is therefore minimal.
    """
    ckb = kb if isinstance(kb, CompiledKB) else compile_kb(kb)
    n = len(ckb.kb)
    if n > cap:
        raise SubsetCapExceeded(n, cap)
    found: list[int] = []
    if n and _solve_rows(ckb.rows, ckb.world_count) is not None:
        return MisReport((), (True,) * n)
    for size in range(1, n + 1):
        for combo in combinations(range(n), size):
            mask = sum(1 << i for i in combo)
            if any(m & mask == m for m in found):
                continue
            if _solve_rows(ckb.rows[list(combo)], ckb.world_count) is None:
                found.append(mask)
    subsets = tuple(tuple(i for i in range(n) if m >> i & 1) for m in found)
    in_some = set(i for s in subsets for i in s)
    return MisReport(subsets, tuple(i not in in_some for i in range(n)))


def is_free(kb: KnowledgeBase | CompiledKB, index: int, cap: int = DEFAULT_SUBSET_CAP) -> bool:
    n = len(kb.kb) if isinstance(kb, CompiledKB) else len(kb)
    if not 0 <= index < n:
        raise IndexError(index)
    return minimal_inconsistent_subsets(kb, cap).free[index]
