"""Exact Shapley values for coalition games and for constraint blame in a KB.

Coalitions are bitmasks over players ``0..n-1``. Only coalitions containing the
player contribute, since v(C) − v(C \\ {i}) vanishes otherwise; this also skips
the undefined (−1)! weight at C = ∅.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Optional

from .kb import KnowledgeBase
from .measure import SolverConfig, inc_star

DEFAULT_PLAYER_CAP = 20
SUPERADDITIVITY_TOL = 1e-4
_FULL_SUPERADDITIVITY_CHECK = 10


class PlayerCapExceeded(ValueError):
    pass


@dataclass
class CoalitionGame:
    """Game on players ``0..n-1``; ``value`` maps a coalition bitmask to its payoff."""

    n: int
    value: Callable[[int], float]
    _memo: dict = field(default_factory=dict, repr=False)

    def __call__(self, coalition: int) -> float:
        try:
            return self._memo[coalition]
        except KeyError:
            v = self._memo[coalition] = float(self.value(coalition))
            return v

    @classmethod
    def from_table(cls, n: int, table: dict) -> CoalitionGame:
        """Build from ``{frozenset-or-tuple of 1-based players: payoff}``; missing coalitions are 0."""
        masks = {sum(1 << (p - 1) for p in players): v for players, v in table.items()}
        return cls(n, lambda c: masks.get(c, 0.0))

    @property
    def evaluations(self) -> int:
        return len(self._memo)


@dataclass(frozen=True)
class ShapleyReport:
    values: tuple[float, ...]
    total: float
    subsets_evaluated: int
    warnings: tuple[str, ...] = ()
    coalition_values: Optional[dict] = field(default=None, compare=False, repr=False)


def shapley_weights(n: int) -> list[Fraction]:
    """``w[k] = (k−1)!(n−k)!/n!`` for coalition sizes k = 1..n (index 0 unused).

    Built by the recurrence w[1] = 1/n, w[k+1] = w[k]·k/(n−k) to avoid factorials.
    """
    w = [Fraction(0)] * (n + 1)
    if n == 0:
        return w
    w[1] = Fraction(1, n)
    for k in range(1, n):
        w[k + 1] = w[k] * k / (n - k)
    return w


def _superadditivity_warnings(game: CoalitionGame) -> list[str]:
    n = game.n
    issues = []
    full = (1 << n) - 1
    if n <= _FULL_SUPERADDITIVITY_CHECK:
        pairs = ((s, u ^ s) for u in range(1, full + 1) for s in _submasks(u) if s and s < (u ^ s))
    else:
        pairs = ((u ^ (1 << i), 1 << i) for u in range(1, full + 1) for i in range(n) if u >> i & 1)
    for s, t in pairs:
        gap = game(s) + game(t) - game(s | t)
        if gap > SUPERADDITIVITY_TOL:
            issues.append(f"v({_fmt(s | t)}) < v({_fmt(s)}) + v({_fmt(t)}) by {gap:.3g}")
    if abs(game(0)) > SUPERADDITIVITY_TOL:
        issues.append(f"v(empty) = {game(0):.3g}, expected 0")
    return issues


def _submasks(u: int):
    s = u
    while s:
        yield s
        s = (s - 1) & u


def _fmt(mask: int) -> str:
    return "{" + ",".join(str(i + 1) for i in range(mask.bit_length()) if mask >> i & 1) + "}"


def shapley_generic(game: CoalitionGame, cap: int = DEFAULT_PLAYER_CAP) -> ShapleyReport:
    n = game.n
    if n > cap:
        raise PlayerCapExceeded(f"{n} players exceed the cap of {cap}")
    weights = shapley_weights(n)
    values = []
    for i in range(n):
        others = [j for j in range(n) if j != i]
        by_size = []
        for size in range(1, n + 1):
            diffs = []
            for rest in combinations(others, size - 1):
                c = (1 << i) | sum(1 << j for j in rest)
                diffs.append(game(c) - game(c ^ (1 << i)))
            by_size.append(float(weights[size]) * math.fsum(diffs))
        values.append(math.fsum(by_size))
    total = game((1 << n) - 1)
    warnings = tuple(_superadditivity_warnings(game))
    return ShapleyReport(
        tuple(values), total, game.evaluations, warnings, dict(game._memo)
    )


def coalition_values(
    kb: KnowledgeBase, cfg: SolverConfig | None = None, parallel: int = 1
) -> list[float]:
    """Inc* of every sub-KB, indexed by bitmask over constraint positions."""
    cfg = cfg or SolverConfig()
    n = len(kb)

    def value(mask: int) -> float:
        if mask == 0:
            return 0.0
        return inc_star(kb.subset_mask(mask), cfg).value

    masks = range(1 << n)
    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(value, masks))
    return [value(m) for m in masks]


def shapley_inconsistency(
    kb: KnowledgeBase,
    cfg: SolverConfig | None = None,
    parallel: int = 1,
    cap: int = DEFAULT_PLAYER_CAP,
) -> ShapleyReport:
    """Blame per constraint: the Shapley value of the game v(C) = Inc*(C)."""
    if len(kb) > cap:
        raise PlayerCapExceeded(f"{len(kb)} constraints exceed the cap of {cap}")
    table = coalition_values(kb, cfg, parallel)
    return shapley_generic(CoalitionGame(len(kb), table.__getitem__), cap)
