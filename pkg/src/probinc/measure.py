"""The deviation-minimizing inconsistency measure Inc* and its normalization.

Inc*(R) is the least total amount Σ (ηᵢ + τᵢ) by which the probabilities of R
have to be shifted so that the shifted knowledge base has a model. For a fixed
distribution P the cheapest shift of constraint i is εᵢ = P(Aᵢ|Bᵢ) − dᵢ (or 0
when P(Bᵢ) = 0, where the constraint holds vacuously), so

    Inc*(R) = min over P of  Σᵢ |P(Aᵢ|Bᵢ) − dᵢ|,

with ηᵢ = max(εᵢ, 0) and τᵢ = max(−εᵢ, 0). This objective is nonconvex in P;
:func:`inc_star` minimizes it by iteratively reweighted linear programming from
several starting points and :func:`grid_oracle` provides an independent
brute-force check for small signatures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import linprog, minimize

from .feasibility import Distribution, is_consistent
from .kb import (
    CompiledKB,
    KnowledgeBase,
    ProbabilisticConstraint,
    characteristic,
    compile_kb,
)
from .logic import And, Signature, models

MAX_VERTEX_STARTS = 32
DEFAULT_GRID_BUDGET = 5_000_000
REPAIR_DECIMALS = 12
_SNAP = 1e-12  # round-off level deviations are reported as exact zeros
_LOCAL_RADIUS = 0.3  # initial trust radius for the descent from a raw start


class RepairError(RuntimeError):
    pass


class GridBudgetExceeded(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    starts: int = 16
    max_iterations: int = 200
    tolerance: float = 1e-6
    vacuity_threshold: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        if self.starts < 1 or self.max_iterations < 1:
            raise ValueError("starts and max_iterations must be positive")
        if not 0 < self.tolerance < 1e-3:
            raise ValueError("tolerance must lie in (0, 1e-3)")
        if self.vacuity_threshold <= 0:
            raise ValueError("vacuity_threshold must be positive")


@dataclass(frozen=True)
class DeviationVector:
    eta: tuple[float, ...]
    tau: tuple[float, ...]

    @classmethod
    def from_signed(cls, eps: Sequence[float]) -> DeviationVector:
        return cls(
            tuple(e if e > 0 else 0.0 for e in eps), tuple(-e if e < 0 else 0.0 for e in eps)
        )

    @property
    def signed(self) -> tuple[float, ...]:
        return tuple(e - t for e, t in zip(self.eta, self.tau))


@dataclass(frozen=True)
class SolverDiagnostics:
    starts_used: int
    iterations: int
    converged: bool
    best_start: int
    residual: float
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class MeasureResult:
    value: float
    deviations: DeviationVector
    witness: Distribution
    repaired: KnowledgeBase
    diagnostics: SolverDiagnostics


# --- objective ------------------------------------------------------------


def _signed_deviations(
    alpha: np.ndarray, ckb: CompiledKB, vacuity: float
) -> np.ndarray:
    """εᵢ for every constraint; works on a single α or a batch of shape (k, |Ω|)."""
    pab = alpha @ ckb.ab.T.astype(float)
    pb = alpha @ ckb.b.T.astype(float)
    active = pb > vacuity
    ratio = np.divide(pab, pb, out=np.zeros_like(pab), where=active)
    return np.where(active, ratio - ckb.d, 0.0)


def conditional_deviation(
    p: Distribution,
    c: ProbabilisticConstraint,
    sig: Signature,
    vacuity_threshold: float = 1e-9,
) -> float:
    """P(A|B) − d, or 0 when P(B) is at most the vacuity threshold."""
    pb = p.prob(models(c.antecedent, sig).mask)
    if pb <= vacuity_threshold:
        return 0.0
    pab = p.prob(models(And(c.consequent, c.antecedent), sig).mask)
    return pab / pb - c.probability


def total_deviation(
    p: Distribution, kb: KnowledgeBase | CompiledKB, vacuity_threshold: float = 1e-9
) -> float:
    ckb = kb if isinstance(kb, CompiledKB) else compile_kb(kb)
    if len(ckb.kb) == 0:
        return 0.0
    eps = _signed_deviations(p.alpha, ckb, vacuity_threshold)
    return math.fsum(abs(e) for e in eps)


def _objective(alpha: np.ndarray, ckb: CompiledKB, vacuity: float) -> float:
    return math.fsum(np.abs(_signed_deviations(alpha, ckb, vacuity)).tolist())


# --- iteratively reweighted LP -------------------------------------------


class _ReweightedLP:
    """LP  min Σ wᵢ (uᵢ + vᵢ)  s.t.  rowᵢ·α − uᵢ + vᵢ = 0,  Σα = 1,  α, u, v ≥ 0."""

    def __init__(self, ckb: CompiledKB):
        m, w = len(ckb.kb), ckb.world_count
        eye = np.eye(m)
        self.a_eq = np.block(
            [[ckb.rows, -eye, eye], [np.ones((1, w)), np.zeros((1, 2 * m))]]
        )
        self.b_eq = np.zeros(m + 1)
        self.b_eq[-1] = 1.0
        self.m, self.w = m, w

    def solve(self, weights: np.ndarray) -> np.ndarray:
        c = np.concatenate([np.zeros(self.w), weights, weights])
        res = linprog(c, A_eq=self.a_eq, b_eq=self.b_eq, bounds=(0, None), method="highs")
        if res.status != 0:
            raise RuntimeError(f"reweighted LP failed: {res.message}")
        alpha = np.clip(res.x[: self.w], 0.0, None)
        return alpha / alpha.sum()


def _starts(world_count: int, cfg: SolverConfig) -> list[np.ndarray]:
    starts = [np.full(world_count, 1.0 / world_count)]
    for k in range(min(world_count, MAX_VERTEX_STARTS)):
        vertex = np.zeros(world_count)
        vertex[k] = 1.0
        starts.append(vertex)
    rng = np.random.default_rng(cfg.seed)
    while len(starts) < cfg.starts:
        starts.append(rng.dirichlet(np.ones(world_count)))
    return starts


def _descend(alpha, ckb, lp, cfg) -> tuple[float, np.ndarray, int, bool]:
    """Run the reweighting iteration from ``alpha``; return the best point visited."""
    best = _objective(alpha, ckb, cfg.vacuity_threshold)
    best_alpha = alpha
    prev = best
    history = [alpha]
    for it in range(1, cfg.max_iterations + 1):
        if best <= 0.0:
            return best, best_alpha, it - 1, True
        q = np.maximum(alpha @ ckb.b.T.astype(float), cfg.vacuity_threshold)
        alpha = lp.solve(1.0 / q)
        value = _objective(alpha, ckb, cfg.vacuity_threshold)
        if value < best:
            best, best_alpha = value, alpha
        # a fixed point, or a short cycle between LP vertices, ends the descent
        if abs(value - prev) < cfg.tolerance or any(
            np.abs(alpha - h).max() < 1e-12 for h in history[-2:]
        ):
            return best, best_alpha, it, True
        prev = value
        history.append(alpha)
    return best, best_alpha, cfg.max_iterations, False


def _polish(alpha, value, ckb, cfg, radius: float = 0.1) -> tuple[float, np.ndarray, int]:
    """Trust-region sequential LP on the exact first-order model of Σ|εᵢ|.

    Reweighting stops at fixed points of its surrogate, which need not be
    stationary for the ratio objective itself; this closes the remaining gap.
    Vacuous constraints are kept vacuous inside a step.
    """
    ab = ckb.ab.astype(float)
    b = ckb.b.astype(float)
    m, w = ab.shape
    its = 0
    while radius > 1e-9 and value > 0.0 and its < cfg.max_iterations:
        its += 1
        pb = b @ alpha
        active = pb > cfg.vacuity_threshold
        ratio = np.divide(ab @ alpha, pb, out=np.zeros(m), where=active)
        eps = ratio - ckb.d
        grad = (ab - ratio[:, None] * b) / np.where(active, pb, 1.0)[:, None]
        act = np.flatnonzero(active)
        k = len(act)
        # variables: step (w), then one bound s_i per active constraint
        c = np.concatenate([np.zeros(w), np.ones(k)])
        a_ub = np.block([[grad[act], -np.eye(k)], [-grad[act], -np.eye(k)]])
        b_ub = np.concatenate([-eps[act], eps[act]])
        frozen = b[~active]
        a_eq = np.vstack([np.ones((1, w)), frozen])
        a_eq = np.hstack([a_eq, np.zeros((len(a_eq), k))])
        b_eq = np.concatenate([[0.0], -(frozen @ alpha)])
        bounds = [(max(-radius, -x), radius) for x in alpha] + [(0, None)] * k
        res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
        if res.status != 0 or value - res.fun <= 1e-12:
            break  # first-order stationary within the trust region
        trial = np.clip(alpha + res.x[:w], 0.0, None)
        trial /= trial.sum()
        trial_value = _objective(trial, ckb, cfg.vacuity_threshold)
        if trial_value < value - 1e-15:
            gain = value - trial_value
            alpha, value = trial, trial_value
            if gain < cfg.tolerance * 1e-3:
                break
        else:
            radius /= 4
    return value, alpha, its


def inc_star(kb: KnowledgeBase | CompiledKB, cfg: SolverConfig | None = None) -> MeasureResult:
    """Compute Inc*(kb) together with a minimizing distribution and repair.

    Deviations are one representative of a possibly non-unique optimum: the
    first best point found over the fixed start order.
    """
    cfg = cfg or SolverConfig()
    ckb = kb if isinstance(kb, CompiledKB) else compile_kb(kb)
    kb = ckb.kb
    world_count = ckb.world_count
    if len(kb) == 0:
        uniform = Distribution.uniform(world_count)
        return MeasureResult(
            0.0, DeviationVector((), ()), uniform, kb, SolverDiagnostics(0, 0, True, 0, 0.0)
        )

    lp = _ReweightedLP(ckb)
    best, best_alpha, best_start = math.inf, None, 0
    iterations, converged, used = 0, False, 0
    for k, start in enumerate(_starts(world_count, cfg)):
        value, alpha, its, conv = _descend(start, ckb, lp, cfg)
        value, alpha, polish_its = _polish(alpha, value, ckb, cfg)
        used += 1
        iterations += its + polish_its
        converged = converged or conv
        if value < best:
            best, best_alpha, best_start = value, alpha, k
        if best <= 0.0:
            break
        # The first reweighted LP jumps to a vertex chosen by the start's
        # weights alone, which can funnel every start into one basin; a purely
        # local descent from the raw start keeps the starts diverse.
        start_value = _objective(start, ckb, cfg.vacuity_threshold)
        value, alpha, polish_its = _polish(start, start_value, ckb, cfg, _LOCAL_RADIUS)
        iterations += polish_its
        if value < best:
            best, best_alpha, best_start = value, alpha, k

    witness = Distribution.from_weights(best_alpha)
    eps = _signed_deviations(witness.alpha, ckb, cfg.vacuity_threshold)
    eps[np.abs(eps) <= _SNAP] = 0.0
    deviations = DeviationVector.from_signed(eps.tolist())
    value = math.fsum(deviations.eta) + math.fsum(deviations.tau)
    adjusted = [round(min(max(p, 0.0), 1.0), REPAIR_DECIMALS) for p in ckb.d + eps]
    repaired = characteristic(kb, adjusted)
    residual = float(np.abs(compile_kb(repaired).rows @ witness.alpha).max())
    notes = () if converged else ("no start met the convergence tolerance",)
    diag = SolverDiagnostics(used, iterations, converged, best_start, residual, notes)
    return MeasureResult(value, deviations, witness, repaired, diag)


def inc_star_normalized(kb: KnowledgeBase, cfg: SolverConfig | None = None) -> float:
    if len(kb) == 0:
        return 0.0
    return inc_star(kb, cfg).value / len(kb)


def characteristic_inconsistency(
    kb: KnowledgeBase, x: Sequence[float], cfg: SolverConfig | None = None
) -> float:
    """Inc* of ``kb`` with its probabilities replaced by ``x``."""
    return inc_star(characteristic(kb, x), cfg).value


def repair(kb: KnowledgeBase, result: MeasureResult) -> KnowledgeBase:
    """The repaired knowledge base of ``result``, after verifying it has a model."""
    repaired = result.repaired
    if len(repaired) != len(kb) or repaired.signature != kb.signature:
        raise ValueError("result does not belong to this knowledge base")
    if not is_consistent(repaired)[0]:
        raise RepairError("repaired knowledge base is inconsistent; solver defect")
    return repaired


# --- brute-force oracle ---------------------------------------------------


@lru_cache(maxsize=8)
def _compositions(total: int, parts: int) -> np.ndarray:
    """All vectors of ``parts`` non-negative integers summing to ``total``."""
    if parts == 1:
        out = np.array([[total]], dtype=np.int32)
    elif parts == 2:
        k = np.arange(total + 1, dtype=np.int32)
        out = np.column_stack([k, total - k])
    else:
        blocks = []
        for k in range(total + 1):
            sub = _compositions(total - k, parts - 1)
            blocks.append(np.column_stack([np.full(len(sub), k, dtype=np.int32), sub]))
        out = np.vstack(blocks)
    out.setflags(write=False)
    return out


def lattice_size(world_count: int, resolution: int) -> int:
    return math.comb(resolution + world_count - 1, world_count - 1)


def _pattern_search(alpha: np.ndarray, value: float, ckb: CompiledKB, step: float, vacuity: float):
    """Greedy mass transfers between pairs of worlds with a shrinking step."""
    w = len(alpha)
    while step > 1e-10:
        improved = False
        for s in range(w):
            for t in range(w):
                if s == t or alpha[s] <= 0:
                    continue
                for delta in (min(step, alpha[s]), alpha[s]):
                    trial = alpha.copy()
                    trial[s] -= delta
                    trial[t] += delta
                    tv = _objective(trial, ckb, vacuity)
                    if tv < value - 1e-15:
                        alpha, value, improved = trial, tv, True
                        break
        if not improved:
            step /= 2
    return value, alpha


def _nelder_mead(alpha: np.ndarray, ckb: CompiledKB, scale: float, vacuity: float) -> float:
    """Derivative-free polish in the first |Ω|−1 coordinates; leaving the simplex is penalized."""

    def f(z):
        a = np.append(z, 1.0 - z.sum())
        if (a < 0).any():
            return 10.0 + float(-a[a < 0].sum())
        return _objective(a, ckb, vacuity)

    z0 = alpha[:-1]
    simplex = np.vstack([z0] + [z0 + scale * e for e in np.eye(len(z0))])
    res = minimize(
        f,
        z0,
        method="Nelder-Mead",
        options={"initial_simplex": simplex, "xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000},
    )
    return float(res.fun)


def grid_oracle(
    kb: KnowledgeBase | CompiledKB,
    resolution: int,
    budget: int = DEFAULT_GRID_BUDGET,
    polish: int = 5,
    vacuity_threshold: float = 1e-9,
) -> float:
    """Upper bound on Inc* from exhaustive search over the 1/resolution lattice.

    The ``polish`` best lattice points are refined by pairwise mass-transfer
    pattern search followed by Nelder-Mead. Independent of the LP machinery
    used by :func:`inc_star`.
    """
    ckb = kb if isinstance(kb, CompiledKB) else compile_kb(kb)
    if len(ckb.kb) == 0:
        return 0.0
    w = ckb.world_count
    size = lattice_size(w, resolution)
    if size > budget:
        raise GridBudgetExceeded(f"{size} lattice points exceed the budget of {budget}")
    points = _compositions(resolution, w)
    values = np.empty(len(points))
    for lo in range(0, len(points), 200_000):
        chunk = points[lo : lo + 200_000] / resolution
        eps = _signed_deviations(chunk, ckb, vacuity_threshold)
        values[lo : lo + len(chunk)] = np.abs(eps).sum(axis=1)
    order = np.argsort(values, kind="stable")[:polish]
    best = math.inf
    for idx in order:
        alpha = points[idx] / resolution
        start = _objective(alpha, ckb, vacuity_threshold)
        value, alpha = _pattern_search(alpha, start, ckb, 1.0 / resolution, vacuity_threshold)
        if w > 1:
            value = min(value, _nelder_mead(alpha, ckb, 1.0 / resolution, vacuity_threshold))
        best = min(best, value)
    return best
