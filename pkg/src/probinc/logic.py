"""Multi-valued propositional language: signatures, formulas, worlds and model sets.

Worlds are indexed in mixed radix with the first declared variable as the most
significant digit and each domain in declaration order. For two binary
variables ``A``, ``B`` (domain ``true, false``) this gives the order
``AB, AB̄, ĀB, ĀB̄``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence, Union

import numpy as np

DEFAULT_MAX_WORLDS = 2**20
BINARY_DOMAIN = ("true", "false")


class WorldCapExceeded(ValueError):
    """Raised when a signature would need more worlds than the configured cap."""

    def __init__(self, world_count: int, cap: int):
        super().__init__(f"signature has {world_count} worlds, exceeding the cap of {cap}")
        self.world_count = world_count
        self.cap = cap


@dataclass(frozen=True)
class Variable:
    name: str
    domain: tuple[str, ...] = BINARY_DOMAIN

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(self.domain))
        if len(self.domain) < 2:
            raise ValueError(f"variable {self.name!r} needs at least two domain values")
        if len(set(self.domain)) != len(self.domain):
            raise ValueError(f"variable {self.name!r} has duplicate domain values")

    @property
    def is_binary(self) -> bool:
        return self.domain == BINARY_DOMAIN


@dataclass(frozen=True)
class Signature:
    """Ordered set of variables with finite domains."""

    variables: tuple[Variable, ...] = ()
    max_worlds: int = field(default=DEFAULT_MAX_WORLDS, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")
        if self.world_count > self.max_worlds:
            raise WorldCapExceeded(self.world_count, self.max_worlds)

    @classmethod
    def binary(cls, *names: str, max_worlds: int = DEFAULT_MAX_WORLDS) -> Signature:
        return cls(tuple(Variable(n) for n in names), max_worlds=max_worlds)

    @property
    def world_count(self) -> int:
        return math.prod(len(v.domain) for v in self.variables)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def position(self, name: str) -> int:
        for i, v in enumerate(self.variables):
            if v.name == name:
                return i
        raise KeyError(name)

    def extend(self, *variables: Variable) -> Signature:
        return Signature(self.variables + tuple(variables), max_worlds=self.max_worlds)

    @cached_property
    def value_table(self) -> np.ndarray:
        """(world_count, n_vars) array of domain-value indices, row ``k`` is world ``k``."""
        sizes = [len(v.domain) for v in self.variables]
        table = np.zeros((self.world_count, len(sizes)), dtype=np.int32)
        stride = 1
        index = np.arange(self.world_count)
        for col in range(len(sizes) - 1, -1, -1):
            table[:, col] = (index // stride) % sizes[col]
            stride *= sizes[col]
        table.setflags(write=False)
        return table

    def index_of(self, assignment: Sequence[str]) -> int:
        if len(assignment) != len(self.variables):
            raise ValueError("assignment must give one value per variable")
        idx = 0
        for var, value in zip(self.variables, assignment):
            idx = idx * len(var.domain) + var.domain.index(value)
        return idx

    def assignment_of(self, index: int) -> tuple[str, ...]:
        if not 0 <= index < self.world_count:
            raise IndexError(index)
        values = []
        for var in reversed(self.variables):
            index, digit = divmod(index, len(var.domain))
            values.append(var.domain[digit])
        return tuple(reversed(values))


@dataclass(frozen=True)
class World:
    signature: Signature
    index: int

    @property
    def assignment(self) -> tuple[str, ...]:
        return self.signature.assignment_of(self.index)

    def __str__(self) -> str:
        parts = []
        for var, value in zip(self.signature.variables, self.assignment):
            if var.is_binary:
                parts.append(var.name if value == "true" else "!" + var.name)
            else:
                parts.append(f"{var.name}={value}")
        return " && ".join(parts) if parts else "top"


# --- formulas -------------------------------------------------------------


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Literal:
    variable: str
    value: str = "true"


@dataclass(frozen=True)
class Not:
    operand: Formula


@dataclass(frozen=True)
class And:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or:
    left: Formula
    right: Formula


Formula = Union[Top, Literal, Not, And, Or]
TOP = Top()


def check_formula(f: Formula, sig: Signature) -> None:
    """Raise ``ValueError`` unless every literal of ``f`` names a declared variable and value."""
    if isinstance(f, Top):
        return
    if isinstance(f, Literal):
        try:
            var = sig.variable(f.variable)
        except KeyError:
            raise ValueError(f"unknown variable {f.variable!r}") from None
        if f.value not in var.domain:
            raise ValueError(f"{f.value!r} is not in the domain of {f.variable!r}")
        return
    if isinstance(f, Not):
        check_formula(f.operand, sig)
        return
    check_formula(f.left, sig)
    check_formula(f.right, sig)


def variables_of(f: Formula) -> frozenset[str]:
    if isinstance(f, Top):
        return frozenset()
    if isinstance(f, Literal):
        return frozenset([f.variable])
    if isinstance(f, Not):
        return variables_of(f.operand)
    return variables_of(f.left) | variables_of(f.right)


def satisfies(w: World, f: Formula) -> bool:
    if isinstance(f, Top):
        return True
    if isinstance(f, Literal):
        return w.assignment[w.signature.position(f.variable)] == f.value
    if isinstance(f, Not):
        return not satisfies(w, f.operand)
    if isinstance(f, And):
        return satisfies(w, f.left) and satisfies(w, f.right)
    if isinstance(f, Or):
        return satisfies(w, f.left) or satisfies(w, f.right)
    raise TypeError(f"not a formula: {f!r}")


def enumerate_worlds(sig: Signature) -> list[World]:
    if sig.world_count > sig.max_worlds:
        raise WorldCapExceeded(sig.world_count, sig.max_worlds)
    return [World(sig, k) for k in range(sig.world_count)]


# --- model sets -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WorldSet:
    """Subset of Ω stored as a read-only boolean mask over world indices."""

    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool).copy()
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    def __len__(self) -> int:
        return int(self.mask.sum())

    def __contains__(self, index: int) -> bool:
        return bool(self.mask[index])

    def __iter__(self) -> Iterator[int]:
        return iter(np.flatnonzero(self.mask).tolist())

    def __eq__(self, other: object) -> bool:
        return isinstance(other, WorldSet) and np.array_equal(self.mask, other.mask)

    def __hash__(self) -> int:
        return hash(self.mask.tobytes())

    def __and__(self, other: WorldSet) -> WorldSet:
        return WorldSet(self.mask & other.mask)

    def __or__(self, other: WorldSet) -> WorldSet:
        return WorldSet(self.mask | other.mask)

    def complement(self) -> WorldSet:
        return WorldSet(~self.mask)

    @property
    def indices(self) -> list[int]:
        return list(self)


def _mask(f: Formula, sig: Signature) -> np.ndarray:
    if isinstance(f, Top):
        return np.ones(sig.world_count, dtype=bool)
    if isinstance(f, Literal):
        pos = sig.position(f.variable)
        return sig.value_table[:, pos] == sig.variables[pos].domain.index(f.value)
    if isinstance(f, Not):
        return ~_mask(f.operand, sig)
    if isinstance(f, And):
        return _mask(f.left, sig) & _mask(f.right, sig)
    if isinstance(f, Or):
        return _mask(f.left, sig) | _mask(f.right, sig)
    raise TypeError(f"not a formula: {f!r}")


def models(f: Formula, sig: Signature) -> WorldSet:
    """Mod(f): the worlds of ``sig`` satisfying ``f``, computed column-wise over Ω."""
    if sig.world_count > sig.max_worlds:
        raise WorldCapExceeded(sig.world_count, sig.max_worlds)
    check_formula(f, sig)
    return WorldSet(_mask(f, sig))


# --- printing -------------------------------------------------------------

_PREC = {Or: 1, And: 2, Not: 3, Literal: 4, Top: 4}


def format_formula(f: Formula, sig: Signature | None = None) -> str:
    """Render ``f`` in the KB surface syntax so that parsing gives back the same AST."""
    if isinstance(f, Top):
        return "top"
    if isinstance(f, Literal):
        binary = sig is None or sig.variable(f.variable).is_binary
        if binary and f.value == "true":
            return f.variable
        return f"{f.variable}={f.value}"
    if isinstance(f, Not):
        inner = format_formula(f.operand, sig)
        if _PREC[type(f.operand)] < _PREC[Not]:
            inner = f"({inner})"
        return "!" + inner
    op = " && " if isinstance(f, And) else " || "
    prec = _PREC[type(f)]
    left = format_formula(f.left, sig)
    if _PREC[type(f.left)] < prec:
        left = f"({left})"
    right = format_formula(f.right, sig)
    # operators are left-associative, so an equal-precedence right child needs parens
    if _PREC[type(f.right)] <= prec:
        right = f"({right})"
    return left + op + right
