"""Conditional probabilistic constraints, knowledge bases and the ``.kb`` text format.

File format, one item per line, ``#`` starts a comment::

    var A                      # binary, domain true,false
    var Color: red, green, blue
    (A | B)[0.6]
    r4: (A)[0.2]               # optional label prefix
    (Color=red || !A)[0.25]

Disjunction is ``||``, conjunction ``&&``, negation ``!``. The single ``|`` only
separates consequent from antecedent. A bare variable name stands for
``NAME=true`` and is only allowed for binary variables.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Optional, Sequence

import numpy as np

from .logic import (
    BINARY_DOMAIN,
    DEFAULT_MAX_WORLDS,
    TOP,
    And,
    Formula,
    Literal,
    Not,
    Or,
    Signature,
    Top,
    Variable,
    check_formula,
    format_formula,
    models,
)


class KBError(ValueError):
    pass


class KBSyntaxError(KBError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class SelfInconsistentConstraint(KBError):
    def __init__(self, constraint: ProbabilisticConstraint, where: str = ""):
        text = format_constraint(constraint)
        super().__init__(f"{where}constraint {text} is not self-consistent")
        self.constraint = constraint


@dataclass(frozen=True)
class ProbabilisticConstraint:
    """``(consequent | antecedent)[probability]``."""

    consequent: Formula
    antecedent: Formula = TOP
    probability: float = 1.0
    label: Optional[str] = None

    def __post_init__(self):
        p = float(self.probability)
        if not 0.0 <= p <= 1.0:
            raise KBError(f"probability {p} outside [0, 1]")
        object.__setattr__(self, "probability", p)

    def with_probability(self, p: float) -> ProbabilisticConstraint:
        return ProbabilisticConstraint(self.consequent, self.antecedent, p, self.label)


@dataclass(frozen=True)
class KnowledgeBase:
    signature: Signature
    constraints: tuple[ProbabilisticConstraint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        for c in self.constraints:
            check_formula(c.consequent, self.signature)
            check_formula(c.antecedent, self.signature)
        labels = [c.label for c in self.constraints if c.label is not None]
        if len(set(labels)) != len(labels):
            raise KBError("constraint labels must be unique")

    def __len__(self) -> int:
        return len(self.constraints)

    def __iter__(self) -> Iterator[ProbabilisticConstraint]:
        return iter(self.constraints)

    def __getitem__(self, i: int) -> ProbabilisticConstraint:
        return self.constraints[i]

    @property
    def probabilities(self) -> tuple[float, ...]:
        return tuple(c.probability for c in self.constraints)

    def subset(self, indices: Sequence[int]) -> KnowledgeBase:
        """Sub-KB over the same signature; ``indices`` are positions, in the given order."""
        return KnowledgeBase(self.signature, tuple(self.constraints[i] for i in indices))

    def subset_mask(self, mask: int) -> KnowledgeBase:
        return self.subset([i for i in range(len(self)) if mask >> i & 1])

    def add(self, *constraints: ProbabilisticConstraint) -> KnowledgeBase:
        return KnowledgeBase(self.signature, self.constraints + constraints)

    def with_signature(self, sig: Signature) -> KnowledgeBase:
        return KnowledgeBase(sig, self.constraints)

    def display_label(self, i: int) -> str:
        label = self.constraints[i].label
        return label if label is not None else f"r{i + 1}"


@dataclass(frozen=True, eq=False)
class CompiledKB:
    """A knowledge base with Mod(AᵢBᵢ) and Mod(Bᵢ) cached as boolean matrices."""

    kb: KnowledgeBase
    ab: np.ndarray  # (m, |Ω|) bool, row i is Mod(A_i B_i)
    b: np.ndarray  # (m, |Ω|) bool, row i is Mod(B_i)

    @property
    def signature(self) -> Signature:
        return self.kb.signature

    @property
    def world_count(self) -> int:
        return self.kb.signature.world_count

    @cached_property
    def d(self) -> np.ndarray:
        return np.array(self.kb.probabilities, dtype=float)

    @cached_property
    def rows(self) -> np.ndarray:
        """Coefficients of Σ_{Mod(AB)} α − d·Σ_{Mod(B)} α, one row per constraint."""
        return self.ab.astype(float) - self.d[:, None] * self.b.astype(float)


def compile_kb(kb: KnowledgeBase) -> CompiledKB:
    sig = kb.signature
    width = sig.world_count
    ab = np.zeros((len(kb), width), dtype=bool)
    b = np.zeros((len(kb), width), dtype=bool)
    for i, c in enumerate(kb):
        b[i] = models(c.antecedent, sig).mask
        ab[i] = models(And(c.consequent, c.antecedent), sig).mask
    ab.setflags(write=False)
    b.setflags(write=False)
    return CompiledKB(kb, ab, b)


def check_self_consistency(c: ProbabilisticConstraint, sig: Signature) -> bool:
    """True iff some distribution with P(B) > 0 has P(A|B) = d.

    Decided as the consistency of ``{(A|B)[d], (B)[1]}``; the extra constraint
    rules out the vacuous P(B) = 0 models so that e.g. ``(A|!A)[0.5]`` is
    rejected while ``(A|!A)[0]`` is accepted.
    """
    from .feasibility import is_consistent

    probe = KnowledgeBase(
        sig,
        (
            ProbabilisticConstraint(c.consequent, c.antecedent, c.probability),
            ProbabilisticConstraint(c.antecedent, TOP, 1.0),
        ),
    )
    return is_consistent(probe)[0]


def ensure_self_consistent(kb: KnowledgeBase) -> KnowledgeBase:
    for i, c in enumerate(kb):
        if not check_self_consistency(c, kb.signature):
            raise SelfInconsistentConstraint(c, f"{kb.display_label(i)}: ")
    return kb


def characteristic(kb: KnowledgeBase, x: Sequence[float]) -> KnowledgeBase:
    """Same conditionals as ``kb`` with probabilities replaced by ``x``."""
    if len(x) != len(kb):
        raise ValueError(f"expected {len(kb)} probabilities, got {len(x)}")
    out = KnowledgeBase(kb.signature, tuple(c.with_probability(p) for c, p in zip(kb, x)))
    return ensure_self_consistent(out)


# --- parsing --------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_.\-]*)
  | (?P<op>\|\||&&|[()\[\]|!=:,])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    col: int


def _tokenize(line: str, lineno: int) -> list[_Tok]:
    toks, pos = [], 0
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if m is None:
            raise KBSyntaxError(f"unexpected character {line[pos]!r}", lineno, pos + 1)
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", len(line) + 1))
    return toks


class _LineParser:
    def __init__(self, line: str, lineno: int, sig: Signature, auto_declare: bool):
        self.toks = _tokenize(line, lineno)
        self.pos = 0
        self.lineno = lineno
        self.sig = sig
        self.auto_declare = auto_declare

    @property
    def tok(self) -> _Tok:
        return self.toks[self.pos]

    def error(self, message: str, tok: _Tok | None = None):
        tok = tok or self.tok
        return KBSyntaxError(message, self.lineno, tok.col)

    def accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            found = self.tok.text or "end of line"
            raise self.error(f"expected {text!r}, found {found!r}")

    def name(self) -> str:
        if self.tok.kind != "name":
            raise self.error(f"expected a name, found {self.tok.text or 'end of line'!r}")
        text = self.tok.text
        self.pos += 1
        return text

    def value(self) -> str:
        if self.tok.kind not in ("name", "num"):
            raise self.error("expected a domain value")
        text = self.tok.text
        self.pos += 1
        return text

    def end(self) -> None:
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")

    # declarations
    def declaration(self) -> Variable:
        self.pos += 1  # 'var'
        name_tok = self.tok
        name = self.name()
        if self.accept(":"):
            values = [self.value()]
            while self.accept(","):
                values.append(self.value())
            if len(values) < 2:
                raise self.error("a domain needs at least two values", name_tok)
        else:
            values = list(BINARY_DOMAIN)
        self.end()
        if name in self.sig.names:
            raise self.error(f"variable {name!r} declared twice", name_tok)
        try:
            return Variable(name, tuple(values))
        except ValueError as e:
            raise self.error(str(e), name_tok) from None

    # constraints
    def constraint(self) -> ProbabilisticConstraint:
        label = None
        if self.tok.kind == "name" and self.toks[self.pos + 1].text == ":":
            label = self.name()
            self.pos += 1
        self.expect("(")
        consequent = self.formula()
        antecedent: Formula = TOP
        if self.accept("|"):
            antecedent = self.formula()
        self.expect(")")
        self.expect("[")
        num = self.tok
        if num.kind != "num":
            raise self.error("expected a probability")
        self.pos += 1
        self.expect("]")
        self.end()
        p = float(num.text)
        if not 0.0 <= p <= 1.0:
            raise KBSyntaxError(f"probability {num.text} outside [0, 1]", self.lineno, num.col)
        return ProbabilisticConstraint(consequent, antecedent, p, label)

    def formula(self) -> Formula:
        f = self.conj()
        while self.accept("||"):
            f = Or(f, self.conj())
        return f

    def conj(self) -> Formula:
        f = self.unary()
        while self.accept("&&"):
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        if self.accept("!"):
            return Not(self.unary())
        if self.accept("("):
            f = self.formula()
            self.expect(")")
            return f
        return self.atom()

    def atom(self) -> Formula:
        tok = self.tok
        name = self.name()
        if name == "top":
            return Top()
        if name not in self.sig.names:
            if not self.auto_declare:
                raise self.error(f"unknown variable {name!r}", tok)
            self.sig = self.sig.extend(Variable(name))
        var = self.sig.variable(name)
        if self.accept("="):
            vtok = self.tok
            value = self.value()
            if value not in var.domain:
                raise self.error(f"{value!r} is not in the domain of {name!r}", vtok)
            return Literal(name, value)
        if not var.is_binary:
            raise self.error(f"variable {name!r} is not binary; write {name}=VALUE", tok)
        return Literal(name, "true")


def parse_kb(
    text: str,
    *,
    auto_declare: bool = False,
    max_worlds: int = DEFAULT_MAX_WORLDS,
    check_consistency: bool = True,
) -> KnowledgeBase:
    """Parse the ``.kb`` text format.

    With ``auto_declare`` unknown names become binary variables, appended to the
    signature in order of first use. Every constraint is checked for
    self-consistency unless ``check_consistency`` is false.
    """
    sig = Signature((), max_worlds=max_worlds)
    constraints: list[ProbabilisticConstraint] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        parser = _LineParser(line, lineno, sig, auto_declare)
        if parser.tok.kind == "name" and parser.tok.text == "var":
            variable = parser.declaration()
            sig = sig.extend(variable)
            continue
        try:
            constraints.append(parser.constraint())
        except KBError:
            raise
        except ValueError as e:  # world cap from auto-declaration
            raise KBSyntaxError(str(e), lineno, 1) from None
        sig = parser.sig
    kb = KnowledgeBase(sig, tuple(constraints))
    labels = [c.label for c in constraints if c.label is not None]
    if len(set(labels)) != len(labels):
        raise KBError("constraint labels must be unique")
    if check_consistency:
        ensure_self_consistent(kb)
    return kb


def load_kb(path, **kwargs) -> KnowledgeBase:
    with open(path, encoding="utf-8") as fh:
        return parse_kb(fh.read(), **kwargs)


def format_probability(p: float) -> str:
    text = repr(float(p))
    return text[:-2] if text.endswith(".0") else text


def format_constraint(c: ProbabilisticConstraint, sig: Signature | None = None) -> str:
    body = format_formula(c.consequent, sig)
    if not isinstance(c.antecedent, Top):
        body += " | " + format_formula(c.antecedent, sig)
    return f"({body})[{format_probability(c.probability)}]"


def serialize_kb(kb: KnowledgeBase) -> str:
    lines = []
    for var in kb.signature.variables:
        if var.is_binary:
            lines.append(f"var {var.name}")
        else:
            lines.append(f"var {var.name}: {', '.join(var.domain)}")
    for c in kb:
        prefix = f"{c.label}: " if c.label is not None else ""
        lines.append(prefix + format_constraint(c, kb.signature))
    return "\n".join(lines) + "\n"
