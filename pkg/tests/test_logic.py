import pytest
from hypothesis import given, strategies as st

from probinc.logic import (
    TOP,
    And,
    Literal,
    Not,
    Or,
    Signature,
    Variable,
    World,
    WorldCapExceeded,
    enumerate_worlds,
    models,
    satisfies,
)
from tests.oracles import truth_table

AB = Signature.binary("A", "B")
COLOR = Signature((Variable("Color", ("r", "g", "b")), Variable("A")))

A, B = Literal("A"), Literal("B")
notA, notB = Not(A), Not(B)


def world(sig, *values):
    return World(sig, sig.index_of(values))


def test_two_binary_variables_give_four_worlds_in_order():
    worlds = enumerate_worlds(AB)
    assert [w.assignment for w in worlds] == [
        ("true", "true"),
        ("true", "false"),
        ("false", "true"),
        ("false", "false"),
    ]
    assert [str(w) for w in worlds] == ["A && B", "A && !B", "!A && B", "!A && !B"]


def test_mixed_domain_count():
    assert len(enumerate_worlds(COLOR)) == 6


def test_empty_signature_has_one_world():
    worlds = enumerate_worlds(Signature())
    assert len(worlds) == 1
    assert worlds[0].assignment == ()
    assert satisfies(worlds[0], TOP)


def test_world_cap_is_a_hard_error():
    with pytest.raises(WorldCapExceeded) as info:
        Signature.binary(*"ABCDE", max_worlds=16)
    assert info.value.world_count == 32
    assert "32" in str(info.value)


@pytest.mark.parametrize(
    "f, expected",
    [(Or(A, B), True), (And(A, B), False), (TOP, True), (notB, True), (Not(Or(A, B)), False)],
)
def test_satisfies_at_a_notb(f, expected):
    assert satisfies(world(AB, "true", "false"), f) is expected


def test_models_of_b():
    assert models(B, AB).indices == [0, 2]  # AB, ĀB


def test_contradiction_has_no_models():
    assert len(models(And(A, notA), AB)) == 0


def test_color_literal_has_one_model_per_other_assignment():
    sig = Signature((Variable("Color", ("r", "g", "b")),))
    assert models(Literal("Color", "r"), sig).indices == [0]
    assert len(models(Literal("Color", "r"), COLOR)) == 2


def test_unknown_literal_rejected():
    with pytest.raises(ValueError):
        models(Literal("Z"), AB)
    with pytest.raises(ValueError):
        models(Literal("Color", "purple"), COLOR)


def test_duplicate_names_and_values_rejected():
    with pytest.raises(ValueError):
        Signature((Variable("A"), Variable("A")))
    with pytest.raises(ValueError):
        Variable("X", ("a", "a"))
    with pytest.raises(ValueError):
        Variable("X", ("a",))


SIG4 = Signature((Variable("A"), Variable("B"), Variable("C", ("x", "y", "z")), Variable("D")))


def _literals():
    lits = [Literal(v.name, val) for v in SIG4.variables for val in v.domain]
    return st.sampled_from(lits)


formulas = st.recursive(
    st.one_of(_literals(), st.just(TOP)),
    lambda sub: st.one_of(
        sub.map(Not), st.tuples(sub, sub).map(lambda t: And(*t)), st.tuples(sub, sub).map(lambda t: Or(*t))
    ),
    max_leaves=8,
)


@given(formulas)
def test_negation_partitions_omega(f):
    pos, neg = models(f, SIG4), models(Not(f), SIG4)
    assert len(pos & neg) == 0
    assert len(pos | neg) == SIG4.world_count


@given(formulas, formulas)
def test_connectives_are_set_operations(f, g):
    assert models(And(f, g), SIG4) == models(f, SIG4) & models(g, SIG4)
    assert models(Or(f, g), SIG4) == models(f, SIG4) | models(g, SIG4)


@given(formulas)
def test_vectorized_models_match_world_by_world_evaluation(f):
    assert models(f, SIG4).mask.tolist() == truth_table(f, SIG4)


@given(st.integers(0, SIG4.world_count - 1))
def test_index_assignment_round_trip(k):
    assert SIG4.index_of(SIG4.assignment_of(k)) == k
    w = World(SIG4, k)
    assert len(w.assignment) == len(SIG4.variables)
