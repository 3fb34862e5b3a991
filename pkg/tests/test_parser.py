import pytest

from zoiq.parser import (
    ParseError,
    axiom_text,
    kb_text,
    parse_concept,
    parse_kb,
    parse_query,
)
from zoiq.syntax import (
    And,
    AtLeast,
    Atomic,
    ConceptAssert,
    ConceptEq,
    EqAssert,
    Exists,
    ExistsAuto,
    Gci,
    Inverse,
    NegAssert,
    Nominal,
    Not,
    RoleAssert,
    RoleDiff,
    RoleEq,
    RoleIncl,
    RoleName,
    RoleOr,
    TOP,
    Test,
)


def test_basic_kb():
    kb = parse_kb("A(a). A [= exists(r, A).")
    assert kb.abox == (ConceptAssert("A", "a"),)
    assert kb.tbox == (Gci(Atomic("A"), Exists(RoleName("r"), Atomic("A"))),)


def test_regex_gci_builds_two_state_nfa():
    kb = parse_kb("A == exists(auto[(r)*], Top).")
    (ax,) = kb.tbox
    assert isinstance(ax, ConceptEq)
    auto = ax.right
    assert isinstance(auto, ExistsAuto)
    assert auto.filler == TOP
    # hand-built construction for r*: one state, a self-loop, accepting
    nfa = auto.nfa
    assert nfa.initial in nfa.final
    role_steps = [t for t in nfa.transitions if not isinstance(t[1], Test)]
    assert all(lab == RoleName("r") for _, lab, _ in role_steps)
    assert nfa.n_states <= 2 * 2


def test_contradictory_assertions_parse():
    kb = parse_kb("r(a,b). not r(a,b).")
    assert kb.abox == (
        RoleAssert("r", "a", "b"),
        NegAssert(RoleAssert("r", "a", "b")),
    )


def test_all_axiom_forms():
    text = """
# a comment
A [= B.
A == not(B).
r [= s.
t = r & s.
A(a).
r(a, b).
a ~ b.
not A(a).
"""
    kb = parse_kb(text)
    assert RoleEq("t", RoleOr(RoleName("r"), RoleName("s"))) not in kb.tbox
    assert RoleEq("t", parse_kb("t = r & s.").tbox[0].role) in kb.tbox
    assert RoleIncl(RoleName("r"), RoleName("s")) in kb.tbox
    assert EqAssert("a", "b") in kb.abox


def test_concept_sugar():
    c = parse_concept("or(A, B)")
    assert c == Not(And(Not(Atomic("A")), Not(Atomic("B"))))
    c = parse_concept("forall(r, A)")
    assert c == Not(Exists(RoleName("r"), Not(Atomic("A"))))
    c = parse_concept("atmost(1, r, A)")
    assert c == Not(AtLeast(2, RoleName("r"), Atomic("A")))
    c = parse_concept("atleast(2, inv(r) \\ s, {o})")
    assert c == AtLeast(2, RoleDiff(Inverse(RoleName("r")), RoleName("s")), Nominal("o"))


def test_reserved_names_rejected():
    with pytest.raises(ParseError):
        parse_kb("child(a, b).")
    with pytest.raises(ParseError):
        parse_kb("A [= exists(edge, B).")
    with pytest.raises(ParseError):
        parse_kb("Root(a).")
    # internal mode accepts them
    kb = parse_kb("Root(a). edge(a, a).", internal=True)
    assert len(kb.abox) == 2


def test_generated_names_need_internal_mode():
    assert parse_kb("#C0(a).", internal=True).abox == (ConceptAssert("#C0", "a"),)
    # in user mode the hash starts a comment
    assert parse_kb("#C0(a).").abox == ()


def test_case_conventions():
    with pytest.raises(ParseError):
        parse_kb("a [= B.")  # lowercase left of a concept inclusion
    with pytest.raises(ParseError):
        parse_kb("A(B).")  # uppercase individual


def test_malformed_cardinality():
    with pytest.raises(ParseError):
        parse_kb("A [= atleast(-1, r, B).")
    with pytest.raises(ParseError):
        parse_kb("A [= atleast(2x, r, B).")


def test_error_carries_position():
    with pytest.raises(ParseError) as err:
        parse_kb("A [= .")
    assert err.value.line == 1
    assert err.value.col == 6


def test_round_trip_on_asts():
    text = """
A(a).
not r(a, b).
a ~ b.
A [= and(B, not(exists(r & s, Top))).
B == exists(auto[(r)* test(A) s + inv(r)], Bot).
C == atleast(3, r | s, self(t)).
u = inv(r) \\ s.
r & u [= s.
"""
    kb = parse_kb(text)
    printed = kb_text(kb)
    again = parse_kb(printed)
    assert again == kb
    assert kb_text(again) == printed


def test_plus_postfix_versus_union():
    star = parse_kb("A == exists(auto[(r)+], Top).").tbox[0].right.nfa
    union = parse_kb("A == exists(auto[(r) + s], Top).").tbox[0].right.nfa
    # `(r)+` accepts r-chains, never an s step
    assert all(
        lab == RoleName("r") for _, lab, _ in star.transitions
    )
    assert any(lab == RoleName("s") for _, lab, _ in union.transitions)


def test_query_parsing():
    (q,) = parse_query("A(?x) & r(a, ?x)")
    assert len(q.atoms) == 2
    assert q.individuals() == {"a"}
    assert q.is_rooted()
    disjuncts = parse_query("A(a) | B(?x) & r(a, ?x)")
    assert len(disjuncts) == 2
    assert not parse_query("r(?x, ?y)")[0].is_rooted()
    # individual present but disconnected
    assert not parse_query("A(a) & B(?x)")[0].is_rooted()


def test_axiom_text_examples():
    kb = parse_kb("not A(a).")
    assert axiom_text(kb.abox[0]) == "not A(a)."
