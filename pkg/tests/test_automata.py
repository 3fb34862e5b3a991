import itertools
import random

import pytest

from fixtures import (
    BACKLINK_IND_A,
    BACKLINK_IND_T,
    backlink_forest,
    random_forest,
)
import oracles
from zoiq import automata as am
from zoiq import vocab
from zoiq.regex import Alt, Cat, Plus, Star, Sym, TestSym, compile_regex, regex_size
from zoiq.semantics import Interpretation
from zoiq.syntax import Atomic, Nfa, RoleName, Test


def r(name="r"):
    return RoleName(name)


def accepts_word(nfa: Nfa, word, start=None, end=None) -> bool:
    """Pure word acceptance over role-name symbols (no tests, no graph)."""
    states = {nfa.initial if start is None else start}
    for symbol in word:
        states = {
            q
            for p in states
            for (src, lab, q) in nfa.transitions
            if src == p and lab == RoleName(symbol)
        }
    finals = nfa.final if end is None else {end}
    return bool(states & finals)


# ---------------------------------------------------------------------------
# Regex compilation: exhaustive language equality on short words
# ---------------------------------------------------------------------------


def regex_matches(re_ast, word) -> bool:
    if isinstance(re_ast, Sym):
        return len(word) == 1 and word[0] == re_ast.role.name
    if isinstance(re_ast, TestSym):
        return False  # no test symbols in the word-level tests
    if isinstance(re_ast, Cat):
        return any(
            regex_matches(re_ast.left, word[:k]) and regex_matches(re_ast.right, word[k:])
            for k in range(len(word) + 1)
        )
    if isinstance(re_ast, Alt):
        return regex_matches(re_ast.left, word) or regex_matches(re_ast.right, word)
    if isinstance(re_ast, Star):
        if not word:
            return True
        return any(
            regex_matches(re_ast.arg, word[:k]) and regex_matches(re_ast, word[k:])
            for k in range(1, len(word) + 1)
        )
    if isinstance(re_ast, Plus):
        return regex_matches(Cat(re_ast.arg, Star(re_ast.arg)), word)
    raise TypeError


SAMPLE_REGEXES = [
    Sym(r()),
    Star(Sym(r())),
    Plus(Sym(r())),
    Cat(Sym(r()), Sym(r("s"))),
    Alt(Sym(r()), Cat(Sym(r("s")), Sym(r("s")))),
    Cat(Star(Sym(r())), Alt(Sym(r("s")), Sym(r()))),
    Star(Alt(Sym(r()), Sym(r("s")))),
    Cat(Alt(Sym(r()), Sym(r("s"))), Star(Cat(Sym(r()), Sym(r("s"))))),
]


@pytest.mark.parametrize("re_ast", SAMPLE_REGEXES)
def test_compiled_language_equals_regex_language(re_ast):
    nfa = compile_regex(re_ast)
    for length in range(0, 5):
        for word in itertools.product("rs", repeat=length):
            assert accepts_word(nfa, word) == regex_matches(re_ast, word), word


@pytest.mark.parametrize("re_ast", SAMPLE_REGEXES)
def test_state_count_linear(re_ast):
    assert compile_regex(re_ast).n_states <= 2 * regex_size(re_ast)


def test_single_role_two_states():
    assert compile_regex(Sym(r())).n_states == 2


def test_test_then_role():
    from zoiq.semantics import eval_concept
    from zoiq.syntax import ExistsAuto, TOP

    nfa = compile_regex(Cat(TestSym(Atomic("A")), Sym(r())))
    i = Interpretation(
        frozenset({"0", "1"}),
        {},
        {"A": frozenset({"0"})},
        {"r": frozenset({("0", "1"), ("1", "0")})},
    )
    # accepts A? r — only node 0 passes the test
    assert eval_concept(i, ExistsAuto(nfa, TOP)) == {"0"}


# ---------------------------------------------------------------------------
# switch_states
# ---------------------------------------------------------------------------


def test_switch_states_identity_language():
    nfa = compile_regex(Cat(Sym(r()), Sym(r("s"))))
    (final,) = nfa.final
    switched = am.switch_states(nfa, nfa.initial, final)
    for length in range(0, 4):
        for word in itertools.product("rs", repeat=length):
            assert accepts_word(nfa, word) == accepts_word(switched, word)


def test_switch_states_self_pair_accepts_empty():
    nfa = compile_regex(Cat(Sym(r()), Sym(r())))
    switched = am.switch_states(nfa, nfa.initial, nfa.initial)
    assert accepts_word(switched, [])
    assert not accepts_word(switched, ["r"])


def test_switch_states_unreachable_pair_empty():
    nfa = compile_regex(Cat(Sym(r()), Sym(r())))
    (final,) = nfa.final
    switched = am.switch_states(nfa, final, nfa.initial)
    for length in range(0, 4):
        assert not any(
            accepts_word(switched, word)
            for word in itertools.product("rs", repeat=length)
        )


def test_switch_states_never_mutates():
    nfa = compile_regex(Sym(r()))
    before = (nfa.initial, nfa.final)
    am.switch_states(nfa, 0, 0)
    assert (nfa.initial, nfa.final) == before


# ---------------------------------------------------------------------------
# Category automata against the structural predicates
# ---------------------------------------------------------------------------


def test_direct_category_on_backlink_forest():
    forest = backlink_forest()
    nfa = am.category_automaton(am.Direct("a", "b"))
    hits = {
        p
        for p in oracles.all_paths(forest, 2)
        if oracles.realises(forest, p, nfa)
    }
    expected = {
        p
        for p in oracles.all_paths(forest, 2)
        if oracles.is_direct(forest, p, "a", "b")
    }
    assert hits == expected


def test_nameless_rejects_named_elements():
    forest = backlink_forest()
    nfa = am.category_automaton(am.Nameless())
    for path in oracles.all_paths(forest, 3):
        got = oracles.realises(forest, path, nfa)
        assert got == oracles.is_nameless(forest, path), path


def test_category_exactness_on_backlink_forest():
    forest = backlink_forest()
    paths = oracles.all_paths(forest, 4)
    for cat, predicate in oracles.category_instances(
        forest, BACKLINK_IND_A, BACKLINK_IND_T
    ):
        nfa = am.category_automaton(cat)
        for path in paths:
            assert oracles.realises(forest, path, nfa) == predicate(forest, path), (
                cat,
                path,
            )


def test_category_exactness_on_random_forests():
    rng = random.Random(7)
    for _ in range(12):
        forest = random_forest(rng)
        paths = oracles.all_paths(forest, 4)
        for cat, predicate in oracles.category_instances(
            forest, frozenset({"a", "b"}), frozenset({"o"})
        ):
            nfa = am.category_automaton(cat)
            for path in paths:
                assert oracles.realises(forest, path, nfa) == predicate(
                    forest, path
                ), (cat, path)


def test_paths_from_named_elements_decompose():
    rng = random.Random(11)
    cases = [(backlink_forest(), BACKLINK_IND_A, BACKLINK_IND_T)]
    cases += [
        (random_forest(rng), frozenset({"a", "b"}), frozenset({"o"}))
        for _ in range(8)
    ]
    for forest, ind_a, ind_t in cases:
        named = set(forest.names.values())
        for path in oracles.all_paths(forest, 5):
            if path[0] in named:
                assert oracles.is_decomposable(
                    forest, path, ind_a, ind_t
                ), (forest.names, path)


def test_named_prefix_paths_are_basic():
    # paths a·rho or a·rho·b with rho nameless are basic
    rng = random.Random(13)
    for _ in range(8):
        forest = random_forest(rng)
        named = set(forest.names.values())
        for path in oracles.all_paths(forest, 4):
            if path[0] not in named:
                continue
            middle_nameless = all(x not in named for x in path[1:-1])
            shape_one = len(path) >= 2 and all(x not in named for x in path[1:])
            shape_two = len(path) >= 2 and middle_nameless and path[-1] in named
            if shape_one or shape_two:
                assert oracles.is_basic(
                    forest, path, frozenset({"a", "b"}), frozenset({"o"})
                ), path


# ---------------------------------------------------------------------------
# Products
# ---------------------------------------------------------------------------


def test_product_with_universal_automaton():
    forest = backlink_forest()
    universal = Nfa(
        1,
        0,
        frozenset({0}),
        frozenset({(0, RoleName("edge"), 0)}),
    )
    base = compile_regex(Star(Sym(r())))
    prod = am.product(base, universal)
    assert prod.n_states <= base.n_states * universal.n_states
    for path in oracles.all_paths(forest, 3):
        assert oracles.realises(forest, path, prod) == oracles.realises(
            forest, path, base
        ), path


def test_product_with_empty_automaton():
    empty = Nfa(1, 0, frozenset(), frozenset())
    base = compile_regex(Sym(r()))
    prod = am.product(base, empty)
    forest = backlink_forest()
    assert not any(
        oracles.realises(forest, p, prod) for p in oracles.all_paths(forest, 3)
    )


def test_product_is_conjunction_of_realisations():
    forest = backlink_forest()
    base = compile_regex(Star(Sym(r())))
    nameless = am.category_automaton(am.Nameless())
    prod = am.product(base, nameless)
    for path in oracles.all_paths(forest, 4):
        expected = oracles.realises(forest, path, base) and oracles.realises(
            forest, path, nameless
        )
        assert oracles.realises(forest, path, prod) == expected, path


# ---------------------------------------------------------------------------
# Guided automata
# ---------------------------------------------------------------------------


def test_guided_word_through_dead_end():
    # a five-state automaton; the four-symbol shortcut word runs from the
    # first state into the dead-end copy of the last
    base = Nfa(5, 0, frozenset({4}), frozenset())
    guided = am.guided_automaton(base, {"o", "oo"}, auto_id="a0")
    q1, q2, q3, q4, q5 = range(5)
    word = [
        vocab.role_name(vocab.d_FAM, "a0", q1, q2),
        vocab.role_name(vocab.rt_FAM, "a0", q2, q3),
        vocab.role_name(vocab.by_FAM, "a0", q3, q4, "o", "oo"),
        vocab.role_name(vocab.in_FAM, "a0", q4, q5, "oo"),
    ]
    assert accepts_word(guided, word, start=q1, end=am.skull_state(base, q5))
    assert not accepts_word(guided, word, start=q1, end=q5)


def test_guided_vocabulary_without_nominals():
    base = Nfa(1, 0, frozenset({0}), frozenset())
    guided = am.guided_automaton(base, frozenset())
    families = {
        vocab.parse_decoration_name(lab.name).family
        for _, lab, _ in guided.transitions
    }
    assert families == {vocab.d_FAM, vocab.i_FAM, vocab.rt_FAM}


def test_skull_states_have_no_exits():
    rng = random.Random(3)
    for _ in range(5):
        n = rng.randint(1, 4)
        base = Nfa(n, 0, frozenset({n - 1}), frozenset())
        guided = am.guided_automaton(base, {"o"})
        for src, _, _ in guided.transitions:
            assert src < n, "transition leaving a dead-end state"


# ---------------------------------------------------------------------------
# rpq evaluation
# ---------------------------------------------------------------------------


def test_rpq_single_edge():
    i = Interpretation(
        frozenset({"0", "1"}), {}, {}, {"r": frozenset({("0", "1")})}
    )
    nfa = compile_regex(Sym(r()))
    (final,) = nfa.final
    assert am.rpq_eval(i, nfa, nfa.initial, final) == {("0", "1")}


def test_rpq_epsilon_like_self_pairs():
    i = Interpretation(
        frozenset({"0", "1"}),
        {},
        {"A": frozenset({"0"})},
        {"r": frozenset({("0", "1")})},
    )
    nfa = compile_regex(TestSym(Atomic("A")))
    (final,) = nfa.final
    assert am.rpq_eval(i, nfa, nfa.initial, final) == {("0", "0")}


def test_rpq_matches_saturation_oracle_on_random_graphs():
    rng = random.Random(5)
    regexes = SAMPLE_REGEXES + [Cat(TestSym(Atomic("A")), Star(Sym(r())))]
    for _ in range(12):
        n = rng.randint(2, 8)
        domain = frozenset(str(k) for k in range(n))
        roles = {
            name: frozenset(
                (d, e)
                for d in domain
                for e in domain
                if rng.random() < 0.25
            )
            for name in ("r", "s")
        }
        concepts = {"A": frozenset(d for d in domain if rng.random() < 0.4)}
        i = Interpretation(domain, {}, concepts, roles)
        for re_ast in regexes:
            nfa = compile_regex(re_ast)
            assert am.rpq_pairs(i, nfa) == oracles.reachable_pairs(i, nfa), re_ast


def test_rpq_on_backlink_forest_two_steps():
    forest = backlink_forest()
    nfa = compile_regex(Cat(Sym(r()), Sym(r())))
    pairs = am.rpq_pairs(forest, nfa)
    expected = {
        (p[0], p[-1])
        for p in oracles.all_paths(forest, 3)
        if oracles.realises(forest, p, nfa)
    }
    assert pairs == expected
    assert ("2", "10") in pairs  # 2 -r-> 1 -r-> 10


def test_dot_export_mentions_labels():
    nfa = compile_regex(Cat(Sym(r()), TestSym(Atomic("A"))))
    dot = am.nfa_to_dot(nfa)
    assert "digraph" in dot and "A?" in dot and "label=\"r\"" in dot
