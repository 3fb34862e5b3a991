"""Acceptance suite: one test per exit criterion, each printing a verdict
line.  Run with ``pytest tests/test_acceptance.py -s`` to see the lines."""

import random
import time

import pytest

import oracles
from fixtures import (
    BACKLINK_IND_A,
    BACKLINK_IND_T,
    COUNTING_IND_T,
    backlink_forest,
    counting_forest,
    random_forest,
)
from generators import random_toy_kb
from zoiq import automata as am
from zoiq import decorations as dec
from zoiq import vocab
from zoiq.consistency import summary_to_interp
from zoiq.engine import EngineConfig, check_qf_sat, check_qf_sat_data, entails_rooted_ucq, precompile_tbox
from zoiq.normalform import normalize_kb
from zoiq.parser import parse_kb, parse_query
from zoiq.regex import Cat, Star, Sym, TestSym, compile_regex
from zoiq.search import BUDGET, SAT, UNSAT, brute_force_sat
from zoiq.semantics import (
    Evaluator,
    Interpretation,
    SearchBounds,
    clearing_of,
    is_quasi_forest,
    quasi_forest,
    satisfies_query,
)
from zoiq.syntax import And, Atomic, EqAssert, ExistsAuto, ROOT, RoleName, TOP, fragment_of, make_kb

BRUTE_BOUNDS = SearchBounds(max_roots=3, max_branching=2, max_depth=2, max_domain=8)


def report(criterion: str, detail: str) -> None:
    print(f"criterion {criterion}: pass — {detail}")


def forest_corpus(count: int, max_nodes: int = 12, seed: int = 2024):
    rng = random.Random(seed)
    return [
        random_forest(rng, max_nodes=max_nodes, edge_rate=0.10) for _ in range(count)
    ]


def test_c1_oracle_equivalence_on_toy_corpus():
    config = EngineConfig(wall_clock_limit=6.0)
    agreements = {"sat": 0, "unsat": 0}
    inconclusive = 0
    disagreements = []
    started = time.monotonic()
    total = 0
    for seed in (77, 1, 5, 9):
        rng = random.Random(seed)
        for _ in range(50):
            total += 1
            kb = random_toy_kb(rng)
            verdict = check_qf_sat(kb, config)
            brute = brute_force_sat(kb, BRUTE_BOUNDS, budget=400_000)
            if verdict.status == "unknown" or brute.status == BUDGET:
                inconclusive += 1
            elif brute.status == SAT and verdict.status == "sat":
                agreements["sat"] += 1
            elif brute.status == UNSAT and verdict.status == "unsat":
                agreements["unsat"] += 1
            else:
                disagreements.append((seed, kb))
    elapsed = time.monotonic() - started
    assert total >= 200
    assert not disagreements, f"{len(disagreements)} disagreements"
    assert elapsed <= 600, f"corpus took {elapsed:.0f}s"
    report(
        "1",
        f"{total} knowledge bases, {agreements['sat']} sat + {agreements['unsat']} unsat "
        f"agreements, {inconclusive} inconclusive, 0 disagreements, {elapsed:.0f}s",
    )


def test_c2_every_named_path_decomposes():
    forests = forest_corpus(50)
    checked = 0
    for forest in forests:
        named = set(forest.names.values())
        for path in oracles.all_paths(forest, 6):
            if path[0] not in named:
                continue
            checked += 1
            assert oracles.is_decomposable(
                forest, path, frozenset({"a", "b"}), frozenset({"o"})
            ), (forest.names, path)
    report("2", f"{checked} paths across 50 forests all decompose")


def test_c3_category_automata_exact():
    forests = forest_corpus(50)
    mismatches = 0
    checked = 0
    for forest in forests:
        paths = oracles.all_paths(forest, 5)
        for cat, predicate in oracles.category_instances(
            forest, frozenset({"a", "b"}), frozenset({"o"})
        ):
            nfa = am.category_automaton(cat)
            for path in paths:
                checked += 1
                if oracles.realises(forest, path, nfa) != predicate(forest, path):
                    mismatches += 1
    assert mismatches == 0
    report("3", f"{checked} path/category checks, 0 mismatches")


AUTOMATA = [
    ("a0", compile_regex(Sym(RoleName("r")))),
    ("a1", compile_regex(Cat(Sym(RoleName("r")), Sym(RoleName("s"))))),
    ("a2", compile_regex(Star(Sym(RoleName("r"))))),
    ("a3", compile_regex(Cat(TestSym(Atomic("A")), Sym(RoleName("s"))))),
]


def test_c4_guided_automaton_equivalence():
    rng = random.Random(431)
    root = Atomic(ROOT)
    ind_t = frozenset({"o"})
    checked = 0
    for _ in range(12):
        forest = random_forest(rng, max_nodes=9)
        for auto_id, nfa in AUTOMATA[:3]:
            decorated = dec.decorate(forest, [(auto_id, nfa)], [], ind_t)
            ev = Evaluator(decorated)
            guided = am.guided_automaton(nfa, ind_t, auto_id)
            for q in range(nfa.n_states):
                for qp in range(nfa.n_states):
                    semantic = ev.eval(
                        And(root, ExistsAuto(am.switch_states(nfa, q, qp), TOP))
                    )
                    plain = ev.eval(
                        And(root, ExistsAuto(am.switch_states(guided, q, qp), TOP))
                    )
                    dead = ev.eval(
                        And(
                            root,
                            ExistsAuto(
                                am.switch_states(guided, q, am.skull_state(nfa, qp)), TOP
                            ),
                        )
                    )
                    assert semantic == plain | dead, (forest.names, auto_id, q, qp)
                    checked += 1
    report("4", f"{checked} state pairs on decorated forests, 0 mismatches")


def test_c5_descriptions_match_conditions():
    rng = random.Random(997)
    ind_t = frozenset({"o"})
    checked = 0
    from zoiq.syntax import substitute_ghost

    for _ in range(10):
        forest = random_forest(rng, max_nodes=9)
        ev = Evaluator(forest)
        for auto_id, nfa in AUTOMATA[:2]:
            for item in dec.decoration_concepts(auto_id, nfa, ind_t):
                for a in sorted(forest.names):
                    condition = dec.cond_check(forest, nfa, item, a, ev)
                    description = substitute_ghost(dec.desc_concept(nfa, item), a)
                    assert condition == (forest.names[a] in ev.eval(description))
                    checked += 1
        n = 2
        for a in sorted(forest.names):
            cl, ch, per = dec.counting_profile(forest, "r", a, ind_t)
            for t in dec.all_thresholds(n):
                for actual, concept in (
                    (cl, dec.desc_clearing_count("r", n, t)),
                    (ch, dec.desc_child_count("r", n, t)),
                    (per["o"], dec.desc_descendant_count("r", "o", n, t)),
                ):
                    described = substitute_ghost(concept, a)
                    assert (forest.names[a] in ev.eval(described)) == (
                        dec.bucket(actual, n) == t
                    )
                    checked += 1
    report("5", f"{checked} description/condition checks, 0 mismatches")


def test_c6_worked_scenarios_reproduce():
    forest = backlink_forest()
    check = is_quasi_forest(forest, BACKLINK_IND_A, BACKLINK_IND_T, branching=3)
    assert check.ok
    for pair in (("1", "001"), ("2000", "1"), ("3", "20")):
        assert pair in forest.role_ext("r") | forest.role_ext("s")

    from zoiq.syntax import Nfa

    base = Nfa(5, 0, frozenset({4}), frozenset())
    guided = am.guided_automaton(base, {"o", "oo"}, auto_id="a0")
    word = [
        vocab.role_name(vocab.d_FAM, "a0", 0, 1),
        vocab.role_name(vocab.rt_FAM, "a0", 1, 2),
        vocab.role_name(vocab.by_FAM, "a0", 2, 3, "o", "oo"),
        vocab.role_name(vocab.in_FAM, "a0", 3, 4, "oo"),
    ]
    states = {0}
    for symbol in word:
        states = {
            q
            for p in states
            for (src, lab, q) in guided.transitions
            if src == p and lab == RoleName(symbol)
        }
    assert am.skull_state(base, 4) in states
    assert 4 not in states

    counts = counting_forest()
    expected = {
        "a": ("eq0", "eq1", "eq1"),
        "o": ("eq2", "eq2", "eq2"),
        "b": ("eq1", "eq0", "ge3"),
    }
    for name, (t_cl, t_ch, t_des) in expected.items():
        cl, ch, per = dec.counting_profile(counts, "r", name, COUNTING_IND_T)
        assert dec.bucket(cl, 2).text(2) == t_cl
        assert dec.bucket(ch, 2).text(2) == t_ch
        assert dec.bucket(per["o"], 2).text(2) == t_des

    clearing = quasi_forest(
        ["0"],
        {"a": "0"},
        {
            vocab.clearing_count_name("r", 3, 1): frozenset({"0"}),
            vocab.child_count_name("r", 3, None): frozenset({"0"}),
        },
        {"r": frozenset()},
    )
    assert dec.virtual_sat_count(clearing, "0", "r", 3, frozenset())
    report(
        "6",
        "backlink forest validates 3-bounded; guided word reaches the dead end; "
        "profiles bucket to the nine labels; 1 + (3+1) >= 3 holds",
    )


def test_c7_data_complexity_split():
    tbox = parse_kb("A [= exists(r, B). B [= not(A).").tbox
    started = time.monotonic()
    pre = precompile_tbox(tbox)
    precompile_seconds = time.monotonic() - started
    assert pre.materialized
    baseline = pre.subtree_searches

    individuals = ["a", "b", "c", "d"]
    timings = []
    for size in (2, 4, 8, 16):
        lines = []
        for k in range(size):
            owner = individuals[k % 4]
            other = individuals[(k + 1) % 4]
            lines.append(f"A({owner})." if k % 2 == 0 else f"r({owner}, {other}).")
        abox = parse_kb("\n".join(lines)).abox
        t0 = time.perf_counter()
        verdict = check_qf_sat_data(abox, pre)
        timings.append(time.perf_counter() - t0)
        assert verdict.status == "sat"
    assert pre.subtree_searches == baseline, "oracle ran during the data phase"
    for before, after in zip(timings, timings[1:]):
        assert after <= max(0.4, before * 30), timings
    millis = [round(t * 1000) for t in timings]
    report(
        "7",
        f"precompiled in {precompile_seconds:.2f}s; per-assertion-set times "
        f"{millis} ms over sizes 2/4/8/16 with zero subtree searches",
    )


def _random_ziq_pair(rng: random.Random):
    while True:
        kb = random_toy_kb(rng)
        if fragment_of(kb) != "ZIQ":
            continue
        atoms = []
        for _ in range(rng.randint(1, 3)):
            if rng.random() < 0.5:
                atoms.append(f"{rng.choice(['A', 'B', 'C'])}(a)")
            else:
                atoms.append(f"{rng.choice(['r', 's'])}(a, ?x{rng.randint(0, 1)})")
        queries = parse_query(" & ".join(atoms))
        if all(q.is_rooted() for q in queries):
            return kb, queries


def test_c8_rooted_entailment_agrees_with_countermodels():
    rng = random.Random(314)
    config = EngineConfig(wall_clock_limit=8.0, max_segment_nodes=4)
    pairs = 0
    conclusive = 0
    certificates = 0
    while pairs < 50:
        kb, queries = _random_ziq_pair(rng)
        pairs += 1
        verdict = entails_rooted_ucq(kb, queries, config)
        base = make_kb(kb.abox + (EqAssert("a", "a"),), kb.tbox)
        counter = brute_force_sat(
            base,
            BRUTE_BOUNDS,
            reject=lambda m: any(satisfies_query(m, q) for q in queries),
            budget=400_000,
        )
        if verdict.entailed is None or counter.status == BUDGET:
            continue
        conclusive += 1
        assert verdict.entailed == (counter.status != SAT), (kb, queries)
        if verdict.entailed is False:
            certificates += 1
            interp = summary_to_interp(verdict.summary)
            assert not any(satisfies_query(interp, q) for q in queries)
    assert conclusive >= 30
    report(
        "8",
        f"50 knowledge-base/query pairs, {conclusive} conclusive agreements, "
        f"{certificates} countermodel certificates re-verified",
    )


def test_c9_rpq_matches_path_enumeration():
    rng = random.Random(88)
    checked = 0
    for _ in range(12):
        n = rng.randint(2, 8)
        domain = frozenset(str(k) for k in range(n))
        roles = {
            name: frozenset(
                (d, e) for d in domain for e in domain if rng.random() < 0.2
            )
            for name in ("r", "s")
        }
        concepts = {"A": frozenset(d for d in domain if rng.random() < 0.4)}
        interp = Interpretation(domain, {}, concepts, roles)
        for _, nfa in AUTOMATA:
            assert am.rpq_pairs(interp, nfa) == oracles.reachable_pairs(interp, nfa)
            checked += 1
    for forest in forest_corpus(6, max_nodes=8, seed=55):
        for _, nfa in AUTOMATA:
            assert am.rpq_pairs(forest, nfa) == oracles.reachable_pairs(forest, nfa)
            checked += 1
    report("9", f"{checked} automaton/interpretation pairs, 0 mismatches")
