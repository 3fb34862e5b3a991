import random

from zoiq.parser import parse_kb, parse_query
from zoiq.search import BUDGET, SAT, UNSAT, brute_force_sat, forest_shapes, root_assignments
from zoiq.semantics import SearchBounds, check_model, is_quasi_forest, satisfies_query
from zoiq.syntax import CHILD, ROOT, make_kb

BOUNDS = SearchBounds(max_roots=3, max_branching=2, max_depth=2, max_domain=4)


def test_loop_model_found():
    kb = parse_kb("A(a). A [= exists(r, A).")
    out = brute_force_sat(kb, BOUNDS)
    assert out.status == SAT
    assert out.model.domain == {"0"}
    assert out.model.role_ext("r") == {("0", "0")}


def test_contradiction_unsat():
    kb = parse_kb("A(a). A [= Bot.")
    out = brute_force_sat(kb, BOUNDS)
    assert out.status == UNSAT
    assert out.conclusive


def test_empty_kb_sat_with_one_root():
    kb = parse_kb("")
    out = brute_force_sat(kb, BOUNDS)
    assert out.status == SAT
    assert out.model.domain == {"0"}
    assert out.model.concept_ext(ROOT) == {"0"}


def test_negated_role_conflict():
    kb = parse_kb("r(a, b). not r(a, b).")
    assert brute_force_sat(kb, BOUNDS).status == UNSAT


def test_merging_required_by_nominal():
    kb = parse_kb("A(a). A == {o}.")
    out = brute_force_sat(kb, BOUNDS)
    assert out.status == SAT
    assert out.model.names["a"] == out.model.names["o"]


def test_inequality_respected():
    kb = parse_kb("a ~ b. not a ~ b.")
    assert brute_force_sat(kb, BOUNDS).status == UNSAT


def test_found_models_verify():
    kb = parse_kb(
        """
B(b).
A [= exists(r, B).
B [= or(A, exists(s, Top)).
"""
    )
    out = brute_force_sat(kb, BOUNDS)
    assert out.status == SAT
    assert check_model(out.model, kb)
    assert is_quasi_forest(out.model, kb.ind_a, kb.ind_t).ok


def test_tree_growth_needed():
    # a chain of two fresh successors that cannot fold into the roots
    kb = parse_kb(
        """
A(a).
A [= exists(r, and(B, not(A))).
B [= exists(r, and(not(A), not(B))).
B [= not(A).
"""
    )
    out = brute_force_sat(kb, BOUNDS)
    assert out.status == SAT
    assert len(out.model.domain) >= 2


def test_counting_forces_branching():
    kb = parse_kb("A(a). A [= atleast(2, r, B). B [= not(A).")
    out = brute_force_sat(kb, BOUNDS)
    assert out.status == SAT
    succ = [e for d, e in out.model.role_ext("r") if d == out.model.names["a"]]
    assert len(set(succ)) >= 2


def test_budget_exhaustion_reported():
    kb = parse_kb("A(a). A [= atleast(2, r, A).")
    out = brute_force_sat(kb, SearchBounds(3, 3, 3, 7), budget=3)
    assert out.status == BUDGET
    assert not out.conclusive


def test_countermodel_reject():
    kb = parse_kb("A(a).")
    (query,) = parse_query("A(a)")
    out = brute_force_sat(kb, BOUNDS, reject=lambda m: satisfies_query(m, query))
    assert out.status == UNSAT  # every model satisfies A(a)

    (other,) = parse_query("B(a)")
    out = brute_force_sat(kb, BOUNDS, reject=lambda m: satisfies_query(m, other))
    assert out.status == SAT
    assert not satisfies_query(out.model, other)


def test_childless_pin():
    kb = parse_kb("A(a). A [= exists(r, and(B, not(A))). B [= not(A).")
    unrestricted = brute_force_sat(kb, BOUNDS)
    assert unrestricted.status == SAT
    pinned = brute_force_sat(kb, BOUNDS, childless=frozenset({"a"}))
    if pinned.status == SAT:
        element = pinned.model.names["a"]
        assert not any(d == element for d, _ in pinned.model.role_ext(CHILD))


def test_root_assignments_enumeration():
    kb = parse_kb("A(a). B(b).")
    assignments = list(root_assignments(kb, 3))
    # two individuals: separate or merged
    assert {len(set(n.values())) for n in assignments} == {1, 2}
    assert assignments[0]["a"] != assignments[0]["b"]  # distinct first


def test_forest_shapes_canonical():
    shapes = list(forest_shapes(1, 3, SearchBounds(3, 2, 2, 4)))
    as_sets = [tuple(s) for s in shapes]
    assert len(as_sets) == len(set(as_sets))
    assert ["0", "00", "000"] in [list(s) for s in shapes]
    assert ["0", "00", "01"] in [list(s) for s in shapes]
    # children are numbered contiguously
    assert all("01" not in s or "00" in s for s in shapes)


def test_deterministic_least_model():
    kb = parse_kb("A(a). exists(r, A) [= B.")
    first = brute_force_sat(kb, BOUNDS)
    second = brute_force_sat(kb, BOUNDS)
    assert first.model.equal_data(second.model)
    # least model leaves optional bits empty
    assert first.model.role_ext("r") == frozenset()
    assert first.model.concept_ext("B") == frozenset()


def test_random_kbs_sat_models_verify():
    rng = random.Random(23)
    concepts = ["A", "B", "C"]
    roles = ["r", "s"]
    for _ in range(25):
        lines = []
        for _ in range(rng.randint(1, 3)):
            ind = rng.choice(["a", "b"])
            lines.append(f"{rng.choice(concepts)}({ind}).")
        for _ in range(rng.randint(1, 3)):
            left = rng.choice(concepts)
            kind = rng.random()
            if kind < 0.4:
                lines.append(f"{left} [= exists({rng.choice(roles)}, {rng.choice(concepts)}).")
            elif kind < 0.6:
                lines.append(f"{left} [= not({rng.choice(concepts)}).")
            elif kind < 0.8:
                lines.append(f"{left} [= and({rng.choice(concepts)}, {rng.choice(concepts)}).")
            else:
                lines.append(f"{left} [= atleast(2, {rng.choice(roles)}, Top).")
        kb = parse_kb("\n".join(lines))
        out = brute_force_sat(kb, BOUNDS, budget=150_000)
        if out.status == SAT:
            assert check_model(out.model, kb)
            assert is_quasi_forest(out.model, kb.ind_a, kb.ind_t).ok
