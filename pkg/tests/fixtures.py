"""Shared model fixtures: small quasi-forests exercised throughout the suite."""

from __future__ import annotations

import random

from zoiq.semantics import Interpretation, quasi_forest


def random_forest(
    rng: random.Random,
    max_nodes: int = 10,
    concept_names=("A", "B"),
    role_names=("r", "s"),
    edge_rate: float = 0.18,
) -> Interpretation:
    """Valid quasi-forest over names a, b and nominal o with random legal
    role pairs and random concept extensions."""
    elements = ["0", "1", "2"][: rng.randint(1, 3)]
    while len(elements) < rng.randint(3, max_nodes):
        parent = rng.choice(elements)
        child = parent + str(
            sum(1 for e in elements if e.startswith(parent) and len(e) == len(parent) + 1)
        )
        if len(child) > 4 or child[-1] > "2":
            continue
        elements.append(child)
    roots = [e for e in elements if len(e) == 1]
    mapping = {}
    pool = ["a", "b", "o"]
    rng.shuffle(pool)
    for idx, root in enumerate(roots):
        mapping[pool[idx % len(pool)]] = root
    for name in pool:
        mapping.setdefault(name, rng.choice(roots))
    nominal_roots = {mapping["o"]}
    role_exts = {}
    for role in role_names:
        pairs = set()
        for d in elements:
            for e in elements:
                legal = (
                    (len(d) == 1 and len(e) == 1)
                    or d in nominal_roots
                    or e in nominal_roots
                    or d == e
                    or (len(e) == len(d) + 1 and e.startswith(d))
                    or (len(d) == len(e) + 1 and d.startswith(e))
                )
                if legal and rng.random() < edge_rate:
                    pairs.add((d, e))
        role_exts[role] = frozenset(pairs)
    concept_exts = {
        name: frozenset(e for e in elements if rng.random() < 0.4)
        for name in concept_names
    }
    return quasi_forest(elements, mapping, concept_exts, role_exts)


def backlink_forest() -> Interpretation:
    """Three-bounded quasi-forest with four roots, two plain names (a, b),
    three nominals (o, oo, vo), self-loops, and backlinks (1,001), (2000,1),
    (3,20)."""
    elements = [
        "0", "00", "000", "001", "0010",
        "1", "10", "100", "1000", "1001",
        "2", "20", "200", "2000", "2001", "2002",
        "3",
    ]
    names = {"a": "0", "b": "2", "o": "1", "oo": "3", "vo": "2"}
    r = {
        ("000", "00"), ("00", "001"),
        ("1", "10"), ("10", "100"), ("100", "1000"), ("100", "1001"),
        ("2", "20"), ("200", "20"), ("200", "2000"), ("200", "2001"),
        ("200", "2002"),
        ("20", "20"),
        ("1", "3"), ("2", "1"), ("2", "3"),
        ("3", "20"), ("1", "001"),
    }
    s = {
        ("001", "0010"), ("0", "00"), ("10", "100"),
        ("20", "200"), ("100", "100"), ("3", "2"), ("1", "1"), ("2000", "1"),
    }
    return quasi_forest(
        elements,
        names,
        {},
        {"r": frozenset(r), "s": frozenset(s)},
        branching=3,
    )


BACKLINK_IND_A = frozenset({"a", "b"})
BACKLINK_IND_T = frozenset({"o", "oo", "vo"})


def counting_forest() -> Interpretation:
    """Forest with three roots a, o, b (o nominal) and a role r whose
    successor profile buckets to the nine documented labels at n = 2."""
    elements = ["0", "00", "000", "01", "1", "10", "11", "2", "20", "200", "21"]
    names = {"a": "0", "o": "1", "b": "2"}
    r = {
        ("0", "00"),
        ("1", "0"), ("1", "2"), ("2", "1"),
        ("1", "10"), ("1", "11"),
        ("1", "000"),
        ("1", "20"), ("1", "21"), ("1", "200"),
    }
    return quasi_forest(elements, names, {}, {"r": frozenset(r)}, branching=3)


COUNTING_IND_A = frozenset({"a", "b"})
COUNTING_IND_T = frozenset({"o"})
