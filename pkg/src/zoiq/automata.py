"""NFA algebra: state switching, path-category automata, products, guided
automata, and regular-path evaluation over finite interpretations."""

from __future__ import annotations

from dataclasses import dataclass

from . import vocab
from .regex import compile_regex  # re-exported for module users
from .semantics import Evaluator, Interpretation, Pair, strict_descendant_test
from .syntax import (
    Atomic,
    Concept,
    EDGE,
    Label,
    Nfa,
    Nominal,
    Not,
    ROOT,
    RoleAnd,
    RoleName,
    SimpleRole,
    Test,
    inverse,
)

__all__ = [
    "compile_regex",
    "switch_states",
    "reverse_between",
    "category_automaton",
    "product",
    "guided_automaton",
    "GuidedSymbol",
    "rpq_eval",
    "rpq_pairs",
    "Direct",
    "Inner",
    "Roundtrip",
    "InOut",
    "OutIn",
    "NominalInner",
    "Bypass",
    "Nameless",
    "Outer",
    "nfa_to_dot",
]


def connected_state_pairs(a: Nfa) -> frozenset[tuple[int, int]]:
    """State pairs joined by at least one transition step; between any other
    pair the switched automaton accepts no word with a role symbol."""
    succ: dict[int, set[int]] = {}
    for p, _, q in a.transitions:
        succ.setdefault(p, set()).add(q)
    out = set()
    for start in range(a.n_states):
        seen: set[int] = set()
        todo = list(succ.get(start, ()))
        while todo:
            q = todo.pop()
            if q in seen:
                continue
            seen.add(q)
            todo.extend(succ.get(q, ()))
        out.update((start, q) for q in seen)
    return frozenset(out)


def switch_states(a: Nfa, q: int, qp: int) -> Nfa:
    """View of ``a`` with initial state ``q`` and the single final state ``qp``."""
    if not (0 <= q < a.n_states and 0 <= qp < a.n_states):
        raise ValueError(f"states ({q}, {qp}) out of range")
    return Nfa(a.n_states, q, frozenset({qp}), a.transitions)


def reverse_between(a: Nfa, q: int, qp: int) -> Nfa:
    """Automaton accepting the reversals of the words of ``a`` between ``q``
    and ``qp``; role labels are inverted, tests stay at their nodes."""
    transitions = set()
    for p, lab, r in a.transitions:
        if isinstance(lab, Test):
            transitions.add((r, lab, p))
        else:
            transitions.add((r, inverse(lab), p))
    return Nfa(a.n_states, qp, frozenset({q}), frozenset(transitions))


# ---------------------------------------------------------------------------
# Path categories
# ---------------------------------------------------------------------------


class PathCategory:
    __slots__ = ()


@dataclass(frozen=True)
class Direct(PathCategory):
    a: str
    b: str


@dataclass(frozen=True)
class Inner(PathCategory):
    a: str


@dataclass(frozen=True)
class Roundtrip(PathCategory):
    a: str


@dataclass(frozen=True)
class InOut(PathCategory):
    a: str
    o: str


@dataclass(frozen=True)
class OutIn(PathCategory):
    a: str
    o: str


@dataclass(frozen=True)
class NominalInner(PathCategory):
    a: str
    o: str


@dataclass(frozen=True)
class Bypass(PathCategory):
    a: str
    o: str
    oo: str


@dataclass(frozen=True)
class Nameless(PathCategory):
    pass


@dataclass(frozen=True)
class Outer(PathCategory):
    pass


_EDGE = RoleName(EDGE)
_IS_ROOT = Test(Atomic(ROOT))
_NOT_ROOT = Test(Not(Atomic(ROOT)))


def _nominal(x: str) -> Test:
    return Test(Nominal(x))


def _desc(x: str) -> Test:
    return Test(strict_descendant_test(x))


def _chain(transitions: list[tuple[int, Label, int]], final: set[int]) -> Nfa:
    n = 1 + max(max(p, q) for p, _, q in transitions)
    return Nfa(n, 0, frozenset(final), frozenset(transitions))


def _walk(first: Test, middle: Test, last: Test | None) -> Nfa:
    """Template ``first? (edge middle?)+ [edge last?]``: start at a tested node,
    walk tested middle nodes, optionally finish on a differently tested node."""
    transitions: list[tuple[int, Label, int]] = [
        (0, first, 1),
        (1, _EDGE, 2),
        (2, middle, 3),
        (3, _EDGE, 2),
    ]
    if last is None:
        return _chain(transitions, {3})
    transitions += [(3, _EDGE, 4), (4, last, 5)]
    return _chain(transitions, {5})


def category_automaton(cat: PathCategory) -> Nfa:
    """NFA over ``edge``/``child`` and node tests realising exactly the paths
    of the given category in every quasi-forest."""
    if isinstance(cat, Direct):
        return _chain([(0, _nominal(cat.a), 1), (1, _EDGE, 2), (2, _nominal(cat.b), 3)], {3})
    if isinstance(cat, Inner):
        return _walk(_nominal(cat.a), _desc(cat.a), None)
    if isinstance(cat, Roundtrip):
        return _walk(_nominal(cat.a), _desc(cat.a), _nominal(cat.a))
    if isinstance(cat, InOut):
        return _walk(_nominal(cat.a), _desc(cat.a), _nominal(cat.o))
    if isinstance(cat, OutIn):
        return _walk(_nominal(cat.o), _desc(cat.a), _nominal(cat.a))
    if isinstance(cat, NominalInner):
        return _walk(_nominal(cat.o), _desc(cat.a), None)
    if isinstance(cat, Bypass):
        return _walk(_nominal(cat.o), _desc(cat.a), _nominal(cat.oo))
    if isinstance(cat, Nameless):
        return _chain([(0, _NOT_ROOT, 1), (1, _EDGE, 0)], {1})
    if isinstance(cat, Outer):
        return _chain(
            [(0, _NOT_ROOT, 1), (1, _EDGE, 0), (1, _EDGE, 2), (2, _IS_ROOT, 3)], {3}
        )
    raise TypeError(f"not a path category: {cat!r}")


def direct_to_any_root(a: str) -> Nfa:
    """Variant of the direct category with an unnamed target: any single edge
    from ``a`` to a root.  In quasi-forests every root is named, so this is the
    union of the direct categories over all names."""
    return _chain([(0, _nominal(a), 1), (1, _EDGE, 2), (2, _IS_ROOT, 3)], {3})


# ---------------------------------------------------------------------------
# Products
# ---------------------------------------------------------------------------


def product(b: Nfa, t: Nfa) -> Nfa:
    """Synchronous product: realised by exactly the paths realising both
    operands.  Role steps synchronise through role intersection; tests of
    either side interleave freely within a node's test block."""

    def idx(p: int, q: int) -> int:
        return p * t.n_states + q

    transitions: set[tuple[int, Label, int]] = set()
    role_steps_b = [(p, lab, p2) for p, lab, p2 in b.transitions if not isinstance(lab, Test)]
    role_steps_t = [(q, lab, q2) for q, lab, q2 in t.transitions if not isinstance(lab, Test)]
    for p, lab, p2 in b.transitions:
        if isinstance(lab, Test):
            for q in range(t.n_states):
                transitions.add((idx(p, q), lab, idx(p2, q)))
    for q, lab, q2 in t.transitions:
        if isinstance(lab, Test):
            for p in range(b.n_states):
                transitions.add((idx(p, q), lab, idx(p, q2)))
    for p, lab_b, p2 in role_steps_b:
        for q, lab_t, q2 in role_steps_t:
            transitions.add((idx(p, q), RoleAnd(lab_b, lab_t), idx(p2, q2)))
    final = frozenset(idx(p, q) for p in b.final for q in t.final)
    return Nfa(b.n_states * t.n_states, idx(b.initial, t.initial), final, frozenset(transitions))


# ---------------------------------------------------------------------------
# Guided automata
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GuidedSymbol:
    """Decoration-role alphabet symbol of a guided automaton."""

    family: str
    role: str
    q: int
    qp: int
    nominals: tuple[str, ...]
    skull: bool

    def __post_init__(self) -> None:
        assert self.skull == (self.family in vocab.SKULL_ROLE_FAMILIES)


def guided_alphabet(auto_id: str, a: Nfa, ind_t) -> list[GuidedSymbol]:
    out = []
    states = range(a.n_states)
    nominals = sorted(ind_t)
    for q in states:
        for qp in states:
            out.append(GuidedSymbol(vocab.d_FAM, vocab.role_name(vocab.d_FAM, auto_id, q, qp), q, qp, (), False))
            out.append(GuidedSymbol(vocab.i_FAM, vocab.role_name(vocab.i_FAM, auto_id, q, qp), q, qp, (), True))
            out.append(GuidedSymbol(vocab.rt_FAM, vocab.role_name(vocab.rt_FAM, auto_id, q, qp), q, qp, (), False))
            for o in nominals:
                out.append(GuidedSymbol(vocab.io_FAM, vocab.role_name(vocab.io_FAM, auto_id, q, qp, o), q, qp, (o,), False))
                out.append(GuidedSymbol(vocab.oi_FAM, vocab.role_name(vocab.oi_FAM, auto_id, q, qp, o), q, qp, (o,), False))
                out.append(GuidedSymbol(vocab.in_FAM, vocab.role_name(vocab.in_FAM, auto_id, q, qp, o), q, qp, (o,), True))
                for oo in nominals:
                    out.append(GuidedSymbol(vocab.by_FAM, vocab.role_name(vocab.by_FAM, auto_id, q, qp, o, oo), q, qp, (o, oo), False))
    return out


def skull_state(a: Nfa, q: int) -> int:
    """Dead-end copy of state ``q`` inside the guided automaton of ``a``."""
    return a.n_states + q


def guided_automaton(a: Nfa, ind_t, auto_id: str = "a0") -> Nfa:
    """NFA over the decoration roles of ``a`` traversing only clearings.

    States are those of ``a`` plus dead-end copies; a symbol carrying the state
    pair (q, q') moves from q to q', or to the dead-end copy of q' for the
    subtree-entering shapes.  Dead-end states have no outgoing transitions.

    The automaton's own test transitions are carried over verbatim: a run may
    advance by tests at the current root without consuming a path step, which
    is how single-element paths satisfy automaton concepts.
    """
    transitions: set[tuple[int, Label, int]] = set()
    for sym in guided_alphabet(auto_id, a, ind_t):
        target = skull_state(a, sym.qp) if sym.skull else sym.qp
        transitions.add((sym.q, RoleName(sym.role), target))
    for p, lab, q in a.transitions:
        if isinstance(lab, Test):
            transitions.add((p, lab, q))
    return Nfa(2 * a.n_states, a.initial, a.final, frozenset(transitions))


# ---------------------------------------------------------------------------
# Regular path queries
# ---------------------------------------------------------------------------


def rpq_pairs(g: Interpretation, a: Nfa, evaluator: Evaluator | None = None) -> frozenset[Pair]:
    ev = evaluator or Evaluator(g)
    return ev.rpq_pairs(a)


def rpq_eval(
    g: Interpretation, a: Nfa, q: int, qp: int, evaluator: Evaluator | None = None
) -> frozenset[Pair]:
    """Pairs (d, e) of ``g`` joined by a path realising ``a`` between the
    given states; single-element paths count when a pure test word is accepted."""
    return rpq_pairs(g, switch_states(a, q, qp), evaluator)


# ---------------------------------------------------------------------------
# Debug export
# ---------------------------------------------------------------------------


def _label_text(lab: Label) -> str:
    from .parser import concept_text, role_text

    if isinstance(lab, Test):
        return f"{concept_text(lab.concept)}?"
    return role_text(lab)


def nfa_to_dot(a: Nfa, name: str = "nfa") -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    for q in range(a.n_states):
        shape = "doublecircle" if q in a.final else "circle"
        mark = " (start)" if q == a.initial else ""
        lines.append(f'  q{q} [shape={shape}, label="q{q}{mark}"];')
    for p, lab, q in sorted(a.transitions, key=repr):
        text = _label_text(lab).replace('"', "'")
        lines.append(f'  q{p} -> q{q} [label="{text}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
