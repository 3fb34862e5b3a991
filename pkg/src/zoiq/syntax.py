"""Core ASTs: simple roles, concepts, automata with tests, axioms, knowledge bases.

All nodes are frozen dataclasses, hashable and safe to share. Individual,
concept and role names live in disjoint namespaces and are plain strings;
names starting with ``#`` are generated (machine vocabulary) and are never
produced by the user-facing parser.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

GEN_PREFIX = "#"
GHOST = "#ghost"

# Reserved structural vocabulary of quasi-forests.
ROOT = "Root"
CHILD = "child"
EDGE = "edge"
ID = "id"

RESERVED_ROLES = frozenset({CHILD, EDGE, ID})
RESERVED_CONCEPTS = frozenset({ROOT})


def is_generated(name: str) -> bool:
    return name.startswith(GEN_PREFIX)


# ---------------------------------------------------------------------------
# Simple roles
# ---------------------------------------------------------------------------


class SimpleRole:
    """Base class for simple-role expressions (boolean combinations of names)."""

    __slots__ = ()


@dataclass(frozen=True)
class RoleName(SimpleRole):
    name: str


@dataclass(frozen=True)
class Inverse(SimpleRole):
    arg: SimpleRole


@dataclass(frozen=True)
class RoleAnd(SimpleRole):
    left: SimpleRole
    right: SimpleRole


@dataclass(frozen=True)
class RoleOr(SimpleRole):
    left: SimpleRole
    right: SimpleRole


@dataclass(frozen=True)
class RoleDiff(SimpleRole):
    left: SimpleRole
    right: SimpleRole


def inverse(role: SimpleRole) -> SimpleRole:
    """Inverse with double-inverse collapsing."""
    if isinstance(role, Inverse):
        return role.arg
    return Inverse(role)


def role_names_of_role(role: SimpleRole) -> frozenset[str]:
    if isinstance(role, RoleName):
        return frozenset({role.name})
    if isinstance(role, Inverse):
        return role_names_of_role(role.arg)
    if isinstance(role, (RoleAnd, RoleOr, RoleDiff)):
        return role_names_of_role(role.left) | role_names_of_role(role.right)
    raise TypeError(f"not a simple role: {role!r}")


# ---------------------------------------------------------------------------
# Concepts and automata
# ---------------------------------------------------------------------------


class Concept:
    """Base class for concept expressions."""

    __slots__ = ()


@dataclass(frozen=True)
class Bottom(Concept):
    pass


@dataclass(frozen=True)
class Atomic(Concept):
    name: str


@dataclass(frozen=True)
class Nominal(Concept):
    individual: str


@dataclass(frozen=True)
class Not(Concept):
    arg: Concept


@dataclass(frozen=True)
class And(Concept):
    left: Concept
    right: Concept


@dataclass(frozen=True)
class Exists(Concept):
    role: SimpleRole
    filler: Concept


@dataclass(frozen=True)
class AtLeast(Concept):
    count: int
    role: SimpleRole
    filler: Concept


@dataclass(frozen=True)
class SelfLoop(Concept):
    role: SimpleRole


@dataclass(frozen=True)
class Test:
    """Automaton alphabet symbol testing a concept at the current node."""

    __test__ = False  # not a pytest class

    concept: Concept


Label = Union[SimpleRole, Test]


@dataclass(frozen=True)
class Nfa:
    """NFA over simple roles and concept tests.

    States are the integers ``0..n_states-1``.  ``source`` optionally keeps the
    regular expression the automaton was compiled from, so it can be printed
    back; it does not take part in equality.
    """

    n_states: int
    initial: int
    final: frozenset[int]
    transitions: frozenset[tuple[int, Label, int]]
    source: object = field(default=None, compare=False, hash=False)

    def __post_init__(self) -> None:
        assert 0 <= self.initial < self.n_states
        assert all(0 <= q < self.n_states for q in self.final)
        assert all(
            0 <= p < self.n_states and 0 <= q < self.n_states
            for p, _, q in self.transitions
        )

    def labels(self) -> Iterator[Label]:
        for _, lab, _ in self.transitions:
            yield lab


@dataclass(frozen=True)
class ExistsAuto(Concept):
    nfa: Nfa
    filler: Concept


TOP = Not(Bottom())
BOT = Bottom()


def and_all(concepts: list[Concept]) -> Concept:
    if not concepts:
        return TOP
    out = concepts[0]
    for c in concepts[1:]:
        out = And(out, c)
    return out


def or_(left: Concept, right: Concept) -> Concept:
    return Not(And(Not(left), Not(right)))


def or_all(concepts: list[Concept]) -> Concept:
    if not concepts:
        return BOT
    out = concepts[0]
    for c in concepts[1:]:
        out = or_(out, c)
    return out


def at_most(n: int, role: SimpleRole, filler: Concept) -> Concept:
    return Not(AtLeast(n + 1, role, filler))


def exactly(n: int, role: SimpleRole, filler: Concept) -> Concept:
    return And(AtLeast(n, role, filler), at_most(n, role, filler))


def forall_role(role: SimpleRole, filler: Concept) -> Concept:
    return Not(Exists(role, Not(filler)))


def forall_auto(nfa: Nfa, filler: Concept) -> Concept:
    return Not(ExistsAuto(nfa, Not(filler)))


def iff(left: Concept, right: Concept) -> Concept:
    return or_(And(left, right), And(Not(left), Not(right)))


# ---------------------------------------------------------------------------
# Axioms and knowledge bases
# ---------------------------------------------------------------------------


class Axiom:
    __slots__ = ()


@dataclass(frozen=True)
class Gci(Axiom):
    sub: Concept
    sup: Concept


@dataclass(frozen=True)
class ConceptEq(Axiom):
    left: Concept
    right: Concept


@dataclass(frozen=True)
class RoleIncl(Axiom):
    sub: SimpleRole
    sup: SimpleRole


@dataclass(frozen=True)
class RoleEq(Axiom):
    name: str
    role: SimpleRole


@dataclass(frozen=True)
class ConceptAssert(Axiom):
    concept_name: str
    individual: str


@dataclass(frozen=True)
class RoleAssert(Axiom):
    role_name: str
    subject: str
    object: str


@dataclass(frozen=True)
class EqAssert(Axiom):
    left: str
    right: str


@dataclass(frozen=True)
class NegAssert(Axiom):
    inner: Axiom

    def __post_init__(self) -> None:
        if not isinstance(self.inner, (ConceptAssert, RoleAssert, EqAssert)):
            raise ValueError("negation applies to ABox assertions only")


ASSERTIONS = (ConceptAssert, RoleAssert, EqAssert, NegAssert)

TBOX_AXIOMS = (Gci, ConceptEq, RoleIncl, RoleEq)


@dataclass(frozen=True)
class KnowledgeBase:
    abox: tuple[Axiom, ...]
    tbox: tuple[Axiom, ...]
    ind_a: frozenset[str]
    ind_t: frozenset[str]

    @property
    def individuals(self) -> frozenset[str]:
        return self.ind_a | self.ind_t


def make_kb(abox, tbox) -> KnowledgeBase:
    abox = tuple(abox)
    tbox = tuple(tbox)
    for ax in abox:
        if not isinstance(ax, ASSERTIONS):
            raise ValueError(f"not an ABox assertion: {ax!r}")
    for ax in tbox:
        if not isinstance(ax, TBOX_AXIOMS):
            raise ValueError(f"not a TBox axiom: {ax!r}")
    ind_a: set[str] = set()
    for ax in abox:
        ind_a |= individuals_of_axiom(ax)
    ind_t: set[str] = set()
    for ax in tbox:
        ind_t |= individuals_of_axiom(ax)
    return KnowledgeBase(abox, tbox, frozenset(ind_a), frozenset(ind_t))


# ---------------------------------------------------------------------------
# Conjunctive queries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Term:
    """Query term: a variable or an individual name."""

    text: str
    is_var: bool


@dataclass(frozen=True)
class ConceptAtom:
    concept_name: str
    term: Term


@dataclass(frozen=True)
class RoleAtom:
    role_name: str
    subject: Term
    object: Term


QueryAtom = Union[ConceptAtom, RoleAtom]


@dataclass(frozen=True)
class ConjunctiveQuery:
    atoms: frozenset[QueryAtom]

    def terms(self) -> frozenset[Term]:
        out: set[Term] = set()
        for atom in self.atoms:
            if isinstance(atom, ConceptAtom):
                out.add(atom.term)
            else:
                out.add(atom.subject)
                out.add(atom.object)
        return frozenset(out)

    def individuals(self) -> frozenset[str]:
        return frozenset(t.text for t in self.terms() if not t.is_var)

    def is_rooted(self) -> bool:
        """At least one individual name and a connected query graph."""
        terms = self.terms()
        if not any(not t.is_var for t in terms):
            return False
        if len(terms) <= 1:
            return True
        adj: dict[Term, set[Term]] = {t: set() for t in terms}
        for atom in self.atoms:
            if isinstance(atom, RoleAtom):
                adj[atom.subject].add(atom.object)
                adj[atom.object].add(atom.subject)
        start = next(iter(terms))
        seen = {start}
        todo = [start]
        while todo:
            for nxt in adj[todo.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
        return seen == terms


# ---------------------------------------------------------------------------
# Traversals
# ---------------------------------------------------------------------------


def subconcepts(c: Concept) -> Iterator[Concept]:
    """All subconcepts of ``c`` including itself; descends into NFA tests."""
    yield c
    if isinstance(c, Not):
        yield from subconcepts(c.arg)
    elif isinstance(c, And):
        yield from subconcepts(c.left)
        yield from subconcepts(c.right)
    elif isinstance(c, (Exists, AtLeast, ExistsAuto)):
        yield from subconcepts(c.filler)
        if isinstance(c, ExistsAuto):
            for lab in c.nfa.labels():
                if isinstance(lab, Test):
                    yield from subconcepts(lab.concept)


def concepts_of_axiom(ax: Axiom) -> Iterator[Concept]:
    if isinstance(ax, Gci):
        yield ax.sub
        yield ax.sup
    elif isinstance(ax, ConceptEq):
        yield ax.left
        yield ax.right
    elif isinstance(ax, NegAssert):
        yield from concepts_of_axiom(ax.inner)


def roles_of_concept(c: Concept) -> Iterator[SimpleRole]:
    for sub in subconcepts(c):
        if isinstance(sub, (Exists, AtLeast)):
            yield sub.role
        elif isinstance(sub, SelfLoop):
            yield sub.role
        elif isinstance(sub, ExistsAuto):
            for lab in sub.nfa.labels():
                if not isinstance(lab, Test):
                    yield lab


def roles_of_axiom(ax: Axiom) -> Iterator[SimpleRole]:
    for c in concepts_of_axiom(ax):
        yield from roles_of_concept(c)
    if isinstance(ax, RoleIncl):
        yield ax.sub
        yield ax.sup
    elif isinstance(ax, RoleEq):
        yield RoleName(ax.name)
        yield ax.role


def individuals_of_concept(c: Concept) -> frozenset[str]:
    out: set[str] = set()
    for sub in subconcepts(c):
        if isinstance(sub, Nominal):
            out.add(sub.individual)
    return frozenset(out)


def individuals_of_axiom(ax: Axiom) -> frozenset[str]:
    out: set[str] = set()
    if isinstance(ax, ConceptAssert):
        out.add(ax.individual)
    elif isinstance(ax, RoleAssert):
        out.add(ax.subject)
        out.add(ax.object)
    elif isinstance(ax, EqAssert):
        out.add(ax.left)
        out.add(ax.right)
    elif isinstance(ax, NegAssert):
        out |= individuals_of_axiom(ax.inner)
    else:
        for c in concepts_of_axiom(ax):
            out |= individuals_of_concept(c)
    return frozenset(out)


def concept_names_of_kb(kb: KnowledgeBase) -> frozenset[str]:
    out: set[str] = set()
    for ax in kb.abox + kb.tbox:
        if isinstance(ax, ConceptAssert):
            out.add(ax.concept_name)
        elif isinstance(ax, NegAssert) and isinstance(ax.inner, ConceptAssert):
            out.add(ax.inner.concept_name)
        for c in concepts_of_axiom(ax):
            for sub in subconcepts(c):
                if isinstance(sub, Atomic) and sub.name not in RESERVED_CONCEPTS:
                    out.add(sub.name)
    return frozenset(out)


def role_names_of_kb(kb: KnowledgeBase) -> frozenset[str]:
    out: set[str] = set()
    for ax in kb.abox + kb.tbox:
        if isinstance(ax, RoleAssert):
            out.add(ax.role_name)
        elif isinstance(ax, NegAssert) and isinstance(ax.inner, RoleAssert):
            out.add(ax.inner.role_name)
        for role in roles_of_axiom(ax):
            out |= role_names_of_role(role)
    return frozenset(out - RESERVED_ROLES)


# ---------------------------------------------------------------------------
# Fragment classification and ghost substitution
# ---------------------------------------------------------------------------


def _role_has_inverse(role: SimpleRole) -> bool:
    if isinstance(role, RoleName):
        return False
    if isinstance(role, Inverse):
        return True
    return _role_has_inverse(role.left) or _role_has_inverse(role.right)


def fragment_of(kb: KnowledgeBase) -> str:
    """Smallest of ZIQ / ZOQ / ZOI / ZOIQ containing the knowledge base.

    When several apply the preference order is ZIQ, ZOQ, ZOI.
    """
    has_nominal = False
    has_counting = False
    has_inverse = False
    for ax in kb.abox + kb.tbox:
        for c in concepts_of_axiom(ax):
            for sub in subconcepts(c):
                if isinstance(sub, Nominal):
                    has_nominal = True
                elif isinstance(sub, AtLeast):
                    has_counting = True
        for role in roles_of_axiom(ax):
            if _role_has_inverse(role):
                has_inverse = True
    if not has_nominal:
        return "ZIQ"
    if not has_inverse:
        return "ZOQ"
    if not has_counting:
        return "ZOI"
    return "ZOIQ"


def substitute_ghost(c: Concept, individual: str) -> Concept:
    """Replace every ghost nominal in ``c`` (including NFA tests) by ``individual``."""
    return substitute_individual(c, GHOST, individual)


def substitute_individual(c: Concept, old: str, new: str) -> Concept:
    if isinstance(c, Nominal):
        return Nominal(new) if c.individual == old else c
    if isinstance(c, (Bottom, Atomic)):
        return c
    if isinstance(c, Not):
        return Not(substitute_individual(c.arg, old, new))
    if isinstance(c, And):
        return And(
            substitute_individual(c.left, old, new),
            substitute_individual(c.right, old, new),
        )
    if isinstance(c, Exists):
        return Exists(c.role, substitute_individual(c.filler, old, new))
    if isinstance(c, AtLeast):
        return AtLeast(c.count, c.role, substitute_individual(c.filler, old, new))
    if isinstance(c, SelfLoop):
        return c
    if isinstance(c, ExistsAuto):
        nfa = substitute_in_nfa(c.nfa, old, new)
        return ExistsAuto(nfa, substitute_individual(c.filler, old, new))
    raise TypeError(f"not a concept: {c!r}")


def substitute_in_nfa(nfa: Nfa, old: str, new: str) -> Nfa:
    changed = False
    transitions = []
    for p, lab, q in nfa.transitions:
        if isinstance(lab, Test):
            sub = substitute_individual(lab.concept, old, new)
            if sub is not lab.concept:
                changed = True
                lab = Test(sub)
        transitions.append((p, lab, q))
    if not changed:
        return nfa
    return Nfa(nfa.n_states, nfa.initial, nfa.final, frozenset(transitions))
