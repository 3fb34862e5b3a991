"""Structural normal-form transformation for TBoxes.

Every axiom set is rewritten, by naming subconcepts with fresh generated
names, into the eight atomic shapes

    A == B.   A == not(B).   A == {o}.   A == and(B, B').   r = S.
    A == exists(auto[..], Top).   A == self(r).   A == atleast(n, r, Top).

with A, B, B' concept names or Top/Bot and r a role name.  The transformation
is a definitional extension: fresh names never constrain the original
vocabulary, and axioms already in shape pass through untouched, which makes
the rewrite idempotent and keeps user vocabulary stable.

Qualified number restrictions factor through a fresh subrole carrying exactly
the role pairs whose targets satisfy the filler; the fresh role's extension is
a subset of the original role's, so quasi-forest legality of models is
preserved in both directions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import regex as rx
from .syntax import (
    And,
    AtLeast,
    Atomic,
    Axiom,
    BOT,
    Bottom,
    Concept,
    ConceptEq,
    Exists,
    ExistsAuto,
    Gci,
    Inverse,
    KnowledgeBase,
    Nfa,
    Nominal,
    Not,
    RoleAnd,
    RoleDiff,
    RoleEq,
    RoleIncl,
    RoleName,
    SelfLoop,
    SimpleRole,
    TOP,
    Test,
    make_kb,
)

_LITERALS = (Atomic,)


def _is_literal(c: Concept) -> bool:
    return isinstance(c, Atomic) or c == TOP or isinstance(c, Bottom)


def _nfa_tests_atomic(nfa: Nfa) -> bool:
    return all(
        _is_literal(lab.concept)
        for _, lab, _ in nfa.transitions
        if isinstance(lab, Test)
    )


def _single_final(nfa: Nfa) -> Nfa:
    """One final state, reached from the old finals by an always-true test."""
    if len(nfa.final) == 1:
        return nfa
    extra = nfa.n_states
    transitions = set(nfa.transitions)
    for f in nfa.final:
        transitions.add((f, Test(TOP), extra))
    return Nfa(
        nfa.n_states + 1,
        nfa.initial,
        frozenset({extra}),
        frozenset(transitions),
        source=nfa.source,
    )


def is_normal_form(ax: Axiom) -> bool:
    if isinstance(ax, RoleEq):
        return True
    if not isinstance(ax, ConceptEq):
        return False
    left, right = ax.left, ax.right
    if not _is_literal(left):
        return False
    if _is_literal(right):
        return True
    if isinstance(right, Not) and _is_literal(right.arg):
        return True
    if isinstance(right, Nominal):
        return True
    if isinstance(right, And) and _is_literal(right.left) and _is_literal(right.right):
        return True
    if isinstance(right, ExistsAuto) and right.filler == TOP:
        return len(right.nfa.final) == 1 and _nfa_tests_atomic(right.nfa)
    if isinstance(right, SelfLoop) and isinstance(right.role, RoleName):
        return True
    if (
        isinstance(right, AtLeast)
        and right.filler == TOP
        and isinstance(right.role, RoleName)
    ):
        return True
    return False


@dataclass
class _Normalizer:
    out: list[Axiom] = field(default_factory=list)
    concept_names: dict[Concept, Concept] = field(default_factory=dict)
    role_names: dict[SimpleRole, RoleName] = field(default_factory=dict)
    next_concept: int = 0
    next_role: int = 0

    def fresh_concept(self) -> Atomic:
        name = Atomic(f"#C{self.next_concept}")
        self.next_concept += 1
        return name

    def fresh_role(self) -> RoleName:
        name = RoleName(f"#r{self.next_role}")
        self.next_role += 1
        return name

    # -- roles ---------------------------------------------------------------

    def role_atom(self, role: SimpleRole) -> RoleName:
        """A role name with the same extension, via ``r = S`` when compound."""
        if isinstance(role, RoleName):
            return role
        hit = self.role_names.get(role)
        if hit is not None:
            return hit
        fresh = self.fresh_role()
        self.role_names[role] = fresh
        self.out.append(RoleEq(fresh.name, role))
        return fresh

    # -- concepts --------------------------------------------------------------

    def name_of(self, c: Concept) -> Concept:
        """A concept literal equivalent to ``c``, defining it if necessary."""
        if c == TOP or isinstance(c, (Bottom, Atomic)):
            return c
        hit = self.concept_names.get(c)
        if hit is not None:
            return hit
        fresh = self.fresh_concept()
        self.concept_names[c] = fresh
        self.out.append(ConceptEq(fresh, self.shallow(c)))
        return fresh

    def shallow(self, c: Concept) -> Concept:
        """One level of ``c`` over named parts, in one of the eight shapes."""
        if isinstance(c, Nominal):
            return c
        if isinstance(c, Not):
            inner = self.name_of(c.arg)
            if inner == TOP:
                return BOT
            if isinstance(inner, Bottom):
                return TOP
            return Not(inner)
        if isinstance(c, And):
            return And(self.name_of(c.left), self.name_of(c.right))
        if isinstance(c, SelfLoop):
            return SelfLoop(self.role_atom(c.role))
        if isinstance(c, Exists):
            step = rx.Sym(self.role_atom(c.role))
            filler = self.name_of(c.filler)
            body = step if filler == TOP else rx.Cat(step, rx.TestSym(filler))
            return ExistsAuto(_single_final(rx.compile_regex(body)), TOP)
        if isinstance(c, ExistsAuto):
            nfa = self.rename_tests(c.nfa)
            filler = self.name_of(c.filler)
            if filler != TOP:
                nfa = _append_test(nfa, filler)
            return ExistsAuto(_single_final(nfa), TOP)
        if isinstance(c, AtLeast):
            return self.counting(c)
        raise TypeError(f"not a concept: {c!r}")

    def rename_tests(self, nfa: Nfa) -> Nfa:
        changed = False
        transitions = []
        for p, lab, q in nfa.transitions:
            if isinstance(lab, Test) and not _is_literal(lab.concept):
                lab = Test(self.name_of(lab.concept))
                changed = True
            transitions.append((p, lab, q))
        if not changed:
            return nfa
        return Nfa(nfa.n_states, nfa.initial, nfa.final, frozenset(transitions))

    def counting(self, c: AtLeast) -> Concept:
        filler = self.name_of(c.filler)
        if filler == TOP:
            return AtLeast(c.count, self.role_atom(c.role), TOP)
        # Carve the filler-targeting subrole out of the counted role: the
        # fresh subrole holds exactly the pairs whose target satisfies the
        # filler, so counting it with an unqualified restriction is the same
        # as counting the original with the qualifier.  Being a subrole, its
        # pairs are legal wherever the original's are.
        sub = self.fresh_role()  # free subrole, constrained by the axioms below
        carved = self.role_atom(RoleAnd(c.role, sub))
        # range(sub) is inside the filler
        backwards = self.role_atom(Inverse(sub))
        has_sub_pred = self.name_of(ExistsAuto(rx.compile_regex(rx.Sym(backwards)), TOP))
        self.gci(has_sub_pred, filler)
        # every counted pair whose target satisfies the filler is in sub
        missed = self.role_atom(RoleDiff(c.role, sub))
        escape = rx.Cat(rx.Sym(missed), rx.TestSym(filler))
        escaped = self.name_of(ExistsAuto(rx.compile_regex(escape), TOP))
        self.out.append(ConceptEq(escaped, BOT))
        return AtLeast(c.count, carved, TOP)

    # -- axioms -----------------------------------------------------------------

    def gci(self, sub: Concept, sup: Concept) -> None:
        clash = self.name_of(And(self.name_of(sub), self.name_of(Not(sup))))
        self.out.append(ConceptEq(clash, BOT))

    def axiom(self, ax: Axiom) -> None:
        if is_normal_form(ax):
            self.out.append(ax)
            return
        if isinstance(ax, Gci):
            self.gci(ax.sub, ax.sup)
        elif isinstance(ax, ConceptEq):
            left = self.name_of(ax.left)
            right = self.name_of(ax.right)
            self.out.append(ConceptEq(left, right))
        elif isinstance(ax, RoleIncl):
            bridge = self.fresh_role()
            self.out.append(RoleEq(bridge.name, ax.sub))
            self.out.append(RoleEq(bridge.name, RoleAnd(ax.sub, ax.sup)))
        elif isinstance(ax, RoleEq):
            self.out.append(ax)
        else:
            raise TypeError(f"not a TBox axiom: {ax!r}")


def _append_test(nfa: Nfa, filler: Concept) -> Nfa:
    extra = nfa.n_states
    transitions = set(nfa.transitions)
    for f in nfa.final:
        transitions.add((f, Test(filler), extra))
    return Nfa(nfa.n_states + 1, nfa.initial, frozenset({extra}), frozenset(transitions))


def normalize(tbox) -> tuple[Axiom, ...]:
    """Rewrite a TBox into the eight atomic shapes (definitional extension)."""
    normalizer = _Normalizer()
    for ax in tbox:
        normalizer.axiom(ax)
    deduped = tuple(dict.fromkeys(normalizer.out))
    for ax in deduped:
        assert is_normal_form(ax), f"not in shape: {ax!r}"
    return deduped


def normalize_kb(kb: KnowledgeBase) -> KnowledgeBase:
    return make_kb(kb.abox, normalize(kb.tbox))
