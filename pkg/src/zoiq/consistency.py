"""Summaries: complete clearing descriptions and their consistency checks.

A summary is a complete polarity assignment over the clearing vocabulary of a
normalised knowledge base: equalities, concept and role literals (user and
decoration), threshold triples per number restriction, and the structural
root/edge skeleton.  Clearing consistency checks the summary against the
local axioms and the virtual decoration conditions; subtree consistency asks
a bounded model search whether a ghost-rooted subtree realising the recorded
promises exists.  Both checks are sound; subtree answers are conclusive only
within the search bounds.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import decorations as dec
from . import vocab
from .decorations import Threshold, bucket
from .normalform import is_normal_form
from .search import BUDGET, SAT, UNSAT, SearchOutcome, brute_force_sat, partitions
from .semantics import (
    Evaluator,
    Interpretation,
    SearchBounds,
    check_model,
    satisfies_axiom,
)
from .syntax import (
    And,
    AtLeast,
    Atomic,
    Axiom,
    ConceptAssert,
    ConceptEq,
    EDGE,
    EqAssert,
    ExistsAuto,
    GHOST,
    Gci,
    KnowledgeBase,
    NegAssert,
    Nfa,
    Nominal,
    Not,
    ROOT,
    RoleAssert,
    RoleName,
    TOP,
    and_all,
    concept_names_of_kb,
    role_names_of_kb,
)

YES = "yes"
NO = "no"
UNKNOWN = "unknown"


# ---------------------------------------------------------------------------
# Normalised-TBox machinery
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AutomatonGci:
    concept: str
    auto_id: str
    nfa: Nfa


@dataclass(frozen=True)
class CountingGci:
    concept: str
    role: str
    count: int


@dataclass(frozen=True)
class TBoxSetup:
    """A normalised TBox split into its local part and the decorated parts."""

    tbox: tuple[Axiom, ...]
    local: tuple[Axiom, ...]
    automata_gcis: tuple[AutomatonGci, ...]
    counting_gcis: tuple[CountingGci, ...]
    automata: tuple[tuple[str, Nfa], ...]  # distinct, in order of appearance
    ind_t: frozenset[str]

    @property
    def countings(self) -> tuple[tuple[str, int], ...]:
        return tuple(dict.fromkeys((g.role, g.count) for g in self.counting_gcis))


def tbox_setup(tbox) -> TBoxSetup:
    tbox = tuple(tbox)
    for ax in tbox:
        if not is_normal_form(ax):
            raise ValueError(f"TBox axiom not in normal form: {ax!r}")
    local: list[Axiom] = []
    automata_gcis: list[AutomatonGci] = []
    counting_gcis: list[CountingGci] = []
    auto_ids: dict[Nfa, str] = {}
    ind_t: set[str] = set()
    for ax in tbox:
        if isinstance(ax, ConceptEq) and isinstance(ax.right, Nominal):
            ind_t.add(ax.right.individual)
        if isinstance(ax, ConceptEq) and isinstance(ax.right, ExistsAuto):
            nfa = ax.right.nfa
            auto_id = auto_ids.setdefault(nfa, f"a{len(auto_ids)}")
            automata_gcis.append(AutomatonGci(_literal_name(ax.left), auto_id, nfa))
            continue
        if isinstance(ax, ConceptEq) and isinstance(ax.right, AtLeast):
            counting_gcis.append(
                CountingGci(_literal_name(ax.left), ax.right.role.name, ax.right.count)
            )
            continue
        local.append(ax)
    automata = tuple((aid, nfa) for nfa, aid in auto_ids.items())
    return TBoxSetup(
        tbox,
        tuple(local),
        tuple(automata_gcis),
        tuple(counting_gcis),
        automata,
        frozenset(ind_t),
    )


def _literal_name(c) -> str:
    if isinstance(c, Atomic):
        return c.name
    raise ValueError(f"normal-form left side must be a concept name: {c!r}")


def single_final_state(nfa: Nfa) -> int:
    (state,) = nfa.final
    return state


# ---------------------------------------------------------------------------
# Summaries
# ---------------------------------------------------------------------------


def literal_key(ax: Axiom):
    inner = ax.inner if isinstance(ax, NegAssert) else ax
    polarity = 1 if isinstance(ax, NegAssert) else 0
    if isinstance(inner, EqAssert):
        return (0, inner.left, inner.right, "", polarity)
    if isinstance(inner, ConceptAssert):
        return (1, inner.individual, "", inner.concept_name, polarity)
    if isinstance(inner, RoleAssert):
        return (2, inner.subject, inner.object, inner.role_name, polarity)
    raise TypeError(f"not a summary literal: {ax!r}")


@dataclass(frozen=True)
class Summary:
    individuals: tuple[str, ...]
    literals: tuple[Axiom, ...]

    @staticmethod
    def of(individuals, literals) -> "Summary":
        return Summary(
            tuple(sorted(set(individuals))),
            tuple(sorted(set(literals), key=literal_key)),
        )

    @property
    def literal_set(self) -> frozenset:
        cached = self.__dict__.get("_literal_set")
        if cached is None:
            cached = frozenset(self.literals)
            object.__setattr__(self, "_literal_set", cached)
        return cached

    def positive(self) -> list[Axiom]:
        return [ax for ax in self.literals if not isinstance(ax, NegAssert)]

    def has(self, literal: Axiom) -> bool:
        return literal in self.literal_set

    def concept_value(self, name: str, individual: str) -> bool | None:
        if ConceptAssert(name, individual) in self.literal_set:
            return True
        if NegAssert(ConceptAssert(name, individual)) in self.literal_set:
            return False
        return None


def summary_text(s: Summary) -> str:
    from .parser import axiom_text

    return "\n".join(axiom_text(ax) for ax in s.literals) + "\n"


def summary_from_text(text: str) -> Summary:
    from .parser import parse_kb

    kb = parse_kb(text, internal=True)
    individuals = set()
    for ax in kb.abox:
        from .syntax import individuals_of_axiom

        individuals |= individuals_of_axiom(ax)
    return Summary.of(individuals, kb.abox)


# -- vocabulary --------------------------------------------------------------


@dataclass(frozen=True)
class SummaryVocabulary:
    individuals: tuple[str, ...]
    concept_names: tuple[str, ...]          # polarity-complete concept literals
    role_names: tuple[str, ...]             # polarity-complete role literals
    counting: tuple[CountingGci, ...]
    ind_t: tuple[str, ...]

    def expected_literal_count(self) -> int:
        n = len(self.individuals)
        count = n * n  # equalities
        count += len(self.concept_names) * n
        count += len(self.role_names) * n * n
        for gci in dict.fromkeys((g.role, g.count) for g in self.counting):
            count += (2 + len(self.ind_t)) * n
        count += n + n * n  # Root and edge skeleton
        return count


def summary_vocabulary(kb: KnowledgeBase, setup: TBoxSetup) -> SummaryVocabulary:
    concept_names = set(concept_names_of_kb(kb))
    role_names = set(role_names_of_kb(kb))
    for auto_id, nfa in setup.automata:
        for item in dec.decoration_concepts(auto_id, nfa, setup.ind_t):
            concept_names.add(item.name)
        concept_names.update(dec.reach_concepts(auto_id, nfa))
        for sym in _guided_symbols(auto_id, nfa, setup.ind_t):
            role_names.add(sym)
    return SummaryVocabulary(
        tuple(sorted(kb.individuals)),
        tuple(sorted(concept_names)),
        tuple(sorted(role_names)),
        setup.counting_gcis,
        tuple(sorted(setup.ind_t)),
    )


def _guided_symbols(auto_id: str, nfa: Nfa, ind_t) -> list[str]:
    from .automata import guided_alphabet

    return [sym.role for sym in guided_alphabet(auto_id, nfa, ind_t)]


def is_complete_summary(voc: SummaryVocabulary, s: Summary) -> bool:
    return not completeness_gaps(voc, s)


def completeness_gaps(voc: SummaryVocabulary, s: Summary) -> list[str]:
    inds = voc.individuals
    if tuple(sorted(s.individuals)) != inds:
        return [f"individuals differ: {s.individuals} vs {inds}"]
    present = set(s.literals)
    gaps: list[str] = []

    def one_of(pos: Axiom) -> None:
        neg = NegAssert(pos)
        if (pos in present) == (neg in present):
            gaps.append(f"need exactly one polarity of {pos}")

    for a in inds:
        for b in inds:
            one_of(EqAssert(a, b))
            for r in voc.role_names:
                one_of(RoleAssert(r, a, b))
            if RoleAssert(EDGE, a, b) not in present:
                gaps.append(f"missing edge({a}, {b})")
        for c in voc.concept_names:
            one_of(ConceptAssert(c, a))
        if ConceptAssert(ROOT, a) not in present:
            gaps.append(f"missing Root({a})")
        for role, n in dict.fromkeys((g.role, g.count) for g in voc.counting):
            families: list[list[str]] = [
                [vocab.clearing_count_name(role, n, t.exact) for t in dec.all_thresholds(n)],
                [vocab.child_count_name(role, n, t.exact) for t in dec.all_thresholds(n)],
            ]
            for o in voc.ind_t:
                families.append(
                    [
                        vocab.descendant_count_name(role, o, n, t.exact)
                        for t in dec.all_thresholds(n)
                    ]
                )
            for family in families:
                hits = [name for name in family if ConceptAssert(name, a) in present]
                if len(hits) != 1:
                    gaps.append(f"{a} carries {len(hits)} thresholds in {family[0]}...")
    expected = voc.expected_literal_count()
    if len(s.literals) > expected:
        gaps.append(f"too many literals: {len(s.literals)} > {expected}")
    return gaps


# -- interpretation of a summary ----------------------------------------------


def summary_to_interp(s: Summary) -> Interpretation:
    """Minimal interpretation satisfying the summary: the equality quotient
    carries exactly the positive literals."""
    parent = {x: x for x in s.individuals}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    negatives = []
    for ax in s.literals:
        if isinstance(ax, EqAssert):
            ra, rb = find(ax.left), find(ax.right)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        elif isinstance(ax, NegAssert) and isinstance(ax.inner, EqAssert):
            negatives.append((ax.inner.left, ax.inner.right))
        elif isinstance(ax, NegAssert) and ax.inner in s.literal_set:
            raise ValueError(f"summary asserts both polarities of {ax.inner!r}")
    for a, b in negatives:
        if find(a) == find(b):
            raise ValueError(f"equalities merge {a} and {b} against a negative literal")

    classes = sorted({find(x) for x in s.individuals})
    if len(classes) > 10:
        raise ValueError("more than ten root classes")
    element = {rep: str(i) for i, rep in enumerate(classes)}
    names = {x: element[find(x)] for x in s.individuals}

    domain = frozenset(element.values())
    concepts: dict[str, set[str]] = {ROOT: set(domain)}
    roles: dict[str, set] = {"id": {(d, d) for d in domain}, "child": set()}
    for ax in s.literals:
        if isinstance(ax, ConceptAssert):
            concepts.setdefault(ax.concept_name, set()).add(names[ax.individual])
        elif isinstance(ax, RoleAssert):
            roles.setdefault(ax.role_name, set()).add(
                (names[ax.subject], names[ax.object])
            )
    return Interpretation(
        domain,
        names,
        {k: frozenset(v) for k, v in concepts.items()},
        {k: frozenset(v) for k, v in roles.items()},
        forest=True,
    )


# -- extraction from a model ---------------------------------------------------


def extract_summary(kb: KnowledgeBase, setup: TBoxSetup, model: Interpretation) -> Summary:
    """The complete summary describing the clearing of a decorated model.

    Decorations are recomputed semantically, so the result is honest even when
    the model does not carry decoration extensions itself.
    """
    voc = summary_vocabulary(kb, setup)
    decorated = dec.decorate(model, list(setup.automata), list(setup.countings), setup.ind_t)
    ev = Evaluator(decorated)
    inds = voc.individuals
    literals: list[Axiom] = []

    def polar(pos: Axiom, value: bool) -> None:
        literals.append(pos if value else NegAssert(pos))

    for a in inds:
        for b in inds:
            polar(EqAssert(a, b), decorated.names[a] == decorated.names[b])
            for r in voc.role_names:
                pair = (decorated.names[a], decorated.names[b])
                polar(RoleAssert(r, a, b), pair in decorated.role_ext(r))
            literals.append(RoleAssert(EDGE, a, b))
        for c in voc.concept_names:
            polar(ConceptAssert(c, a), decorated.names[a] in decorated.concept_ext(c))
        literals.append(ConceptAssert(ROOT, a))
        for role, n in dict.fromkeys((g.role, g.count) for g in voc.counting):
            cl, ch, per = dec.counting_profile(decorated, role, a, setup.ind_t)
            literals.append(
                ConceptAssert(vocab.clearing_count_name(role, n, bucket(cl, n).exact), a)
            )
            literals.append(
                ConceptAssert(vocab.child_count_name(role, n, bucket(ch, n).exact), a)
            )
            for o in voc.ind_t:
                literals.append(
                    ConceptAssert(
                        vocab.descendant_count_name(role, o, n, bucket(per[o], n).exact), a
                    )
                )
    return Summary.of(inds, literals)


# -- enumeration ---------------------------------------------------------------


def enumerate_summaries(kb: KnowledgeBase, setup: TBoxSetup, prune: bool = True):
    """Deterministic stream of complete summaries, coherent per equality class.

    With ``prune`` (the default) user layers whose minimal interpretation
    violates the assertions or the local axioms are cut before decoration
    layers are expanded.  The stream is exponential in the free vocabulary;
    callers at engine level use the guided search instead.
    """
    voc = summary_vocabulary(kb, setup)
    inds = list(voc.individuals)
    negatives = [
        (ax.inner.left, ax.inner.right)
        for ax in kb.abox
        if isinstance(ax, NegAssert) and isinstance(ax.inner, EqAssert)
    ]
    forced_eq = [
        (ax.left, ax.right) for ax in kb.abox if isinstance(ax, EqAssert)
    ]

    user_concepts = sorted(concept_names_of_kb(kb))
    user_roles = sorted(role_names_of_kb(kb))
    decoration_concepts: list[str] = []
    for auto_id, nfa in setup.automata:
        decoration_concepts += [
            item.name for item in dec.decoration_concepts(auto_id, nfa, setup.ind_t)
        ]

    for blocks in partitions(inds):
        rep = {x: sorted(block)[0] for block in blocks for x in block}
        if any(rep[a] != rep[b] for a, b in forced_eq):
            if prune:
                continue
        if any(rep[a] == rep[b] for a, b in negatives) and prune:
            continue
        class_reps = sorted({rep[x] for x in inds})
        eq_literals: list[Axiom] = []
        for a in inds:
            for b in inds:
                pos = EqAssert(a, b)
                eq_literals.append(pos if rep[a] == rep[b] else NegAssert(pos))

        concept_choices = list(itertools.product([False, True], repeat=len(user_concepts) * len(class_reps)))
        role_slots = [(r, x, y) for r in user_roles for x in class_reps for y in class_reps]
        for concept_bits in concept_choices:
            concept_value = {}
            for i, (name, cls) in enumerate(
                (n, c) for n in user_concepts for c in class_reps
            ):
                concept_value[(name, cls)] = concept_bits[i]
            for role_bits in itertools.product([False, True], repeat=len(role_slots)):
                role_value = {
                    slot: role_bits[i] for i, slot in enumerate(role_slots)
                }
                base = list(eq_literals)
                for a in inds:
                    base.append(ConceptAssert(ROOT, a))
                    for name in user_concepts:
                        pos = ConceptAssert(name, a)
                        base.append(pos if concept_value[(name, rep[a])] else NegAssert(pos))
                    for b in inds:
                        base.append(RoleAssert(EDGE, a, b))
                        for r in user_roles:
                            pos = RoleAssert(r, a, b)
                            base.append(
                                pos if role_value[(r, rep[a], rep[b])] else NegAssert(pos)
                            )
                yield from _expand_decorations(
                    kb, setup, voc, inds, base, decoration_concepts, prune
                )


def _expand_decorations(kb, setup, voc, inds, base, decoration_concepts, prune):
    partial = Summary.of(inds, base)
    interp = summary_to_interp(partial)
    if prune:
        ev = Evaluator(interp)
        if not all(satisfies_axiom(ev, ax) for ax in kb.abox):
            return
        if not all(satisfies_axiom(ev, ax) for ax in setup.local):
            return

    slots = [(name, a) for name in decoration_concepts for a in inds]
    for bits in itertools.product([False, True], repeat=len(slots)):
        literals = list(base)
        for i, (name, a) in enumerate(slots):
            pos = ConceptAssert(name, a)
            literals.append(pos if bits[i] else NegAssert(pos))
        with_cond = Summary.of(inds, literals)
        interim = summary_to_interp(with_cond)
        derived = list(literals)
        ev = Evaluator(interim)
        for auto_id, nfa in setup.automata:
            dictated = dec.dictated_role_pairs(interim, nfa, auto_id, setup.ind_t, ev)
            pairs_by_name = dict(dictated)
            for a in inds:
                for b in inds:
                    pair = (interim.names[a], interim.names[b])
                    for role_name, pairs in pairs_by_name.items():
                        pos = RoleAssert(role_name, a, b)
                        derived.append(pos if pair in pairs else NegAssert(pos))
        roles = dict(interim.roles)
        for auto_id, nfa in setup.automata:
            roles.update(dec.dictated_role_pairs(interim, nfa, auto_id, setup.ind_t, ev))
        with_roles = Interpretation(
            interim.domain, interim.names, interim.concepts, roles, forest=True
        )
        for auto_id, nfa in setup.automata:
            for name, ext in dec.reach_extensions(with_roles, nfa, auto_id, setup.ind_t).items():
                for a in inds:
                    pos = ConceptAssert(name, a)
                    derived.append(pos if interim.names[a] in ext else NegAssert(pos))

        if not setup.counting_gcis:
            yield Summary.of(inds, derived)
            continue
        yield from _expand_thresholds(setup, voc, inds, interim, derived)


def _expand_thresholds(setup, voc, inds, interim, literals):
    reps = sorted({interim.names[a] for a in inds})
    name_of_element = {}
    for a in inds:
        name_of_element.setdefault(interim.names[a], a)
    jobs = []
    for role, n in dict.fromkeys((g.role, g.count) for g in setup.counting_gcis):
        for element in reps:
            anchor = name_of_element[element]
            cl, _, _ = dec.counting_profile(interim, role, anchor, setup.ind_t)
            jobs.append((role, n, element, bucket(cl, n)))
    families = []
    for role, n, element, _ in jobs:
        families.append([(role, n, element, "ch", t) for t in dec.all_thresholds(n)])
        for o in sorted(setup.ind_t):
            families.append(
                [(role, n, element, f"o:{o}", t) for t in dec.all_thresholds(n)]
            )
    for picks in itertools.product(*families):
        derived = list(literals)
        for role, n, element, clearing_bucket in jobs:
            for a in inds:
                if interim.names[a] == element:
                    derived.append(
                        ConceptAssert(
                            vocab.clearing_count_name(role, n, clearing_bucket.exact), a
                        )
                    )
        for role, n, element, kind, t in picks:
            for a in inds:
                if interim.names[a] != element:
                    continue
                if kind == "ch":
                    derived.append(
                        ConceptAssert(vocab.child_count_name(role, n, t.exact), a)
                    )
                else:
                    derived.append(
                        ConceptAssert(
                            vocab.descendant_count_name(role, kind[2:], n, t.exact), a
                        )
                    )
        yield Summary.of(inds, derived)


# ---------------------------------------------------------------------------
# Clearing consistency
# ---------------------------------------------------------------------------


def clearing_consistent(kb: KnowledgeBase, setup: TBoxSetup, s: Summary) -> bool:
    try:
        interp = summary_to_interp(s)
    except ValueError:
        return False
    ev = Evaluator(interp)
    for ax in kb.abox:
        if not satisfies_axiom(ev, ax):
            return False
    for ax in setup.local:
        if not satisfies_axiom(ev, ax):
            return False
    for auto_id, nfa in setup.automata:
        if not dec.check_virtually_auto_decorated(interp, nfa, auto_id, setup.ind_t):
            return False
    for gci in setup.automata_gcis:
        reach = vocab.reach_name(
            gci.auto_id, gci.nfa.initial, single_final_state(gci.nfa)
        )
        reach_ext = interp.concept_ext(reach)
        for a in s.individuals:
            labelled = s.concept_value(gci.concept, a)
            if labelled is None:
                return False
            if labelled != (interp.names[a] in reach_ext):
                return False
    for role, n in setup.countings:
        if not dec.check_virtually_counting_decorated(interp, role, n, setup.ind_t):
            return False
    for gci in setup.counting_gcis:
        for a in s.individuals:
            labelled = s.concept_value(gci.concept, a)
            if labelled is None:
                return False
            virtual = dec.virtual_sat_count(
                interp, interp.names[a], gci.role, gci.count, setup.ind_t
            )
            if labelled != virtual:
                return False
    return True


# ---------------------------------------------------------------------------
# Ghost summaries and subtree consistency
# ---------------------------------------------------------------------------


def _rename(ax: Axiom, old: str, new: str) -> Axiom:
    if isinstance(ax, ConceptAssert):
        if ax.individual == old:
            return ConceptAssert(ax.concept_name, new)
        return ax
    if isinstance(ax, RoleAssert):
        return RoleAssert(
            ax.role_name,
            new if ax.subject == old else ax.subject,
            new if ax.object == old else ax.object,
        )
    if isinstance(ax, EqAssert):
        return EqAssert(
            new if ax.left == old else ax.left, new if ax.right == old else ax.right
        )
    if isinstance(ax, NegAssert):
        return NegAssert(_rename(ax.inner, old, new))
    raise TypeError(f"not a literal: {ax!r}")


def _individuals_of_literal(ax: Axiom) -> frozenset[str]:
    from .syntax import individuals_of_axiom

    return individuals_of_axiom(ax)


def ghost_summary(setup: TBoxSetup, s: Summary, a: str) -> Summary:
    """Restriction of a summary to the nominals plus one name, with that name
    replaced by the ghost; a nominal keeps an equality bridge to the ghost."""
    keep_t = set(setup.ind_t)
    keep_ta = keep_t | {a}
    literals: set[Axiom] = set()
    for ax in s.literals:
        mentioned = _individuals_of_literal(ax)
        if mentioned <= keep_t:
            literals.add(ax)
        if mentioned <= keep_ta:
            literals.add(_rename(ax, a, GHOST))
    if a in keep_t:
        literals.add(EqAssert(a, GHOST))
        literals.add(EqAssert(GHOST, a))
    return Summary.of(keep_t | {GHOST}, literals)


def ghost_thresholds(
    setup: TBoxSetup, g: Summary
) -> dict[tuple[str, int], tuple[Threshold, dict[str, Threshold]]]:
    """The unique child and per-nominal descendant thresholds the ghost
    carries, per number restriction; raises when not semi-decorated."""
    present = set(g.literals)
    out = {}
    for role, n in setup.countings:
        child = [
            t
            for t in dec.all_thresholds(n)
            if ConceptAssert(vocab.child_count_name(role, n, t.exact), GHOST) in present
        ]
        if len(child) != 1:
            raise ValueError(f"ghost carries {len(child)} child thresholds for {role}")
        per_nominal = {}
        for o in sorted(setup.ind_t):
            found = [
                t
                for t in dec.all_thresholds(n)
                if ConceptAssert(
                    vocab.descendant_count_name(role, o, n, t.exact), GHOST
                )
                in present
            ]
            if len(found) != 1:
                raise ValueError(
                    f"ghost carries {len(found)} descendant thresholds for {role}, {o}"
                )
            per_nominal[o] = found[0]
        out[(role, n)] = (child[0], per_nominal)
    return out


def relativised_tbox(setup: TBoxSetup) -> list[Axiom]:
    """Local axioms plus the relativised forms of the decorated axioms; these
    hold in a subtree fragment exactly when the full axioms hold in a model
    the fragment came from."""
    axioms: list[Axiom] = list(setup.local)
    for gci in setup.automata_gcis:
        rel = dec.rel_concept(
            setup.ind_t,
            gci.nfa,
            gci.auto_id,
            gci.nfa.initial,
            single_final_state(gci.nfa),
        )
        axioms.append(ConceptEq(Atomic(gci.concept), rel))
    for gci in setup.counting_gcis:
        not_root = Not(Atomic(ROOT))
        axioms.append(
            ConceptEq(
                And(not_root, Atomic(gci.concept)),
                And(not_root, AtLeast(gci.count, RoleName(gci.role), TOP)),
            )
        )
    return axioms


def build_subtree_kb(setup: TBoxSetup, g: Summary) -> KnowledgeBase:
    """The ghost-rooted knowledge base whose quasi-forest satisfiability
    witnesses that a subtree realising the ghost's promises exists."""
    thresholds = ghost_thresholds(setup, g)  # raises when not semi-decorated
    axioms = relativised_tbox(setup)
    for auto_id, nfa in setup.automata:
        axioms.append(
            Gci(
                Nominal(GHOST),
                dec.comdsc(setup.ind_t, nfa, auto_id, include_direct=False),
            )
        )
    for (role, n), (t_child, per_nominal) in thresholds.items():
        conjuncts = [dec.desc_child_count(role, n, t_child)]
        for o in sorted(setup.ind_t):
            conjuncts.append(dec.desc_descendant_count(role, o, n, per_nominal[o]))
        axioms.append(Gci(Nominal(GHOST), and_all(conjuncts)))
    abox = tuple(g.literals)
    individuals = frozenset(g.individuals)
    # The ghost stays an ordinary named root: only the original nominals keep
    # the cross-subtree linking privilege, otherwise a ghost subtree could
    # record promises no merged model can realise.
    return KnowledgeBase(abox, tuple(axioms), individuals, frozenset(setup.ind_t))


@dataclass
class SubtreeOracle:
    """Bounded search configuration standing in for the unbounded decision
    procedure; answers are cached per canonical ghost summary."""

    bounds: SearchBounds = SearchBounds(max_roots=4, max_branching=2, max_depth=2, max_domain=6)
    budget: int = 300_000
    cache: dict = field(default_factory=dict)
    calls: int = 0
    models: dict = field(default_factory=dict)

    def reset_counter(self) -> None:
        self.calls = 0


def subtree_consistent(setup: TBoxSetup, g: Summary, oracle: SubtreeOracle) -> str:
    key = (setup.tbox, g)
    hit = oracle.cache.get(key)
    if hit is not None:
        return hit
    oracle.calls += 1
    try:
        kb = build_subtree_kb(setup, g)
    except ValueError:
        oracle.cache[key] = NO
        return NO
    outcome = brute_force_sat(kb, oracle.bounds, budget=oracle.budget)
    verdict = {SAT: YES, UNSAT: NO, BUDGET: UNKNOWN}[outcome.status]
    if outcome.model is not None:
        oracle.models[key] = outcome.model
    oracle.cache[key] = verdict
    return verdict


class STSet:
    """The family of subtree-consistent ghost summaries, memoised lazily and
    materialisable for small vocabularies."""

    def __init__(self, setup: TBoxSetup, oracle: SubtreeOracle):
        self.setup = setup
        self.oracle = oracle

    def membership(self, g: Summary) -> str:
        return subtree_consistent(self.setup, g, self.oracle)

    def __contains__(self, g: Summary) -> bool:
        return self.membership(g) == YES

    def materialize(self) -> tuple[frozenset[Summary], bool]:
        """All subtree-consistent ghost summaries; the flag reports whether
        every membership query was conclusive."""
        ghost_base = KnowledgeBase(
            (EqAssert(GHOST, GHOST),),
            self.setup.tbox,
            frozenset({GHOST}),
            self.setup.ind_t,
        )
        members = []
        conclusive = True
        for g in enumerate_summaries(ghost_base, self.setup, prune=False):
            verdict = self.membership(g)
            if verdict == YES:
                members.append(g)
            elif verdict == UNKNOWN:
                conclusive = False
        return frozenset(members), conclusive


def compute_S_T(setup: TBoxSetup, oracle: SubtreeOracle) -> STSet:
    return STSet(setup, oracle)


def consistent(
    kb: KnowledgeBase, setup: TBoxSetup, s: Summary, oracle: SubtreeOracle
) -> str:
    """Clearing consistency plus membership of every name's ghost summary.

    ``no`` from a failed clearing check is conclusive; a missing subtree
    within bounds degrades to ``unknown`` only when the oracle ran out of
    budget, and stays ``no`` otherwise (callers must treat subtree ``no`` as
    bounded evidence)."""
    if not clearing_consistent(kb, setup, s):
        return NO
    verdicts = [
        subtree_consistent(setup, ghost_summary(setup, s, a), oracle)
        for a in sorted(kb.individuals)
    ]
    if any(v == UNKNOWN for v in verdicts):
        return UNKNOWN
    if all(v == YES for v in verdicts):
        return YES
    return NO
