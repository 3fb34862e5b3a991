"""Clearing decorations: path bookkeeping for automata and threshold
bookkeeping for number restrictions.

Automata decorations record, per named root, which shapes of basic paths
realise each state pair of an automaton; decoration roles mirror those labels
as clearing edges so a guided automaton can stitch path fragments back
together.  Counting decorations bucket successor counts into thresholds so
number restrictions can be decided on the clearing alone.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import vocab
from .automata import (
    Bypass,
    InOut,
    Inner,
    Nameless,
    NominalInner,
    Outer,
    OutIn,
    Roundtrip,
    category_automaton,
    direct_to_any_root,
    guided_automaton,
    product,
    reverse_between,
    rpq_pairs,
    skull_state,
    switch_states,
)
from .regex import Star, Sym, compile_regex
from .semantics import (
    Evaluator,
    Interpretation,
    Pair,
    eval_simple_role,
    strict_descendant_test,
)
from .syntax import (
    And,
    AtLeast,
    Atomic,
    CHILD,
    Concept,
    EDGE,
    ExistsAuto,
    GHOST,
    Nfa,
    Nominal,
    Not,
    ROOT,
    RoleAnd,
    RoleName,
    TOP,
    Test,
    and_all,
    at_most,
    iff,
    or_all,
    substitute_ghost,
)

EDGE_STAR = compile_regex(Star(Sym(RoleName(EDGE))))


# ---------------------------------------------------------------------------
# Automata decorations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecorationConcept:
    """One member of the decoration-concept vocabulary of an automaton."""

    family: str
    auto_id: str
    q: int
    qp: int
    nominals: tuple[str, ...] = ()

    @property
    def name(self) -> str:
        return vocab.concept_name(self.family, self.auto_id, self.q, self.qp, *self.nominals)

    def category(self, anchor: str):
        """The path category anchored at the label bearer."""
        if self.family == vocab.D_FAM:
            return None  # the direct family quantifies over all named targets
        if self.family == vocab.I_FAM:
            return Inner(anchor)
        if self.family == vocab.RT_FAM:
            return Roundtrip(anchor)
        if self.family == vocab.IO_FAM:
            return InOut(anchor, self.nominals[0])
        if self.family == vocab.OI_FAM:
            return OutIn(anchor, self.nominals[0])
        if self.family == vocab.IN_FAM:
            return NominalInner(anchor, self.nominals[0])
        if self.family == vocab.BY_FAM:
            return Bypass(anchor, self.nominals[0], self.nominals[1])
        raise ValueError(f"unknown family {self.family!r}")


def decoration_concepts(auto_id: str, nfa: Nfa, ind_t) -> list[DecorationConcept]:
    nominals = sorted(ind_t)
    out = []
    for q in range(nfa.n_states):
        for qp in range(nfa.n_states):
            for family in (vocab.D_FAM, vocab.I_FAM, vocab.RT_FAM):
                out.append(DecorationConcept(family, auto_id, q, qp))
            for o in nominals:
                for family in (vocab.IO_FAM, vocab.OI_FAM, vocab.IN_FAM):
                    out.append(DecorationConcept(family, auto_id, q, qp, (o,)))
                for oo in nominals:
                    out.append(DecorationConcept(vocab.BY_FAM, auto_id, q, qp, (o, oo)))
    return out


def reach_concepts(auto_id: str, nfa: Nfa) -> list[str]:
    return [
        vocab.reach_name(auto_id, q, qp)
        for q in range(nfa.n_states)
        for qp in range(nfa.n_states)
    ]


def cond_check(
    forest: Interpretation,
    nfa: Nfa,
    dc: DecorationConcept,
    a: str,
    evaluator: Evaluator | None = None,
) -> bool:
    """Does some path of the decoration's category realise the state pair?"""
    ev = evaluator or Evaluator(forest)
    switched = switch_states(nfa, dc.q, dc.qp)
    if dc.family == vocab.D_FAM:
        tracker = direct_to_any_root(a)
    else:
        tracker = category_automaton(dc.category(a))
    return bool(rpq_pairs(forest, product(switched, tracker), ev))


def desc_concept(nfa: Nfa, dc: DecorationConcept) -> Concept:
    """Ghost-parameterised concept characterising the decoration's condition.

    The label bearer is the ghost; substituting an individual name for the
    ghost yields a concept holding at that name's root exactly when the
    semantic condition does.
    """
    switched = switch_states(nfa, dc.q, dc.qp)
    if dc.family == vocab.D_FAM:
        return ExistsAuto(product(switched, direct_to_any_root(GHOST)), TOP)
    if dc.family in (vocab.I_FAM, vocab.RT_FAM, vocab.IO_FAM):
        tracker = category_automaton(dc.category(GHOST))
        return ExistsAuto(product(switched, tracker), TOP)
    if dc.family == vocab.OI_FAM:
        # the path runs from the nominal into the ghost's subtree and back to
        # the ghost; its reversal is an in-out path from the ghost
        reversed_nfa = reverse_between(nfa, dc.q, dc.qp)
        tracker = category_automaton(InOut(GHOST, dc.nominals[0]))
        return ExistsAuto(product(reversed_nfa, tracker), TOP)
    if dc.family in (vocab.IN_FAM, vocab.BY_FAM):
        # anchored at the ghost but starting at a nominal root; hop to the
        # nominal along clearing edges first
        tracker = category_automaton(dc.category(GHOST))
        at_nominal = And(
            Nominal(dc.nominals[0]), ExistsAuto(product(switched, tracker), TOP)
        )
        return And(Nominal(GHOST), ExistsAuto(EDGE_STAR, at_nominal))
    raise ValueError(f"unknown family {dc.family!r}")


def comdsc(ind_t, nfa: Nfa, auto_id: str, include_direct: bool = True) -> Concept:
    """Conjunction of label-versus-description biconditionals over the whole
    decoration vocabulary of the automaton."""
    conjuncts = []
    for dc in decoration_concepts(auto_id, nfa, ind_t):
        if not include_direct and dc.family == vocab.D_FAM:
            continue
        conjuncts.append(iff(Atomic(dc.name), desc_concept(nfa, dc)))
    return and_all(conjuncts)


def rel_concept(ind_t, nfa: Nfa, auto_id: str, q: int, qp: int) -> Concept:
    """Relativised satisfaction of the automaton between two states: a root
    consults its reachability label; inside a subtree a run is either fully
    below the element or exits once to a root whose label finishes the run."""
    return or_all(rel_disjuncts(ind_t, nfa, auto_id, q, qp))


def rel_disjuncts(ind_t, nfa: Nfa, auto_id: str, q: int, qp: int) -> list[Concept]:
    root = Atomic(ROOT)
    switched = switch_states(nfa, q, qp)
    disjuncts = [And(root, Atomic(vocab.reach_name(auto_id, q, qp)))]
    nameless = category_automaton(Nameless())
    disjuncts.append(
        And(Not(root), ExistsAuto(product(switched, nameless), TOP))
    )
    outer = category_automaton(Outer())
    for mid in range(nfa.n_states):
        leg = product(switch_states(nfa, q, mid), outer)
        finish = And(root, Atomic(vocab.reach_name(auto_id, mid, qp)))
        disjuncts.append(And(Not(root), ExistsAuto(leg, finish)))
    return disjuncts


def single_step_pairs(
    interp: Interpretation, nfa: Nfa, q: int, qp: int, evaluator: Evaluator | None = None
) -> frozenset[Pair]:
    """Pairs joined by a two-element path realising the automaton between the
    states: one role step with test blocks on both sides."""
    ev = evaluator or Evaluator(interp)

    def closure(states: set[int], node: str) -> set[int]:
        seen = set(states)
        todo = list(states)
        while todo:
            p = todo.pop()
            for src, lab, dst in nfa.transitions:
                if src == p and isinstance(lab, Test):
                    if dst not in seen and node in ev.eval(lab.concept):
                        seen.add(dst)
                        todo.append(dst)
        return seen

    out: set[Pair] = set()
    role_steps = [t for t in nfa.transitions if not isinstance(t[1], Test)]
    for d in interp.domain:
        start = closure({q}, d)
        for src, lab, dst in role_steps:
            if src not in start:
                continue
            for x, e in eval_simple_role(interp, lab):
                if x != d:
                    continue
                if qp in closure({dst}, e):
                    out.add((d, e))
    return frozenset(out)


def dictated_role_pairs(
    clearing: Interpretation,
    nfa: Nfa,
    auto_id: str,
    ind_t,
    evaluator: Evaluator | None = None,
) -> dict[str, frozenset[Pair]]:
    """Decoration-role extensions dictated by the clearing's concept labels."""
    ev = evaluator or Evaluator(clearing)
    named = sorted(set(clearing.names.values()))
    nominals = sorted(ind_t)
    out: dict[str, frozenset[Pair]] = {}
    for q in range(nfa.n_states):
        for qp in range(nfa.n_states):
            out[vocab.role_name(vocab.d_FAM, auto_id, q, qp)] = frozenset(
                (d, e)
                for (d, e) in single_step_pairs(clearing, nfa, q, qp, ev)
                if d in named and e in named
            )
            for fam_role, fam_concept in (
                (vocab.i_FAM, vocab.I_FAM),
                (vocab.rt_FAM, vocab.RT_FAM),
            ):
                label = vocab.concept_name(fam_concept, auto_id, q, qp)
                out[vocab.role_name(fam_role, auto_id, q, qp)] = frozenset(
                    (d, d) for d in clearing.concept_ext(label)
                )
            for o in nominals:
                o_el = clearing.names[o]
                io_label = vocab.concept_name(vocab.IO_FAM, auto_id, q, qp, o)
                out[vocab.role_name(vocab.io_FAM, auto_id, q, qp, o)] = frozenset(
                    (d, o_el) for d in clearing.concept_ext(io_label)
                )
                oi_label = vocab.concept_name(vocab.OI_FAM, auto_id, q, qp, o)
                out[vocab.role_name(vocab.oi_FAM, auto_id, q, qp, o)] = frozenset(
                    (o_el, d) for d in clearing.concept_ext(oi_label)
                )
                in_label = vocab.concept_name(vocab.IN_FAM, auto_id, q, qp, o)
                out[vocab.role_name(vocab.in_FAM, auto_id, q, qp, o)] = frozenset(
                    (o_el, d) for d in clearing.concept_ext(in_label)
                )
                for oo in nominals:
                    by_label = vocab.concept_name(
                        vocab.BY_FAM, auto_id, q, qp, o, oo
                    )
                    ext = clearing.concept_ext(by_label)
                    pair = (o_el, clearing.names[oo])
                    out[vocab.role_name(vocab.by_FAM, auto_id, q, qp, o, oo)] = (
                        frozenset({pair}) if ext else frozenset()
                    )
    return out


def reach_extensions(
    clearing: Interpretation, nfa: Nfa, auto_id: str, ind_t
) -> dict[str, frozenset[str]]:
    """Reachability labels dictated by runs of the guided automaton over the
    clearing's decoration roles."""
    guided = guided_automaton(nfa, ind_t, auto_id)
    ev = Evaluator(clearing)
    out: dict[str, frozenset[str]] = {}
    roots = clearing.concept_ext(ROOT)
    for q in range(nfa.n_states):
        for qp in range(nfa.n_states):
            plain = rpq_pairs(clearing, switch_states(guided, q, qp), ev)
            dead = rpq_pairs(
                clearing, switch_states(guided, q, skull_state(nfa, qp)), ev
            )
            hits = frozenset(d for d, _ in plain | dead) & roots
            out[vocab.reach_name(auto_id, q, qp)] = hits
    return out


def check_virtually_auto_decorated(
    clearing: Interpretation, nfa: Nfa, auto_id: str, ind_t
) -> bool:
    """Role extensions match the label-dictated table and reachability labels
    match the guided automaton's runs."""
    dictated = dictated_role_pairs(clearing, nfa, auto_id, ind_t)
    for role_name, pairs in dictated.items():
        if clearing.role_ext(role_name) != pairs:
            return False
    for reach_label, ext in reach_extensions(clearing, nfa, auto_id, ind_t).items():
        if clearing.concept_ext(reach_label) != ext:
            return False
    return True


# ---------------------------------------------------------------------------
# Counting decorations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Threshold:
    """``=m`` bucket when ``exact`` is set, the overflow ``>= n+1`` otherwise."""

    exact: int | None

    def value(self, n: int) -> int:
        return self.exact if self.exact is not None else n + 1

    def text(self, n: int) -> str:
        return vocab.threshold_text(self.exact, n)


def bucket(count: int, n: int) -> Threshold:
    return Threshold(count) if count <= n else Threshold(None)


def all_thresholds(n: int) -> list[Threshold]:
    return [Threshold(m) for m in range(n + 1)] + [Threshold(None)]


def counting_concept_names(role: str, n: int, ind_t) -> list[str]:
    out = []
    for t in all_thresholds(n):
        out.append(vocab.clearing_count_name(role, n, t.exact))
        out.append(vocab.child_count_name(role, n, t.exact))
        for o in sorted(ind_t):
            out.append(vocab.descendant_count_name(role, o, n, t.exact))
    return out


def counting_profile(
    forest: Interpretation, role: str, a: str, ind_t
) -> tuple[int, int, dict[str, int]]:
    """Successor counts split by region: clearing, own children, and per
    nominal the successors of the nominal strictly below the anchor."""
    element = forest.names[a]
    roots = forest.concept_ext(ROOT)
    pairs = forest.role_ext(role)
    children = forest.role_ext(CHILD)
    clearing_count = sum(1 for d, e in pairs if d == element and e in roots)
    child_count = sum(
        1 for d, e in pairs if d == element and (element, e) in children
    )
    descendant_counts: dict[str, int] = {}
    for o in sorted(ind_t):
        o_el = forest.names[o]
        descendant_counts[o] = sum(
            1
            for d, e in pairs
            if d == o_el and len(e) > len(element) and e.startswith(element)
        )
    return clearing_count, child_count, descendant_counts


def threshold_concept(t: Threshold, role, filler: Concept, n: int) -> Concept:
    if t.exact is None:
        return AtLeast(n + 1, role, filler)
    return And(AtLeast(t.exact, role, filler), at_most(t.exact, role, filler))


def desc_clearing_count(role: str, n: int, t: Threshold) -> Concept:
    return threshold_concept(t, RoleName(role), Atomic(ROOT), n)


def desc_child_count(role: str, n: int, t: Threshold) -> Concept:
    return threshold_concept(
        t, RoleAnd(RoleName(role), RoleName(CHILD)), TOP, n
    )


def desc_descendant_count(role: str, nominal: str, n: int, t: Threshold) -> Concept:
    below_ghost = strict_descendant_test(GHOST)
    at_nominal = And(
        Nominal(nominal), threshold_concept(t, RoleName(role), below_ghost, n)
    )
    return And(Nominal(GHOST), ExistsAuto(EDGE_STAR, at_nominal))


def desc_counting(name: str) -> Concept:
    """Ghost-parameterised description of a counting-decoration concept name."""
    parts = name.lstrip("#").split(".")
    family = parts[0]
    t_text = parts[-1]
    if t_text.startswith("eq"):
        t = Threshold(int(t_text[2:]))
        n_floor = t.exact  # any n >= the bucket reproduces the same concept
    else:
        t = Threshold(None)
        n_floor = int(t_text[2:]) - 1
    if family == "Clrng":
        return desc_clearing_count(parts[1], n_floor, t)
    if family == "Chld":
        return desc_child_count(parts[1], n_floor, t)
    if family == "Des":
        return desc_descendant_count(parts[1], parts[2], n_floor, t)
    raise ValueError(f"not a counting concept name: {name!r}")


def semi_decoration(
    clearing: Interpretation, role: str, n: int, ind_t
) -> dict[str, dict[str, Threshold]] | None:
    """Per root the unique thresholds per family, or None when some root's
    labels are missing or ambiguous."""
    roots = sorted(clearing.concept_ext(ROOT))
    out: dict[str, dict[str, Threshold]] = {}
    for element in roots:
        picks: dict[str, Threshold] = {}
        families = [("cl", None), ("ch", None)] + [("o", o) for o in sorted(ind_t)]
        for kind, o in families:
            found = []
            for t in all_thresholds(n):
                if kind == "cl":
                    label = vocab.clearing_count_name(role, n, t.exact)
                elif kind == "ch":
                    label = vocab.child_count_name(role, n, t.exact)
                else:
                    label = vocab.descendant_count_name(role, o, n, t.exact)
                if element in clearing.concept_ext(label):
                    found.append(t)
            if len(found) != 1:
                return None
            picks[kind if o is None else f"o:{o}"] = found[0]
        out[element] = picks
    return out


def check_virtually_counting_decorated(
    clearing: Interpretation, role: str, n: int, ind_t
) -> bool:
    """Semi-decorated and the clearing-count labels match the actual counts."""
    picks = semi_decoration(clearing, role, n, ind_t)
    if picks is None:
        return False
    roots = clearing.concept_ext(ROOT)
    pairs = clearing.role_ext(role)
    for element, families in picks.items():
        actual = sum(1 for d, e in pairs if d == element and e in roots)
        if bucket(actual, n) != families["cl"]:
            return False
    return True


def virtual_sat_count(
    clearing: Interpretation, element: str, role: str, n: int, ind_t
) -> bool:
    """Would the root satisfy the unqualified at-least restriction in every
    decorated quasi-forest with this clearing?  The bucket arithmetic makes
    the least-value sum decisive."""
    picks = semi_decoration(clearing, role, n, ind_t)
    if picks is None or not check_virtually_counting_decorated(clearing, role, n, ind_t):
        raise ValueError("clearing is not virtually decorated for this restriction")
    families = picks[element]
    total = families["cl"].value(n) + families["ch"].value(n)
    nominal_names = sorted(
        o for o in ind_t if clearing.names.get(o) == element
    )
    if nominal_names:
        o = nominal_names[0]
        for other in sorted(picks):
            total += picks[other][f"o:{o}"].value(n)
    return total >= n


# ---------------------------------------------------------------------------
# Reference decorator
# ---------------------------------------------------------------------------


def decorate(
    forest: Interpretation,
    automata: list[tuple[str, Nfa]],
    counting: list[tuple[str, int]],
    ind_t,
) -> Interpretation:
    """Semantically computed decorations: the single source of properly
    decorated fixtures.  Concept labels come from the path conditions, roles
    from the label table, reachability from the guided automaton, and
    thresholds from the actual counts."""
    ev = Evaluator(forest)
    concepts = dict(forest.concepts)
    roles = dict(forest.roles)
    names = sorted(forest.names)
    for auto_id, nfa in automata:
        for dc in decoration_concepts(auto_id, nfa, ind_t):
            ext = frozenset(
                forest.names[a] for a in names if cond_check(forest, nfa, dc, a, ev)
            )
            concepts[dc.name] = ext
    decorated = Interpretation(
        forest.domain, forest.names, concepts, roles,
        forest=forest.forest, branching=forest.branching,
    )
    dec_ev = Evaluator(decorated)
    for auto_id, nfa in automata:
        roles.update(dictated_role_pairs(decorated, nfa, auto_id, ind_t, dec_ev))
    with_roles = Interpretation(
        forest.domain, forest.names, concepts, roles,
        forest=forest.forest, branching=forest.branching,
    )
    for auto_id, nfa in automata:
        concepts.update(reach_extensions(with_roles, nfa, auto_id, ind_t))
    for role, n in counting:
        buckets: dict[str, set[str]] = {}
        for a in names:
            cl, ch, per_nominal = counting_profile(forest, role, a, ind_t)
            element = forest.names[a]
            picks = [
                vocab.clearing_count_name(role, n, bucket(cl, n).exact),
                vocab.child_count_name(role, n, bucket(ch, n).exact),
            ]
            for o, k in per_nominal.items():
                picks.append(
                    vocab.descendant_count_name(role, o, n, bucket(k, n).exact)
                )
            for label in picks:
                buckets.setdefault(label, set()).add(element)
        for label, ext in buckets.items():
            concepts[label] = frozenset(ext)
    return Interpretation(
        forest.domain, forest.names, concepts, roles,
        forest=forest.forest, branching=forest.branching,
    )
