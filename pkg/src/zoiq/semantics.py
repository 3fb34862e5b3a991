"""Finite interpretations, quasi-forests, and evaluation.

Elements of quasi-forests are words over decimal digits: roots are the
single-digit words and ``w + d`` is a child of ``w``.  This keeps parent,
ancestor and root relations computable from the element itself, at the price
of capping roots and branching at ten, which is far beyond desk scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .syntax import (
    AtLeast,
    Atomic,
    And,
    Bottom,
    CHILD,
    Concept,
    ConceptAssert,
    ConceptAtom,
    ConceptEq,
    ConjunctiveQuery,
    EDGE,
    EqAssert,
    Exists,
    ExistsAuto,
    Gci,
    ID,
    Inverse,
    KnowledgeBase,
    NegAssert,
    Nfa,
    Nominal,
    Not,
    ROOT,
    RESERVED_ROLES,
    RoleAnd,
    RoleAssert,
    RoleAtom,
    RoleDiff,
    RoleEq,
    RoleIncl,
    RoleName,
    RoleOr,
    SelfLoop,
    SimpleRole,
    Term,
    Test,
)

Pair = tuple[str, str]


@dataclass(frozen=True, eq=False)
class Interpretation:
    domain: frozenset[str]
    names: dict[str, str]
    concepts: dict[str, frozenset[str]]
    roles: dict[str, frozenset[Pair]]
    forest: bool = False
    branching: int | None = None

    def concept_ext(self, name: str) -> frozenset[str]:
        return self.concepts.get(name, frozenset())

    def role_ext(self, name: str) -> frozenset[Pair]:
        return self.roles.get(name, frozenset())

    def equal_data(self, other: "Interpretation") -> bool:
        return (
            self.domain == other.domain
            and self.names == other.names
            and {k: v for k, v in self.concepts.items() if v}
            == {k: v for k, v in other.concepts.items() if v}
            and {k: v for k, v in self.roles.items() if v}
            == {k: v for k, v in other.roles.items() if v}
        )


@dataclass(frozen=True)
class SearchBounds:
    max_roots: int = 3
    max_branching: int = 3
    max_depth: int = 3
    max_domain: int = 6

    def __post_init__(self) -> None:
        assert self.max_roots >= 1 and self.max_branching >= 1
        assert self.max_depth >= 1 and self.max_domain >= 1
        assert self.max_roots <= 10 and self.max_branching <= 10


# ---------------------------------------------------------------------------
# Word helpers
# ---------------------------------------------------------------------------


def is_word(element: str) -> bool:
    return element != "" and element.isdigit()


def word_parent(element: str) -> str | None:
    return element[:-1] if len(element) > 1 else None


def word_root(element: str) -> str:
    return element[0]


def is_strict_prefix(short: str, long: str) -> bool:
    return len(short) < len(long) and long.startswith(short)


def child_pairs(domain: frozenset[str]) -> frozenset[Pair]:
    return frozenset(
        (word_parent(w), w) for w in domain if word_parent(w) in domain
    )


def symmetric_closure(pairs: frozenset[Pair]) -> frozenset[Pair]:
    return pairs | frozenset((e, d) for d, e in pairs)


def quasi_forest(
    elements,
    names: dict[str, str],
    concepts: dict[str, frozenset[str]],
    roles: dict[str, frozenset[Pair]],
    root_clique: bool = True,
    branching: int | None = None,
) -> Interpretation:
    """Interpretation over digit words with the structural vocabulary filled in.

    ``edge`` is the symmetric closure of all roles plus ``child`` and ``id``;
    with ``root_clique`` every pair of roots is additionally an edge, which is
    the canonical choice for models of summaries.
    """
    domain = frozenset(elements)
    assert all(is_word(w) for w in domain)
    children = child_pairs(domain)
    diagonal = frozenset((d, d) for d in domain)
    roots = frozenset(w for w in domain if len(w) == 1)
    edge: set[Pair] = set(diagonal)
    edge |= symmetric_closure(children)
    for ext in roles.values():
        edge |= symmetric_closure(ext)
    if root_clique:
        edge |= {(d, e) for d in roots for e in roots}
    full_roles = dict(roles)
    full_roles[CHILD] = children
    full_roles[ID] = diagonal
    full_roles[EDGE] = frozenset(edge)
    full_concepts = dict(concepts)
    full_concepts[ROOT] = roots
    return Interpretation(
        domain, dict(names), full_concepts, full_roles, forest=True,
        branching=branching,
    )


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

# Canonical strict-ancestor automaton, recognised for the forest fast path.
_UP = Inverse(RoleName(CHILD))
STRICT_ANCESTOR_NFA = Nfa(
    2, 0, frozenset({1}), frozenset({(0, _UP, 1), (1, _UP, 1)})
)


def strict_descendant_test(individual: str) -> Concept:
    """Concept holding at the strict descendants of the named element."""
    return ExistsAuto(STRICT_ANCESTOR_NFA, Nominal(individual))


def eval_simple_role(i: Interpretation, role: SimpleRole) -> frozenset[Pair]:
    if isinstance(role, RoleName):
        return i.role_ext(role.name)
    if isinstance(role, Inverse):
        return frozenset((e, d) for d, e in eval_simple_role(i, role.arg))
    left = eval_simple_role(i, role.left)
    right = eval_simple_role(i, role.right)
    if isinstance(role, RoleAnd):
        return left & right
    if isinstance(role, RoleOr):
        return left | right
    if isinstance(role, RoleDiff):
        return left - right
    raise TypeError(f"not a simple role: {role!r}")


class Evaluator:
    """Concept evaluation with memoisation over one fixed interpretation."""

    def __init__(self, interp: Interpretation):
        self.interp = interp
        self._memo: dict[Concept, frozenset[str]] = {}
        self._rpq_memo: dict[Nfa, frozenset[Pair]] = {}

    def element_of(self, individual: str) -> str:
        try:
            return self.interp.names[individual]
        except KeyError:
            raise KeyError(f"individual {individual!r} has no element") from None

    def eval(self, c: Concept) -> frozenset[str]:
        cached = self._memo.get(c)
        if cached is not None:
            return cached
        out = self._eval(c)
        self._memo[c] = out
        return out

    def _eval(self, c: Concept) -> frozenset[str]:
        i = self.interp
        if isinstance(c, Bottom):
            return frozenset()
        if isinstance(c, Atomic):
            return i.concept_ext(c.name) & i.domain
        if isinstance(c, Nominal):
            return frozenset({self.element_of(c.individual)})
        if isinstance(c, Not):
            return i.domain - self.eval(c.arg)
        if isinstance(c, And):
            return self.eval(c.left) & self.eval(c.right)
        if isinstance(c, Exists):
            pairs = eval_simple_role(i, c.role)
            filler = self.eval(c.filler)
            return frozenset(d for d, e in pairs if e in filler)
        if isinstance(c, AtLeast):
            pairs = eval_simple_role(i, c.role)
            filler = self.eval(c.filler)
            succ: dict[str, int] = {}
            for d, e in pairs:
                if e in filler:
                    succ[d] = succ.get(d, 0) + 1
            return frozenset(d for d in i.domain if succ.get(d, 0) >= c.count)
        if isinstance(c, SelfLoop):
            pairs = eval_simple_role(i, c.role)
            return frozenset(d for d in i.domain if (d, d) in pairs)
        if isinstance(c, ExistsAuto):
            if (
                i.forest
                and c.nfa == STRICT_ANCESTOR_NFA
                and isinstance(c.filler, Nominal)
            ):
                anchor = self.element_of(c.filler.individual)
                return frozenset(d for d in i.domain if is_strict_prefix(anchor, d))
            pairs = self.rpq_pairs(c.nfa)
            filler = self.eval(c.filler)
            return frozenset(d for d, e in pairs if e in filler)
        raise TypeError(f"not a concept: {c!r}")

    def rpq_pairs(self, nfa: Nfa) -> frozenset[Pair]:
        """Pairs (d, e) joined by a path realising the automaton."""
        cached = self._rpq_memo.get(nfa)
        if cached is not None:
            return cached
        i = self.interp
        adjacency: dict[tuple[str, int], list[tuple[str, int]]] = {}

        def add(src, dst) -> None:
            adjacency.setdefault(src, []).append(dst)

        for p, lab, q in nfa.transitions:
            if isinstance(lab, Test):
                for d in self.eval(lab.concept):
                    add((d, p), (d, q))
            else:
                for d, e in eval_simple_role(i, lab):
                    add((d, p), (e, q))
        out: set[Pair] = set()
        for d in i.domain:
            start = (d, nfa.initial)
            seen = {start}
            todo = [start]
            while todo:
                node = todo.pop()
                if node[1] in nfa.final:
                    out.add((d, node[0]))
                for nxt in adjacency.get(node, ()):
                    if nxt not in seen:
                        seen.add(nxt)
                        todo.append(nxt)
        result = frozenset(out)
        self._rpq_memo[nfa] = result
        return result


def eval_concept(i: Interpretation, c: Concept) -> frozenset[str]:
    return Evaluator(i).eval(c)


def check_model(
    i: Interpretation, kb: KnowledgeBase, evaluator: Evaluator | None = None
) -> bool:
    ev = evaluator or Evaluator(i)
    return all(satisfies_axiom(ev, ax) for ax in kb.abox + kb.tbox)


def satisfies_axiom(ev: Evaluator, ax) -> bool:
    i = ev.interp
    if isinstance(ax, Gci):
        return ev.eval(ax.sub) <= ev.eval(ax.sup)
    if isinstance(ax, ConceptEq):
        return ev.eval(ax.left) == ev.eval(ax.right)
    if isinstance(ax, RoleIncl):
        return eval_simple_role(i, ax.sub) <= eval_simple_role(i, ax.sup)
    if isinstance(ax, RoleEq):
        return i.role_ext(ax.name) == eval_simple_role(i, ax.role)
    if isinstance(ax, ConceptAssert):
        return ev.element_of(ax.individual) in i.concept_ext(ax.concept_name)
    if isinstance(ax, RoleAssert):
        pair = (ev.element_of(ax.subject), ev.element_of(ax.object))
        return pair in i.role_ext(ax.role_name)
    if isinstance(ax, EqAssert):
        return ev.element_of(ax.left) == ev.element_of(ax.right)
    if isinstance(ax, NegAssert):
        return not satisfies_axiom(ev, ax.inner)
    raise TypeError(f"not an axiom: {ax!r}")


# ---------------------------------------------------------------------------
# Quasi-forest validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ForestReport:
    ok: bool
    violations: tuple[tuple[str, str], ...] = ()

    @property
    def first_clause(self) -> str | None:
        return self.violations[0][0] if self.violations else None


def is_quasi_forest(
    i: Interpretation,
    ind_a: frozenset[str],
    ind_t: frozenset[str],
    branching: int | None = None,
) -> ForestReport:
    """Validate the structural conditions; reports the violated clauses."""
    bad: list[tuple[str, str]] = []

    if not i.domain:
        bad.append(("domain", "empty domain"))
        return ForestReport(False, tuple(bad))
    for w in sorted(i.domain):
        if not is_word(w):
            bad.append(("domain", f"element {w!r} is not a digit word"))
        elif word_parent(w) is not None and word_parent(w) not in i.domain:
            bad.append(("domain", f"missing parent of {w!r}"))
    roots = frozenset(w for w in i.domain if len(w) == 1)

    named = set()
    for ind in sorted(ind_a | ind_t):
        if ind not in i.names:
            bad.append(("roots", f"individual {ind!r} has no element"))
    for ind, el in sorted(i.names.items()):
        if el not in i.domain:
            bad.append(("roots", f"{ind!r} maps outside the domain"))
        named.add(el)
    if i.concept_ext(ROOT) != roots:
        bad.append(("roots", "Root extension differs from the set of roots"))
    if named != set(roots):
        bad.append(("roots", "named elements are not exactly the roots"))
    kb_named = {i.names[x] for x in (ind_a | ind_t) if x in i.names}
    if kb_named != set(roots):
        bad.append(("roots", "declared individuals do not cover the roots"))

    if i.role_ext(CHILD) != child_pairs(i.domain):
        bad.append(("child", "child extension differs from the tree structure"))
    diagonal = frozenset((d, d) for d in i.domain)
    if i.role_ext(ID) != diagonal:
        bad.append(("id", "id extension is not the diagonal"))

    required: set[Pair] = set(diagonal)
    required |= symmetric_closure(child_pairs(i.domain))
    for name, ext in i.roles.items():
        if name in (EDGE, CHILD, ID):
            continue
        required |= symmetric_closure(ext)
    edge = i.role_ext(EDGE)
    if not required <= edge:
        missing = sorted(required - edge)[0]
        bad.append(("edge", f"missing edge pair {missing}"))
    if edge != frozenset((e, d) for d, e in edge):
        bad.append(("edge", "edge is not symmetric"))
    for d, e in sorted(edge - required):
        if not (d in roots and e in roots):
            bad.append(("edge", f"edge pair {(d, e)} is not licensed"))
            break

    nominal_roots = {i.names[o] for o in ind_t if o in i.names}
    allowed_child = i.role_ext(CHILD) | frozenset((e, d) for d, e in i.role_ext(CHILD))
    for name in sorted(i.roles):
        if name in RESERVED_ROLES:
            continue
        for d, e in sorted(i.role_ext(name)):
            if d in roots and e in roots:
                continue
            if d in nominal_roots or e in nominal_roots:
                continue
            if d == e or (d, e) in allowed_child:
                continue
            bad.append(
                ("role-pairs", f"{name}({d}, {e}) crosses the forest structure")
            )
            break

    bound = branching if branching is not None else i.branching
    if bound is not None:
        kids: dict[str, int] = {}
        for parent, _ in i.role_ext(CHILD):
            kids[parent] = kids.get(parent, 0) + 1
        for parent, k in sorted(kids.items()):
            if k > bound:
                bad.append(("branching", f"{parent!r} has {k} children"))
                break

    return ForestReport(not bad, tuple(bad))


def clearing_of(i: Interpretation) -> Interpretation:
    """Restriction of the interpretation to its roots."""
    roots = i.concept_ext(ROOT)
    concepts = {a: ext & roots for a, ext in i.concepts.items()}
    roles = {
        r: frozenset((d, e) for d, e in ext if d in roots and e in roots)
        for r, ext in i.roles.items()
    }
    roles[CHILD] = frozenset()
    roles[ID] = frozenset((d, d) for d in roots)
    names = {x: el for x, el in i.names.items() if el in roots}
    return Interpretation(frozenset(roots), names, concepts, roles, forest=False)


# ---------------------------------------------------------------------------
# Conjunctive-query matching
# ---------------------------------------------------------------------------


def match_cq(i: Interpretation, q: ConjunctiveQuery) -> dict[str, str] | None:
    """Lexicographically least match, or None."""
    for ind in q.individuals():
        if ind not in i.names:
            return None

    def value(t: Term, partial: dict[str, str]) -> str | None:
        if t.is_var:
            return partial.get(t.text)
        return i.names[t.text]

    atoms = sorted(q.atoms, key=repr)
    variables = sorted({t.text for t in q.terms() if t.is_var})
    elements = sorted(i.domain)

    def consistent(partial: dict[str, str]) -> bool:
        for atom in atoms:
            if isinstance(atom, ConceptAtom):
                v = value(atom.term, partial)
                if v is not None and v not in i.concept_ext(atom.concept_name):
                    return False
            else:
                s = value(atom.subject, partial)
                o = value(atom.object, partial)
                if s is not None and o is not None:
                    if (s, o) not in i.role_ext(atom.role_name):
                        return False
        return True

    def extend(idx: int, partial: dict[str, str]) -> dict[str, str] | None:
        if idx == len(variables):
            return dict(partial) if consistent(partial) else None
        var = variables[idx]
        for el in elements:
            partial[var] = el
            if consistent(partial):
                found = extend(idx + 1, partial)
                if found is not None:
                    return found
            del partial[var]
        return None

    return extend(0, {})


def satisfies_query(i: Interpretation, q: ConjunctiveQuery) -> bool:
    return match_cq(i, q) is not None


# ---------------------------------------------------------------------------
# Interchange format
# ---------------------------------------------------------------------------


def interp_to_text(i: Interpretation) -> str:
    lines = [f"element {w}" for w in sorted(i.domain)]
    for ind in sorted(i.names):
        lines.append(f"name {ind} = {i.names[ind]}")
    for a in sorted(i.concepts):
        if i.concepts[a]:
            inner = ", ".join(sorted(i.concepts[a]))
            lines.append(f"concept {a} = {{{inner}}}")
    for r in sorted(i.roles):
        if i.roles[r]:
            inner = ", ".join(f"({d}, {e})" for d, e in sorted(i.roles[r]))
            lines.append(f"role {r} = {{{inner}}}")
    return "\n".join(lines) + "\n"


def _detect_forest(i: Interpretation) -> bool:
    if not i.domain or not all(is_word(w) for w in i.domain):
        return False
    if any(
        word_parent(w) is not None and word_parent(w) not in i.domain
        for w in i.domain
    ):
        return False
    if i.role_ext(CHILD) != child_pairs(i.domain):
        return False
    if i.role_ext(ID) != frozenset((d, d) for d in i.domain):
        return False
    return i.concept_ext(ROOT) == frozenset(w for w in i.domain if len(w) == 1)


def interp_from_text(text: str) -> Interpretation:
    domain: set[str] = set()
    names: dict[str, str] = {}
    concepts: dict[str, frozenset[str]] = {}
    roles: dict[str, frozenset[Pair]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kind, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            if kind == "element":
                domain.add(rest)
            elif kind == "name":
                ind, _, el = rest.partition("=")
                names[ind.strip()] = el.strip()
            elif kind == "concept":
                cname, _, body = rest.partition("=")
                body = body.strip().strip("{}").strip()
                members = [x.strip() for x in body.split(",") if x.strip()]
                concepts[cname.strip()] = frozenset(members)
            elif kind == "role":
                rname, _, body = rest.partition("=")
                body = body.strip().strip("{}")
                pairs = set()
                for chunk in body.split(")"):
                    chunk = chunk.strip().lstrip(",").strip().lstrip("(")
                    if not chunk:
                        continue
                    d, _, e = chunk.partition(",")
                    pairs.add((d.strip(), e.strip()))
                roles[rname.strip()] = frozenset(pairs)
            else:
                raise ValueError(f"unknown directive {kind!r}")
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    interp = Interpretation(frozenset(domain), names, concepts, roles)
    if _detect_forest(interp):
        return Interpretation(
            frozenset(domain), names, concepts, roles, forest=True
        )
    return interp


def interp_to_json(i: Interpretation) -> str:
    doc = {
        "schema": 1,
        "elements": sorted(i.domain),
        "names": {k: i.names[k] for k in sorted(i.names)},
        "concepts": {a: sorted(ext) for a, ext in sorted(i.concepts.items()) if ext},
        "roles": {
            r: [[d, e] for d, e in sorted(ext)]
            for r, ext in sorted(i.roles.items())
            if ext
        },
    }
    return json.dumps(doc, indent=2) + "\n"


def interp_from_json(text: str) -> Interpretation:
    doc = json.loads(text)
    if doc.get("schema") != 1:
        raise ValueError("unsupported interpretation schema")
    interp = Interpretation(
        frozenset(doc["elements"]),
        dict(doc.get("names", {})),
        {a: frozenset(ext) for a, ext in doc.get("concepts", {}).items()},
        {
            r: frozenset((d, e) for d, e in ext)
            for r, ext in doc.get("roles", {}).items()
        },
    )
    if _detect_forest(interp):
        return Interpretation(
            interp.domain, interp.names, interp.concepts, interp.roles, forest=True
        )
    return interp
