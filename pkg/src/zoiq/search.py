"""Bounded model search: exhaustive, deterministic exploration of quasi-forest
shaped interpretations within explicit bounds.

The search enumerates root partitions and canonical tree shapes breadth-first
on total size, then assigns concept and role bits by backtracking with
three-valued (Kleene) evaluation of all axioms for pruning and propagation.
A partial assignment whose axioms are all definitely true describes a cube of
models; completing it with all remaining bits false yields its least model.

Answers are sound; a negative answer is conclusive only relative to the
bounds, and an exhausted node budget is reported as a distinct outcome.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .semantics import (
    Evaluator,
    Interpretation,
    Pair,
    SearchBounds,
    check_model,
    is_quasi_forest,
    quasi_forest,
)
from .syntax import (
    AtLeast,
    Atomic,
    And,
    Bottom,
    CHILD,
    Concept,
    ConceptAssert,
    ConceptEq,
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
    RoleDiff,
    RoleEq,
    RoleIncl,
    RoleName,
    RoleOr,
    SelfLoop,
    SimpleRole,
    Test,
    concept_names_of_kb,
    role_names_of_kb,
    make_kb,
)

SAT = "sat"
UNSAT = "unsat"
BUDGET = "budget"


class BudgetExceeded(Exception):
    pass


@dataclass
class SearchOutcome:
    status: str
    model: Interpretation | None = None
    nodes: int = 0

    @property
    def conclusive(self) -> bool:
        return self.status != BUDGET


# ---------------------------------------------------------------------------
# Root partitions
# ---------------------------------------------------------------------------


def merged_classes(kb: KnowledgeBase) -> list[tuple[str, ...]]:
    """Individuals quotiented by the asserted equalities, sorted by least name."""
    parent: dict[str, str] = {x: x for x in kb.individuals}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for ax in kb.abox:
        if isinstance(ax, EqAssert):
            ra, rb = find(ax.left), find(ax.right)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    groups: dict[str, list[str]] = {}
    for x in kb.individuals:
        groups.setdefault(find(x), []).append(x)
    return sorted(tuple(sorted(g)) for g in groups.values())


def forbidden_merges(kb: KnowledgeBase) -> list[tuple[str, str]]:
    return [
        (ax.inner.left, ax.inner.right)
        for ax in kb.abox
        if isinstance(ax, NegAssert) and isinstance(ax.inner, EqAssert)
    ]


def partitions(items: list) -> list[list[list]]:
    """Set partitions via restricted growth strings, most blocks first."""
    if not items:
        return [[]]
    out: list[list[list]] = []

    def grow(idx: int, blocks: list[list]) -> None:
        if idx == len(items):
            out.append([list(b) for b in blocks])
            return
        for b in blocks:
            b.append(items[idx])
            grow(idx + 1, blocks)
            b.pop()
        blocks.append([items[idx]])
        grow(idx + 1, blocks)
        blocks.pop()

    grow(0, [])
    out.sort(key=lambda blocks: (-len(blocks), [b[0] for b in blocks]))
    return out


MERGE_ENUM_CAP = 7  # beyond this many classes only the identity partition runs


def partition_space_complete(kb: KnowledgeBase, max_roots: int) -> bool:
    classes = merged_classes(kb)
    return len(classes) <= min(MERGE_ENUM_CAP, max_roots)


def root_assignments(kb: KnowledgeBase, max_roots: int):
    """Yield name maps onto roots 0..R-1, respecting (in)equality assertions.

    The identity partition comes first; the full merge lattice is enumerated
    only for small class counts (``partition_space_complete`` reports whether
    exhausting this stream refutes every assignment)."""
    classes = merged_classes(kb)
    negatives = forbidden_merges(kb)

    def emit(blocks):
        names: dict[str, str] = {}
        for digit, block in enumerate(sorted(blocks, key=lambda b: b[0])):
            for cls in block:
                for name in cls:
                    names[name] = str(digit)
        if any(names[x] == names[y] for x, y in negatives):
            return None
        return names

    if len(classes) > MERGE_ENUM_CAP:
        if len(classes) <= max_roots:
            names = emit([[cls] for cls in classes])
            if names is not None:
                yield names
        return
    for blocks in partitions(classes):
        if len(blocks) > max_roots:
            continue
        names = emit(blocks)
        if names is not None:
            yield names


# ---------------------------------------------------------------------------
# Canonical forest shapes
# ---------------------------------------------------------------------------


def forest_shapes(
    n_roots: int,
    size: int,
    bounds: SearchBounds,
    childless: frozenset[str] = frozenset(),
):
    """Canonical prefix-closed shapes with exactly ``size`` nodes.

    Children of every node are numbered contiguously from 0, so each forest
    shape is produced exactly once up to sibling order.
    """
    roots = [str(k) for k in range(n_roots)]
    if size < n_roots:
        return

    def assign(queue: list[str], done: list[str], remaining: int):
        if not queue:
            if remaining == 0:
                yield sorted(done)
            return
        node = queue[0]
        max_kids = 0 if node in childless else bounds.max_branching
        if len(node) >= bounds.max_depth + 1:
            max_kids = 0
        for k in range(0, min(max_kids, remaining) + 1):
            kids = [node + str(j) for j in range(k)]
            yield from assign(queue[1:] + kids, done + kids, remaining - k)

    yield from sorted(assign(roots, roots, size - n_roots))


# ---------------------------------------------------------------------------
# Three-valued partial models
# ---------------------------------------------------------------------------

Atom = tuple[str, str, object]  # ("c", name, element) or ("r", name, pair)

_TRUE = True
_FALSE = False


@dataclass
class Ext3:
    certain: frozenset
    possible: frozenset


class PartialModel:
    """Kleene evaluation over a fixed shape and a partial bit assignment."""

    def __init__(
        self,
        elements: list[str],
        names: dict[str, str],
        concept_names: frozenset[str],
        role_names: frozenset[str],
        nominal_elements: frozenset[str],
    ):
        self.elements = sorted(elements)
        self.domain = frozenset(elements)
        self.names = names
        self.concept_names = concept_names
        self.role_names = role_names
        self.roots = frozenset(w for w in self.domain if len(w) == 1)
        self.child = frozenset(
            (w[:-1], w) for w in self.domain if len(w) > 1
        )
        self.diag = frozenset((d, d) for d in self.domain)
        self.structural_edge = (
            self.diag
            | self.child
            | frozenset((e, d) for d, e in self.child)
            | frozenset((d, e) for d in self.roots for e in self.roots)
        )
        up = frozenset((e, d) for d, e in self.child)
        self.allowed_pairs = frozenset(
            {(d, e) for d in self.roots for e in self.roots}
            | self.diag
            | self.child
            | up
            | {(d, e) for d in self.domain for e in self.domain
               if d in nominal_elements or e in nominal_elements}
        )
        self.sorted_pairs = sorted(self.allowed_pairs)
        self.assignment: dict[Atom, bool] = {}
        # memoisation is keyed by object identity: evaluation always walks
        # pre-built axiom and description objects, and deep structural hashing
        # of concepts dominates the profile otherwise
        self._memo: dict[int, object] = {}

    # -- assignment -------------------------------------------------------

    def set_atom(self, atom: Atom, value: bool) -> bool:
        """False when the write contradicts an existing value.  The caller is
        responsible for invalidating evaluation state afterwards."""
        old = self.assignment.get(atom)
        if old is not None:
            return old == value
        if atom[0] == "r" and value and atom[2] not in self.allowed_pairs:
            return False
        self.assignment[atom] = value
        return True

    def invalidate(self) -> None:
        self._memo.clear()

    def atom_value(self, atom: Atom) -> bool | None:
        if atom[0] == "r" and atom[2] not in self.allowed_pairs:
            return False
        return self.assignment.get(atom)

    def concept_atoms(self, name: str):
        return (("c", name, d) for d in self.elements)

    def role_atoms(self, name: str):
        return (("r", name, p) for p in self.sorted_pairs)

    def first_unknown_atom(self) -> Atom | None:
        for name in sorted(self.concept_names):
            for atom in self.concept_atoms(name):
                if self.atom_value(atom) is None:
                    return atom
        for name in sorted(self.role_names):
            for atom in self.role_atoms(name):
                if self.atom_value(atom) is None:
                    return atom
        return None

    # -- roles --------------------------------------------------------------

    def role_ext3(self, role: SimpleRole) -> Ext3:
        key = id(role)
        hit = self._memo.get(key)
        if hit is not None and hit[0] is role:
            return hit[1]
        out = self._role_ext3(role)
        # the key object is kept alive so its id cannot be recycled
        self._memo[key] = (role, out)
        return out

    def _role_ext3(self, role: SimpleRole) -> Ext3:
        if isinstance(role, RoleName):
            name = role.name
            if name == CHILD:
                return Ext3(self.child, self.child)
            if name == ID:
                return Ext3(self.diag, self.diag)
            if name == EDGE:
                certain = set(self.structural_edge)
                possible = set(self.structural_edge)
                for user in self.role_names:
                    ext = self.role_ext3(RoleName(user))
                    certain |= ext.certain | {(e, d) for d, e in ext.certain}
                    possible |= ext.possible | {(e, d) for d, e in ext.possible}
                return Ext3(frozenset(certain), frozenset(possible))
            if name not in self.role_names:
                return Ext3(frozenset(), frozenset())
            certain, possible = set(), set()
            for pair in self.allowed_pairs:
                value = self.assignment.get(("r", name, pair))
                if value is True:
                    certain.add(pair)
                    possible.add(pair)
                elif value is None:
                    possible.add(pair)
            return Ext3(frozenset(certain), frozenset(possible))
        if isinstance(role, Inverse):
            inner = self.role_ext3(role.arg)
            return Ext3(
                frozenset((e, d) for d, e in inner.certain),
                frozenset((e, d) for d, e in inner.possible),
            )
        left = self.role_ext3(role.left)
        right = self.role_ext3(role.right)
        if isinstance(role, RoleAnd):
            return Ext3(left.certain & right.certain, left.possible & right.possible)
        if isinstance(role, RoleOr):
            return Ext3(left.certain | right.certain, left.possible | right.possible)
        if isinstance(role, RoleDiff):
            return Ext3(left.certain - right.possible, left.possible - right.certain)
        raise TypeError(f"not a simple role: {role!r}")

    # -- concepts -------------------------------------------------------------

    def concept_ext3(self, c: Concept) -> Ext3:
        key = id(c)
        hit = self._memo.get(key)
        if hit is not None and hit[0] is c:
            return hit[1]
        out = self._concept_ext3(c)
        self._memo[key] = (c, out)
        return out

    def _concept_ext3(self, c: Concept) -> Ext3:
        if isinstance(c, Bottom):
            return Ext3(frozenset(), frozenset())
        if isinstance(c, Atomic):
            if c.name == ROOT:
                return Ext3(self.roots, self.roots)
            if c.name not in self.concept_names:
                return Ext3(frozenset(), frozenset())
            certain, possible = set(), set()
            for d in self.domain:
                value = self.assignment.get(("c", c.name, d))
                if value is True:
                    certain.add(d)
                    possible.add(d)
                elif value is None:
                    possible.add(d)
            return Ext3(frozenset(certain), frozenset(possible))
        if isinstance(c, Nominal):
            element = self.names.get(c.individual)
            if element is None:
                raise KeyError(f"individual {c.individual!r} has no element")
            ext = frozenset({element})
            return Ext3(ext, ext)
        if isinstance(c, Not):
            inner = self.concept_ext3(c.arg)
            return Ext3(self.domain - inner.possible, self.domain - inner.certain)
        if isinstance(c, And):
            left = self.concept_ext3(c.left)
            right = self.concept_ext3(c.right)
            return Ext3(left.certain & right.certain, left.possible & right.possible)
        if isinstance(c, Exists):
            pairs = self.role_ext3(c.role)
            filler = self.concept_ext3(c.filler)
            certain = frozenset(
                d for d, e in pairs.certain if e in filler.certain
            )
            possible = frozenset(
                d for d, e in pairs.possible if e in filler.possible
            )
            return Ext3(certain, possible)
        if isinstance(c, AtLeast):
            pairs = self.role_ext3(c.role)
            filler = self.concept_ext3(c.filler)
            certain, possible = set(), set()
            for d in self.domain:
                low = sum(
                    1
                    for (x, e) in pairs.certain
                    if x == d and e in filler.certain
                )
                high = sum(
                    1
                    for (x, e) in pairs.possible
                    if x == d and e in filler.possible
                )
                if low >= c.count:
                    certain.add(d)
                if high >= c.count:
                    possible.add(d)
            return Ext3(frozenset(certain), frozenset(possible))
        if isinstance(c, SelfLoop):
            pairs = self.role_ext3(c.role)
            return Ext3(
                frozenset(d for d in self.domain if (d, d) in pairs.certain),
                frozenset(d for d in self.domain if (d, d) in pairs.possible),
            )
        if isinstance(c, ExistsAuto):
            filler = self.concept_ext3(c.filler)
            return self._auto_reach(c.nfa, filler)
        raise TypeError(f"not a concept: {c!r}")

    def _auto_reach(self, nfa: Nfa, filler: Ext3) -> Ext3:
        """Sources with a certainly/possibly realised run into the filler; one
        adjacency build serves both modes."""
        certain_adj: dict[tuple[str, int], list[tuple[str, int]]] = {}
        possible_adj: dict[tuple[str, int], list[tuple[str, int]]] = {}
        for p, lab, q in nfa.transitions:
            if isinstance(lab, Test):
                ext = self.concept_ext3(lab.concept)
                for d in ext.possible:
                    node = (d, p)
                    nxt = (d, q)
                    possible_adj.setdefault(node, []).append(nxt)
                    if d in ext.certain:
                        certain_adj.setdefault(node, []).append(nxt)
            else:
                ext = self.role_ext3(lab)
                for d, e in ext.possible:
                    node = (d, p)
                    nxt = (e, q)
                    possible_adj.setdefault(node, []).append(nxt)
                    if (d, e) in ext.certain:
                        certain_adj.setdefault(node, []).append(nxt)

        def sweep(adjacency, targets) -> frozenset[str]:
            hits = set()
            for d in self.domain:
                start = (d, nfa.initial)
                seen = {start}
                todo = [start]
                while todo:
                    node = todo.pop()
                    if node[1] in nfa.final and node[0] in targets:
                        hits.add(d)
                        break
                    for nxt in adjacency.get(node, ()):
                        if nxt not in seen:
                            seen.add(nxt)
                            todo.append(nxt)
            return frozenset(hits)

        return Ext3(sweep(certain_adj, filler.certain), sweep(possible_adj, filler.possible))

    # -- blame: find an unknown atom responsible for indeterminacy ----------

    def blame_role(self, role: SimpleRole, pair: Pair) -> Atom | None:
        if isinstance(role, RoleName):
            if role.name in self.role_names:
                atom = ("r", role.name, pair)
                if self.atom_value(atom) is None:
                    return atom
            if role.name == EDGE:
                for user in sorted(self.role_names):
                    for candidate in (pair, (pair[1], pair[0])):
                        atom = ("r", user, candidate)
                        if self.atom_value(atom) is None:
                            return atom
            return None
        if isinstance(role, Inverse):
            return self.blame_role(role.arg, (pair[1], pair[0]))
        return self.blame_role(role.left, pair) or self.blame_role(role.right, pair)

    def blame(self, c: Concept, element: str) -> Atom | None:
        """An unknown atom whose value the undetermined membership of
        ``element`` in ``c`` depends on."""
        if isinstance(c, Atomic):
            if c.name in self.concept_names:
                atom = ("c", c.name, element)
                if self.atom_value(atom) is None:
                    return atom
            return None
        if isinstance(c, Not):
            return self.blame(c.arg, element)
        if isinstance(c, And):
            for side in (c.left, c.right):
                if self.membership(side, element) is None:
                    found = self.blame(side, element)
                    if found is not None:
                        return found
            return None
        if isinstance(c, (Exists, AtLeast)):
            pairs = self.role_ext3(c.role)
            filler = self.concept_ext3(c.filler)
            for d, e in sorted(pairs.possible):
                if d != element or e not in filler.possible:
                    continue
                if (d, e) not in pairs.certain:
                    found = self.blame_role(c.role, (d, e))
                    if found is not None:
                        return found
                if e not in filler.certain:
                    found = self.blame(c.filler, e)
                    if found is not None:
                        return found
            return None
        if isinstance(c, SelfLoop):
            return self.blame_role(c.role, (element, element))
        if isinstance(c, ExistsAuto):
            return self._blame_auto(c, element)
        return None

    def _blame_auto(self, c: ExistsAuto, element: str) -> Atom | None:
        filler = self.concept_ext3(c.filler)
        seen = {(element, c.nfa.initial)}
        todo = [(element, c.nfa.initial)]
        while todo:
            d, state = todo.pop()
            if state in c.nfa.final and d in filler.possible and d not in filler.certain:
                found = self.blame(c.filler, d)
                if found is not None:
                    return found
            for p, lab, q in c.nfa.transitions:
                if p != state:
                    continue
                if isinstance(lab, Test):
                    ext = self.concept_ext3(lab.concept)
                    if d in ext.possible:
                        if d not in ext.certain:
                            found = self.blame(lab.concept, d)
                            if found is not None:
                                return found
                        if (d, q) not in seen:
                            seen.add((d, q))
                            todo.append((d, q))
                else:
                    ext = self.role_ext3(lab)
                    for x, e in sorted(ext.possible):
                        if x != d:
                            continue
                        if (x, e) not in ext.certain:
                            found = self.blame_role(lab, (x, e))
                            if found is not None:
                                return found
                        if (e, q) not in seen:
                            seen.add((e, q))
                            todo.append((e, q))
        return None

    def blame_axiom(self, ax) -> Atom | None:
        if isinstance(ax, (Gci, ConceptEq)):
            left = ax.sub if isinstance(ax, Gci) else ax.left
            right = ax.sup if isinstance(ax, Gci) else ax.right
            left_ext = self.concept_ext3(left)
            right_ext = self.concept_ext3(right)
            for d in sorted(self.domain):
                undecided_left = d in left_ext.possible and d not in left_ext.certain
                undecided_right = d in right_ext.possible and d not in right_ext.certain
                if undecided_left:
                    found = self.blame(left, d)
                    if found is not None:
                        return found
                if undecided_right:
                    found = self.blame(right, d)
                    if found is not None:
                        return found
            return None
        if isinstance(ax, (RoleIncl, RoleEq)):
            left = RoleName(ax.name) if isinstance(ax, RoleEq) else ax.sub
            right = ax.role if isinstance(ax, RoleEq) else ax.sup
            for side in (left, right):
                ext = self.role_ext3(side)
                for pair in sorted(ext.possible - ext.certain):
                    found = self.blame_role(side, pair)
                    if found is not None:
                        return found
            return None
        if isinstance(ax, ConceptAssert):
            return self.blame(Atomic(ax.concept_name), self.names[ax.individual])
        if isinstance(ax, RoleAssert):
            pair = (self.names[ax.subject], self.names[ax.object])
            return self.blame_role(RoleName(ax.role_name), pair)
        if isinstance(ax, NegAssert):
            return self.blame_axiom(ax.inner)
        return None

    # -- membership and axioms ---------------------------------------------

    def membership(self, c: Concept, element: str) -> bool | None:
        ext = self.concept_ext3(c)
        if element in ext.certain:
            return True
        if element not in ext.possible:
            return False
        return None

    def axiom_value(self, ax) -> bool | None:
        if isinstance(ax, Gci):
            left = self.concept_ext3(ax.sub)
            right = self.concept_ext3(ax.sup)
            if left.certain - right.possible:
                return False
            if left.possible <= right.certain:
                return True
            return None
        if isinstance(ax, ConceptEq):
            left = self.concept_ext3(ax.left)
            right = self.concept_ext3(ax.right)
            if left.certain - right.possible or right.certain - left.possible:
                return False
            if left.possible <= right.certain and right.possible <= left.certain:
                return True
            return None
        if isinstance(ax, RoleIncl):
            left = self.role_ext3(ax.sub)
            right = self.role_ext3(ax.sup)
            if left.certain - right.possible:
                return False
            if left.possible <= right.certain:
                return True
            return None
        if isinstance(ax, RoleEq):
            left = self.role_ext3(RoleName(ax.name))
            right = self.role_ext3(ax.role)
            if left.certain - right.possible or right.certain - left.possible:
                return False
            if left.possible <= right.certain and right.possible <= left.certain:
                return True
            return None
        if isinstance(ax, ConceptAssert):
            return self.membership(Atomic(ax.concept_name), self.names[ax.individual])
        if isinstance(ax, RoleAssert):
            pair = (self.names[ax.subject], self.names[ax.object])
            ext = self.role_ext3(RoleName(ax.role_name))
            if pair in ext.certain:
                return True
            if pair not in ext.possible:
                return False
            return None
        if isinstance(ax, EqAssert):
            return self.names[ax.left] == self.names[ax.right]
        if isinstance(ax, NegAssert):
            inner = self.axiom_value(ax.inner)
            return None if inner is None else not inner
        raise TypeError(f"not an axiom: {ax!r}")

    # -- completion ----------------------------------------------------------

    def least_model(self, branching: int | None = None) -> Interpretation:
        """Complete all unknown bits to false and build the interpretation."""
        concepts = {
            name: frozenset(
                d
                for d in self.domain
                if self.assignment.get(("c", name, d)) is True
            )
            for name in self.concept_names
        }
        roles = {
            name: frozenset(
                pair
                for pair in self.allowed_pairs
                if self.assignment.get(("r", name, pair)) is True
            )
            for name in self.role_names
        }
        return quasi_forest(
            self.domain, dict(self.names), concepts, roles,
            root_clique=True, branching=branching,
        )


# ---------------------------------------------------------------------------
# The solver
# ---------------------------------------------------------------------------


@dataclass
class _AxiomInfo:
    axiom: object
    concept_vocab: frozenset[str]
    role_vocab: frozenset[str]


def _axiom_vocab(ax) -> tuple[frozenset[str], frozenset[str]]:
    from .syntax import (
        concepts_of_axiom,
        role_names_of_role,
        roles_of_axiom,
        roles_of_concept,
        subconcepts,
    )

    cnames: set[str] = set()
    rnames: set[str] = set()
    if isinstance(ax, ConceptAssert):
        cnames.add(ax.concept_name)
    if isinstance(ax, RoleAssert):
        rnames.add(ax.role_name)
    if isinstance(ax, NegAssert):
        inner_c, inner_r = _axiom_vocab(ax.inner)
        cnames |= inner_c
        rnames |= inner_r
    for c in concepts_of_axiom(ax):
        for sub in subconcepts(c):
            if isinstance(sub, Atomic):
                cnames.add(sub.name)
        for role in roles_of_concept(c):
            rnames |= role_names_of_role(role)
    if isinstance(ax, (RoleIncl, RoleEq)):
        for role in roles_of_axiom(ax):
            rnames |= role_names_of_role(role)
    return frozenset(cnames), frozenset(rnames)


class ShapeSolver:
    """Backtracking bit search over one fixed shape.

    Kleene truth is monotone under refinement, so axioms that become
    definitely true are settled for the rest of the branch and never
    re-evaluated below it.
    """

    def __init__(
        self,
        kb: KnowledgeBase,
        pm: PartialModel,
        budget_ref: list[int],
        needs_refinement=None,
        deadline: float | None = None,
    ):
        self.kb = kb
        self.pm = pm
        self.budget_ref = budget_ref
        self.needs_refinement = needs_refinement
        self.deadline = deadline
        self.axioms = []
        for ax in kb.abox + kb.tbox:
            cv, rv = _axiom_vocab(ax)
            if EDGE in rv:
                rv = rv | pm.role_names
            self.axioms.append(_AxiomInfo(ax, cv, rv))

    def _tick(self) -> None:
        self.budget_ref[0] -= 1
        if self.budget_ref[0] <= 0:
            raise BudgetExceeded()
        if self.deadline is not None and self.budget_ref[0] % 512 == 0:
            import time

            if time.monotonic() > self.deadline:
                raise BudgetExceeded()

    def _push_membership(
        self, c: Concept, d: str, value: bool, forced: list[tuple[Atom, bool]]
    ) -> None:
        """Propagate a required membership down the boolean skeleton."""
        pm = self.pm
        if isinstance(c, Atomic) and c.name in pm.concept_names:
            if pm.atom_value(("c", c.name, d)) is None:
                forced.append((("c", c.name, d), value))
            return
        if isinstance(c, Not):
            self._push_membership(c.arg, d, not value, forced)
            return
        if isinstance(c, And):
            if value:
                self._push_membership(c.left, d, True, forced)
                self._push_membership(c.right, d, True, forced)
            else:
                left = pm.membership(c.left, d)
                right = pm.membership(c.right, d)
                if left is True and right is None:
                    self._push_membership(c.right, d, False, forced)
                elif right is True and left is None:
                    self._push_membership(c.left, d, False, forced)

    def _force_from(self, ax, forced: list[tuple[Atom, bool]]) -> None:
        pm = self.pm
        if isinstance(ax, ConceptEq) and isinstance(ax.left, Atomic):
            if ax.left.name in pm.concept_names:
                for d in pm.domain:
                    rhs = pm.membership(ax.right, d)
                    if rhs is not None and pm.atom_value(("c", ax.left.name, d)) is None:
                        forced.append((("c", ax.left.name, d), rhs))
                    lhs = pm.atom_value(("c", ax.left.name, d))
                    if lhs is not None and rhs is None:
                        self._push_membership(ax.right, d, lhs, forced)
        if isinstance(ax, ConceptEq) and isinstance(ax.right, Atomic):
            if ax.right.name in pm.concept_names:
                for d in pm.domain:
                    lhs = pm.membership(ax.left, d)
                    if lhs is not None and pm.atom_value(("c", ax.right.name, d)) is None:
                        forced.append((("c", ax.right.name, d), lhs))
                    rhs = pm.atom_value(("c", ax.right.name, d))
                    if rhs is not None and lhs is None:
                        self._push_membership(ax.left, d, rhs, forced)
        if isinstance(ax, RoleEq) and ax.name in pm.role_names:
            rhs = pm.role_ext3(ax.role)
            for pair in pm.sorted_pairs:
                if pm.atom_value(("r", ax.name, pair)) is None:
                    if pair in rhs.certain:
                        forced.append((("r", ax.name, pair), True))
                    elif pair not in rhs.possible:
                        forced.append((("r", ax.name, pair), False))
        if isinstance(ax, Gci):
            sub = pm.concept_ext3(ax.sub)
            sup = pm.concept_ext3(ax.sup)
            for d in sub.certain:
                if d not in sup.certain:
                    self._push_membership(ax.sup, d, True, forced)
            for d in pm.domain - sup.possible:
                if d in sub.possible:
                    self._push_membership(ax.sub, d, False, forced)

    def _propagate(self, settled: set[int], dirty: frozenset[str] | None) -> bool | None:
        """False on contradiction, True when every axiom definitely holds,
        None when branching is needed.  Newly settled axioms are recorded.

        Only axioms whose vocabulary meets the dirty names are re-evaluated;
        an untouched open axiom keeps its undetermined status."""
        pm = self.pm
        while True:
            self._tick()
            forced: list[tuple[Atom, bool]] = []
            for idx, info in enumerate(self.axioms):
                if idx in settled:
                    continue
                if dirty is not None and not (
                    dirty & info.concept_vocab or dirty & info.role_vocab
                ):
                    continue
                value = pm.axiom_value(info.axiom)
                if value is False:
                    return False
                if value is True:
                    settled.add(idx)
                    continue
                self._force_from(info.axiom, forced)
            if len(settled) == len(self.axioms):
                return True
            if not forced:
                return None
            applied = set()
            for atom, value in forced:
                if not pm.set_atom(atom, value):
                    return False
                applied.add(atom[1])
            pm.invalidate()
            dirty = frozenset(applied)

    def _branch_atom(self, settled: set[int]) -> Atom | None:
        # blame an atom the first open axiom's indeterminacy depends on, so
        # every split makes progress; fall back to a vocabulary scan
        pm = self.pm
        fallback: Atom | None = None
        for idx, info in enumerate(self.axioms):
            if idx in settled:
                continue
            found = pm.blame_axiom(info.axiom)
            if found is not None:
                return found
            if fallback is None:
                for name in sorted(info.role_vocab & pm.role_names):
                    for atom in pm.role_atoms(name):
                        if pm.atom_value(atom) is None:
                            fallback = atom
                            break
                    if fallback:
                        break
                if fallback is None:
                    for name in sorted(info.concept_vocab & pm.concept_names):
                        for atom in pm.concept_atoms(name):
                            if pm.atom_value(atom) is None:
                                fallback = atom
                                break
                        if fallback:
                            break
        return fallback

    def _first_unknown(self) -> Atom | None:
        return self.pm.first_unknown_atom()

    def solutions(
        self,
        settled: frozenset[int] = frozenset(),
        dirty: frozenset[str] | None = None,
        cursor: int = 0,
    ):
        """Yield the partial model at every solution cube, deterministically.

        ``needs_refinement(pm, cursor)`` may return ``(atom, cursor')`` to
        split on an atom when the cube is not yet specific enough for the
        caller's derived fields; crisp fields stay crisp under refinement, so
        the advancing cursor is sound to thread down a branch."""
        local = set(settled)
        status = self._propagate(local, dirty)
        if status is False:
            return
        if status is True:
            atom = None
            if self.needs_refinement is not None:
                atom, cursor = self.needs_refinement(self.pm, cursor)
            if atom is None:
                yield self.pm
                return
        else:
            atom = self._branch_atom(local)
            if atom is None:
                return
        snapshot = dict(self.pm.assignment)
        frozen = frozenset(local)
        touched = frozenset({atom[1]})
        for value in (False, True):
            self.pm.assignment = dict(snapshot)
            self.pm.invalidate()
            if self.pm.set_atom(atom, value):
                self.pm.invalidate()
                yield from self.solutions(frozen, touched, cursor)
        self.pm.assignment = dict(snapshot)
        self.pm.invalidate()


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def _fresh_individual(kb: KnowledgeBase) -> str:
    base = "a"
    k = 0
    while True:
        candidate = f"{base}{k}" if k else base
        if candidate not in kb.individuals:
            return candidate
        k += 1


def _ensure_individual(kb: KnowledgeBase) -> KnowledgeBase:
    if kb.individuals:
        return kb
    fresh = _fresh_individual(kb)
    return make_kb(kb.abox + (EqAssert(fresh, fresh),), kb.tbox)


def _pin_abox(pm: PartialModel, kb: KnowledgeBase) -> bool:
    """Assert ABox literals directly as atom pins where they denote bits."""
    for ax in kb.abox:
        polarity = True
        inner = ax
        if isinstance(ax, NegAssert):
            polarity = False
            inner = ax.inner
        if isinstance(inner, ConceptAssert):
            if inner.concept_name == ROOT:
                value = pm.names[inner.individual] in pm.roots
                if value != polarity:
                    return False
            elif inner.concept_name in pm.concept_names:
                atom = ("c", inner.concept_name, pm.names[inner.individual])
                if not pm.set_atom(atom, polarity):
                    return False
        elif isinstance(inner, RoleAssert):
            pair = (pm.names[inner.subject], pm.names[inner.object])
            if inner.role_name in RESERVED_ROLES:
                continue  # evaluated structurally
            if inner.role_name in pm.role_names:
                if polarity and pair not in pm.allowed_pairs:
                    return False
                if pair in pm.allowed_pairs and not pm.set_atom(
                    ("r", inner.role_name, pair), polarity
                ):
                    return False
    return True


def candidate_shapes(kb: KnowledgeBase, bounds: SearchBounds, childless=frozenset()):
    """(names, elements) pairs in search order: size first, then partition."""
    kb = _ensure_individual(kb)
    assignments = list(root_assignments(kb, bounds.max_roots))
    for size in range(1, bounds.max_domain + 1):
        for names in assignments:
            n_roots = len(set(names.values()))
            pinned = frozenset(
                names[x] for x in childless if x in names
            )
            for elements in forest_shapes(n_roots, size, bounds, pinned):
                yield names, elements


def brute_force_sat(
    kb: KnowledgeBase,
    bounds: SearchBounds,
    childless: frozenset[str] = frozenset(),
    reject=None,
    budget: int = 400_000,
) -> SearchOutcome:
    """First quasi-forest model within bounds in canonical search order.

    ``reject`` filters found models (used for countermodel search); rejected
    cubes are skipped, which is sound for monotone rejection criteria.  The
    result distinguishes exhaustion within bounds from an exceeded budget.
    """
    kb = _ensure_individual(kb)
    concept_names = concept_names_of_kb(kb)
    role_names = role_names_of_kb(kb)
    budget_ref = [budget]
    spent_before = budget
    try:
        for names, elements in candidate_shapes(kb, bounds, childless):
            nominal_elements = frozenset(
                names[o] for o in kb.ind_t if o in names
            )
            pm = PartialModel(
                elements, names, concept_names, role_names, nominal_elements
            )
            if not _pin_abox(pm, kb):
                continue
            solver = ShapeSolver(kb, pm, budget_ref)
            for solution in solver.solutions():
                model = solution.least_model(branching=bounds.max_branching)
                report = is_quasi_forest(
                    model, kb.ind_a, kb.ind_t, branching=bounds.max_branching
                )
                if not report.ok or not check_model(model, kb):
                    raise AssertionError(
                        f"solver produced an invalid model: {report.violations}"
                    )
                if reject is not None and reject(model):
                    continue
                return SearchOutcome(SAT, model, spent_before - budget_ref[0])
    except BudgetExceeded:
        return SearchOutcome(BUDGET, None, spent_before)
    return SearchOutcome(UNSAT, None, spent_before - budget_ref[0])
