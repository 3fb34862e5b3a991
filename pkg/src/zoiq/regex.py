"""Regular expressions with tests, compiled to epsilon-free NFAs."""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import Concept, Label, Nfa, SimpleRole, Test


class Regex:
    __slots__ = ()


@dataclass(frozen=True)
class Sym(Regex):
    role: SimpleRole


@dataclass(frozen=True)
class TestSym(Regex):
    __test__ = False  # not a pytest class

    concept: Concept


@dataclass(frozen=True)
class Cat(Regex):
    left: Regex
    right: Regex


@dataclass(frozen=True)
class Alt(Regex):
    left: Regex
    right: Regex


@dataclass(frozen=True)
class Star(Regex):
    arg: Regex


@dataclass(frozen=True)
class Plus(Regex):
    arg: Regex


def regex_size(re_ast: Regex) -> int:
    if isinstance(re_ast, (Sym, TestSym)):
        return 1
    if isinstance(re_ast, (Cat, Alt)):
        return 1 + regex_size(re_ast.left) + regex_size(re_ast.right)
    return 1 + regex_size(re_ast.arg)


_EPS = object()


class _Builder:
    """Thompson construction over mutable state, epsilon-eliminated at the end."""

    def __init__(self) -> None:
        self.n = 0
        self.edges: list[tuple[int, object, int]] = []

    def fresh(self) -> int:
        self.n += 1
        return self.n - 1

    def add(self, p: int, label: object, q: int) -> None:
        self.edges.append((p, label, q))

    def build(self, re_ast: Regex) -> tuple[int, int]:
        """Returns (start, accept) for the fragment."""
        if isinstance(re_ast, Sym):
            s, t = self.fresh(), self.fresh()
            self.add(s, re_ast.role, t)
            return s, t
        if isinstance(re_ast, TestSym):
            s, t = self.fresh(), self.fresh()
            self.add(s, Test(re_ast.concept), t)
            return s, t
        if isinstance(re_ast, Cat):
            s1, t1 = self.build(re_ast.left)
            s2, t2 = self.build(re_ast.right)
            self.add(t1, _EPS, s2)
            return s1, t2
        if isinstance(re_ast, Alt):
            s1, t1 = self.build(re_ast.left)
            s2, t2 = self.build(re_ast.right)
            s, t = self.fresh(), self.fresh()
            self.add(s, _EPS, s1)
            self.add(s, _EPS, s2)
            self.add(t1, _EPS, t)
            self.add(t2, _EPS, t)
            return s, t
        if isinstance(re_ast, Star):
            s1, t1 = self.build(re_ast.arg)
            s = self.fresh()
            self.add(s, _EPS, s1)
            self.add(t1, _EPS, s)
            return s, s
        if isinstance(re_ast, Plus):
            s1, t1 = self.build(re_ast.arg)
            self.add(t1, _EPS, s1)
            return s1, t1
        raise TypeError(f"not a regex: {re_ast!r}")


def compile_regex(re_ast: Regex) -> Nfa:
    """Language-equivalent epsilon-free NFA; reachable states are renumbered
    so the construction is deterministic."""
    builder = _Builder()
    start, accept = builder.build(re_ast)

    eps: dict[int, set[int]] = {q: {q} for q in range(builder.n)}
    for p, lab, q in builder.edges:
        if lab is _EPS:
            eps[p].add(q)
    # transitive closure of epsilon edges
    changed = True
    while changed:
        changed = False
        for q in range(builder.n):
            extra = set()
            for mid in eps[q]:
                extra |= eps[mid]
            if not extra <= eps[q]:
                eps[q] |= extra
                changed = True

    moves: dict[int, list[tuple[Label, int]]] = {q: [] for q in range(builder.n)}
    for p, lab, q in builder.edges:
        if lab is not _EPS:
            moves[p].append((lab, q))

    # forward-reachability over eps*-then-symbol moves
    reachable = {start}
    todo = [start]
    edge_out: dict[int, list[tuple[Label, int]]] = {}
    while todo:
        p = todo.pop()
        out: list[tuple[Label, int]] = []
        for mid in eps[p]:
            out.extend(moves[mid])
        edge_out[p] = out
        for _, q in out:
            if q not in reachable:
                reachable.add(q)
                todo.append(q)

    order = sorted(reachable)
    index = {q: i for i, q in enumerate(order)}
    transitions = frozenset(
        (index[p], lab, index[q]) for p in order for lab, q in edge_out[p]
    )
    final = frozenset(index[q] for q in order if accept in eps[q])
    return Nfa(len(order), index[start], final, transitions, source=re_ast)


def role_regex(role: SimpleRole) -> Nfa:
    return compile_regex(Sym(role))
