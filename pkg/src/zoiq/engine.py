"""End-to-end decision procedures.

Satisfiability is decided by searching for a consistent summary: enumerate
equality patterns and clearing layers (pruned by the local axioms), ask a
per-TBox catalog which subtree blocks are realisable for each root in its
clearing context, derive the decoration roles and reachability labels from
the chosen blocks, and check the label-versus-virtual-satisfaction matching
conditions.  The catalog memoises bounded ghost-subtree searches keyed by the
clearing context, and can be materialised up front so the per-assertion-set
phase performs no subtree search at all.

Verdicts are honest about bounds: ``sat`` always carries a re-verifiable
certificate, ``unsat`` is reported only when every failure was independent of
the subtree search bounds, and everything else is ``unknown``.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

from . import decorations as dec
from . import vocab
from .consistency import (
    SubtreeOracle,
    Summary,
    TBoxSetup,
    clearing_consistent,
    completeness_gaps,
    relativised_tbox,
    single_final_state,
    summary_vocabulary,
    tbox_setup,
)
from .decorations import bucket
from .normalform import normalize
from .search import (
    BudgetExceeded,
    PartialModel,
    ShapeSolver,
    forest_shapes,
    partitions,
    partition_space_complete,
    root_assignments,
)
from .semantics import (
    Evaluator,
    Interpretation,
    SearchBounds,
    quasi_forest,
    satisfies_query,
)
from .syntax import (
    AtLeast,
    Atomic,
    Axiom,
    CHILD,
    ConceptAssert,
    ConjunctiveQuery,
    EDGE,
    EqAssert,
    ExistsAuto,
    GHOST,
    Gci,
    KnowledgeBase,
    NegAssert,
    Nfa,
    ROOT,
    RoleAnd,
    RoleAssert,
    RoleName,
    TOP,
    concept_names_of_kb,
    fragment_of,
    make_kb,
    role_names_of_kb,
)


@dataclass
class EngineConfig:
    wall_clock_limit: float | None = None  # seconds per decision, None = off
    clearing_budget: int = 250_000
    subtree_extra_nodes: int = 2  # ghost subtree size beyond the clearing
    subtree_branching: int = 2
    subtree_depth: int = 2
    subtree_budget: int = 200_000
    eager_context_cap: int = 4096
    max_segment_nodes: int = 8
    child_pin_policy: str = "all-shallow"

    def subtree_bounds_for(self, n_clearing: int) -> SearchBounds:
        return SearchBounds(
            max_roots=max(1, n_clearing),
            max_branching=self.subtree_branching,
            max_depth=self.subtree_depth,
            max_domain=n_clearing + self.subtree_extra_nodes,
        )


@dataclass
class SatVerdict:
    status: str  # "sat" | "unsat" | "unknown"
    certificate: Summary | None = None
    reason: str = ""

    @property
    def exit_code(self) -> int:
        return {"sat": 0, "unsat": 1, "unknown": 2}[self.status]


# ---------------------------------------------------------------------------
# Ghost-block catalog
# ---------------------------------------------------------------------------

Pattern = tuple[tuple[str, ...], ...]
ContextPins = frozenset  # of ((kind, ...), bool) items over ghost/nominal names


def _canonical_pattern(classes) -> Pattern:
    return tuple(sorted(tuple(sorted(block)) for block in classes))


@dataclass(frozen=True)
class Block:
    """What one bounded ghost-subtree solution promises to the clearing.

    ``context`` lists the clearing bits the witnessing model cube fixed; a
    summary can carry this block only if it agrees on them."""

    cond: tuple[tuple[str, bool], ...]          # decoration-concept name -> bit
    thresholds: tuple[tuple[tuple, int | None], ...]  # (role, n, kind) -> bucket
    context: tuple[tuple[tuple, bool], ...]     # crisp clearing bits incl. reach
    ghost_childless: bool

    def cond_map(self) -> dict[str, bool]:
        return dict(self.cond)

    def threshold_map(self) -> dict[tuple, int | None]:
        return dict(self.thresholds)

    def context_map(self) -> dict[tuple, bool]:
        return dict(self.context)


class GhostCatalog:
    """Realisable subtree blocks per equality pattern and clearing context.

    Each query runs (or recalls) a bounded search over ghost-rooted shapes
    with the clearing bits pinned; nominal roots stay bare, which loses no
    blocks because the relativised axioms survive removing nominal subtrees.
    """

    def __init__(self, setup: TBoxSetup, config: EngineConfig):
        self.setup = setup
        self.config = config
        self.memo: dict = {}
        self.searches = 0
        self.deadline: float | None = None
        # fields are only tracked for state pairs the automaton can connect
        # with at least one step; all other conditions are constantly false
        from .automata import connected_state_pairs

        self.block_items = []
        for auto_id, nfa in setup.automata:
            connected = connected_state_pairs(nfa)
            for item in dec.decoration_concepts(auto_id, nfa, setup.ind_t):
                if item.family == vocab.D_FAM:
                    continue
                if (item.q, item.qp) in connected:
                    self.block_items.append((nfa, item))
        self._count_roles = {
            (role, n): RoleAnd(RoleName(role), RoleName(CHILD))
            for role, n in setup.countings
        }
        self._plain_roles = {role: RoleName(role) for role, _ in setup.countings}
        self.desc_cache = {
            item.name: dec.desc_concept(nfa, item) for nfa, item in self.block_items
        }
        skeleton = KnowledgeBase(
            (), tuple(relativised_tbox(setup)), frozenset(), setup.ind_t
        )
        self.tbox_kb = skeleton
        self.concept_names = concept_names_of_kb(skeleton)
        self.role_names = role_names_of_kb(skeleton)
        self.individuals = tuple(sorted(setup.ind_t | {GHOST}))
        self.reach_names = frozenset(
            name
            for auto_id, nfa in setup.automata
            for name in dec.reach_concepts(auto_id, nfa)
        )

    # -- public ----------------------------------------------------------

    def query(
        self, pattern: Pattern, childless: bool, pins: ContextPins
    ) -> tuple[list[Block], bool]:
        key = (pattern, childless, pins)
        hit = self.memo.get(key)
        if hit is None:
            hit = self._search(pattern, childless, pins)
            self.memo[key] = hit
        return hit

    def context_space_size(self) -> int:
        k = len(self.individuals)
        c_bits = len(self.context_concept_names()) * k
        r_bits = len(self.role_names) * k * k
        return 2 ** (c_bits + r_bits)

    def context_concept_names(self):
        return sorted(
            (self.concept_names - self.reach_names)
            | frozenset()
        )

    def materialize(self) -> bool:
        """Precompute every context's blocks; False when over the cap."""
        if self.context_space_size() > self.config.eager_context_cap:
            return False
        c_slots = [
            ("c", name, x)
            for name in self.context_concept_names()
            for x in self.individuals
        ]
        r_slots = [
            ("r", name, x, y)
            for name in sorted(self.role_names)
            for x in self.individuals
            for y in self.individuals
        ]
        slots = c_slots + r_slots
        for blocks in partitions(list(self.individuals)):
            pattern = _canonical_pattern(blocks)
            for bits in itertools.product([False, True], repeat=len(slots)):
                pins = frozenset(zip(slots, bits))
                self.query(pattern, False, pins)
        return True

    # -- the bounded search ------------------------------------------------

    def _search(
        self, pattern: Pattern, childless: bool, pins: ContextPins
    ) -> tuple[list[Block], bool]:
        self.searches += 1
        setup = self.setup
        ordered = sorted(pattern, key=lambda b: b[0])
        names = {}
        for digit, block in enumerate(ordered):
            for x in block:
                names[x] = str(digit)
        ghost_el = names[GHOST]
        nominal_elements = frozenset(names[o] for o in setup.ind_t)
        pinned_roots = frozenset(
            str(d) for d in range(len(ordered))
            if str(d) != ghost_el or childless
        )
        conclusive = True
        found: dict[Block, None] = {}
        budget_ref = [self.config.subtree_budget]
        bounds = self.config.subtree_bounds_for(len(ordered))
        try:
            for size in range(len(ordered), bounds.max_domain + 1):
                for elements in forest_shapes(len(ordered), size, bounds, pinned_roots):
                    if self.deadline is not None and time.monotonic() > self.deadline:
                        raise BudgetExceeded()
                    pm = PartialModel(
                        elements, names, self.concept_names, self.role_names,
                        nominal_elements,
                    )
                    if not self._apply_pins(pm, names, pins):
                        continue
                    solver = ShapeSolver(
                        self.tbox_kb, pm, budget_ref,
                        needs_refinement=self._needs_refinement(ghost_el, names),
                        deadline=self.deadline,
                    )
                    for solution in solver.solutions():
                        block = self._extract(solution, ghost_el, names)
                        found.setdefault(block)
        except BudgetExceeded:
            conclusive = False
        blocks = sorted(found, key=repr)
        return blocks, conclusive

    def _apply_pins(self, pm: PartialModel, names, pins: ContextPins) -> bool:
        for slot, value in sorted(pins, key=repr):
            if slot[0] == "c":
                _, name, x = slot
                if name not in pm.concept_names:
                    continue  # untracked names are unconstrained here
                if not pm.set_atom(("c", name, names[x]), value):
                    return False
            else:
                _, name, x, y = slot
                if name not in pm.role_names:
                    if value:
                        return False
                    continue
                pair = (names[x], names[y])
                if value and pair not in pm.allowed_pairs:
                    return False
                if pair in pm.allowed_pairs and not pm.set_atom(("r", name, pair), value):
                    return False
        pm.invalidate()
        return True

    def _cone(self, concept) -> tuple[frozenset[str], frozenset[str]]:
        """Names a concept's truth can depend on, for targeted refinement."""
        from .syntax import Atomic, role_names_of_role, roles_of_concept, subconcepts

        cnames = frozenset(
            sub.name for sub in subconcepts(concept) if isinstance(sub, Atomic)
        )
        rnames: set[str] = set()
        for role in roles_of_concept(concept):
            rnames |= role_names_of_role(role)
        if EDGE in rnames:
            rnames |= set(self.role_names)
        return cnames, frozenset(rnames)

    def _cone_atom(self, pm: PartialModel, cnames, rnames):
        for name in sorted(rnames & pm.role_names):
            for atom in pm.role_atoms(name):
                if pm.atom_value(atom) is None:
                    return atom
        for name in sorted(cnames & pm.concept_names):
            for atom in pm.concept_atoms(name):
                if pm.atom_value(atom) is None:
                    return atom
        return None

    def _needs_refinement(self, ghost_el: str, names):
        """Field-by-field crisping with a monotone cursor: once a field is
        crisp it stays crisp, so verified prefixes are skipped down a branch."""
        fields: list = [("cond", item) for _, item in self.block_items]
        fields += [("count", role, n) for role, n in self.setup.countings]
        nominal_elements = [names[o] for o in sorted(self.setup.ind_t)]

        def count_blame(pm: PartialModel, role: str) -> tuple | None:
            # only pairs from the ghost to its children or from a nominal
            # into the ghost's subtree move the counts
            for pair in pm.sorted_pairs:
                d, e = pair
                from_ghost_child = d == ghost_el and e.startswith(ghost_el) and len(e) == len(ghost_el) + 1
                from_nominal = (
                    d in nominal_elements
                    and e.startswith(ghost_el)
                    and len(e) > len(ghost_el)
                )
                if (from_ghost_child or from_nominal) and pm.atom_value(("r", role, pair)) is None:
                    return ("r", role, pair)
            return None

        def refine(pm: PartialModel, cursor: int):
            for idx in range(cursor, len(fields)):
                spec = fields[idx]
                if spec[0] == "cond":
                    concept = self.desc_cache[spec[1].name]
                    if pm.membership(concept, ghost_el) is None:
                        atom = pm.blame(concept, ghost_el)
                        return (atom or pm.first_unknown_atom()), idx
                else:
                    _, role, n = spec
                    picks = _ghost_counts3(
                        pm, ghost_el, role, n, self.setup.ind_t, names,
                        self._count_roles[(role, n)], self._plain_roles[role],
                    )
                    if picks is None:
                        atom = count_blame(pm, role)
                        return (atom or pm.first_unknown_atom()), idx
            return None, len(fields)

        return refine

    def _extract(self, pm: PartialModel, ghost_el: str, names) -> Block:
        cond = []
        for _, item in self.block_items:
            value = pm.membership(self.desc_cache[item.name], ghost_el)
            assert value is not None
            cond.append((item.name, value))
        thresholds = []
        for role, n in self.setup.countings:
            picks = _ghost_counts3(
                pm, ghost_el, role, n, self.setup.ind_t, names,
                self._count_roles[(role, n)], self._plain_roles[role],
            )
            assert picks is not None
            for kind, threshold in sorted(picks.items()):
                thresholds.append(((role, n, kind), threshold.exact))
        context = []
        for name in sorted(self.concept_names):
            for x in self.individuals:
                value = pm.atom_value(("c", name, names[x]))
                if value is not None:
                    context.append((("c", name, x), value))
        for name in sorted(self.role_names):
            for x in self.individuals:
                for y in self.individuals:
                    value = pm.atom_value(("r", name, (names[x], names[y])))
                    if value is not None:
                        context.append((("r", name, x, y), value))
        ghost_childless = not any(
            len(w) == len(ghost_el) + 1 and w.startswith(ghost_el) for w in pm.domain
        )
        return Block(
            tuple(sorted(cond)), tuple(thresholds), tuple(sorted(context)), ghost_childless
        )


def _ghost_counts3(
    pm: PartialModel,
    ghost_el: str,
    role: str,
    n: int,
    ind_t,
    names,
    child_role=None,
    plain_role=None,
):
    """Three-valued child and descendant counts at the ghost root; None when
    some count is still undetermined."""
    child_ext = pm.role_ext3(child_role or RoleAnd(RoleName(role), RoleName(CHILD)))
    low = sum(1 for d, e in child_ext.certain if d == ghost_el)
    high = sum(1 for d, e in child_ext.possible if d == ghost_el)
    if bucket(low, n) != bucket(high, n):
        return None
    picks = {"ch": bucket(low, n)}
    role_ext = pm.role_ext3(plain_role or RoleName(role))
    for o in sorted(ind_t):
        o_el = names[o]
        low_o = sum(
            1
            for d, e in role_ext.certain
            if d == o_el and len(e) > len(ghost_el) and e.startswith(ghost_el)
        )
        high_o = sum(
            1
            for d, e in role_ext.possible
            if d == o_el and len(e) > len(ghost_el) and e.startswith(ghost_el)
        )
        if bucket(low_o, n) != bucket(high_o, n):
            return None
        picks[f"o:{o}"] = bucket(low_o, n)
    return picks


def build_catalog(setup: TBoxSetup, config: EngineConfig) -> GhostCatalog:
    return GhostCatalog(setup, config)


# ---------------------------------------------------------------------------
# The summary search
# ---------------------------------------------------------------------------


@dataclass
class _LayerOutcome:
    sat: Summary | None = None
    tainted: bool = False


class _SummarySearch:
    def __init__(
        self,
        kb: KnowledgeBase,
        setup: TBoxSetup,
        catalog: GhostCatalog,
        config: EngineConfig,
        childless: frozenset[str] = frozenset(),
        layer_filter=None,
    ):
        self.kb = kb
        self.setup = setup
        self.catalog = catalog
        self.config = config
        self.childless = childless
        self.layer_filter = layer_filter
        self.voc = summary_vocabulary(kb, setup)
        decoration_names = set()
        for auto_id, nfa in setup.automata:
            decoration_names.update(
                item.name for item in dec.decoration_concepts(auto_id, nfa, setup.ind_t)
            )
            decoration_names.update(dec.reach_concepts(auto_id, nfa))
        for role, n in setup.countings:
            decoration_names.update(dec.counting_concept_names(role, n, setup.ind_t))
        self.concept_names = frozenset(concept_names_of_kb(kb)) - frozenset(decoration_names)
        self.role_names = frozenset(role_names_of_kb(kb))
        self.tainted = False

    # -- clearing layers -----------------------------------------------------

    def _bound_axioms(self) -> list:
        """Sound per-restriction lower bounds injected into the layer search:
        a clearing-internal run or a clearing successor count already forces
        the corresponding label, whatever subtree blocks get chosen later."""
        from .automata import switch_states

        axioms = []
        for gci in self.setup.automata_gcis:
            clearing_run = ExistsAuto(
                switch_states(gci.nfa, gci.nfa.initial, single_final_state(gci.nfa)),
                TOP,
            )
            axioms.append(Gci(clearing_run, Atomic(gci.concept)))
        for gci in self.setup.counting_gcis:
            axioms.append(
                Gci(
                    AtLeast(gci.count, RoleName(gci.role), TOP),
                    Atomic(gci.concept),
                )
            )
        return axioms

    def _test_names(self) -> frozenset[str]:
        from .syntax import Test as TestLabel

        names = set()
        for _, nfa in self.setup.automata:
            for _, lab, _ in nfa.transitions:
                if isinstance(lab, TestLabel) and isinstance(lab.concept, Atomic):
                    names.add(lab.concept.name)
        return frozenset(names & self.concept_names)

    def run(self) -> _LayerOutcome:
        layer_kb = make_kb(self.kb.abox, tuple(self.setup.local) + tuple(self._bound_axioms()))
        budget_ref = [self.config.clearing_budget]
        test_names = sorted(self._test_names())

        def crisp_tests(pm: PartialModel, cursor: int):
            # automaton tests are evaluated on the clearing during assembly,
            # so their bits may not stay undetermined
            for name in test_names:
                for atom in pm.concept_atoms(name):
                    if pm.atom_value(atom) is None:
                        return atom, cursor
            return None, cursor

        deadline = (
            time.monotonic() + self.config.wall_clock_limit
            if self.config.wall_clock_limit
            else None
        )
        self.catalog.deadline = deadline
        try:
            for names in root_assignments(self.kb, 10):
                if deadline is not None and time.monotonic() > deadline:
                    raise BudgetExceeded()
                elements = sorted(set(names.values()))
                pm = PartialModel(
                    elements,
                    names,
                    self.concept_names,
                    self.role_names,
                    frozenset(elements),
                )
                if not _pin_layer(pm, self.kb):
                    continue
                solver = ShapeSolver(
                    layer_kb, pm, budget_ref, needs_refinement=crisp_tests,
                    deadline=deadline,
                )
                for solution in solver.solutions():
                    if deadline is not None and time.monotonic() > deadline:
                        raise BudgetExceeded()
                    summary = self._decorate_layer(names, solution)
                    if summary is not None:
                        return _LayerOutcome(sat=summary, tainted=self.tainted)
        except BudgetExceeded:
            self.tainted = True
        if not partition_space_complete(self.kb, 10):
            self.tainted = True
        return _LayerOutcome(sat=None, tainted=self.tainted)

    # -- decoration stages ---------------------------------------------------

    def _decorate_layer(self, names: dict[str, str], pm: PartialModel) -> Summary | None:
        inds = sorted(self.kb.individuals)
        elements = sorted(set(names.values()))
        layer_min = _completed_interp(pm, names, roles_default=False)
        layer_maxr = _completed_interp(pm, names, roles_default=True)

        if self.layer_filter is not None and not self.layer_filter(layer_min):
            # queries are monotone: if the least completion matches, all do
            return None

        if not self._counting_envelope_feasible(pm, layer_min, layer_maxr, inds):
            return None  # no threshold vector can match the labels
        if not self._reach_envelope_feasible(pm, layer_min, layer_maxr, inds):
            return None  # no block vector can match the labels

        tried_any = False
        for layer in (layer_min, layer_maxr) if self.role_names else (layer_min,):
            per_root: dict[str, list[Block]] = {}
            viable = True
            for element in elements:
                members = [x for x in inds if names[x] == element]
                anchor = min(members)
                pinned_childless = any(x in self.childless for x in members)
                blocks, conclusive = self.catalog.query(
                    self._pattern_for(anchor, names),
                    pinned_childless,
                    self._context_for(anchor, names, layer),
                )
                if not conclusive:
                    self.tainted = True
                if not blocks:
                    self.tainted = True
                    viable = False
                    break
                per_root[element] = blocks
            if not viable:
                continue
            tried_any = True
            for assignment in itertools.product(*(per_root[el] for el in elements)):
                chosen = dict(zip(elements, assignment))
                summary = self._try_assembly(names, pm, layer, chosen, inds)
                if summary is not None:
                    return summary
        if tried_any:
            self.tainted = True
        return None

    def _pattern_for(self, anchor, names) -> Pattern:
        members = sorted(self.setup.ind_t | {GHOST})
        classes: dict[str, list[str]] = {}
        for x in members:
            real = anchor if x == GHOST else x
            classes.setdefault(names[real], []).append(x)
        return _canonical_pattern(classes.values())

    def _context_for(self, anchor, names, layer) -> ContextPins:
        def real(x: str) -> str:
            return anchor if x == GHOST else x

        pins = []
        for name in self.catalog.context_concept_names():
            if name not in self.concept_names:
                continue
            for x in self.catalog.individuals:
                value = layer.names[real(x)] in layer.concept_ext(name)
                pins.append((("c", name, x), value))
        for name in sorted(self.catalog.role_names):
            for x in self.catalog.individuals:
                for y in self.catalog.individuals:
                    pair = (layer.names[real(x)], layer.names[real(y)])
                    pins.append((("r", name, x, y), pair in layer.role_ext(name)))
        return frozenset(pins)

    def _required_label(self, pm: PartialModel, concept: str, element: str) -> bool | None:
        return pm.atom_value(("c", concept, element))

    # -- envelopes -------------------------------------------------------------

    def _counting_envelope_feasible(self, pm, layer_min, layer_max, inds) -> bool:
        roots = frozenset(layer_min.domain)
        for gci in self.setup.counting_gcis:
            n = gci.count
            low_pairs = layer_min.role_ext(gci.role)
            high_pairs = layer_max.role_ext(gci.role)
            for a in inds:
                element = layer_min.names[a]
                required = self._required_label(pm, gci.concept, element)
                if required is None:
                    continue
                count_low = sum(1 for d, e in low_pairs if d == element and e in roots)
                count_high = sum(1 for d, e in high_pairs if d == element and e in roots)
                is_nominal = any(
                    layer_min.names.get(o) == element for o in self.setup.ind_t
                )
                slots = 1 + (len(roots) if is_nominal else 0)
                total_low = min(count_low, n + 1)
                total_high = min(count_high, n + 1) + slots * (n + 1)
                if required and total_high < n:
                    return False
                if not required and total_low >= n:
                    return False
        return True

    def _reach_envelope_feasible(self, pm, layer_min, layer_max, inds) -> bool:
        for gci in self.setup.automata_gcis:
            low = _reach_with_blocks(layer_min, self.setup, gci, blocks="min")
            high = _reach_with_blocks(layer_max, self.setup, gci, blocks="max")
            for a in inds:
                element = layer_min.names[a]
                required = self._required_label(pm, gci.concept, element)
                if required is None:
                    continue
                if required and element not in high:
                    return False
                if not required and element in low:
                    return False
        return True

    # -- assembly ---------------------------------------------------------------

    def _try_assembly(
        self, names, pm: PartialModel, layer, chosen: dict[str, Block], inds
    ) -> Summary | None:
        concepts = dict(layer.concepts)
        ev = Evaluator(layer)
        for auto_id, nfa in self.setup.automata:
            for item in dec.decoration_concepts(auto_id, nfa, self.setup.ind_t):
                if item.family == vocab.D_FAM:
                    concepts[item.name] = frozenset(
                        layer.names[a]
                        for a in inds
                        if dec.cond_check(layer, nfa, item, a, ev)
                    )
                else:
                    concepts[item.name] = frozenset(
                        el
                        for el, block in chosen.items()
                        if block.cond_map().get(item.name, False)
                    )
        for element, block in chosen.items():
            for (role, n, kind), exact in block.thresholds:
                if kind == "ch":
                    label = vocab.child_count_name(role, n, exact)
                else:
                    label = vocab.descendant_count_name(role, kind[2:], n, exact)
                concepts[label] = concepts.get(label, frozenset()) | {element}
        for role, n in self.setup.countings:
            for a in inds:
                cl, _, _ = dec.counting_profile(layer, role, a, self.setup.ind_t)
                label = vocab.clearing_count_name(role, n, bucket(cl, n).exact)
                concepts[label] = concepts.get(label, frozenset()) | {layer.names[a]}

        labelled = Interpretation(
            layer.domain, layer.names, concepts, layer.roles, forest=True
        )
        roles = dict(layer.roles)
        lab_ev = Evaluator(labelled)
        for auto_id, nfa in self.setup.automata:
            roles.update(
                dec.dictated_role_pairs(labelled, nfa, auto_id, self.setup.ind_t, lab_ev)
            )
        with_roles = Interpretation(
            layer.domain, layer.names, concepts, roles, forest=True
        )
        for auto_id, nfa in self.setup.automata:
            concepts.update(
                dec.reach_extensions(with_roles, nfa, auto_id, self.setup.ind_t)
            )

        # labels the layer left open follow the derived values
        for gci in self.setup.automata_gcis:
            reach_ext = concepts[
                vocab.reach_name(gci.auto_id, gci.nfa.initial, single_final_state(gci.nfa))
            ]
            ext = set(concepts.get(gci.concept, frozenset()))
            for element in layer.domain:
                if self._required_label(pm, gci.concept, element) is None:
                    if element in reach_ext:
                        ext.add(element)
                    else:
                        ext.discard(element)
            concepts[gci.concept] = frozenset(ext)
        final = Interpretation(layer.domain, layer.names, concepts, roles, forest=True)
        if self.setup.counting_gcis:
            counting_done = dict(concepts)
            for gci in self.setup.counting_gcis:
                ext = set(counting_done.get(gci.concept, frozenset()))
                for element in layer.domain:
                    if self._required_label(pm, gci.concept, element) is None:
                        try:
                            virtual = dec.virtual_sat_count(
                                final, element, gci.role, gci.count, self.setup.ind_t
                            )
                        except ValueError:
                            return None
                        if virtual:
                            ext.add(element)
                        else:
                            ext.discard(element)
                counting_done[gci.concept] = frozenset(ext)
            final = Interpretation(layer.domain, layer.names, counting_done, roles, forest=True)

        for gci in self.setup.automata_gcis:
            reach = vocab.reach_name(
                gci.auto_id, gci.nfa.initial, single_final_state(gci.nfa)
            )
            for element in layer.domain:
                label = element in final.concept_ext(gci.concept)
                if label != (element in final.concept_ext(reach)):
                    return None
        for gci in self.setup.counting_gcis:
            for element in layer.domain:
                label = element in final.concept_ext(gci.concept)
                try:
                    virtual = dec.virtual_sat_count(
                        final, element, gci.role, gci.count, self.setup.ind_t
                    )
                except ValueError:
                    return None
                if label != virtual:
                    return None
        for element, block in chosen.items():
            anchor = min(x for x in inds if names[x] == element)
            for key, value in block.context:
                if key[0] == "c":
                    _, name, x = key
                    real = anchor if x == GHOST else x
                    if (final.names[real] in final.concept_ext(name)) != value:
                        return None
                else:
                    _, name, x, y = key
                    pair = (
                        final.names[anchor if x == GHOST else x],
                        final.names[anchor if y == GHOST else y],
                    )
                    if (pair in final.role_ext(name)) != value:
                        return None

        summary = _summary_from_interp(self.voc, final)
        if completeness_gaps(self.voc, summary):
            raise AssertionError("assembled summary is incomplete")
        if not clearing_consistent(self.kb, self.setup, summary):
            return None
        if self.layer_filter is not None and not self.layer_filter(final):
            return None
        return summary


def _pin_layer(pm: PartialModel, kb: KnowledgeBase) -> bool:
    from .search import _pin_abox

    return _pin_abox(pm, kb)


def _completed_interp(pm: PartialModel, names, roles_default: bool) -> Interpretation:
    """Completion of a layer cube: unknown concept bits stay false, unknown
    role bits follow ``roles_default`` (false = least, true = greatest)."""
    concepts = {
        name: frozenset(
            d for d in pm.domain if pm.assignment.get(("c", name, d)) is True
        )
        for name in pm.concept_names
    }
    roles = {}
    for name in pm.role_names:
        ext = set()
        for pair in pm.allowed_pairs:
            value = pm.assignment.get(("r", name, pair))
            if value is True or (value is None and roles_default):
                ext.add(pair)
        roles[name] = frozenset(ext)
    return quasi_forest(pm.domain, dict(names), concepts, roles)


def _reach_with_blocks(layer, setup: TBoxSetup, gci, blocks: str):
    """Reachability labels when every subtree promise is denied (min) or
    asserted (max); monotonicity makes these an envelope over all blocks."""
    concepts = dict(layer.concepts)
    named = sorted(set(layer.names.values()))
    for auto_id, nfa in setup.automata:
        for item in dec.decoration_concepts(auto_id, nfa, setup.ind_t):
            if item.family == vocab.D_FAM:
                continue
            concepts[item.name] = frozenset(named) if blocks == "max" else frozenset()
    labelled = Interpretation(layer.domain, layer.names, concepts, layer.roles, forest=True)
    roles = dict(layer.roles)
    ev = Evaluator(labelled)
    roles.update(
        dec.dictated_role_pairs(labelled, gci.nfa, gci.auto_id, setup.ind_t, ev)
    )
    with_roles = Interpretation(layer.domain, layer.names, concepts, roles, forest=True)
    reach = dec.reach_extensions(with_roles, gci.nfa, gci.auto_id, setup.ind_t)
    return reach[
        vocab.reach_name(gci.auto_id, gci.nfa.initial, single_final_state(gci.nfa))
    ]


def _summary_from_interp(voc, interp) -> Summary:
    literals: list[Axiom] = []
    inds = voc.individuals

    def polar(pos, value):
        literals.append(pos if value else NegAssert(pos))

    for a in inds:
        for b in inds:
            polar(EqAssert(a, b), interp.names[a] == interp.names[b])
            for r in voc.role_names:
                pair = (interp.names[a], interp.names[b])
                polar(RoleAssert(r, a, b), pair in interp.role_ext(r))
            literals.append(RoleAssert(EDGE, a, b))
        for c in voc.concept_names:
            polar(ConceptAssert(c, a), interp.names[a] in interp.concept_ext(c))
        literals.append(ConceptAssert(ROOT, a))
        for role, n in dict.fromkeys((g.role, g.count) for g in voc.counting):
            for t in dec.all_thresholds(n):
                labels = [
                    vocab.clearing_count_name(role, n, t.exact),
                    vocab.child_count_name(role, n, t.exact),
                ] + [
                    vocab.descendant_count_name(role, o, n, t.exact)
                    for o in voc.ind_t
                ]
                for label in labels:
                    if interp.names[a] in interp.concept_ext(label):
                        literals.append(ConceptAssert(label, a))
    return Summary.of(inds, literals)


# ---------------------------------------------------------------------------
# Public entry points
# ---------------------------------------------------------------------------


def _ensure_individual(kb: KnowledgeBase) -> KnowledgeBase:
    if kb.individuals:
        return kb
    return make_kb(kb.abox + (EqAssert("a", "a"),), kb.tbox)


@dataclass
class PrecompiledTBox:
    """Normalised TBox with its decoration machinery and subtree catalog,
    reusable across assertion sets."""

    tbox: tuple[Axiom, ...]
    setup: TBoxSetup
    catalog: GhostCatalog
    config: EngineConfig
    oracle: SubtreeOracle
    materialized: bool = False

    @property
    def subtree_searches(self) -> int:
        return self.catalog.searches + self.oracle.calls


def precompile_tbox(
    tbox, config: EngineConfig | None = None, materialize: bool = True
) -> PrecompiledTBox:
    config = config or EngineConfig()
    normalized = normalize(tbox)
    setup = tbox_setup(normalized)
    catalog = GhostCatalog(setup, config)
    done = catalog.materialize() if materialize else False
    oracle = SubtreeOracle(
        bounds=config.subtree_bounds_for(1 + len(setup.ind_t)),
        budget=config.subtree_budget,
    )
    return PrecompiledTBox(normalized, setup, catalog, config, oracle, done)


def check_qf_sat(kb: KnowledgeBase, config: EngineConfig | None = None) -> SatVerdict:
    pre = precompile_tbox(kb.tbox, config, materialize=False)
    return check_qf_sat_data(kb.abox, pre, _vocab_check=False)


def check_qf_sat_data(
    abox, pre: PrecompiledTBox, _vocab_check: bool = True, childless=frozenset()
) -> SatVerdict:
    abox = tuple(abox)
    kb = make_kb(abox, pre.tbox)
    if _vocab_check:
        declared_c = concept_names_of_kb(make_kb((), pre.tbox))
        declared_r = role_names_of_kb(make_kb((), pre.tbox))
        used_c = concept_names_of_kb(make_kb(abox, ()))
        used_r = role_names_of_kb(make_kb(abox, ()))
        if not (used_c <= declared_c and used_r <= declared_r):
            raise ValueError(
                "assertions use undeclared vocabulary: "
                f"{sorted((used_c - declared_c) | (used_r - declared_r))}"
            )
    kb = _ensure_individual(kb)
    search = _SummarySearch(kb, pre.setup, pre.catalog, pre.config, childless)
    outcome = search.run()
    if outcome.sat is not None:
        return SatVerdict("sat", outcome.sat)
    if outcome.tainted:
        return SatVerdict("unknown", reason="subtree search bounds exceeded")
    return SatVerdict("unsat")


# ---------------------------------------------------------------------------
# Rooted query entailment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InitialSegment:
    """A candidate top fragment of a countermodel, flattened into a clearing:
    the forest words double as fresh individual names (prefixed with ``f``)."""

    words: tuple[str, ...]
    depth_bound: int
    abox: tuple[Axiom, ...]
    childless: frozenset[str]

    def name_of(self, word: str) -> str:
        return f"f{word}"


@dataclass
class EntailVerdict:
    entailed: bool | None  # None = inconclusive within bounds
    countermodel: InitialSegment | None = None
    summary: Summary | None = None

    @property
    def exit_code(self) -> int:
        if self.entailed is None:
            return 2
        return 0 if self.entailed else 1


def _segment_pins(
    kb: KnowledgeBase,
    words: list[str],
    depth_bound: int,
    root_names: dict[str, str],
    policy: str,
) -> tuple[list[Axiom], frozenset[str]]:
    """Equality bridges, inequalities, non-adjacency pins and the childless
    set for one forest shape."""

    def name(word: str) -> str:
        return f"f{word}"

    pins: list[Axiom] = []
    for a, root_word in sorted(root_names.items()):
        pins.append(EqAssert(a, name(root_word)))
    for w in words:
        for v in words:
            if w != v:
                pins.append(NegAssert(EqAssert(name(w), name(v))))
    user_roles = sorted(role_names_of_kb(kb))
    for w in words:
        for v in words:
            if w == v:
                continue
            if len(w) == 1 and len(v) == 1:
                continue  # clearing edges between original roots stay free
            adjacent = (len(v) == len(w) + 1 and v.startswith(w)) or (
                len(w) == len(v) + 1 and w.startswith(v)
            )
            if adjacent:
                continue
            for r in user_roles:
                pins.append(NegAssert(RoleAssert(r, name(w), name(v))))

    children = {
        w: [v for v in words if len(v) == len(w) + 1 and v.startswith(w)]
        for w in words
    }
    childless: set[str] = set()
    for w in words:
        is_leaf = not children[w]
        deep = len(w) > depth_bound
        if policy == "all-shallow":
            pinned = not deep
        elif policy == "leaves-only":
            pinned = is_leaf and not deep
        elif policy == "internal-only":
            pinned = not is_leaf
        else:
            raise ValueError(f"unknown child pin policy {policy!r}")
        if pinned:
            childless.add(name(w))
    return pins, frozenset(childless)


def enumerate_initial_segments(
    kb: KnowledgeBase,
    queries: list[ConjunctiveQuery],
    config: EngineConfig | None = None,
):
    """Stream candidate countermodel tops for a nominal-free knowledge base.

    Roots biject with the equality classes of the knowledge base's
    individuals; depth is bounded by the largest disjunct; branching and the
    total segment size come from the engine configuration.
    """
    config = config or EngineConfig()
    if fragment_of(kb) != "ZIQ":
        raise ValueError("initial segments require a nominal-free knowledge base")
    for q in queries:
        if not q.is_rooted():
            raise ValueError("query disjuncts must be rooted")
    kb = _ensure_individual(_with_query_individuals(kb, queries))
    depth_bound = max(len(q.atoms) for q in queries)
    seg_bounds = SearchBounds(
        max_roots=min(10, max(1, len(kb.individuals))),
        max_branching=config.subtree_branching,
        max_depth=max(1, depth_bound),
        max_domain=config.max_segment_nodes,
    )
    for names in root_assignments(kb, seg_bounds.max_roots):
        n_roots = len(set(names.values()))
        root_names = {a: names[a] for a in sorted(names)}
        for size in range(n_roots, seg_bounds.max_domain + 1):
            for words in forest_shapes(n_roots, size, seg_bounds):
                pins, childless = _segment_pins(
                    kb, words, depth_bound, root_names, config.child_pin_policy
                )
                yield InitialSegment(tuple(words), depth_bound, tuple(pins), childless)


def _with_query_individuals(kb: KnowledgeBase, queries) -> KnowledgeBase:
    extra = set()
    for q in queries:
        extra |= q.individuals()
    missing = extra - kb.individuals
    if not missing:
        return kb
    pins = tuple(EqAssert(x, x) for x in sorted(missing))
    return make_kb(kb.abox + pins, kb.tbox)


def entails_rooted_ucq(
    kb: KnowledgeBase,
    queries: list[ConjunctiveQuery],
    config: EngineConfig | None = None,
) -> EntailVerdict:
    """Entailment of a union of rooted queries, decided through countermodel
    segments: not entailed exactly when some segment avoids every disjunct
    and still extends to a model."""
    config = config or EngineConfig()
    base = _ensure_individual(_with_query_individuals(kb, queries))
    deadline = (
        time.monotonic() + config.wall_clock_limit
        if config.wall_clock_limit
        else None
    )
    pre = precompile_tbox(base.tbox, config, materialize=False)
    tainted = False
    for segment in enumerate_initial_segments(base, queries, config):
        if deadline is not None:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                tainted = True
                break
            pre.config.wall_clock_limit = remaining
        verdict = _segment_verdict(base.abox + segment.abox, segment, queries, pre)
        if verdict is None:
            continue
        if verdict.status == "sat":
            return EntailVerdict(False, segment, verdict.certificate)
        if verdict.status == "unknown":
            tainted = True
    return EntailVerdict(None if tainted else True)


def _segment_verdict(seg_abox, segment, queries, pre) -> SatVerdict | None:
    """None when the segment cannot both avoid the queries and extend to a
    model; otherwise the satisfiability verdict of the pinned problem."""
    kb = make_kb(tuple(seg_abox), pre.tbox)

    def avoids_queries(layer: Interpretation) -> bool:
        return not any(satisfies_query(layer, q) for q in queries)

    search = _SummarySearch(
        kb, pre.setup, pre.catalog, pre.config, segment.childless,
        layer_filter=avoids_queries,
    )
    outcome = search.run()
    if outcome.sat is None:
        return SatVerdict("unknown") if outcome.tainted else None
    return SatVerdict("sat", outcome.sat)
