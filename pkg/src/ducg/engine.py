"""Per-tick causal inference over time-layered fault graphs.

For every fault root the engine keeps a *cubic* graph: the stack of per-tick
simplified slices joined by linkage edges. Each triggering evidence snapshot
is explained by expanding the current evidence into an exact event expression
over the latest slice, evaluating it, and ranking the fault states of every
surviving root:

* a slice keeps exactly the arcs lying on a causal path from the root to some
  evidenced variable (conditional arcs whose condition is false are deleted
  first; self-arcs never lie on a simple path);
* weight denominators ``r`` are recomputed from the retained arcs, so a
  root's explanation never pays for causes that live outside its own graph;
* a root whose graph cannot reach every abnormal observation — or whose
  expression evaluates to probability zero — drops out of the hypothesis
  space permanently.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .algebra import (
    ArcLiteral,
    EventExpression,
    Product,
    RootLiteral,
    conjoin,
    eval_expression,
)
from .errors import (
    CycleLimitError,
    EmptyHypothesisSpaceError,
    InvalidKnowledgeBaseError,
    NoAbnormalEvidenceError,
    RootMismatchError,
)
from .kb import (
    CausalArc,
    KnowledgeBase,
    ROOT_KINDS,
    SubDUCG,
    completed_intensity,
    decompose,
    validate_kb,
)
from .signals import EvidenceSnapshot

_EXPANSION_STEP_LIMIT = 1_000_000  # defensive; unreachable for sane KBs


# --- graphs --------------------------------------------------------------------


@dataclass(frozen=True)
class SliceGraph:
    """One root's simplified causal graph for a single tick."""

    root: int
    tick: int
    variables: frozenset[int]
    arcs: tuple[CausalArc, ...]
    states: Mapping[int, int]  # evidence restricted to retained variables
    scope: frozenset[int]  # full variable set of the root's subgraph
    valid: bool
    unexplained: tuple[int, ...]

    def in_arcs(self, var: int) -> tuple[CausalArc, ...]:
        return tuple(a for a in self.arcs if a.child == var)

    def r(self, var: int) -> float:
        return sum(a.weight for a in self.arcs if a.child == var)


@dataclass(frozen=True)
class LinkEdge:
    """Joins the two instances of one variable in consecutive slices."""

    var: int
    from_tick: int
    to_tick: int


@dataclass(frozen=True)
class CubicGraph:
    """The time-layered explanation graph of one root: slices + linkage."""

    root: int
    slices: tuple[SliceGraph, ...]
    linkage: tuple[LinkEdge, ...]
    current_evidence: Mapping[int, int]

    @property
    def latest(self) -> SliceGraph:
        return self.slices[-1]


def _candidate_arcs(sub: SubDUCG, assignments: Mapping[int, int]) -> list[CausalArc]:
    """Drop self-arcs and arcs whose enabling condition is determined false."""
    kept = []
    for arc in sub.arcs:
        if arc.child == arc.parent:
            continue
        if arc.condition is not None and arc.condition.evaluate(assignments) is False:
            continue
        kept.append(arc)
    return kept


def _downstream(start: int, arcs: Iterable[CausalArc]) -> set[int]:
    children: dict[int, list[int]] = {}
    for arc in arcs:
        children.setdefault(arc.parent, []).append(arc.child)
    seen = {start}
    frontier = [start]
    while frontier:
        var = frontier.pop()
        for child in children.get(var, ()):
            if child not in seen:
                seen.add(child)
                frontier.append(child)
    return seen


def _upstream_of(targets: Iterable[int], arcs: Iterable[CausalArc]) -> set[int]:
    parents: dict[int, list[int]] = {}
    for arc in arcs:
        parents.setdefault(arc.child, []).append(arc.parent)
    seen = set(targets)
    frontier = list(seen)
    while frontier:
        var = frontier.pop()
        for parent in parents.get(var, ()):
            if parent not in seen:
                seen.add(parent)
                frontier.append(parent)
    return seen


def simplify(sub: SubDUCG, ev: EvidenceSnapshot) -> SliceGraph:
    """Build the root's slice for ``ev``: keep only causally relevant arcs.

    An arc survives when the root reaches its parent and its child reaches
    some evidenced variable, i.e. the arc lies on a root→evidence causal
    path. The slice is marked invalid when some abnormal observation is
    outside the subgraph or unreachable from the root.
    """
    if not ev.abnormal_set:
        raise NoAbnormalEvidenceError(
            f"tick {ev.tick}: evidence contains no abnormal assignment"
        )
    evidenced = {
        v: s for v, s in ev.assignments.items() if v in sub.variables
    }
    candidates = _candidate_arcs(sub, ev.assignments)
    from_root = _downstream(sub.root, candidates)
    to_evidence = _upstream_of(evidenced, candidates)
    retained = tuple(
        a for a in candidates if a.parent in from_root and a.child in to_evidence
    )
    variables = {sub.root} | set(evidenced)
    for arc in retained:
        variables.add(arc.parent)
        variables.add(arc.child)

    explained = _downstream(sub.root, retained)
    unexplained = tuple(
        sorted(
            v
            for v in ev.abnormal_set
            if v not in sub.variables or v not in explained
        )
    )
    return SliceGraph(
        root=sub.root,
        tick=ev.tick,
        variables=frozenset(variables),
        arcs=retained,
        states=dict(sorted(evidenced.items())),
        scope=sub.variable_ids,
        valid=not unexplained,
        unexplained=unexplained,
    )


def merge_cubic(prev: Optional[CubicGraph], new_slice: SliceGraph) -> CubicGraph:
    """Append a slice to a root's cubic graph, linking shared variables."""
    if prev is None:
        return CubicGraph(
            root=new_slice.root,
            slices=(new_slice,),
            linkage=(),
            current_evidence=dict(new_slice.states),
        )
    if prev.root != new_slice.root:
        raise RootMismatchError(
            f"cannot merge slice of root {new_slice.root} into cubic graph of "
            f"root {prev.root}"
        )
    last = prev.latest
    shared = sorted(last.variables & new_slice.variables)
    links = prev.linkage + tuple(
        LinkEdge(var=v, from_tick=last.tick, to_tick=new_slice.tick) for v in shared
    )
    return CubicGraph(
        root=prev.root,
        slices=prev.slices + (new_slice,),
        linkage=links,
        current_evidence=dict(new_slice.states),
    )


def check_valid(cubic: CubicGraph, ev: EvidenceSnapshot) -> bool:
    """True iff the latest slice explains every abnormal observation of ``ev``."""
    g = cubic.latest
    explained = _downstream(g.root, g.arcs)
    for v in sorted(ev.abnormal_set):
        if v not in g.scope or v not in explained:
            return False
    return True


# --- symbolic expansion ----------------------------------------------------------


@dataclass
class _Term:
    """One partially expanded product. ``pending`` holds X literals still to
    be rewritten into cause routes; ``pinned`` remembers every state this
    term has committed to (for exclusivity and expand-once idempotence)."""

    roots: dict[int, int]
    arcs: dict[int, ArcLiteral]  # keyed by child variable: one route per child
    pending: dict[int, tuple[int, frozenset[int]]]
    pinned: dict[int, int]

    def clone(self) -> "_Term":
        return _Term(
            roots=dict(self.roots),
            arcs=dict(self.arcs),
            pending=dict(self.pending),
            pinned=dict(self.pinned),
        )


def _absorb(
    term: _Term, kb: KnowledgeBase, var: int, state: int, history: frozenset[int]
) -> bool:
    """Multiply a variable-state literal into ``term``. False = annihilated."""
    seen = term.pinned.get(var)
    if seen is not None and seen != state:
        return False  # exclusivity: two states of one variable
    kind = kb.variables[var].kind
    if kind in ROOT_KINDS:
        term.roots[var] = state
        term.pinned[var] = state
        return True
    if seen is None:
        term.pending[var] = (state, history)
        term.pinned[var] = state
    elif var in term.pending:
        old_state, old_history = term.pending[var]
        term.pending[var] = (old_state, old_history | history)
    # else: already expanded in this term — idempotent, nothing to add
    return True


def _add_arc_literal(term: _Term, lit: ArcLiteral) -> bool:
    """One realized cause route per child variable; duplicates collapse."""
    seen = term.arcs.get(lit.child)
    if seen is None:
        term.arcs[lit.child] = lit
        return True
    return seen == lit


def expand(ev: EvidenceSnapshot, cubic: CubicGraph, kb: KnowledgeBase) -> EventExpression:
    """Rewrite the evidence on ``cubic``'s latest slice into root-cause terms.

    Every evidence literal is recursively replaced by its weighted cause
    routes ``share · intensity · parent-state`` until only root literals and
    arc literals remain. Parent state 0 enters through the identity
    convention; routes that would revisit a variable already on the literal's
    own causal chain are not simple chains and are skipped. Evidenced normal
    variables with no retained cause contribute probability 1 and vanish;
    abnormal literals with no cause route annihilate their term.
    """
    g = cubic.latest
    evidence = {
        v: s for v, s in ev.assignments.items() if v in g.variables
    }

    seed = _Term(roots={}, arcs={}, pending={}, pinned={})
    for var, state in sorted(evidence.items()):
        if not _absorb(seed, kb, var, state, frozenset({var})):
            return EventExpression.make([])

    finished: list[Optional[Product]] = []
    worklist = [seed]
    steps = 0
    while worklist:
        steps += 1
        if steps > _EXPANSION_STEP_LIMIT:
            raise CycleLimitError("expansion step limit exceeded")
        term = worklist.pop()
        if not term.pending:
            finished.append(
                Product.make(
                    (RootLiteral(v, s) for v, s in term.roots.items()),
                    term.arcs.values(),
                )
            )
            continue
        var = min(term.pending)
        state, history = term.pending.pop(var)

        routes: list[tuple[ArcLiteral, int, int]] = []
        r_var = g.r(var)
        for arc in g.in_arcs(var):
            if arc.parent in history:
                continue  # not a simple causal chain
            parent = kb.variables[arc.parent]
            share = arc.weight / r_var
            for j in parent.state_ids:
                if parent.kind == "D" and j == 0:
                    continue  # a default cause is always present
                intensity = completed_intensity(arc, state, j)
                if intensity == 0.0:
                    continue
                routes.append(
                    (ArcLiteral(var, state, arc.parent, j, share, intensity), arc.parent, j)
                )

        if not routes:
            if state == 0:
                worklist.append(term)  # uncaused normal observation: probability 1
            # uncaused abnormal observation: the term annihilates
            continue

        for lit, parent, j in routes:
            branch = term.clone()
            if not _add_arc_literal(branch, lit):
                continue
            if not _absorb(branch, kb, parent, j, history | {parent}):
                continue
            worklist.append(branch)

    return EventExpression.make(finished)


# --- ranking ---------------------------------------------------------------------


@dataclass(frozen=True)
class HypothesisResult:
    root: int
    state: int
    joint: float  # Pr{hypothesis ∧ evidence} on the root's graph
    zeta: float  # Pr{evidence} on the root's graph
    xi: float  # the graph's share of the surviving probability mass
    posterior: float


def rank_hypotheses(
    graphs: Sequence[CubicGraph], ev: EvidenceSnapshot, kb: KnowledgeBase
) -> list[HypothesisResult]:
    """Score every abnormal root state of every surviving graph.

    posterior = xi · joint / zeta, with xi = zeta / Σ zeta over graphs of
    positive evidence probability. Hypotheses with zero joint are dropped.
    """
    if not graphs:
        raise EmptyHypothesisSpaceError("no graphs survive the evidence")
    evaluated: list[tuple[CubicGraph, EventExpression, float]] = []
    for cubic in graphs:
        expr = expand(ev, cubic, kb)
        zeta = eval_expression(expr, kb)
        if zeta > 0.0:
            evaluated.append((cubic, expr, zeta))
    if not evaluated:
        raise EmptyHypothesisSpaceError(
            "evidence has probability zero on every surviving graph"
        )
    total = sum(z for _, _, z in evaluated)

    results: list[HypothesisResult] = []
    for cubic, expr, zeta in evaluated:
        xi = zeta / total
        root_var = kb.variables[cubic.root]
        for state in root_var.abnormal_state_ids:
            joint = eval_expression(conjoin(expr, RootLiteral(cubic.root, state)), kb)
            if joint > 0.0:
                results.append(
                    HypothesisResult(
                        root=cubic.root,
                        state=state,
                        joint=joint,
                        zeta=zeta,
                        xi=xi,
                        posterior=xi * joint / zeta,
                    )
                )
    results.sort(key=lambda h: (-h.posterior, h.root, h.state))
    return results


# --- session ---------------------------------------------------------------------


@dataclass(frozen=True)
class DiagnosisReport:
    tick: int
    status: str  # diagnosed | ambiguous | unexplained
    hypotheses: tuple[HypothesisResult, ...]
    abnormal: tuple[tuple[int, int], ...]
    normal: tuple[tuple[int, int], ...]
    graphs: Mapping[int, CubicGraph]
    timing_ms: float


class DiagnosisSession:
    """Stateful multi-tick diagnosis over one knowledge base.

    The hypothesis space starts as every fault root and only ever shrinks: a
    root whose graph fails to explain a triggering snapshot is discarded for
    good, along with its accumulated slices.
    """

    def __init__(self, kb: KnowledgeBase, *, validate: bool = True):
        if validate:
            violations = validate_kb(kb)
            if violations:
                raise InvalidKnowledgeBaseError(violations)
        self.kb = kb
        self._subs: dict[int, SubDUCG] = {s.root: s for s in decompose(kb)}
        self._cubics: dict[int, CubicGraph] = {}
        self._alive: set[int] | None = None  # None until the first diagnosis

    @property
    def alive_roots(self) -> tuple[int, ...]:
        if self._alive is None:
            return tuple(sorted(self._subs))
        return tuple(sorted(self._alive))

    def cubic(self, root: int) -> Optional[CubicGraph]:
        return self._cubics.get(root)

    def diagnose_tick(self, ev: EvidenceSnapshot) -> DiagnosisReport:
        """Explain one triggering snapshot; shrink the hypothesis space."""
        started = time.perf_counter()
        survivors: dict[int, CubicGraph] = {}
        for root in self.alive_roots:
            s = simplify(self._subs[root], ev)
            if not s.valid:
                continue
            cubic = merge_cubic(self._cubics.get(root), s)
            if not check_valid(cubic, ev):
                continue
            survivors[root] = cubic

        try:
            hypotheses = rank_hypotheses(list(survivors.values()), ev, self.kb)
        except EmptyHypothesisSpaceError:
            hypotheses = []
        ranked_roots = {h.root for h in hypotheses}
        self._cubics = {r: survivors[r] for r in sorted(ranked_roots)}
        self._alive = set(ranked_roots)

        if len(ranked_roots) == 1:
            status = "diagnosed"
        elif ranked_roots:
            status = "ambiguous"
        else:
            status = "unexplained"
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        return DiagnosisReport(
            tick=ev.tick,
            status=status,
            hypotheses=tuple(hypotheses),
            abnormal=tuple(ev.abnormal_items()),
            normal=tuple(ev.normal_items()),
            graphs=dict(self._cubics),
            timing_ms=elapsed_ms,
        )


# --- prediction --------------------------------------------------------------------


def predict(
    cubic: CubicGraph, kb: KnowledgeBase, hyp: RootLiteral
) -> list[tuple[int, int, float]]:
    """Forward-propagate ``hyp`` (assumed certain) through the root's subgraph.

    Returns ``(var, state, probability)`` for every abnormal state of every
    descendant that is not currently abnormal, sorted by descending
    probability. Self-arcs are excluded, and weight denominators use only the
    subgraph's own arcs, mirroring the per-graph convention of diagnosis.
    """
    if hyp.var != cubic.root:
        raise RootMismatchError(
            f"hypothesis {hyp.var} does not match graph root {cubic.root}"
        )
    sub = next(s for s in decompose(kb) if s.root == cubic.root)
    arcs = [a for a in sub.arcs if a.child != a.parent]
    in_arcs: dict[int, list[CausalArc]] = {}
    for arc in arcs:
        in_arcs.setdefault(arc.child, []).append(arc)
    r = {child: sum(a.weight for a in arcs_in) for child, arcs_in in in_arcs.items()}

    def chain_probability(var: int, state: int, seen: frozenset[int]) -> float:
        if var == hyp.var:
            return 1.0 if state == hyp.state else 0.0
        total = 0.0
        for arc in in_arcs.get(var, ()):
            if arc.parent in seen:
                continue
            share = arc.weight / r[var]
            parent = kb.variables[arc.parent]
            for j in parent.abnormal_state_ids:
                intensity = completed_intensity(arc, state, j)
                if intensity == 0.0:
                    continue
                total += share * intensity * chain_probability(
                    arc.parent, j, seen | {var}
                )
        return total

    rows: list[tuple[int, int, float]] = []
    for var_id in sorted(sub.variables):
        if var_id == cubic.root:
            continue
        var = kb.variables[var_id]
        if var.kind in ROOT_KINDS:
            continue
        current = cubic.current_evidence.get(var_id, 0)
        if current != 0:
            continue  # already abnormal: nothing to predict
        for state in var.abnormal_state_ids:
            p = chain_probability(var_id, state, frozenset({var_id}))
            if p > 0.0:
                rows.append((var_id, state, p))
    rows.sort(key=lambda row: (-row[2], row[0], row[1]))
    return rows
