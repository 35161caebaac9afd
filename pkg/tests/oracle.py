"""Brute-force probability reference for cross-checking the engine.

Completely independent of the symbolic expansion: treats a graph as a plain
discrete causal network whose per-variable distribution is the weighted
mixture of its cause columns, and sums exhaustively over every complete
assignment consistent with the clamps. Exponential — test graphs only.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Optional, Sequence

from ducg import CausalArc, KnowledgeBase, completed_intensity


def _topo_order(variables: set[int], in_arcs: Mapping[int, list[CausalArc]]) -> list[int]:
    remaining = set(variables)
    order: list[int] = []
    while remaining:
        ready = [
            v
            for v in sorted(remaining)
            if all(a.parent not in remaining for a in in_arcs.get(v, ()))
        ]
        if not ready:
            raise ValueError("graph has a directed cycle; oracle needs a DAG")
        for v in ready:
            order.append(v)
            remaining.discard(v)
    return order


def enumerate_joint(
    kb: KnowledgeBase,
    variables: Iterable[int],
    arcs: Sequence[CausalArc],
    evidence: Mapping[int, int],
    hypothesis: Optional[tuple[int, int]] = None,
) -> float:
    """Pr{evidence [and hypothesis]} on the explicit graph (variables, arcs)."""
    var_set = set(variables)
    in_arcs: dict[int, list[CausalArc]] = {}
    for arc in arcs:
        in_arcs.setdefault(arc.child, []).append(arc)
    r = {v: sum(a.weight for a in lst) for v, lst in in_arcs.items()}
    order = _topo_order(var_set, in_arcs)
    hyp_var, hyp_state = hypothesis if hypothesis else (None, None)

    def states_for(v: int) -> list[int]:
        clamped = evidence.get(v)
        if v == hyp_var:
            if clamped is not None and clamped != hyp_state:
                return []
            clamped = hyp_state
        if clamped is not None:
            return [clamped]
        var = kb.variables[v]
        if var.kind == "X" and not in_arcs.get(v):
            raise ValueError(f"unevidenced observable {v} has no cause model")
        return list(var.state_ids)

    def factor(v: int, s: int, assign: Mapping[int, int]) -> float:
        var = kb.variables[v]
        if var.kind == "B":
            prior = var.prior or {}
            return 1.0 - sum(prior.values()) if s == 0 else prior.get(s, 0.0)
        if var.kind == "D":
            return 1.0 if s != 0 else 0.0
        lst = in_arcs.get(v)
        if not lst:
            return 1.0  # evidence-only observable: no cause model in this graph
        return sum(
            (a.weight / r[v]) * completed_intensity(a, s, assign[a.parent])
            for a in lst
        )

    total = 0.0

    def recurse(i: int, assign: dict[int, int], acc: float) -> None:
        nonlocal total
        if acc == 0.0:
            return
        if i == len(order):
            total += acc
            return
        v = order[i]
        for s in states_for(v):
            assign[v] = s
            recurse(i + 1, assign, acc * factor(v, s, assign))
            del assign[v]

    recurse(0, {}, 1.0)
    return total
