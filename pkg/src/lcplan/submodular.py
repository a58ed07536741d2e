"""Greedy planners for general monotone submodular objectives.

Two complementary strategies run under a total broadcast count `b` and a
total verification count `k`:

* edge-first greedy: pick edges by marginal gain while a vertex cover of the
  picks fits in `b`, then keep filling from already-covered edges;
* vertex-first greedy: pick vertices by the gain of verifying everything they
  cover, while the covered edge set fits in `k`.

Returning the better of the two yields an instance-dependent approximation
factor computable from (b, k) and the maximum degree alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .graph import EMPTY_PLAN, ExchangeGraph, Plan, make_plan
from .objectives import Objective
from .selection import GainSelector


@dataclass(frozen=True)
class GuaranteeReport:
    """Approximation factors for a (b, k, max-degree) instance.

    `alpha` is the factor of the combined solver: the better of the edge-first
    factor `alpha_e` (drops with k/b) and the vertex-first factor `alpha_v`
    (drops with b*max_degree/k).  `delta_bound` is a budget-independent floor
    that holds whenever both budgets are positive.
    """

    alpha_e: float
    alpha_v: float
    alpha: float
    gamma: float
    kappa: float
    delta: int
    delta_bound: float
    winner: str = ""

    def to_json_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "alpha_edge": self.alpha_e,
            "alpha_vertex": self.alpha_v,
            "gamma": self.gamma,
            "kappa": self.kappa,
            "max_degree": self.delta,
            "degree_floor": self.delta_bound,
            "winner": self.winner,
        }


def guarantee_alpha(b: int, k: int, delta: int, winner: str = "") -> GuaranteeReport:
    """Approximation factor of the combined greedy for budgets (b, k).

    Conventions: the edge-first term is 0 when k == 0 and the vertex-first
    term is 0 when b == 0 (the empty plan is optimal in those regimes).
    """
    alpha_e = 0.0 if k <= 0 else 1.0 - math.exp(-min(1.0, b / k))
    if b <= 0:
        alpha_v = 0.0
        ratio_v = 0.0
    else:
        ratio_v = math.inf if delta <= 0 else (k // delta) / b
        alpha_v = 1.0 - math.exp(-min(1.0, ratio_v))
    gamma = max(b / k if k > 0 else math.inf, ratio_v) if (b > 0 or k > 0) else 0.0
    kappa = b / k if k > 0 else math.inf
    return GuaranteeReport(
        alpha_e=alpha_e,
        alpha_v=alpha_v,
        alpha=max(alpha_e, alpha_v),
        gamma=gamma,
        kappa=kappa,
        delta=delta,
        delta_bound=1.0 - math.exp(-1.0 / (delta + 1)),
        winner=winner,
    )


def _cover_vertex_for(graph: ExchangeGraph, eid: int, cover: set[int], covered: set[int]) -> int | None:
    """Vertex to add so `cover` covers edge `eid`, or None if already covered.

    Prefers the endpoint incident to more not-yet-covered candidate edges
    (ties to the smaller id), which maximizes the pool of free edges for the
    fill phase.
    """
    e = graph.edge(eid)
    if e.u in cover or e.v in cover:
        return None

    def uncovered_degree(vid: int) -> int:
        return sum(1 for x in graph.incident_edges(vid) if x not in covered)

    du, dv = uncovered_degree(e.u), uncovered_degree(e.v)
    if du > dv:
        return e.u
    if dv > du:
        return e.v
    return min(e.u, e.v)


def edge_greedy(
    graph: ExchangeGraph, objective: Objective, b: int, k: int, lazy: bool = False
) -> Plan:
    """Edge-first greedy with an incremental vertex cover and a fill phase.

    The main loop selects the best remaining edge (even at zero gain) while
    both budgets have room, covering each pick with at most one new vertex.
    The fill phase then adds positive-gain edges already covered by the
    selected vertices until the verification budget is exhausted.
    """
    if b <= 0 or k <= 0:
        return EMPTY_PLAN
    edges: list[int] = []
    cover: set[int] = set()
    covered: set[int] = set()
    selector = GainSelector(graph.edge_ids(), lazy=lazy)

    while len(cover) < b and len(edges) < k:
        pick = selector.select(lambda eid: objective.gain(edges, eid))
        if pick is None:
            break
        eid, _ = pick
        edges.append(eid)
        new_vertex = _cover_vertex_for(graph, eid, cover, covered)
        if new_vertex is not None:
            cover.add(new_vertex)
            covered.update(graph.incident_edges(new_vertex))

    free = [eid for eid in graph.edges_of(cover) if eid not in edges]
    fill = GainSelector(free, lazy=lazy)
    while len(edges) < k:
        pick = fill.select(lambda eid: objective.gain(edges, eid))
        if pick is None or pick[1] <= 0.0:
            break  # zero-gain edges cannot help any monotone objective
        edges.append(pick[0])

    return make_plan(graph, cover, edges, objective.value(edges))


def vertex_greedy(
    graph: ExchangeGraph, objective: Objective, b: int, k: int, lazy: bool = False
) -> Plan:
    """Vertex-first greedy: broadcast a vertex, verify everything it covers.

    A vertex is feasible while the broadcast budget has room and the covered
    edge set stays within the verification budget.  Terminates when no
    feasible vertex remains.
    """
    if b <= 0 or k <= 0:
        return EMPTY_PLAN
    vertices: list[int] = []
    covered: set[int] = set()
    current_value = 0.0
    selector = GainSelector(graph.vertex_ids(), lazy=lazy)

    def coverage_value(vid: int) -> float:
        return objective.value(covered | set(graph.incident_edges(vid))) - current_value

    def feasible(vid: int) -> bool:
        return len(covered | set(graph.incident_edges(vid))) <= k

    while len(vertices) < b:
        pick = selector.select(coverage_value, feasible)
        if pick is None:
            break
        vid, _ = pick
        vertices.append(vid)
        covered.update(graph.incident_edges(vid))
        current_value = objective.value(covered)

    return make_plan(graph, vertices, covered, objective.value(covered))


def submodular_greedy(
    graph: ExchangeGraph, objective: Objective, b: int, k: int, lazy: bool = False
) -> tuple[Plan, GuaranteeReport]:
    """Run both greedy strategies and return the better plan with its factor.

    Ties go to the edge-first plan.
    """
    plan_e = edge_greedy(graph, objective, b, k, lazy=lazy)
    plan_v = vertex_greedy(graph, objective, b, k, lazy=lazy)
    if plan_e.objective_value >= plan_v.objective_value:
        plan, winner = plan_e, "edge-greedy"
    else:
        plan, winner = plan_v, "vertex-greedy"
    report = guarantee_alpha(b, k, graph.max_degree(), winner=winner)
    return plan, report
