"""Greedy planners for the expected-match-count (modular) objective.

The vertex-selection problem induced by a modular edge objective is monotone
submodular, so plain greedy enjoys constant-factor guarantees: 1-1/e under a
total broadcast count, (1-1/e)/2 under a byte budget (better of plain and
weight-normalized gains), and 1/2 under per-robot broadcast counts.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BlockMismatch
from .graph import (
    EMPTY_PLAN,
    ExchangeGraph,
    PerPairVerifications,
    Plan,
    make_plan,
)
from .selection import GainSelector
from .simplex import solve_lp


@dataclass(frozen=True)
class InnerSolution:
    """Best verification set among covered edges, and its expected-match value."""

    value: float
    edges: tuple[int, ...]


def inner_top_k(graph: ExchangeGraph, vertex_ids, k: int) -> InnerSolution:
    """Top-k covered edges by probability (all of them if fewer than k).

    Ties are broken by ascending edge id; the returned edge ids are ascending.
    """
    if k <= 0:
        return InnerSolution(0.0, ())
    covered = graph.edges_of(vertex_ids)
    ranked = sorted(covered, key=lambda eid: (-graph.edge(eid).probability, eid))
    chosen = sorted(ranked[:k])
    return InnerSolution(
        float(sum(graph.edge(eid).probability for eid in chosen)), tuple(chosen)
    )


def blockwise_top_k(graph: ExchangeGraph, vertex_ids, edge_blocks, caps) -> InnerSolution:
    """Top-`caps[i]` covered edges by probability within each edge block.

    `edge_blocks` partitions (a subset of) the edge ids; covered edges outside
    every block are ignored.  This is the partition-matroid analogue of
    :func:`inner_top_k` and reduces to it when a single block spans all edges.
    """
    covered = set(graph.edges_of(vertex_ids))
    chosen: list[int] = []
    for block, cap in zip(edge_blocks, caps):
        if cap <= 0:
            continue
        present = [eid for eid in block if eid in covered]
        present.sort(key=lambda eid: (-graph.edge(eid).probability, eid))
        chosen.extend(present[:cap])
    chosen.sort()
    return InnerSolution(
        float(sum(graph.edge(eid).probability for eid in chosen)), tuple(chosen)
    )


def pairwise_top_k(graph: ExchangeGraph, vertex_ids, pair_caps) -> InnerSolution:
    """Best covered verification set under per-robot-pair caps.

    `pair_caps` maps unordered robot pairs (i, j), i < j, to caps; missing
    pairs default to 0.
    """
    caps = pair_caps.as_dict() if isinstance(pair_caps, PerPairVerifications) else dict(pair_caps)
    pairs = graph.robot_pairs()
    blocks = [graph.edges_between(i, j) for (i, j) in pairs]
    limits = [caps.get(pair, 0) for pair in pairs]
    return blockwise_top_k(graph, vertex_ids, blocks, limits)


def _greedy_vertices(
    graph: ExchangeGraph,
    inner,
    budget_left,
    feasible,
    charge,
    lazy: bool,
    normalize_by_weight: bool = False,
):
    """Shared greedy loop: pick vertices by marginal inner-value gain.

    `inner(V)` evaluates the induced vertex-set objective, `feasible(v)` gates
    candidates, `charge(v)` updates budget state after a pick.  Zero-gain picks
    are allowed; the loop ends when no feasible vertex remains.
    """
    selected: list[int] = []
    current = inner(selected)
    selector = GainSelector(graph.vertex_ids(), lazy=lazy)

    def gain(v: int) -> float:
        g = inner(selected + [v]) - current
        if normalize_by_weight:
            return g / graph.vertex(v).weight
        return g

    while budget_left() and selector:
        pick = selector.select(gain, feasible)
        if pick is None:
            break
        v, _ = pick
        selected.append(v)
        current = inner(selected)
        charge(v)
    return selected


def modular_greedy_tu(graph: ExchangeGraph, b: int, k: int, lazy: bool = False) -> Plan:
    """Greedy under a total broadcast count `b` and verification count `k`.

    Guarantee: 1 - 1/e of the optimum.
    """
    if b <= 0 or k <= 0:
        return EMPTY_PLAN
    state = {"used": 0}
    selected = _greedy_vertices(
        graph,
        inner=lambda vs: inner_top_k(graph, vs, k).value,
        budget_left=lambda: state["used"] < b,
        feasible=None,
        charge=lambda v: state.__setitem__("used", state["used"] + 1),
        lazy=lazy,
    )
    best = inner_top_k(graph, selected, k)
    return make_plan(graph, selected, best.edges, best.value)


def modular_greedy_tn(graph: ExchangeGraph, b_bytes: int, k: int, lazy: bool = False) -> Plan:
    """Greedy under a total byte budget `b_bytes`.

    Runs the plain-gain greedy and the gain-per-byte greedy (each skipping
    vertices heavier than the remaining budget) and returns the better plan.
    Guarantee: (1 - 1/e) / 2 of the optimum.
    """
    if b_bytes <= 0 or k <= 0:
        return EMPTY_PLAN

    def run(normalize: bool) -> Plan:
        state = {"left": b_bytes}
        selected = _greedy_vertices(
            graph,
            inner=lambda vs: inner_top_k(graph, vs, k).value,
            budget_left=lambda: state["left"] > 0,
            feasible=lambda v: graph.vertex(v).weight <= state["left"],
            charge=lambda v: state.__setitem__("left", state["left"] - graph.vertex(v).weight),
            lazy=lazy,
            normalize_by_weight=normalize,
        )
        best = inner_top_k(graph, selected, k)
        return make_plan(graph, selected, best.edges, best.value)

    plain = run(False)
    normalized = run(True)
    return plain if plain.objective_value >= normalized.objective_value else normalized


def modular_greedy_iu(
    graph: ExchangeGraph, limits, k: int, blocks=None, lazy: bool = False
) -> Plan:
    """Greedy under per-block broadcast counts (partition matroid).

    Blocks default to the robot partition.  Guarantee: 1/2 of the optimum.
    """
    limits = tuple(limits)
    if blocks is None:
        if len(limits) != graph.num_robots:
            raise BlockMismatch(f"{len(limits)} budgets for {graph.num_robots} robots")
        blocks = graph.blocks
    else:
        blocks = tuple(tuple(blk) for blk in blocks)
        if len(blocks) != len(limits):
            raise BlockMismatch(f"{len(limits)} budgets for {len(blocks)} blocks")
    block_of = {}
    for i, blk in enumerate(blocks):
        for vid in blk:
            block_of[vid] = i
    if set(block_of) != set(graph.vertex_ids()):
        raise BlockMismatch("blocks must partition the vertex set")
    if k <= 0 or all(x <= 0 for x in limits):
        return EMPTY_PLAN

    used = [0] * len(limits)
    selected = _greedy_vertices(
        graph,
        inner=lambda vs: inner_top_k(graph, vs, k).value,
        budget_left=lambda: any(u < lim for u, lim in zip(used, limits)),
        feasible=lambda v: used[block_of[v]] < limits[block_of[v]],
        charge=lambda v: used.__setitem__(block_of[v], used[block_of[v]] + 1),
        lazy=lazy,
    )
    best = inner_top_k(graph, selected, k)
    return make_plan(graph, selected, best.edges, best.value)


def modular_greedy_pairwise(
    graph: ExchangeGraph,
    b: int,
    pair_caps,
    iu_limits=None,
    lazy: bool = False,
) -> Plan:
    """Greedy with per-robot-pair verification caps.

    By default the broadcast constraint is a total count `b`; pass `iu_limits`
    to use per-robot broadcast counts instead (`b` is then ignored).
    """
    caps = pair_caps.as_dict() if isinstance(pair_caps, PerPairVerifications) else dict(pair_caps)
    if all(v <= 0 for v in caps.values()) or not caps:
        caps_all_zero = True
    else:
        caps_all_zero = False

    inner = lambda vs: pairwise_top_k(graph, vs, caps).value

    if iu_limits is not None:
        limits = tuple(iu_limits)
        if len(limits) != graph.num_robots:
            raise BlockMismatch(f"{len(limits)} budgets for {graph.num_robots} robots")
        block_of = {vid: graph.vertex(vid).robot for vid in graph.vertex_ids()}
        used = [0] * len(limits)
        if caps_all_zero or all(x <= 0 for x in limits):
            return EMPTY_PLAN
        selected = _greedy_vertices(
            graph,
            inner=inner,
            budget_left=lambda: any(u < lim for u, lim in zip(used, limits)),
            feasible=lambda v: used[block_of[v]] < limits[block_of[v]],
            charge=lambda v: used.__setitem__(block_of[v], used[block_of[v]] + 1),
            lazy=lazy,
        )
    else:
        if b <= 0 or caps_all_zero:
            return EMPTY_PLAN
        state = {"used": 0}
        selected = _greedy_vertices(
            graph,
            inner=inner,
            budget_left=lambda: state["used"] < b,
            feasible=None,
            charge=lambda v: state.__setitem__("used", state["used"] + 1),
            lazy=lazy,
        )
    best = pairwise_top_k(graph, selected, caps)
    return make_plan(graph, selected, best.edges, best.value)


def allocate_pairwise_budgets(
    individual, edge_counts, expected_fractions
) -> PerPairVerifications:
    """Derive per-pair verification caps from per-robot budgets.

    Maximizes sum of c_ij * k_ij subject to each robot's worst-case load
    staying within its own budget and 0 <= k_ij <= |E_ij|, then floors the LP
    solution.  Flooring only tightens the per-robot condition, so the result
    always respects the individual budgets.
    """
    individual = tuple(individual)
    num_robots = len(individual)
    if any(x < 0 for x in individual):
        raise ValueError("individual budgets must be >= 0")
    pairs = [(i, j) for i in range(num_robots) for j in range(i + 1, num_robots)]
    counts = {tuple(sorted(p)): int(n) for p, n in dict(edge_counts).items()}
    fractions = {tuple(sorted(p)): float(c) for p, c in dict(expected_fractions).items()}
    for pair, c in fractions.items():
        if not (0.0 <= c <= 1.0):
            raise ValueError(f"expected fraction for pair {pair} not in [0,1]: {c}")

    if not pairs:
        return PerPairVerifications(())
    cost = [fractions.get(p, 0.0) for p in pairs]
    upper = [float(counts.get(p, 0)) for p in pairs]
    rows = []
    rhs = []
    for r in range(num_robots):
        rows.append([1.0 if r in p else 0.0 for p in pairs])
        rhs.append(float(individual[r]))
    res = solve_lp(cost, rows, rhs, upper)
    caps = tuple((p, int(x + 1e-9)) for p, x in zip(pairs, res.x))
    return PerPairVerifications(caps)
