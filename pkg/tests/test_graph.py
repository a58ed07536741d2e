import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lcplan.errors import (
    IntraBlockEdge,
    ProbabilityOutOfRange,
    SelfLoop,
    UnknownVertex,
)
from lcplan.graph import (
    Budget,
    Edge,
    PerBlockCount,
    PerPairVerifications,
    PerRobotVerifications,
    TotalBytes,
    TotalCount,
    TotalVerifications,
    Vertex,
    build_graph,
    check_feasible,
    make_plan,
    min_vertex_cover_size,
    worst_case_robot_verifications,
)

from conftest import random_graph


def test_build_valid_graph():
    g = build_graph(
        [Vertex(0, 0), Vertex(1, 0), Vertex(2, 1), Vertex(3, 1)],
        [Edge(0, 0, 2, 0.5), Edge(1, 0, 3, 0.5), Edge(2, 1, 2, 0.5)],
        2,
    )
    assert g.num_edges == 3
    assert g.num_vertices == 4
    assert g.blocks == ((0, 1), (2, 3))


def test_intra_block_edge_rejected():
    with pytest.raises(IntraBlockEdge, match="edge 0"):
        build_graph(
            [Vertex(0, 0), Vertex(1, 0), Vertex(2, 1)],
            [Edge(0, 0, 1, 0.5)],
            2,
        )


def test_probability_out_of_range():
    with pytest.raises(ProbabilityOutOfRange):
        Edge(0, 0, 1, 1.3)


def test_self_loop_and_unknown_vertex():
    verts = [Vertex(0, 0), Vertex(1, 1)]
    with pytest.raises(SelfLoop):
        build_graph(verts, [Edge(0, 0, 0, 0.5)], 2)
    with pytest.raises(UnknownVertex):
        build_graph(verts, [Edge(0, 0, 7, 0.5)], 2)


def test_duplicate_edge_rejected():
    from lcplan.errors import DuplicateEdge

    verts = [Vertex(0, 0), Vertex(1, 1)]
    with pytest.raises(DuplicateEdge):
        build_graph(verts, [Edge(0, 0, 1, 0.5), Edge(1, 1, 0, 0.7)], 2)


def test_edges_of(g1):
    assert g1.edges_of([0]) == (0, 1)
    assert g1.edges_of([]) == ()
    assert g1.edges_of([0, 2]) == (0, 1, 2)


def test_edges_of_unknown_vertex(g1):
    with pytest.raises(UnknownVertex):
        g1.edges_of([99])


def test_max_degree(g1):
    assert g1.max_degree() == 2
    edgeless = build_graph([Vertex(0, 0), Vertex(1, 1)], [], 2)
    assert edgeless.max_degree() == 0
    star = build_graph(
        [Vertex(i, 0 if i == 0 else 1) for i in range(6)],
        [Edge(i, 0, i + 1, 0.5) for i in range(5)],
        2,
    )
    assert star.max_degree() == 5


@given(st.data())
def test_edges_of_monotone(data):
    rng = np.random.default_rng(data.draw(st.integers(0, 10_000)))
    g = random_graph(rng)
    vids = list(g.vertex_ids())
    sub = data.draw(st.sets(st.sampled_from(vids)))
    extra = data.draw(st.sets(st.sampled_from(vids)))
    small = set(g.edges_of(sub))
    big = set(g.edges_of(sub | extra))
    assert small <= big
    for v in vids:
        assert len(g.edges_of([v])) <= g.max_degree()


def test_check_feasible_examples(g1):
    budget = Budget(TotalCount(1), TotalVerifications(2))
    ok = check_feasible(g1, make_plan(g1, [0], [0, 1], 1.4), budget)
    assert ok.feasible and not ok.violations

    uncovered = check_feasible(g1, make_plan(g1, [], [0], 0.9), budget)
    assert not uncovered.feasible and not uncovered.covering_ok

    over = check_feasible(g1, make_plan(g1, [0, 2], [0], 0.9), budget)
    assert not over.feasible and not over.comm_ok and over.covering_ok


def _feasible_reference(graph, vset, eset, budget):
    """Direct restatement of the constraint definitions, kept independent of
    check_feasible's implementation."""
    for eid in eset:
        e = graph.edge(eid)
        if e.u not in vset and e.v not in vset:
            return False
    comm = budget.comm
    if isinstance(comm, TotalCount):
        if len(vset) > comm.b:
            return False
    elif isinstance(comm, TotalBytes):
        if sum(graph.vertex(v).weight for v in vset) > comm.b:
            return False
    else:
        for limit, block in zip(comm.limits, graph.blocks):
            if len(vset & set(block)) > limit:
                return False
    comp = budget.comp
    if isinstance(comp, TotalVerifications):
        if len(eset) > comp.k:
            return False
    elif isinstance(comp, PerRobotVerifications):
        for robot, limit in enumerate(comp.limits):
            incident = sum(1 for eid in eset if robot in graph.robot_pair(eid))
            if incident > limit:
                return False
    else:
        caps = comp.as_dict()
        for pair in graph.robot_pairs():
            used = sum(1 for eid in eset if graph.robot_pair(eid) == pair)
            if used > caps.get(pair, 0):
                return False
    return True


def test_check_feasible_exhaustive_small_graphs():
    rng = np.random.default_rng(7)
    for _ in range(8):
        g = random_graph(rng, max_vertices=6, max_edges=5, weights=True)
        r = g.num_robots
        budgets = [
            Budget(TotalCount(int(rng.integers(0, 4))), TotalVerifications(int(rng.integers(0, 4)))),
            Budget(TotalBytes(int(rng.integers(0, 12))), TotalVerifications(int(rng.integers(0, 4)))),
            Budget(
                PerBlockCount(tuple(int(x) for x in rng.integers(0, 3, size=r))),
                PerRobotVerifications(tuple(int(x) for x in rng.integers(0, 3, size=r))),
            ),
            Budget(
                TotalCount(int(rng.integers(0, 4))),
                PerPairVerifications(tuple(
                    (pair, int(rng.integers(0, 3))) for pair in g.robot_pairs()
                )),
            ),
        ]
        vids = list(g.vertex_ids())
        eids = list(g.edge_ids())
        for budget in budgets:
            for vn in range(len(vids) + 1):
                for vset in itertools.combinations(vids, vn):
                    for en in range(len(eids) + 1):
                        for eset in itertools.combinations(eids, en):
                            plan = make_plan(g, vset, eset, 0.0)
                            got = check_feasible(g, plan, budget).feasible
                            want = _feasible_reference(g, set(vset), set(eset), budget)
                            assert got == want, (vset, eset, budget)


def test_worst_case_verifications(g1):
    worst = worst_case_robot_verifications(g1, [0, 1, 2])
    assert worst == {0: 3, 1: 3}


def test_min_vertex_cover_size(g1):
    assert min_vertex_cover_size(g1) == 2  # {a1, b1} covers all three edges
    star = build_graph(
        [Vertex(i, 0 if i == 0 else 1) for i in range(6)],
        [Edge(i, 0, i + 1, 0.5) for i in range(5)],
        2,
    )
    assert min_vertex_cover_size(star) == 1
    edgeless = build_graph([Vertex(0, 0), Vertex(1, 1)], [], 2)
    assert min_vertex_cover_size(edgeless) == 0


def test_plan_usage_fields(g1):
    plan = make_plan(g1, [0, 2], [0, 1, 2], 1.8)
    assert plan.comm_count == 2
    assert plan.comm_bytes == 2
    assert plan.verifications == 3
    assert plan.per_pair_dict() == {(0, 1): 3}
