import math

import numpy as np
import pytest

from lcplan.errors import Disconnected, MissingEdgeContext, NotPositiveDefinite, UnknownEdge
from lcplan.graph import Edge, Vertex, build_graph
from lcplan.objectives import (
    FimObjective,
    InfoContext,
    NlcObjective,
    PoseGraphContext,
    WstObjective,
    expected_log_tree_count,
    fim_eval,
    make_objective,
    marginal_gain,
    nlc_eval,
    wst_eval,
)

from conftest import random_graph, random_spd, spanning_tree_weight_sum


def test_nlc_values(g1):
    assert nlc_eval(g1, []) == 0.0
    assert nlc_eval(g1, [0, 1]) == pytest.approx(1.4)
    assert nlc_eval(g1, [0, 1, 2]) == pytest.approx(1.8)
    with pytest.raises(UnknownEdge):
        nlc_eval(g1, [99])


def test_nlc_is_modular(g1):
    obj = NlcObjective(g1)
    a, b = {0, 1}, {1, 2}
    assert obj.value(a) + obj.value(b) == pytest.approx(
        obj.value(a | b) + obj.value(a & b)
    )


def _single_edge_graph(p=0.5):
    return build_graph([Vertex(0, 0), Vertex(1, 1)], [Edge(0, 0, 1, p)], 2)


def test_fim_diagonal_cases():
    g = _single_edge_graph(0.5)
    ctx = InfoContext(np.eye(2), {0: np.diag([2.0, 0.0])})
    assert fim_eval(g, ctx, []) == 0.0
    assert fim_eval(g, ctx, [0]) == pytest.approx(math.log(2.0))

    g2 = _single_edge_graph(1.0)
    ctx2 = InfoContext(np.eye(2), {0: np.eye(2)})
    assert fim_eval(g2, ctx2, [0]) == pytest.approx(2.0 * math.log(2.0))


def test_fim_requires_positive_definite_prior():
    with pytest.raises(NotPositiveDefinite):
        InfoContext(np.diag([1.0, 0.0]), {})
    with pytest.raises(NotPositiveDefinite):
        InfoContext(np.eye(2), {0: np.diag([1.0, -0.5])})


def test_fim_matches_eigendecomposition_oracle():
    rng = np.random.default_rng(11)
    for _ in range(20):
        g = random_graph(rng, max_vertices=6, max_edges=6)
        dim = 4
        h0 = random_spd(rng, dim)
        infos = {eid: random_spd(rng, dim) for eid in g.edge_ids()}
        ctx = InfoContext(h0, infos)
        subset = [eid for eid in g.edge_ids() if rng.random() < 0.5]
        m = h0.copy()
        for eid in subset:
            m += g.edge(eid).probability * infos[eid]
        want = float(np.sum(np.log(np.linalg.eigvalsh(m)))) - float(
            np.sum(np.log(np.linalg.eigvalsh(h0)))
        )
        assert fim_eval(g, ctx, subset) == pytest.approx(want, abs=1e-8)


def test_tree_count_triangle_and_path():
    tri = [((0, 1), 1.0), ((1, 2), 1.0), ((0, 2), 1.0)]
    assert expected_log_tree_count(3, tri) == pytest.approx(math.log(3.0))
    path = [((0, 1), 1.0), ((1, 2), 1.0)]
    assert expected_log_tree_count(3, path) == pytest.approx(0.0)
    weighted = [((0, 1), 2.0), ((1, 2), 3.0), ((0, 2), 4.0)]
    assert expected_log_tree_count(3, weighted) == pytest.approx(math.log(26.0))


def test_tree_count_disconnected_raises():
    with pytest.raises(Disconnected):
        expected_log_tree_count(4, [((0, 1), 1.0), ((2, 3), 1.0)])


def test_tree_count_vs_enumeration_random():
    rng = np.random.default_rng(5)
    for _ in range(25):
        n = int(rng.integers(2, 7))
        pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
        keep = [p for p in pairs if rng.random() < 0.7]
        keep += [(i, i + 1) for i in range(n - 1)]  # force connectivity
        edges = sorted(set(keep))
        weighted = [(e, float(rng.uniform(0.2, 3.0))) for e in edges]
        want = math.log(spanning_tree_weight_sum(n, weighted))
        assert expected_log_tree_count(n, weighted) == pytest.approx(want, abs=1e-8)


def _wst_fixture():
    """Three poses in a chain prior; one candidate closes the triangle."""
    g = build_graph(
        [Vertex(0, 0), Vertex(1, 1)],
        [Edge(0, 0, 1, 1.0, precision_t=1.0, precision_r=1.0)],
        2,
    )
    ctx = PoseGraphContext(
        3,
        [(0, 1, 1.0, 1.0), (1, 2, 1.0, 1.0)],
        {0: (0, 2)},
    )
    return g, ctx


def test_wst_triangle_closure():
    g, ctx = _wst_fixture()
    assert wst_eval(g, ctx, []) == 0.0
    assert wst_eval(g, ctx, [0]) == pytest.approx(3.0 * math.log(3.0))


def test_wst_matches_tree_enumeration():
    rng = np.random.default_rng(3)
    for _ in range(15):
        num_poses = int(rng.integers(3, 6))
        prior = [
            (i, i + 1, float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.5, 2.0)))
            for i in range(num_poses - 1)
        ]
        n_cand = int(rng.integers(1, 4))
        cands = {}
        edges = []
        verts = [Vertex(0, 0), Vertex(1, 1)]
        vid = 2
        for eid in range(n_cand):
            u = int(rng.integers(0, num_poses))
            v = int(rng.integers(0, num_poses))
            if u == v:
                v = (v + 1) % num_poses
            cands[eid] = (u, v)
            verts.append(Vertex(vid, eid % 2))
            vid += 1
            edges.append(
                Edge(
                    eid,
                    0 if eid % 2 else 1,
                    verts[-1].id,
                    float(rng.uniform(0.1, 1.0)),
                    precision_t=float(rng.uniform(0.5, 2.0)),
                    precision_r=float(rng.uniform(0.5, 2.0)),
                )
            )
        g = build_graph(verts, edges, 2)
        ctx = PoseGraphContext(num_poses, prior, cands)
        subset = [eid for eid in g.edge_ids() if rng.random() < 0.6]

        def phi(eids):
            trans = [((u, v), tp) for u, v, tp, _ in ctx.prior_edges]
            rot = [((u, v), tr) for u, v, _, tr in ctx.prior_edges]
            for e in eids:
                edge = g.edge(e)
                trans.append((cands[e], edge.probability * edge.precision_t))
                rot.append((cands[e], edge.probability * edge.precision_r))
            return 2.0 * math.log(spanning_tree_weight_sum(num_poses, trans)) + math.log(
                spanning_tree_weight_sum(num_poses, rot)
            )

        want = phi(subset) - phi([])
        assert wst_eval(g, ctx, subset) == pytest.approx(want, abs=1e-8)


def test_pose_context_requires_connected_prior():
    with pytest.raises(Disconnected):
        PoseGraphContext(3, [(0, 1, 1.0, 1.0)], {})


def test_missing_context_entries_rejected():
    g = _single_edge_graph()
    with pytest.raises(MissingEdgeContext):
        FimObjective(g, InfoContext(np.eye(2), {}))
    with pytest.raises(MissingEdgeContext):
        WstObjective(g, PoseGraphContext(2, [(0, 1, 1.0, 1.0)], {}))


def test_marginal_gain_basics(g1):
    obj = NlcObjective(g1)
    assert marginal_gain(obj, [], 0) == pytest.approx(0.9)
    assert marginal_gain(obj, [0], 1) == pytest.approx(0.5)
    with pytest.raises(UnknownEdge):
        obj.value([77])


def test_gain_clamped_non_negative():
    rng = np.random.default_rng(9)
    for _ in range(10):
        g = random_graph(rng, max_vertices=6, max_edges=6)
        ctx = InfoContext(
            random_spd(rng, 3), {eid: random_spd(rng, 3) for eid in g.edge_ids()}
        )
        obj = FimObjective(g, ctx)
        eids = list(g.edge_ids())
        base = [e for e in eids[:-1] if rng.random() < 0.5]
        assert obj.gain(base, eids[-1]) >= 0.0


def _nms_trials(make_obj, trials, rng, tol=1e-9):
    """Random normalization/monotonicity/diminishing-returns checks."""
    for _ in range(trials):
        g, obj = make_obj(rng)
        eids = list(g.edge_ids())
        assert obj.value([]) == 0.0
        picks = rng.random(len(eids))
        a = [e for e, x in zip(eids, picks) if x < 0.3]
        b = [e for e, x in zip(eids, picks) if x < 0.6]
        rest = [e for e in eids if e not in b]
        assert obj.value(a) <= obj.value(b) + tol
        if rest:
            e = rest[int(rng.integers(len(rest)))]
            gain_a = obj.value(a + [e]) - obj.value(a)
            gain_b = obj.value(b + [e]) - obj.value(b)
            assert gain_a >= gain_b - tol


def test_fim_wst_random_nms_properties():
    rng = np.random.default_rng(21)

    def make_fim(rng):
        g = random_graph(rng, max_vertices=7, max_edges=8)
        ctx = InfoContext(
            random_spd(rng, 3), {eid: random_spd(rng, 3) for eid in g.edge_ids()}
        )
        return g, FimObjective(g, ctx, cache_values=True)

    def make_wst(rng):
        n_pose = 5
        g = random_graph(rng, max_vertices=7, max_edges=8)
        prior = [(i, i + 1, 1.0, 2.0) for i in range(n_pose - 1)]
        cands = {}
        for eid in g.edge_ids():
            u = int(rng.integers(0, n_pose))
            v = (u + 1 + int(rng.integers(0, n_pose - 1))) % n_pose
            cands[eid] = (u, v)
        # graphs from random_graph lack precisions; rebuild with them
        edges = [
            Edge(e.id, e.u, e.v, e.probability, precision_t=1.5, precision_r=0.5)
            for e in g.edges
        ]
        g2 = build_graph(list(g.vertices), edges, g.num_robots)
        return g2, WstObjective(g2, PoseGraphContext(n_pose, prior, cands), cache_values=True)

    _nms_trials(make_fim, 40, rng)
    _nms_trials(make_wst, 40, rng)


def test_cache_values_is_output_equivalent():
    rng = np.random.default_rng(33)
    g = random_graph(rng, max_vertices=6, max_edges=7)
    ctx = InfoContext(
        random_spd(rng, 3), {eid: random_spd(rng, 3) for eid in g.edge_ids()}
    )
    plain = FimObjective(g, ctx, cache_values=False)
    cached = FimObjective(g, ctx, cache_values=True)
    import itertools

    for n in range(min(g.num_edges, 4) + 1):
        for combo in itertools.combinations(g.edge_ids(), n):
            assert plain.value(combo) == cached.value(combo)
            assert plain.value(combo) == cached.value(combo)  # cache hit path
    assert cached.evaluations < plain.evaluations


def test_make_objective_dispatch(g1):
    assert make_objective("nlc", g1).kind == "nlc"
    with pytest.raises(ValueError):
        make_objective("fim", g1)
    with pytest.raises(ValueError):
        make_objective("bogus", g1)
