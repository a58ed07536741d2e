"""Performance metrics over candidate-edge subsets and their marginal gains.

Three metrics are provided, all normalized (empty set scores 0), monotone,
and submodular:

* expected match count: sum of edge probabilities (modular),
* information gain: log-det increase of the joint information matrix,
* tree connectivity: log expected weighted spanning-tree count of the pose
  graph, combining translational and rotational weightings.
"""

from __future__ import annotations

import logging
from collections import deque

import numpy as np

from .errors import Disconnected, MissingEdgeContext, NotPositiveDefinite
from .graph import ExchangeGraph

log = logging.getLogger(__name__)

GAIN_NOISE_FLOOR = -1e-9  # more negative than this is a bug, not noise


def _logdet_spd(m: np.ndarray) -> float:
    """log det of a symmetric positive-definite matrix via Cholesky."""
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


class InfoContext:
    """Joint information matrix before the rendezvous plus per-edge increments.

    `h_init` must be symmetric positive definite; each per-edge matrix must be
    symmetric positive semidefinite of the same dimension.
    """

    def __init__(self, h_init: np.ndarray, edge_info: dict[int, np.ndarray], validate: bool = True):
        self.h_init = np.asarray(h_init, dtype=float)
        self.edge_info = {int(k): np.asarray(v, dtype=float) for k, v in edge_info.items()}
        self.dim = self.h_init.shape[0]
        if validate:
            if self.h_init.shape != (self.dim, self.dim):
                raise ValueError("h_init must be square")
            if not np.allclose(self.h_init, self.h_init.T, atol=1e-9):
                raise NotPositiveDefinite("h_init is not symmetric")
            _logdet_spd(self.h_init)  # raises if not PD
            for eid, h in self.edge_info.items():
                if h.shape != (self.dim, self.dim):
                    raise ValueError(f"edge {eid}: info matrix dimension mismatch")
                if not np.allclose(h, h.T, atol=1e-9):
                    raise NotPositiveDefinite(f"edge {eid}: info matrix not symmetric")
                if np.linalg.eigvalsh(h).min() < -1e-8:
                    raise NotPositiveDefinite(f"edge {eid}: info matrix not PSD")


class PoseGraphContext:
    """Planar pose-graph topology prior to the rendezvous.

    `prior_edges` are (u, v, precision_t, precision_r) tuples over pose indices
    0..num_poses-1 and must form a connected graph.  `candidate_poses` maps a
    candidate edge id to the pose pair it would link.
    """

    def __init__(self, num_poses: int, prior_edges, candidate_poses: dict[int, tuple[int, int]]):
        self.num_poses = int(num_poses)
        self.prior_edges = tuple(
            (int(u), int(v), float(tp), float(tr)) for u, v, tp, tr in prior_edges
        )
        self.candidate_poses = {int(k): (int(u), int(v)) for k, (u, v) in candidate_poses.items()}
        for u, v, tp, tr in self.prior_edges:
            if not (0 <= u < self.num_poses and 0 <= v < self.num_poses) or u == v:
                raise ValueError(f"prior edge ({u},{v}) out of range or self-loop")
            if tp <= 0 or tr <= 0:
                raise ValueError(f"prior edge ({u},{v}): precisions must be positive")
        for eid, (u, v) in self.candidate_poses.items():
            if not (0 <= u < self.num_poses and 0 <= v < self.num_poses) or u == v:
                raise ValueError(f"candidate {eid}: pose pair ({u},{v}) invalid")
        if not self._prior_connected():
            raise Disconnected("prior pose graph is not connected")

    def _prior_connected(self) -> bool:
        if self.num_poses == 0:
            return False
        adj: dict[int, list[int]] = {i: [] for i in range(self.num_poses)}
        for u, v, _, _ in self.prior_edges:
            adj[u].append(v)
            adj[v].append(u)
        seen = {0}
        queue = deque([0])
        while queue:
            x = queue.popleft()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        return len(seen) == self.num_poses


def expected_log_tree_count(num_vertices: int, weighted_edges) -> float:
    """Log of the weighted spanning-tree count of a connected multigraph.

    `weighted_edges` is an iterable of ((u, v), weight) with positive weights.
    Computed as the log-determinant of the weighted Laplacian with one vertex
    grounded (matrix-tree theorem; the grounded vertex does not matter).
    Candidate edges realized independently contribute their expected weight,
    so with weights p(e)*tau(e) this is the log expected tree count.
    """
    n = int(num_vertices)
    if n < 1:
        raise ValueError("need at least one vertex")
    if n == 1:
        return 0.0
    lap = np.zeros((n, n))
    for (u, v), w in weighted_edges:
        if u == v:
            raise ValueError(f"self-loop at {u}")
        if w <= 0:
            raise ValueError(f"edge ({u},{v}): weight must be positive")
        lap[u, u] += w
        lap[v, v] += w
        lap[u, v] -= w
        lap[v, u] -= w
    reduced = lap[1:, 1:]
    try:
        chol = np.linalg.cholesky(reduced)
    except np.linalg.LinAlgError:
        raise Disconnected("graph is not connected (singular reduced Laplacian)") from None
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def nlc_eval(graph: ExchangeGraph, edge_ids) -> float:
    """Expected number of true matches among `edge_ids`."""
    return float(sum(graph.edge(eid).probability for eid in sorted(set(edge_ids))))


def fim_eval(graph: ExchangeGraph, ctx: InfoContext, edge_ids) -> float:
    """Expected log-det information gain of verifying `edge_ids`."""
    return FimObjective(graph, ctx).value(edge_ids)


def wst_eval(graph: ExchangeGraph, ctx: PoseGraphContext, edge_ids) -> float:
    """Tree-connectivity gain of verifying `edge_ids`."""
    return WstObjective(graph, ctx).value(edge_ids)


class Objective:
    """Uniform evaluate/gain interface consumed by every solver.

    Subclasses implement `_value(sorted_edge_ids)`.  Values are memoized per
    edge set when `cache_values` is on; memoization reuses canonical builds,
    so results are bit-identical with the cache on or off.
    """

    kind = "abstract"

    def __init__(self, graph: ExchangeGraph, cache_values: bool = False):
        self.graph = graph
        self.cache_values = cache_values
        self._cache: dict[frozenset, float] = {}
        self.evaluations = 0
        self.gain_calls = 0

    def _value(self, eids: tuple[int, ...]) -> float:
        raise NotImplementedError

    def value(self, edge_ids) -> float:
        key = frozenset(edge_ids)
        if self.cache_values and key in self._cache:
            return self._cache[key]
        for eid in key:
            self.graph.edge(eid)  # raises UnknownEdge
        self.evaluations += 1
        val = self._value(tuple(sorted(key)))
        if self.cache_values:
            self._cache[key] = val
        return val

    def gain(self, edge_ids, eid: int) -> float:
        """f(E + e) - f(E), clamped at zero to absorb numerical noise."""
        self.gain_calls += 1
        base = set(edge_ids)
        if eid in base:
            raise ValueError(f"edge {eid} already selected")
        raw = self.value(base | {eid}) - self.value(base)
        if raw < 0.0:
            if raw < GAIN_NOISE_FLOOR:
                log.warning("gain of edge %d clamped from %.3e (beyond noise floor)", eid, raw)
            else:
                log.debug("gain of edge %d clamped from %.3e", eid, raw)
            return 0.0
        return raw


class NlcObjective(Objective):
    kind = "nlc"

    def _value(self, eids) -> float:
        return float(sum(self.graph.edge(eid).probability for eid in eids))

    def gain(self, edge_ids, eid: int) -> float:
        self.gain_calls += 1
        if eid in set(edge_ids):
            raise ValueError(f"edge {eid} already selected")
        return self.graph.edge(eid).probability


class FimObjective(Objective):
    kind = "fim"

    def __init__(self, graph: ExchangeGraph, ctx: InfoContext, cache_values: bool = False):
        super().__init__(graph, cache_values)
        self.ctx = ctx
        for eid in graph.edge_ids():
            if eid not in ctx.edge_info:
                raise MissingEdgeContext(f"edge {eid} has no information matrix")
        self._logdet_init = _logdet_spd(ctx.h_init)

    def _value(self, eids) -> float:
        m = self.ctx.h_init.copy()
        for eid in eids:
            m += self.graph.edge(eid).probability * self.ctx.edge_info[eid]
        return _logdet_spd(m) - self._logdet_init


class WstObjective(Objective):
    kind = "wst"

    def __init__(self, graph: ExchangeGraph, ctx: PoseGraphContext, cache_values: bool = False):
        super().__init__(graph, cache_values)
        self.ctx = ctx
        for eid in graph.edge_ids():
            e = graph.edge(eid)
            if eid not in ctx.candidate_poses:
                raise MissingEdgeContext(f"edge {eid} has no pose-pair mapping")
            if e.precision_t is None or e.precision_r is None:
                raise MissingEdgeContext(f"edge {eid} is missing measurement precisions")
        self._phi_empty = self._phi(())

    def _phi(self, eids) -> float:
        trans = [((u, v), tp) for u, v, tp, _ in self.ctx.prior_edges]
        rot = [((u, v), tr) for u, v, _, tr in self.ctx.prior_edges]
        for eid in eids:
            e = self.graph.edge(eid)
            if e.probability <= 0.0:
                continue  # zero expected weight adds nothing
            poses = self.ctx.candidate_poses[eid]
            trans.append((poses, e.probability * e.precision_t))
            rot.append((poses, e.probability * e.precision_r))
        n = self.ctx.num_poses
        return 2.0 * expected_log_tree_count(n, trans) + expected_log_tree_count(n, rot)

    def _value(self, eids) -> float:
        return self._phi(eids) - self._phi_empty


def marginal_gain(objective: Objective, edge_ids, eid: int) -> float:
    """Marginal gain of adding edge `eid` to the selected set."""
    return objective.gain(edge_ids, eid)


def make_objective(
    kind: str,
    graph: ExchangeGraph,
    info_ctx: InfoContext | None = None,
    pose_ctx: PoseGraphContext | None = None,
    cache_values: bool = False,
) -> Objective:
    kind = kind.lower()
    if kind == "nlc":
        return NlcObjective(graph, cache_values=cache_values)
    if kind == "fim":
        if info_ctx is None:
            raise ValueError("fim objective requires an information context")
        return FimObjective(graph, info_ctx, cache_values=cache_values)
    if kind == "wst":
        if pose_ctx is None:
            raise ValueError("wst objective requires a pose-graph context")
        return WstObjective(graph, pose_ctx, cache_values=cache_values)
    raise ValueError(f"unknown objective {kind!r}")
