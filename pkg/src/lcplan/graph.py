"""Exchange graph, budget models, plans, and feasibility checks.

The exchange graph is a simple undirected multi-partite graph: vertices are
observations owned by robots, edges are candidate inter-robot matches weighted
by a correspondence probability.  Graphs are immutable after construction and
all queries are read-only, so instances may be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BlockMismatch,
    DuplicateEdge,
    GraphError,
    IntraBlockEdge,
    ProbabilityOutOfRange,
    SelfLoop,
    UnknownEdge,
    UnknownVertex,
)


@dataclass(frozen=True)
class Vertex:
    """One observation: owned by a robot, broadcasting it costs `weight` bytes."""

    id: int
    robot: int
    weight: int = 1

    def __post_init__(self):
        if self.weight <= 0:
            raise ValueError(f"vertex {self.id}: weight must be positive, got {self.weight}")


@dataclass(frozen=True)
class Edge:
    """Candidate inter-robot match between observations `u` and `v`.

    `probability` is the estimated chance the match is a true loop closure.
    `info` (an (d, d) information matrix) and the translational/rotational
    `precision_t`/`precision_r` are optional payloads used by the
    information-gain and tree-connectivity objectives respectively.
    """

    id: int
    u: int
    v: int
    probability: float
    info: np.ndarray | None = None
    precision_t: float | None = None
    precision_r: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.probability <= 1.0):
            raise ProbabilityOutOfRange(
                f"edge {self.id} ({self.u},{self.v}): p={self.probability!r} not in [0,1]"
            )
        if self.precision_t is not None and self.precision_t <= 0:
            raise ValueError(f"edge {self.id}: precision_t must be positive")
        if self.precision_r is not None and self.precision_r <= 0:
            raise ValueError(f"edge {self.id}: precision_r must be positive")

    def endpoints(self) -> tuple[int, int]:
        return (self.u, self.v) if self.u < self.v else (self.v, self.u)


class ExchangeGraph:
    """Validated multi-partite candidate-match graph with adjacency indexes.

    Construct via :func:`build_graph`; the constructor assumes already
    validated inputs.
    """

    def __init__(self, vertices: list[Vertex], edges: list[Edge], num_robots: int):
        self.vertices = tuple(vertices)
        self.edges = tuple(edges)
        self.num_robots = num_robots
        self._vertex_by_id = {v.id: v for v in self.vertices}
        self._edge_by_id = {e.id: e for e in self.edges}
        adj: dict[int, list[int]] = {v.id: [] for v in self.vertices}
        for e in self.edges:
            adj[e.u].append(e.id)
            adj[e.v].append(e.id)
        self._adjacency = {vid: tuple(sorted(eids)) for vid, eids in adj.items()}
        blocks: list[list[int]] = [[] for _ in range(num_robots)]
        for v in self.vertices:
            blocks[v.robot].append(v.id)
        self.blocks = tuple(tuple(sorted(b)) for b in blocks)

    # -- basic accessors -------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def vertex(self, vid: int) -> Vertex:
        try:
            return self._vertex_by_id[vid]
        except KeyError:
            raise UnknownVertex(f"vertex id {vid} not in graph") from None

    def edge(self, eid: int) -> Edge:
        try:
            return self._edge_by_id[eid]
        except KeyError:
            raise UnknownEdge(f"edge id {eid} not in graph") from None

    def vertex_ids(self) -> tuple[int, ...]:
        return tuple(v.id for v in self.vertices)

    def edge_ids(self) -> tuple[int, ...]:
        return tuple(e.id for e in self.edges)

    def incident_edges(self, vid: int) -> tuple[int, ...]:
        if vid not in self._adjacency:
            raise UnknownVertex(f"vertex id {vid} not in graph")
        return self._adjacency[vid]

    def degree(self, vid: int) -> int:
        return len(self.incident_edges(vid))

    def robot_pair(self, eid: int) -> tuple[int, int]:
        """Unordered (i, j) robot pair of an edge, i < j."""
        e = self.edge(eid)
        ri = self._vertex_by_id[e.u].robot
        rj = self._vertex_by_id[e.v].robot
        return (ri, rj) if ri < rj else (rj, ri)

    def robot_pairs(self) -> tuple[tuple[int, int], ...]:
        """All unordered robot pairs (i, j), i < j, regardless of edges."""
        r = self.num_robots
        return tuple((i, j) for i in range(r) for j in range(i + 1, r))

    def edges_between(self, i: int, j: int) -> tuple[int, ...]:
        """Edge ids joining robots i and j, ascending."""
        pair = (i, j) if i < j else (j, i)
        return tuple(e.id for e in self.edges if self.robot_pair(e.id) == pair)

    # -- spec queries ----------------------------------------------------

    def edges_of(self, vertex_ids) -> tuple[int, ...]:
        """All edges incident to at least one vertex in `vertex_ids`, ascending."""
        out: set[int] = set()
        for vid in vertex_ids:
            out.update(self.incident_edges(vid))
        return tuple(sorted(out))

    def max_degree(self) -> int:
        if not self.vertices:
            return 0
        return max(len(eids) for eids in self._adjacency.values())


def build_graph(vertices, edges, num_robots: int | None = None) -> ExchangeGraph:
    """Validate raw vertex/edge lists and build an indexed exchange graph.

    Vertices are partitioned into robot blocks by their `robot` field.
    Raises SelfLoop, DuplicateEdge, IntraBlockEdge, UnknownVertex or
    ProbabilityOutOfRange naming the offending element.
    """
    vertices = [v if isinstance(v, Vertex) else Vertex(*v) for v in vertices]
    seen_ids = set()
    for v in vertices:
        if v.id in seen_ids:
            raise GraphError(f"duplicate vertex id {v.id}")
        seen_ids.add(v.id)
        if v.robot < 0:
            raise BlockMismatch(f"vertex {v.id}: negative robot index {v.robot}")
    if num_robots is None:
        num_robots = max((v.robot for v in vertices), default=-1) + 1
    for v in vertices:
        if v.robot >= num_robots:
            raise BlockMismatch(
                f"vertex {v.id}: robot {v.robot} out of range for {num_robots} robots"
            )
    by_id = {v.id: v for v in vertices}

    edges = [e if isinstance(e, Edge) else Edge(*e) for e in edges]
    seen_edge_ids = set()
    seen_pairs = set()
    for e in edges:
        if e.id in seen_edge_ids:
            raise DuplicateEdge(f"duplicate edge id {e.id}")
        seen_edge_ids.add(e.id)
        if e.u == e.v:
            raise SelfLoop(f"edge {e.id}: self-loop at vertex {e.u}")
        if e.u not in by_id:
            raise UnknownVertex(f"edge {e.id}: unknown endpoint {e.u}")
        if e.v not in by_id:
            raise UnknownVertex(f"edge {e.id}: unknown endpoint {e.v}")
        pair = e.endpoints()
        if pair in seen_pairs:
            raise DuplicateEdge(f"edge {e.id}: duplicate of pair {pair}")
        seen_pairs.add(pair)
        if by_id[e.u].robot == by_id[e.v].robot:
            raise IntraBlockEdge(
                f"edge {e.id}: both endpoints owned by robot {by_id[e.u].robot}"
            )
    return ExchangeGraph(vertices, edges, num_robots)


# -- budgets -------------------------------------------------------------


@dataclass(frozen=True)
class TotalCount:
    """Broadcast at most `b` observations in total (cardinality)."""

    b: int
    kind: str = field(default="tu", init=False)

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("communication budget must be >= 0")


@dataclass(frozen=True)
class TotalBytes:
    """Broadcast at most `b` bytes in total (knapsack over vertex weights)."""

    b: int
    kind: str = field(default="tn", init=False)

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("communication budget must be >= 0")


@dataclass(frozen=True)
class PerBlockCount:
    """Broadcast at most `limits[i]` observations from block i (partition matroid).

    Blocks default to the robot partition; pass explicit `blocks` (a tuple of
    vertex-id tuples covering every vertex exactly once) to override.
    """

    limits: tuple[int, ...]
    blocks: tuple[tuple[int, ...], ...] | None = None
    kind: str = field(default="iu", init=False)

    def __post_init__(self):
        object.__setattr__(self, "limits", tuple(self.limits))
        if self.blocks is not None:
            object.__setattr__(self, "blocks", tuple(tuple(b) for b in self.blocks))
            if len(self.blocks) != len(self.limits):
                raise BlockMismatch(
                    f"{len(self.limits)} limits for {len(self.blocks)} blocks"
                )
        if any(b < 0 for b in self.limits):
            raise ValueError("block budgets must be >= 0")

    def resolve_blocks(self, graph: ExchangeGraph) -> tuple[tuple[int, ...], ...]:
        if self.blocks is not None:
            return self.blocks
        if len(self.limits) != graph.num_robots:
            raise BlockMismatch(
                f"{len(self.limits)} block budgets for {graph.num_robots} robots"
            )
        return graph.blocks


@dataclass(frozen=True)
class TotalVerifications:
    """Verify at most `k` candidate matches in total."""

    k: int
    kind: str = field(default="total", init=False)

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("verification budget must be >= 0")


@dataclass(frozen=True)
class PerRobotVerifications:
    """Robot i verifies at most `limits[i]` matches, worst case."""

    limits: tuple[int, ...]
    kind: str = field(default="individual", init=False)

    def __post_init__(self):
        object.__setattr__(self, "limits", tuple(self.limits))
        if any(k < 0 for k in self.limits):
            raise ValueError("verification budgets must be >= 0")


@dataclass(frozen=True)
class PerPairVerifications:
    """Robots i and j together verify at most `limits[(i, j)]` matches, i < j.

    Missing pairs default to 0.
    """

    limits: tuple[tuple[tuple[int, int], int], ...]
    kind: str = field(default="pairwise", init=False)

    def __post_init__(self):
        norm = []
        for (i, j), k in dict(self.limits).items():
            if i > j:
                i, j = j, i
            if k < 0:
                raise ValueError("verification budgets must be >= 0")
            norm.append(((i, j), k))
        object.__setattr__(self, "limits", tuple(sorted(norm)))

    def as_dict(self) -> dict[tuple[int, int], int]:
        return dict(self.limits)

    def cap(self, i: int, j: int) -> int:
        pair = (i, j) if i < j else (j, i)
        return dict(self.limits).get(pair, 0)


CommBudget = TotalCount | TotalBytes | PerBlockCount
CompBudget = TotalVerifications | PerRobotVerifications | PerPairVerifications


@dataclass(frozen=True)
class Budget:
    comm: CommBudget
    comp: CompBudget


# -- plans ---------------------------------------------------------------


@dataclass(frozen=True)
class Plan:
    """Selected broadcast vertices and verification edges with usage totals."""

    vertices: tuple[int, ...]
    edges: tuple[int, ...]
    objective_value: float
    comm_count: int
    comm_bytes: int
    verifications: int
    per_pair_verifications: tuple[tuple[tuple[int, int], int], ...]

    def per_pair_dict(self) -> dict[tuple[int, int], int]:
        return dict(self.per_pair_verifications)


EMPTY_PLAN = Plan((), (), 0.0, 0, 0, 0, ())


def make_plan(graph: ExchangeGraph, vertex_ids, edge_ids, objective_value: float) -> Plan:
    """Assemble a plan from selections, computing usage totals from the graph."""
    vids = tuple(sorted(set(vertex_ids)))
    eids = tuple(sorted(set(edge_ids)))
    comm_bytes = sum(graph.vertex(v).weight for v in vids)
    per_pair: dict[tuple[int, int], int] = {}
    for eid in eids:
        pair = graph.robot_pair(eid)
        per_pair[pair] = per_pair.get(pair, 0) + 1
    return Plan(
        vertices=vids,
        edges=eids,
        objective_value=float(objective_value),
        comm_count=len(vids),
        comm_bytes=comm_bytes,
        verifications=len(eids),
        per_pair_verifications=tuple(sorted(per_pair.items())),
    )


@dataclass(frozen=True)
class Feasibility:
    """Per-constraint verdict from :func:`check_feasible`."""

    feasible: bool
    covering_ok: bool
    comm_ok: bool
    comp_ok: bool
    violations: tuple[str, ...]


def worst_case_robot_verifications(graph: ExchangeGraph, edge_ids) -> dict[int, int]:
    """Worst-case verification count per robot: every selected edge incident
    to one of a robot's vertices may land on that robot."""
    counts = {r: 0 for r in range(graph.num_robots)}
    for eid in edge_ids:
        i, j = graph.robot_pair(eid)
        counts[i] += 1
        counts[j] += 1
    return counts


def check_feasible(graph: ExchangeGraph, plan: Plan, budget: Budget) -> Feasibility:
    """Check covering, communication, and verification constraints.

    Never raises on violations; the verdict lists them.  Unknown ids in the
    plan do raise (they indicate a plan for a different graph).
    """
    violations: list[str] = []
    selected = set(plan.vertices)
    for vid in plan.vertices:
        graph.vertex(vid)

    covering_ok = True
    for eid in plan.edges:
        e = graph.edge(eid)
        if e.u not in selected and e.v not in selected:
            covering_ok = False
            violations.append(f"edge {eid} not covered by selected vertices")

    comm = budget.comm
    comm_ok = True
    if comm.kind == "tu":
        if len(selected) > comm.b:
            comm_ok = False
            violations.append(f"comm: {len(selected)} vertices > budget {comm.b}")
    elif comm.kind == "tn":
        used = sum(graph.vertex(v).weight for v in selected)
        if used > comm.b:
            comm_ok = False
            violations.append(f"comm: {used} bytes > budget {comm.b}")
    elif comm.kind == "iu":
        blocks = comm.resolve_blocks(graph)
        for i, block in enumerate(blocks):
            used = len(selected.intersection(block))
            if used > comm.limits[i]:
                comm_ok = False
                violations.append(f"comm: block {i} uses {used} > budget {comm.limits[i]}")
    else:  # pragma: no cover - exhaustive over budget kinds
        raise TypeError(f"unknown communication budget {comm!r}")

    comp = budget.comp
    comp_ok = True
    if comp.kind == "total":
        if len(plan.edges) > comp.k:
            comp_ok = False
            violations.append(f"comp: {len(plan.edges)} verifications > budget {comp.k}")
    elif comp.kind == "individual":
        if len(comp.limits) != graph.num_robots:
            raise BlockMismatch(
                f"{len(comp.limits)} robot budgets for {graph.num_robots} robots"
            )
        worst = worst_case_robot_verifications(graph, plan.edges)
        for r, k in enumerate(comp.limits):
            if worst[r] > k:
                comp_ok = False
                violations.append(f"comp: robot {r} worst case {worst[r]} > budget {k}")
    elif comp.kind == "pairwise":
        per_pair = plan.per_pair_dict()
        for pair, used in per_pair.items():
            cap = comp.cap(*pair)
            if used > cap:
                comp_ok = False
                violations.append(f"comp: pair {pair} verifies {used} > budget {cap}")
    else:  # pragma: no cover
        raise TypeError(f"unknown computation budget {comp!r}")

    return Feasibility(
        feasible=covering_ok and comm_ok and comp_ok,
        covering_ok=covering_ok,
        comm_ok=comm_ok,
        comp_ok=comp_ok,
        violations=tuple(violations),
    )


def min_vertex_cover_size(graph: ExchangeGraph) -> int:
    """Exact minimum vertex cover size of the candidate graph.

    Branch and bound on uncovered edges with a greedy matching lower bound;
    exponential only in the cover size, fine for bench-scale instances.
    """
    edges = [graph.edge(eid).endpoints() for eid in graph.edge_ids()]

    def matching_bound(remaining) -> int:
        taken: set[int] = set()
        size = 0
        for u, v in remaining:
            if u not in taken and v not in taken:
                taken.update((u, v))
                size += 1
        return size

    # greedy 2-approximation seeds the incumbent
    best = 2 * matching_bound(edges)

    def solve(remaining: list[tuple[int, int]], used: int, best: int) -> int:
        if not remaining:
            return min(best, used)
        if used + matching_bound(remaining) >= best:
            return best
        u, v = remaining[0]
        for pick in (u, v):
            rest = [e for e in remaining if pick not in e]
            best = solve(rest, used + 1, best)
        return best

    return solve(edges, 0, best)
