"""Synthetic multi-robot rendezvous worlds with ground-truth matches.

Robots random-walk on an integer grid; candidate matches appear wherever two
robots' poses coincide or sit on adjacent cells.  Every candidate carries a
probability drawn uniformly at random and a Bernoulli ground-truth realization
of that probability, so planner objectives can be scored against what a real
verification pass would have discovered.

Randomness comes from NumPy's PCG64 generator, seeded through SeedSequence
with a fixed stream id per purpose (trajectories, candidates, realization,
baseline).  The generator choice is part of the reproducibility contract and
must not change silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateWorld, InfeasiblePlan
from .graph import Edge, ExchangeGraph, Plan, Vertex, build_graph
from .objectives import InfoContext, PoseGraphContext

_STREAM_TRAJECTORY = 0
_STREAM_CANDIDATES = 1
_STREAM_REALIZATION = 2
_STREAM_BASELINE = 3

# headings: 0=+x, 1=+y, 2=-x, 3=-y
_DX = (1, 0, -1, 0)
_DY = (0, 1, 0, -1)


def _rng(seed: int, stream: int, extra: tuple[int, ...] = ()) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, stream) + extra)))


@dataclass(frozen=True)
class SimConfig:
    grid_size: int = 10
    weight_bytes: int = 1
    straight_prob: float = 0.6
    odom_precision_t: float = 10.0
    odom_precision_r: float = 50.0
    candidate_precision_t: tuple[float, float] = (5.0, 15.0)
    candidate_precision_r: tuple[float, float] = (25.0, 75.0)
    anchor_precision: float = 10.0

    def to_json_dict(self) -> dict:
        return {
            "grid_size": self.grid_size,
            "weight_bytes": self.weight_bytes,
            "straight_prob": self.straight_prob,
            "odom_precision_t": self.odom_precision_t,
            "odom_precision_r": self.odom_precision_r,
            "candidate_precision_t": list(self.candidate_precision_t),
            "candidate_precision_r": list(self.candidate_precision_r),
            "anchor_precision": self.anchor_precision,
        }


@dataclass(frozen=True)
class SyntheticWorld:
    num_robots: int
    steps_per_robot: int
    candidate_rate: float
    seed: int
    config: SimConfig
    trajectories: tuple[tuple[tuple[int, int, int], ...], ...]  # (x, y, heading)
    graph: ExchangeGraph
    ground_truth: tuple[bool, ...]  # by edge id
    pose_ctx: PoseGraphContext = field(repr=False)

    def pose_index(self, robot: int, step: int) -> int:
        return robot * self.steps_per_robot + step

    def info_context(self) -> InfoContext:
        """Joint information matrix from the prior pose graph plus one anchor,
        and per-candidate relative-pose information blocks."""
        n = self.pose_ctx.num_poses
        dim = 3 * n
        h_init = np.zeros((dim, dim))
        for u, v, tp, tr in self.pose_ctx.prior_edges:
            _add_relpose_block(h_init, u, v, tp, tr)
        a = self.config.anchor_precision
        h_init[0:3, 0:3] += np.diag([a, a, a])
        edge_info = {}
        for eid in self.graph.edge_ids():
            e = self.graph.edge(eid)
            u, v = self.pose_ctx.candidate_poses[eid]
            h = np.zeros((dim, dim))
            _add_relpose_block(h, u, v, e.precision_t, e.precision_r)
            edge_info[eid] = h
        return InfoContext(h_init, edge_info, validate=False)


def _add_relpose_block(h: np.ndarray, u: int, v: int, tau_t: float, tau_r: float):
    """Information of a planar relative-pose measurement between poses u, v
    with isotropic translation precision tau_t and rotation precision tau_r."""
    d = np.diag([tau_t, tau_t, tau_r])
    su, sv = 3 * u, 3 * v
    h[su : su + 3, su : su + 3] += d
    h[sv : sv + 3, sv : sv + 3] += d
    h[su : su + 3, sv : sv + 3] -= d
    h[sv : sv + 3, su : su + 3] -= d


def gen_world(
    r: int,
    steps_per_robot: int,
    candidate_rate: float,
    seed: int,
    config: SimConfig = SimConfig(),
) -> SyntheticWorld:
    """Generate a rendezvous world; deterministic for a given seed.

    Raises DegenerateWorld when no candidate survives thinning (callers may
    retry with a different seed).
    """
    if r < 2:
        raise ValueError("need at least two robots")
    if steps_per_robot < 2:
        raise ValueError("need at least two poses per robot")
    if not (0.0 <= candidate_rate <= 1.0):
        raise ValueError("candidate_rate must be in [0,1]")

    rng_traj = _rng(seed, _STREAM_TRAJECTORY)
    grid = config.grid_size
    trajectories = []
    for _ in range(r):
        x = int(rng_traj.integers(0, grid))
        y = int(rng_traj.integers(0, grid))
        heading = int(rng_traj.integers(0, 4))
        poses = [(x, y, heading)]
        for _ in range(steps_per_robot - 1):
            u = rng_traj.random()
            if u >= config.straight_prob:
                heading = (heading + (1 if u < (1 + config.straight_prob) / 2 else 3)) % 4
            nx, ny = x + _DX[heading], y + _DY[heading]
            while not (0 <= nx < grid and 0 <= ny < grid):
                heading = (heading + 1) % 4
                nx, ny = x + _DX[heading], y + _DY[heading]
            x, y = nx, ny
            poses.append((x, y, heading))
        trajectories.append(tuple(poses))

    rng_cand = _rng(seed, _STREAM_CANDIDATES)
    vertices = [
        Vertex(i * steps_per_robot + t, i, config.weight_bytes)
        for i in range(r)
        for t in range(steps_per_robot)
    ]
    edges = []
    candidate_poses = {}
    eid = 0
    lo_t, hi_t = config.candidate_precision_t
    lo_r, hi_r = config.candidate_precision_r
    for i in range(r):
        for j in range(i + 1, r):
            for ti, (xi, yi, _) in enumerate(trajectories[i]):
                for tj, (xj, yj, _) in enumerate(trajectories[j]):
                    if abs(xi - xj) + abs(yi - yj) > 1:
                        continue
                    if rng_cand.random() >= candidate_rate:
                        continue
                    p = float(rng_cand.uniform(0.0, 1.0))
                    tau_t = float(rng_cand.uniform(lo_t, hi_t))
                    tau_r = float(rng_cand.uniform(lo_r, hi_r))
                    u = i * steps_per_robot + ti
                    v = j * steps_per_robot + tj
                    edges.append(Edge(eid, u, v, p, precision_t=tau_t, precision_r=tau_r))
                    candidate_poses[eid] = (u, v)
                    eid += 1
    if not edges:
        raise DegenerateWorld(
            f"no candidates generated (r={r}, steps={steps_per_robot}, rate={candidate_rate})"
        )
    graph = build_graph(vertices, edges, r)

    ground_truth = realize_ground_truth([e.probability for e in edges], seed)

    prior = []
    for i in range(r):
        for t in range(steps_per_robot - 1):
            u = i * steps_per_robot + t
            prior.append((u, u + 1, config.odom_precision_t, config.odom_precision_r))
    # initial-alignment priors: keep the joint pose graph connected pre-rendezvous
    for i in range(1, r):
        prior.append(
            (0, i * steps_per_robot, config.odom_precision_t, config.odom_precision_r)
        )
    pose_ctx = PoseGraphContext(r * steps_per_robot, prior, candidate_poses)

    return SyntheticWorld(
        num_robots=r,
        steps_per_robot=steps_per_robot,
        candidate_rate=candidate_rate,
        seed=seed,
        config=config,
        trajectories=tuple(trajectories),
        graph=graph,
        ground_truth=ground_truth,
        pose_ctx=pose_ctx,
    )


def realize_ground_truth(probabilities, seed: int) -> tuple[bool, ...]:
    """Independent Bernoulli realization of candidate probabilities."""
    rng = _rng(seed, _STREAM_REALIZATION)
    return tuple(bool(rng.random() < p) for p in probabilities)


@dataclass(frozen=True)
class ExecutionOutcome:
    discovered_true_loops: int
    comm_bytes_total: int
    comm_bytes_per_robot: tuple[int, ...]
    verifications_total: int
    verifications_per_robot: tuple[int, ...]
    verifications_per_pair: tuple[tuple[tuple[int, int], int], ...]

    def comm_fractions(self) -> tuple[float, ...]:
        if self.comm_bytes_total == 0:
            return tuple(0.0 for _ in self.comm_bytes_per_robot)
        return tuple(b / self.comm_bytes_total for b in self.comm_bytes_per_robot)

    def verification_fractions(self) -> tuple[float, ...]:
        if self.verifications_total == 0:
            return tuple(0.0 for _ in self.verifications_per_robot)
        return tuple(v / self.verifications_total for v in self.verifications_per_robot)


def plan_usage(graph: ExchangeGraph, plan: Plan) -> ExecutionOutcome:
    """Communication/verification labor split induced by a plan.

    A verification lands on the robot that did not broadcast; when both
    endpoints were broadcast the lower robot index does the work.
    """
    selected = set(plan.vertices)
    comm = [0] * graph.num_robots
    for vid in plan.vertices:
        v = graph.vertex(vid)
        comm[v.robot] += v.weight
    verif = [0] * graph.num_robots
    per_pair: dict[tuple[int, int], int] = {}
    for eid in plan.edges:
        e = graph.edge(eid)
        ru, rv = graph.vertex(e.u).robot, graph.vertex(e.v).robot
        if e.u in selected and e.v in selected:
            worker = min(ru, rv)
        elif e.u in selected:
            worker = rv
        elif e.v in selected:
            worker = ru
        else:
            raise InfeasiblePlan(f"edge {eid} is not covered by the plan")
        verif[worker] += 1
        pair = (ru, rv) if ru < rv else (rv, ru)
        per_pair[pair] = per_pair.get(pair, 0) + 1
    return ExecutionOutcome(
        discovered_true_loops=0,
        comm_bytes_total=sum(comm),
        comm_bytes_per_robot=tuple(comm),
        verifications_total=len(plan.edges),
        verifications_per_robot=tuple(verif),
        verifications_per_pair=tuple(sorted(per_pair.items())),
    )


def realize_and_evaluate(world: SyntheticWorld, plan: Plan) -> ExecutionOutcome:
    """Score an executed plan against the world's ground truth."""
    usage = plan_usage(world.graph, plan)  # raises InfeasiblePlan on bad cover
    discovered = sum(1 for eid in plan.edges if world.ground_truth[eid])
    return ExecutionOutcome(
        discovered_true_loops=discovered,
        comm_bytes_total=usage.comm_bytes_total,
        comm_bytes_per_robot=usage.comm_bytes_per_robot,
        verifications_total=usage.verifications_total,
        verifications_per_robot=usage.verifications_per_robot,
        verifications_per_pair=usage.verifications_per_pair,
    )


@dataclass(frozen=True)
class BaselineTrial:
    trial: int
    objective: float
    discovered: int | None
    comm_bytes: int
    plan: Plan


@dataclass(frozen=True)
class BaselineResult:
    trials: tuple[BaselineTrial, ...]
    mean_objective: float
    mean_discovered: float | None
    mean_comm_bytes: float


def random_baseline(
    graph: ExchangeGraph,
    b: int,
    k: int,
    trials: int = 10,
    seed: int = 0,
    objective=None,
    world: SyntheticWorld | None = None,
) -> BaselineResult:
    """Uniformly random plans: b vertices, then k covered edges per trial.

    Reports per-trial and mean objective values; ground-truth discovery counts
    are included when a world is supplied.  Deterministic per (seed, trial).
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    from .graph import make_plan
    from .objectives import NlcObjective

    if objective is None:
        objective = NlcObjective(graph)
    vids = list(graph.vertex_ids())
    rows = []
    for t in range(trials):
        rng = _rng(seed, _STREAM_BASELINE, (t,))
        chosen_v = sorted(
            int(v) for v in rng.choice(vids, size=min(b, len(vids)), replace=False)
        ) if vids and b > 0 else []
        covered = list(graph.edges_of(chosen_v))
        if covered and k > 0:
            chosen_e = sorted(
                int(e) for e in rng.choice(covered, size=min(k, len(covered)), replace=False)
            )
        else:
            chosen_e = []
        plan = make_plan(graph, chosen_v, chosen_e, objective.value(chosen_e))
        discovered = None
        if world is not None:
            discovered = realize_and_evaluate(world, plan).discovered_true_loops
        rows.append(
            BaselineTrial(
                trial=t,
                objective=plan.objective_value,
                discovered=discovered,
                comm_bytes=plan.comm_bytes,
                plan=plan,
            )
        )
    mean_obj = sum(r.objective for r in rows) / trials
    mean_disc = (
        sum(r.discovered for r in rows) / trials if world is not None else None
    )
    mean_comm = sum(r.comm_bytes for r in rows) / trials
    return BaselineResult(
        trials=tuple(rows),
        mean_objective=mean_obj,
        mean_discovered=mean_disc,
        mean_comm_bytes=mean_comm,
    )
