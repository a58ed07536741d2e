"""Optimality certificates: exact brute force and convex relaxation bounds.

Brute force enumerates vertex subsets (Gray-code order, incremental coverage)
and is guarded to bench-scale instances.  The relaxation path provides an
upper bound on the optimum: a linear program for the expected-match-count
objective, and a conditional-gradient bound for the concave log-det
relaxations, where the linearization gap certifies the distance to the
relaxed optimum.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InstanceTooLarge
from .graph import Budget, ExchangeGraph, Plan, make_plan
from .objectives import InfoContext, Objective, PoseGraphContext, _logdet_spd
from .simplex import solve_lp

BRUTE_FORCE_MAX_VERTICES = 16
BRUTE_FORCE_MAX_EDGES = 20
_PAIRWISE_COMBO_GUARD = 500_000


@dataclass(frozen=True)
class FractionalSolution:
    """Relaxed vertex/edge indicators with a certified distance to the
    relaxation optimum (zero for an exact LP solve)."""

    pi: tuple[float, ...]
    ell: tuple[float, ...]
    value: float
    bound_gap: float


@dataclass(frozen=True)
class Certificate:
    kind: str  # "OPT_bruteforce" | "UPT_lp" | "UPT_frankwolfe"
    value: float
    fractional: FractionalSolution | None = None
    rounded_plan: Plan | None = None
    valid: bool = True
    converged: bool = True
    iterations: int = 0

    @property
    def gap(self) -> float:
        return self.fractional.bound_gap if self.fractional else 0.0


# -- exact optimum by enumeration -----------------------------------------


def _gray_subsets(n: int):
    """Yield (flipped_index, added) for a Gray-code walk over n-bit subsets."""
    for i in range(1, 1 << n):
        j = (i & -i).bit_length() - 1
        yield j


class _CommTracker:
    """Incremental communication feasibility along the Gray-code walk."""

    def __init__(self, graph: ExchangeGraph, comm):
        self.comm = comm
        self.graph = graph
        self.count = 0
        self.bytes = 0
        if comm.kind == "iu":
            blocks = comm.resolve_blocks(graph)
            self.block_of = {}
            for i, blk in enumerate(blocks):
                for vid in blk:
                    self.block_of[vid] = i
            self.block_used = [0] * len(blocks)

    def toggle(self, vid: int, added: bool):
        d = 1 if added else -1
        self.count += d
        self.bytes += d * self.graph.vertex(vid).weight
        if self.comm.kind == "iu":
            self.block_used[self.block_of[vid]] += d

    def feasible(self) -> bool:
        if self.comm.kind == "tu":
            return self.count <= self.comm.b
        if self.comm.kind == "tn":
            return self.bytes <= self.comm.b
        return all(u <= lim for u, lim in zip(self.block_used, self.comm.limits))

    def cost(self) -> int:
        return self.bytes if self.comm.kind == "tn" else self.count


class _InnerBest:
    """Best edge subset of a coverage mask under a computation budget.

    Shares one objective-value cache across coverage masks; for monotone
    objectives the optimum has maximal size, so only maximal-size subsets are
    enumerated.
    """

    def __init__(self, graph: ExchangeGraph, objective: Objective, comp):
        self.graph = graph
        self.objective = objective
        self.comp = comp
        eids = list(graph.edge_ids())
        self.eids = eids
        self.index = {eid: i for i, eid in enumerate(eids)}
        self.by_prob = sorted(eids, key=lambda eid: (-graph.edge(eid).probability, eid))
        self.modular = objective.kind == "nlc"
        self._fcache: dict[int, float] = {0: 0.0}
        self._memo: dict[int, tuple[float, tuple[int, ...]]] = {}
        if comp.kind == "pairwise":
            self.pair_of = {eid: graph.robot_pair(eid) for eid in eids}

    def _f(self, ids: tuple[int, ...]) -> float:
        mask = 0
        for eid in ids:
            mask |= 1 << self.index[eid]
        if mask not in self._fcache:
            self._fcache[mask] = self.objective.value(ids)
        return self._fcache[mask]

    def best(self, cover_mask: int) -> tuple[float, tuple[int, ...]]:
        if cover_mask in self._memo:
            return self._memo[cover_mask]
        present = [eid for eid in self.eids if cover_mask >> self.index[eid] & 1]
        result = self._best_edges(present)
        self._memo[cover_mask] = result
        return result

    def _best_edges(self, present: list[int]) -> tuple[float, tuple[int, ...]]:
        comp = self.comp
        if comp.kind == "total":
            return self._best_total(present, comp.k)
        if comp.kind == "pairwise":
            return self._best_pairwise(present, comp.as_dict())
        return self._best_individual(present, comp.limits)

    def _best_total(self, present, k):
        size = min(k, len(present))
        if size <= 0:
            return 0.0, ()
        if self.modular:
            ranked = [eid for eid in self.by_prob if eid in set(present)][:size]
            chosen = tuple(sorted(ranked))
            return self._f(chosen), chosen
        best_val, best_edges = -math.inf, ()
        for combo in itertools.combinations(sorted(present), size):
            val = self._f(combo)
            if val > best_val:
                best_val, best_edges = val, combo
        return best_val, best_edges

    def _best_pairwise(self, present, caps):
        groups: dict[tuple[int, int], list[int]] = {}
        for eid in present:
            groups.setdefault(self.pair_of[eid], []).append(eid)
        if self.modular:
            chosen = []
            for pair, eids in sorted(groups.items()):
                cap = caps.get(pair, 0)
                eids.sort(key=lambda e: (-self.graph.edge(e).probability, e))
                chosen.extend(eids[:cap])
            chosen = tuple(sorted(chosen))
            return self._f(chosen), chosen
        per_pair_choices = []
        combos = 1
        for pair, eids in sorted(groups.items()):
            size = min(caps.get(pair, 0), len(eids))
            choices = list(itertools.combinations(sorted(eids), size))
            combos *= len(choices)
            if combos > _PAIRWISE_COMBO_GUARD:
                raise InstanceTooLarge("pairwise brute force exceeds enumeration guard")
            per_pair_choices.append(choices)
        best_val, best_edges = -math.inf, ()
        for parts in itertools.product(*per_pair_choices):
            combo = tuple(sorted(eid for part in parts for eid in part))
            val = self._f(combo)
            if val > best_val:
                best_val, best_edges = val, combo
        return best_val, best_edges

    def _best_individual(self, present, limits):
        if len(present) > 16:
            raise InstanceTooLarge("individual-budget brute force limited to 16 covered edges")
        best_val, best_edges = 0.0, ()
        for size in range(len(present), -1, -1):
            for combo in itertools.combinations(sorted(present), size):
                loads = [0] * self.graph.num_robots
                ok = True
                for eid in combo:
                    i, j = self.graph.robot_pair(eid)
                    loads[i] += 1
                    loads[j] += 1
                    if loads[i] > limits[i] or loads[j] > limits[j]:
                        ok = False
                        break
                if ok:
                    val = self._f(combo)
                    if val > best_val:
                        best_val, best_edges = val, combo
        return best_val, best_edges


def brute_force_opt(graph: ExchangeGraph, objective: Objective, budget: Budget) -> Certificate:
    """Exact optimum by exhausting vertex subsets; guarded to small instances.

    Ties are resolved toward the lexicographically smallest plan, so the
    result is deterministic.
    """
    n, m = graph.num_vertices, graph.num_edges
    if n > BRUTE_FORCE_MAX_VERTICES or m > BRUTE_FORCE_MAX_EDGES:
        raise InstanceTooLarge(f"brute force guarded to n<={BRUTE_FORCE_MAX_VERTICES}, m<={BRUTE_FORCE_MAX_EDGES}")

    vids = list(graph.vertex_ids())
    inner = _InnerBest(graph, objective, budget.comp)
    eindex = inner.index
    incident_mask = {
        vid: sum(1 << eindex[eid] for eid in graph.incident_edges(vid)) for vid in vids
    }
    tracker = _CommTracker(graph, budget.comm)

    best_value = 0.0
    best_key: tuple = ((), ())
    counts = [0] * m
    cover_mask = 0
    selected: set[int] = set()

    for flip in _gray_subsets(len(vids)):
        vid = vids[flip]
        added = vid not in selected
        if added:
            selected.add(vid)
        else:
            selected.remove(vid)
        tracker.toggle(vid, added)
        d = 1 if added else -1
        mask = incident_mask[vid]
        j = 0
        mm = mask
        while mm:
            if mm & 1:
                counts[j] += d
                if counts[j] == (1 if added else 0):
                    cover_mask ^= 1 << j
            mm >>= 1
            j += 1
        if not tracker.feasible():
            continue
        value, edges = inner.best(cover_mask)
        key = (tuple(sorted(selected)), edges)
        if value > best_value or (value == best_value and key < best_key):
            best_value = value
            best_key = key

    plan = make_plan(graph, best_key[0], best_key[1], best_value)
    return Certificate(kind="OPT_bruteforce", value=best_value, rounded_plan=plan)


def brute_force_opt_grid(
    graph: ExchangeGraph, objective: Objective, b_values, k_values
) -> dict[tuple[int, int], float]:
    """Exact optima for every (b, k) on a grid under a total broadcast count.

    One pass over vertex subsets records the cheapest communication cost per
    distinct coverage; inner optima are then shared across the whole grid.
    """
    n, m = graph.num_vertices, graph.num_edges
    if n > BRUTE_FORCE_MAX_VERTICES or m > BRUTE_FORCE_MAX_EDGES:
        raise InstanceTooLarge("grid brute force guarded to bench-scale instances")
    vids = list(graph.vertex_ids())
    from .graph import TotalVerifications

    min_cost: dict[int, int] = {0: 0}
    counts = [0] * m
    cover_mask = 0
    selected: set[int] = set()
    inner_cache = {}
    eindex = {eid: i for i, eid in enumerate(graph.edge_ids())}
    incident_mask = {
        vid: sum(1 << eindex[eid] for eid in graph.incident_edges(vid)) for vid in vids
    }
    for flip in _gray_subsets(len(vids)):
        vid = vids[flip]
        added = vid not in selected
        (selected.add if added else selected.remove)(vid)
        d = 1 if added else -1
        mm = incident_mask[vid]
        j = 0
        while mm:
            if mm & 1:
                counts[j] += d
                if counts[j] == (1 if added else 0):
                    cover_mask ^= 1 << j
            mm >>= 1
            j += 1
        cost = len(selected)
        if cover_mask not in min_cost or cost < min_cost[cover_mask]:
            min_cost[cover_mask] = cost

    out: dict[tuple[int, int], float] = {}
    for k in sorted(set(k_values)):
        inner = _InnerBest(graph, objective, TotalVerifications(k))
        per_mask = {mask: inner.best(mask)[0] for mask in min_cost}
        for b in sorted(set(b_values)):
            best = 0.0
            for mask, cost in min_cost.items():
                if cost <= b and per_mask[mask] > best:
                    best = per_mask[mask]
            out[(b, k)] = best
    return out


# -- LP relaxation (expected match count) ----------------------------------


def _polytope_rows(graph: ExchangeGraph, b: int, k: int):
    """Rows of the relaxed feasible region over [pi (n), ell (m)]."""
    n, m = graph.num_vertices, graph.num_edges
    vindex = {vid: i for i, vid in enumerate(graph.vertex_ids())}
    eindex = {eid: i for i, eid in enumerate(graph.edge_ids())}
    rows = []
    rhs = []
    rows.append([1.0] * n + [0.0] * m)
    rhs.append(float(b))
    rows.append([0.0] * n + [1.0] * m)
    rhs.append(float(k))
    for eid in graph.edge_ids():
        e = graph.edge(eid)
        row = [0.0] * (n + m)
        row[vindex[e.u]] = -1.0
        row[vindex[e.v]] = -1.0
        row[n + eindex[eid]] = 1.0
        rows.append(row)
        rhs.append(0.0)
    return rows, rhs


def lp_relax_modular(graph: ExchangeGraph, b: int, k: int) -> Certificate:
    """Upper bound on the expected-match-count optimum via the LP relaxation."""
    n, m = graph.num_vertices, graph.num_edges
    if m == 0:
        frac = FractionalSolution(tuple([0.0] * n), (), 0.0, 0.0)
        return Certificate(kind="UPT_lp", value=0.0, fractional=frac)
    rows, rhs = _polytope_rows(graph, b, k)
    cost = [0.0] * n + [graph.edge(eid).probability for eid in graph.edge_ids()]
    res = solve_lp(cost, rows, rhs, [1.0] * (n + m))
    optimal = res.status == "optimal"
    gap = 0.0 if optimal else res.residual_bound()
    frac = FractionalSolution(
        pi=tuple(res.x[:n]), ell=tuple(res.x[n:]), value=res.objective, bound_gap=gap
    )
    value = res.objective if optimal else res.objective + gap
    return Certificate(
        kind="UPT_lp", value=float(value), fractional=frac, valid=optimal,
        iterations=res.iterations,
    )


# -- conditional-gradient bound for concave log-det relaxations ------------


def _line_search(directional, lo: float = 0.0, hi: float = 1.0) -> float:
    """Maximize a concave 1-d slice: root of its (decreasing) derivative.

    Safeguarded Newton via secant within the bracket; returns hi when the
    derivative is still positive there.
    """
    d_lo = directional(lo)
    if d_lo <= 0.0:
        return lo
    d_hi = directional(hi)
    if d_hi >= 0.0:
        return hi
    a, b_, da, db = lo, hi, d_lo, d_hi
    t = 0.5 * (a + b_)
    for _ in range(80):
        if db != da:
            t_sec = b_ - db * (b_ - a) / (db - da)
            if not (a < t_sec < b_):
                t_sec = 0.5 * (a + b_)
        else:
            t_sec = 0.5 * (a + b_)
        t = t_sec
        dt = directional(t)
        if abs(dt) < 1e-14 or (b_ - a) < 1e-15:
            break
        if dt > 0:
            a, da = t, dt
        else:
            b_, db = t, dt
    return t


def _frank_wolfe(graph, b, k, value_fn, grad_fn, iterations, tol):
    """Maximize a concave function of the edge indicators over the relaxed
    polytope.  Returns (value, gap, pi, ell, iterations_used, converged).

    Conditional gradient with away steps: the iterate is kept as an explicit
    convex combination of polytope vertices so mass can be pulled off a bad
    vertex, which avoids the zigzagging that stalls the plain method when the
    optimum lies inside a face.  The reported gap is the plain linearization
    maximum, which bounds the distance to the relaxation optimum regardless.
    """
    n, m = graph.num_vertices, graph.num_edges
    rows, rhs = _polytope_rows(graph, b, k)
    upper = [1.0] * (n + m)

    start = (tuple([0.0] * n), tuple([0.0] * m))
    active: dict[tuple, float] = {start: 1.0}

    def combine():
        pi = np.zeros(n)
        ell = np.zeros(m)
        for (vp, ve), w in active.items():
            pi += w * np.asarray(vp)
            ell += w * np.asarray(ve)
        return pi, ell

    pi, ell = combine()
    gap = 0.0
    used = 0
    converged = True
    for it in range(iterations + 1):
        grad = grad_fn(ell)
        res = solve_lp([0.0] * n + list(grad), rows, rhs, upper)
        fw_vertex = (tuple(float(x) for x in res.x[:n]), tuple(float(x) for x in res.x[n:]))
        d_fw = np.asarray(fw_vertex[1]) - ell
        gap = float(grad @ d_fw)
        used = it
        if gap <= tol:
            break
        if it == iterations:
            converged = False
            break
        away_vertex = max(active, key=lambda v: (-float(grad @ np.asarray(v[1])), v))
        d_away = ell - np.asarray(away_vertex[1])
        gap_away = float(grad @ d_away)
        if gap >= gap_away or len(active) == 1:
            direction, cap, target, is_away = d_fw, 1.0, fw_vertex, False
        else:
            w = active[away_vertex]
            cap = w / (1.0 - w) if w < 1.0 - 1e-12 else 1e6
            direction, target, is_away = d_away, away_vertex, True
        if not np.any(direction):
            step = 0.0
        else:
            step = _line_search(
                lambda t: float(grad_fn(ell + t * direction) @ direction), 0.0, cap
            )
        if step <= 0.0 and not is_away:
            step = min(cap, 2.0 / (it + 2.0))  # fallback keeps the iterate moving
        if is_away:
            scale = 1.0 + step
            for key in list(active):
                active[key] *= scale
            active[target] -= step
        else:
            scale = 1.0 - step
            for key in list(active):
                active[key] *= scale
            active[target] = active.get(target, 0.0) + step
        active = {key: w for key, w in active.items() if w > 1e-12}
        total = sum(active.values())
        active = {key: w / total for key, w in active.items()}
        pi, ell = combine()
    return float(value_fn(ell)), max(gap, 0.0), pi, ell, used, converged


def fw_relax_logdet(
    graph: ExchangeGraph,
    ctx: InfoContext,
    b: int,
    k: int,
    iterations: int = 500,
    tol: float = 1e-6,
) -> Certificate:
    """Upper bound on the information-gain optimum via conditional gradient.

    By concavity the linearization gap over the polytope bounds the distance
    to the relaxation optimum, so value + gap is a certified upper bound even
    without convergence.
    """
    m = graph.num_edges
    if m == 0:
        frac = FractionalSolution(tuple([0.0] * graph.num_vertices), (), 0.0, 0.0)
        return Certificate(kind="UPT_frankwolfe", value=0.0, fractional=frac)
    eids = list(graph.edge_ids())
    probs = np.array([graph.edge(eid).probability for eid in eids])
    infos = [ctx.edge_info[eid] for eid in eids]
    logdet_init = _logdet_spd(ctx.h_init)

    def matrix(ell):
        mtx = ctx.h_init.copy()
        for w, h in zip(ell * probs, infos):
            if w != 0.0:
                mtx += w * h
        return mtx

    def value_fn(ell):
        return _logdet_spd(matrix(ell)) - logdet_init

    def grad_fn(ell):
        inv = np.linalg.inv(matrix(ell))
        return np.array([p * float(np.sum(inv * h)) for p, h in zip(probs, infos)])

    value, gap, pi, ell, used, converged = _frank_wolfe(
        graph, b, k, value_fn, grad_fn, iterations, tol
    )
    frac = FractionalSolution(tuple(pi), tuple(ell), value, gap)
    return Certificate(
        kind="UPT_frankwolfe",
        value=value + gap,
        fractional=frac,
        converged=converged,
        iterations=used,
    )


def fw_relax_tree_connectivity(
    graph: ExchangeGraph,
    ctx: PoseGraphContext,
    b: int,
    k: int,
    iterations: int = 500,
    tol: float = 1e-6,
) -> Certificate:
    """Conditional-gradient bound for the tree-connectivity objective.

    Uses the concave log-tree-count surrogate where a fractional edge scales
    its expected Laplacian weight.  Off by default in the CLI; provided for
    parity with the log-det certificate.
    """
    m = graph.num_edges
    if m == 0:
        frac = FractionalSolution(tuple([0.0] * graph.num_vertices), (), 0.0, 0.0)
        return Certificate(kind="UPT_frankwolfe", value=0.0, fractional=frac)
    npose = ctx.num_poses
    eids = list(graph.edge_ids())

    # translational (index 0) and rotational (index 1) Laplacian parts
    def prior_lap(which: int) -> np.ndarray:
        lap = np.zeros((npose, npose))
        for u, v, tp, tr in ctx.prior_edges:
            w = tp if which == 0 else tr
            lap[u, u] += w
            lap[v, v] += w
            lap[u, v] -= w
            lap[v, u] -= w
        return lap

    cand = []
    for eid in eids:
        e = graph.edge(eid)
        u, v = ctx.candidate_poses[eid]
        cand.append((u, v, e.probability * e.precision_t, e.probability * e.precision_r))

    priors = [prior_lap(0), prior_lap(1)]
    base_logdet = [
        _logdet_spd(priors[0][1:, 1:]),
        _logdet_spd(priors[1][1:, 1:]),
    ]
    weights = [2.0, 1.0]

    def laplacian(which, ell):
        lap = priors[which].copy()
        for (u, v, wt, wr), le in zip(cand, ell):
            w = le * (wt if which == 0 else wr)
            if w != 0.0:
                lap[u, u] += w
                lap[v, v] += w
                lap[u, v] -= w
                lap[v, u] -= w
        return lap

    def value_fn(ell):
        total = 0.0
        for which in (0, 1):
            total += weights[which] * (
                _logdet_spd(laplacian(which, ell)[1:, 1:]) - base_logdet[which]
            )
        return total

    def grad_fn(ell):
        grad = np.zeros(len(eids))
        for which in (0, 1):
            inv = np.linalg.inv(laplacian(which, ell)[1:, 1:])
            for idx, (u, v, wt, wr) in enumerate(cand):
                w = wt if which == 0 else wr
                term = 0.0
                if u > 0:
                    term += inv[u - 1, u - 1]
                if v > 0:
                    term += inv[v - 1, v - 1]
                if u > 0 and v > 0:
                    term -= 2.0 * inv[u - 1, v - 1]
                grad[idx] += weights[which] * w * term
        return grad

    value, gap, pi, ell, used, converged = _frank_wolfe(
        graph, b, k, value_fn, grad_fn, iterations, tol
    )
    frac = FractionalSolution(tuple(pi), tuple(ell), value, gap)
    return Certificate(
        kind="UPT_frankwolfe",
        value=value + gap,
        fractional=frac,
        converged=converged,
        iterations=used,
    )


def round_fractional(
    graph: ExchangeGraph,
    fractional: FractionalSolution,
    b: int,
    k: int,
    objective: Objective,
) -> Plan:
    """Feasible plan from a fractional solution: top-b vertices by indicator,
    then top-k covered edges by indicator; ties break toward smaller ids."""
    vids = list(graph.vertex_ids())
    eids = list(graph.edge_ids())
    by_pi = sorted(zip(fractional.pi, vids), key=lambda t: (-t[0], t[1]))
    chosen_v = sorted(vid for _, vid in by_pi[: max(0, b)])
    covered = set(graph.edges_of(chosen_v))
    by_ell = sorted(
        ((l, eid) for l, eid in zip(fractional.ell, eids) if eid in covered),
        key=lambda t: (-t[0], t[1]),
    )
    chosen_e = sorted(eid for _, eid in by_ell[: max(0, k)])
    return make_plan(graph, chosen_v, chosen_e, objective.value(chosen_e))
