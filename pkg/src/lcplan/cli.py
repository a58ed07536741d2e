"""Command-line front end: solve, certify, sweep, simulate, schema-check.

Exit codes: 0 success, 2 I/O or parse failure, 3 invalid or infeasible
configuration, 4 instance too large for brute force, 5 degenerate world.
The environment variable LCPLAN_SEED overrides seeds from sweep specs and
the simulate subcommand.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
import time

from . import fileio
from .certify import (
    Certificate,
    brute_force_opt,
    brute_force_opt_grid,
    fw_relax_logdet,
    fw_relax_tree_connectivity,
    lp_relax_modular,
    round_fractional,
)
from .errors import (
    BlockMismatch,
    DegenerateWorld,
    FileFormatError,
    InstanceTooLarge,
    LcplanError,
)
from .graph import (
    Budget,
    PerBlockCount,
    PerPairVerifications,
    TotalBytes,
    TotalCount,
    TotalVerifications,
)
from .modular import (
    allocate_pairwise_budgets,
    modular_greedy_iu,
    modular_greedy_pairwise,
    modular_greedy_tn,
    modular_greedy_tu,
)
from .objectives import make_objective
from .simulate import SimConfig, gen_world, plan_usage, random_baseline
from .submodular import edge_greedy, guarantee_alpha, submodular_greedy, vertex_greedy

_BYTES_SUFFIX = {"KB": 1024, "MB": 1024 ** 2, "GB": 1024 ** 3}
_MODULAR_ALPHA = {
    "tu": 1.0 - math.exp(-1.0),
    "tn": 0.5 * (1.0 - math.exp(-1.0)),
    "iu": 0.5,
}


class _ConfigError(Exception):
    """Raised for invalid flag combinations; maps to exit code 3."""


def _parse_budget(text: str) -> tuple[int, bool]:
    """Parse a budget flag: plain integer count, or bytes with KB/MB/GB."""
    m = re.fullmatch(r"(\d+)(KB|MB|GB)?", text.strip(), flags=re.IGNORECASE)
    if not m:
        raise _ConfigError(f"cannot parse budget {text!r} (expected e.g. 12 or 30MB)")
    value = int(m.group(1))
    suffix = m.group(2)
    if suffix is None:
        return value, False
    return value * _BYTES_SUFFIX[suffix.upper()], True


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise _ConfigError(f"{flag} expects a comma-separated integer list") from None


def _parse_pair_caps(text: str) -> dict[tuple[int, int], int]:
    caps = {}
    for item in text.split(","):
        m = re.fullmatch(r"\s*(\d+)-(\d+):(\d+)\s*", item)
        if not m:
            raise _ConfigError(f"--kij entries look like I-J:K, got {item!r}")
        i, j, k = int(m.group(1)), int(m.group(2)), int(m.group(3))
        caps[(min(i, j), max(i, j))] = k
    return caps


def _load_instance(args):
    """Graph plus lazily-resolved objective contexts from --graph/--world."""
    if getattr(args, "world", None):
        world = fileio.read_world(args.world)
        return world.graph, world
    if getattr(args, "graph", None):
        return fileio.read_graph(args.graph), None
    raise _ConfigError("one of --graph or --world is required")


def _build_objective(args, graph, world):
    kind = args.objective
    if kind == "nlc":
        return make_objective("nlc", graph)
    if kind == "fim":
        if getattr(args, "info", None):
            ctx = fileio.read_info_context(args.info, graph)
        elif world is not None:
            ctx = world.info_context()
        else:
            raise _ConfigError("--objective fim requires --info or --world")
        return make_objective("fim", graph, info_ctx=ctx)
    if getattr(args, "pose_graph", None):
        ctx = fileio.read_pose_context(args.pose_graph)
    elif world is not None:
        ctx = world.pose_ctx
    else:
        raise _ConfigError("--objective wst requires --pose-graph or --world")
    return make_objective("wst", graph, pose_ctx=ctx)


def _require_k(args) -> int:
    if args.k is None:
        raise _ConfigError("--k is required for a total verification budget")
    if args.k < 0:
        raise _ConfigError("--k must be >= 0")
    return args.k


def _comm_budget(args, graph):
    if args.comm == "tu":
        if args.b is None:
            raise _ConfigError("--b is required with --comm tu")
        value, is_bytes = _parse_budget(args.b)
        if is_bytes:
            raise _ConfigError("--comm tu takes a vertex count, not bytes")
        return TotalCount(value)
    if args.comm == "tn":
        if args.b is None:
            raise _ConfigError("--b is required with --comm tn")
        value, _ = _parse_budget(args.b)
        return TotalBytes(value)
    if not args.bi:
        raise _ConfigError("--comm iu requires --bi with per-robot counts")
    limits = _parse_int_list(args.bi, "--bi")
    if len(limits) != graph.num_robots:
        raise _ConfigError(
            f"--bi has {len(limits)} entries but the graph has {graph.num_robots} robots"
        )
    return PerBlockCount(tuple(limits))


def _pair_caps(args, graph) -> PerPairVerifications:
    if args.kij:
        return PerPairVerifications(tuple(_parse_pair_caps(args.kij).items()))
    if args.ki:
        individual = _parse_int_list(args.ki, "--ki")
        if len(individual) != graph.num_robots:
            raise _ConfigError(
                f"--ki has {len(individual)} entries but the graph has {graph.num_robots} robots"
            )
        counts = {}
        fractions = {}
        for pair in graph.robot_pairs():
            eids = graph.edges_between(*pair)
            counts[pair] = len(eids)
            fractions[pair] = (
                sum(graph.edge(e).probability for e in eids) / len(eids) if eids else 0.0
            )
        return allocate_pairwise_budgets(individual, counts, fractions)
    raise _ConfigError("--comp pairwise requires --kij or --ki")


def _emit(doc, out_path) -> None:
    if out_path:
        fileio.write_json(out_path, doc)
    else:
        print(json.dumps(doc, indent=2, allow_nan=False))


# -- solve ---------------------------------------------------------------


def _cmd_solve(args) -> int:
    graph, world = _load_instance(args)
    objective = _build_objective(args, graph, world)
    comm = _comm_budget(args, graph)
    guarantee = None

    if args.alg == "modular-greedy":
        if objective.kind != "nlc":
            raise _ConfigError("modular-greedy optimizes the nlc objective only")
        if args.comp == "pairwise":
            caps = _pair_caps(args, graph)
            if comm.kind == "tu":
                plan = modular_greedy_pairwise(graph, comm.b, caps, lazy=args.lazy)
            elif comm.kind == "iu":
                plan = modular_greedy_pairwise(
                    graph, 0, caps, iu_limits=comm.limits, lazy=args.lazy
                )
            else:
                raise _ConfigError("pairwise verification caps pair with tu or iu comm")
        else:
            k = _require_k(args)
            if comm.kind == "tu":
                plan = modular_greedy_tu(graph, comm.b, k, lazy=args.lazy)
            elif comm.kind == "tn":
                plan = modular_greedy_tn(graph, comm.b, k, lazy=args.lazy)
            else:
                plan = modular_greedy_iu(graph, comm.limits, k, lazy=args.lazy)
    else:
        if comm.kind != "tu":
            raise _ConfigError(f"{args.alg} supports --comm tu only")
        if args.comp == "pairwise":
            raise _ConfigError(f"{args.alg} supports a total verification budget only")
        k = _require_k(args)
        if args.alg == "submodular-greedy":
            plan, guarantee = submodular_greedy(graph, objective, comm.b, k, lazy=args.lazy)
        elif args.alg == "edge-greedy":
            plan = edge_greedy(graph, objective, comm.b, k, lazy=args.lazy)
        else:
            plan = vertex_greedy(graph, objective, comm.b, k, lazy=args.lazy)

    _emit(fileio.plan_to_doc(plan, guarantee), args.out)
    return 0


# -- certify -------------------------------------------------------------


def _reference_plan(args, graph, objective, b, k):
    if objective.kind == "nlc":
        return modular_greedy_tu(graph, b, k)
    plan, _ = submodular_greedy(graph, objective, b, k)
    return plan


def _cmd_certify(args) -> int:
    graph, world = _load_instance(args)
    objective = _build_objective(args, graph, world)
    k = _require_k(args)
    if args.b is None:
        raise _ConfigError("--b is required")
    b, is_bytes = _parse_budget(args.b)
    if is_bytes:
        raise _ConfigError("certification uses a vertex-count budget")

    if args.method == "bruteforce":
        budget = Budget(TotalCount(b), TotalVerifications(k))
        cert = brute_force_opt(graph, objective, budget)
    elif args.method == "lp":
        if objective.kind != "nlc":
            raise _ConfigError("--method lp certifies the nlc objective only")
        cert = lp_relax_modular(graph, b, k)
    else:  # frank-wolfe
        if objective.kind == "fim":
            cert = fw_relax_logdet(graph, objective.ctx, b, k, args.iterations, args.tol)
        elif objective.kind == "wst" and args.wst_surrogate:
            cert = fw_relax_tree_connectivity(
                graph, objective.ctx, b, k, args.iterations, args.tol
            )
        else:
            raise _ConfigError(
                "--method frank-wolfe certifies fim (or wst with --wst-surrogate)"
            )

    if args.round and cert.fractional is not None:
        rounded = round_fractional(graph, cert.fractional, b, k, objective)
        cert = Certificate(
            kind=cert.kind, value=cert.value, fractional=cert.fractional,
            rounded_plan=rounded, valid=cert.valid, converged=cert.converged,
            iterations=cert.iterations,
        )

    plan = _reference_plan(args, graph, objective, b, k)
    ratio = plan.objective_value / cert.value if cert.value > 0 else None
    doc = fileio.certificate_to_doc(
        cert, extra={"plan_value": plan.objective_value, "ratio": ratio}
    )
    _emit(doc, args.out)
    return 0


# -- sweep ---------------------------------------------------------------


def _seed_override(seeds):
    env = os.environ.get("LCPLAN_SEED")
    if env is None:
        return seeds
    try:
        return [int(env)]
    except ValueError:
        raise _ConfigError(f"LCPLAN_SEED must be an integer, got {env!r}") from None


def _sweep_instance(spec, spec_dir, seed):
    """(graph, world, contexts) for one seed of a sweep."""
    if "world_gen" in spec:
        gen = spec["world_gen"]
        world = gen_world(gen["robots"], gen["steps_per_robot"], gen["candidate_rate"], seed)
        return world.graph, world
    if "world" in spec:
        world = fileio.read_world(os.path.join(spec_dir, spec["world"]))
        return world.graph, world
    if "graph" in spec:
        return fileio.read_graph(os.path.join(spec_dir, spec["graph"])), None
    raise _ConfigError("sweep spec needs one of graph, world, or world_gen")


def _sweep_objective(spec, spec_dir, graph, world):
    kind = spec["objective"]
    if kind == "nlc":
        return make_objective("nlc", graph)
    if kind == "fim":
        if "info_context" in spec:
            ctx = fileio.read_info_context(os.path.join(spec_dir, spec["info_context"]), graph)
        elif world is not None:
            ctx = world.info_context()
        else:
            raise _ConfigError("fim sweep needs info_context or a world")
        return make_objective("fim", graph, info_ctx=ctx)
    if "pose_context" in spec:
        ctx = fileio.read_pose_context(os.path.join(spec_dir, spec["pose_context"]))
    elif world is not None:
        ctx = world.pose_ctx
    else:
        raise _ConfigError("wst sweep needs pose_context or a world")
    return make_objective("wst", graph, pose_ctx=ctx)


def _sweep_comm_budget(comm, b, graph):
    if comm == "tu":
        return TotalCount(b)
    if comm == "tn":
        return TotalBytes(b)
    r = graph.num_robots
    return PerBlockCount(tuple([b // r] * r))


def _run_sweep_algorithm(algorithm, graph, world, objective, comm, b, k, seed, trials):
    """One sweep cell: returns (plan_or_None, value, fractions_or_None)."""
    budget = _sweep_comm_budget(comm, b, graph)
    if algorithm == "modular-greedy":
        if objective.kind != "nlc":
            raise _ConfigError("modular-greedy sweeps require the nlc objective")
        if budget.kind == "tu":
            plan = modular_greedy_tu(graph, budget.b, k)
        elif budget.kind == "tn":
            plan = modular_greedy_tn(graph, budget.b, k)
        else:
            plan = modular_greedy_iu(graph, budget.limits, k)
        return plan, plan.objective_value
    if algorithm in ("submodular-greedy", "edge-greedy", "vertex-greedy"):
        if comm != "tu":
            raise _ConfigError(f"{algorithm} sweeps require tu comm")
        if algorithm == "submodular-greedy":
            plan, _ = submodular_greedy(graph, objective, b, k)
        elif algorithm == "edge-greedy":
            plan = edge_greedy(graph, objective, b, k)
        else:
            plan = vertex_greedy(graph, objective, b, k)
        return plan, plan.objective_value
    if algorithm == "random":
        if comm != "tu":
            raise _ConfigError("the random baseline sweeps require tu comm")
        result = random_baseline(
            graph, b, k, trials=trials, seed=seed, objective=objective, world=world
        )
        return None, result.mean_objective
    # upt-rounded
    cert = _upt_certificate(graph, objective, b, k)
    plan = round_fractional(graph, cert.fractional, b, k, objective)
    return plan, plan.objective_value


def _upt_certificate(graph, objective, b, k):
    if objective.kind == "nlc":
        return lp_relax_modular(graph, b, k)
    if objective.kind == "fim":
        return fw_relax_logdet(graph, objective.ctx, b, k)
    return fw_relax_tree_connectivity(graph, objective.ctx, b, k)


def _alpha_for(algorithm, comm, graph, b, k):
    if algorithm == "modular-greedy":
        return _MODULAR_ALPHA[comm]
    delta = graph.max_degree()
    report = guarantee_alpha(b, k, delta)
    if algorithm == "submodular-greedy":
        return report.alpha
    if algorithm == "edge-greedy":
        return report.alpha_e
    if algorithm == "vertex-greedy":
        return report.alpha_v
    return None


def _cmd_sweep(args) -> int:
    spec = fileio.read_json(args.spec, kind="sweep-spec")
    spec_dir = os.path.dirname(os.path.abspath(args.spec))
    if not spec["algorithms"]:
        raise _ConfigError("sweep needs at least one algorithm")
    seeds = _seed_override(spec.get("seeds", [0]))
    trials = spec.get("baseline_trials", 10)
    compute_opt = spec.get("compute_opt", False)
    compute_upt = spec.get("compute_upt", False)

    rows = []
    meta_instances = {}
    num_robots = None
    for seed in seeds:
        graph, world = _sweep_instance(spec, spec_dir, seed)
        num_robots = graph.num_robots
        objective = _sweep_objective(spec, spec_dir, graph, world)
        f_max = objective.value(graph.edge_ids())
        meta_instances[str(seed)] = {
            "vertices": graph.num_vertices,
            "edges": graph.num_edges,
            "max_degree": graph.max_degree(),
            "f_max": f_max,
        }
        opt_grid = {}
        if compute_opt and spec["comm"] == "tu":
            try:
                opt_grid = brute_force_opt_grid(
                    graph, objective, spec["b_values"], spec["k_values"]
                )
            except InstanceTooLarge:
                opt_grid = {}
        upt_cache = {}
        for algorithm in spec["algorithms"]:
            for k in spec["k_values"]:
                for b in spec["b_values"]:
                    row = {
                        "status": "ok",
                        "algorithm": algorithm,
                        "objective": spec["objective"],
                        "comm": spec["comm"],
                        "b": b,
                        "k": k,
                        "seed": seed,
                        "objective_value": None,
                        "normalized_value": None,
                        "opt": None,
                        "upt": None,
                        "upt_normalized": None,
                        "alpha": None,
                        "runtime_ms": None,
                    }
                    t0 = time.perf_counter()
                    try:
                        plan, value = _run_sweep_algorithm(
                            algorithm, graph, world, objective,
                            spec["comm"], b, k, seed, trials,
                        )
                    except _ConfigError as exc:
                        row["status"] = f"error: {exc}"
                        rows.append(row)
                        continue
                    row["runtime_ms"] = (time.perf_counter() - t0) * 1000.0
                    row["objective_value"] = value
                    row["normalized_value"] = value / f_max if f_max > 0 else 0.0
                    row["alpha"] = _alpha_for(algorithm, spec["comm"], graph, b, k)
                    if (b, k) in opt_grid:
                        row["opt"] = opt_grid[(b, k)]
                    if compute_upt and spec["comm"] == "tu":
                        if (b, k) not in upt_cache:
                            upt_cache[(b, k)] = _upt_certificate(graph, objective, b, k).value
                        row["upt"] = upt_cache[(b, k)]
                        row["upt_normalized"] = (
                            row["upt"] / f_max if f_max > 0 else 0.0
                        )
                    if plan is not None:
                        usage = plan_usage(graph, plan)
                        for r, frac in enumerate(usage.comm_fractions()):
                            row[f"comm_frac_{r}"] = frac
                        for r, frac in enumerate(usage.verification_fractions()):
                            row[f"verif_frac_{r}"] = frac
                    rows.append(row)

    columns = fileio.result_csv_columns(num_robots)
    csv_rows = [[row.get(col) for col in columns] for row in rows]
    fileio.write_csv(args.out, columns, csv_rows)
    meta = {
        "version": fileio.SCHEMA_VERSION,
        "columns": columns,
        "robots": num_robots,
        "instances": meta_instances,
        "spec": spec,
    }
    fileio.write_json(args.out + ".meta.json", meta)

    if not args.no_plots:
        from .plotting import render_sweep_figures

        outdir = args.plot_dir or os.path.splitext(args.out)[0] + "_figs"
        render_sweep_figures(rows, num_robots, outdir)
    return 0


# -- simulate ------------------------------------------------------------


def _cmd_simulate(args) -> int:
    if args.robots < 2:
        raise _ConfigError("--robots must be at least 2")
    if args.steps < 2:
        raise _ConfigError("--steps must be at least 2")
    seed = args.seed
    env = os.environ.get("LCPLAN_SEED")
    if env is not None:
        seed = int(env)
    config = SimConfig(weight_bytes=args.weight_bytes, grid_size=args.grid_size)
    world = gen_world(args.robots, args.steps, args.rate, seed, config)
    fileio.write_world(args.out, world)
    expected = sum(e.probability for e in world.graph.edges)
    print(f"candidates: {world.graph.num_edges}")
    print(f"expected true loop closures: {expected!r}")
    return 0


# -- schema-check ----------------------------------------------------------


def _cmd_schema_check(args) -> int:
    if args.kind == "result-csv":
        fileio.check_result_csv(args.file)
    else:
        fileio.read_json(args.file, kind=args.kind)
    print(f"{args.file}: valid {args.kind} (schema version {fileio.SCHEMA_VERSION})")
    return 0


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lcplan",
        description="Plan budgeted inter-robot observation exchange and match verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_instance_flags(p):
        p.add_argument("--graph", help="exchange graph JSON file")
        p.add_argument("--world", help="synthetic world JSON file")
        p.add_argument("--objective", choices=["nlc", "fim", "wst"], default="nlc")
        p.add_argument("--info", help="information context JSON (fim)")
        p.add_argument("--pose-graph", dest="pose_graph", help="pose-graph context JSON (wst)")

    p = sub.add_parser("solve", help="run a planner on an instance")
    add_instance_flags(p)
    p.add_argument("--comm", choices=["tu", "tn", "iu"], default="tu")
    p.add_argument("--b", help="communication budget (count, or bytes like 30MB)")
    p.add_argument("--bi", help="per-robot broadcast counts, comma separated (iu)")
    p.add_argument("--k", type=int, help="total verification budget")
    p.add_argument("--comp", choices=["total", "pairwise"], default="total")
    p.add_argument("--kij", help="per-pair verification caps, e.g. 0-1:2,0-2:1")
    p.add_argument("--ki", help="per-robot verification budgets to allocate, e.g. 3,3,3")
    p.add_argument(
        "--alg",
        choices=["modular-greedy", "submodular-greedy", "edge-greedy", "vertex-greedy"],
        default="modular-greedy",
    )
    p.add_argument("--lazy", action="store_true", help="lazy gain revalidation")
    p.add_argument("--out", help="write the plan JSON here instead of stdout")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("certify", help="compute an optimality certificate")
    add_instance_flags(p)
    p.add_argument("--method", choices=["bruteforce", "lp", "frank-wolfe"], required=True)
    p.add_argument("--b", help="communication budget (vertex count)")
    p.add_argument("--k", type=int, help="total verification budget")
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--round", action="store_true", help="include a rounded feasible plan")
    p.add_argument(
        "--wst-surrogate", action="store_true",
        help="enable the tree-connectivity relaxation bound (interpretive extension)",
    )
    p.add_argument("--out")
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("sweep", help="run an experiment grid, emit CSV and figures")
    p.add_argument("--spec", required=True, help="sweep spec JSON")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p.add_argument("--plot-dir", help="figure directory (default: <out>_figs)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("simulate", help="generate a synthetic rendezvous world")
    p.add_argument("--robots", type=int, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--rate", type=float, default=1.0, help="candidate thinning rate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-size", type=int, default=10)
    p.add_argument("--weight-bytes", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("schema-check", help="validate a file against its schema")
    p.add_argument("--kind", required=True,
                   choices=sorted(fileio.SCHEMAS) + ["result-csv"])
    p.add_argument("file")
    p.set_defaults(func=_cmd_schema_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("run with --help for usage", file=sys.stderr)
        return 3
    except FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InstanceTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except DegenerateWorld as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    except (BlockMismatch, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except LcplanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
