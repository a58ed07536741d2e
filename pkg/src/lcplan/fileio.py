"""Versioned JSON/CSV interchange formats and their validation.

All JSON files are UTF-8 without BOM; unknown fields are rejected.  Writers
emit canonical two-space-indented documents with a trailing newline so that
identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math

import jsonschema
import numpy as np

from .certify import Certificate, FractionalSolution
from .errors import FileFormatError
from .graph import Edge, ExchangeGraph, Plan, Vertex, build_graph, make_plan
from .objectives import InfoContext, PoseGraphContext
from .place_recognition import Descriptor, LabeledPair
from .simulate import SimConfig, SyntheticWorld

SCHEMA_VERSION = 1

_INFO_MATRIX_SCHEMA = {
    "type": "object",
    "required": ["dim", "lower_triangle"],
    "additionalProperties": False,
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "lower_triangle": {"type": "array", "items": {"type": "number"}},
    },
}

GRAPH_SCHEMA = {
    "type": "object",
    "required": ["robots", "vertices", "edges"],
    "additionalProperties": False,
    "properties": {
        "robots": {"type": "integer", "minimum": 1},
        "vertices": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "robot", "weight_bytes"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "integer", "minimum": 0},
                    "robot": {"type": "integer", "minimum": 0},
                    "weight_bytes": {"type": "integer", "minimum": 1},
                },
            },
        },
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "u", "v", "p"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "integer", "minimum": 0},
                    "u": {"type": "integer", "minimum": 0},
                    "v": {"type": "integer", "minimum": 0},
                    "p": {"type": "number", "minimum": 0, "maximum": 1},
                    "precision_t": {"type": "number", "exclusiveMinimum": 0},
                    "precision_r": {"type": "number", "exclusiveMinimum": 0},
                    "info": _INFO_MATRIX_SCHEMA,
                },
            },
        },
    },
}

DESCRIPTORS_SCHEMA = {
    "type": "object",
    "required": ["dim", "robots"],
    "additionalProperties": False,
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "robots": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["robot", "observations"],
                "additionalProperties": False,
                "properties": {
                    "robot": {"type": "integer", "minimum": 0},
                    "observations": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["id", "weight_bytes", "vector"],
                            "additionalProperties": False,
                            "properties": {
                                "id": {"type": "integer", "minimum": 0},
                                "weight_bytes": {"type": "integer", "minimum": 1},
                                "vector": {"type": "array", "items": {"type": "number"}},
                            },
                        },
                    },
                },
            },
        },
    },
}

INFO_CONTEXT_SCHEMA = {
    "type": "object",
    "required": ["h_init"],
    "additionalProperties": False,
    "properties": {
        "h_init": _INFO_MATRIX_SCHEMA,
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["edge", "lower_triangle"],
                "additionalProperties": False,
                "properties": {
                    "edge": {"type": "integer", "minimum": 0},
                    "lower_triangle": {"type": "array", "items": {"type": "number"}},
                },
            },
        },
    },
}

POSE_CONTEXT_SCHEMA = {
    "type": "object",
    "required": ["num_poses", "prior_edges", "candidates"],
    "additionalProperties": False,
    "properties": {
        "num_poses": {"type": "integer", "minimum": 1},
        "prior_edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["u", "v", "precision_t", "precision_r"],
                "additionalProperties": False,
                "properties": {
                    "u": {"type": "integer", "minimum": 0},
                    "v": {"type": "integer", "minimum": 0},
                    "precision_t": {"type": "number", "exclusiveMinimum": 0},
                    "precision_r": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
        "candidates": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["edge", "u", "v"],
                "additionalProperties": False,
                "properties": {
                    "edge": {"type": "integer", "minimum": 0},
                    "u": {"type": "integer", "minimum": 0},
                    "v": {"type": "integer", "minimum": 0},
                },
            },
        },
    },
}

PLAN_SCHEMA = {
    "type": "object",
    "required": ["vertices", "edges", "objective", "comm_bytes", "per_pair_verifications"],
    "additionalProperties": False,
    "properties": {
        "vertices": {"type": "array", "items": {"type": "integer"}},
        "edges": {"type": "array", "items": {"type": "integer"}},
        "objective": {"type": "number"},
        "comm_bytes": {"type": "integer", "minimum": 0},
        "per_pair_verifications": {
            "type": "object",
            "patternProperties": {r"^\d+-\d+$": {"type": "integer", "minimum": 0}},
            "additionalProperties": False,
        },
        "guarantee": {
            "type": "object",
            "required": ["alpha", "alpha_edge", "alpha_vertex", "gamma", "kappa",
                         "max_degree", "degree_floor", "winner"],
            "additionalProperties": False,
            "properties": {
                "alpha": {"type": "number"},
                "alpha_edge": {"type": "number"},
                "alpha_vertex": {"type": "number"},
                "gamma": {"type": ["number", "null"]},
                "kappa": {"type": ["number", "null"]},
                "max_degree": {"type": "integer"},
                "degree_floor": {"type": "number"},
                "winner": {"type": "string"},
            },
        },
    },
}

_FRACTIONAL_SCHEMA = {
    "type": "object",
    "required": ["pi", "ell", "value", "bound_gap"],
    "additionalProperties": False,
    "properties": {
        "pi": {"type": "array", "items": {"type": "number"}},
        "ell": {"type": "array", "items": {"type": "number"}},
        "value": {"type": "number"},
        "bound_gap": {"type": ["number", "null"]},
    },
}

CERTIFICATE_SCHEMA = {
    "type": "object",
    "required": ["kind", "value", "valid", "converged", "iterations"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["OPT_bruteforce", "UPT_lp", "UPT_frankwolfe"]},
        "value": {"type": "number"},
        "gap": {"type": ["number", "null"]},
        "valid": {"type": "boolean"},
        "converged": {"type": "boolean"},
        "iterations": {"type": "integer", "minimum": 0},
        "fractional": _FRACTIONAL_SCHEMA,
        "rounded_plan": PLAN_SCHEMA,
        "plan_value": {"type": "number"},
        "ratio": {"type": ["number", "null"]},
    },
}

WORLD_SCHEMA = {
    "type": "object",
    "required": ["version", "seed", "robots", "steps_per_robot", "candidate_rate",
                 "config", "trajectories", "graph", "ground_truth", "pose_graph", "info"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "seed": {"type": "integer", "minimum": 0},
        "robots": {"type": "integer", "minimum": 2},
        "steps_per_robot": {"type": "integer", "minimum": 2},
        "candidate_rate": {"type": "number", "minimum": 0, "maximum": 1},
        "config": {
            "type": "object",
            "required": ["grid_size", "weight_bytes", "straight_prob", "odom_precision_t",
                         "odom_precision_r", "candidate_precision_t", "candidate_precision_r",
                         "anchor_precision"],
            "additionalProperties": False,
            "properties": {
                "grid_size": {"type": "integer", "minimum": 1},
                "weight_bytes": {"type": "integer", "minimum": 1},
                "straight_prob": {"type": "number", "minimum": 0, "maximum": 1},
                "odom_precision_t": {"type": "number", "exclusiveMinimum": 0},
                "odom_precision_r": {"type": "number", "exclusiveMinimum": 0},
                "candidate_precision_t": {"type": "array", "items": {"type": "number"}},
                "candidate_precision_r": {"type": "array", "items": {"type": "number"}},
                "anchor_precision": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "trajectories": {
            "type": "array",
            "items": {"type": "array", "items": {
                "type": "array", "items": {"type": "integer"},
                "minItems": 3, "maxItems": 3}},
        },
        "graph": GRAPH_SCHEMA,
        "ground_truth": {"type": "array", "items": {"type": "boolean"}},
        "pose_graph": POSE_CONTEXT_SCHEMA,
        "info": {
            "type": "object",
            "required": ["anchor_precision"],
            "additionalProperties": False,
            "properties": {"anchor_precision": {"type": "number", "exclusiveMinimum": 0}},
        },
    },
}

SWEEP_SPEC_SCHEMA = {
    "type": "object",
    "required": ["version", "objective", "comm", "b_values", "k_values", "algorithms"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "graph": {"type": "string"},
        "world": {"type": "string"},
        "world_gen": {
            "type": "object",
            "required": ["robots", "steps_per_robot", "candidate_rate"],
            "additionalProperties": False,
            "properties": {
                "robots": {"type": "integer", "minimum": 2},
                "steps_per_robot": {"type": "integer", "minimum": 2},
                "candidate_rate": {"type": "number", "minimum": 0, "maximum": 1},
            },
        },
        "objective": {"enum": ["nlc", "fim", "wst"]},
        "comm": {"enum": ["tu", "tn", "iu"]},
        "b_values": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "k_values": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "algorithms": {
            "type": "array",
            "items": {"enum": ["modular-greedy", "submodular-greedy", "edge-greedy",
                               "vertex-greedy", "random", "upt-rounded"]},
            "minItems": 1,
        },
        "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "baseline_trials": {"type": "integer", "minimum": 1},
        "compute_opt": {"type": "boolean"},
        "compute_upt": {"type": "boolean"},
        "info_context": {"type": "string"},
        "pose_context": {"type": "string"},
    },
}

SCHEMAS = {
    "graph": GRAPH_SCHEMA,
    "descriptors": DESCRIPTORS_SCHEMA,
    "info-context": INFO_CONTEXT_SCHEMA,
    "pose-context": POSE_CONTEXT_SCHEMA,
    "plan": PLAN_SCHEMA,
    "certificate": CERTIFICATE_SCHEMA,
    "world": WORLD_SCHEMA,
    "sweep-spec": SWEEP_SPEC_SCHEMA,
}

RESULT_CSV_FIXED_COLUMNS = [
    "status", "algorithm", "objective", "comm", "b", "k", "seed",
    "objective_value", "normalized_value", "opt", "upt", "alpha", "runtime_ms",
]

BASELINE_CSV_COLUMNS = ["trial", "objective", "discovered", "comm_bytes"]


def validate_document(kind: str, doc) -> None:
    """Validate a parsed JSON document against a named schema."""
    if kind not in SCHEMAS:
        raise ValueError(f"unknown document kind {kind!r} (choose from {sorted(SCHEMAS)})")
    try:
        jsonschema.validate(doc, SCHEMAS[kind])
    except jsonschema.ValidationError as exc:
        raise FileFormatError(f"{kind} document invalid: {exc.message}") from None


def read_json(path, kind: str | None = None):
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw.startswith(b"\xef\xbb\xbf"):
        raise FileFormatError(f"{path}: UTF-8 BOM is not allowed")
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"{path}: {exc}") from None
    if kind is not None:
        validate_document(kind, doc)
    return doc


def write_json(path, doc) -> None:
    text = json.dumps(doc, indent=2, allow_nan=False) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _clean_float(x) -> float | None:
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return None
    return x + 0.0  # normalizes -0.0


# -- matrices --------------------------------------------------------------


def matrix_to_lower(m: np.ndarray) -> list[float]:
    m = np.asarray(m, dtype=float)
    return [float(m[i, j]) for i in range(m.shape[0]) for j in range(i + 1)]


def lower_to_matrix(dim: int, values) -> np.ndarray:
    expected = dim * (dim + 1) // 2
    values = list(values)
    if len(values) != expected:
        raise FileFormatError(
            f"lower triangle of a {dim}x{dim} matrix needs {expected} entries, got {len(values)}"
        )
    m = np.zeros((dim, dim))
    it = iter(values)
    for i in range(dim):
        for j in range(i + 1):
            m[i, j] = next(it)
            m[j, i] = m[i, j]
    return m


# -- graphs ----------------------------------------------------------------


def graph_to_doc(graph: ExchangeGraph) -> dict:
    vertices = [
        {"id": v.id, "robot": v.robot, "weight_bytes": v.weight} for v in graph.vertices
    ]
    edges = []
    for e in graph.edges:
        row = {"id": e.id, "u": e.u, "v": e.v, "p": _clean_float(e.probability)}
        if e.precision_t is not None:
            row["precision_t"] = _clean_float(e.precision_t)
        if e.precision_r is not None:
            row["precision_r"] = _clean_float(e.precision_r)
        if e.info is not None:
            row["info"] = {"dim": e.info.shape[0], "lower_triangle": matrix_to_lower(e.info)}
        edges.append(row)
    return {"robots": graph.num_robots, "vertices": vertices, "edges": edges}


def graph_from_doc(doc: dict) -> ExchangeGraph:
    validate_document("graph", doc)
    vertices = [Vertex(v["id"], v["robot"], v["weight_bytes"]) for v in doc["vertices"]]
    edges = []
    for e in doc["edges"]:
        info = None
        if "info" in e:
            info = lower_to_matrix(e["info"]["dim"], e["info"]["lower_triangle"])
        edges.append(
            Edge(
                e["id"], e["u"], e["v"], e["p"],
                info=info,
                precision_t=e.get("precision_t"),
                precision_r=e.get("precision_r"),
            )
        )
    return build_graph(vertices, edges, doc["robots"])


def read_graph(path) -> ExchangeGraph:
    return graph_from_doc(read_json(path))


def write_graph(path, graph: ExchangeGraph) -> None:
    write_json(path, graph_to_doc(graph))


# -- descriptors -----------------------------------------------------------


def read_descriptors(path) -> list[list[Descriptor]]:
    """Per-robot descriptor lists, ordered by robot index."""
    doc = read_json(path, kind="descriptors")
    dim = doc["dim"]
    groups = sorted(doc["robots"], key=lambda g: g["robot"])
    out = []
    for group in groups:
        descs = []
        for obs in group["observations"]:
            if len(obs["vector"]) != dim:
                raise FileFormatError(
                    f"observation {obs['id']} has dim {len(obs['vector'])}, expected {dim}"
                )
            descs.append(
                Descriptor(
                    robot=group["robot"],
                    observation=obs["id"],
                    vector=tuple(float(x) for x in obs["vector"]),
                    weight_bytes=obs["weight_bytes"],
                )
            )
        out.append(descs)
    return out


def read_labeled_pairs(path) -> list[LabeledPair]:
    """CSV with a `distance,label` header; labels are 0/1 or true/false."""
    pairs = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != ["distance", "label"]:
            raise FileFormatError(f"{path}: expected header 'distance,label'")
        for row in reader:
            label = row["label"].strip().lower()
            if label in ("1", "true"):
                lab = True
            elif label in ("0", "false"):
                lab = False
            else:
                raise FileFormatError(f"{path}: bad label {row['label']!r}")
            pairs.append(LabeledPair(distance=float(row["distance"]), label=lab))
    return pairs


# -- objective contexts ------------------------------------------------------


def info_context_from_doc(doc: dict, graph: ExchangeGraph | None = None) -> InfoContext:
    """Build an information context from a document, falling back to
    graph-embedded per-edge matrices for edges the document omits."""
    validate_document("info-context", doc)
    dim = doc["h_init"]["dim"]
    h_init = lower_to_matrix(dim, doc["h_init"]["lower_triangle"])
    edge_info = {}
    for row in doc.get("edges", []):
        edge_info[row["edge"]] = lower_to_matrix(dim, row["lower_triangle"])
    if graph is not None:
        for e in graph.edges:
            if e.id not in edge_info and e.info is not None:
                edge_info[e.id] = np.asarray(e.info, dtype=float)
    return InfoContext(h_init, edge_info)


def info_context_to_doc(ctx: InfoContext) -> dict:
    return {
        "h_init": {"dim": ctx.dim, "lower_triangle": matrix_to_lower(ctx.h_init)},
        "edges": [
            {"edge": eid, "lower_triangle": matrix_to_lower(h)}
            for eid, h in sorted(ctx.edge_info.items())
        ],
    }


def read_info_context(path, graph: ExchangeGraph | None = None) -> InfoContext:
    return info_context_from_doc(read_json(path), graph)


def pose_context_from_doc(doc: dict) -> PoseGraphContext:
    validate_document("pose-context", doc)
    prior = [
        (r["u"], r["v"], r["precision_t"], r["precision_r"]) for r in doc["prior_edges"]
    ]
    cands = {r["edge"]: (r["u"], r["v"]) for r in doc["candidates"]}
    return PoseGraphContext(doc["num_poses"], prior, cands)


def pose_context_to_doc(ctx: PoseGraphContext) -> dict:
    return {
        "num_poses": ctx.num_poses,
        "prior_edges": [
            {"u": u, "v": v, "precision_t": _clean_float(tp), "precision_r": _clean_float(tr)}
            for u, v, tp, tr in ctx.prior_edges
        ],
        "candidates": [
            {"edge": eid, "u": u, "v": v}
            for eid, (u, v) in sorted(ctx.candidate_poses.items())
        ],
    }


def read_pose_context(path) -> PoseGraphContext:
    return pose_context_from_doc(read_json(path))


# -- plans and certificates -------------------------------------------------


def plan_to_doc(plan: Plan, guarantee=None) -> dict:
    doc = {
        "vertices": list(plan.vertices),
        "edges": list(plan.edges),
        "objective": _clean_float(plan.objective_value),
        "comm_bytes": plan.comm_bytes,
        "per_pair_verifications": {
            f"{i}-{j}": n for (i, j), n in plan.per_pair_verifications
        },
    }
    if guarantee is not None:
        gdoc = guarantee.to_json_dict()
        gdoc["gamma"] = _clean_float(gdoc["gamma"])
        gdoc["kappa"] = _clean_float(gdoc["kappa"])
        doc["guarantee"] = gdoc
    return doc


def certificate_to_doc(cert: Certificate, extra: dict | None = None) -> dict:
    doc = {
        "kind": cert.kind,
        "value": _clean_float(cert.value),
        "gap": _clean_float(cert.gap),
        "valid": cert.valid,
        "converged": cert.converged,
        "iterations": cert.iterations,
    }
    if cert.fractional is not None:
        doc["fractional"] = {
            "pi": [_clean_float(x) for x in cert.fractional.pi],
            "ell": [_clean_float(x) for x in cert.fractional.ell],
            "value": _clean_float(cert.fractional.value),
            "bound_gap": _clean_float(cert.fractional.bound_gap),
        }
    if cert.rounded_plan is not None:
        doc["rounded_plan"] = plan_to_doc(cert.rounded_plan)
    if extra:
        doc.update(extra)
    return doc


# -- worlds -------------------------------------------------------------------


def world_to_doc(world: SyntheticWorld) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "seed": world.seed,
        "robots": world.num_robots,
        "steps_per_robot": world.steps_per_robot,
        "candidate_rate": _clean_float(world.candidate_rate),
        "config": world.config.to_json_dict(),
        "trajectories": [[list(p) for p in traj] for traj in world.trajectories],
        "graph": graph_to_doc(world.graph),
        "ground_truth": list(world.ground_truth),
        "pose_graph": pose_context_to_doc(world.pose_ctx),
        "info": {"anchor_precision": _clean_float(world.config.anchor_precision)},
    }


def world_from_doc(doc: dict) -> SyntheticWorld:
    validate_document("world", doc)
    cfg = doc["config"]
    config = SimConfig(
        grid_size=cfg["grid_size"],
        weight_bytes=cfg["weight_bytes"],
        straight_prob=cfg["straight_prob"],
        odom_precision_t=cfg["odom_precision_t"],
        odom_precision_r=cfg["odom_precision_r"],
        candidate_precision_t=tuple(cfg["candidate_precision_t"]),
        candidate_precision_r=tuple(cfg["candidate_precision_r"]),
        anchor_precision=cfg["anchor_precision"],
    )
    graph = graph_from_doc(doc["graph"])
    if len(doc["ground_truth"]) != graph.num_edges:
        raise FileFormatError("ground_truth length does not match edge count")
    return SyntheticWorld(
        num_robots=doc["robots"],
        steps_per_robot=doc["steps_per_robot"],
        candidate_rate=doc["candidate_rate"],
        seed=doc["seed"],
        config=config,
        trajectories=tuple(tuple(tuple(p) for p in traj) for traj in doc["trajectories"]),
        graph=graph,
        ground_truth=tuple(bool(x) for x in doc["ground_truth"]),
        pose_ctx=pose_context_from_doc(doc["pose_graph"]),
    )


def read_world(path) -> SyntheticWorld:
    return world_from_doc(read_json(path))


def write_world(path, world: SyntheticWorld) -> None:
    write_json(path, world_to_doc(world))


# -- CSV ----------------------------------------------------------------------


def result_csv_columns(num_robots: int) -> list[str]:
    cols = list(RESULT_CSV_FIXED_COLUMNS)
    cols += [f"comm_frac_{r}" for r in range(num_robots)]
    cols += [f"verif_frac_{r}" for r in range(num_robots)]
    return cols


def format_csv_value(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(path, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_csv_value(x) for x in row])


def write_baseline_csv(path, result) -> None:
    rows = [
        (t.trial, t.objective, t.discovered, t.comm_bytes) for t in result.trials
    ]
    write_csv(path, BASELINE_CSV_COLUMNS, rows)


def check_result_csv(path) -> None:
    """Validate a sweep result CSV header (robot-fraction columns may vary)."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FileFormatError(f"{path}: empty CSV") from None
    fixed = RESULT_CSV_FIXED_COLUMNS
    if header[: len(fixed)] != fixed:
        raise FileFormatError(
            f"{path}: expected columns to start with {fixed}, got {header[:len(fixed)]}"
        )
    rest = header[len(fixed):]
    n = len(rest) // 2
    expected = [f"comm_frac_{r}" for r in range(n)] + [f"verif_frac_{r}" for r in range(n)]
    if rest != expected:
        raise FileFormatError(f"{path}: malformed per-robot fraction columns")
