"""From per-robot descriptor collections to an exchange graph.

Cross-robot descriptor distances are mapped to match probabilities by a
two-parameter logistic model fit offline on labeled distance/label pairs;
pairs above a probability threshold become candidate edges.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateData, DimensionMismatch
from .graph import Edge, ExchangeGraph, Vertex, build_graph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Descriptor:
    """Opaque per-observation feature vector (e.g. a global image descriptor)."""

    robot: int
    observation: int
    vector: tuple[float, ...]
    weight_bytes: int = 1


@dataclass(frozen=True)
class LogisticModel:
    beta0: float
    beta1: float
    converged: bool = True


@dataclass(frozen=True)
class LabeledPair:
    distance: float
    label: bool


@dataclass(frozen=True)
class FitConfig:
    l2_penalty: float = 1e-6
    max_iterations: int = 100
    tolerance: float = 1e-10


def euclidean_distance(x: Descriptor, y: Descriptor) -> float:
    if len(x.vector) != len(y.vector):
        raise DimensionMismatch(
            f"descriptor dims differ: {len(x.vector)} vs {len(y.vector)}"
        )
    a = np.asarray(x.vector, dtype=float)
    b = np.asarray(y.vector, dtype=float)
    return float(np.linalg.norm(a - b))


def predict_probability(model: LogisticModel, distance: float) -> float:
    """Match probability at a given descriptor distance.

    Saturates to 0/1 in floating point for extreme arguments.
    """
    z = model.beta1 * distance + model.beta0
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def equivalent_distance_threshold(model: LogisticModel, p_x: float) -> float:
    """Distance threshold inducing the same edge set as probability threshold
    `p_x` (requires beta1 != 0)."""
    if model.beta1 == 0:
        raise ValueError("model has no distance dependence")
    return (math.log(p_x / (1.0 - p_x)) - model.beta0) / model.beta1


def fit_logistic(pairs, config: FitConfig = FitConfig()) -> LogisticModel:
    """Fit the two-parameter logistic model by damped Newton iterations.

    The tiny ridge penalty keeps the optimum unique on separable data.  If the
    iteration cap is hit, the last iterate is returned with `converged=False`.
    Raises DegenerateData when only one class is present.
    """
    pairs = list(pairs)
    if len(pairs) < 2:
        raise DegenerateData("need at least two labeled pairs")
    d = np.array([p.distance for p in pairs], dtype=float)
    y = np.array([1.0 if p.label else 0.0 for p in pairs])
    if not np.isfinite(d).all():
        raise ValueError("distances must be finite")
    if y.min() == y.max():
        raise DegenerateData("all labels identical")

    x = np.column_stack([np.ones_like(d), d])
    lam = config.l2_penalty
    beta = np.zeros(2)

    def nll(b):
        z = x @ b
        # log(1 + e^z) - y z, computed stably
        return float(np.sum(np.logaddexp(0.0, z) - y * z) + lam * (b @ b))

    current = nll(beta)
    converged = False
    for _ in range(config.max_iterations):
        z = x @ beta
        p = 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))
        grad = x.T @ (p - y) + 2.0 * lam * beta
        if np.linalg.norm(grad) <= config.tolerance:
            converged = True
            break
        w = p * (1.0 - p)
        hess = (x * w[:, None]).T @ x + 2.0 * lam * np.eye(2)
        step = np.linalg.solve(hess, grad)
        t = 1.0
        while t > 1e-12:
            cand = beta - t * step
            c = nll(cand)
            if c < current:
                beta, current = cand, c
                break
            t *= 0.5
        else:
            converged = np.linalg.norm(grad) <= max(config.tolerance, 1e-8)
            break
    if beta[1] >= 0:
        log.warning(
            "fitted slope %.4f is non-negative; matches do not have smaller distances",
            beta[1],
        )
    return LogisticModel(beta0=float(beta[0]), beta1=float(beta[1]), converged=converged)


def negative_log_likelihood(model: LogisticModel, pairs, l2_penalty: float = 0.0) -> float:
    d = np.array([p.distance for p in pairs], dtype=float)
    y = np.array([1.0 if p.label else 0.0 for p in pairs])
    z = model.beta1 * d + model.beta0
    b = np.array([model.beta0, model.beta1])
    return float(np.sum(np.logaddexp(0.0, z) - y * z) + l2_penalty * (b @ b))


def build_exchange_graph(
    robot_descriptors,
    model: LogisticModel,
    p_x: float,
    weight_fn=None,
) -> ExchangeGraph:
    """One vertex per observation; an edge per cross-robot pair with match
    probability at least `p_x`.

    `robot_descriptors` is a sequence (one entry per robot) of descriptor
    sequences.  `weight_fn(descriptor) -> bytes` overrides the descriptors'
    own byte weights.  Vertex and edge ids are dense, assigned in input order
    and pair order (robot pairs ascending, observations ascending).
    """
    if not (0.0 <= p_x <= 1.0):
        raise ValueError(f"threshold must be in [0,1], got {p_x}")
    robots = [list(group) for group in robot_descriptors]
    if len(robots) < 2:
        raise ValueError("need descriptors from at least two robots")
    dims = {len(desc.vector) for group in robots for desc in group}
    if len(dims) > 1:
        raise DimensionMismatch(f"mixed descriptor dimensions: {sorted(dims)}")

    vertices = []
    ids: dict[tuple[int, int], int] = {}
    next_id = 0
    for r, group in enumerate(robots):
        for desc in group:
            w = weight_fn(desc) if weight_fn is not None else desc.weight_bytes
            vertices.append(Vertex(next_id, r, w))
            ids[(r, desc.observation)] = next_id
            next_id += 1

    edges = []
    eid = 0
    for i in range(len(robots)):
        for j in range(i + 1, len(robots)):
            for a in robots[i]:
                for b in robots[j]:
                    p = predict_probability(model, euclidean_distance(a, b))
                    if p >= p_x:
                        edges.append(
                            Edge(eid, ids[(i, a.observation)], ids[(j, b.observation)], p)
                        )
                        eid += 1
    return build_graph(vertices, edges, len(robots))


def precision_recall(model: LogisticModel, pairs, thresholds):
    """Precision/recall of thresholding predicted probabilities.

    Returns one (threshold, precision, recall) row per threshold; precision is
    1.0 when nothing is predicted, recall is None when the data has no
    positive pairs.
    """
    pairs = list(pairs)
    if not pairs:
        raise DegenerateData("no labeled pairs")
    probs = np.array([predict_probability(model, p.distance) for p in pairs])
    labels = np.array([p.label for p in pairs], dtype=bool)
    total_pos = int(labels.sum())
    rows = []
    for t in thresholds:
        predicted = probs >= t
        tp = int((predicted & labels).sum())
        fp = int((predicted & ~labels).sum())
        precision = 1.0 if tp + fp == 0 else tp / (tp + fp)
        recall = None if total_pos == 0 else tp / total_pos
        rows.append((float(t), float(precision), recall))
    return rows
