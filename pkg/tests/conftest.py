import numpy as np
import pytest

from lcplan.graph import Edge, Vertex, build_graph


@pytest.fixture
def g1():
    """Two robots with two observations each and three candidate matches.

    Robot 0 owns vertices 0 (a1) and 1 (a2); robot 1 owns 2 (b1) and 3 (b2).
    Edges: 0 = {a1,b1} p=0.9, 1 = {a1,b2} p=0.5, 2 = {a2,b1} p=0.4.
    """
    return build_graph(
        [Vertex(0, 0, 1), Vertex(1, 0, 1), Vertex(2, 1, 1), Vertex(3, 1, 1)],
        [Edge(0, 0, 2, 0.9), Edge(1, 0, 3, 0.5), Edge(2, 1, 2, 0.4)],
        2,
    )


def random_graph(rng: np.random.Generator, max_vertices=10, max_edges=12,
                 max_robots=3, weights=False):
    """Random multi-robot candidate graph with at least one edge."""
    while True:
        r = int(rng.integers(2, max_robots + 1))
        n = int(rng.integers(r, max_vertices + 1))
        robots = [int(x) for x in rng.integers(0, r, size=n)]
        for i in range(r):  # every robot owns at least one vertex
            if i < n:
                robots[i] = i
        vertices = [
            Vertex(i, robots[i], int(rng.integers(1, 6)) if weights else 1)
            for i in range(n)
        ]
        pairs = [
            (u, v)
            for u in range(n)
            for v in range(u + 1, n)
            if robots[u] != robots[v]
        ]
        if not pairs:
            continue
        rng.shuffle(pairs)
        m = int(rng.integers(1, min(max_edges, len(pairs)) + 1))
        edges = [
            Edge(i, u, v, float(rng.uniform(0.05, 1.0)))
            for i, (u, v) in enumerate(pairs[:m])
        ]
        return build_graph(vertices, edges, r)


def random_spd(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.normal(size=(dim, dim))
    return a @ a.T + 0.1 * np.eye(dim)


def spanning_tree_weight_sum(num_vertices: int, weighted_edges) -> float:
    """Brute-force weighted spanning-tree count: sum over all spanning trees
    of the product of their edge weights.  Oracle for the Laplacian route."""
    import itertools

    edges = list(weighted_edges)
    if num_vertices == 1:
        return 1.0
    total = 0.0
    for combo in itertools.combinations(range(len(edges)), num_vertices - 1):
        parent = list(range(num_vertices))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        ok = True
        for idx in combo:
            (u, v), _ = edges[idx]
            ru, rv = find(u), find(v)
            if ru == rv:
                ok = False
                break
            parent[ru] = rv
        if ok:
            prod = 1.0
            for idx in combo:
                prod *= edges[idx][1]
            total += prod
    return total
