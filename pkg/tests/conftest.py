"""Shared builders for seeded randomized sweeps."""

import numpy as np
import pytest

from roelab.operators import BlockOperator, FiberedSpace
from roelab.spaces import FiniteMetricSpace, from_edge_list


def random_graph_space(rng, n: int, extra_edges: int = 0) -> FiniteMetricSpace:
    """Connected graph metric: random spanning tree plus extra edges."""
    edges = []
    order = rng.permutation(n)
    for k in range(1, n):
        parent = order[rng.integers(0, k)]
        edges.append((int(parent), int(order[k])))
    for _ in range(extra_edges):
        i, j = rng.integers(0, n, size=2)
        if i != j:
            edges.append((int(i), int(j)))
    return from_edge_list(n, edges)


def random_fibered(rng, space: FiniteMetricSpace, max_dim: int = 3) -> FiberedSpace:
    return FiberedSpace(space, rng.integers(1, max_dim + 1, size=space.n))


def random_operator(rng, source: FiberedSpace, target: FiberedSpace) -> BlockOperator:
    shape = (target.total_dim, source.total_dim)
    mat = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return BlockOperator(source, target, mat)


@pytest.fixture
def rng():
    return np.random.default_rng(20260815)
