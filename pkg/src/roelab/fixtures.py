"""Bundled example inputs: the hand-checked 2-point fixture and the
standard map families used throughout the tests and sweeps.

The Hadamard fixture is small enough to verify by hand: two points at
distance 3, one-dimensional fibers, U = (1/sqrt 2) [[1, 1], [1, -1]].
With y = 0 and R = 2 the ball is {0}, both corners have norm 1/sqrt 2,
and conjugating the indicator of either single point gives a far corner
of exactly 1/2 against the guaranteed 0.5 * sqrt(1 - 1/2) ~ 0.35355.
"""

from __future__ import annotations

import numpy as np

from .maps import PointMap, identity_map
from .operators import BlockOperator, FiberedSpace, random_band_unitary
from .spaces import FiniteMetricSpace, path_space
from .covering import covering_unitary

__all__ = [
    "hadamard_fixture",
    "reflection_map",
    "halving_map",
    "doubling_map",
    "standard_pair",
    "noisy_covering_unitary",
]


def hadamard_fixture() -> tuple[FiberedSpace, BlockOperator]:
    space = FiniteMetricSpace([[0.0, 3.0], [3.0, 0.0]])
    fibered = FiberedSpace.uniform(space, 1)
    mat = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    return fibered, BlockOperator(fibered, fibered, mat)


def reflection_map(n: int) -> PointMap:
    space = path_space(n)
    return PointMap(space, space, np.arange(n)[::-1].copy())


def halving_map(n: int) -> PointMap:
    """path_space(2n) -> path_space(n), i -> floor(i / 2)."""
    return PointMap(path_space(2 * n), path_space(n), np.arange(2 * n) // 2)


def doubling_map(n: int) -> PointMap:
    """path_space(n) -> path_space(2n), j -> 2j; coarse partner of halving."""
    return PointMap(path_space(n), path_space(2 * n), 2 * np.arange(n))


def standard_pair(kind: str, n: int) -> tuple[PointMap, PointMap]:
    """A named coarse equivalence (h, partner) on path spaces.

    identity and reflection act on path_space(n); halving collapses
    path_space(2n) onto path_space(n) with doubling as partner.
    """
    if kind == "identity":
        h = identity_map(path_space(n))
        return h, h
    if kind == "reflection":
        h = reflection_map(n)
        return h, reflection_map(n)
    if kind == "halving":
        return halving_map(n), doubling_map(n)
    raise ValueError(f"unknown map kind {kind!r}; expected identity, reflection, or halving")


def noisy_covering_unitary(
    kind: str,
    n: int,
    seed: int,
    noise_radius: float = 2.0,
    layers: int = 1,
    fiber_dim: int = 1,
):
    """U = U_h (band noise): a covering unitary of the named map composed
    with a seeded random band unitary on the source side.

    Returns (U, h, plan).  The halving kind uses one-dimensional source
    fibers so the reconciled target carries two-dimensional fibers.
    """
    h, _ = standard_pair(kind, n)
    source = FiberedSpace.uniform(h.source, fiber_dim)
    W, plan = covering_unitary(h, source)
    V = random_band_unitary(source, noise_radius, layers, seed)
    return W @ V, h, plan
