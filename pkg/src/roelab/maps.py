"""Maps between finite metric spaces and their coarse-geometric statistics.

A map is stored as an integer assignment array: ``values[x]`` is the image
of point ``x``.  Nothing here assumes continuity or injectivity; the
quantities of interest are the control modulus (how far pairs can spread),
closeness between parallel maps, and the net/partition machinery used to
build covering isometries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spaces import FiniteMetricSpace, validate_points

__all__ = [
    "PointMap",
    "EquivalenceReport",
    "identity_map",
    "closeness",
    "compose",
    "certify_equivalence",
    "greedy_net",
    "voronoi_partition",
]


class PointMap:
    """A set map between two finite metric spaces.

    Parameters
    ----------
    source, target : FiniteMetricSpace
    values : sequence of int
        ``values[x]`` is the target point assigned to source point x.
    """

    def __init__(self, source: FiniteMetricSpace, target: FiniteMetricSpace, values):
        values = np.array([int(v) for v in values], dtype=np.int64)
        if values.shape != (source.n,):
            raise ValueError(
                f"map needs one value per source point: expected {source.n}, got {values.size}"
            )
        if values.size and (values.min() < 0 or values.max() >= target.n):
            bad = values[(values < 0) | (values >= target.n)]
            raise ValueError(f"map value out of range [0, {target.n}): {bad.tolist()}")
        self.source = source
        self.target = target
        self.values = values
        self.values.setflags(write=False)

    def __call__(self, x: int) -> int:
        return int(self.values[x])

    def __eq__(self, other):
        if not isinstance(other, PointMap):
            return NotImplemented
        return (
            self.source == other.source
            and self.target == other.target
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self):
        return f"PointMap({self.source.n} -> {self.target.n} points)"

    def image(self) -> np.ndarray:
        return np.unique(self.values)

    def preimage(self, y: int) -> np.ndarray:
        return np.flatnonzero(self.values == int(y)).astype(np.int64)

    def modulus(self, r: float) -> float:
        """Control modulus at scale r.

        max d(f(x), f(x')) over all pairs with d(x, x') <= r.  Zero when r
        is below the smallest positive source distance (only the diagonal
        pairs qualify).
        """
        if r < 0:
            raise ValueError("modulus scale must be >= 0")
        close = self.source.dist <= r
        spread = self.target.dist[np.ix_(self.values, self.values)]
        return float(spread[close].max())

    def modulus_profile(self) -> list[tuple[float, float]]:
        """(r, modulus(r)) at each realized source distance r."""
        return [(float(r), self.modulus(float(r))) for r in self.source.realized_distances()]

    def to_json(self) -> dict:
        return {"source": self.source.to_json(), "target": self.target.to_json(),
                "table": [int(v) for v in self.values]}


def identity_map(space: FiniteMetricSpace) -> PointMap:
    return PointMap(space, space, np.arange(space.n))


def closeness(f: PointMap, g: PointMap) -> float:
    """sup_x d(f(x), g(x)) for two maps with the same source and target."""
    if f.source is not g.source and f.source != g.source:
        raise ValueError("closeness needs maps with the same source space")
    if f.target is not g.target and f.target != g.target:
        raise ValueError("closeness needs maps with the same target space")
    return float(f.target.dist[f.values, g.values].max())


def compose(g: PointMap, f: PointMap) -> PointMap:
    """The composite g o f (apply f first)."""
    if f.target is not g.source and f.target != g.source:
        raise ValueError("compose: target of the inner map must equal source of the outer map")
    return PointMap(f.source, g.target, g.values[f.values])


@dataclass
class EquivalenceReport:
    """Certificate that a pair of maps is a coarse equivalence.

    modulus profiles are (r, R(r)) pairs sampled at every realized source
    distance; closeness_fg = sup d(f(g(y)), y), closeness_gf likewise.
    On finite spaces both constants are automatically finite, so the
    verdict records the substantive part: the moduli are monotone.
    """

    modulus_f: list = field(default_factory=list)
    modulus_g: list = field(default_factory=list)
    closeness_fg: float = 0.0
    closeness_gf: float = 0.0
    verdict: bool = False

    def to_json(self) -> dict:
        return {
            "modulus_f": [[r, m] for r, m in self.modulus_f],
            "modulus_g": [[r, m] for r, m in self.modulus_g],
            "closeness_fg": self.closeness_fg,
            "closeness_gf": self.closeness_gf,
            "verdict": self.verdict,
        }


def certify_equivalence(f: PointMap, g: PointMap) -> EquivalenceReport:
    """Measure how close (f, g) is to a coarse equivalence pair.

    f: X -> Y and g: Y -> X.  Records both control-modulus profiles and
    the closeness of f o g and g o f to the identities.
    """
    if f.source != g.target or f.target != g.source:
        raise ValueError("certify_equivalence needs f: X -> Y and g: Y -> X")
    prof_f = f.modulus_profile()
    prof_g = g.modulus_profile()
    c_fg = closeness(compose(f, g), identity_map(f.target))
    c_gf = closeness(compose(g, f), identity_map(f.source))

    def monotone(prof):
        vals = [m for _, m in prof]
        return all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))

    verdict = (
        monotone(prof_f)
        and monotone(prof_g)
        and np.isfinite(c_fg)
        and np.isfinite(c_gf)
    )
    return EquivalenceReport(prof_f, prof_g, float(c_fg), float(c_gf), bool(verdict))


def greedy_net(space: FiniteMetricSpace, s: float) -> np.ndarray:
    """Greedy s-net: scan points in index order, keep those at distance > s
    from everything kept so far.

    The result is s-separated (strict) and s-dominating: every point lies
    within s of some kept point, since a skipped point was within s of an
    earlier one.
    """
    if s < 0:
        raise ValueError("net separation must be >= 0")
    kept: list[int] = []
    for x in range(space.n):
        if all(space.dist[x, y] > s for y in kept):
            kept.append(x)
    return np.array(kept, dtype=np.int64)


def voronoi_partition(space: FiniteMetricSpace, centers) -> list[np.ndarray]:
    """Partition the space by nearest center, ties to the smallest center index.

    Returns one (possibly empty) cell per center, in the order the centers
    were given; the cells are disjoint and cover the space, and each center
    lies in its own cell.
    """
    centers = np.array([int(c) for c in centers], dtype=np.int64)
    if centers.size == 0:
        raise ValueError("voronoi_partition needs at least one center")
    if centers.size != np.unique(centers).size:
        raise ValueError("voronoi centers must be distinct")
    if centers.min() < 0 or centers.max() >= space.n:
        raise ValueError(f"center out of range [0, {space.n})")
    # Scan rows in ascending center-point order so the first minimum found
    # belongs to the smallest center index, regardless of the given order.
    order = np.argsort(centers)
    owner_sorted = np.argmin(space.dist[centers[order]], axis=0)
    owner = order[owner_sorted]
    return [np.flatnonzero(owner == k).astype(np.int64) for k in range(centers.size)]
