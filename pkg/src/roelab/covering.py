"""Covering unitaries for coarse maps and the decompositions built on them.

`covering_unitary` realizes a coarse equivalence f as a permutation of
basis vectors: pick a net on which f is injective, partition both spaces
around the net and its image, and match the fibers block by block.  With
finite fibers the dimension bookkeeping is explicit: either the target
fiber dimensions are synthesized so each block balances exactly, or a
prescribed target space is honored by letting the block-major matching
spill across neighboring blocks (needed when source and target must be
the same space, as in roundtrips).  Either way the result is an exact
0/1 permutation matrix, hence exactly unitary.

`upgrade_trick` turns a finite-rank propagation-zero projection p into a
propagation-zero unitary V and an operator t supported within R of f
with ||t - UVp|| <= epsilon: the fiber rotations V_i are chosen
inductively so the discarded far corners become pairwise orthogonal, and
the error collapses to the largest single corner instead of the sum.

`outer_roundtrip` is the automorphism-level composite: extract f from U,
cover it by W, and certify that UW* is close to banded by recording its
approximability window over a radius grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .maps import PointMap, greedy_net, voronoi_partition
from .operators import BlockOperator, FiberedSpace, spectral_norm
from .extraction import ExtractionReport, extract_pair
from .concentration import check_unitary
from .locality import approximability_window

__all__ = [
    "CoveringPlan",
    "UpgradeResult",
    "OuterReport",
    "covering_unitary",
    "supported_approximation_curve",
    "upgrade_trick",
    "outer_roundtrip",
]

_RANK_TOL = 1e-12


@dataclass
class CoveringPlan:
    net: np.ndarray
    separation: float
    source_blocks: list
    target_blocks: list
    assignment: np.ndarray  # global target coordinate for each source coordinate
    support_radius: float  # max d(f(x), y) over matched coordinates
    target: FiberedSpace
    spill: bool  # block totals were not balanced; matching crossed blocks

    def to_json(self) -> dict:
        return {
            "net": [int(x) for x in self.net],
            "separation": self.separation,
            "source_blocks": [[int(x) for x in blk] for blk in self.source_blocks],
            "target_blocks": [[int(y) for y in blk] for blk in self.target_blocks],
            "assignment": [int(t) for t in self.assignment],
            "support_radius": self.support_radius,
            "target_fiber_dims": [int(d) for d in self.target.fiber_dims],
            "spill": self.spill,
        }


def _injective_net(f: PointMap, separation: float):
    """Smallest separation >= the given one whose greedy net makes f injective."""
    X = f.source
    candidates = [s for s in X.realized_distances() if s >= separation]
    if not candidates or candidates[0] > separation:
        candidates = [separation] + candidates
    for s in candidates:
        net = greedy_net(X, float(s))
        images = f.values[net]
        if np.unique(images).size == net.size:
            return float(s), net
    raise ValueError(
        "no net separation up to the diameter makes the map injective; "
        "the input is not a coarse equivalence representative"
    )


def covering_unitary(
    f: PointMap,
    source: FiberedSpace,
    separation: float = 0.0,
    target: FiberedSpace | None = None,
) -> tuple[BlockOperator, CoveringPlan]:
    """Unitary permutation of basis vectors covering the coarse map f.

    Without a prescribed target, fiber dimensions on the target side are
    synthesized per plan block (spread as evenly as possible, remainders
    to the smallest point indices) so every block balances exactly.  With
    a prescribed target the totals must match globally and the block-major
    matching may spill across block boundaries; the support radius is
    measured either way.
    """
    if f.source != source.base:
        raise ValueError("the fibered source must sit over the map's source space")
    if separation < 0:
        raise ValueError("separation must be >= 0")
    Y = f.target
    s_used, net = _injective_net(f, separation)
    source_blocks = voronoi_partition(f.source, net)
    image = f.values[net]
    target_blocks = voronoi_partition(Y, image)

    if target is None:
        dims_t = np.zeros(Y.n, dtype=np.int64)
        for blk_x, blk_y in zip(source_blocks, target_blocks):
            total = int(source.fiber_dims[blk_x].sum())
            if total < blk_y.size:
                raise ValueError(
                    f"cannot reconcile fibers: block around net point with source total "
                    f"{total} must cover {blk_y.size} target points; increase source fiber dims"
                )
            base_dim, rem = divmod(total, blk_y.size)
            dims_t[blk_y] = base_dim
            dims_t[blk_y[:rem]] += 1
        target = FiberedSpace(Y, dims_t)
        spill = False
    else:
        if target.base != Y:
            raise ValueError("prescribed target space must sit over the map's target space")
        if target.total_dim != source.total_dim:
            raise ValueError(
                f"total dimensions must match to build a unitary: "
                f"{source.total_dim} != {target.total_dim}"
            )
        spill = any(
            int(source.fiber_dims[bx].sum()) != int(target.fiber_dims[by].sum())
            for bx, by in zip(source_blocks, target_blocks)
        )

    src_stream = np.concatenate([source.coords_of(blk) for blk in source_blocks])
    tgt_stream = np.concatenate([target.coords_of(blk) for blk in target_blocks])
    assignment = np.zeros(source.total_dim, dtype=np.int64)
    assignment[src_stream] = tgt_stream

    mat = np.zeros((target.total_dim, source.total_dim), dtype=complex)
    mat[assignment, np.arange(source.total_dim)] = 1.0
    U = BlockOperator(source, target, mat)

    src_pts = source.coord_point
    tgt_pts = target.coord_point[assignment]
    support_radius = float(Y.dist[f.values[src_pts], tgt_pts].max())
    plan = CoveringPlan(
        net=net,
        separation=s_used,
        source_blocks=source_blocks,
        target_blocks=target_blocks,
        assignment=assignment,
        support_radius=support_radius,
        target=target,
        spill=spill,
    )
    return U, plan


def supported_approximation_curve(U: BlockOperator, f: PointMap, R_list) -> list[tuple[float, float]]:
    """Distance upper bounds to f-supported operators, per radius."""
    from .locality import supported_distance_upper

    return [(float(R), supported_distance_upper(U, f, float(R))) for R in R_list]


@dataclass
class UpgradeResult:
    V: BlockOperator  # propagation-zero unitary on the source space
    t: BlockOperator  # R-supported on f
    error: float  # ||t - UVp||
    R: float
    epsilon: float
    ortho_residual: float  # largest pairwise product norm among discarded terms
    points: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "R": self.R,
            "epsilon": self.epsilon,
            "error": self.error,
            "ortho_residual": self.ortho_residual,
            "points": [int(x) for x in self.points],
        }


def _orthonormal_columns(mat: np.ndarray, tol: float = _RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the column span, empty for (numerically) zero input."""
    if mat.size == 0:
        return np.zeros((mat.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    rank = int(np.sum(s > tol * max(s[0], 1.0)))
    return u[:, :rank]


def _complement(basis: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the given columns."""
    if basis.shape[1] == 0:
        return np.eye(dim, dtype=complex)
    u, _, _ = np.linalg.svd(basis, full_matrices=True)
    return u[:, basis.shape[1] :]


def _support_radius_for(U: BlockOperator, f: PointMap, epsilon: float) -> float:
    """Smallest realized radius with ||chi_{complement ball(f(x), R)} U chi_x|| <= epsilon
    for every source point x."""
    tbase = U.target.base
    for R in tbase.realized_distances():
        worst = 0.0
        for x in range(U.source.base.n):
            outside = np.flatnonzero(tbase.dist[f.values[x]] > R)
            worst = max(worst, U.corner_norm(outside, [x]))
            if worst > epsilon:
                break
        if worst <= epsilon:
            return float(R)
    return float(tbase.diameter)


def upgrade_trick(U: BlockOperator, f: PointMap, p_spec, epsilon: float) -> UpgradeResult:
    """Build (V, t) with V a propagation-zero unitary, t R-supported on f,
    and ||t - UVp|| <= epsilon, for p the projection described by p_spec.

    p_spec is a list of (x_i, E_i) pairs with distinct points x_i; E_i is
    either an integer k (the first k fiber basis vectors at x_i) or a
    matrix of orthonormal fiber columns.  Feasibility needs the fiber at
    x_i to hold dim E_i plus the trace of the previously discarded
    corners; the error message reports the minimal sufficient dimension
    when it does not.
    """
    check_unitary(U)
    if f.source != U.source.base or f.target != U.target.base:
        raise ValueError("map must go from the operator's source base to its target base")
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")

    src = U.source
    spec = []
    for x_i, E in sorted(p_spec, key=lambda item: int(item[0])):
        x_i = int(x_i)
        d = int(src.fiber_dims[x_i])
        if isinstance(E, (int, np.integer)):
            if not 1 <= E <= d:
                raise ValueError(f"rank {E} out of range for fiber dimension {d} at point {x_i}")
            E = np.eye(d, dtype=complex)[:, : int(E)]
        else:
            E = np.asarray(E, dtype=complex)
            if E.ndim != 2 or E.shape[0] != d:
                raise ValueError(f"basis at point {x_i} must have {d} rows")
            if spectral_norm(E.conj().T @ E - np.eye(E.shape[1])) > 1e-9:
                raise ValueError(f"basis columns at point {x_i} are not orthonormal")
        spec.append((x_i, E))
    points = [x for x, _ in spec]
    if len(set(points)) != len(points):
        raise ValueError("p_spec points must be distinct")

    R = _support_radius_for(U, f, epsilon)
    tbase = U.target.base

    # inductive fiber rotations: V_i(E_i) must avoid the fiber footprint of
    # the spans F_i built from the earlier discarded corners
    v_blocks: dict[int, np.ndarray] = {}
    f_columns: list[tuple[int, np.ndarray]] = []  # (owner index j, U(x_j (x) V_j)E_j columns)
    outside_mask = []
    for x_i, _ in spec:
        outside = tbase.dist[f.values[x_i]] > R
        outside_mask.append(outside[U.target.coord_point])
    for i, (x_i, E_i) in enumerate(spec):
        d = int(src.fiber_dims[x_i])
        spans = []
        for j, cols in f_columns:
            both = outside_mask[i] & outside_mask[j]
            spans.append(U.matrix.conj().T @ (cols * both[:, None]))
        sl = src.slice_of(x_i)
        if spans:
            local = np.concatenate(spans, axis=1)[sl]
            G = _orthonormal_columns(local)
        else:
            G = np.zeros((d, 0), dtype=complex)
        k = E_i.shape[1]
        if k + G.shape[1] > d:
            raise ValueError(
                f"fiber at point {x_i} too small: need dimension >= {k + G.shape[1]} "
                f"(rank {k} plus footprint {G.shape[1]}), have {d}"
            )
        avoid_comp = _complement(G, d)
        W = avoid_comp[:, :k]
        # [W | complement of W] and [E_i | complement of E_i] are both
        # orthonormal bases, so V_i below is unitary and sends E_i into
        # the span of W, away from G
        E_comp = _complement(E_i, d)
        W_comp = _complement(W, d)
        V_i = W @ E_i.conj().T + W_comp @ E_comp.conj().T
        v_blocks[x_i] = V_i
        lifted = np.zeros((src.total_dim, k), dtype=complex)
        lifted[sl] = V_i @ E_i
        f_columns.append((i, U.matrix @ lifted))

    v_mat = np.eye(src.total_dim, dtype=complex)
    for x_i, V_i in v_blocks.items():
        sl = src.slice_of(x_i)
        v_mat[sl, sl] = V_i
    V = BlockOperator(src, src, v_mat)

    p_mat = np.zeros((src.total_dim, src.total_dim), dtype=complex)
    for x_i, E_i in spec:
        sl = src.slice_of(x_i)
        p_mat[sl, sl] = E_i @ E_i.conj().T
    uvp = U.matrix @ (v_mat @ p_mat)

    t_mat = np.zeros_like(uvp)
    discarded = []
    for i, (x_i, _) in enumerate(spec):
        sl = src.slice_of(x_i)
        inside = ~outside_mask[i]
        t_mat[:, sl] = uvp[:, sl] * inside[:, None]
        term = np.zeros_like(uvp)
        term[:, sl] = uvp[:, sl] * outside_mask[i][:, None]
        discarded.append(term)
    t = BlockOperator(src, U.target, t_mat)

    ortho = 0.0
    for i in range(len(discarded)):
        for j in range(i + 1, len(discarded)):
            ortho = max(ortho, spectral_norm(discarded[i].conj().T @ discarded[j]))
            ortho = max(ortho, spectral_norm(discarded[i] @ discarded[j].conj().T))
    error = spectral_norm(t_mat - uvp)
    return UpgradeResult(
        V=V,
        t=t,
        error=float(error),
        R=R,
        epsilon=float(epsilon),
        ortho_residual=float(ortho),
        points=points,
    )


@dataclass
class OuterReport:
    extraction: ExtractionReport
    plan: CoveringPlan
    windows: list  # (R, lower, upper) for U W*
    residual_U: float
    residual_W: float
    residual_UWs: float

    def to_json(self) -> dict:
        return {
            "extraction": self.extraction.to_json(),
            "plan": self.plan.to_json(),
            "windows": [[R, lo, hi] for R, lo, hi in self.windows],
            "residual_U": self.residual_U,
            "residual_W": self.residual_W,
            "residual_UWs": self.residual_UWs,
        }


def outer_roundtrip(U: BlockOperator, delta: float = 0.5, radius_grid=None) -> OuterReport:
    """Decompose an automorphism-like unitary as U = (UW*) W.

    Extracts the coarse map f from U, covers it by a unitary W on the
    same fibered space, and records how approximable UW* is by banded
    operators across the radius grid: the upper window member collapsing
    as R grows is the desk-scale content of the outer-automorphism
    statement.
    """
    check_unitary(U)
    if U.source != U.target:
        raise ValueError("outer roundtrip needs an operator on a single fibered space")
    extraction = extract_pair(U, delta)
    W, plan = covering_unitary(extraction.f, U.source, target=U.source)
    UWs = U @ W.adjoint()
    if radius_grid is None:
        dists = U.source.base.realized_distances()
        radius_grid = dists if dists.size <= 6 else np.unique(
            np.quantile(dists, [0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
        )
    windows = []
    for R in radius_grid:
        lower, upper = approximability_window(UWs, float(R))
        windows.append((float(R), float(lower), float(upper)))
    return OuterReport(
        extraction=extraction,
        plan=plan,
        windows=windows,
        residual_U=float(U.unitarity_residual()),
        residual_W=float(W.unitarity_residual()),
        residual_UWs=float(UWs.unitarity_residual()),
    )
