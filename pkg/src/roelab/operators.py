"""Block operators on fibered finite metric spaces.

A fibered space attaches a fiber dimension d_x >= 1 to every point of a
finite metric space; an operator between two fibered spaces is stored as
one dense complex matrix whose rows and columns are grouped into blocks
T[y][x] of shape d_y x d_x.  Band structure (propagation, truncation,
corners) is always expressed at the block level, so exact zero blocks
play the role of absent blocks.

Norms: `operator_norm` implements the certified contract (full SVD up to
total dimension 64, power iteration with a residual certificate above
that).  Internal helpers use exact dense decompositions throughout, which
is affordable at the few-hundred-dimension scale this library targets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spaces import FiniteMetricSpace, validate_points

__all__ = [
    "FiberedSpace",
    "BlockOperator",
    "NormCertificate",
    "PowerIterationError",
    "indicator",
    "identity_operator",
    "operator_norm",
    "random_band_unitary",
    "spectral_norm",
]

PROPAGATION_TOL = 1e-12
SVD_EXACT_LIMIT = 64


class FiberedSpace:
    """A finite metric space with a fiber dimension at every point."""

    def __init__(self, base: FiniteMetricSpace, fiber_dims):
        dims = np.array([int(d) for d in fiber_dims], dtype=np.int64)
        if dims.shape != (base.n,):
            raise ValueError(
                f"need one fiber dimension per point: expected {base.n}, got {dims.size}"
            )
        if (dims < 1).any():
            raise ValueError("all fiber dimensions must be >= 1")
        self.base = base
        self.fiber_dims = dims
        self.offsets = np.concatenate(([0], np.cumsum(dims)))
        self.total_dim = int(self.offsets[-1])
        # point index of each global coordinate, for block masking
        self.coord_point = np.repeat(np.arange(base.n, dtype=np.int64), dims)
        self.fiber_dims.setflags(write=False)
        self.offsets.setflags(write=False)
        self.coord_point.setflags(write=False)

    @classmethod
    def uniform(cls, base: FiniteMetricSpace, dim: int) -> "FiberedSpace":
        return cls(base, np.full(base.n, int(dim)))

    def slice_of(self, x: int) -> slice:
        return slice(int(self.offsets[x]), int(self.offsets[x + 1]))

    def coords_of(self, points) -> np.ndarray:
        """Global coordinate indices of the fibers over a point set."""
        points = validate_points(points, self.base.n)
        if points.size == 0:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([np.arange(self.offsets[x], self.offsets[x + 1]) for x in points])

    def coord_mask(self, points) -> np.ndarray:
        points = validate_points(points, self.base.n)
        mask = np.zeros(self.base.n, dtype=bool)
        mask[points] = True
        return mask[self.coord_point]

    def __eq__(self, other):
        if not isinstance(other, FiberedSpace):
            return NotImplemented
        return self.base == other.base and np.array_equal(self.fiber_dims, other.fiber_dims)

    def __repr__(self):
        return f"FiberedSpace(n={self.base.n}, total_dim={self.total_dim})"


def spectral_norm(mat) -> float:
    """Largest singular value, computed exactly with dense linear algebra.

    Rectangular inputs go through the Gram matrix of the smaller side when
    that side is small, which is the common corner-norm shape here.
    """
    mat = np.asarray(mat)
    if mat.size == 0:
        return 0.0
    if min(mat.shape) == 1:
        return float(np.linalg.norm(mat))
    if min(mat.shape) <= 48 and max(mat.shape) > 2 * min(mat.shape):
        if mat.shape[0] <= mat.shape[1]:
            gram = mat @ mat.conj().T
        else:
            gram = mat.conj().T @ mat
        top = np.linalg.eigvalsh(gram)[-1]
        return float(np.sqrt(max(top, 0.0)))
    return float(np.linalg.svd(mat, compute_uv=False)[0])


@dataclass
class NormCertificate:
    value: float
    vector: np.ndarray  # unit vector v with ||T*Tv - value^2 v|| <= tol*value^2
    residual: float
    method: str  # "svd" | "power"
    iterations: int = 0


class PowerIterationError(RuntimeError):
    """Raised when power iteration exhausts its budget uncertified."""

    def __init__(self, best_estimate: float, residual: float, iterations: int):
        super().__init__(
            f"operator norm power iteration did not certify after {iterations} "
            f"iterations: best estimate {best_estimate:.6g}, residual {residual:.3g}"
        )
        self.best_estimate = best_estimate
        self.residual = residual
        self.iterations = iterations


def _norm_certificate(mat: np.ndarray, tol: float, fallback: bool = True) -> NormCertificate:
    rows, cols = mat.shape
    if max(rows, cols) <= SVD_EXACT_LIMIT:
        _, svals, vh = np.linalg.svd(mat)
        sigma = float(svals[0])
        v = vh[0].conj()
        resid = float(np.linalg.norm(mat.conj().T @ (mat @ v) - sigma**2 * v))
        return NormCertificate(sigma, v, resid, "svd")
    rng = np.random.default_rng(0)
    v = rng.standard_normal(cols) + 1j * rng.standard_normal(cols)
    v /= np.linalg.norm(v)
    budget = 10 * max(rows, cols)
    sigma_sq = 0.0
    resid = np.inf
    for it in range(1, budget + 1):
        w = mat @ v
        sigma_sq = float(np.real(np.vdot(w, w)))  # = <v, T*Tv> for unit v
        z = mat.conj().T @ w
        resid = float(np.linalg.norm(z - sigma_sq * v))
        if sigma_sq == 0.0:
            if not mat.any():
                return NormCertificate(0.0, v, 0.0, "power", it)
            v = rng.standard_normal(cols) + 1j * rng.standard_normal(cols)
            v /= np.linalg.norm(v)
            continue
        if resid <= tol * sigma_sq:
            return NormCertificate(float(np.sqrt(sigma_sq)), v, resid, "power", it)
        v = z / np.linalg.norm(z)
    if not fallback:
        raise PowerIterationError(float(np.sqrt(max(sigma_sq, 0.0))), resid, budget)
    # near-degenerate top of the spectrum; settle it exactly
    _, svals, vh = np.linalg.svd(mat)
    sigma = float(svals[0])
    v = vh[0].conj()
    resid = float(np.linalg.norm(mat.conj().T @ (mat @ v) - sigma**2 * v))
    return NormCertificate(sigma, v, resid, "svd", budget)


class BlockOperator:
    """A complex linear map between two fibered spaces, stored dense.

    The matrix has shape (target.total_dim, source.total_dim); the block
    at (y, x) is the submatrix over the fibers of y and x.  Exact zero
    blocks carry the band-sparsity structure.
    """

    def __init__(self, source: FiberedSpace, target: FiberedSpace, matrix):
        matrix = np.array(matrix, dtype=complex, order="C")
        expected = (target.total_dim, source.total_dim)
        if matrix.shape != expected:
            raise ValueError(f"matrix shape {matrix.shape} does not match fibers {expected}")
        if not np.isfinite(matrix.view(float)).all():
            raise ValueError("operator entries must be finite")
        self.source = source
        self.target = target
        self.matrix = matrix
        self.matrix.setflags(write=False)

    @classmethod
    def from_blocks(cls, source: FiberedSpace, target: FiberedSpace, blocks: dict) -> "BlockOperator":
        """Assemble from a {(y, x): d_y x d_x array} dict; absent blocks are zero."""
        mat = np.zeros((target.total_dim, source.total_dim), dtype=complex)
        for (y, x), blk in blocks.items():
            blk = np.asarray(blk, dtype=complex)
            shape = (int(target.fiber_dims[y]), int(source.fiber_dims[x]))
            if blk.shape != shape:
                raise ValueError(f"block ({y},{x}) has shape {blk.shape}, expected {shape}")
            mat[target.slice_of(y), source.slice_of(x)] = blk
        return cls(source, target, mat)

    def block(self, y: int, x: int) -> np.ndarray:
        return self.matrix[self.target.slice_of(y), self.source.slice_of(x)]

    def adjoint(self) -> "BlockOperator":
        return BlockOperator(self.target, self.source, self.matrix.conj().T)

    def __matmul__(self, other: "BlockOperator") -> "BlockOperator":
        if not isinstance(other, BlockOperator):
            return NotImplemented
        if other.target != self.source:
            raise ValueError("compose: inner operator's target must match outer's source")
        return BlockOperator(other.source, self.target, self.matrix @ other.matrix)

    def __add__(self, other):
        if not isinstance(other, BlockOperator):
            return NotImplemented
        if other.source != self.source or other.target != self.target:
            raise ValueError("operator sum needs matching fibered spaces")
        return BlockOperator(self.source, self.target, self.matrix + other.matrix)

    def __sub__(self, other):
        if not isinstance(other, BlockOperator):
            return NotImplemented
        if other.source != self.source or other.target != self.target:
            raise ValueError("operator difference needs matching fibered spaces")
        return BlockOperator(self.source, self.target, self.matrix - other.matrix)

    def __mul__(self, scalar):
        return BlockOperator(self.source, self.target, self.matrix * complex(scalar))

    __rmul__ = __mul__

    def norm(self) -> float:
        return spectral_norm(self.matrix)

    def block_frobenius(self) -> np.ndarray:
        """Per-block Frobenius norms as an (n_target, n_source) array."""
        sq = np.abs(self.matrix) ** 2
        by_rows = np.add.reduceat(sq, self.target.offsets[:-1], axis=0)
        by_both = np.add.reduceat(by_rows, self.source.offsets[:-1], axis=1)
        return np.sqrt(by_both)

    def _same_base(self):
        if self.source.base != self.target.base:
            raise ValueError("this operation needs source and target over the same base space")
        return self.source.base

    def propagation(self, tol: float = PROPAGATION_TOL) -> float:
        """Largest d(x, y) carrying a block of spectral norm > tol; 0 if none.

        Frobenius norms bound the decision from both sides, so per-block
        SVDs run only in the narrow ambiguous band.
        """
        base = self._same_base()
        if tol < 0:
            raise ValueError("propagation tolerance must be >= 0")
        frob = self.block_frobenius()
        min_dim = np.minimum(
            self.target.fiber_dims[:, None], self.source.fiber_dims[None, :]
        )
        definitely = frob > tol * np.sqrt(min_dim)  # spectral >= frob/sqrt(min_dim)
        ambiguous = (frob > tol) & ~definitely
        for y, x in np.argwhere(ambiguous):
            if spectral_norm(self.block(y, x)) > tol:
                definitely[y, x] = True
        if not definitely.any():
            return 0.0
        return float(base.dist[definitely].max())

    def nonzero_block_mask(self, tol: float = 0.0) -> np.ndarray:
        return self.block_frobenius() > tol

    def corner(self, B, A) -> "BlockOperator":
        """chi_B T chi_A, full shape with the complement zeroed."""
        rows = self.target.coord_mask(B)
        cols = self.source.coord_mask(A)
        mat = np.zeros_like(self.matrix)
        mat[np.ix_(rows, cols)] = self.matrix[np.ix_(rows, cols)]
        return BlockOperator(self.source, self.target, mat)

    def corner_norm(self, B, A) -> float:
        """||chi_B T chi_A||, via the submatrix (padding zeros do not matter)."""
        rows = self.target.coords_of(B)
        cols = self.source.coords_of(A)
        if rows.size == 0 or cols.size == 0:
            return 0.0
        return spectral_norm(self.matrix[np.ix_(rows, cols)])

    def _block_mask_to_coords(self, keep: np.ndarray) -> np.ndarray:
        return keep[np.ix_(self.target.coord_point, self.source.coord_point)]

    def band_truncate(self, R: float) -> "BlockOperator":
        """Zero every block at base distance > R; result has propagation <= R."""
        base = self._same_base()
        if R < 0:
            raise ValueError("band radius must be >= 0")
        keep = base.dist <= R
        return BlockOperator(self.source, self.target, self.matrix * self._block_mask_to_coords(keep))

    def band_parts(self) -> list[tuple[float, "BlockOperator"]]:
        """Decompose T = sum_k D_k with D_k carrying the blocks at distance exactly k."""
        base = self._same_base()
        parts = []
        for k in base.realized_distances():
            keep = base.dist == k
            part = BlockOperator(
                self.source, self.target, self.matrix * self._block_mask_to_coords(keep)
            )
            parts.append((float(k), part))
        return parts

    def supported_mask(self, f_values: np.ndarray, R: float) -> "BlockOperator":
        """Keep only blocks (y, x) with d(f(x), y) <= R in the target metric."""
        f_values = np.asarray(f_values, dtype=np.int64)
        if f_values.shape != (self.source.base.n,):
            raise ValueError("need one f-value per source point")
        keep = self.target.base.dist[:, f_values] <= R  # (n_target, n_source)
        return BlockOperator(self.source, self.target, self.matrix * self._block_mask_to_coords(keep))

    def unitarity_residual(self) -> float:
        """max(||T*T - I||, ||TT* - I||); 0 exactly for permutation matrices."""
        left = self.matrix.conj().T @ self.matrix - np.eye(self.source.total_dim)
        right = self.matrix @ self.matrix.conj().T - np.eye(self.target.total_dim)
        return max(spectral_norm(left), spectral_norm(right))

    def __repr__(self):
        return (
            f"BlockOperator({self.source.base.n}x{self.source.fiber_dims.max()} -> "
            f"{self.target.base.n}x{self.target.fiber_dims.max()}, "
            f"total {self.matrix.shape[1]} -> {self.matrix.shape[0]})"
        )


def indicator(space: FiberedSpace, A) -> BlockOperator:
    """Orthogonal projection onto the fibers over A (diagonal 0/1 blocks)."""
    mask = space.coord_mask(A)
    return BlockOperator(space, space, np.diag(mask.astype(complex)))


def identity_operator(space: FiberedSpace) -> BlockOperator:
    return BlockOperator(space, space, np.eye(space.total_dim, dtype=complex))


def operator_norm(T: BlockOperator, tol: float = 1e-9, fallback: bool = True) -> NormCertificate:
    """Certified largest singular value of T.

    Full SVD whenever the total dimension is at most 64; otherwise power
    iteration on T*T with the residual certificate ||T*Tv - s^2 v|| <=
    tol * s^2 and an iteration budget of 10x the total dimension.  When
    the budget runs out (nearly tied top singular values stall the
    relative residual) the value is settled by a full decomposition and
    the certificate reports method "svd"; pass fallback=False to get a
    PowerIterationError carrying the best estimate instead.
    """
    if tol <= 0:
        raise ValueError("norm tolerance must be > 0")
    return _norm_certificate(T.matrix, tol, fallback)


def random_band_unitary(space: FiberedSpace, R: float, layers: int, seed: int) -> BlockOperator:
    """Random unitary with propagation <= layers * R.

    Each layer pairs up basis vectors sitting at points within distance R
    (pairs disjoint within the layer) and applies an independent random
    SU(2) rotation to every pair; unpaired vectors get a random phase.
    Deterministic for a fixed seed.
    """
    if R < 0:
        raise ValueError("band radius must be >= 0")
    if layers < 0:
        raise ValueError("layer count must be >= 0")
    rng = np.random.default_rng(seed)
    n_coords = space.total_dim
    pt = space.coord_point
    mat = np.eye(n_coords, dtype=complex)
    for _ in range(layers):
        order = rng.permutation(n_coords)
        used = np.zeros(n_coords, dtype=bool)
        for p in order:
            if used[p]:
                continue
            used[p] = True
            near = ~used & (space.base.dist[pt[p], pt] <= R)
            candidates = np.flatnonzero(near)
            if candidates.size == 0:
                mat[p, :] *= np.exp(2j * np.pi * rng.random())
                continue
            q = int(rng.choice(candidates))
            used[q] = True
            theta = rng.random() * 2 * np.pi
            alpha = rng.random() * 2 * np.pi
            beta = rng.random() * 2 * np.pi
            a = np.cos(theta) * np.exp(1j * alpha)
            b = np.sin(theta) * np.exp(1j * beta)
            g = np.array([[a, -np.conj(b)], [b, np.conj(a)]])
            mat[[p, q], :] = g @ mat[[p, q], :]
    return BlockOperator(space, space, mat)
