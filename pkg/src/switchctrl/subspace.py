"""Linear-subspace algebra over R^n with explicit numerical rank control.

Every controllability criterion in this package reduces to lattice
operations on subspaces: kernels and images of matrices, intersections,
sums, and preimages under linear maps.  A subspace is carried as an
orthonormal basis; the zero subspace is a first-class value with an
``(n, 0)`` basis.  All rank decisions go through a single relative
singular-value cutoff so that one knob (``rank_tol``) controls the whole
computation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Relative singular-value cutoff used by every rank decision.
DEFAULT_RANK_TOL = 1e-9

#: Tolerance for the orthonormality invariant of stored bases.
ORTHONORMALITY_TOL = 1e-10


def _as_float_matrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M.reshape(1, -1)
    if M.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={M.ndim}")
    return M


def numerical_rank(M, rank_tol: float = DEFAULT_RANK_TOL) -> int:
    """Rank of ``M``: number of singular values above ``rank_tol * sigma_max``."""
    M = _as_float_matrix(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rank_tol * s[0]))


@dataclass(frozen=True, eq=False)
class Subspace:
    """A linear subspace of R^n represented by an orthonormal basis.

    ``basis`` has shape ``(n, k)`` with orthonormal columns; ``k == 0``
    encodes the zero subspace.  Instances are immutable (the array is
    marked read-only) and may be shared freely across workers.
    """

    basis: np.ndarray

    def __post_init__(self):
        b = np.array(self.basis, dtype=float, copy=True)
        if b.ndim != 2:
            raise ValueError("basis must be a 2-d array of shape (n, k)")
        n, k = b.shape
        if k > n:
            raise ValueError(f"dimension {k} exceeds ambient dimension {n}")
        if k:
            gram = b.T @ b
            if np.max(np.abs(gram - np.eye(k))) > ORTHONORMALITY_TOL:
                raise ValueError("basis columns are not orthonormal")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(n: int) -> "Subspace":
        return Subspace(np.zeros((n, 0)))

    @staticmethod
    def full(n: int) -> "Subspace":
        return Subspace(np.eye(n))

    @staticmethod
    def span_of(*vectors) -> "Subspace":
        return orthonormalize(list(vectors))

    # -- basic queries -----------------------------------------------------

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def is_zero(self) -> bool:
        return self.dim == 0

    @property
    def is_full(self) -> bool:
        return self.dim == self.ambient_dim

    def projector(self) -> np.ndarray:
        """Orthogonal projector onto the subspace (symmetric, idempotent)."""
        return self.basis @ self.basis.T

    def contains_vector(self, x, tol: float = 1e-8) -> bool:
        x = np.asarray(x, dtype=float)
        r = x - self.basis @ (self.basis.T @ x)
        return float(np.linalg.norm(r)) <= tol * max(1.0, float(np.linalg.norm(x)))

    def contains(self, other: "Subspace", tol: float = 1e-8) -> bool:
        """Whether ``other`` is contained in this subspace, up to ``tol``."""
        self._check_ambient(other)
        if other.dim == 0:
            return True
        if other.dim > self.dim:
            return False
        r = other.basis - self.basis @ (self.basis.T @ other.basis)
        return float(np.linalg.norm(r, 2)) <= tol

    def isclose(self, other: "Subspace", tol: float = 1e-8) -> bool:
        """Subspace equality as mutual containment (bases are non-unique)."""
        return self.contains(other, tol) and other.contains(self, tol)

    def distance(self, other: "Subspace") -> float:
        """Spectral-norm gap between the two orthogonal projectors."""
        self._check_ambient(other)
        return float(np.linalg.norm(self.projector() - other.projector(), 2))

    # -- lattice operations ------------------------------------------------

    def intersect(self, other: "Subspace", rank_tol: float = DEFAULT_RANK_TOL) -> "Subspace":
        """Intersection, via the joint kernel of the two projector residuals."""
        self._check_ambient(other)
        n = self.ambient_dim
        eye = np.eye(n)
        stacked = np.vstack([eye - self.projector(), eye - other.projector()])
        # Projector residuals live on scale <= 1, so rank against scale 1.
        return kernel(stacked, rank_tol, scale=1.0)

    def sum(self, other: "Subspace", rank_tol: float = DEFAULT_RANK_TOL) -> "Subspace":
        """Smallest subspace containing both operands."""
        self._check_ambient(other)
        return orthonormalize(np.hstack([self.basis, other.basis]), rank_tol)

    def __and__(self, other: "Subspace") -> "Subspace":
        return self.intersect(other)

    def __add__(self, other: "Subspace") -> "Subspace":
        return self.sum(other)

    # -- serialization support ----------------------------------------------

    def canonical_basis(self, snap_tol: float = 1e-12) -> np.ndarray:
        """Deterministic representative basis, independent of construction path.

        Built by pivoted Gram-Schmidt on the projector columns with a sign
        convention (largest-magnitude entry positive) and snapping of
        entries below ``snap_tol``.  The snapped representative spans the
        same subspace up to ``n * snap_tol``, well inside every reporting
        tolerance used here.
        """
        n, k = self.ambient_dim, self.dim
        if k == 0:
            return np.zeros((n, 0))
        R = self.projector()
        cols = []
        for _ in range(k):
            norms = np.linalg.norm(R, axis=0)
            j = int(np.argmax(norms))
            v = R[:, j] / norms[j]
            i = int(np.argmax(np.abs(v)))
            if v[i] < 0:
                v = -v
            v = np.where(np.abs(v) < snap_tol, 0.0, v)
            v = v / np.linalg.norm(v)
            cols.append(v)
            R = R - np.outer(v, v @ R)
        return np.column_stack(cols)

    def _check_ambient(self, other: "Subspace"):
        if other.ambient_dim != self.ambient_dim:
            raise ValueError(
                f"ambient dimensions differ: {self.ambient_dim} vs {other.ambient_dim}"
            )

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient_dim})"


def orthonormalize(vectors, rank_tol: float = DEFAULT_RANK_TOL) -> Subspace:
    """Span of the given vectors (iterable of 1-d arrays, or an (n, k) column matrix).

    The numerical rank keeps singular values above ``rank_tol * sigma_max``;
    an empty input yields the zero subspace of the inferred ambient dimension.
    """
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        M = np.asarray(vectors, dtype=float)
    else:
        vecs = [np.asarray(v, dtype=float).ravel() for v in vectors]
        if not vecs:
            raise ValueError("cannot infer ambient dimension from an empty vector list")
        M = np.column_stack(vecs)
    n = M.shape[0]
    if M.shape[1] == 0 or not np.any(M):
        return Subspace.zero(n)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    r = int(np.count_nonzero(s > rank_tol * s[0])) if s[0] > 0 else 0
    return Subspace(U[:, :r])


def kernel(M, rank_tol: float = DEFAULT_RANK_TOL, scale: float | None = None) -> Subspace:
    """Null space {x : Mx = 0} of a (p, n) matrix, via SVD.

    ``scale`` optionally fixes the reference magnitude for the rank cutoff;
    callers that pass a residual matrix (entries that ought to be exact
    zeros) should supply the scale of the original data so that pure
    round-off does not masquerade as full rank.
    """
    M = _as_float_matrix(M)
    p, n = M.shape
    if p == 0 or not np.any(M):
        return Subspace.full(n)
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    ref = s[0] if scale is None else scale
    r = int(np.count_nonzero(s > rank_tol * ref)) if ref > 0 else 0
    return Subspace(Vt[r:].T)


def image(M, rank_tol: float = DEFAULT_RANK_TOL) -> Subspace:
    """Column span of a matrix."""
    M = _as_float_matrix(M)
    return orthonormalize(M, rank_tol)


def preimage(M, V: Subspace, rank_tol: float = DEFAULT_RANK_TOL) -> Subspace:
    """Inverse image {x : Mx in V} of a subspace under a square matrix.

    Computed as the kernel of ``(I - P_V) M``; the rank cutoff is taken
    relative to ``|M|`` so that a full target subspace (residual exactly
    zero up to round-off) maps to the full preimage.
    """
    M = _as_float_matrix(M)
    n = V.ambient_dim
    if M.shape != (n, n):
        raise ValueError(f"expected a ({n}, {n}) matrix, got {M.shape}")
    residual = M - V.basis @ (V.basis.T @ M)
    mscale = float(np.linalg.norm(M, 2)) if np.any(M) else 0.0
    return kernel(residual, rank_tol, scale=mscale)


def pseudoinverse(M, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse by SVD with relative rank truncation."""
    M = _as_float_matrix(M)
    if M.size == 0:
        return np.zeros(M.T.shape)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(M.T.shape)
    r = int(np.count_nonzero(s > rank_tol * s[0]))
    if r == 0:
        return np.zeros(M.T.shape)
    return (Vt[:r].T / s[:r]) @ U[:, :r].T
