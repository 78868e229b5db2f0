"""Dense complex linear-algebra kernels.

Every operator in the package is a plain ``numpy.ndarray`` of dtype
``complex128``.  Kronecker products use numpy's index convention
``(i_a, i_b) -> i_a * b.shape[0] + i_b``, which the Fock-space bookkeeping
relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

# exact identities in double precision, dims up to ~200
TOL_EXACT = 1e-10
# relative numerical-rank threshold for span computations
RANK_RTOL = 1e-8


class LinAlgError(ValueError):
    """Base class for errors raised by this module."""


class DimensionMismatch(LinAlgError):
    pass


class NotHermitian(LinAlgError):
    pass


class NegativeEigenvalue(LinAlgError):
    pass


class ConvergenceError(LinAlgError):
    pass


def as_matrix(a, name="matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise LinAlgError(f"{name} has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(a))


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def herm_residual(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - dagger(a)), initial=0.0))


def hermitian_sqrt(h, tol: float = TOL_EXACT) -> np.ndarray:
    """Positive square root of a positive semidefinite matrix.

    Eigenvalues in ``[-tol * scale, tol * scale]`` are set to zero, where
    ``scale`` is ``max(1, ||h||)``, so that projections keep exact square
    roots.  Anything more negative raises
    :class:`NegativeEigenvalue`.
    """
    h = as_matrix(h, "h")
    if h.shape[0] != h.shape[1]:
        raise DimensionMismatch(f"square matrix expected, got {h.shape}")
    if h.size == 0:
        return h.copy()
    scale = max(1.0, float(np.max(np.abs(h))))
    if herm_residual(h) > tol * scale:
        raise NotHermitian(f"asymmetry {herm_residual(h):.3e} exceeds {tol:.1e}")
    w, v = np.linalg.eigh((h + dagger(h)) / 2)
    if w[0] < -tol * scale:
        raise NegativeEigenvalue(f"eigenvalue {w[0]:.3e} below -{tol:.1e}")
    w = np.where(np.abs(w) <= tol * scale, 0.0, np.clip(w, 0.0, None))
    r = (v * np.sqrt(w)) @ dagger(v)
    return (r + dagger(r)) / 2


def operator_norm(a, tol: float = 1e-12) -> float:
    """Largest singular value of ``a``.

    Backed by LAPACK's divide-and-conquer SVD, which is accurate to machine
    precision; ``tol`` is kept for interface compatibility with
    :func:`power_norm`.
    """
    a = as_matrix(a, "a")
    if a.size == 0:
        return 0.0
    try:
        s = np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(str(exc)) from exc
    return float(s[0])


def power_norm(a, tol: float = 1e-12, maxiter: int = 10_000, seed: int = 0) -> float:
    """Largest singular value by power iteration on ``a* a``."""
    a = as_matrix(a, "a")
    if a.size == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(a.shape[1]) + 1j * rng.standard_normal(a.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(maxiter):
        w = dagger(a) @ (a @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(nw - est) <= tol * nw:
            return float(np.sqrt(nw))
        est = nw
    raise ConvergenceError(f"power iteration did not converge in {maxiter} steps")


def min_eig(h) -> float:
    h = as_matrix(h, "h")
    if h.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh((h + dagger(h)) / 2)[0])


@dataclass(frozen=True)
class SubspaceProjector:
    """Orthogonal projector stored through an orthonormal basis."""

    basis: np.ndarray  # ambient_dim x rank, orthonormal columns

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=complex)
        if b.ndim != 2:
            raise DimensionMismatch("basis must be 2-D")
        object.__setattr__(self, "basis", b)

    @cached_property
    def matrix(self) -> np.ndarray:
        return self.basis @ dagger(self.basis)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def zero(cls, dim: int) -> "SubspaceProjector":
        return cls(np.zeros((dim, 0), dtype=complex))

    @classmethod
    def full(cls, dim: int) -> "SubspaceProjector":
        return cls(np.eye(dim, dtype=complex))

    def complement(self, tol: float = RANK_RTOL) -> "SubspaceProjector":
        if self.rank == 0:
            return SubspaceProjector.full(self.ambient_dim)
        if self.rank == self.ambient_dim:
            return SubspaceProjector.zero(self.ambient_dim)
        # trailing columns of a complete QR span the null space of basis^*
        qfull = scipy.linalg.qr(self.basis, mode="full")[0]
        return SubspaceProjector(qfull[:, self.rank:])

    def contains(self, v, tol: float = 1e-8) -> bool:
        v = np.asarray(v, dtype=complex)
        resid = v - self.basis @ (dagger(self.basis) @ v)
        return bool(np.linalg.norm(resid) <= tol * max(1.0, np.linalg.norm(v)))

    def residuals(self) -> tuple[float, float]:
        """(||P^2 - P||, ||P - P*||) in max-entry norm."""
        p = self.matrix
        return float(np.max(np.abs(p @ p - p), initial=0.0)), herm_residual(p)


def orthonormal_range(vectors, tol: float = RANK_RTOL, ambient_dim: int | None = None) -> SubspaceProjector:
    """Projector onto the span of ``vectors`` (columns, or a list of 1-D arrays).

    Columns are visited in order with modified Gram-Schmidt (two passes); a
    column whose residual norm is at most ``tol * max column norm`` is
    discarded.  The first accepted columns therefore fix the basis, which
    keeps downstream matrix representations reproducible.
    """
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        cols = np.asarray(vectors, dtype=complex)
    else:
        vecs = [np.asarray(v, dtype=complex).ravel() for v in vectors]
        if not vecs:
            if ambient_dim is None:
                raise DimensionMismatch("ambient_dim required for an empty family")
            return SubspaceProjector.zero(ambient_dim)
        dims = {v.shape[0] for v in vecs}
        if len(dims) != 1:
            raise DimensionMismatch(f"vectors of differing dimension {sorted(dims)}")
        cols = np.stack(vecs, axis=1)
    dim, ncols = cols.shape
    if ncols == 0:
        return SubspaceProjector.zero(dim)
    norms = np.linalg.norm(cols, axis=0)
    thresh = tol * float(norms.max())
    if thresh == 0.0:
        return SubspaceProjector.zero(dim)
    basis = np.zeros((dim, min(dim, ncols)), dtype=complex)
    r = 0
    for j in range(ncols):
        if norms[j] <= thresh:
            continue
        v = cols[:, j].copy()
        for _ in range(2):
            if r:
                v -= basis[:, :r] @ (dagger(basis[:, :r]) @ v)
        nv = np.linalg.norm(v)
        if nv > thresh:
            basis[:, r] = v / nv
            r += 1
            if r == dim:
                break
    return SubspaceProjector(basis[:, :r])


def extend_basis(basis: np.ndarray, candidates: np.ndarray, thresh: float) -> np.ndarray:
    """Orthonormal columns spanning ``candidates`` modulo ``span(basis)``.

    Block version of :func:`orthonormal_range` for large spans: candidates are
    projected off the current basis twice, then a column-pivoted QR keeps the
    directions whose residual exceeds the absolute threshold ``thresh``.
    """
    c = np.asarray(candidates, dtype=complex)
    if c.shape[1] == 0:
        return np.zeros((c.shape[0], 0), dtype=complex)
    for _ in range(2):
        if basis.shape[1]:
            c = c - basis @ (dagger(basis) @ c)
    q, r, _ = scipy.linalg.qr(c, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    keep = int(np.sum(diag > thresh))
    new = q[:, :keep]
    if basis.shape[1] and keep:
        # one more pass against the old basis for orthogonality at 1e-15
        new = new - basis @ (dagger(basis) @ new)
        new, _ = np.linalg.qr(new)
    return new


def intersection(p1: SubspaceProjector, p2: SubspaceProjector, tol: float = 1e-6) -> SubspaceProjector:
    """Intersection of two subspaces via principal angles.

    Directions of ``p2`` whose principal angle to ``p1`` has sine at most
    ``tol`` are kept.
    """
    if p1.ambient_dim != p2.ambient_dim:
        raise DimensionMismatch("subspaces live in different spaces")
    if p1.rank == 0 or p2.rank == 0:
        return SubspaceProjector.zero(p1.ambient_dim)
    _, cosines, zh = np.linalg.svd(dagger(p1.basis) @ p2.basis)
    sines = np.sqrt(np.clip(1.0 - cosines**2, 0.0, None))
    keep = int(np.sum(sines <= tol))
    return SubspaceProjector(p2.basis @ dagger(zh[:keep]))


def projector_distance(p1: SubspaceProjector | np.ndarray, p2: SubspaceProjector | np.ndarray) -> float:
    a = p1.matrix if isinstance(p1, SubspaceProjector) else np.asarray(p1)
    b = p2.matrix if isinstance(p2, SubspaceProjector) else np.asarray(p2)
    return operator_norm(a - b)
