"""Maximal q-commuting piece of a finite-dimensional operator tuple.

For a tuple R the subspace K spanned by ``R^alpha (q_ij R_i R_j - R_j R_i) h``
is invariant under every R_i; its orthogonal complement is the largest
co-invariant subspace on which the compressed tuple q-commutes.  The
deformation matrix here is an arbitrary complex matrix, not necessarily of
unit modulus.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from . import linalg
from .linalg import SubspaceProjector, dagger
from .qcoeff import as_qmatrix
from .report import Report

CONTRACTIVE_TOL = 1e-10


class NotADilation(ValueError):
    pass


class MalformedTuple(ValueError):
    pass


def matrix_to_dict(a) -> dict:
    a = np.asarray(a, dtype=complex)
    return {
        "rows": a.shape[0],
        "cols": a.shape[1],
        "entries": [[float(z.real), float(z.imag)] for z in a.ravel()],
    }


def matrix_from_dict(d: dict) -> np.ndarray:
    rows, cols = int(d["rows"]), int(d["cols"])
    entries = d["entries"]
    if len(entries) != rows * cols:
        raise MalformedTuple(f"expected {rows * cols} entries, got {len(entries)}")
    vals = np.array([complex(float(re), float(im)) for re, im in entries], dtype=complex)
    return linalg.as_matrix(vals.reshape(rows, cols))


@dataclass(frozen=True, eq=False)
class OperatorTuple:
    """n square matrices acting on a common space C^dim."""

    matrices: tuple

    def __post_init__(self):
        mats = tuple(linalg.as_matrix(m) for m in self.matrices)
        if not mats:
            raise MalformedTuple("empty operator tuple")
        dims = {m.shape for m in mats}
        if len(dims) != 1 or mats[0].shape[0] != mats[0].shape[1]:
            raise MalformedTuple(f"matrices must be square and of one size, got {sorted(dims)}")
        object.__setattr__(self, "matrices", mats)

    @property
    def n(self) -> int:
        return len(self.matrices)

    @property
    def dim(self) -> int:
        return self.matrices[0].shape[0]

    def __getitem__(self, i) -> np.ndarray:
        return self.matrices[i]

    def __iter__(self):
        return iter(self.matrices)

    def row_gram(self) -> np.ndarray:
        """sum T_i T_i^*"""
        return sum(t @ dagger(t) for t in self.matrices)

    @property
    def contractive(self) -> bool:
        return linalg.min_eig(np.eye(self.dim) - self.row_gram()) >= -CONTRACTIVE_TOL

    def word(self, alpha) -> np.ndarray:
        """T^alpha = T_{alpha_1} ... T_{alpha_m}; the empty word is I."""
        out = np.eye(self.dim, dtype=complex)
        for a in alpha:
            out = out @ self.matrices[a]
        return out

    def adjoint_word(self, alpha) -> np.ndarray:
        return dagger(self.word(alpha))

    def compress(self, basis: np.ndarray) -> "OperatorTuple":
        return OperatorTuple(tuple(dagger(basis) @ t @ basis for t in self.matrices))

    def direct_sum(self, other: "OperatorTuple") -> "OperatorTuple":
        if other.n != self.n:
            raise ValueError("tuples of different length")
        return OperatorTuple(tuple(_block2(a, b) for a, b in zip(self, other)))

    def tensor_identity(self, k: int) -> "OperatorTuple":
        return OperatorTuple(tuple(np.kron(t, np.eye(k)) for t in self.matrices))

    def scaled(self, r: float) -> "OperatorTuple":
        return OperatorTuple(tuple(r * t for t in self.matrices))

    def q_commutator_residual(self, q) -> float:
        """max over i < j of || T_j T_i - q_ij T_i T_j ||."""
        qm = as_qmatrix(q)
        res = 0.0
        for i in range(self.n):
            for j in range(i + 1, self.n):
                d = self[j] @ self[i] - qm[i, j] * self[i] @ self[j]
                res = max(res, linalg.operator_norm(d))
        return res

    def to_dict(self) -> dict:
        return {"n": self.n, "dim": self.dim, "matrices": [matrix_to_dict(m) for m in self.matrices]}

    @classmethod
    def from_dict(cls, d: dict) -> "OperatorTuple":
        try:
            mats = tuple(matrix_from_dict(m) for m in d["matrices"])
            n, dim = int(d["n"]), int(d["dim"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedTuple(f"malformed operator tuple: {exc!r}") from exc
        if len(mats) != n:
            raise MalformedTuple(f"declared n={n} but {len(mats)} matrices given")
        tup = cls(mats)
        if tup.dim != dim:
            raise MalformedTuple(f"declared dim={dim} but matrices are {tup.dim}x{tup.dim}")
        return tup

    @classmethod
    def from_json(cls, text: str) -> "OperatorTuple":
        return cls.from_dict(json.loads(text))


def _block2(a, b) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0],) * 2, dtype=complex)
    out[: a.shape[0], : a.shape[0]] = a
    out[a.shape[0]:, a.shape[0]:] = b
    return out


@dataclass
class PieceResult:
    projector: SubspaceProjector  # onto the maximal q-commuting subspace
    compressed: OperatorTuple | None  # None when the piece is trivial
    iterations: int
    kernel_ranks: list[int] = field(default_factory=list)  # rank of K after each sweep

    @property
    def rank(self) -> int:
        return self.projector.rank

    @property
    def trivial(self) -> bool:
        return self.rank == 0


def _operators(R: OperatorTuple):
    # span closure is dominated by R_i @ block; the dilation tuples are very sparse
    if R.dim > 256:
        return [scipy.sparse.csr_matrix(t) for t in R.matrices]
    return list(R.matrices)


def _norm_bound(op) -> float:
    """sqrt(||A||_1 ||A||_inf), an upper bound for the spectral norm."""
    a = abs(op)
    return float(np.sqrt(a.sum(axis=0).max() * a.sum(axis=1).max()))


def _seed_pairs(qm: np.ndarray, eps: float = 1e-14):
    """Pairs (i, j) whose seeds are not multiples of earlier ones.

    The (j, i) seed is -q_ji times the (i, j) seed when q_ij q_ji = 1, and the
    (i, i) seed vanishes when q_ii = 1.
    """
    n = qm.shape[0]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    pairs += [(j, i) for i, j in list(pairs) if abs(qm[i, j] * qm[j, i] - 1) > eps]
    pairs += [(i, i) for i in range(n) if abs(qm[i, i] - 1) > eps]
    return pairs


def maximal_q_piece(R: OperatorTuple, q, tol: float = linalg.RANK_RTOL) -> PieceResult:
    """Complement of the smallest R-invariant subspace containing every range of
    ``q_ij R_i R_j - R_j R_i``."""
    qm = as_qmatrix(q)
    if qm.shape != (R.n, R.n):
        raise ValueError(f"q of shape {qm.shape} for a {R.n}-tuple")
    ops = _operators(R)
    scale = max(1.0, max(_norm_bound(op) for op in ops)) ** 2
    thresh = tol * scale
    seeds = [np.asarray(qm[i, j] * (ops[i] @ R[j]) - ops[j] @ R[i]) for i, j in _seed_pairs(qm)]
    seeds = np.concatenate(seeds, axis=1) if seeds else np.zeros((R.dim, 0), dtype=complex)
    seeds = seeds[:, np.linalg.norm(seeds, axis=0) > thresh]
    empty = np.zeros((R.dim, 0), dtype=complex)
    basis = linalg.extend_basis(empty, seeds, thresh)
    frontier = basis
    ranks = [basis.shape[1]]
    iterations = 0
    while frontier.shape[1] and basis.shape[1] < R.dim:
        iterations += 1
        cand = np.concatenate([np.asarray(op @ frontier) for op in ops], axis=1)
        frontier = linalg.extend_basis(basis, cand, thresh)
        basis = np.concatenate([basis, frontier], axis=1)
        ranks.append(basis.shape[1])
        if iterations > R.dim:
            raise RuntimeError("span closure failed to stabilise")
    kernel = SubspaceProjector(basis)
    piece = kernel.complement()
    compressed = R.compress(piece.basis) if piece.rank else None
    return PieceResult(piece, compressed, iterations, ranks)


def _relation_ops(R: OperatorTuple, q):
    """conj(q_ij) R_j* R_i* - R_i* R_j* for all i, j."""
    qm = as_qmatrix(q)
    rs = [dagger(t) for t in R]
    return [np.conj(qm[i, j]) * rs[j] @ rs[i] - rs[i] @ rs[j] for i, j in itertools.product(range(R.n), repeat=2)]


def coinvariant_span(R: OperatorTuple, vectors: np.ndarray, word_cap: int, tol: float = linalg.RANK_RTOL) -> np.ndarray:
    """Orthonormal basis of span{(R^alpha)^* v : |alpha| <= word_cap}."""
    empty = np.zeros((R.dim, 0), dtype=complex)
    basis = linalg.extend_basis(empty, vectors, tol)
    frontier = basis
    rs = [dagger(t) for t in R]
    for _ in range(word_cap):
        if not frontier.shape[1]:
            break
        cand = np.concatenate([r @ frontier for r in rs], axis=1)
        frontier = linalg.extend_basis(basis, cand, tol)
        basis = np.concatenate([basis, frontier], axis=1)
    return basis


def dual_residual(R: OperatorTuple, q, vectors: np.ndarray, word_cap: int) -> float:
    """max over i, j, |alpha| <= word_cap of the starred relation applied to (R^alpha)^* v."""
    if vectors.shape[1] == 0:
        return 0.0
    z = coinvariant_span(R, vectors, word_cap)
    return max(linalg.operator_norm(x @ z) for x in _relation_ops(R, q))


def dual_characterization_check(R: OperatorTuple, q, result: PieceResult, word_cap: int | None = None,
                                tol: float = 1e-9, seed: int = 0) -> Report:
    """The piece satisfies the starred relations; a vector outside it does not."""
    word_cap = R.dim if word_cap is None else word_cap
    inside = dual_residual(R, q, result.projector.basis, word_cap)
    details = {"word_cap": word_cap, "piece_rank": result.rank}
    children = [Report("inside_piece", inside, tol)]
    outside = result.projector.complement()
    if outside.rank:
        rng = np.random.default_rng(seed)
        c = rng.standard_normal(outside.rank) + 1j * rng.standard_normal(outside.rank)
        v = outside.basis @ (c / np.linalg.norm(c))
        out_res = dual_residual(R, q, v[:, None], word_cap)
        details["outside_residual"] = out_res
        children.append(Report("outside_violates", out_res, tol, passed=out_res > tol))
    return Report.combine("dual_characterization", children, **details)


def _piece_distance(p: SubspaceProjector, expected: np.ndarray) -> float:
    return linalg.operator_norm(p.matrix - expected)


def lattice_checks(A: OperatorTuple, B: OperatorTuple, q, tensor_dim: int = 2, tol: float = 1e-9) -> Report:
    """piece(A + B) = piece(A) + piece(B) and piece(A x I) = piece(A) x I."""
    if A.n != B.n:
        raise ValueError("tuples of different length")
    pa = maximal_q_piece(A, q).projector.matrix
    pb = maximal_q_piece(B, q).projector.matrix
    sum_piece = maximal_q_piece(A.direct_sum(B), q).projector
    tens_piece = maximal_q_piece(A.tensor_identity(tensor_dim), q).projector
    children = [
        Report("direct_sum", _piece_distance(sum_piece, _block2(pa, pb)), tol),
        Report("tensor_identity", _piece_distance(tens_piece, np.kron(pa, np.eye(tensor_dim))), tol),
    ]
    return Report.combine("lattice", children)


def dilation_residual(T: OperatorTuple, R: OperatorTuple, embedding: np.ndarray) -> float:
    """max_i || R_i^* E - E T_i^* || for the isometric embedding E of H into L."""
    return max(linalg.operator_norm(dagger(r) @ embedding - embedding @ dagger(t)) for r, t in zip(R, T))


def dilation_intersection_check(T: OperatorTuple, R: OperatorTuple, q, embedding: np.ndarray | None = None,
                                tol: float = 1e-8, dilation_tol: float = linalg.TOL_EXACT,
                                piece_r: PieceResult | None = None) -> Report:
    """The piece of T is the piece of its dilation R intersected with H,
    and the compressed piece of R dilates the compressed piece of T.

    ``piece_r`` may carry an already computed piece of ``R``.
    """
    if embedding is None:
        embedding = np.eye(R.dim, T.dim, dtype=complex)
    embedding = np.asarray(embedding, dtype=complex)
    dres = dilation_residual(T, R, embedding)
    if dres > dilation_tol:
        raise NotADilation(f"R_i^* does not extend T_i^* (residual {dres:.3e})")
    piece_t = maximal_q_piece(T, q)
    if piece_r is None:
        piece_r = maximal_q_piece(R, q)
    h = SubspaceProjector(embedding)
    meet = linalg.intersection(piece_r.projector, h)
    expected = embedding @ piece_t.projector.basis
    dist = linalg.operator_norm(meet.matrix - expected @ dagger(expected))
    children = [Report("intersection", dist, tol, details={"rank_T_piece": piece_t.rank, "rank_meet": meet.rank})]
    if piece_t.rank and piece_r.rank:
        # H^q sits inside L^q; express it in L^q coordinates
        emb = dagger(piece_r.projector.basis) @ expected
        children.append(Report("piece_dilates_piece",
                               dilation_residual(piece_t.compressed, piece_r.compressed, emb), tol))
    return Report.combine("dilation_intersection", children, dilation_residual=dres)
