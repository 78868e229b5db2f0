"""Isometric dilations of row contractions and the q-commuting dilation checks.

Two concrete models of the minimal isometric dilation are built:

* the block model on ``H (+) Gamma_{<=M} (x) D`` where ``D`` is the range of
  the positive square root of ``[delta_ij I - T_i^* T_j]``;
* for pure tuples, the embedding ``A h = sum_alpha e^alpha (x) Delta (T^alpha)^* h``
  into ``Gamma_{<=M} (x) range(Delta)`` on which ``V_i (x) I`` acts.

Fock levels are cut at ``M``.  The block model keeps ``V_i^* = T_i^*`` on
``H`` exactly; everything involving ``A`` is off by a tail controlled by
``purity_deficit(T, M + 1)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse

from . import linalg
from .fock import FockContext, QFockSpace, creation
from .linalg import SubspaceProjector, dagger
from .piece import OperatorTuple, PieceResult, dilation_intersection_check, maximal_q_piece
from .qcoeff import QParams, as_qmatrix
from .report import Report

EPS_TAIL = 1e-6


class NotContractive(ValueError):
    pass


class NegativeBlockGram(ValueError):
    pass


class TailTooLarge(ValueError):
    """The Fock truncation level is too low for the requested accuracy."""


# -- defect and purity -------------------------------------------------------

def defect(T: OperatorTuple, tol: float = linalg.TOL_EXACT) -> np.ndarray:
    """(I - sum T_i T_i^*)^{1/2}"""
    h = np.eye(T.dim) - T.row_gram()
    try:
        return linalg.hermitian_sqrt(h, tol)
    except linalg.NegativeEigenvalue as exc:
        raise NotContractive(str(exc)) from exc


def defect_space(T: OperatorTuple, tol: float = linalg.RANK_RTOL) -> SubspaceProjector:
    d = defect(T)
    if not np.any(d):
        return SubspaceProjector.zero(T.dim)
    return linalg.orthonormal_range(d, tol=tol)


def cp_map_tau(T: OperatorTuple, X: np.ndarray) -> np.ndarray:
    """tau(X) = sum T_i X T_i^*"""
    return sum(t @ X @ dagger(t) for t in T)


def amplified_tau(T: OperatorTuple, X: np.ndarray, m: int) -> np.ndarray:
    """tau^m applied entrywise to an n x n block matrix (blocks of size dim)."""
    d = T.dim
    k = X.shape[0] // d
    if X.shape != (k * d, k * d):
        raise ValueError(f"block matrix of shape {X.shape} incompatible with dim {d}")
    out = np.array(X, dtype=complex)
    for a in range(k):
        for b in range(k):
            blk = out[a * d:(a + 1) * d, b * d:(b + 1) * d]
            for _ in range(m):
                blk = cp_map_tau(T, blk)
            out[a * d:(a + 1) * d, b * d:(b + 1) * d] = blk
    return out


def purity_deficit(T: OperatorTuple, m: int) -> float:
    """|| sum_{|alpha| = m} T^alpha (T^alpha)^* || = || tau^m(I) ||"""
    x = np.eye(T.dim, dtype=complex)
    for _ in range(m):
        x = cp_map_tau(T, x)
    return linalg.operator_norm(x)


# -- the block operator D ----------------------------------------------------

def popescu_block_D(T: OperatorTuple, tol: float = linalg.TOL_EXACT) -> np.ndarray:
    """Positive square root of [delta_ij I - T_i^* T_j] on C^n (x) H.

    Rows and columns are ordered as ``e_i (x) h -> i * dim + h``.
    """
    d, n = T.dim, T.n
    gram = np.eye(n * d, dtype=complex)
    for i in range(n):
        for j in range(n):
            gram[i * d:(i + 1) * d, j * d:(j + 1) * d] -= dagger(T[i]) @ T[j]
    try:
        return linalg.hermitian_sqrt(gram, tol)
    except linalg.NegativeEigenvalue as exc:
        raise NegativeBlockGram(str(exc)) from exc


def block_vector(T: OperatorTuple, i: int, h: np.ndarray) -> np.ndarray:
    """e_i (x) h in C^n (x) H."""
    v = np.zeros(T.n * T.dim, dtype=complex)
    v[i * T.dim:(i + 1) * T.dim] = h
    return v


def d_action_residual(T: OperatorTuple, h: np.ndarray, block_op: np.ndarray | None = None) -> float:
    """|| D^2 h - sum e_i (x) (h_i - sum_j T_i^* T_j h_j) ||"""
    block_op = popescu_block_D(T) if block_op is None else block_op
    d = T.dim
    hs = [h[i * d:(i + 1) * d] for i in range(T.n)]
    expected = np.concatenate([hs[i] - sum(dagger(T[i]) @ T[j] @ hs[j] for j in range(T.n)) for i in range(T.n)])
    return float(np.linalg.norm(block_op @ (block_op @ h) - expected))


def pair_form_residual(T: OperatorTuple, q: QParams, h: np.ndarray, block_op: np.ndarray | None = None) -> float:
    """|| D h - sum_i e_i (x) sum_j T_j h_ij ||, valid when D is a projection."""
    block_op = popescu_block_D(T) if block_op is None else block_op
    hp = pair_vectors(T, q, h)
    expected = np.concatenate([sum(T[j] @ hp[(i, j)] for j in range(T.n)) for i in range(T.n)])
    return float(np.linalg.norm(block_op @ h - expected))


# -- block model of the isometric dilation ----------------------------------

@dataclass
class DilationSpace:
    """Index bookkeeping for H (+) (Gamma_{<=M} (x) D).

    H occupies indices ``[0, H_dim)``; the Fock part follows, word-major, with
    index ``H_dim + word_index * defect_rank + k`` for the k-th basis vector of D.
    """

    H_dim: int
    ctx: FockContext
    block: np.ndarray  # the block operator on C^n (x) H
    defect_basis: np.ndarray  # orthonormal basis of range(D), (n*H_dim) x defect_rank

    @property
    def defect_rank(self) -> int:
        return self.defect_basis.shape[1]

    @property
    def total_dim(self) -> int:
        return self.H_dim + self.ctx.dim * self.defect_rank

    @property
    def embedding(self) -> np.ndarray:
        return np.eye(self.total_dim, self.H_dim, dtype=complex)

    def fock_index(self, word, k: int = 0) -> int:
        return self.H_dim + self.ctx.index(word) * self.defect_rank + k

    def level_slice(self, m: int) -> slice:
        r = self.defect_rank
        sl = self.ctx.level_slice(m)
        return slice(self.H_dim + sl.start * r, self.H_dim + sl.stop * r)

    def defect_vector(self, word, v: np.ndarray) -> np.ndarray:
        """e^word (x) v for v in C^n (x) H (projected onto D coordinates)."""
        out = np.zeros(self.total_dim, dtype=complex)
        start = self.fock_index(word)
        out[start:start + self.defect_rank] = dagger(self.defect_basis) @ v
        return out

    def h_vector(self, h: np.ndarray) -> np.ndarray:
        out = np.zeros(self.total_dim, dtype=complex)
        out[: self.H_dim] = h
        return out


def noncommuting_dilation(T: OperatorTuple, M: int) -> tuple[OperatorTuple, DilationSpace]:
    """V_i (h (+) f) = T_i h (+) D(e_i (x) h) (+) e_i (x) f, with level M cropped."""
    if not T.contractive:
        raise NotContractive("sum T_i T_i^* exceeds the identity")
    ctx = FockContext(T.n, M)
    block_op = popescu_block_D(T)
    dproj = linalg.orthonormal_range(block_op, tol=linalg.RANK_RTOL) if np.any(block_op) else SubspaceProjector.zero(block_op.shape[0])
    space = DilationSpace(T.dim, ctx, block_op, dproj.basis)
    r, d = space.defect_rank, T.dim
    mats = []
    for i in range(T.n):
        v = np.zeros((space.total_dim, space.total_dim), dtype=complex)
        v[:d, :d] = T[i]
        if r:
            v[d:d + r, :d] = dagger(space.defect_basis) @ block_op[:, i * d:(i + 1) * d]
            v[d:, d:] = np.kron(creation(ctx, i), np.eye(r))
        mats.append(v)
    return OperatorTuple(tuple(mats)), space


def words_upto(n: int, length: int):
    for m in range(length + 1):
        yield from itertools.product(range(n), repeat=m)


def word_products(T: OperatorTuple, max_len: int, left: np.ndarray | None = None):
    """{alpha: left @ T^alpha} for all words with |alpha| <= max_len."""
    base = np.eye(T.dim, dtype=complex) if left is None else left
    out = {(): base}
    frontier = {(): base}
    for _ in range(max_len):
        nxt = {}
        for alpha, x in frontier.items():
            for i in range(T.n):
                nxt[alpha + (i,)] = x @ T[i]
        out.update(nxt)
        frontier = nxt
    return out


def compression_residual(T: OperatorTuple, R: OperatorTuple, embedding: np.ndarray, max_len: int) -> float:
    """max over |alpha|, |beta| <= max_len of || E^* R^alpha (R^beta)^* E - T^alpha (T^beta)^* ||."""
    left_r = word_products(R, max_len, dagger(embedding))
    left_t = word_products(T, max_len)
    keys = list(left_t)
    lr = np.stack([left_r[k] for k in keys])  # (w, d, L)
    lt = np.stack([left_t[k] for k in keys])  # (w, d, d)
    # moments[a, b] = left[a] @ left[b]^*
    mr = np.einsum("aik,bjk->abij", lr, lr.conj())
    mt = np.einsum("aik,bjk->abij", lt, lt.conj())
    return float(np.max(np.abs(mr - mt), initial=0.0))


def adjoint_residual(T: OperatorTuple, R: OperatorTuple, embedding: np.ndarray) -> float:
    return max(float(np.max(np.abs(dagger(r) @ embedding - embedding @ dagger(t)), initial=0.0)) for r, t in zip(R, T))


def isometry_residual(R: OperatorTuple, space: DilationSpace) -> float:
    """max_ij || V_i^* V_j - delta_ij I || on the part below the top Fock level."""
    keep = np.ones(space.total_dim, dtype=bool)
    keep[space.level_slice(space.ctx.M)] = False
    res = 0.0
    for i in range(R.n):
        for j in range(R.n):
            g = (dagger(R[i]) @ R[j])[np.ix_(keep, keep)]
            if i == j:
                g = g - np.eye(int(keep.sum()))
            res = max(res, float(np.max(np.abs(g), initial=0.0)))
    return res


def minimality_rank(R: OperatorTuple, space: DilationSpace) -> int:
    """Rank of span{V^alpha h : |alpha| <= M + 1, h in H}."""
    ops = [scipy.sparse.csr_matrix(r) for r in R]
    basis = linalg.extend_basis(np.zeros((space.total_dim, 0), dtype=complex), space.embedding, linalg.RANK_RTOL)
    frontier = basis
    for _ in range(space.ctx.M + 1):
        if not frontier.shape[1]:
            break
        cand = np.concatenate([np.asarray(op @ frontier) for op in ops], axis=1)
        frontier = linalg.extend_basis(basis, cand, linalg.RANK_RTOL)
        basis = np.concatenate([basis, frontier], axis=1)
    return basis.shape[1]


# -- Poisson embedding for pure tuples ----------------------------------------

@dataclass
class PoissonEmbedding:
    isometry: np.ndarray  # (ctx.dim * rank) x H_dim
    ctx: FockContext
    defect_basis: np.ndarray  # H_dim x rank, orthonormal basis of range(Delta)
    tail: float  # purity_deficit(T, M + 1)

    @property
    def rank(self) -> int:
        return self.defect_basis.shape[1]

    def isometry_deficit(self) -> float:
        return linalg.operator_norm(dagger(self.isometry) @ self.isometry - np.eye(self.isometry.shape[1]))

    def shift_tuple(self) -> OperatorTuple:
        """V_i (x) I on Gamma_{<=M} (x) range(Delta)."""
        return OperatorTuple(tuple(np.kron(creation(self.ctx, i), np.eye(self.rank)) for i in range(self.ctx.n)))


def poisson_embedding(T: OperatorTuple, M: int, eps_tail: float = EPS_TAIL) -> PoissonEmbedding:
    """A h = sum_{|alpha| <= M} e^alpha (x) Delta (T^alpha)^* h."""
    tail = purity_deficit(T, M + 1)
    if tail > eps_tail:
        raise TailTooLarge(f"purity deficit {tail:.3e} at level {M + 1} exceeds {eps_tail:.1e}; raise M")
    ctx = FockContext(T.n, M)
    dspace = defect_space(T)
    delta = dagger(dspace.basis) @ defect(T)  # coordinates in range(Delta)
    r = dspace.rank
    iso = np.zeros((ctx.dim * r, T.dim), dtype=complex)
    # blocks[idx] = Delta (T^alpha)^*, built level by level: (T^{i beta})^* = (T^beta)^* T_i^*
    prev = [delta]
    iso[0:r] = delta
    for m in range(1, M + 1):
        cur = []
        for i in range(T.n):
            ti = dagger(T[i])
            cur.extend(x @ ti for x in prev)
        start = ctx.offsets[m]
        for k, x in enumerate(cur):
            iso[(start + k) * r:(start + k + 1) * r] = x
        prev = cur
    return PoissonEmbedding(iso, ctx, dspace.basis, tail)


def poisson_compression_residual(T: OperatorTuple, pe: PoissonEmbedding, max_len: int) -> list[tuple[int, float, float]]:
    """(|alpha|, max residual of T^alpha - A^*(V^alpha (x) I)A, bound) per word length.

    The exact truncated value is ``T^alpha (I - tau^{M - |alpha| + 1}(I))`` so
    the bound is ``||T^alpha|| * purity_deficit(T, M - |alpha| + 1)``.
    """
    free = pe.shift_tuple()
    out = []
    for length in range(max_len + 1):
        worst, bound = 0.0, 0.0
        for alpha in itertools.product(range(T.n), repeat=length):
            lhs = dagger(pe.isometry) @ free.word(alpha) @ pe.isometry
            ta = T.word(alpha)
            worst = max(worst, linalg.operator_norm(lhs - ta))
            bound = max(bound, linalg.operator_norm(ta) * purity_deficit(T, pe.ctx.M - length + 1))
        out.append((length, worst, bound))
    return out


# -- Weyl pairs: finite q-spherical unitaries ---------------------------------

def weyl_pair_generator(m: int, scale: float = 1.0) -> OperatorTuple:
    """(scale * U / sqrt 2, scale * W / sqrt 2) with U = diag(zeta^k), W e_k = e_{k-1}.

    W U = zeta U W, so T_2 T_1 = zeta T_1 T_2 with zeta = exp(2 pi i / m).
    """
    if m < 2:
        raise ValueError("root order must be at least 2")
    zeta = np.exp(2j * np.pi / m)
    u = np.diag(zeta ** np.arange(m))
    w = np.roll(np.eye(m, dtype=complex), -1, axis=0)
    c = scale / np.sqrt(2)
    return OperatorTuple((c * u, c * w))


def weyl_q(m: int) -> QParams:
    zeta = np.exp(2j * np.pi / m)
    return QParams(np.array([[1, zeta], [np.conj(zeta), 1]], dtype=complex))


def random_weyl_tuple(m: int, rng: np.random.Generator, r_range=(0.3, 0.95)) -> OperatorTuple:
    """Scaled Weyl pair conjugated by a random unitary."""
    r = rng.uniform(*r_range)
    g = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    u, _ = np.linalg.qr(g)
    w = weyl_pair_generator(m, r)
    return OperatorTuple(tuple(u @ t @ dagger(u) for t in w))


# -- proof objects for q-spherical unitaries ---------------------------------

@dataclass
class ChainVectors:
    """x_0, ..., x_M in the block model together with the seed data."""

    x: list[np.ndarray]
    h: np.ndarray  # seed in C^n (x) H
    h_pairs: dict  # (i, j) -> h_ij in H
    space: DilationSpace
    checks: list[Report] = field(default_factory=list)

    def norms_sq(self) -> list[float]:
        return [float(np.vdot(v, v).real) for v in self.x]


def pair_vectors(T: OperatorTuple, q: QParams, h: np.ndarray) -> dict:
    """h_ij = T_j^* h_i - q_ij T_i^* h_j."""
    d = T.dim
    hs = [h[i * d:(i + 1) * d] for i in range(T.n)]
    return {
        (i, j): dagger(T[j]) @ hs[i] - q.q[i, j] * dagger(T[i]) @ hs[j]
        for i in range(T.n) for j in range(T.n)
    }


def _chain_coeff(q: np.ndarray, prefix, i: int, j: int) -> complex:
    c = 1.0 + 0.0j
    for r, s in itertools.combinations(range(len(prefix)), 2):
        c *= q[prefix[r], prefix[s]]
    for a in prefix:
        c *= q[a, i] * q[a, j]
    return complex(c)


def _chain_vector(T: OperatorTuple, q: np.ndarray, space: DilationSpace, hp: dict, m: int) -> np.ndarray:
    out = np.zeros(space.total_dim, dtype=complex)
    block_op = space.block
    for prefix in itertools.product(range(T.n), repeat=m - 1):
        tstar = np.eye(T.dim, dtype=complex)
        for a in prefix:
            tstar = tstar @ dagger(T[a])
        for i in range(T.n):
            acc = np.zeros(T.n * T.dim, dtype=complex)
            for j in range(T.n):
                acc += block_op @ block_vector(T, j, _chain_coeff(q, prefix, i, j) * (tstar @ hp[(i, j)]))
            out += space.defect_vector(prefix + (i,), acc)
    return out


def _apply_word(ops, word, v):
    for a in reversed(word):
        v = ops[a] @ v
    return v


def chain_vectors(T: OperatorTuple, q: QParams, h: np.ndarray | None = None, M: int = 4,
                  seed: int = 0, tol: float = 1e-9) -> ChainVectors:
    """Build the chain x_0, x_1, ..., x_M and check its identities.

    ``h`` defaults to a seeded complex Gaussian rescaled so that ``||D h|| = 1``.
    The checks are the base identity (x_0 + x_1 as a combination of q-commutators
    of the dilation), the telescoping step (-x_{m-1} + x_m) for 2 <= m <= M - 1
    and ``||x_m||^2 <= 2 ||x_0||^2``.
    """
    dil, space = noncommuting_dilation(T, M)
    qm = q.q
    n, d = T.n, T.dim
    if h is None:
        rng = np.random.default_rng(seed)
        h = rng.standard_normal(n * d) + 1j * rng.standard_normal(n * d)
        y0 = np.linalg.norm(space.block @ h)
        if y0 > 0:
            h = h / y0
    h = np.asarray(h, dtype=complex)
    hp = pair_vectors(T, q, h)
    x0 = space.defect_vector((), space.block @ h)
    xs = [x0] + [_chain_vector(T, qm, space, hp, m) for m in range(1, M + 1)]
    cv = ChainVectors(xs, h, hp, space)

    ops = [scipy.sparse.csr_matrix(v) for v in dil]
    emb = space.h_vector
    lhs = np.zeros(space.total_dim, dtype=complex)
    for i in range(n):
        for j in range(i + 1, n):
            hv = emb(qm[j, i] * hp[(i, j)])
            lhs += qm[i, j] * _apply_word(ops, (i, j), hv) - _apply_word(ops, (j, i), hv)
    cv.checks.append(Report("chain_base", float(np.linalg.norm(lhs - xs[0] - xs[1])), tol))

    step = 0.0
    for m in range(2, M):
        lhs = np.zeros(space.total_dim, dtype=complex)
        for prefix in itertools.product(range(n), repeat=m - 1):
            c0 = 1.0 + 0.0j
            for r, s in itertools.combinations(range(m - 1), 2):
                c0 *= qm[prefix[r], prefix[s]]
            tstar = np.eye(d, dtype=complex)
            for a in prefix[:-1]:
                tstar = tstar @ dagger(T[a])
            for i in range(n):
                for j in range(n):
                    c = c0
                    for a in prefix[:-1]:
                        c *= qm[a, j]
                    hv = emb(c * (dagger(T[i]) @ tstar @ hp[(prefix[-1], j)]))
                    term = qm[i, j] * _apply_word(ops, (i, j), hv) - _apply_word(ops, (j, i), hv)
                    lhs += _apply_word(ops, prefix, term)
        step = max(step, float(np.linalg.norm(lhs + xs[m - 1] - xs[m])))
    cv.checks.append(Report("chain_telescoping", step, tol, details={"levels": list(range(2, M))}))

    x0n = cv.norms_sq()[0]
    worst = max(cv.norms_sq()[1:], default=0.0) - 2 * x0n
    cv.checks.append(Report("chain_norm_bound", max(worst, 0.0), tol,
                            details={"norms_sq": cv.norms_sq(), "x0_norm_sq": x0n}))
    return cv


def chain_norm_cp_form(T: OperatorTuple, cv: ChainVectors, m: int) -> float:
    """sum_r < tau~^{m-1}(D^2) (h_r1..h_rn), (h_r1..h_rn) >, the CP-map expression of ||x_m||^2."""
    block_op = cv.space.block
    Dm = amplified_tau(T, block_op @ block_op, m - 1)
    total = 0.0
    for r in range(T.n):
        v = np.concatenate([cv.h_pairs[(r, j)] for j in range(T.n)])
        total += float(np.vdot(v, Dm @ v).real)
    return total


def spherical_unitary_check(T: OperatorTuple, q: QParams, M: int = 5, seed: int = 0, tol: float = 1e-9,
                            tau_levels: int = 6) -> Report:
    """D is a projection, the chain identities hold, and tau~^m(D) <= I."""
    if T.q_commutator_residual(q) > linalg.TOL_EXACT:
        raise ValueError("tuple is not q-commuting for the given q")
    normal = max(linalg.operator_norm(t @ dagger(t) - dagger(t) @ t) for t in T)
    sph = linalg.operator_norm(T.row_gram() - np.eye(T.dim))
    block_op = popescu_block_D(T)
    cv = chain_vectors(T, q, M=M, seed=seed, tol=tol)
    tau_res = 0.0
    for m in range(1, tau_levels + 1):
        tau_res = max(tau_res, -linalg.min_eig(np.eye(block_op.shape[0]) - amplified_tau(T, block_op, m)))
    hp = cv.h_pairs
    pair_sym = max(max(float(np.linalg.norm(hp[(i, i)])) for i in range(T.n)),
                   max(float(np.linalg.norm(hp[(j, i)] + np.conj(q.q[i, j]) * hp[(i, j)]))
                       for i in range(T.n) for j in range(T.n)))
    cp_res = max((abs(chain_norm_cp_form(T, cv, m) - cv.norms_sq()[m]) for m in range(1, M + 1)), default=0.0)
    children = [
        Report("normal", normal, linalg.TOL_EXACT),
        Report("row_sum_identity", sph, linalg.TOL_EXACT),
        Report("D_idempotent", float(np.max(np.abs(block_op @ block_op - block_op))), linalg.TOL_EXACT),
        Report("pair_symmetry", pair_sym, tol),
        Report("pair_form", pair_form_residual(T, q, cv.h, block_op), tol),
        *cv.checks,
        Report("chain_norm_cp_form", cp_res, tol),
        Report("tau_tilde_below_identity", max(tau_res, 0.0), linalg.TOL_EXACT),
    ]
    return Report.combine("spherical_unitary", children)


# -- the pure-case pipeline ---------------------------------------------------

TOL_FLOAT = 1e-10


def _moments(left: dict, keys) -> np.ndarray:
    """m[a, b] = left[a] @ left[b]^*, i.e. E^* R^alpha (R^beta)^* E."""
    stack = np.stack([left[k] for k in keys])
    return np.einsum("aik,bjk->abij", stack, stack.conj())


def range_in_qfock_residual(pe: PoissonEmbedding, q: QParams, fs: QFockSpace | None = None) -> float:
    """|| (I - Q (x) I) A ||"""
    fs = QFockSpace(pe.ctx, q) if fs is None else fs
    b = np.kron(fs.basis, np.eye(pe.rank))
    return linalg.operator_norm(pe.isometry - b @ (dagger(b) @ pe.isometry))


def reference_q_dilation(q: QParams, pe: PoissonEmbedding,
                         fs: QFockSpace | None = None) -> tuple[OperatorTuple, np.ndarray]:
    """(S_i (x) I) on Gamma_{q,<=M} (x) range(Delta) and A in those coordinates."""
    fs = QFockSpace(pe.ctx, q) if fs is None else fs
    eye = np.eye(pe.rank)
    b = np.kron(fs.basis, eye)
    ref = OperatorTuple(tuple(np.kron(s, eye) for s in fs.shifts))
    return ref, dagger(b) @ pe.isometry


def main_theorem_check(T: OperatorTuple, q: QParams, M: int, eps_tail: float = EPS_TAIL,
                       tol: float = 1e-8, moment_len: int | None = None) -> Report:
    """Compare the piece of the block-model dilation with S (x) I on Gamma_q (x) D.

    Stages: purity tail; dilation adjoint identity; the Poisson-model piece
    equals Q (x) I; both realizations contain H and dilate T; compressed
    moments agree for words up to ``moment_len`` (default M - 1).  Pair
    bounds for the reference realization are
    ``sqrt(d(M+1) d(M+1-||alpha|-|beta||))`` with ``d = purity_deficit``.
    """
    if T.q_commutator_residual(q) > TOL_FLOAT:
        raise ValueError("tuple is not q-commuting for the given q")
    K = M - 1 if moment_len is None else moment_len
    pe = poisson_embedding(T, M, eps_tail)
    tail = pe.tail
    deficits = [purity_deficit(T, m) for m in range(M + 2)]
    stages = [Report("purity_tail", tail, eps_tail)]

    # block model and its piece
    dil, space = noncommuting_dilation(T, M)
    emb = space.embedding
    stages.append(Report("block_adjoint", adjoint_residual(T, dil, emb), TOL_FLOAT))
    piece = maximal_q_piece(dil, q, tol=tol)
    inter = dilation_intersection_check(T, dil, q, emb, tol=tol, piece_r=piece)
    inter.name = "block_piece_contains_H"
    stages.append(inter)
    e_l = dagger(piece.projector.basis) @ emb

    # reference realization
    fs = QFockSpace(pe.ctx, q)
    ref_tuple, a_q = reference_q_dilation(q, pe, fs)
    stages.append(Report("A_isometry", pe.isometry_deficit(), tail + TOL_FLOAT))
    stages.append(Report("A_range_in_qfock", range_in_qfock_residual(pe, q, fs), tail + TOL_FLOAT))
    stages.append(Report("reference_adjoint", adjoint_residual(T, ref_tuple, a_q), np.sqrt(tail) + TOL_FLOAT))
    shift = pe.shift_tuple()
    model_piece = maximal_q_piece(shift, q, tol=tol)
    qi = np.kron(fs.projector.matrix, np.eye(pe.rank))
    stages.append(Report("model_piece_is_qfock", linalg.operator_norm(model_piece.projector.matrix - qi), tol,
                         details={"rank": model_piece.rank}))

    # moments
    left_t = word_products(T, K)
    keys = list(left_t)
    lengths = np.array([len(k) for k in keys])
    gap = np.abs(lengths[:, None] - lengths[None, :])
    pair_bound = np.sqrt(deficits[M + 1] * np.array(deficits)[M + 1 - gap]) + TOL_FLOAT
    mom_t = _moments(left_t, keys)
    mom_block = _moments(word_products(piece.compressed, K, dagger(e_l)), keys)
    mom_ref = _moments(word_products(ref_tuple, K, dagger(a_q)), keys)
    err_block = np.max(np.abs(mom_block - mom_t), axis=(2, 3))
    err_ref = np.max(np.abs(mom_ref - mom_t), axis=(2, 3))
    err_agree = np.max(np.abs(mom_ref - mom_block), axis=(2, 3))
    stages.append(Report("block_compression", float(err_block.max()), TOL_FLOAT * 100))
    stages.append(Report("reference_compression", float(err_ref.max()), float(pair_bound.max()),
                         passed=bool(np.all(err_ref <= pair_bound))))
    stages.append(Report("moments_agree", float(err_agree.max()), float(pair_bound.max()),
                         passed=bool(np.all(err_agree <= pair_bound + TOL_FLOAT * 100)),
                         details={"words": len(keys), "uniform_tail": tail}))

    # rank probe
    t_piece = maximal_q_piece(T, q, tol=tol)
    rank_t = defect_space(T).rank
    rank_tq = defect_space(t_piece.compressed).rank if t_piece.rank else 0
    stages.append(Report("defect_rank_probe", abs(rank_t - rank_tq), 0,
                         details={"rank_defect_T": rank_t, "rank_defect_Tq": rank_tq}))

    return Report.combine("main_theorem", stages, M=M, piece_rank=piece.rank, block_dim=space.total_dim,
                          reference_dim=ref_tuple.dim, tail=tail)


# -- finite-scale counterexample ----------------------------------------------

class ParameterOutOfRange(ValueError):
    pass


def truncated_shift_model(q: QParams, M: int, d: int = 1) -> OperatorTuple:
    """(S_1 (x) I_d, ..., S_n (x) I_d) on Gamma_{q,<=M} (x) C^d."""
    fs = QFockSpace(FockContext(q.n, M), q)
    return OperatorTuple(tuple(np.kron(s, np.eye(d)) for s in fs.shifts))


def cyclic_block(t) -> OperatorTuple:
    """P_k = t_k E_{k, k+1 mod n} on C^n."""
    t = np.asarray(t, dtype=complex)
    n = t.size
    mats = []
    for k in range(n):
        p = np.zeros((n, n), dtype=complex)
        p[k, (k + 1) % n] = t[k]
        mats.append(p)
    return OperatorTuple(tuple(mats))


def counterexample_builder(h0_model: OperatorTuple | None, t, q: QParams, M: int = 3, d: int = 1) -> OperatorTuple:
    """T_k = R_k (+) P_k with R the given model (default: truncated S (x) I_d)."""
    t = np.asarray(t, dtype=complex)
    if q.n < 2:
        raise ParameterOutOfRange("the block needs n >= 2")
    if t.shape != (q.n,):
        raise ParameterOutOfRange(f"expected {q.n} values of t, got {t.shape}")
    if np.any(np.abs(t) <= 0) or np.any(np.abs(t) >= 1):
        raise ParameterOutOfRange("need 0 < |t_k| < 1")
    R = truncated_shift_model(q, M, d) if h0_model is None else h0_model
    if R.n != q.n:
        raise ParameterOutOfRange("model tuple has the wrong length")
    return R.direct_sum(cyclic_block(t))


def counterexample_check(T: OperatorTuple, h0_dim: int, q: QParams, tol: float = 1e-8) -> Report:
    """Piece of T is the H_0 summand and the defect range gains the C^n block."""
    n = T.n
    piece = maximal_q_piece(T, q, tol=tol)
    expected = np.zeros((T.dim, T.dim), dtype=complex)
    expected[:h0_dim, :h0_dim] = np.eye(h0_dim)
    R = OperatorTuple(tuple(t[:h0_dim, :h0_dim] for t in T))
    dt = defect_space(T)
    dr = defect_space(R)
    exp_range = np.zeros((T.dim, T.dim), dtype=complex)
    exp_range[:h0_dim, :h0_dim] = dr.matrix
    exp_range[h0_dim:, h0_dim:] = np.eye(T.dim - h0_dim)
    return Report.combine("counterexample", [
        Report("piece_is_H0", linalg.operator_norm(piece.projector.matrix - expected), tol,
               details={"rank": piece.rank}),
        Report("defect_rank_gap", abs(dt.rank - dr.rank - n), 0,
               details={"rank_T": dt.rank, "rank_R": dr.rank}),
        Report("defect_range_split", linalg.operator_norm(dt.matrix - exp_range), tol),
    ])
