"""Truncated full Fock space over C^n and its q-commuting subspace.

The full Fock space is cut at particle level ``M``; the creation operators
send level ``M`` to zero.  Identities that involve a creation step are only
asserted below the top level.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import linalg
from .linalg import SubspaceProjector, dagger
from .qcoeff import (
    QParams,
    all_permutations,
    check_permutation,
    inverse,
    inversion_pairs,
    multinomial_norm_sq,
    q_coeff_of_sorted,
)
from .report import Report

MAX_SYMMETRIZER_LEVEL = 8


class BudgetExceeded(ValueError):
    pass


@dataclass(frozen=True)
class FockContext:
    """Basis of words of length 0..M, level-major and lexicographic in a level."""

    n: int
    M: int

    def __post_init__(self):
        if self.n < 1 or self.M < 0:
            raise ValueError(f"need n >= 1 and M >= 0, got n={self.n}, M={self.M}")

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        off = [0]
        for m in range(self.M + 1):
            off.append(off[-1] + self.n**m)
        return tuple(off)

    @property
    def dim(self) -> int:
        return self.offsets[-1]

    def level_slice(self, m: int) -> slice:
        return slice(self.offsets[m], self.offsets[m + 1])

    def level_words(self, m: int) -> np.ndarray:
        """All words of length m as an (n^m, m) integer array."""
        if m == 0:
            return np.zeros((1, 0), dtype=int)
        return np.array(list(itertools.product(range(self.n), repeat=m)), dtype=int)

    @cached_property
    def words(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(w) for m in range(self.M + 1) for w in self.level_words(m))

    @cached_property
    def levels(self) -> np.ndarray:
        return np.concatenate([np.full(self.n**m, m) for m in range(self.M + 1)])

    def index(self, word) -> int:
        m = len(word)
        if m > self.M:
            raise IndexError(f"word of length {m} beyond truncation level {self.M}")
        idx = 0
        for letter in word:
            if not 0 <= letter < self.n:
                raise IndexError(f"letter {letter} out of range")
            idx = idx * self.n + int(letter)
        return self.offsets[m] + idx

    def basis_vector(self, word) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(word)] = 1.0
        return v

    def level_mask(self, levels) -> np.ndarray:
        return np.isin(self.levels, list(levels))

    def below_top(self) -> np.ndarray:
        """Mask of basis vectors strictly below the truncation level."""
        return self.levels < self.M


def creation(ctx: FockContext, i: int) -> np.ndarray:
    """Left creation V_i e^alpha = e^{i alpha}; words of length M go to zero."""
    if not 0 <= i < ctx.n:
        raise IndexError(f"creation index {i} out of range for n={ctx.n}")
    v = np.zeros((ctx.dim, ctx.dim), dtype=complex)
    for m in range(ctx.M):
        size = ctx.n**m
        src = ctx.offsets[m] + np.arange(size)
        dst = ctx.offsets[m + 1] + i * size + np.arange(size)
        v[dst, src] = 1.0
    return v


def vacuum_projector(ctx: FockContext) -> np.ndarray:
    p = np.zeros((ctx.dim, ctx.dim), dtype=complex)
    p[0, 0] = 1.0
    return p


def _word_action(ctx: FockContext, q: QParams, m: int, sigma):
    """Target indices and phases of U_sigma on the level-m word basis."""
    words = ctx.level_words(m)
    inv = inverse(sigma)
    targets = words[:, list(inv)] if m else words
    powers = ctx.n ** np.arange(m - 1, -1, -1)
    idx = targets @ powers if m else np.zeros(1, dtype=int)
    phase = np.ones(len(words), dtype=complex)
    for i, k in inversion_pairs(sigma):
        phase *= q.q[words[:, inv[i]], words[:, inv[k]]]
    return idx, phase


def rep_unitary(ctx: FockContext, q: QParams, m: int, sigma) -> np.ndarray:
    """U_sigma e_x = q^sigma(x) e_{x o sigma^-1} on level m (an n^m x n^m matrix)."""
    if m > ctx.M:
        raise ValueError(f"level {m} beyond truncation {ctx.M}")
    sigma = check_permutation(sigma, m)
    size = ctx.n**m
    idx, phase = _word_action(ctx, q, m, sigma)
    u = np.zeros((size, size), dtype=complex)
    u[idx, np.arange(size)] = phase
    return u


def plain_changes(m: int):
    """Adjacent swap positions of the Steinhaus-Johnson-Trotter walk on S_m.

    Starting from the identity and swapping positions ``(k, k + 1)`` in turn
    visits every permutation exactly once (``m! - 1`` swaps).
    """
    perm = list(range(m))
    direction = [-1] * m
    pos = list(range(m))  # pos[v] = current position of value v
    while True:
        mobile = -1
        for v in range(m - 1, -1, -1):
            j = pos[v] + direction[v]
            if 0 <= j < m and perm[j] < v:
                mobile = v
                break
        if mobile < 0:
            return
        i = pos[mobile]
        j = i + direction[mobile]
        other = perm[j]
        perm[i], perm[j] = other, mobile
        pos[mobile], pos[other] = j, i
        yield min(i, j)
        for v in range(mobile + 1, m):
            direction[v] = -direction[v]


def symmetrizer(ctx: FockContext, q: QParams, m: int) -> np.ndarray:
    """P_m = (1/m!) sum over S_m of U_sigma.

    The permutations are walked by adjacent swaps, so each step updates the
    target word of every basis vector by one swap and its phase by one
    factor ``q[b, a]``.
    """
    if m > ctx.M:
        raise ValueError(f"level {m} beyond truncation {ctx.M}")
    size = ctx.n**m
    cols = np.arange(size)
    p = np.zeros((size, size), dtype=complex)
    p[cols, cols] = 1.0
    # one letter: every level is a single word fixed by all of S_m
    if m < 2 or ctx.n == 1:
        return p
    if m > MAX_SYMMETRIZER_LEVEL:
        raise BudgetExceeded(f"refusing to enumerate S_{m}")
    y = ctx.level_words(m).copy()
    powers = ctx.n ** np.arange(m - 1, -1, -1)
    idx = cols.copy()
    phase = np.ones(size, dtype=complex)
    for k in plain_changes(m):
        a, b = y[:, k].copy(), y[:, k + 1].copy()
        phase *= q.q[b, a]
        y[:, k], y[:, k + 1] = b, a
        idx += (b - a) * powers[k] + (a - b) * powers[k + 1]
        p[idx, cols] += phase
    return p / math.factorial(m)


def _block_diag(blocks, dim) -> np.ndarray:
    out = np.zeros((dim, dim), dtype=complex)
    start = 0
    for b in blocks:
        k = b.shape[0]
        out[start:start + k, start:start + k] = b
        start += k
    return out


class QFockSpace:
    """Truncated q-commuting Fock space with its compressed creation tuple.

    ``basis`` holds orthonormal columns (in full-Fock coordinates) obtained by
    Gram-Schmidt on the columns of ``Q`` in word-enumeration order; the first
    accepted word of each orbit is its sorted representative, so the basis is
    the normalised monomial family ``S^k omega / ||S^k omega||``.
    """

    def __init__(self, ctx: FockContext, q: QParams):
        if q.n != ctx.n:
            raise ValueError(f"QParams for n={q.n} used with FockContext n={ctx.n}")
        self.ctx = ctx
        self.q = q

    @cached_property
    def blocks(self) -> list[np.ndarray]:
        return [symmetrizer(self.ctx, self.q, m) for m in range(self.ctx.M + 1)]

    @cached_property
    def projection_matrix(self) -> np.ndarray:
        return _block_diag(self.blocks, self.ctx.dim)

    @cached_property
    def projector(self) -> SubspaceProjector:
        return linalg.orthonormal_range(self.projection_matrix, tol=linalg.RANK_RTOL)

    @property
    def basis(self) -> np.ndarray:
        return self.projector.basis

    @property
    def dim(self) -> int:
        return self.projector.rank

    @cached_property
    def levels(self) -> np.ndarray:
        weights = np.abs(self.basis) ** 2
        return np.array([int(self.ctx.levels[np.argmax(weights[:, j])]) for j in range(self.dim)])

    @cached_property
    def free_shifts(self) -> list[np.ndarray]:
        return [creation(self.ctx, i) for i in range(self.ctx.n)]

    @cached_property
    def shifts(self) -> list[np.ndarray]:
        b = self.basis
        return [dagger(b) @ v @ b for v in self.free_shifts]

    def coords(self, v) -> np.ndarray:
        return dagger(self.basis) @ np.asarray(v, dtype=complex)

    def lift(self, c) -> np.ndarray:
        return self.basis @ np.asarray(c, dtype=complex)

    @property
    def vacuum(self) -> np.ndarray:
        return self.coords(self.ctx.basis_vector(()))

    def monomial_coords(self, k) -> np.ndarray:
        k = [int(v) for v in k]
        if len(k) != self.ctx.n or min(k) < 0:
            raise ValueError(f"bad multi-index {k}")
        if sum(k) > self.ctx.M:
            raise OverflowError(f"|k| = {sum(k)} exceeds truncation level {self.ctx.M}")
        v = self.vacuum
        for i in reversed(range(self.ctx.n)):
            for _ in range(k[i]):
                v = self.shifts[i] @ v
        return v


def qfock_projector(ctx: FockContext, q: QParams) -> SubspaceProjector:
    """Projector Q = direct sum of P_m onto the truncated q-commuting Fock space."""
    return QFockSpace(ctx, q).projector


def compressed_creation(ctx: FockContext, q: QParams, i: int) -> np.ndarray:
    """S_i = P V_i P in the orthonormal basis of the q-commuting Fock space."""
    if not 0 <= i < ctx.n:
        raise IndexError(f"index {i} out of range")
    return QFockSpace(ctx, q).shifts[i]


def multi_indices(n: int, max_total: int, min_total: int = 0):
    for total in range(min_total, max_total + 1):
        for k in itertools.product(range(total + 1), repeat=n):
            if sum(k) == total:
                yield k


def monomial_vector(ctx: FockContext, q: QParams, k, space: QFockSpace | None = None) -> np.ndarray:
    """S_1^{k_1} ... S_n^{k_n} omega in full-Fock coordinates."""
    space = space or QFockSpace(ctx, q)
    return space.lift(space.monomial_coords(k))


def _shift_factor(q: QParams, k, i: int) -> complex:
    """Scalar in z_i z^k = factor * z^{k + e_i} for q-commuting variables."""
    c = 1.0 + 0.0j
    for l in range(i):
        c *= q.q[l, i] ** k[l]
    return complex(c)


def weighted_shift_model_check(ctx: FockContext, q: QParams, tol: float = linalg.TOL_EXACT) -> Report:
    """Monomials z^k <-> S^k omega: isometric, and z_i intertwines with S_i."""
    space = QFockSpace(ctx, q)
    n = ctx.n
    norm_res = 0.0
    ks = list(multi_indices(n, ctx.M))
    vecs = np.stack([space.monomial_coords(k) for k in ks], axis=1) if ks else np.zeros((0, 0))
    gram = dagger(vecs) @ vecs
    model = np.diag([multinomial_norm_sq(k) for k in ks])
    norm_res = float(np.max(np.abs(gram - model), initial=0.0))
    shift_res = 0.0
    for k in multi_indices(n, ctx.M - 1):
        v = space.monomial_coords(k)
        for i in range(n):
            k1 = list(k)
            k1[i] += 1
            lhs = space.shifts[i] @ v
            rhs = _shift_factor(q, k, i) * space.monomial_coords(k1)
            shift_res = max(shift_res, float(np.linalg.norm(lhs - rhs)))
    children = [
        Report("monomial_gram", norm_res, tol),
        Report("shift_intertwining", shift_res, tol),
    ]
    return Report.combine("weighted_shift_model", children)


def intertwiner_wq(ctx: FockContext, q: QParams) -> np.ndarray:
    """Diagonal unitary carrying the symmetric Fock space onto the q-commuting one."""
    return np.diag([q_coeff_of_sorted(q, w) for w in ctx.words]).astype(complex)


def intertwining_residual(ctx: FockContext, q: QParams, q_from: QParams | None = None) -> float:
    """|| W Q_from - Q_q W || with W = W^q (W^{q_from})^*; q_from defaults to q = 1."""
    q_from = q_from or QParams.trivial(ctx.n)
    w = intertwiner_wq(ctx, q) @ dagger(intertwiner_wq(ctx, q_from))
    q_src = QFockSpace(ctx, q_from).projection_matrix
    q_dst = QFockSpace(ctx, q).projection_matrix
    return linalg.operator_norm(w @ q_src - q_dst @ w)


def level_block(space: QFockSpace, op: np.ndarray, m: int) -> np.ndarray:
    """Block of an operator on the q-commuting space from level m to level m."""
    sel = np.where(space.levels == m)[0]
    return op[np.ix_(sel, sel)]


def number_operator_diagnostics(ctx: FockContext, q: QParams, tol: float = linalg.TOL_EXACT) -> Report:
    """Diagonal action of sum S_i* S_i and [S_i*, S_i] on monomials, plus the
    level decay of the q-commutators [S_i*, S_j]_{q_ij}."""
    if ctx.M < 2:
        raise ValueError("needs truncation level M >= 2")
    space = QFockSpace(ctx, q)
    n = ctx.n
    shifts = space.shifts
    shifts_adj = [dagger(s) for s in shifts]
    total = sum(sd @ s for sd, s in zip(shifts_adj, shifts))
    eig_res = 0.0
    comm_res = 0.0
    for k in multi_indices(n, ctx.M - 1):
        v = space.monomial_coords(k)
        nk = multinomial_norm_sq(k)
        lam = 0.0
        for i in range(n):
            kp = list(k)
            kp[i] += 1
            up = multinomial_norm_sq(kp) / nk
            lam += up
            comm = shifts_adj[i] @ shifts[i] - shifts[i] @ shifts_adj[i]
            if k[i] == 0:
                mu = up
            else:
                km = list(k)
                km[i] -= 1
                mu = up - nk / multinomial_norm_sq(km)
            comm_res = max(comm_res, float(np.linalg.norm(comm @ v - mu * v)))
        eig_res = max(eig_res, float(np.linalg.norm(total @ v - lam * v)))

    # block norms of the q-commutators on levels 0..M-1 (level M is cropped)
    decay = {}
    worst_increase = 0.0
    for i in range(n):
        for j in range(n):
            c = shifts_adj[i] @ shifts[j] - q.q[i, j] * shifts[j] @ shifts_adj[i]
            norms = [linalg.operator_norm(level_block(space, c, m)) for m in range(ctx.M)]
            decay[f"{i},{j}"] = norms
            tail = norms[1:]
            for a, b in zip(tail, tail[1:]):
                worst_increase = max(worst_increase, b - a)
    children = [
        Report("number_operator_eigen", eig_res, tol),
        Report("commutator_diagonal", comm_res, tol),
        Report("q_commutator_level_decay", worst_increase, tol, details={"block_norms": decay}),
    ]
    return Report.combine("number_operator", children)


# name kept for callers that follow the published operation list
lemma12_diagnostics = number_operator_diagnostics
