"""Vacuum moments of G_i = S_i + S_i^* and the row/column norm bounds.

All expectations are evaluated by matrix products on the truncated
q-commuting Fock space, starting from the vacuum.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .fock import FockContext, QFockSpace
from .linalg import dagger
from .qcoeff import QParams
from .report import Report

LEAK_TOL = 1e-12
FLAGS = ("G", "S", "S*")
# the lower bound is attained by a vector state, so truncation never breaks it
EPS_FLOAT = 1e-8


class TruncationLeak(ValueError):
    """A creation step pushed non-negligible mass past the top Fock level."""


class BudgetExceeded(ValueError):
    pass


@dataclass(frozen=True)
class GWord:
    """Product of factors ``(i, flag)``, leftmost factor first; flag in G, S, S*."""

    factors: tuple

    def __post_init__(self):
        facs = tuple((int(i), str(f)) for i, f in self.factors)
        for i, f in facs:
            if i < 0:
                raise ValueError(f"negative index {i}")
            if f not in FLAGS:
                raise ValueError(f"unknown factor kind {f!r}")
        object.__setattr__(self, "factors", facs)

    @classmethod
    def of_g(cls, indices) -> "GWord":
        return cls(tuple((i, "G") for i in indices))

    @classmethod
    def parse(cls, text: str) -> "GWord":
        """``"G1 G1 G0 S*0"`` -> factors in the given order."""
        facs = []
        for tok in text.split():
            kind = tok.rstrip("0123456789")
            facs.append((int(tok[len(kind):]), kind))
        return cls(tuple(facs))

    def __len__(self) -> int:
        return len(self.factors)


def vacuum_expectation(word: GWord, space: QFockSpace, leak_tol: float = LEAK_TOL) -> complex:
    """<omega, (product of factors) omega>

    Raises :class:`TruncationLeak` when a creation acts on top-level mass
    above ``leak_tol`` while enough lowering factors remain to bring the lost
    part back to the vacuum.  Mass that is cropped but could never return
    does not change the expectation.
    """
    n, M = space.ctx.n, space.ctx.M
    if any(i >= n for i, _ in word.factors):
        raise ValueError(f"word uses an index >= n = {n}")
    top = space.levels == M
    # factors apply right to left; lowering[k] counts lowering factors still to come after factor k
    lowering = [0] * len(word)
    for k in range(1, len(word)):
        lowering[k] = lowering[k - 1] + (word.factors[k - 1][1] != "S")
    v = space.vacuum
    for k in range(len(word) - 1, -1, -1):
        i, f = word.factors[k]
        if f != "S*" and lowering[k] >= M + 1:
            mass = float(np.sum(np.abs(v[top]) ** 2))
            if mass > leak_tol:
                raise TruncationLeak(f"top-level mass {mass:.2e} at factor {k}; raise M above {M}")
        s = space.shifts[i]
        if f == "S":
            v = s @ v
        elif f == "S*":
            v = dagger(s) @ v
        else:
            v = s @ v + dagger(s) @ v
    return complex(np.vdot(space.vacuum, v))


def moment_sequence(i: int, p_max: int, space: QFockSpace) -> list[float]:
    """eps(G_i^p) for p = 1..p_max."""
    if p_max > 2 * space.ctx.M:
        raise TruncationLeak(f"p_max = {p_max} needs M >= {math.ceil(p_max / 2)}")
    g = space.shifts[i] + dagger(space.shifts[i])
    v = space.vacuum
    out = []
    for _ in range(p_max):
        v = g @ v
        out.append(float(np.vdot(space.vacuum, v).real))
    return out


def catalan(k: int) -> int:
    return math.comb(2 * k, k) // (k + 1)


def semicircle_moment(p: int) -> int:
    return catalan(p // 2) if p % 2 == 0 else 0


def displayed_constant(p: int) -> float:
    """(1/(p+1)) binom(p, p/2): the alternative normalisation noted in the ledger."""
    return 0.0 if p % 2 else math.comb(p, p // 2) / (p + 1)


def hankel_min_eig(moments: list[float]) -> float:
    """Smallest eigenvalue of (m_{i+j}) with m_0 = 1, as large as the list allows."""
    m = [1.0] + list(moments)
    k = (len(m) - 1) // 2
    h = np.array([[m[a + b] for b in range(k + 1)] for a in range(k + 1)])
    return float(np.linalg.eigvalsh(h)[0])


def moment_rows(i: int, p_max: int, space: QFockSpace) -> list[dict]:
    seq = moment_sequence(i, p_max, space)
    return [
        {"p": p, "moment": mom, "catalan_reference": semicircle_moment(p),
         "abs_error": abs(mom - semicircle_moment(p)), "displayed_constant": displayed_constant(p)}
        for p, mom in enumerate(seq, start=1)
    ]


def moments_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    fields = ["p", "moment", "catalan_reference", "abs_error"]
    writer = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(float(v)) if k != "p" else v) for k, v in row.items() if k in fields})
    return buf.getvalue()


def traciality_values(space: QFockSpace) -> tuple[complex, complex]:
    """(eps(G_2 G_2 G_1 G_1), eps(G_2 G_1 G_1 G_2)) with 0-based letters 1, 0."""
    if space.ctx.n < 2:
        raise ValueError("needs n >= 2")
    return (vacuum_expectation(GWord.of_g((1, 1, 0, 0)), space),
            vacuum_expectation(GWord.of_g((1, 0, 0, 1)), space))


def moments_check(space: QFockSpace, i: int = 0, p_max: int | None = None, tol: float = linalg.TOL_EXACT) -> Report:
    p_max = 2 * space.ctx.M if p_max is None else p_max
    rows = moment_rows(i, p_max, space)
    children = [
        Report("catalan", max(r["abs_error"] for r in rows), tol,
               details={"moments": [r["moment"] for r in rows]}),
        Report("hankel_psd", max(0.0, -hankel_min_eig([r["moment"] for r in rows])), tol),
    ]
    if space.ctx.n >= 2:
        a, b = traciality_values(space)
        children.append(Report("non_traciality", max(abs(a - 1), abs(b - 0.5)), 1e-12,
                               details={"gap": (a - b).real}))
    note = {"displayed_constant_at_2": displayed_constant(2), "computed_at_2": rows[1]["moment"] if p_max >= 2 else None}
    return Report.combine("moments", children, note=note)


# -- operator-space norms ------------------------------------------------------

def _as_tuple(a) -> list[np.ndarray]:
    mats = [linalg.as_matrix(x, "a_i") for x in a]
    if not mats:
        raise ValueError("empty tuple")
    shapes = {m.shape for m in mats}
    if len(shapes) != 1 or mats[0].shape[0] != mats[0].shape[1]:
        raise linalg.DimensionMismatch(f"need square matrices of one size, got {sorted(shapes)}")
    return mats


def max_norm(a) -> float:
    """max(||sum a_i a_i^*||^{1/2}, ||sum a_i^* a_i||^{1/2})"""
    mats = _as_tuple(a)
    row = sum(x @ dagger(x) for x in mats)
    col = sum(dagger(x) @ x for x in mats)
    return float(max(np.sqrt(linalg.operator_norm(row)), np.sqrt(linalg.operator_norm(col))))


def en_embed(r) -> np.ndarray:
    """Column r in the first n x n block and row r in the second, as a 2n x 2n matrix."""
    r = np.asarray(r, dtype=complex).ravel()
    n = r.size
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    out[:n, 0] = r
    out[n, n:] = r
    return out


def en_norm(a) -> float:
    """|| sum a_i (x) delta_i || with delta_i = en_embed(e_i)."""
    mats = _as_tuple(a)
    n = len(mats)
    total = sum(np.kron(x, en_embed(np.eye(n)[i])) for i, x in enumerate(mats))
    return linalg.operator_norm(total)


def gaussian_sum_norm(a, space: QFockSpace, budget: int = 4096) -> float:
    """|| sum a_i (x) G_i || on aux (x) Gamma_q."""
    mats = _as_tuple(a)
    if len(mats) != space.ctx.n:
        raise ValueError(f"{len(mats)} coefficients for n = {space.ctx.n}")
    if mats[0].shape[0] * space.dim > budget:
        raise BudgetExceeded(f"matrix of size {mats[0].shape[0] * space.dim} exceeds {budget}")
    total = sum(np.kron(x, s + dagger(s)) for x, s in zip(mats, space.shifts))
    return linalg.operator_norm(total)


def field_norm_bounds(a, space: QFockSpace, eps_tail: float = 0.0, eps_float: float = EPS_FLOAT) -> Report:
    """max_norm(a) - eps_tail <= N <= 2 max_norm(a) + eps_float for N = ||sum a_i (x) G_i||."""
    mats = _as_tuple(a)
    big = gaussian_sum_norm(mats, space)
    mn = max_norm(mats)
    col = np.sqrt(linalg.operator_norm(sum(dagger(x) @ x for x in mats)))
    return Report.combine("field_norm_bounds", [
        Report("lower", max(0.0, mn - big), eps_tail + eps_float),
        Report("upper", max(0.0, big - 2 * mn), eps_float),
        Report("state_lower", max(0.0, col - big), eps_float),
    ], norm=big, max_norm=mn, ratio=big / mn if mn else 0.0)


def scalar_norm_sequence(levels) -> list[tuple[int, float, float]]:
    """(M, ||S + S^*|| on Gamma_{<=M}, 2 cos(pi / (M + 2))) for n = 1."""
    q = QParams.trivial(1)
    out = []
    for M in levels:
        space = QFockSpace(FockContext(1, M), q)
        out.append((M, gaussian_sum_norm([np.eye(1)], space), 2 * math.cos(math.pi / (M + 2))))
    return out


# name kept for callers that follow the published operation list
theorem20_bounds = field_norm_bounds
