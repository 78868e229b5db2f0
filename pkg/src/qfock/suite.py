"""Registry of executable checks, one per verified claim, with JSON and JUnit output.

Each registered check receives a seeded generator and a profile name
(``quick`` or ``desk``) and returns a :class:`~qfock.report.Report`.  The
``anchor`` of a check names the library operation whose contract it
exercises; :data:`OPERATIONS` lists every operation that must be covered.
"""

from __future__ import annotations

import itertools
import json
import math
import time
import xml.etree.ElementTree as ET
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import dilation, fock, linalg, moments, piece, qcoeff
from .fock import FockContext, QFockSpace
from .linalg import dagger
from .piece import OperatorTuple
from .qcoeff import QParams
from .report import Report

DEFAULT_SEED = 20240601
PROFILES = ("quick", "desk")

OPERATIONS = (
    "linalg.matmul", "linalg.kron", "linalg.hermitian_sqrt", "linalg.operator_norm", "linalg.orthonormal_range",
    "qcoeff.q_coeff_chain", "qcoeff.q_coeff_closed", "qcoeff.q_coeff_of_sorted",
    "fock.creation", "fock.rep_unitary", "fock.symmetrizer", "fock.qfock_projector", "fock.compressed_creation",
    "fock.monomial_vector", "fock.weighted_shift_model_check", "fock.intertwiner_wq", "fock.number_operator_diagnostics",
    "piece.maximal_q_piece", "piece.dual_characterization_check", "piece.lattice_checks",
    "piece.dilation_intersection_check",
    "dilation.defect", "dilation.purity_deficit", "dilation.poisson_embedding", "dilation.popescu_block_D",
    "dilation.noncommuting_dilation", "dilation.weyl_pair_generator", "dilation.chain_vectors",
    "dilation.cp_map_tau", "dilation.main_theorem_check", "dilation.counterexample_builder",
    "moments.vacuum_expectation", "moments.moment_sequence", "moments.max_norm", "moments.en_embed",
    "moments.field_norm_bounds",
)


@dataclass
class CheckRecord:
    id: str
    anchor: str
    residual: float
    bound: float
    passed: bool
    runtime: float
    seed: int
    error: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


@dataclass(frozen=True)
class Check:
    id: str
    anchor: str
    fn: object
    profiles: tuple = PROFILES


REGISTRY: list[Check] = []


def register(check_id: str, anchor: str, profiles=PROFILES):
    if anchor not in OPERATIONS:
        raise ValueError(f"unknown anchor {anchor!r}")

    def deco(fn):
        REGISTRY.append(Check(check_id, anchor, fn, tuple(profiles)))
        return fn

    return deco


def _desk(profile: str, quick, desk):
    return desk if profile == "desk" else quick


def _max(values, default=0.0) -> float:
    return float(max(values, default=default))


def _crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


# -- linalg -----------------------------------------------------------------------

@register("linalg.matmul_triple_loop", "linalg.matmul")
def _check_matmul(rng, profile):
    a, b = _crandn(rng, 3, 3), _crandn(rng, 3, 3)
    ref = np.array([[sum(a[i, k] * b[k, j] for k in range(3)) for j in range(3)] for i in range(3)])
    return Report("matmul", float(np.max(np.abs(linalg.matmul(a, b) - ref))), 1e-12)


@register("linalg.kron_identities", "linalg.kron")
def _check_kron(rng, profile):
    a, b, c, d = (_crandn(rng, 2, 2) for _ in range(4))
    mixed = linalg.kron(a, b) @ linalg.kron(c, d) - linalg.kron(a @ c, b @ d)
    adj = dagger(linalg.kron(a, b)) - linalg.kron(dagger(a), dagger(b))
    return Report("kron", float(max(np.max(np.abs(mixed)), np.max(np.abs(adj)))), 1e-12)


@register("linalg.sqrt_of_square", "linalg.hermitian_sqrt")
def _check_sqrt(rng, profile):
    worst = 0.0
    for dim in (2, 4, 8):
        g = _crandn(rng, dim, dim)
        r = linalg.hermitian_sqrt(dagger(g) @ g)
        worst = max(worst, float(np.max(np.abs(linalg.hermitian_sqrt(r @ r) - r))) / max(1.0, np.max(np.abs(r))))
    return Report("hermitian_sqrt", worst, 1e-9)


@register("linalg.norm_cross_check", "linalg.operator_norm")
def _check_norm(rng, profile):
    a = _crandn(rng, 5, 5)
    ref = np.sqrt(np.linalg.eigvalsh(dagger(a) @ a)[-1])
    return Report("operator_norm", abs(linalg.operator_norm(a) - ref) + abs(linalg.power_norm(a) - ref), 1e-9)


@register("linalg.projector_invariants", "linalg.orthonormal_range")
def _check_projector(rng, profile):
    worst = 0.0
    for dim, k in ((6, 3), (50, 20), (_desk(profile, 80, 200), 60)):
        v = _crandn(rng, dim, k // 2)
        cols = np.concatenate([v, v @ _crandn(rng, k // 2, k - k // 2)], axis=1)
        p = linalg.orthonormal_range(cols)
        if p.rank != k // 2:
            return Report("projector", float("inf"), 1e-10, details={"rank": p.rank})
        worst = max(worst, *p.residuals())
    return Report("projector", worst, 1e-10)


# -- qcoeff -----------------------------------------------------------------------

@register("qcoeff.decomposition_independence", "qcoeff.q_coeff_chain")
def _check_decomposition(rng, profile):
    m_max = _desk(profile, 4, 5)
    q = QParams.random(3, rng)
    worst = 0.0
    for m in range(1, m_max + 1):
        x = tuple(int(v) for v in rng.integers(0, 3, m))
        for sigma in qcoeff.all_permutations(m):
            ref = qcoeff.q_coeff_closed(q, x, sigma)
            for _ in range(3):
                word = qcoeff.random_decomposition(sigma, rng)
                worst = max(worst, abs(qcoeff.q_coeff_chain(q, x, word) - ref))
    return Report("decomposition_independence", worst, 1e-12)


@register("qcoeff.stabilizer_and_modulus", "qcoeff.q_coeff_closed")
def _check_stabilizer(rng, profile):
    q = QParams.random(2, rng)
    worst_stab, worst_mod = 0.0, 0.0
    for m in range(1, 5):
        for x in itertools.product(range(2), repeat=m):
            for sigma in qcoeff.all_permutations(m):
                c = qcoeff.q_coeff_closed(q, x, sigma)
                worst_mod = max(worst_mod, abs(abs(c) - 1))
                inv = qcoeff.inverse(sigma)
                if all(x[inv[i]] == x[i] for i in range(m)):
                    worst_stab = max(worst_stab, abs(c - 1))
    return Report.combine("stabilizer_and_modulus", [
        Report("stabilizer", worst_stab, 1e-12), Report("unit_modulus", worst_mod, 1e-12)])


@register("qcoeff.cocycle", "qcoeff.q_coeff_closed")
def _check_cocycle(rng, profile):
    q = QParams.random(3, rng)
    worst = 0.0
    for m in range(1, 5):
        x = tuple(int(v) for v in rng.integers(0, 3, m))
        perms = list(qcoeff.all_permutations(m))
        for s1, s2 in itertools.product(perms, repeat=2):
            inv2 = qcoeff.inverse(s2)
            z = tuple(x[inv2[i]] for i in range(m))
            lhs = qcoeff.q_coeff_closed(q, x, qcoeff.compose(s1, s2))
            rhs = qcoeff.q_coeff_closed(q, z, s1) * qcoeff.q_coeff_closed(q, x, s2)
            worst = max(worst, abs(lhs - rhs))
    return Report("cocycle", worst, 1e-12)


@register("qcoeff.sorted_reordering", "qcoeff.q_coeff_of_sorted")
def _check_sorted(rng, profile):
    q = QParams.random(3, rng)
    worst = 0.0
    for m in range(1, 5):
        for y in itertools.product(range(3), repeat=m):
            x = tuple(sorted(y))
            c = qcoeff.q_coeff_of_sorted(q, y)
            for sigma in qcoeff.sorting_permutations(y):
                # y_i = x_{sigma(i)}: reorder x into y by the swaps of sigma
                worst = max(worst, abs(qcoeff.q_coeff_chain(q, x, qcoeff.bubble_decomposition(qcoeff.inverse(sigma))) - c))
    return Report("sorted_reordering", worst, 1e-12)


# -- fock -------------------------------------------------------------------------

def _random_q_list(rng, n, count=3):
    return [QParams.random(n, rng) for _ in range(count)]


@register("fock.creation_shift", "fock.creation")
def _check_creation(rng, profile):
    ctx = FockContext(2, 3)
    worst = 0.0
    for word in ctx.words:
        for i in range(2):
            out = fock.creation(ctx, i) @ ctx.basis_vector(word)
            ref = ctx.basis_vector((i,) + word) if len(word) < ctx.M else np.zeros(ctx.dim)
            worst = max(worst, float(np.max(np.abs(out - ref))))
    return Report("creation", worst, 0.0)


@register("fock.representation_law", "fock.rep_unitary")
def _check_rep_law(rng, profile):
    q = QParams.random(2, rng)
    ctx = FockContext(2, 4)
    worst = 0.0
    for m in range(1, 5):
        us = {s: fock.rep_unitary(ctx, q, m, s) for s in qcoeff.all_permutations(m)}
        for s1, s2 in itertools.product(us, repeat=2):
            worst = max(worst, float(np.max(np.abs(us[qcoeff.compose(s1, s2)] - us[s1] @ us[s2]))))
    return Report("representation_law", worst, 1e-12)


@register("fock.symmetrizer_projection", "fock.symmetrizer")
def _check_symmetrizer(rng, profile):
    worst, rank_ok = 0.0, True
    m_max = _desk(profile, 4, 5)
    for n in (2, 3):
        for q in _random_q_list(rng, n):
            ctx = FockContext(n, m_max)
            for m in range(m_max + 1):
                p = fock.symmetrizer(ctx, q, m)
                worst = max(worst, float(np.max(np.abs(p @ p - p))), linalg.herm_residual(p))
                rank = linalg.orthonormal_range(p).rank if m else 1
                rank_ok &= rank == math.comb(n + m - 1, m)
    return Report("symmetrizer_projection", worst, 1e-10, passed=bool(rank_ok and worst <= 1e-10))


@register("fock.symmetrizer_two_routes", "fock.symmetrizer")
def _check_symmetrizer_routes(rng, profile):
    q = QParams.random(3, rng)
    ctx = FockContext(3, 4)
    worst = 0.0
    for m in range(5):
        brute = sum(fock.rep_unitary(ctx, q, m, s) for s in qcoeff.all_permutations(m)) / math.factorial(m)
        worst = max(worst, float(np.max(np.abs(brute - fock.symmetrizer(ctx, q, m)))))
    return Report("symmetrizer_two_routes", worst, 1e-12)


@register("fock.absorbs_and_fixes", "fock.rep_unitary")
def _check_absorb(rng, profile):
    q = QParams.random(2, rng)
    ctx = FockContext(2, 4)
    worst_abs, worst_fix = 0.0, 0.0
    for m in range(1, 5):
        p = fock.symmetrizer(ctx, q, m)
        us = [fock.rep_unitary(ctx, q, m, s) for s in qcoeff.all_permutations(m)]
        for u in us:
            worst_abs = max(worst_abs, float(np.max(np.abs(p @ u - p))), float(np.max(np.abs(u @ p - p))))
        v_in = p @ _crandn(rng, 2**m)
        worst_fix = max(worst_fix, _max(np.linalg.norm(u @ v_in - v_in) for u in us))
        # a vector fixed by every U_sigma lies in the range of P_m
        avg = sum(us) / len(us)
        w = _crandn(rng, 2**m)
        fixed = avg @ w
        worst_fix = max(worst_fix, float(np.linalg.norm(p @ fixed - fixed)))
    return Report.combine("absorbs_and_fixes", [Report("absorbs", worst_abs, 1e-10), Report("fixed_space", worst_fix, 1e-10)])


@register("fock.bosonic_reduction", "fock.qfock_projector")
def _check_bosonic(rng, profile):
    M = 4
    worst, ranks_ok = 0.0, True
    for n in (2, 3):
        space = QFockSpace(FockContext(n, M), QParams.trivial(n))
        ranks_ok &= space.dim == sum(math.comb(n + m - 1, m) for m in range(M + 1))
        below = space.levels < M - 1
        for i, j in itertools.combinations(range(n), 2):
            c = (space.shifts[i] @ space.shifts[j] - space.shifts[j] @ space.shifts[i])[:, below]
            worst = max(worst, float(np.max(np.abs(c))))
    return Report("bosonic_reduction", worst, 1e-10, passed=bool(ranks_ok and worst <= 1e-10))


@register("fock.compressed_q_commutation", "fock.compressed_creation")
def _check_s_relation(rng, profile):
    worst = 0.0
    for q in _random_q_list(rng, 3, 2):
        space = QFockSpace(FockContext(3, 3), q)
        s = space.shifts
        for i, j in itertools.combinations(range(3), 2):
            worst = max(worst, float(np.max(np.abs(s[j] @ s[i] - q.q[i, j] * s[i] @ s[j]))))
    return Report("compressed_q_commutation", worst, 1e-10)


@register("fock.monomial_norms", "fock.monomial_vector")
def _check_monomials(rng, profile):
    worst = 0.0
    for n in (1, 2, 3):
        q = QParams.random(n, rng)
        ctx = FockContext(n, 5)
        space = QFockSpace(ctx, q)
        for k in fock.multi_indices(n, 5):
            v = fock.monomial_vector(ctx, q, k, space)
            worst = max(worst, abs(float(np.vdot(v, v).real) - qcoeff.multinomial_norm_sq(k)))
    return Report("monomial_norms", worst, 1e-12)


@register("fock.weighted_shift_model", "fock.weighted_shift_model_check")
def _check_weighted(rng, profile):
    return fock.weighted_shift_model_check(FockContext(2, _desk(profile, 3, 5)), QParams.random(2, rng))


@register("fock.intertwiner", "fock.intertwiner_wq")
def _check_intertwiner(rng, profile):
    ctx = FockContext(2, 4)
    return Report("intertwiner", _max(fock.intertwining_residual(ctx, q) for q in _random_q_list(rng, 2)), 1e-10)


@register("fock.diagonal_formulas", "fock.number_operator_diagnostics")
def _check_number_operator(rng, profile):
    return fock.number_operator_diagnostics(FockContext(2, 5), QParams.random(2, rng))


# -- piece ------------------------------------------------------------------------

def _random_contraction(rng, n, dim, scale=0.9):
    mats = [_crandn(rng, dim, dim) for _ in range(n)]
    norm = np.sqrt(linalg.operator_norm(sum(m @ dagger(m) for m in mats)))
    return OperatorTuple(tuple(scale * m / norm for m in mats))


@register("piece.creation_tuple_piece", "piece.maximal_q_piece")
def _check_vpiece(rng, profile):
    q = QParams.random(2, rng)
    ctx = FockContext(2, _desk(profile, 3, 4))
    res = piece.maximal_q_piece(OperatorTuple(tuple(fock.creation(ctx, i) for i in range(2))), q)
    dist = linalg.projector_distance(res.projector, QFockSpace(ctx, q).projector)
    mono = all(a <= b for a, b in zip(res.kernel_ranks, res.kernel_ranks[1:]))
    return Report("creation_tuple_piece", dist, 1e-8, passed=bool(dist <= 1e-8 and mono),
                  details={"kernel_ranks": res.kernel_ranks})


@register("piece.idempotence", "piece.maximal_q_piece")
def _check_piece_idem(rng, profile):
    q = QParams.random(2, rng)
    T = dilation.counterexample_builder(None, [0.5, -0.4j], q, M=3)
    res = piece.maximal_q_piece(T, q)
    again = piece.maximal_q_piece(res.compressed, q)
    return Report("idempotence", abs(again.rank - res.rank), 0, details={"rank": res.rank})


@register("piece.dual_characterization", "piece.dual_characterization_check")
def _check_dual(rng, profile):
    reps = []
    for q in (QParams.random(2, rng), np.array([[1.0, 2.0], [0.5, 1.0]], dtype=complex)):
        R = dilation.counterexample_builder(None, [0.5, 0.5], QParams.trivial(2), M=2).direct_sum(
            _random_contraction(rng, 2, 3))
        res = piece.maximal_q_piece(R, q)
        reps.append(piece.dual_characterization_check(R, q, res, seed=int(rng.integers(1 << 30))))
    return Report.combine("dual_characterization", reps)


@register("piece.lattice", "piece.lattice_checks")
def _check_lattice(rng, profile):
    q = QParams.random(2, rng)
    left = dilation.counterexample_builder(None, [0.3, 0.6], q, M=2)
    right = _random_contraction(rng, 2, 3)
    return piece.lattice_checks(left, right, q)


@register("piece.dilation_intersection", "piece.dilation_intersection_check")
def _check_intersection(rng, profile):
    m = 2
    T = dilation.random_weyl_tuple(m, rng, (0.3, 0.6))
    q = dilation.weyl_q(m)
    dil, space = dilation.noncommuting_dilation(T, _desk(profile, 3, 5))
    return piece.dilation_intersection_check(T, dil, q, space.embedding)


@register("piece.counterexample", "dilation.counterexample_builder")
def _check_counterexample(rng, profile):
    q = QParams.random(2, rng)
    M = _desk(profile, 2, 3)
    T = dilation.counterexample_builder(None, [0.5, 0.5], q, M=M, d=2)
    h0 = T.dim - 2
    rep = dilation.counterexample_check(T, h0, q)
    pure = dilation.purity_deficit(T, 4 * M + 8)
    rep.children.append(Report("purity", pure, 1e-3))
    return Report.combine("counterexample", rep.children)


# -- dilation ---------------------------------------------------------------------

@register("dilation.defect_examples", "dilation.defect")
def _check_defect(rng, profile):
    n = 2
    scalar = OperatorTuple(tuple(np.eye(2) / np.sqrt(2 * n) for _ in range(n)))
    zero = OperatorTuple(tuple(np.zeros((2, 2)) for _ in range(n)))
    sph = dilation.weyl_pair_generator(3)
    return Report.combine("defect", [
        Report("scaled_identity", float(np.max(np.abs(dilation.defect(scalar) - np.sqrt(0.5) * np.eye(2)))), 1e-12),
        Report("zero_tuple", float(np.max(np.abs(dilation.defect(zero) - np.eye(2)))), 1e-12),
        Report("spherical_rank", dilation.defect_space(sph).rank, 0),
    ])


@register("dilation.purity_decay", "dilation.purity_deficit")
def _check_purity(rng, profile):
    T = _random_contraction(rng, 2, 3, 0.8)
    c = linalg.operator_norm(T.row_gram())
    excess = _max(dilation.purity_deficit(T, m) - c**m for m in range(1, 8))
    sph = dilation.weyl_pair_generator(2)
    flat = _max(abs(dilation.purity_deficit(sph, m) - 1) for m in range(1, 5))
    return Report.combine("purity", [Report("submultiplicative", max(excess, 0.0), 1e-12),
                                     Report("spherical_never_pure", flat, 1e-12)])


@register("dilation.poisson_embedding", "dilation.poisson_embedding")
def _check_poisson(rng, profile):
    m = 2
    T = dilation.random_weyl_tuple(m, rng, (0.3, 0.5))
    q = dilation.weyl_q(m)
    M = _desk(profile, 5, 8)
    pe = dilation.poisson_embedding(T, M, eps_tail=1e-3)
    rows = dilation.poisson_compression_residual(T, pe, 3)
    return Report.combine("poisson_embedding", [
        Report("isometry_deficit", pe.isometry_deficit(), pe.tail + 1e-12),
        Report("compression", _max(r[1] - r[2] for r in rows), 1e-12),
        Report("range_in_qfock", dilation.range_in_qfock_residual(pe, q), 1e-10),
    ])


@register("dilation.block_gram", "dilation.popescu_block_D")
def _check_block_d(rng, profile):
    T = _random_contraction(rng, 2, 3)
    block_op = dilation.popescu_block_D(T)
    h = _crandn(rng, 6)
    return Report("block_D_action", dilation.d_action_residual(T, h, block_op), 1e-10)


@register("dilation.block_model", "dilation.noncommuting_dilation")
def _check_block_model(rng, profile):
    T = dilation.random_weyl_tuple(3, rng)
    M = _desk(profile, 3, 6)
    dil, space = dilation.noncommuting_dilation(T, M)
    emb = space.embedding
    small = OperatorTuple(tuple(0.5 * t for t in dilation.weyl_pair_generator(2)))
    Vs, sps = dilation.noncommuting_dilation(small, 3)
    return Report.combine("block_model", [
        Report("adjoint", dilation.adjoint_residual(T, dil, emb), 1e-14),
        Report("compression", dilation.compression_residual(T, dil, emb, min(M, 4)), 1e-10),
        Report("isometry_below_top", dilation.isometry_residual(dil, space), 1e-10),
        Report("minimality", abs(dilation.minimality_rank(Vs, sps) - sps.total_dim), 0),
    ])


@register("dilation.weyl_relations", "dilation.weyl_pair_generator")
def _check_weyl(rng, profile):
    worst = 0.0
    for m in (2, 3, 4):
        T = dilation.weyl_pair_generator(m)
        q = dilation.weyl_q(m)
        fp = float(np.max(np.abs(dagger(T[1]) @ T[0] - q.q[1, 0] * T[0] @ dagger(T[1]))))
        worst = max(worst, T.q_commutator_residual(q), fp, linalg.operator_norm(T.row_gram() - np.eye(m)))
    return Report("weyl_relations", worst, 1e-12)


@register("dilation.spherical_chain", "dilation.chain_vectors")
def _check_chain(rng, profile):
    reps = []
    for m in _desk(profile, (2,), (2, 3, 4)):
        reps.append(dilation.spherical_unitary_check(dilation.weyl_pair_generator(m), dilation.weyl_q(m),
                                                     M=_desk(profile, 4, 6), seed=int(rng.integers(1 << 30))))
    return Report.combine("spherical_chain", reps)


@register("dilation.tau_positivity", "dilation.cp_map_tau")
def _check_tau(rng, profile):
    T = _random_contraction(rng, 2, 3)
    worst = 0.0
    for _ in range(5):
        g = _crandn(rng, 3, 3)
        worst = max(worst, -linalg.min_eig(dilation.cp_map_tau(T, g @ dagger(g))))
        big = _crandn(rng, 6, 6)
        worst = max(worst, -linalg.min_eig(dilation.amplified_tau(T, big @ dagger(big), 2)))
    return Report("tau_positivity", max(worst, 0.0), 1e-10)


@register("dilation.pure_pipeline", "dilation.main_theorem_check")
def _check_pipeline(rng, profile):
    T = OperatorTuple(tuple(0.2 * t for t in dilation.weyl_pair_generator(2)))
    return dilation.main_theorem_check(T, dilation.weyl_q(2), _desk(profile, 4, 6), eps_tail=1e-6)


# -- moments ----------------------------------------------------------------------

@register("moments.semicircle", "moments.moment_sequence")
def _check_semicircle(rng, profile):
    reps = [moments.moments_check(QFockSpace(FockContext(2, 4), q)) for q in _random_q_list(rng, 2)]
    return Report.combine("semicircle", reps)


@register("moments.non_traciality", "moments.vacuum_expectation")
def _check_traciality(rng, profile):
    worst = 0.0
    for q in _random_q_list(rng, 2):
        space = QFockSpace(FockContext(2, 3), q)
        a, b = moments.traciality_values(space)
        worst = max(worst, abs(a - 1), abs(b - 0.5))
        worst = max(worst, abs(moments.vacuum_expectation(moments.GWord(((0, "S*"), (1, "S"))), space)),
                    abs(moments.vacuum_expectation(moments.GWord(((1, "S*"), (1, "S"))), space) - 1))
    return Report("non_traciality", worst, 1e-12)


@register("moments.max_norm_en", "moments.max_norm")
def _check_maxnorm(rng, profile):
    worst = 0.0
    for _ in range(5):
        a = [_crandn(rng, 2, 2) for _ in range(2)]
        worst = max(worst, abs(moments.max_norm(a) - moments.en_norm(a)))
    worst = max(worst, abs(moments.max_norm([np.eye(2)] * 3) - np.sqrt(3)))
    return Report("max_norm_en", worst, 1e-10)


@register("moments.en_embed", "moments.en_embed")
def _check_en_embed(rng, profile):
    r = _crandn(rng, 3)
    s = _crandn(rng, 3)
    lin = float(np.max(np.abs(moments.en_embed(2 * r + s) - 2 * moments.en_embed(r) - moments.en_embed(s))))
    return Report("en_embed", max(lin, abs(linalg.operator_norm(moments.en_embed(r)) - np.linalg.norm(r))), 1e-12)


@register("moments.norm_bounds", "moments.field_norm_bounds")
def _check_thm20(rng, profile):
    space = QFockSpace(FockContext(2, _desk(profile, 4, 6)), QParams.random(2, rng))
    reps = [moments.field_norm_bounds([_crandn(rng, 2, 2) for _ in range(2)], space) for _ in range(5)]
    seq = moments.scalar_norm_sequence(range(1, 8))
    mono = all(a[1] <= b[1] + 1e-12 for a, b in zip(seq, seq[1:]))
    cos = _max(abs(v - ref) for _, v, ref in seq)
    reps.append(Report("scalar_cosine", cos, 1e-10, passed=bool(mono and cos <= 1e-10)))
    return Report.combine("norm_bounds", reps)


# -- running ----------------------------------------------------------------------

def run_check(check: Check, profile: str, seed: int) -> CheckRecord:
    rng = np.random.default_rng([seed, zlib.crc32(check.id.encode())])
    start = time.perf_counter()
    try:
        rep = check.fn(rng, profile)
        err = None
    except Exception as exc:  # failures are records
        rep = Report(check.id, float("inf"), 0.0, passed=False)
        err = f"{type(exc).__name__}: {exc}"
    return CheckRecord(check.id, check.anchor, rep.residual, rep.bound, bool(rep.passed),
                       time.perf_counter() - start, seed, err)


def run_all(profile: str = "desk", seed: int = DEFAULT_SEED, workers: int = 1, only=None) -> list[CheckRecord]:
    if profile not in PROFILES:
        raise ValueError(f"profile must be one of {PROFILES}")
    checks = [c for c in REGISTRY if profile in c.profiles and (only is None or c.id in only)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda c: run_check(c, profile, seed), checks))
    else:
        records = [run_check(c, profile, seed) for c in checks]
    return sorted(records, key=lambda r: r.id)


def uncovered_operations() -> list[str]:
    covered = {c.anchor for c in REGISTRY}
    return [op for op in OPERATIONS if op not in covered]


def records_to_json(records: list[CheckRecord]) -> str:
    return json.dumps({"records": [r.to_dict() for r in records],
                       "pass": all(r.passed for r in records)}, indent=2, sort_keys=True)


def records_to_junit(records: list[CheckRecord], name: str = "qcheck") -> str:
    suite = ET.Element("testsuite", name=name, tests=str(len(records)),
                       failures=str(sum(not r.passed for r in records)),
                       time=f"{sum(r.runtime for r in records):.3f}")
    for r in records:
        case = ET.SubElement(suite, "testcase", classname=r.anchor, name=r.id, time=f"{r.runtime:.3f}")
        if not r.passed:
            msg = r.error or f"residual {r.residual!r} exceeds bound {r.bound!r}"
            ET.SubElement(case, "failure", message=msg)
    return ET.tostring(suite, encoding="unicode")
