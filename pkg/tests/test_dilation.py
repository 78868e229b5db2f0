import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qfock import dilation, linalg
from qfock.dilation import (
    NotContractive,
    ParameterOutOfRange,
    TailTooLarge,
    noncommuting_dilation,
    poisson_embedding,
    weyl_pair_generator,
    weyl_q,
)
from qfock.linalg import dagger
from qfock.piece import OperatorTuple
from qfock.qcoeff import QParams

from conftest import crandn


def random_contraction(rng, n=2, dim=3, scale=0.8):
    mats = [crandn(rng, dim, dim) for _ in range(n)]
    norm = np.sqrt(linalg.operator_norm(sum(m @ dagger(m) for m in mats)))
    return OperatorTuple(tuple(scale * m / norm for m in mats))


def test_defect_scalar_example():
    n = 2
    T = OperatorTuple(tuple(np.eye(2) / np.sqrt(2 * n) for _ in range(n)))
    assert np.allclose(dilation.defect(T), np.sqrt(0.5) * np.eye(2))
    assert dilation.defect_space(T).rank == 2


def test_defect_of_coisometry_is_zero():
    T = weyl_pair_generator(3)
    assert np.max(np.abs(dilation.defect(T))) < 1e-12
    assert dilation.defect_space(T).rank == 0


def test_not_contractive():
    T = OperatorTuple((np.eye(2), np.eye(2)))
    with pytest.raises(NotContractive):
        dilation.defect(T)
    with pytest.raises(NotContractive):
        noncommuting_dilation(T, 2)


def test_purity_deficit_decay(rng):
    T = random_contraction(rng, scale=0.9)
    c = linalg.operator_norm(T.row_gram())
    for m in range(1, 8):
        assert dilation.purity_deficit(T, m) <= c**m + 1e-12
    assert dilation.purity_deficit(T, 0) == pytest.approx(1.0)


@given(st.integers(0, 2**31))
def test_tau_preserves_positivity(seed):
    rng = np.random.default_rng(seed)
    T = random_contraction(rng)
    g = crandn(rng, 3, 3)
    assert linalg.min_eig(dilation.cp_map_tau(T, g @ dagger(g))) >= -1e-12


def test_poisson_scalar_geometric_series():
    T = OperatorTuple((np.array([[0.5]]), np.array([[0.5]])))
    pe = poisson_embedding(T, 10, eps_tail=1e-3)
    assert pe.isometry_deficit() <= 2.0**-10
    # sum_{m <= 10} 2^m 4^{-m} / 2 = 1 - 2^{-11}
    assert (dagger(pe.isometry) @ pe.isometry)[0, 0].real == pytest.approx(1 - 2.0**-11, abs=1e-14)


def test_poisson_tail_gate():
    T = weyl_pair_generator(2, 0.9)
    with pytest.raises(TailTooLarge):
        poisson_embedding(T, 4)


def test_poisson_compression_within_bounds():
    T = weyl_pair_generator(2, 0.5)
    pe = poisson_embedding(T, 6, eps_tail=1e-3)
    for length, worst, bound in dilation.poisson_compression_residual(T, pe, 3):
        assert worst <= bound + 1e-12


def test_block_model_identities(rng):
    T = random_contraction(rng, n=2, dim=2)
    M = 4
    R, space = noncommuting_dilation(T, M)
    emb = space.embedding
    assert dilation.adjoint_residual(T, R, emb) == 0.0
    assert dilation.isometry_residual(R, space) < 1e-12
    assert dilation.compression_residual(T, R, emb, 3) <= dilation.purity_deficit(T, M + 1) + 1e-10
    assert dilation.minimality_rank(R, space) == space.total_dim


def test_block_gram_action(rng):
    T = random_contraction(rng)
    h = crandn(rng, T.n * T.dim)
    assert dilation.d_action_residual(T, h) < 1e-12


def test_weyl_pair_examples():
    T = weyl_pair_generator(2)
    q = weyl_q(2)
    assert q[0, 1] == pytest.approx(-1)
    assert np.max(np.abs(T.row_gram() - np.eye(2))) < 1e-15
    for m in (2, 3, 4, 5):
        assert weyl_pair_generator(m, 0.7).q_commutator_residual(weyl_q(m)) < 1e-15
    with pytest.raises(ValueError):
        weyl_pair_generator(1)


def test_random_weyl_tuple(rng):
    T = dilation.random_weyl_tuple(3, rng)
    assert T.q_commutator_residual(weyl_q(3)) < 1e-14
    assert T.contractive and dilation.purity_deficit(T, 1) < 0.95**2 + 1e-12


@pytest.mark.parametrize("m", [2, 3, 4])
def test_spherical_unitary(m):
    rep = dilation.spherical_unitary_check(weyl_pair_generator(m), weyl_q(m), M=5)
    assert rep.passed, "\n".join(str(r) for r in rep.flatten())


def test_spherical_rejects_non_q_commuting(rng):
    with pytest.raises(ValueError):
        dilation.spherical_unitary_check(random_contraction(rng), weyl_q(2))


def test_chain_norm_uses_previous_power():
    # on a non-spherical tuple the CP-map expression needs the (m - 1)-th power
    T = weyl_pair_generator(2, 0.8)
    cv = dilation.chain_vectors(T, weyl_q(2), M=4, seed=3)
    for m in range(1, 5):
        assert dilation.chain_norm_cp_form(T, cv, m) == pytest.approx(cv.norms_sq()[m], abs=1e-12)


def test_main_theorem_small():
    T = weyl_pair_generator(2, 0.2)
    rep = dilation.main_theorem_check(T, weyl_q(2), 4, eps_tail=1e-4)
    assert rep.passed, "\n".join(str(r) for r in rep.flatten())
    assert rep.details["piece_rank"] >= T.dim


def test_main_theorem_requires_q_commuting(rng):
    with pytest.raises(ValueError):
        dilation.main_theorem_check(random_contraction(rng), weyl_q(2), 3)


def test_counterexample_fixture():
    q = weyl_q(2)
    T = dilation.counterexample_builder(None, (0.5, 0.5), q, M=3)
    h0 = T.dim - 2
    rep = dilation.counterexample_check(T, h0, q)
    assert rep.passed, "\n".join(str(r) for r in rep.flatten())
    assert rep.children[0].details["rank"] == h0
    assert dilation.purity_deficit(T, 12) < 1e-3


def test_counterexample_parameters():
    q = weyl_q(2)
    with pytest.raises(ParameterOutOfRange):
        dilation.counterexample_builder(None, (1.0, 0.5), q)
    with pytest.raises(ParameterOutOfRange):
        dilation.counterexample_builder(None, (0.5,), q)
    with pytest.raises(ParameterOutOfRange):
        dilation.counterexample_builder(None, (0.5,), QParams.trivial(1))
