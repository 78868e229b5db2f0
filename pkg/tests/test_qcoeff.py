import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qfock import qcoeff
from qfock.qcoeff import InvalidQParams, QParams


def q_strategy(n):
    return st.integers(0, 2**31).map(lambda s: QParams.random(n, np.random.default_rng(s)))


def test_qparams_validation():
    with pytest.raises(InvalidQParams):
        QParams(np.array([[1, 2], [0.5, 1]]))
    with pytest.raises(InvalidQParams):
        QParams(np.array([[1, 1j], [1j, 1]]))
    with pytest.raises(InvalidQParams):
        QParams(np.array([[-1, 1], [1, 1]]))
    with pytest.raises(InvalidQParams):
        QParams.from_dict({"n": 2, "mode": "matrix", "entries": [[1, 0]]})
    with pytest.raises(InvalidQParams):
        QParams.from_dict({"mode": "uniform"})


@given(st.integers(1, 4), st.integers(0, 2**31))
def test_qparams_roundtrip(n, seed):
    q = QParams.random(n, np.random.default_rng(seed))
    back = QParams.from_dict(q.to_dict())
    assert np.max(np.abs(back.q - q.q)) == 0.0


def test_uniform_mode():
    q = QParams.from_dict({"n": 3, "mode": "uniform", "theta": np.pi / 2})
    assert q[0, 2] == pytest.approx(1j) and q[2, 0] == pytest.approx(-1j)


def test_single_swap_value():
    # x = (0, 1) reordered to (1, 0) picks up q[1, 0] = conj(q[0, 1])
    q = QParams.uniform(2, np.pi / 2)
    assert qcoeff.q_coeff_chain(q, (0, 1), [0]) == pytest.approx(q[1, 0])
    assert qcoeff.q_coeff_chain(q, (0, 1), []) == 1
    assert qcoeff.q_coeff_chain(q, (1, 1, 1), [0, 1, 0]) == 1
    with pytest.raises(ValueError):
        qcoeff.q_coeff_chain(q, (0, 1), [1])


def test_closed_form_examples():
    q = QParams.uniform(2, np.pi / 2)
    assert qcoeff.q_coeff_closed(q, (0, 1), (0, 1)) == 1
    assert qcoeff.q_coeff_closed(q, (1, 1, 1), (2, 0, 1)) == 1
    swap = (1, 0)
    assert qcoeff.q_coeff_closed(q, (0, 1), swap) == pytest.approx(
        qcoeff.q_coeff_chain(q, (0, 1), qcoeff.bubble_decomposition(swap)))
    with pytest.raises(ValueError):
        qcoeff.q_coeff_closed(q, (0, 1, 0), swap)


def test_sorted_examples():
    q = QParams.uniform(2, 0.7)
    assert qcoeff.q_coeff_of_sorted(q, (0, 0, 1)) == 1
    assert qcoeff.q_coeff_of_sorted(q, (1, 0)) == pytest.approx(qcoeff.q_coeff_chain(q, (0, 1), [0]))
    y = (1, 0, 1)
    values = {np.round(qcoeff.q_coeff_closed(q, sorted(y), qcoeff.inverse(s)), 12)
              for s in qcoeff.sorting_permutations(y)}
    assert len(qcoeff.sorting_permutations(y)) == 2 and len(values) == 1


@given(st.permutations(range(5)), st.permutations(range(5)))
def test_compose_and_inverse(s1, s2):
    s1, s2 = tuple(s1), tuple(s2)
    assert qcoeff.compose(s1, qcoeff.inverse(s1)) == qcoeff.identity(5)
    assert qcoeff.inverse(qcoeff.compose(s1, s2)) == qcoeff.compose(qcoeff.inverse(s2), qcoeff.inverse(s1))


@given(st.permutations(range(6)), st.integers(0, 2**31))
def test_decompositions_multiply_back(sigma, seed):
    sigma = tuple(sigma)
    inv = qcoeff.inverse(sigma)
    bub = qcoeff.bubble_decomposition(sigma)
    assert qcoeff.transposition_product(bub, 6) == inv
    assert len(bub) == len(qcoeff.inversion_pairs(sigma))
    rnd = qcoeff.random_decomposition(sigma, np.random.default_rng(seed))
    assert qcoeff.transposition_product(rnd, 6) == inv


@given(q_strategy(3), st.lists(st.integers(0, 2), min_size=1, max_size=6), st.integers(0, 2**31))
def test_chain_matches_closed_form(q, x, seed):
    rng = np.random.default_rng(seed)
    sigma = tuple(rng.permutation(len(x)))
    closed = qcoeff.q_coeff_closed(q, x, sigma)
    for word in (qcoeff.bubble_decomposition(sigma), qcoeff.random_decomposition(sigma, rng)):
        assert abs(qcoeff.q_coeff_chain(q, x, word) - closed) < 1e-12
    assert abs(abs(closed) - 1) < 1e-12


@given(q_strategy(3), st.lists(st.integers(0, 2), min_size=0, max_size=5))
def test_stabilizer_gives_one(q, x):
    # a permutation that fixes the word must have coefficient 1
    for sigma in qcoeff.all_permutations(len(x)):
        if all(x[sigma[i]] == x[i] for i in range(len(x))):
            assert abs(qcoeff.q_coeff_closed(q, x, sigma) - 1) < 1e-12


def test_multinomial_norm():
    assert qcoeff.multinomial_norm_sq((1, 1)) == pytest.approx(0.5)
    assert qcoeff.multinomial_norm_sq((0, 0)) == 1
    assert qcoeff.multinomial_norm_sq((2, 1, 1)) == pytest.approx(2 / 24)
    for k in itertools.product(range(3), repeat=2):
        assert qcoeff.multinomial_norm_sq(k) == pytest.approx(1 / math.comb(sum(k), k[0]))


def test_check_permutation():
    assert qcoeff.check_permutation([1, 0]) == (1, 0)
    with pytest.raises(ValueError):
        qcoeff.check_permutation([0, 0])
    with pytest.raises(ValueError):
        qcoeff.check_permutation([0, 1], m=3)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_cocycle_exhaustive(m):
    q = QParams.random(3, np.random.default_rng(m))
    for x in itertools.product(range(3), repeat=m):
        for s1 in qcoeff.all_permutations(m):
            for s2 in qcoeff.all_permutations(m):
                inv2 = qcoeff.inverse(s2)
                z = tuple(x[inv2[i]] for i in range(m))
                lhs = qcoeff.q_coeff_closed(q, x, qcoeff.compose(s1, s2))
                rhs = qcoeff.q_coeff_closed(q, z, s1) * qcoeff.q_coeff_closed(q, x, s2)
                assert abs(lhs - rhs) < 1e-12
