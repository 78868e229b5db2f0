import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qfock import linalg
from qfock.dilation import noncommuting_dilation, weyl_pair_generator, weyl_q
from qfock.linalg import dagger
from qfock.piece import (
    MalformedTuple,
    NotADilation,
    OperatorTuple,
    dilation_intersection_check,
    dual_characterization_check,
    lattice_checks,
    maximal_q_piece,
)
from qfock.qcoeff import QParams

from conftest import crandn


def random_tuple(rng, n=2, dim=4, scale=0.5):
    """Random row contraction with ||sum T_i T_i^*|| = scale^2."""
    mats = [crandn(rng, dim, dim) for _ in range(n)]
    norm = np.sqrt(linalg.operator_norm(sum(m @ dagger(m) for m in mats)))
    return OperatorTuple(tuple(scale * m / norm for m in mats))


def commuting_pair(rng, dim=3):
    # simultaneously diagonalisable, hence commuting
    g = crandn(rng, dim, dim)
    d1, d2 = np.diag(crandn(rng, dim)), np.diag(crandn(rng, dim))
    gi = np.linalg.inv(g)
    return OperatorTuple((0.3 * g @ d1 @ gi, 0.3 * g @ d2 @ gi))


def test_operator_tuple_validation():
    with pytest.raises(MalformedTuple):
        OperatorTuple(())
    with pytest.raises(MalformedTuple):
        OperatorTuple((np.eye(2), np.eye(3)))
    with pytest.raises(MalformedTuple):
        OperatorTuple((np.ones((2, 3)),))


def test_json_roundtrip(rng):
    t = random_tuple(rng)
    back = OperatorTuple.from_json(json.dumps(t.to_dict()))
    assert all(np.array_equal(a, b) for a, b in zip(t, back))
    bad = t.to_dict()
    bad["n"] = 3
    with pytest.raises(MalformedTuple):
        OperatorTuple.from_dict(bad)
    bad = t.to_dict()
    bad["matrices"][0]["entries"] = bad["matrices"][0]["entries"][:-1]
    with pytest.raises(MalformedTuple):
        OperatorTuple.from_dict(bad)
    with pytest.raises(MalformedTuple):
        OperatorTuple.from_dict({"n": 1})


def test_q_commuting_tuple_is_its_own_piece():
    T = weyl_pair_generator(3, 0.8)
    res = maximal_q_piece(T, weyl_q(3))
    assert res.rank == 3 and res.iterations == 0
    assert linalg.operator_norm(res.projector.matrix - np.eye(3)) < 1e-12


def test_trivial_piece(rng):
    T = random_tuple(rng, dim=4, scale=0.9)
    res = maximal_q_piece(T, QParams.trivial(2))
    assert res.trivial and res.compressed is None


def test_q_shape_mismatch(rng):
    with pytest.raises(ValueError):
        maximal_q_piece(random_tuple(rng), QParams.trivial(3))


@given(st.integers(0, 2**31))
def test_piece_is_coinvariant_and_q_commuting(seed):
    rng = np.random.default_rng(seed)
    # random tuple on C^4 plus a q-commuting summand guarantees a non-trivial piece
    q = weyl_q(2)
    T = random_tuple(rng, dim=3).direct_sum(weyl_pair_generator(2, 0.7))
    res = maximal_q_piece(T, q)
    assert res.rank >= 2
    p = res.projector.matrix
    for t in T:
        # co-invariant: T_i^* maps the piece into itself
        assert linalg.operator_norm(dagger(t) @ p - p @ dagger(t) @ p) < 1e-9
    comp = res.compressed
    # starred relation on the piece
    assert comp.q_commutator_residual(q) < 1e-9


def test_piece_is_idempotent(rng):
    q = weyl_q(2)
    T = random_tuple(rng, dim=3).direct_sum(weyl_pair_generator(2, 0.7))
    first = maximal_q_piece(T, q)
    second = maximal_q_piece(first.compressed, q)
    assert second.rank == first.rank


def test_dual_characterization(rng):
    q = weyl_q(2)
    T = random_tuple(rng, dim=4).direct_sum(weyl_pair_generator(2, 0.7))
    rep = dual_characterization_check(T, q, maximal_q_piece(T, q))
    assert rep.passed, str(rep)
    names = {c.name for c in rep.children}
    assert names == {"inside_piece", "outside_violates"}


def test_lattice(rng):
    q = QParams.trivial(2)
    rep = lattice_checks(commuting_pair(rng), random_tuple(rng, dim=3, scale=0.9), q)
    assert rep.passed, str(rep)


def test_dilation_intersection_on_block_model():
    T = weyl_pair_generator(2, 0.4)
    q = weyl_q(2)
    R, space = noncommuting_dilation(T, 4)
    rep = dilation_intersection_check(T, R, q, space.embedding)
    assert rep.passed, str(rep)


def test_dilation_intersection_trivial_piece(rng):
    T = random_tuple(rng, dim=2, scale=0.6)
    q = QParams.trivial(2)
    R, space = noncommuting_dilation(T, 4)
    rep = dilation_intersection_check(T, R, q, space.embedding)
    assert rep.passed and rep.children[0].details["rank_T_piece"] == 0


def test_not_a_dilation(rng):
    T = random_tuple(rng, dim=2)
    R = random_tuple(rng, dim=4)
    with pytest.raises(NotADilation):
        dilation_intersection_check(T, R, QParams.trivial(2), np.eye(4, 2))


def test_tuple_helpers(rng):
    t = random_tuple(rng, dim=2)
    assert np.allclose(t.word((0, 1)), t[0] @ t[1])
    assert np.allclose(t.word(()), np.eye(2))
    assert t.tensor_identity(3).dim == 6 and t.direct_sum(t).dim == 4
    assert t.scaled(0.0).contractive
