import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qfock import moments
from qfock.fock import FockContext, QFockSpace
from qfock.moments import GWord, TruncationLeak
from qfock.qcoeff import QParams

from conftest import crandn


def space(n, M, seed=0):
    return QFockSpace(FockContext(n, M), QParams.random(n, np.random.default_rng(seed)))


def brute_power_moment(sp, i, p):
    g = sp.shifts[i] + sp.shifts[i].conj().T
    return np.vdot(sp.vacuum, np.linalg.matrix_power(g, p) @ sp.vacuum).real


def test_gword_parse():
    w = GWord.parse("G1 S*0 S2")
    assert w.factors == ((1, "G"), (0, "S*"), (2, "S"))
    assert len(GWord.of_g((0, 0, 1))) == 3
    with pytest.raises(ValueError):
        GWord(((0, "X"),))
    with pytest.raises(ValueError):
        GWord(((-1, "G"),))


def test_moment_sequence_is_catalan():
    sp = space(2, 4)
    seq = moments.moment_sequence(0, 6, sp)
    assert np.allclose(seq, [0, 1, 0, 2, 0, 5], atol=1e-10)
    for p in range(1, 7):
        assert seq[p - 1] == pytest.approx(brute_power_moment(sp, 0, p), abs=1e-12)
        assert moments.vacuum_expectation(GWord.of_g([1] * p), sp).real == pytest.approx(
            moments.semicircle_moment(p), abs=1e-10)


def test_moment_sequence_budget():
    with pytest.raises(TruncationLeak):
        moments.moment_sequence(0, 7, space(2, 3))


def test_leak_detection():
    sp = space(1, 2)
    # G^4 only climbs to level 2, G^6 needs level 3
    assert moments.vacuum_expectation(GWord.of_g([0] * 4), sp).real == pytest.approx(2.0)
    with pytest.raises(TruncationLeak):
        moments.vacuum_expectation(GWord.of_g([0] * 6), sp)


def test_cropped_mass_that_cannot_return_is_harmless():
    sp = space(1, 1)
    # S* S S: the top-level component never comes back to the vacuum
    assert moments.vacuum_expectation(GWord.parse("S*0 S0 S0"), sp) == 0
    assert moments.vacuum_expectation(GWord.parse("S*0 S0"), sp) == pytest.approx(1.0)


def test_index_check():
    with pytest.raises(ValueError):
        moments.vacuum_expectation(GWord.of_g([2]), space(2, 2))


def test_catalan_numbers():
    assert [moments.catalan(k) for k in range(6)] == [1, 1, 2, 5, 14, 42]
    assert moments.displayed_constant(4) == pytest.approx(6 / 5)
    assert moments.displayed_constant(3) == 0.0


@given(st.integers(0, 2**31))
def test_non_traciality_values(seed):
    a, b = moments.traciality_values(space(2, 4, seed))
    assert abs(a - 1) <= 1e-12 and abs(b - 0.5) <= 1e-12


def test_moments_check_and_csv():
    sp = space(2, 4)
    rep = moments.moments_check(sp)
    assert rep.passed, str(rep)
    text = moments.moments_csv(moments.moment_rows(0, 4, sp))
    lines = text.strip().splitlines()
    assert lines[0] == "p,moment,catalan_reference,abs_error"
    assert len(lines) == 5 and lines[2].startswith("2,")


def test_hankel_psd():
    assert moments.hankel_min_eig([0, 1, 0, 2, 0, 5]) >= -1e-12
    assert moments.hankel_min_eig([0, -1]) < 0


def test_max_norm_and_embedding(rng):
    assert moments.max_norm([np.eye(2), np.eye(2)]) == pytest.approx(np.sqrt(2))
    r = crandn(rng, 3)
    assert np.linalg.norm(moments.en_embed(r), 2) == pytest.approx(np.linalg.norm(r))
    a = [crandn(rng, 2, 2) for _ in range(2)]
    assert moments.en_norm(a) == pytest.approx(moments.max_norm(a), rel=1e-12)
    assert isinstance(moments.max_norm(a), float)
    with pytest.raises(Exception):
        moments.max_norm([np.eye(2), np.eye(3)])


def test_operator_space_bounds_scalars():
    sp = space(2, 6)
    rep = moments.field_norm_bounds([np.eye(1), np.eye(1)], sp)
    assert rep.passed
    assert math.sqrt(2) <= rep.details["norm"] <= 2 * math.sqrt(2)


@given(st.integers(0, 2**31))
def test_operator_space_bounds_random(seed):
    rng = np.random.default_rng(seed)
    a = [crandn(rng, 2, 2) for _ in range(2)]
    assert moments.field_norm_bounds(a, space(2, 4, seed)).passed


def test_gaussian_budget():
    with pytest.raises(moments.BudgetExceeded):
        moments.gaussian_sum_norm([np.eye(2), np.eye(2)], space(2, 4), budget=10)


def test_scalar_norms():
    seq = moments.scalar_norm_sequence(range(1, 12))
    for M, norm, exact in seq:
        assert norm == pytest.approx(exact, abs=1e-12)
    norms = [s[1] for s in seq]
    assert all(b > a for a, b in zip(norms, norms[1:])) and norms[-1] < 2
