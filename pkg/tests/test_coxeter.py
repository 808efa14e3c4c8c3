import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rahecke.coxeter import CoxeterError, CoxeterSystem, ball, multiply, spheres


def tits(word, sys):
    """Integer Tits representation; faithful, so it decides equality independently."""
    n = sys.rank
    B = np.where(sys.commute_matrix, 0, -1)
    np.fill_diagonal(B, 1)
    M = np.eye(n, dtype=np.int64)
    for a in word:
        R = np.eye(n, dtype=np.int64)
        R[a, :] -= 2 * B[a, :]
        M = M @ R
    return M


words = st.lists(st.integers(0, 4), max_size=14)


def test_pentagon_commutation(pentagon):
    for i in range(5):
        for j in range(5):
            assert pentagon.commutes(i, j) == ((i - j) % 5 in (1, 4))


def test_sphere_sizes(pentagon):
    assert [len(s) for s in spheres(pentagon, 8)] == [1, 5, 15, 40, 105, 275, 720, 1885, 4935]
    assert len(ball(pentagon, 2)) == 21
    assert ball(pentagon, 0) == [pentagon.identity]


@given(words)
def test_normal_form_matches_tits(pentagon_w):
    sys = CoxeterSystem.polygon_group(5)
    w = sys.element(pentagon_w)
    assert np.array_equal(tits(w.word, sys), tits(pentagon_w, sys))
    assert w.length <= len(pentagon_w)
    assert w.length % 2 == len(pentagon_w) % 2


@given(words, words)
def test_multiplication_is_concatenation(a, b):
    sys = CoxeterSystem.polygon_group(5)
    assert multiply(sys.element(a), sys.element(b)) == sys.element(a + b)


@given(words)
def test_inverse(a):
    sys = CoxeterSystem.polygon_group(5)
    w = sys.element(a)
    assert (w * w.inverse()).is_identity()
    assert w.inverse().length == w.length


def test_shortlex_is_minimal(pentagon):
    # every reduced word in the ball is lexicographically least among its rewrites
    for w in ball(pentagon, 5):
        for s in range(5):
            if w.descends_left(s):
                assert w.left_mul_gen(s).length == w.length - 1
            else:
                assert w.left_mul_gen(s).length == w.length + 1


def test_parse(pentagon):
    assert str(pentagon.parse("s0 s2 s0")) == "s0s2s0"
    assert pentagon.parse("s1*s0") == pentagon.parse("s0s1")
    assert pentagon.parse("1").is_identity()
    with pytest.raises(CoxeterError):
        pentagon.parse("s7")


def test_invalid_systems():
    with pytest.raises(CoxeterError):
        CoxeterSystem([[0, 1], [0, 0]])
    with pytest.raises(CoxeterError):
        CoxeterSystem([[1, 0], [0, 0]])
    with pytest.raises(CoxeterError):
        spheres(CoxeterSystem.polygon_group(5), -1)
