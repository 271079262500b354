import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irsnoma.numerics import (NotRankOneError, check_hermitian, leading_eigpair, random_hermitian,
                              rank_one_factor, real_embedding, residual_ratio)


def test_identity_eigpair():
    lam, u = leading_eigpair(np.eye(3))
    assert lam == pytest.approx(1.0)
    assert np.linalg.norm(u) == pytest.approx(1.0)
    k = int(np.argmax(np.abs(u)))
    assert u[k].imag == 0 and u[k].real > 0


def test_diagonal_eigpair():
    lam, u = leading_eigpair(np.diag([3.0, 1.0]))
    assert lam == pytest.approx(3.0)
    np.testing.assert_allclose(u, [1.0, 0.0], atol=1e-12)


def test_random_against_dense_solver(rng):
    for _ in range(20):
        a = random_hermitian(rng, 6)
        lam, u = leading_eigpair(a)
        vals, vecs = np.linalg.eig(a)  # general solver as an independent oracle
        i = int(np.argmax(vals.real))
        assert lam == pytest.approx(vals[i].real, abs=1e-8)
        assert np.linalg.norm(a @ u - lam * u) <= 1e-8 * np.linalg.norm(a)
        ref = vecs[:, i] / np.linalg.norm(vecs[:, i])
        assert abs(abs(np.vdot(ref, u)) - 1.0) < 1e-8


def test_rayleigh_maximality(rng):
    a = random_hermitian(rng, 8)
    lam, u = leading_eigpair(a)
    top = np.real(np.vdot(u, a @ u))
    for _ in range(100):
        w = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        w /= np.linalg.norm(w)
        assert top >= np.real(np.vdot(w, a @ w)) - 1e-10


def test_is_deterministic(rng):
    a = random_hermitian(rng, 5)
    assert np.array_equal(leading_eigpair(a)[1], leading_eigpair(a.copy())[1])


def test_non_hermitian_rejected():
    with pytest.raises(ValueError):
        leading_eigpair(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        check_hermitian(np.zeros((2, 3)))


def test_factor_exact_rank_one():
    a = np.array([1.0, 1j])
    f, res = rank_one_factor(np.outer(a, a.conj()), 1e-9)
    assert res == pytest.approx(0.0, abs=1e-15)
    assert abs(abs(np.vdot(f, a)) - 2.0) < 1e-12  # same vector up to phase
    np.testing.assert_allclose(np.outer(f, f.conj()), np.outer(a, a.conj()), atol=1e-14)


def test_factor_rank_two_rejected():
    with pytest.raises(NotRankOneError, match="not numerically rank-one"):
        rank_one_factor(np.eye(2), 1e-3)


def test_factor_zero_matrix():
    with pytest.raises(ValueError, match="zero matrix"):
        rank_one_factor(np.zeros((3, 3)), 1e-3)


def test_factor_nearly_rank_one(rng):
    x = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    X = np.outer(x, x.conj()) + 1e-9 * np.eye(5)
    f, res = rank_one_factor(X, 1e-3)
    assert res <= 1e-6


def test_residual_ratio_agrees_with_factor(rng):
    for _ in range(10):
        b = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
        X = b @ b.conj().T
        lam, u = leading_eigpair(X)
        direct = np.linalg.norm(X - lam * np.outer(u, u.conj())) / np.linalg.norm(X)
        assert residual_ratio(X) == pytest.approx(direct, abs=1e-12)


def test_residual_ratio_differs_from_trace_fraction():
    # For diag(1, 1) the Frobenius ratio is 1/√2 while 1 − λmax/Tr is 1/2.
    assert residual_ratio(np.eye(2)) == pytest.approx(1 / np.sqrt(2))


def test_embedding_scalar():
    np.testing.assert_array_equal(real_embedding(np.array([[1.0]])), np.eye(2))


def test_embedding_hand_eigenvalues():
    h = np.array([[0, 1j], [-1j, 0]])
    vals = np.sort(np.linalg.eigvalsh(real_embedding(h)))
    np.testing.assert_allclose(vals, [-1, -1, 1, 1], atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2 ** 32 - 1))
def test_embedding_properties(n, seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, n)
    e = real_embedding(h)
    assert np.trace(e) == pytest.approx(2 * np.trace(h).real)
    ev_h = np.sort(np.linalg.eigvalsh(h))
    ev_e = np.sort(np.linalg.eigvalsh(e))
    np.testing.assert_allclose(ev_e, np.repeat(ev_h, 2), atol=1e-9)
    assert ev_e[0] >= ev_h[0] - 1e-12 * max(1.0, np.abs(ev_h).max())
