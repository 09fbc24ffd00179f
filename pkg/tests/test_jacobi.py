import numpy as np
import pytest
from hypothesis import given, strategies as st

from eraser_sim.jacobi import jacobi_eigh


def _hermitian(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a + a.conj().T


@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_matches_numpy(seed, n):
    a = _hermitian(seed, n)
    w, v = jacobi_eigh(a)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(a), atol=1e-12 * np.abs(a).max())
    np.testing.assert_allclose(v.conj().T @ v, np.eye(n), atol=1e-12)
    np.testing.assert_allclose(v @ np.diag(w) @ v.conj().T, a, atol=1e-12 * np.abs(a).max())


def test_degenerate_spectrum():
    q, _ = np.linalg.qr(_hermitian(3, 4))
    a = q @ np.diag([1.0, 1.0, 2.0, 2.0]) @ q.conj().T
    w, v = jacobi_eigh(a)
    np.testing.assert_allclose(w, [1, 1, 2, 2], atol=1e-13)
    np.testing.assert_allclose(v @ np.diag(w) @ v.conj().T, a, atol=1e-13)


def test_zero_and_diagonal():
    w, v = jacobi_eigh(np.zeros((3, 3)))
    assert np.all(w == 0) and np.all(v == np.eye(3))
    w, _ = jacobi_eigh(np.diag([3.0, -1.0, 2.0]))
    assert list(w) == [-1.0, 2.0, 3.0]


@pytest.mark.parametrize("bad", [np.ones((2, 3)), np.array([[0, 1], [0, 0]])])
def test_rejects_non_hermitian(bad):
    with pytest.raises(ValueError):
        jacobi_eigh(bad)
