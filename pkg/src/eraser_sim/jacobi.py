"""Cyclic Jacobi eigensolver for small complex Hermitian matrices."""

from __future__ import annotations

import numpy as np


def jacobi_eigh(a: np.ndarray, tol: float = 1e-14, max_sweeps: int = 50) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition ``a = V diag(w) V^H`` by cyclic Jacobi rotations.

    Each rotation first removes the phase of the pivot ``a[p, q]`` and then
    applies the real symmetric Jacobi rotation that zeroes it.  Sweeps stop
    once the off-diagonal Frobenius norm falls below ``tol`` times the
    matrix norm.

    Returns
    -------
    w : ndarray
        Real eigenvalues in ascending order.
    v : ndarray
        Unitary matrix whose columns are the corresponding eigenvectors.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ValueError("jacobi_eigh needs a square matrix")
    if np.max(np.abs(a - a.conj().T), initial=0.0) > 1e-10 * max(1.0, np.abs(a).max(initial=0.0)):
        raise ValueError("jacobi_eigh needs a Hermitian matrix")
    a = (a + a.conj().T) / 2
    v = np.eye(n, dtype=complex)
    scale = np.linalg.norm(a)
    if scale == 0:
        return np.zeros(n), v

    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-300:
                    continue
                phase = apq / r
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2 * r)
                t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(1.0, theta))
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                # g = diag(1, conj(phase)) @ [[c, s], [-s, c]] on rows/cols p, q
                g = np.eye(n, dtype=complex)
                g[p, p] = c
                g[p, q] = s
                g[q, p] = -s * phase.conjugate()
                g[q, q] = c * phase.conjugate()
                a = g.conj().T @ a @ g
                a[p, q] = a[q, p] = 0.0
                v = v @ g
    else:
        raise RuntimeError("Jacobi iteration did not converge")

    w = np.diag(a).real.copy()
    order = np.argsort(w)
    return w[order], v[:, order]
