"""Cyclic Jacobi eigendecomposition for small dense Hermitian matrices."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["eigh_jacobi", "sqrtm_psd", "funcm_hermitian"]


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(np.abs(off) ** 2)))


def eigh_jacobi(a, tol: float = 1e-14, max_sweeps: int = 60):
    """Eigenvalues (ascending) and unit eigenvectors (columns) of a Hermitian matrix.

    Cyclic-by-row sweeps of complex Jacobi rotations until the off-diagonal
    Frobenius norm drops below ``tol * max(1, ||a||_F)``. Input that is
    not Hermitian to 1e-10 (relative) raises; smaller asymmetry is averaged out.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ValueError("expected a square matrix")
    scale = max(1.0, float(np.linalg.norm(a)))
    if n and float(np.max(np.abs(a - a.conj().T))) > 1e-10 * scale:
        raise ValueError("matrix is not Hermitian")
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex)
    for _ in range(max_sweeps):
        if _off_norm(a) < tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = a[p, q]
                mag = abs(b)
                if mag < 1e-300:
                    continue
                app, aqq = a[p, p].real, a[q, q].real
                # real rotation of the phase-stripped block [[app, |b|], [|b|, aqq]]
                theta = (aqq - app) / (2.0 * mag)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                phase = b / mag
                # G = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                g = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, idx] = v[:, idx] @ g
    else:
        if _off_norm(a) >= tol * scale:
            raise RuntimeError("Jacobi iteration did not converge")
    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def funcm_hermitian(a, fn):
    """fn applied to a Hermitian matrix through its eigenvalues."""
    w, v = eigh_jacobi(a)
    return (v * fn(w)) @ v.conj().T


def sqrtm_psd(a, neg_tol: float = 1e-10, floor: float = 0.0):
    """Principal square root of a PSD Hermitian matrix.

    Eigenvalues in [-neg_tol, 0) are clipped to 0; anything more negative
    raises. Eigenvalues below ``floor * max(eigenvalue)`` are also zeroed, which
    keeps roundoff-level eigenvalues of (near) rank-deficient inputs from
    turning into sqrt(1e-16) ~ 1e-8 entries.
    """
    w, v = eigh_jacobi(a)
    if w.size and w[0] < -neg_tol:
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    w = np.where(w > floor * max(w[-1], 0.0), w, 0.0) if w.size else w
    return (v * np.sqrt(w)) @ v.conj().T
