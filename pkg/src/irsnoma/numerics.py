"""Dense complex linear-algebra kernels shared by the optimizers."""

from __future__ import annotations

import numpy as np

HERMITIAN_TOL = 1e-10


class NotRankOneError(ValueError):
    """Raised when a PSD matrix is too far from rank one to be factored."""

    def __init__(self, residual: float, tol: float):
        super().__init__(
            f"not numerically rank-one: residual ratio {residual:.3e} > tol {tol:.3e}"
        )
        self.residual = residual
        self.tol = tol


def check_hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.conj().T)) > tol * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    return a


def fix_phase(u: np.ndarray) -> np.ndarray:
    """Rotate ``u`` so that its largest-modulus entry is real and positive."""
    u = np.asarray(u, dtype=complex)
    if u.size == 0:
        return u
    idx = int(np.argmax(np.abs(u)))
    if abs(u[idx]) == 0:
        return u
    return u * (abs(u[idx]) / u[idx])


def leading_eigpair(a) -> tuple[float, np.ndarray]:
    """Largest eigenvalue of a Hermitian (or real symmetric) matrix and its
    unit eigenvector, with the phase convention of :func:`fix_phase`."""
    a = check_hermitian(a)
    a = 0.5 * (a + a.conj().T)
    vals, vecs = np.linalg.eigh(a)
    return float(vals[-1]), fix_phase(vecs[:, -1])


def rank_one_factor(x, tol: float) -> tuple[np.ndarray, float]:
    """Factor a PSD matrix as ``x ≈ f fᴴ`` using its leading eigenpair.

    Returns ``(f, residual)`` with ``residual = ‖X − f fᴴ‖_F / ‖X‖_F``.
    Raises :class:`NotRankOneError` if ``residual > tol``.
    """
    x = check_hermitian(x)
    fro = float(np.linalg.norm(x))
    if fro == 0.0:
        raise ValueError("cannot factor the zero matrix")
    vals = np.linalg.eigvalsh(0.5 * (x + x.conj().T))
    if vals[0] < -1e-9 * max(1.0, abs(vals[-1])):
        raise ValueError(f"matrix is not PSD (min eigenvalue {vals[0]:.3e})")
    lam, u = leading_eigpair(x)
    f = np.sqrt(max(lam, 0.0)) * u
    residual = float(np.linalg.norm(x - np.outer(f, f.conj())) / fro)
    if residual > tol:
        raise NotRankOneError(residual, tol)
    return f, residual


def residual_ratio(x) -> float:
    """‖X − λ₁u₁u₁ᴴ‖_F / ‖X‖_F for a PSD matrix (0 for rank one)."""
    x = check_hermitian(x)
    fro = float(np.linalg.norm(x))
    if fro == 0.0:
        return 0.0
    vals = np.linalg.eigvalsh(0.5 * (x + x.conj().T))
    return float(np.linalg.norm(vals[:-1]) / fro)


def real_embedding(h) -> np.ndarray:
    """Map an n×n Hermitian matrix to the 2n×2n real symmetric
    ``[[Re H, -Im H], [Im H, Re H]]``."""
    h = check_hermitian(h)
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def random_hermitian(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + a.conj().T)
