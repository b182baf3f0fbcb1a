"""Small dense complex matrices (dimension at most 6).

Matrices are plain ``numpy`` complex arrays; the helpers here validate
shapes and finiteness and provide the Hermitian eigensolver used for
positivity checks.
"""
from __future__ import annotations

import numpy as np

from steerlab._backend import kernel

MAX_DIM = 6
HERMITIAN_TOL = 1e-10


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a square complex128 array, rejecting bad input."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not 1 <= m.shape[0] <= MAX_DIM:
        raise ValueError(f"dimension {m.shape[0]} outside 1..{MAX_DIM}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def as_vector(v) -> np.ndarray:
    x = np.asarray(v, dtype=np.complex128)
    if x.ndim != 1 or not 1 <= x.shape[0] <= MAX_DIM:
        raise ValueError(f"expected a vector of length 1..{MAX_DIM}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector has non-finite entries")
    return x


def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")


def mat_mul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    _same_dim(a, b)
    return a @ b


def adjoint(a) -> np.ndarray:
    return as_matrix(a).conj().T


def trace(a) -> complex:
    return complex(np.trace(as_matrix(a)))


def frobenius_distance(a, b) -> float:
    a, b = as_matrix(a), as_matrix(b)
    _same_dim(a, b)
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2)))


def hermiticity_defect(a) -> float:
    """Frobenius norm of ``A - A^dagger``."""
    a = as_matrix(a)
    return frobenius_distance(a, a.conj().T)


def herm_eigvals(a) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix (cyclic Jacobi).

    Raises ``ValueError`` when ``||A - A^dagger||_F >= 1e-10``.
    """
    a = as_matrix(a)
    defect = hermiticity_defect(a)
    if defect >= HERMITIAN_TOL:
        raise ValueError(f"matrix is not Hermitian (defect {defect:.3e})")
    return kernel.herm_eigvals(0.5 * (a + a.conj().T))


def outer(ket, bra=None) -> np.ndarray:
    """``|ket><bra|``; ``bra`` defaults to ``ket``."""
    ket = as_vector(ket)
    bra = ket if bra is None else as_vector(bra)
    if bra.shape != ket.shape:
        raise ValueError("dimension mismatch")
    return np.outer(ket, bra.conj())


def basis_vector(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return v
