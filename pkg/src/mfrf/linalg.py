"""Vectorization helpers, Hermitian eigen-tools and implicit linear operators.

Waveform matrices are vectorized column-wise, so element ``(n, l)`` of an
``N x L`` matrix lands at index ``n + l * N`` of the vector.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .errors import NumericalError

#: Relative tolerance below which negative eigenvalues are treated as round-off.
PSD_RTOL = 1e-10


def vec(mat: np.ndarray) -> np.ndarray:
    """Stack the columns of ``mat`` into a single vector."""
    return np.asarray(mat).reshape(-1, order="F")


def unvec(x: np.ndarray, rows: int) -> np.ndarray:
    """Inverse of :func:`vec` for a matrix with ``rows`` rows."""
    x = np.asarray(x)
    if x.size % rows:
        raise ValueError(f"vector of length {x.size} cannot be split into {rows} rows")
    return x.reshape(rows, -1, order="F")


def hermitian_part(mat: np.ndarray) -> np.ndarray:
    mat = np.asarray(mat)
    return 0.5 * (mat + mat.conj().T)


def hermitian_eigh(mat: np.ndarray):
    """Eigendecomposition of a Hermitian matrix, eigenvalues in descending order.

    The input is symmetrized first so tiny asymmetries from round-off do not
    leak into the spectrum.
    """
    w, u = sla.eigh(hermitian_part(mat))
    return w[::-1].copy(), u[:, ::-1].copy()


def hermitian_sqrt(mat: np.ndarray, rtol: float = PSD_RTOL) -> np.ndarray:
    """Hermitian PSD square root.

    Eigenvalues in ``[-rtol * lambda_max, 0)`` are clamped to zero; anything
    more negative raises :class:`NumericalError`.
    """
    w, u = hermitian_eigh(mat)
    scale = max(abs(w[0]), abs(w[-1]), np.finfo(float).tiny)
    if w[-1] < -rtol * scale:
        raise NumericalError(
            f"matrix is not positive semidefinite: smallest eigenvalue {w[-1]:.3e} "
            f"(largest {w[0]:.3e})"
        )
    w = np.clip(w, 0.0, None)
    root = (u * np.sqrt(w)) @ u.conj().T
    return hermitian_part(root)


class DenseOperator:
    """A linear operator backed by an explicit matrix."""

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=complex)
        if self.matrix.ndim != 2:
            raise ValueError("matrix must be two-dimensional")

    @property
    def shape(self):
        return self.matrix.shape

    def matvec(self, x):
        return self.matrix @ np.asarray(x)

    def rmatvec(self, x):
        return self.matrix.conj().T @ np.asarray(x)

    def to_dense(self):
        return self.matrix.copy()

    def __matmul__(self, x):
        return self.matvec(x)

    def eigh(self):
        return hermitian_eigh(self.matrix)

    def lambda_max(self) -> float:
        return float(hermitian_eigh(self.matrix)[0][0])

    def sqrt(self) -> "DenseOperator":
        return DenseOperator(hermitian_sqrt(self.matrix))

    def quadratic(self, x) -> float:
        """Real part of ``x^H A x``."""
        x = np.asarray(x)
        return float(np.real(np.vdot(x, self.matvec(x))))


class KronOperator:
    """The operator ``I_L kron block`` applied without forming the Kronecker product.

    For ``x = vec(X)`` with ``X`` of shape ``(block.shape[1], L)`` the product is
    ``vec(block @ X)``, so memory stays proportional to the waveform size.
    """

    def __init__(self, block, code_length: int):
        self.block = np.asarray(block, dtype=complex)
        if self.block.ndim != 2:
            raise ValueError("block must be two-dimensional")
        if code_length < 1:
            raise ValueError("code_length must be >= 1")
        self.code_length = int(code_length)

    @property
    def shape(self):
        p, q = self.block.shape
        return (p * self.code_length, q * self.code_length)

    def matvec(self, x):
        x = np.asarray(x)
        return vec(self.block @ unvec(x, self.block.shape[1]))

    def rmatvec(self, x):
        x = np.asarray(x)
        return vec(self.block.conj().T @ unvec(x, self.block.shape[0]))

    def apply_matrix(self, mat):
        """Apply the operator to ``vec(mat)`` and return the result as a matrix."""
        return self.block @ np.asarray(mat)

    def to_dense(self):
        return np.kron(np.eye(self.code_length), self.block)

    def __matmul__(self, x):
        return self.matvec(x)

    def eigh(self):
        """Descending spectrum of the full operator (each block eigenvalue L times)."""
        w, u = hermitian_eigh(self.block)
        full_u = np.kron(np.eye(self.code_length), u)
        full_w = np.tile(w, self.code_length)
        order = np.argsort(-full_w, kind="stable")
        return full_w[order], full_u[:, order]

    def lambda_max(self) -> float:
        return float(hermitian_eigh(self.block)[0][0])

    def sqrt(self) -> "KronOperator":
        return KronOperator(hermitian_sqrt(self.block), self.code_length)

    def quadratic(self, x) -> float:
        x = np.asarray(x)
        return float(np.real(np.vdot(x, self.matvec(x))))
