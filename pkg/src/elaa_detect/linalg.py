"""Dense complex linear algebra with multiply-accumulate accounting.

Matrices and vectors are plain ``complex128`` NumPy arrays. Every routine
that the iterative detectors use inside their loops accepts an optional
:class:`FlopCounter` and charges it according to a simple cost model:

* ``R x C`` matrix-vector product: ``R * C`` MACs
* inner product of length ``N``: ``N`` MACs
* triangular solve of order ``N``: ``N (N + 1) / 2`` MACs

Additions and subtractions are free. Norms are not charged; they are only
used for instrumentation (residual tracking), never by the algorithms.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, NotPositiveDefinite, ShapeError, SingularTriangular

HERMITIAN_RTOL = 1e-10


@dataclass
class FlopCounter:
    """Running total of complex multiply-accumulates."""

    macs: int = 0

    def charge(self, n):
        self.macs += int(n)


def _charge(counter, n):
    if counter is not None:
        counter.charge(n)


def as_cmatrix(A):
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2:
        raise DimensionError(f"expected a matrix, got array with shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def as_cvector(x):
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 1:
        raise DimensionError(f"expected a vector, got array with shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector has non-finite entries")
    return x


def matvec(A, x, counter=None):
    """Return ``A @ x`` and charge ``rows * cols`` MACs."""
    A = np.asarray(A)
    x = np.asarray(x)
    if A.ndim != 2 or x.ndim != 1 or A.shape[1] != x.shape[0]:
        raise DimensionError(f"cannot multiply {A.shape} matrix by {x.shape} vector")
    _charge(counter, A.shape[0] * A.shape[1])
    return A @ x


def inner(x, y, counter=None):
    """Return ``x^H y`` and charge ``len(x)`` MACs."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError(f"inner product of shapes {x.shape} and {y.shape}")
    _charge(counter, x.shape[0])
    return np.vdot(x, y)


def vec_norm(x):
    return float(np.linalg.norm(x))


def fro_norm(A):
    return float(np.linalg.norm(A, "fro"))


def is_hermitian(A, rtol=HERMITIAN_RTOL):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        return False
    scale = max(fro_norm(A), np.finfo(float).tiny)
    return fro_norm(A - A.conj().T) <= rtol * scale


def hermitize(A):
    """Return ``(A + A^H) / 2``."""
    return 0.5 * (A + A.conj().T)


def _check_hermitian(A):
    A = as_cmatrix(A)
    if A.shape[0] != A.shape[1]:
        raise ShapeError(f"matrix must be square, got {A.shape}")
    if not is_hermitian(A):
        raise ShapeError("matrix is not Hermitian to relative tolerance "
                         f"{HERMITIAN_RTOL:g}")
    return hermitize(A)


def hermitian_cholesky(A):
    """Lower-triangular ``L`` with ``A = L L^H``.

    The input is symmetrized before factorization so that Gram matrices that
    are Hermitian only up to roundoff are accepted.

    Raises
    ------
    ShapeError
        If ``A`` is not square or not Hermitian to ``1e-10`` relative.
    NotPositiveDefinite
        If a non-positive pivot is met.
    """
    A = _check_hermitian(A)
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None


def _check_triangular(T, b):
    T = np.asarray(T)
    b = np.asarray(b)
    if T.ndim != 2 or T.shape[0] != T.shape[1] or b.shape != (T.shape[0],):
        raise DimensionError(f"triangular solve with {T.shape} matrix and {b.shape} rhs")
    diag = np.diagonal(T)
    zero = np.flatnonzero(diag == 0)
    if zero.size:
        raise SingularTriangular(f"zero diagonal entry at index {zero[0]}")
    return T, b


def forward_substitute(Lw, b, counter=None):
    """Solve ``Lw y = b`` for lower-triangular ``Lw``.

    Only the lower triangle of ``Lw`` is read. Charges ``N (N + 1) / 2``.
    """
    Lw, b = _check_triangular(Lw, b)
    n = b.shape[0]
    _charge(counter, n * (n + 1) // 2)
    return scipy.linalg.solve_triangular(Lw, b, lower=True, check_finite=False)


def back_substitute(U, b, counter=None):
    """Solve ``U y = b`` for upper-triangular ``U``.

    Only the upper triangle of ``U`` is read. Charges ``N (N + 1) / 2``.
    """
    U, b = _check_triangular(U, b)
    n = b.shape[0]
    _charge(counter, n * (n + 1) // 2)
    return scipy.linalg.solve_triangular(U, b, lower=False, check_finite=False)


def solve_hermitian(A, b):
    """Direct solution of ``A x = b`` for Hermitian positive definite ``A``.

    This is the zero-forcing oracle that every iterative detector is checked
    against.
    """
    b = as_cvector(b)
    L = hermitian_cholesky(A)
    if b.shape[0] != L.shape[0]:
        raise DimensionError(f"rhs length {b.shape[0]} does not match order {L.shape[0]}")
    y = forward_substitute(L, b)
    return back_substitute(L.conj().T, y)


def invert_hermitian(A):
    """Inverse of a Hermitian positive definite matrix via Cholesky.

    Used only for offline preprocessing; never charged to a counter.
    """
    L = hermitian_cholesky(A)
    n = L.shape[0]
    inv = scipy.linalg.cho_solve((L, True), np.eye(n, dtype=np.complex128),
                                 check_finite=False)
    return hermitize(inv)
