"""Detection linear system and the static channel component.

For a received vector ``r = H s + v`` the zero-forcing estimate solves
``A x = b`` with ``A = H^H H`` and ``b = H^H r``. When the array grows, the
Gram matrix of a Rician channel concentrates around

    A_inf = kappa/(kappa+1) H_los^H H_los + 1/(kappa+1) I

whose inverse ``psi`` depends only on the (static) LoS geometry and can be
computed offline.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError
from .linalg import as_cmatrix, as_cvector, fro_norm, hermitize, invert_hermitian
from .streams import as_generator


@dataclass(frozen=True)
class GramSystem:
    A: np.ndarray
    b: np.ndarray
    psi: Optional[np.ndarray] = None
    a_inf: Optional[np.ndarray] = None
    ridge: float = 0.0

    @property
    def n(self):
        return self.b.shape[0]

    def with_psi(self, psi):
        return GramSystem(self.A, self.b, np.asarray(psi, dtype=np.complex128),
                          self.a_inf, self.ridge)


@dataclass(frozen=True)
class Splitting:
    """``A = diag(D) + L + L^H`` with real ``D`` and strictly lower ``L``."""

    D: np.ndarray
    L: np.ndarray

    def reconstruct(self):
        return np.diag(self.D).astype(np.complex128) + self.L + self.L.conj().T


@dataclass(frozen=True)
class TxInstance:
    s: np.ndarray
    v_sigma2: float
    r: np.ndarray
    v: np.ndarray


def transmit(H, s, v_sigma2, rng):
    """Pass symbols through the channel and add CN(0, v_sigma2 I) noise."""
    H = as_cmatrix(H)
    s = as_cvector(s)
    if H.shape[1] != s.shape[0]:
        raise DimensionError(f"channel {H.shape} cannot carry {s.shape[0]} symbols")
    if v_sigma2 < 0:
        raise ValueError(f"noise variance must be non-negative, got {v_sigma2}")
    rng = as_generator(rng)
    w = rng.standard_normal((H.shape[0], 2))
    v = np.sqrt(v_sigma2 / 2) * (w[:, 0] + 1j * w[:, 1])
    return TxInstance(s, float(v_sigma2), H @ s + v, v)


def gram_system(H, r, ridge=0.0):
    """``A = H^H H + ridge I`` and ``b = H^H r``.

    Building ``A`` and ``b`` is preprocessing and is not charged to any
    per-iteration counter.
    """
    H = as_cmatrix(H)
    r = as_cvector(r)
    if H.shape[0] != r.shape[0]:
        raise DimensionError(f"channel {H.shape} and received vector {r.shape} disagree")
    if ridge < 0:
        raise ValueError(f"ridge must be non-negative, got {ridge}")
    A = H.conj().T @ H
    if ridge:
        A = A + ridge * np.eye(A.shape[0])
    return GramSystem(hermitize(A), H.conj().T @ r, ridge=float(ridge))


def asymptotic_gram(H_los, kappa):
    """Large-array limit of the Gram matrix for a column-normalized channel."""
    H_los = as_cmatrix(H_los)
    if not kappa >= 0:
        raise ValueError(f"kappa must be non-negative, got {kappa}")
    n = H_los.shape[1]
    los = H_los.conj().T @ H_los
    return hermitize((kappa / (kappa + 1)) * los + (1 / (kappa + 1)) * np.eye(n))


def static_component(H_los, kappa, ridge=0.0):
    """``psi = inv(A_inf + ridge I)``, computed once per geometry."""
    a_inf = asymptotic_gram(H_los, kappa)
    if ridge:
        a_inf = a_inf + ridge * np.eye(a_inf.shape[0])
    return invert_hermitian(a_inf)


def detection_system(realization, r, ridge=0.0):
    """Gram system for a realization with ``psi`` and ``a_inf`` attached."""
    sys = gram_system(realization.H, r, ridge)
    a_inf = asymptotic_gram(realization.H_los, realization.kappa)
    psi = static_component(realization.H_los, realization.kappa, ridge)
    return GramSystem(sys.A, sys.b, psi, a_inf, sys.ridge)


def split(A):
    A = as_cmatrix(A)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"splitting needs a square matrix, got {A.shape}")
    D = np.real(np.diagonal(A)).copy()
    return Splitting(D, np.tril(A, -1))


def four_term_expansion(H_los, H_nlos, kappa):
    """LoS Gram, NLoS Gram and the two cross terms, each with its Rician weight.

    The four matrices sum to ``H^H H`` for ``H`` combined at the same
    ``kappa``.
    """
    H_los = as_cmatrix(H_los)
    H_nlos = as_cmatrix(H_nlos)
    if H_los.shape != H_nlos.shape:
        raise DimensionError(f"LoS {H_los.shape} and NLoS {H_nlos.shape} shapes differ")
    w_los = kappa / (kappa + 1)
    w_nlos = 1 / (kappa + 1)
    w_cross = np.sqrt(kappa) / (kappa + 1)
    cross = H_los.conj().T @ H_nlos
    return (
        w_los * (H_los.conj().T @ H_los),
        w_nlos * (H_nlos.conj().T @ H_nlos),
        w_cross * cross,
        w_cross * cross.conj().T,
    )


def gram_deviation(A, a_inf):
    """Relative Frobenius distance ``||A - A_inf|| / ||A_inf||``."""
    return fro_norm(A - a_inf) / fro_norm(a_inf)
