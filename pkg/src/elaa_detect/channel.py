"""Near-field ELAA geometry and Rician channel realizations.

The service array is a uniform linear array (ULA) on the x axis, centred at
the origin. User equipments (UEs) sit on a parallel line at
``y = user_line_distance``; each UE carries a small ULA of
``antennas_per_user`` elements with half-wavelength spacing. Every
service/user antenna pair gets its own distance, so the LoS phase follows
the spherical wavefront rather than a planar approximation.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError, GeometryError
from .streams import as_generator

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class GeometryConfig:
    """Layout parameters.

    Parameters
    ----------
    carrier_freq : float
        Carrier frequency in Hz.
    num_service_antennas : int
        Number of ELAA elements ``M``.
    num_users : int
        Number of UEs.
    antennas_per_user : int
        Antennas per UE; ``N = num_users * antennas_per_user``.
    user_line_distance : float
        Perpendicular distance between the ELAA and the user line, metres.
    user_spread : float
        Distance between the two outermost UE centres, metres.
    element_spacing : float
        Service-array spacing in wavelengths.
    """

    carrier_freq: float = 3.5e9
    num_service_antennas: int = 512
    num_users: int = 8
    antennas_per_user: int = 4
    user_line_distance: float = 30.0
    user_spread: float = 10.0
    element_spacing: float = 0.5

    def __post_init__(self):
        for name in ("carrier_freq", "num_service_antennas", "num_users",
                     "antennas_per_user", "user_line_distance", "element_spacing"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.user_spread < 0 or (self.num_users > 1 and self.user_spread == 0):
            raise ValueError(f"user_spread must be positive, got {self.user_spread}")
        if self.num_service_antennas < self.num_user_antennas:
            raise ValueError(f"need M >= N, got M={self.num_service_antennas}, "
                             f"N={self.num_user_antennas}")

    @property
    def num_user_antennas(self):
        return self.num_users * self.antennas_per_user

    @property
    def wavelength(self):
        return SPEED_OF_LIGHT / self.carrier_freq


@dataclass(frozen=True)
class Geometry:
    service_positions: np.ndarray  # (M, 2) metres
    user_positions: np.ndarray  # (N, 2) metres
    wavelength: float


@dataclass(frozen=True)
class PathlossModel:
    """Amplitude pathloss ``alpha / d**beta``.

    ``alpha=None`` selects the free-space value ``wavelength / (4 pi)``.
    With ``normalize_columns`` every user's pathloss profile is scaled to
    unit Euclidean norm across the service array.
    """

    alpha: Optional[float] = None
    beta: float = 1.0
    normalize_columns: bool = True

    def __post_init__(self):
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.beta >= 0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")

    def resolved_alpha(self, wavelength):
        if self.alpha is None and wavelength is None:
            raise ValueError("free-space alpha needs the wavelength")
        return wavelength / (4 * np.pi) if self.alpha is None else self.alpha


@dataclass(frozen=True)
class ChannelRealization:
    H_los: np.ndarray
    H_nlos: np.ndarray
    H: np.ndarray
    kappa: float
    distances: Optional[np.ndarray] = None
    column_scales: Optional[np.ndarray] = None

    @property
    def shape(self):
        return self.H.shape


def _centered(count, step):
    return (np.arange(count) - (count - 1) / 2) * step


def build_geometry(cfg):
    lam = cfg.wavelength
    service_x = _centered(cfg.num_service_antennas, cfg.element_spacing * lam)
    service = np.column_stack([service_x, np.zeros_like(service_x)])

    if cfg.num_users > 1:
        centers = np.linspace(-cfg.user_spread / 2, cfg.user_spread / 2, cfg.num_users)
    else:
        centers = np.zeros(1)
    offsets = _centered(cfg.antennas_per_user, lam / 2)
    user_x = (centers[:, None] + offsets[None, :]).ravel()
    users = np.column_stack([user_x, np.full_like(user_x, cfg.user_line_distance)])
    return Geometry(service, users, lam)


def pairwise_distances(geometry):
    """``(M, N)`` matrix of Euclidean distances between array and user antennas."""
    diff = geometry.service_positions[:, None, :] - geometry.user_positions[None, :, :]
    d = np.hypot(diff[..., 0], diff[..., 1])
    if np.any(d <= 0):
        m, n = np.argwhere(d <= 0)[0]
        raise GeometryError(f"service antenna {m} coincides with user antenna {n}")
    return d


def pathloss_amplitude(d, pl, wavelength):
    """Pathloss magnitudes and the per-column scales applied to them."""
    amp = pl.resolved_alpha(wavelength) / d**pl.beta
    if pl.normalize_columns:
        scales = 1.0 / np.linalg.norm(amp, axis=0)
    else:
        scales = np.ones(d.shape[1])
    return amp * scales, scales


def los_matrix(d, wavelength, pl):
    amp, _ = pathloss_amplitude(d, pl, wavelength)
    return amp * np.exp(-2j * np.pi * d / wavelength)


def nlos_matrix(d, pl, rng, wavelength=None):
    """Rayleigh component with circularly-symmetric CN(0, 1) small-scale fading.

    ``rng`` is a ``numpy.random.Generator`` or an integer seed.
    """
    rng = as_generator(rng)
    amp, _ = pathloss_amplitude(d, pl, wavelength)
    w = rng.standard_normal(d.shape + (2,))
    omega = (w[..., 0] + 1j * w[..., 1]) / np.sqrt(2)
    return amp * omega


def rician_combine(H_los, H_nlos, kappa, distances=None, column_scales=None):
    H_los = np.asarray(H_los, dtype=np.complex128)
    H_nlos = np.asarray(H_nlos, dtype=np.complex128)
    if H_los.shape != H_nlos.shape:
        raise DimensionError(f"LoS {H_los.shape} and NLoS {H_nlos.shape} shapes differ")
    if not kappa >= 0:
        raise ValueError(f"kappa must be non-negative, got {kappa}")
    H = np.sqrt(kappa / (kappa + 1)) * H_los + np.sqrt(1 / (kappa + 1)) * H_nlos
    return ChannelRealization(H_los, H_nlos, H, float(kappa), distances, column_scales)


def generate_channel(cfg, pl, kappa, rng):
    """Draw one channel realization for a layout.

    The LoS part is deterministic; only the NLoS part consumes ``rng``.
    """
    g = build_geometry(cfg)
    d = pairwise_distances(g)
    _, scales = pathloss_amplitude(d, pl, g.wavelength)
    H_los = los_matrix(d, g.wavelength, pl)
    H_nlos = nlos_matrix(d, pl, rng, g.wavelength)
    return rician_combine(H_los, H_nlos, kappa, distances=d, column_scales=scales)


def identity_channel(M, N):
    """Degenerate channel with orthonormal columns (Gram matrix = I).

    Both components equal the same orthonormal ``E`` so ``H = E`` holds at
    ``kappa = 0``, and the static component is ``I`` for every ``kappa``.
    """
    E = np.eye(M, N, dtype=np.complex128)
    return rician_combine(E, E, 0.0)
