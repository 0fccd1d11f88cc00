"""16-QAM modem, detection metrics and convergence-point extraction.

Constellation
-------------
Each group of four bits ``b0 b1 b2 b3`` maps to ``(I + jQ) / sqrt(10)``.
``b0 b1`` select the in-phase level and ``b2 b3`` the quadrature level,
both through the Gray map::

    00 -> -3    01 -> -1    11 -> +1    10 -> +3

so ``0000`` is ``(-3 - 3j) / sqrt(10)`` and ``1010`` is ``(3 + 3j) / sqrt(10)``.
Horizontally or vertically adjacent points differ in exactly one bit and
the 16 points have unit mean energy.
"""

import numpy as np

from .errors import FormatError

_GRAY_LEVELS = {(0, 0): -3, (0, 1): -1, (1, 1): 1, (1, 0): 3}


def _build_table():
    pts = np.empty(16, dtype=np.complex128)
    for idx in range(16):
        b = [(idx >> (3 - k)) & 1 for k in range(4)]
        pts[idx] = complex(_GRAY_LEVELS[b[0], b[1]], _GRAY_LEVELS[b[2], b[3]])
    return pts / np.sqrt(10)


# Indexed by the 4-bit pattern read as a big-endian integer.
QAM16_POINTS = _build_table()
QAM16_BITS = np.array([[(i >> (3 - k)) & 1 for k in range(4)] for i in range(16)],
                      dtype=np.uint8)
MIN_DISTANCE = 2 / np.sqrt(10)


def _as_bits(bits):
    bits = np.asarray(bits)
    if bits.ndim != 1 or bits.size % 4:
        raise FormatError(f"bit block length must be a multiple of 4, got shape {bits.shape}")
    if bits.size and not np.all((bits == 0) | (bits == 1)):
        raise FormatError("bit block may only contain 0 and 1")
    return bits.astype(np.uint8)


def qam16_modulate(bits):
    bits = _as_bits(bits).reshape(-1, 4)
    idx = bits @ np.array([8, 4, 2, 1])
    return QAM16_POINTS[idx]


def qam16_demodulate(x):
    """Hard minimum-distance decisions.

    Exact ties go to the candidate with the lexicographically smallest bit
    pattern; distances within ``1e-12`` of the minimum count as ties.
    """
    x = np.asarray(x, dtype=np.complex128).ravel()
    if not np.all(np.isfinite(x)):
        raise FormatError("cannot demodulate non-finite samples")
    d2 = np.abs(x[:, None] - QAM16_POINTS[None, :]) ** 2
    dmin = d2.min(axis=1, keepdims=True)
    idx = np.argmax(d2 <= dmin + 1e-12, axis=1)
    return QAM16_BITS[idx].ravel()


def random_bits(n_symbols, rng):
    return rng.integers(0, 2, size=4 * n_symbols, dtype=np.uint8)


def relative_residual(system, x):
    num = float(np.linalg.norm(system.A @ x - system.b))
    return _safe_ratio(num, float(np.linalg.norm(system.b)))


def relative_error(x, x_star):
    num = float(np.linalg.norm(np.asarray(x) - np.asarray(x_star)))
    return _safe_ratio(num, float(np.linalg.norm(x_star)))


def _safe_ratio(num, den):
    # zero denominators map to +inf, except 0/0 which is an exact match
    if den > 0:
        return num / den
    return 0.0 if num == 0 else float("inf")


def ber(tx_bits, rx_bits):
    tx = _as_bits(tx_bits)
    rx = _as_bits(rx_bits)
    if tx.shape != rx.shape:
        raise FormatError(f"bit blocks differ in length: {tx.size} vs {rx.size}")
    if tx.size == 0:
        return float("inf")
    return float(np.count_nonzero(tx != rx)) / tx.size


def iterations_to_tolerance(trace, tol):
    """First recorded iteration whose relative residual is ``<= tol``, else ``None``."""
    records = trace.records if hasattr(trace, "records") else trace
    if not records:
        raise ValueError("empty trace")
    for rec in records:
        if rec.rel_residual <= tol:
            return rec.iter
    return None


def macs_to_tolerance(trace, tol):
    for rec in trace.records:
        if rec.rel_residual <= tol:
            return rec.cum_macs
    return None
