"""User-to-edge wireless channel: mean interference, SINR, Shannon bitrate."""

from __future__ import annotations

import math

import numpy as np


def mean_interference(n_attached: int, ac: int, P: float, h_bar: float) -> float:
    """Mean interference power (W) at an edge site.

    Users beyond one per access point interfere; the ratio is real-valued.
    """
    if ac < 1:
        raise ValueError("access-point count must be >= 1")
    if n_attached < 0:
        raise ValueError("attached-user count must be >= 0")
    ratio = n_attached / ac
    if ratio > 1:
        return (ratio - 1) * P * h_bar
    return 0.0


def sinr(P: float, h_bar: float, sigma2: float, i_bar: float) -> float:
    if sigma2 <= 0:
        raise ValueError("noise power must be > 0")
    if i_bar < 0:
        raise ValueError("interference must be >= 0")
    return P * h_bar / (sigma2 + i_bar)


def wireless_bitrate(W: float, sinr_value: float) -> float:
    """Shannon capacity in bit/s for bandwidth ``W`` (Hz)."""
    if W <= 0:
        raise ValueError("bandwidth must be > 0")
    if sinr_value < 0:
        raise ValueError("SINR must be >= 0")
    return W * math.log2(1.0 + sinr_value)


def site_bitrates(n_attached: np.ndarray, ac: np.ndarray, P: float, h_bar: float, sigma2: float, W: float) -> np.ndarray:
    """Vectorized bitrate per edge site; same formulas as the scalar functions."""
    n_attached = np.asarray(n_attached, dtype=float)
    ac = np.asarray(ac, dtype=float)
    if np.any(ac < 1):
        raise ValueError("access-point count must be >= 1")
    ratio = n_attached / ac
    i_bar = np.where(ratio > 1, (ratio - 1) * P * h_bar, 0.0)
    return W * np.log2(1.0 + P * h_bar / (sigma2 + i_bar))
