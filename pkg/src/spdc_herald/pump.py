"""Pump profiles chi(t) for the three driving scenarios.

Times are in units of 1/kappa (kappa = 1). Each profile exposes the running
integral ``X(t) = int_{-inf}^t chi``, which is all the Bogoliubov kernels need.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import ProfileError

#: Half-width, in units of sigma, outside which the Gaussian pump is dropped.
GAUSSIAN_SUPPORT = 8.0


@dataclass(frozen=True)
class Delta:
    """Impulsive pump ``chi(t) = x delta(t)`` located at t = 0."""

    x: float

    def __post_init__(self):
        if not self.x >= 0:
            raise ProfileError("pump strength x must be >= 0")

    kind = "delta"

    def support(self):
        return 0.0, 0.0


@dataclass(frozen=True)
class Gaussian:
    """Gaussian pump of total area x and standard deviation sigma."""

    x: float
    sigma: float

    def __post_init__(self):
        if not self.x >= 0:
            raise ProfileError("pump strength x must be >= 0")
        if not self.sigma > 0:
            raise ProfileError("sigma must be > 0")

    kind = "gaussian"

    def support(self):
        half = GAUSSIAN_SUPPORT * self.sigma
        return -half, half


@dataclass(frozen=True)
class CW:
    """Continuous pump ``chi(t) = x kappa``."""

    x: float

    def __post_init__(self):
        if not self.x >= 0:
            raise ProfileError("pump strength x must be >= 0")

    kind = "cw"

    def support(self):
        return -np.inf, np.inf


PumpProfile = Delta | Gaussian | CW


def chi_at(profile: PumpProfile, t):
    """Pointwise pump rate chi(t)."""
    t = np.asarray(t, dtype=float)
    if isinstance(profile, Delta):
        raise ProfileError(
            "pointwise evaluation undefined for a delta pump; use integrated_chi"
        )
    if isinstance(profile, CW):
        return np.full_like(t, profile.x)[()]
    s = profile.sigma
    return (profile.x * np.exp(-0.5 * (t / s) ** 2) / np.sqrt(2 * np.pi * s * s))[()]


def integrated_chi(profile: PumpProfile, t1, t2):
    """Integral of chi over [t1, t2].

    The delta impulse counts when ``t1 < 0 <= t2``.
    """
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    if np.any(t1 > t2):
        raise ProfileError("integrated_chi requires t1 <= t2")
    if isinstance(profile, Delta):
        return (profile.x * ((t1 < 0) & (t2 >= 0))).astype(float)[()]
    if isinstance(profile, CW):
        return (profile.x * (t2 - t1))[()]
    s = profile.sigma
    # ndtr differences lose precision far in the upper tail; use the mirrored form there
    upper = profile.x * (ndtr(-t1 / s) - ndtr(-t2 / s))
    lower = profile.x * (ndtr(t2 / s) - ndtr(t1 / s))
    return np.where(t1 > 0, upper, lower)[()]


def running_integral(profile: PumpProfile, t, origin: float = 0.0, side: str = "right"):
    """``X(t)``: integral of chi from the far past (or from ``origin`` for CW).

    ``side="left"`` returns the limit from below, which differs from the
    default only at the delta impulse.
    """
    t = np.asarray(t, dtype=float)
    if isinstance(profile, Delta):
        if side == "left":
            return (profile.x * (t > 0)).astype(float)[()]
        return (profile.x * (t >= 0)).astype(float)[()]
    if isinstance(profile, CW):
        return (profile.x * (t - origin))[()]
    return (profile.x * ndtr(t / profile.sigma))[()]
