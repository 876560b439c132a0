"""Small numerical kernels shared by the state and rate modules.

Everything here is pure and branch-stable near removable singularities;
the series cutovers keep relative error at the 1e-13 level or better.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erf as _erf

SQRT_PI = math.sqrt(math.pi)


def sinc(x):
    """sin(x)/x with sinc(0) = 1 (unnormalized convention).

    Series branch below |x| = 1e-4 avoids the 0/0 at the phase-matching
    center.
    """
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    x2 = x * x
    series = 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    safe = np.where(small, 1.0, x)
    out = np.where(small, series, np.sin(safe) / safe)
    if out.ndim == 0:
        return float(out)
    return out


def erf_ratio(z):
    """sqrt(pi) * Erf(z/2) / z, the even entire function with value 1 at 0.

    This is the two-photon spectral overlap of the biphoton with its
    frequency-swapped copy at dimensionless pump width z.
    """
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-2
    z2 = z * z
    series = 1.0 - z2 / 12.0 + z2 * z2 / 160.0 - z2 * z2 * z2 / 2688.0
    safe = np.where(small, 1.0, z)
    out = np.where(small, series, SQRT_PI * _erf(0.5 * safe) / safe)
    if out.ndim == 0:
        return float(out)
    return out


def one_minus_erf_ratio(s: float) -> float:
    """1 - erf_ratio(s), computed without cancellation for small s."""
    if abs(s) < 3e-2:
        s2 = s * s
        return s2 / 12.0 - s2 * s2 / 160.0 + s2 * s2 * s2 / 2688.0
    return 1.0 - erf_ratio(s)
