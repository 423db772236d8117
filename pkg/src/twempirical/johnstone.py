"""Johnstone's (2008) Tracy-Widom centering and scaling for the non-singular case."""
import numpy as np

from .errors import ValidationError
from .tracywidom import TWLocationScale


def johnstone_params(p: int, m: int, n: int) -> TWLocationScale:
    """Limiting law of ``logit(lam)`` for A ~ W_p(I, m), B ~ W_p(I, n), A non-singular.

    Returns the closed-form ``(mu, sigma)`` such that
    ``(logit(lam) - mu) / sigma`` is approximately TW(1).
    """
    if min(p, m, n) < 1 or m < p:
        raise ValidationError("need positive p, m, n with m >= p")
    total = m + n + 1.0
    gamma = 2.0 * np.arcsin(np.sqrt((min(p, n) - 0.5) / total))
    phi = 2.0 * np.arcsin(np.sqrt((max(p, n) - 0.5) / total))
    mu = 2.0 * np.log(np.tan((phi + gamma) / 2.0))
    sigma3 = 16.0 / total**2 / (np.sin(phi + gamma) ** 2 * np.sin(phi) * np.sin(gamma))
    return TWLocationScale(float(mu), float(np.cbrt(sigma3)), "johnstone")
