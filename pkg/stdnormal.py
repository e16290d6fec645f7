"""
Tailwise — Standard-normal kernel
Density, distribution function, quantile and Hermite-form density derivatives.
All functions accept floats or numpy arrays.
"""
import math

import numpy as np
from scipy import special

from errors import DomainError

SQRT_2PI = math.sqrt(2.0 * math.pi)
INV_SQRT_2PI = 1.0 / SQRT_2PI

# Probabilists' Hermite polynomials He_k; phi^(k)(x) = (-1)^k He_k(x) phi(x)
_HERMITE = {
    1: lambda x: x,
    2: lambda x: x * x - 1.0,
    3: lambda x: x ** 3 - 3.0 * x,
    4: lambda x: x ** 4 - 6.0 * x * x + 3.0,
}


def pdf(x):
    """phi(x) = exp(-x^2/2) / sqrt(2 pi)."""
    return INV_SQRT_2PI * np.exp(-0.5 * np.square(x))


def cdf(x):
    """Phi(x), evaluated through the complementary error function (scipy.special.ndtr)."""
    return special.ndtr(x)


def sf(x):
    """Upper tail 1 - Phi(x), accurate where Phi(x) rounds to 1."""
    return special.ndtr(np.negative(x))


def quantile(p: float) -> float:
    """Inverse of Phi on (0, 1).

    Starts from scipy's ndtri and applies one Newton step against the
    implemented cdf (on the upper tail for p > 1/2).
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile needs p in (0, 1), got {p!r}", key="p")
    x = float(special.ndtri(p))
    if p > 0.5:
        residual = float(sf(x)) - (1.0 - p)
        return x + residual / float(pdf(x))
    residual = float(cdf(x)) - p
    return x - residual / float(pdf(x))


def hermite(k: int, x):
    if k not in _HERMITE:
        raise DomainError(f"Hermite degree must be in 1..4, got {k!r}", key="k")
    return _HERMITE[k](x)


def pdf_derivative(k: int, x):
    """k-th derivative of phi for k in 1..4."""
    sign = -1.0 if k % 2 else 1.0
    return sign * hermite(k, x) * pdf(x)
