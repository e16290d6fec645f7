"""
Tailwise — ES correction integrals
Integrates ratio(y) * phi(y) over [lower, inf) for the delta fractions of
variants I-IV with QUADPACK (scipy.integrate.quad) on a truncated range.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from approx import Variant, Z_C1, Z_C2, delta_ratio, denominator
from config import settings
from errors import DomainError, QuadratureError, SingularityError
from stdnormal import pdf, sf

logger = logging.getLogger("tailwise.quadrature")

SIGN_SCAN_POINTS = 4001
SCALE_POINTS = 401


@dataclass(frozen=True)
class IntegralResult:
    value: float
    abs_error_estimate: float
    evaluations: int


def correction_integrand(variant: Variant, gamma: float, kappa: float):
    """y -> ratio(y) * phi(y); accepts arrays."""
    def integrand(y):
        return delta_ratio(variant, y, gamma, kappa) * pdf(y)
    return integrand


def _guaranteed_from(variant: Variant) -> float:
    # Hermite-root bound past which the denominator is negative for gamma, kappa >= 0
    return Z_C2 if variant is Variant.IV or not variant.kappa_in_denominator else Z_C1


def _ratio_limit(variant: Variant, gamma: float, kappa: float) -> float:
    """Limit of the ratio as y -> inf; only variant II keeps kappa/(4 gamma)."""
    return kappa / (4.0 * gamma) if variant is Variant.II else 0.0


def _ratio_sup(variant: Variant, gamma: float, kappa: float, start: float, stop: float) -> float:
    grid = np.linspace(start, stop, SCALE_POINTS)
    return float(np.max(np.abs(delta_ratio(variant, grid, gamma, kappa))))


def _check_denominator(variant: Variant, gamma: float, kappa: float, lower: float, upper: float) -> None:
    ends = denominator(variant, np.array([lower, upper]), gamma, kappa)
    if np.any(ends == 0) or np.sign(ends[0]) != np.sign(ends[1]):
        raise SingularityError(
            f"variant {variant.name} denominator changes sign on [{lower}, {upper}]",
            denominator=float(ends[0]), bracket=(lower, upper),
        )
    if lower > _guaranteed_from(variant):
        return
    grid = np.linspace(lower, upper, SIGN_SCAN_POINTS)
    values = denominator(variant, grid, gamma, kappa)
    flips = np.nonzero(np.sign(values[:-1]) != np.sign(values[1:]))[0]
    if flips.size:
        i = int(flips[0])
        raise SingularityError(
            f"variant {variant.name} denominator changes sign in [{grid[i]:.6g}, {grid[i + 1]:.6g}]",
            denominator=float(values[i]), bracket=(float(grid[i]), float(grid[i + 1])),
        )


def es_correction_integral(variant: Variant, gamma: float, kappa: float, lower: float,
                           tolerance: Optional[float] = None, panels: int = 1) -> IntegralResult:
    """Integral of ratio(y) phi(y) over [lower, inf).

    Integrates on [lower, min(lower + horizon, cap)] to `tolerance` times the
    largest |ratio| on that range, and adds sup|ratio| (1 - Phi(upper)) over
    the truncated tail to the error estimate.
    `panels` splits the range into that many initial subintervals.
    """
    tolerance = settings.quad_tolerance if tolerance is None else tolerance
    if gamma <= 0:
        raise DomainError("correction integral needs gamma > 0", key="skewness")
    if kappa < 0 and variant is not Variant.IV:
        raise DomainError("correction integral needs kappa >= 0", key="excess_kurtosis")
    if not math.isfinite(lower):
        raise DomainError("lower limit must be finite", key="lower")
    if panels < 1:
        raise DomainError("panels must be positive", key="panels")

    upper = max(min(lower + settings.quad_horizon, settings.quad_cap), lower)
    tail_scale = max(_ratio_sup(variant, gamma, kappa, upper, upper + settings.quad_horizon),
                     abs(_ratio_limit(variant, gamma, kappa)))
    if upper == lower:
        return IntegralResult(0.0, tail_scale * float(sf(lower)), 0)
    _check_denominator(variant, gamma, kappa, lower, upper)
    allowed = tolerance * max(1.0, _ratio_sup(variant, gamma, kappa, lower, upper))

    points = np.linspace(lower, upper, panels + 1)[1:-1] if panels > 1 else None
    value, error, info, *message = integrate.quad(
        correction_integrand(variant, gamma, kappa), lower, upper,
        epsabs=allowed, epsrel=0.0, limit=200, points=points, full_output=1,
    )
    if message:
        logger.warning("quad variant=%s lower=%.6g: %s", variant.name, lower, message[0].splitlines()[0])
    total_error = error + tail_scale * float(sf(upper))
    if total_error > allowed:
        raise QuadratureError(
            f"integral error estimate {total_error:.3e} exceeds tolerance {allowed:.1e}"
        )
    return IntegralResult(float(value), float(total_error), int(info["neval"]))
