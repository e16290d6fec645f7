"""
Tailwise — VaR/ES approximation engine
NPA, Cornish-Fisher, the kurtosis-aware variants I-IV, the GC4 distribution
function, the g_x root function and its Newton-Raphson refinement.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np
from scipy import optimize

from distributions import MomentSummary
from errors import DomainError, IterationError, SingularityError
from stdnormal import cdf, hermite, pdf, quantile, sf

logger = logging.getLogger("tailwise.approx")

SINGULAR_EPS = 1e-12

# Validity thresholds: the KurtI denominator is negative beyond sqrt(3 + sqrt(6)),
# the KurtIV one beyond sqrt(3)
Z_C1 = math.sqrt(3.0 + math.sqrt(6.0))
Z_C2 = math.sqrt(3.0)
C1 = float(cdf(Z_C1))
C2 = float(cdf(Z_C2))


class Variant(Enum):
    I = 1
    II = 2
    III = 3
    IV = 4

    @property
    def kappa_in_numerator(self) -> bool:
        return self in (Variant.I, Variant.II)

    @property
    def kappa_in_denominator(self) -> bool:
        return self in (Variant.I, Variant.III)

    @property
    def threshold(self) -> float:
        """Confidence level above which the denominator sign is guaranteed."""
        return C2 if self is Variant.IV else C1


class ApproxMethod(Enum):
    NPA = "npa"
    CORNISH_FISHER = "cf"
    KURT_I = "kurt1"
    KURT_II = "kurt2"
    KURT_III = "kurt3"
    KURT_IV = "kurt4"

    @property
    def variant(self) -> Optional[Variant]:
        return _VARIANTS.get(self)

    @classmethod
    def parse(cls, text: str) -> "ApproxMethod":
        key = text.strip().lower().replace("-", "_")
        if key in _ALIASES:
            return _ALIASES[key]
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise DomainError(f"unknown method {text!r} (expected one of {choices})", key="methods") from None


_VARIANTS = {
    ApproxMethod.KURT_I: Variant.I,
    ApproxMethod.KURT_II: Variant.II,
    ApproxMethod.KURT_III: Variant.III,
    ApproxMethod.KURT_IV: Variant.IV,
}
_ALIASES = {
    "cornish_fisher": ApproxMethod.CORNISH_FISHER,
    "kurti": ApproxMethod.KURT_I,
    "kurtii": ApproxMethod.KURT_II,
    "kurtiii": ApproxMethod.KURT_III,
    "kurtiv": ApproxMethod.KURT_IV,
}

DEFAULT_METHODS = (ApproxMethod.NPA, ApproxMethod.CORNISH_FISHER, ApproxMethod.KURT_I, ApproxMethod.KURT_IV)


@dataclass
class RiskEstimate:
    """An approximate VaR or ES with the validity metadata of its method."""
    value: float
    method: ApproxMethod
    alpha: float
    measure: str = "var"
    denominator_value: Optional[float] = None
    in_validity_region: bool = True
    notes: List[str] = field(default_factory=list)


# ── GC4 and the root function g_x ───────────────────────────────────────────

def _gc4_correction(x, gamma, kappa):
    """gamma/6 (1 - x^2) + kappa/24 (3x - x^3), the GC4 factor multiplying phi."""
    return -gamma / 6.0 * hermite(2, x) - kappa / 24.0 * hermite(3, x)


def gc4(x, gamma: float, kappa: float):
    """Four-term Gram-Charlier approximation of the standardized CDF."""
    return cdf(x) + _gc4_correction(x, gamma, kappa) * pdf(x)


def gc4_tail(x, gamma: float, kappa: float):
    """1 - GC4(x), evaluated without cancellation in the upper tail."""
    return sf(x) - _gc4_correction(x, gamma, kappa) * pdf(x)


def gc4_monotone_from(gamma: float, kappa: float) -> float:
    """Largest real root of GC4'(x)/phi(x); GC4 increases to the right of it.

    Returns -inf when the derivative quartic has no real root.
    """
    coeffs = [kappa / 24.0, gamma / 6.0, -kappa / 4.0, -gamma / 2.0, kappa / 8.0 + 1.0]
    roots = np.roots(coeffs)
    real = roots[np.abs(roots.imag) <= 1e-9 * np.maximum(1.0, np.abs(roots.real))].real
    return float(real.max()) if real.size else -math.inf


def g(x: float, delta: float, gamma: float, kappa: float) -> float:
    """g_x(delta) = Phi(x) - GC4(x + delta), taken as a difference of upper tails when x + delta > -x."""
    y = x + delta
    if x + y > 0:
        return float(gc4_tail(y, gamma, kappa) - sf(x))
    return float(cdf(x) - gc4(y, gamma, kappa))


def g_prime(x: float, delta: float, gamma: float, kappa: float) -> float:
    y = x + delta
    return float(denominator(Variant.I, y, gamma, kappa) * pdf(y))


# ── delta corrections ───────────────────────────────────────────────────────

def numerator(variant: Variant, x, gamma: float, kappa: float):
    value = -gamma / 6.0 * hermite(2, x)
    if variant.kappa_in_numerator:
        value = value - kappa / 24.0 * hermite(3, x)
    return value


def denominator(variant: Variant, x, gamma: float, kappa: float):
    value = -1.0 - gamma / 6.0 * hermite(3, x)
    if variant.kappa_in_denominator:
        value = value - kappa / 24.0 * hermite(4, x)
    return value


def delta_ratio(variant: Variant, x, gamma: float, kappa: float):
    """Unchecked numerator/denominator, vectorised for integration."""
    return numerator(variant, x, gamma, kappa) / denominator(variant, x, gamma, kappa)


def delta_correction(variant: Variant, x: float, gamma: float, kappa: float) -> float:
    num = float(numerator(variant, x, gamma, kappa))
    den = float(denominator(variant, x, gamma, kappa))
    if abs(den) < SINGULAR_EPS * (1.0 + abs(num)):
        raise SingularityError(
            f"variant {variant.name} denominator vanishes at x={x!r} (value {den!r})",
            denominator=den,
        )
    return num / den


def newton_raphson_delta(x: float, gamma: float, kappa: float, k: int) -> float:
    """k-th Newton-Raphson iterate for the root of g_x, started at 0."""
    if k < 0:
        raise DomainError("iteration count must be nonnegative", key="k")
    delta = 0.0
    for step in range(1, k + 1):
        slope = g_prime(x, delta, gamma, kappa)
        if slope == 0.0 or not math.isfinite(slope):
            raise IterationError(f"g' vanishes at step {step} (delta={delta!r})", step=step)
        delta -= g(x, delta, gamma, kappa) / slope
        if not math.isfinite(delta):
            raise IterationError(f"iterate diverged at step {step}", step=step)
    return delta


def npa_cdf(y, gamma: float):
    """NPA distribution function of the standardized loss, inverse of z + gamma/6 (z^2 - 1)."""
    if gamma <= 0:
        raise DomainError("NPA distribution function needs gamma > 0", key="skewness")
    radicand = 9.0 / gamma ** 2 + 6.0 * np.asarray(y, dtype=float) / gamma + 1.0
    if np.any(radicand < 0):
        raise DomainError("NPA distribution function undefined below -3/(2 gamma) - gamma/6", key="y")
    return cdf(np.sqrt(radicand) - 3.0 / gamma)


# ── VaR / ES ────────────────────────────────────────────────────────────────

def _check(method: ApproxMethod, m: MomentSummary, alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}", key="alpha")
    variant = method.variant
    if variant is None:
        return
    if m.skewness <= 0:
        raise DomainError(f"{method.value} needs positive skewness, got {m.skewness!r}", key="skewness")
    if m.excess_kurtosis < 0 and variant is not Variant.IV:
        raise DomainError(
            f"{method.value} needs nonnegative excess kurtosis, got {m.excess_kurtosis!r}",
            key="excess_kurtosis",
        )


def var_approx(method: ApproxMethod, m: MomentSummary, alpha: float) -> RiskEstimate:
    _check(method, m, alpha)
    z = quantile(alpha)
    gamma, kappa = m.skewness, m.excess_kurtosis
    estimate = RiskEstimate(value=math.nan, method=method, alpha=alpha)

    if method is ApproxMethod.NPA:
        correction = gamma / 6.0 * (z * z - 1.0)
    elif method is ApproxMethod.CORNISH_FISHER:
        correction = (gamma / 6.0 * (z * z - 1.0)
                      + kappa / 24.0 * (z ** 3 - 3.0 * z)
                      - gamma ** 2 / 36.0 * (2.0 * z ** 3 - 5.0 * z))
    else:
        variant = method.variant
        estimate.denominator_value = float(denominator(variant, z, gamma, kappa))
        estimate.in_validity_region = alpha > variant.threshold
        if not estimate.in_validity_region:
            estimate.notes.append(f"alpha below validity threshold {variant.threshold:.7f}")
        correction = delta_correction(variant, z, gamma, kappa)

    estimate.value = m.mean + m.sd * (z + correction)
    return estimate


def es_approx(method: ApproxMethod, m: MomentSummary, alpha: float,
              tolerance: Optional[float] = None) -> RiskEstimate:
    _check(method, m, alpha)
    z = quantile(alpha)
    gamma, kappa = m.skewness, m.excess_kurtosis
    tail = 1.0 - alpha
    density = float(pdf(z))
    estimate = RiskEstimate(value=math.nan, method=method, alpha=alpha, measure="es")

    if method is ApproxMethod.NPA:
        estimate.value = m.mean + m.sd * density / tail * (1.0 + gamma * z / 6.0)
        return estimate
    if method is ApproxMethod.CORNISH_FISHER:
        factor = (1.0 + gamma * z / 6.0
                  + (z * z - 1.0) * kappa / 24.0
                  + (1.0 - 2.0 * z * z) * gamma ** 2 / 36.0)
        estimate.value = m.mean + m.sd * density / tail * factor
        return estimate

    variant = method.variant
    if alpha <= variant.threshold:
        raise DomainError(
            f"{method.value} ES needs alpha > {variant.threshold:.7f}, got {alpha!r}", key="alpha"
        )
    # the integral is built on the delta fractions above
    from quadrature import es_correction_integral

    integral = es_correction_integral(variant, gamma, kappa, z, tolerance=tolerance)
    estimate.denominator_value = float(denominator(variant, z, gamma, kappa))
    estimate.value = m.mean + m.sd / tail * (density + integral.value)
    estimate.notes.append(
        f"integral={integral.value:.6e} err<={integral.abs_error_estimate:.1e} evals={integral.evaluations}"
    )
    return estimate


def nr_var(m: MomentSummary, alpha: float, k: int) -> float:
    """mean + sd (z + delta^(k)(z)), the Newton-Raphson refined VaR."""
    _check(ApproxMethod.KURT_I, m, alpha)
    z = quantile(alpha)
    return m.mean + m.sd * (z + newton_raphson_delta(z, m.skewness, m.excess_kurtosis, k))


def asymptotic_envelope(m: MomentSummary, alpha: float) -> float:
    """mean + sd sqrt(-2 log(1 - alpha)), the common tail behaviour of the variants."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}", key="alpha")
    return m.mean + m.sd * math.sqrt(-2.0 * math.log1p(-alpha))


def blowup_alpha(m: MomentSummary, alpha_min: float = 0.95,
                 alpha_max: float = 1.0 - 1e-12, points: int = 2000) -> Optional[float]:
    """Smallest alpha in (alpha_min, alpha_max) where the KurtI denominator changes sign."""
    gamma, kappa = m.skewness, m.excess_kurtosis
    zs = np.linspace(quantile(alpha_min), quantile(alpha_max), points)
    values = denominator(Variant.I, zs, gamma, kappa)
    crossings = np.nonzero(np.sign(values[:-1]) != np.sign(values[1:]))[0]
    if crossings.size == 0:
        return None
    i = int(crossings[0])
    root = optimize.brentq(lambda z: float(denominator(Variant.I, z, gamma, kappa)),
                           zs[i], zs[i + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps)
    alpha = float(cdf(root))
    logger.debug("KurtI denominator root z=%.12f alpha=%.12f", root, alpha)
    return alpha
