"""
Tailwise — Parametric loss families
Moment summaries, exact VaR/ES closed forms, compound-moment algebra and the
numeric-cumulant oracle. Specs are immutable and serialise to a flat
key=value form shared by the CLI, config files and the HTTP surface.
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, ClassVar, Union

from errors import DomainError, NoClosedFormError, UnsupportedSpecError
from stdnormal import quantile, sf
from utils import parse_key_values, parse_number


class Family(Enum):
    EXPONENTIAL = "exponential"
    PARETO = "pareto"
    LOGNORMAL = "lognormal"
    COMPOUND_POISSON = "compound_poisson"
    COMPOUND_GENERAL = "compound_general"


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}", key="alpha")


def _positive(value: float, key: str) -> float:
    if not (math.isfinite(value) and value > 0):
        raise DomainError(f"{key} must be positive and finite, got {value!r}", key=key)
    return float(value)


# ── Summaries ───────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class MomentSummary:
    """Mean, standard deviation, skewness and excess kurtosis of a loss."""
    mean: float
    sd: float
    skewness: float
    excess_kurtosis: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.mean, self.sd, self.skewness, self.excess_kurtosis)):
            raise DomainError("moment summary must be finite")
        if self.sd <= 0:
            raise DomainError(f"sd must be positive, got {self.sd!r}", key="sd")
        floor = self.skewness ** 2 - 2.0
        if self.excess_kurtosis < floor - 1e-9 * max(1.0, abs(floor)):
            raise DomainError(
                f"infeasible moments: excess kurtosis {self.excess_kurtosis!r} "
                f"below skewness^2 - 2 = {floor!r}",
                key="excess_kurtosis",
            )

    @property
    def variance(self) -> float:
        return self.sd * self.sd

    @property
    def relative_sd(self) -> float:
        """sd / mean (reported as the relative standard deviation)."""
        return self.sd / self.mean

    def affine(self, scale: float, shift: float) -> "MomentSummary":
        """Summary of scale*S + shift for scale > 0."""
        if scale <= 0:
            raise DomainError("affine scale must be positive", key="scale")
        return MomentSummary(scale * self.mean + shift, scale * self.sd,
                             self.skewness, self.excess_kurtosis)


@dataclass(frozen=True)
class ComponentSummary:
    """Frequency or severity summary feeding the general compound formulas."""
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.mean, self.variance, self.skewness, self.excess_kurtosis)):
            raise DomainError("component summary must be finite")
        if self.variance < 0:
            raise DomainError(f"variance must be nonnegative, got {self.variance!r}", key="variance")

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)


def poisson_summary(lam: float) -> ComponentSummary:
    lam = _positive(lam, "lambda")
    return ComponentSummary(lam, lam, lam ** -0.5, 1.0 / lam)


# ── Loss specs ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Exponential:
    rate: float
    family: ClassVar[Family] = Family.EXPONENTIAL

    def __post_init__(self):
        _positive(self.rate, "lambda")


@dataclass(frozen=True)
class ParetoI:
    shape: float
    scale: float
    family: ClassVar[Family] = Family.PARETO

    def __post_init__(self):
        if not (math.isfinite(self.shape) and self.shape > 4):
            raise DomainError(
                f"Pareto shape a={self.shape!r}: fourth moment undefined (need a > 4)", key="a"
            )
        _positive(self.scale, "c")


@dataclass(frozen=True)
class Lognormal:
    mu: float
    sigma_sq: float
    family: ClassVar[Family] = Family.LOGNORMAL

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise DomainError(f"mu must be finite, got {self.mu!r}", key="mu")
        _positive(self.sigma_sq, "sigma_sq")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma_sq)


Severity = Union[Exponential, Lognormal]


@dataclass(frozen=True)
class CompoundPoisson:
    frequency: float
    severity: Severity
    family: ClassVar[Family] = Family.COMPOUND_POISSON

    def __post_init__(self):
        _positive(self.frequency, "lambda")
        if not isinstance(self.severity, (Exponential, Lognormal)):
            raise DomainError("compound Poisson severity must be exponential or lognormal",
                              key="sev_family")


@dataclass(frozen=True)
class CompoundGeneral:
    frequency: ComponentSummary
    severity: ComponentSummary
    family: ClassVar[Family] = Family.COMPOUND_GENERAL

    def __post_init__(self):
        if self.frequency.mean == 0:
            raise DomainError("frequency mean must be nonzero", key="freq_mean")
        if self.severity.variance == 0:
            raise DomainError("severity variance must be nonzero", key="sev_var")


LossSpec = Union[Exponential, ParetoI, Lognormal, CompoundPoisson, CompoundGeneral]


# ── Moments ─────────────────────────────────────────────────────────────────

def lognormal_raw_moment(mu: float, sigma_sq: float, k: int) -> float:
    """E(X^k) = exp(k mu + k^2 sigma^2 / 2)."""
    if sigma_sq <= 0:
        raise DomainError("sigma_sq must be positive", key="sigma_sq")
    if k < 0:
        raise DomainError("moment order must be nonnegative", key="k")
    return math.exp(k * mu + k * k * sigma_sq / 2.0)


def raw_moment(spec: LossSpec, k: int) -> float:
    """k-th raw moment of a single-claim family."""
    if isinstance(spec, Exponential):
        return math.factorial(k) / spec.rate ** k
    if isinstance(spec, Lognormal):
        return lognormal_raw_moment(spec.mu, spec.sigma_sq, k)
    if isinstance(spec, ParetoI):
        if k >= spec.shape:
            raise DomainError(f"Pareto moment of order {k} undefined for a={spec.shape}", key="a")
        return spec.shape * spec.scale ** k / (spec.shape - k)
    raise UnsupportedSpecError(f"no raw moments for {spec.family.value}")


def central_summary(spec: LossSpec) -> ComponentSummary:
    """Mean, variance, skewness and excess kurtosis of a single-claim family."""
    if isinstance(spec, Exponential):
        return ComponentSummary(1.0 / spec.rate, 1.0 / spec.rate ** 2, 2.0, 6.0)
    if isinstance(spec, ParetoI):
        a, c = spec.shape, spec.scale
        return ComponentSummary(
            mean=a * c / (a - 1.0),
            variance=a * c * c / ((a - 1.0) ** 2 * (a - 2.0)),
            skewness=2.0 * (1.0 + a) / (a - 3.0) * math.sqrt((a - 2.0) / a),
            excess_kurtosis=6.0 * (a ** 3 + a ** 2 - 6.0 * a - 2.0) / (a * (a - 3.0) * (a - 4.0)),
        )
    if isinstance(spec, Lognormal):
        s2 = spec.sigma_sq
        spread = math.expm1(s2)
        return ComponentSummary(
            mean=math.exp(spec.mu + s2 / 2.0),
            variance=spread * math.exp(2.0 * spec.mu + s2),
            skewness=(math.exp(s2) + 2.0) * math.sqrt(spread),
            excess_kurtosis=math.exp(4 * s2) + 2.0 * math.exp(3 * s2) + 3.0 * math.exp(2 * s2) - 6.0,
        )
    raise UnsupportedSpecError(f"{spec.family.value} is not a single-claim family")


def _cumulants(freq: ComponentSummary, sev: ComponentSummary):
    """Second to fourth cumulants of the random sum (the Ã form for the fourth)."""
    en, dn = freq.mean, freq.variance
    ex, dx = sev.mean, sev.variance
    variance = en * dx + dn * ex ** 2
    third = (freq.skewness * dn ** 1.5 * ex ** 3
             + 3.0 * dn * ex * dx
             + en * sev.skewness * dx ** 1.5)
    fourth = (sev.excess_kurtosis * en * dx ** 2
              + 4.0 * sev.skewness * dn * dx ** 1.5 * ex
              + 3.0 * dn * dx ** 2
              + freq.excess_kurtosis * dn ** 2 * ex ** 4
              + 6.0 * freq.skewness * dn ** 1.5 * ex ** 2 * dx)
    return variance, third, fourth


def compound_moments(freq: ComponentSummary, sev: ComponentSummary) -> MomentSummary:
    """Moments of S = X_1 + ... + X_N from frequency and severity summaries."""
    if freq.mean == 0:
        raise DomainError("frequency mean must be nonzero", key="freq_mean")
    if sev.variance == 0:
        raise DomainError("severity variance must be nonzero", key="sev_var")
    variance, third, fourth = _cumulants(freq, sev)
    return MomentSummary(
        mean=freq.mean * sev.mean,
        sd=math.sqrt(variance),
        skewness=third / variance ** 1.5,
        excess_kurtosis=fourth / variance ** 2,
    )


def compound_kurtosis_a_form(freq: ComponentSummary, sev: ComponentSummary) -> float:
    """Excess kurtosis through the fourth raw-central moment A, i.e. A/variance^2 - 3."""
    en, dn = freq.mean, freq.variance
    ex, dx = sev.mean, sev.variance
    variance = en * dx + dn * ex ** 2
    a = ((sev.excess_kurtosis + 3.0) * en * dx ** 2
         + 4.0 * sev.skewness * dn * dx ** 1.5 * ex
         + 3.0 * (dn + en * (en - 1.0)) * dx ** 2
         + (freq.excess_kurtosis + 3.0) * dn ** 2 * ex ** 4
         + 6.0 * (freq.skewness * dn ** 1.5 + en * dn) * ex ** 2 * dx)
    return a / variance ** 2 - 3.0


def moment_summary(spec: LossSpec) -> MomentSummary:
    if isinstance(spec, (Exponential, ParetoI, Lognormal)):
        c = central_summary(spec)
        return MomentSummary(c.mean, c.sd, c.skewness, c.excess_kurtosis)
    if isinstance(spec, CompoundPoisson):
        lam = spec.frequency
        m1, m2, m3, m4 = (raw_moment(spec.severity, k) for k in (1, 2, 3, 4))
        return MomentSummary(
            mean=lam * m1,
            sd=math.sqrt(lam * m2),
            skewness=m3 / (math.sqrt(lam) * m2 ** 1.5),
            excess_kurtosis=m4 / (lam * m2 * m2),
        )
    if isinstance(spec, CompoundGeneral):
        return compound_moments(spec.frequency, spec.severity)
    raise UnsupportedSpecError(f"unknown loss spec {spec!r}")


# ── Exact risk measures ─────────────────────────────────────────────────────

def exact_var(spec: LossSpec, alpha: float) -> float:
    _check_alpha(alpha)
    if isinstance(spec, Exponential):
        return -math.log1p(-alpha) / spec.rate
    if isinstance(spec, ParetoI):
        return spec.scale * (1.0 - alpha) ** (-1.0 / spec.shape)
    if isinstance(spec, Lognormal):
        return math.exp(spec.mu + spec.sigma * quantile(alpha))
    raise NoClosedFormError(f"no closed-form VaR for {spec.family.value}")


def exact_es(spec: LossSpec, alpha: float) -> float:
    _check_alpha(alpha)
    if isinstance(spec, Exponential):
        return exact_var(spec, alpha) + 1.0 / spec.rate
    if isinstance(spec, ParetoI):
        a = spec.shape
        return a / (a - 1.0) * exact_var(spec, alpha)
    if isinstance(spec, Lognormal):
        tail = float(sf(quantile(alpha) - spec.sigma))
        return math.exp(spec.mu + spec.sigma_sq / 2.0) * tail / (1.0 - alpha)
    raise NoClosedFormError(f"no closed-form ES for {spec.family.value}")


def has_closed_form(spec: LossSpec) -> bool:
    return isinstance(spec, (Exponential, ParetoI, Lognormal))


# ── Numeric cumulants ───────────────────────────────────────────────────────

CUMULANT_STEP = 5e-3

# Central stencils (offset, weight) and the power of h they divide by
_STENCILS = {
    1: (((1, 0.5), (-1, -0.5)), 1),
    2: (((1, 1.0), (0, -2.0), (-1, 1.0)), 2),
    3: (((2, 0.5), (1, -1.0), (-1, 1.0), (-2, -0.5)), 3),
    4: (((2, 1.0), (1, -4.0), (0, 6.0), (-1, -4.0), (-2, 1.0)), 4),
}


def standardized_log_mgf(spec: LossSpec) -> Callable[[float], float]:
    """log E exp(t Z) for Z = (S - E S)/sd, where the MGF exists near 0."""
    if isinstance(spec, Exponential):
        # scale free: exp(-t)/(1-t)
        return lambda t: -t - math.log1p(-t)
    if isinstance(spec, CompoundPoisson) and isinstance(spec.severity, Exponential):
        m = moment_summary(spec)
        lam, rate = spec.frequency, spec.severity.rate

        def log_mgf(t: float) -> float:
            u = t / m.sd
            return lam * u / (rate - u) - t * m.mean / m.sd

        return log_mgf
    raise UnsupportedSpecError(f"no closed-form MGF for {spec.family.value}")


def _derivative_at_zero(f: Callable[[float], float], order: int, h: float) -> float:
    stencil, power = _STENCILS[order]
    return sum(w * f(j * h) for j, w in stencil) / h ** power


def numeric_cumulants(spec: LossSpec, order: int, step: float = CUMULANT_STEP) -> float:
    """order-th cumulant of the standardized loss by finite differences of its log-MGF.

    Central differences at h and h/2 combined by one Richardson level.
    """
    if order not in _STENCILS:
        raise DomainError(f"cumulant order must be in 1..4, got {order!r}", key="order")
    f = standardized_log_mgf(spec)
    coarse = _derivative_at_zero(f, order, step)
    fine = _derivative_at_zero(f, order, step / 2.0)
    return (4.0 * fine - coarse) / 3.0


# ── key=value form ──────────────────────────────────────────────────────────

_SPEC_KEYS = {
    Family.EXPONENTIAL: ("lambda",),
    Family.PARETO: ("a", "c"),
    Family.LOGNORMAL: ("mu", "sigma_sq"),
    Family.COMPOUND_POISSON: ("lambda", "sev_family"),
    Family.COMPOUND_GENERAL: ("freq_mean", "freq_var", "freq_skew", "freq_kurt",
                              "sev_mean", "sev_var", "sev_skew", "sev_kurt"),
}
_SEVERITY_KEYS = {
    Family.EXPONENTIAL: ("sev_lambda",),
    Family.LOGNORMAL: ("sev_mu", "sev_sigma_sq"),
}


def _family(text: str, key: str) -> Family:
    try:
        return Family(text.lower())
    except ValueError:
        choices = ", ".join(f.value for f in Family)
        raise DomainError(f"{key}: unknown family {text!r} (expected one of {choices})", key=key) from None


def _take(pairs: dict[str, str], keys) -> list[float]:
    values = []
    for key in keys:
        if key not in pairs:
            raise DomainError(f"missing key {key!r}", key=key)
        values.append(parse_number(pairs[key], key))
    return values


def spec_from_pairs(pairs: dict[str, str]) -> LossSpec:
    """Build a LossSpec from parsed key=value pairs; unknown keys are rejected."""
    pairs = dict(pairs)
    if "family" not in pairs:
        raise DomainError("missing key 'family'", key="family")
    family = _family(pairs.pop("family"), "family")
    allowed = set(_SPEC_KEYS[family])
    if family is Family.EXPONENTIAL:
        spec = Exponential(*_take(pairs, ("lambda",)))
    elif family is Family.PARETO:
        spec = ParetoI(*_take(pairs, ("a", "c")))
    elif family is Family.LOGNORMAL:
        spec = Lognormal(*_take(pairs, ("mu", "sigma_sq")))
    elif family is Family.COMPOUND_POISSON:
        (lam,) = _take(pairs, ("lambda",))
        if "sev_family" not in pairs:
            raise DomainError("missing key 'sev_family'", key="sev_family")
        sev_family = _family(pairs["sev_family"], "sev_family")
        if sev_family not in _SEVERITY_KEYS:
            raise DomainError("sev_family must be exponential or lognormal", key="sev_family")
        allowed |= set(_SEVERITY_KEYS[sev_family])
        sev_values = _take(pairs, _SEVERITY_KEYS[sev_family])
        severity = Exponential(*sev_values) if sev_family is Family.EXPONENTIAL else Lognormal(*sev_values)
        spec = CompoundPoisson(lam, severity)
    else:
        fm, fv, fs, fk, sm, sv, ss, sk = _take(pairs, _SPEC_KEYS[family])
        spec = CompoundGeneral(ComponentSummary(fm, fv, fs, fk), ComponentSummary(sm, sv, ss, sk))
    extra = sorted(set(pairs) - allowed)
    if extra:
        raise DomainError(f"unknown key {extra[0]!r} for family {family.value}", key=extra[0])
    return spec


def parse_spec(text) -> LossSpec:
    return spec_from_pairs(parse_key_values(text))


def spec_to_pairs(spec: LossSpec) -> dict[str, str]:
    """Inverse of spec_from_pairs, values in repr precision."""
    pairs = {"family": spec.family.value}
    if isinstance(spec, Exponential):
        pairs["lambda"] = repr(spec.rate)
    elif isinstance(spec, ParetoI):
        pairs.update(a=repr(spec.shape), c=repr(spec.scale))
    elif isinstance(spec, Lognormal):
        pairs.update(mu=repr(spec.mu), sigma_sq=repr(spec.sigma_sq))
    elif isinstance(spec, CompoundPoisson):
        pairs["lambda"] = repr(spec.frequency)
        sev = spec.severity
        pairs["sev_family"] = sev.family.value
        if isinstance(sev, Exponential):
            pairs["sev_lambda"] = repr(sev.rate)
        else:
            pairs.update(sev_mu=repr(sev.mu), sev_sigma_sq=repr(sev.sigma_sq))
    else:
        for prefix, comp in (("freq", spec.frequency), ("sev", spec.severity)):
            pairs[f"{prefix}_mean"] = repr(comp.mean)
            pairs[f"{prefix}_var"] = repr(comp.variance)
            pairs[f"{prefix}_skew"] = repr(comp.skewness)
            pairs[f"{prefix}_kurt"] = repr(comp.excess_kurtosis)
    return pairs


def format_spec(spec: LossSpec) -> str:
    return " ".join(f"{k}={v}" for k, v in spec_to_pairs(spec).items())

