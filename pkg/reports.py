"""
Tailwise — Sweeps, table reproduction and rendering
Builds the relative-error sweeps and comparison tables the CLI prints, and
renders them as CSV or text.
"""
import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from approx import C1, C2, DEFAULT_METHODS, ApproxMethod, blowup_alpha, es_approx, nr_var, var_approx
from config import settings
from distributions import (CompoundPoisson, Lognormal, LossSpec, MomentSummary, ParetoI,
                           exact_es, exact_var, format_spec, moment_summary)
from errors import DomainError, IterationError, NoClosedFormError, SingularityError
from montecarlo import McConfig, McSample, draw_sample
from utils import fmt, order_of_magnitude

logger = logging.getLogger("tailwise.reports")

MEASURES = ("var", "es")
REFERENCES = ("exact", "mc")

TABLE1_CASES: Tuple[Tuple[str, LossSpec], ...] = (
    ("pareto", ParetoI(5.0, 10.0)),
    ("lognormal", Lognormal(5.0, 1.21)),
    ("compound_poisson", CompoundPoisson(4.0, Lognormal(3.0, 1.21))),
)

# Reference ranges of 100 (VaR - approx) / VaR over alpha > C1
EXPECTED_TABLE1_RANGES: Dict[Tuple[str, ApproxMethod], Tuple[float, float]] = {
    ("pareto", ApproxMethod.NPA): (-24, -10),
    ("pareto", ApproxMethod.CORNISH_FISHER): (-300, -130),
    ("pareto", ApproxMethod.KURT_I): (-30, 40),
    ("pareto", ApproxMethod.KURT_IV): (10, 40),
    ("lognormal", ApproxMethod.NPA): (-95, -55),
    ("lognormal", ApproxMethod.CORNISH_FISHER): (-1100, -700),
    ("lognormal", ApproxMethod.KURT_I): (-150, 50),
    ("lognormal", ApproxMethod.KURT_IV): (20, 60),
    ("compound_poisson", ApproxMethod.NPA): (-20, -5),
    ("compound_poisson", ApproxMethod.CORNISH_FISHER): (-190, -110),
    ("compound_poisson", ApproxMethod.KURT_I): (-10, 40),
    ("compound_poisson", ApproxMethod.KURT_IV): (15, 45),
}

TABLE2_SPEC = CompoundPoisson(4.0, Lognormal(3.0, 25.0))
TABLE2_ALPHAS = (0.995, 0.999)
EXPECTED_TABLE2_ORDERS = {
    ApproxMethod.NPA: -22,
    ApproxMethod.CORNISH_FISHER: -48,
    ApproxMethod.KURT_I: -7,
    ApproxMethod.KURT_IV: -7,
}

NR_DEFAULT_K = (1, 3, 5, 10)


@dataclass
class SweepRow:
    """One confidence level of a sweep; None marks a singular approximation."""
    alpha: float
    reference: float
    values: Dict[str, Optional[float]] = field(default_factory=dict)
    rel_err_pct: Dict[str, Optional[float]] = field(default_factory=dict)


def relative_error_pct(reference: float, approx: Optional[float]) -> Optional[float]:
    if approx is None or reference == 0:
        return None
    return 100.0 * (reference - approx) / reference


def alpha_grid(alpha_min: float, alpha_max: float, points: int) -> np.ndarray:
    """Levels in (alpha_min, alpha_max], uniform in -log(1 - alpha)."""
    if not 0.0 < alpha_min < alpha_max < 1.0:
        raise DomainError(f"need 0 < alpha_min < alpha_max < 1, got ({alpha_min}, {alpha_max})",
                          key="alpha_min")
    if points < 2:
        raise DomainError(f"grid needs at least 2 points, got {points}", key="grid")
    lo, hi = -math.log1p(-alpha_min), -math.log1p(-alpha_max)
    grid = -np.expm1(-(lo + (hi - lo) * np.arange(1, points + 1) / points))
    grid[-1] = alpha_max
    return grid


# ── References and approximations ───────────────────────────────────────────

def reference_function(spec: LossSpec, measure: str, reference: str,
                       cfg: Optional[McConfig] = None) -> Callable[[float], float]:
    """alpha -> exact or Monte-Carlo VaR/ES; MC draws one sample set for all levels."""
    if measure not in MEASURES:
        raise DomainError(f"measure must be var or es, got {measure!r}", key="measure")
    if reference == "exact":
        exact = exact_var if measure == "var" else exact_es
        return lambda alpha: exact(spec, alpha)
    if reference == "mc":
        sample = draw_sample(spec, cfg)
        if measure == "var":
            return lambda alpha: sample.estimate(alpha).var_estimate
        return lambda alpha: sample.estimate(alpha).es_estimate
    raise DomainError(f"reference must be exact or mc, got {reference!r}", key="reference")


def approximate(method: ApproxMethod, m: MomentSummary, alpha: float, measure: str) -> Optional[float]:
    """Approximation value, or None where the method is singular at this level."""
    try:
        if measure == "var":
            return var_approx(method, m, alpha).value
        variant = method.variant
        if variant is not None and alpha <= variant.threshold:
            return None
        return es_approx(method, m, alpha).value
    except SingularityError as exc:
        logger.info("singular %s %s at alpha=%.10g: %s", measure, method.value, alpha, exc)
        return None


def sweep_rows(spec: LossSpec, alphas: Sequence[float], methods: Sequence[ApproxMethod],
               measure: str = "var", reference: str = "exact",
               cfg: Optional[McConfig] = None) -> List[SweepRow]:
    m = moment_summary(spec)
    ref = reference_function(spec, measure, reference, cfg)
    rows = []
    for alpha in alphas:
        alpha = float(alpha)
        row = SweepRow(alpha=alpha, reference=ref(alpha))
        for method in methods:
            value = approximate(method, m, alpha, measure)
            row.values[method.value] = value
            row.rel_err_pct[method.value] = relative_error_pct(row.reference, value)
        rows.append(row)
    return rows


def nr_sweep_rows(spec: LossSpec, alphas: Sequence[float], k_list: Sequence[int],
                  reference: str = "mc", cfg: Optional[McConfig] = None) -> List[SweepRow]:
    """Relative errors of mean + sd (z + delta^(k)) for each k."""
    if any(k < 1 for k in k_list):
        raise DomainError("iteration counts must be at least 1", key="k")
    m = moment_summary(spec)
    if cfg is None and reference == "mc":
        cfg = McConfig(sample_count=settings.nr_mc_sample_count)
    ref = reference_function(spec, "var", reference, cfg)
    rows = []
    for alpha in alphas:
        alpha = float(alpha)
        row = SweepRow(alpha=alpha, reference=ref(alpha))
        for k in k_list:
            key = f"k{k}"
            try:
                value = nr_var(m, alpha, k)
            except IterationError as exc:
                logger.info("newton-raphson stalled k=%d alpha=%.10g: %s", k, alpha, exc)
                value = None
            row.values[key] = value
            row.rel_err_pct[key] = relative_error_pct(row.reference, value)
        rows.append(row)
    return rows


def error_ranges(rows: Sequence[SweepRow], keys: Sequence[str],
                 alpha_floor: float = C1) -> Dict[str, Optional[Tuple[float, float]]]:
    """min/max relative error per column over rows above alpha_floor."""
    ranges = {}
    for key in keys:
        errs = [r.rel_err_pct[key] for r in rows
                if r.alpha > alpha_floor and r.rel_err_pct.get(key) is not None]
        ranges[key] = (min(errs), max(errs)) if errs else None
    return ranges


# ── Tables ──────────────────────────────────────────────────────────────────

@dataclass
class Table1Cell:
    distribution: str
    method: ApproxMethod
    low: Optional[float]
    high: Optional[float]
    expected: Tuple[float, float]


def table1_cells(alpha_max: Optional[float] = None, points: Optional[int] = None,
                 cfg: Optional[McConfig] = None) -> List[Table1Cell]:
    alpha_max = alpha_max or settings.table1_alpha_max
    alphas = alpha_grid(C1, alpha_max, points or settings.grid_points)
    cells = []
    for name, spec in TABLE1_CASES:
        reference = "mc" if isinstance(spec, CompoundPoisson) else "exact"
        rows = sweep_rows(spec, alphas, DEFAULT_METHODS, "var", reference, cfg)
        ranges = error_ranges(rows, [m.value for m in DEFAULT_METHODS])
        for method in DEFAULT_METHODS:
            span = ranges[method.value]
            cells.append(Table1Cell(
                distribution=name, method=method,
                low=span[0] if span else None, high=span[1] if span else None,
                expected=EXPECTED_TABLE1_RANGES[(name, method)],
            ))
    return cells


@dataclass
class Table2Report:
    summary: MomentSummary
    rel_err_pct: Dict[Tuple[float, ApproxMethod], float]
    orders: Dict[Tuple[float, ApproxMethod], int]
    references: Dict[float, float]


def table2_report(cfg: Optional[McConfig] = None) -> Table2Report:
    summary = moment_summary(TABLE2_SPEC)
    sample: McSample = draw_sample(TABLE2_SPEC, cfg)
    errors, orders, references = {}, {}, {}
    for alpha in TABLE2_ALPHAS:
        reference = sample.estimate(alpha).var_estimate
        references[alpha] = reference
        for method in DEFAULT_METHODS:
            err = relative_error_pct(reference, var_approx(method, summary, alpha).value)
            errors[(alpha, method)] = err
            orders[(alpha, method)] = order_of_magnitude(err)
    return Table2Report(summary, errors, orders, references)


@dataclass
class ConvergencePoint:
    frequency: float
    mc_var: float
    kurt1_var: float
    gap_in_sd: float


def cp_convergence(severity: Lognormal, frequencies: Sequence[float], alpha: float = 0.995,
                   cfg: Optional[McConfig] = None) -> List[ConvergencePoint]:
    """|MC VaR - KurtI VaR| / sd for compound Poisson losses of growing frequency."""
    points = []
    for lam in frequencies:
        spec = CompoundPoisson(float(lam), severity)
        m = moment_summary(spec)
        mc = draw_sample(spec, cfg).estimate(alpha).var_estimate
        kurt = var_approx(ApproxMethod.KURT_I, m, alpha).value
        points.append(ConvergencePoint(float(lam), mc, kurt, abs(mc - kurt) / m.sd))
    return points


# ── Rendering ───────────────────────────────────────────────────────────────

def _writer(out: TextIO):
    return csv.writer(out, lineterminator="\n")


def write_sweep_csv(rows: Sequence[SweepRow], keys: Sequence[str], out: TextIO,
                    widths: bool = False) -> None:
    """Header, one line per row, then `#range` footer lines (and `#width` when asked)."""
    w = _writer(out)
    header = ["alpha", "reference"]
    for key in keys:
        header += [key, f"{key}_rel_err_pct"]
    w.writerow(header)
    for row in rows:
        line = [fmt(row.alpha), fmt(row.reference)]
        for key in keys:
            line += [fmt(row.values[key]), fmt(row.rel_err_pct[key])]
        w.writerow(line)
    for key, span in error_ranges(rows, keys).items():
        if span is None:
            w.writerow(["#range", key, settings.singular_marker, settings.singular_marker])
            continue
        w.writerow(["#range", key, fmt(span[0]), fmt(span[1])])
        if widths:
            w.writerow(["#width", key, fmt(span[1] - span[0])])


def moments_report(spec: LossSpec) -> str:
    m = moment_summary(spec)
    star = blowup_alpha(m)
    lines = [
        f"spec: {format_spec(spec)}",
        f"mean={fmt(m.mean)}",
        f"sd={fmt(m.sd)}",
        f"variance={fmt(m.variance)}",
        f"skewness={fmt(m.skewness)}",
        f"excess_kurtosis={fmt(m.excess_kurtosis)}",
        f"sd_over_mean={fmt(m.relative_sd) if m.mean else 'undefined'}",
        f"C1={fmt(C1)}",
        f"C2={fmt(C2)}",
        f"kurt1_blowup_alpha={fmt(star) if star is not None else 'none'}",
    ]
    if 0 < m.excess_kurtosis < 4:
        lines.append(f"note: KurtI valid for alpha > C2 ({C2:.7f})")
    else:
        lines.append(f"note: KurtI valid for alpha > C1 ({C1:.7f})")
    return "\n".join(lines) + "\n"


def estimates_csv(spec: LossSpec, alpha: float, methods: Sequence[ApproxMethod],
                  measure: str, out: TextIO) -> None:
    """One line per method for a single level; exact columns filled when closed forms exist."""
    m = moment_summary(spec)
    try:
        exact = (exact_var if measure == "var" else exact_es)(spec, alpha)
    except NoClosedFormError:
        exact = None
    lines = []
    for method in methods:
        try:
            est = (var_approx if measure == "var" else es_approx)(method, m, alpha)
            value, den, valid = est.value, est.denominator_value, est.in_validity_region
        except SingularityError as exc:
            value, den, valid = None, exc.denominator, False
        lines.append([
            method.value, measure, fmt(alpha), fmt(value),
            fmt(den) if den is not None else "",
            "true" if valid else "false",
            fmt(exact) if exact is not None else "",
            fmt(relative_error_pct(exact, value)) if exact is not None else "",
        ])
    # every method is evaluated before the first line goes out
    w = _writer(out)
    w.writerow(["method", "measure", "alpha", "value", "denominator", "in_validity_region",
                "exact", "rel_err_pct"])
    w.writerows(lines)


def render_table1(cells: Sequence[Table1Cell], alpha_max: float) -> str:
    lines = [f"relative error range (%) over alpha in (C1, {alpha_max:g}]",
             "distribution,method,low,high,expected_low,expected_high"]
    for c in cells:
        lines.append(f"{c.distribution},{c.method.value},{fmt(c.low)},{fmt(c.high)},"
                     f"{c.expected[0]:g},{c.expected[1]:g}")
    return "\n".join(lines) + "\n"


def render_table2(report: Table2Report) -> str:
    m = report.summary
    lines = [
        f"spec: {format_spec(TABLE2_SPEC)}",
        f"mean={fmt(m.mean)} variance={fmt(m.variance)} skewness={fmt(m.skewness)} "
        f"excess_kurtosis={fmt(m.excess_kurtosis)} sd_over_mean={fmt(m.relative_sd)}",
        "alpha,method,mc_var,rel_err_pct,order,expected_order",
    ]
    for (alpha, method), err in report.rel_err_pct.items():
        lines.append(f"{fmt(alpha)},{method.value},{fmt(report.references[alpha])},{fmt(err)},"
                     f"{report.orders[(alpha, method)]},{EXPECTED_TABLE2_ORDERS[method]}")
    return "\n".join(lines) + "\n"


def render_convergence(points: Sequence[ConvergencePoint], alpha: float) -> str:
    lines = [f"# alpha={fmt(alpha)}", "lambda,mc_var,kurt1_var,gap_in_sd"]
    for p in points:
        lines.append(f"{fmt(p.frequency)},{fmt(p.mc_var)},{fmt(p.kurt1_var)},{fmt(p.gap_in_sd)}")
    return "\n".join(lines) + "\n"
