"""
Approximation engine tests.

  Group 1 — validity constants and method parsing
  Group 2 — GC4 and the root function g_x
  Group 3 — delta corrections and Newton-Raphson
  Group 4 — VaR approximations
  Group 5 — ES approximations
  Group 6 — tail behaviour and blow-up level
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings
from hypothesis import strategies as st
from scipy import optimize

from approx import (C1, C2, DEFAULT_METHODS, ApproxMethod, Variant, asymptotic_envelope, blowup_alpha,
                    delta_correction, denominator, es_approx, g, g_prime, gc4, gc4_monotone_from,
                    gc4_tail, newton_raphson_delta, npa_cdf, nr_var, var_approx)
from distributions import CompoundPoisson, Lognormal, MomentSummary, ParetoI, moment_summary
from errors import DomainError, IterationError, SingularityError
from reports import alpha_grid
from stdnormal import cdf, pdf, quantile


KURT_METHODS = (ApproxMethod.KURT_I, ApproxMethod.KURT_II, ApproxMethod.KURT_III, ApproxMethod.KURT_IV)


# ═══ Group 1: constants and parsing ═══

def test_validity_constants():
    assert C1 == pytest.approx(0.990213, abs=5e-7)
    assert C2 == pytest.approx(0.9583677, abs=5e-7)
    assert Variant.I.threshold == C1
    assert Variant.IV.threshold == C2


def test_variant_flags():
    assert [v.kappa_in_numerator for v in Variant] == [True, True, False, False]
    assert [v.kappa_in_denominator for v in Variant] == [True, False, True, False]


@pytest.mark.parametrize("text,method", [
    ("npa", ApproxMethod.NPA),
    ("CF", ApproxMethod.CORNISH_FISHER),
    ("cornish-fisher", ApproxMethod.CORNISH_FISHER),
    ("kurt1", ApproxMethod.KURT_I),
    ("KurtIV", ApproxMethod.KURT_IV),
])
def test_method_parse(text, method):
    assert ApproxMethod.parse(text) is method


def test_method_parse_rejects_unknown():
    with pytest.raises(DomainError) as exc:
        ApproxMethod.parse("kurt9")
    assert exc.value.key == "methods"


# ═══ Group 2: GC4 and g_x ═══

def test_gc4_without_corrections_is_normal():
    xs = np.linspace(-5, 5, 101)
    assert np.array_equal(gc4(xs, 0.0, 0.0), cdf(xs))


@pytest.mark.parametrize("gamma,kappa", [(1.0, 2.0), (4.0, 30.0)])
def test_gc4_at_sqrt3_drops_kurtosis(gamma, kappa):
    x = math.sqrt(3.0)
    assert gc4(x, gamma, kappa) == pytest.approx(cdf(x) - gamma / 3.0 * pdf(x), abs=1e-14)


def test_gc4_far_tail():
    assert gc4(8.0, 2.0, 6.0) == pytest.approx(1.0, abs=1e-12)
    assert gc4(8.0, 2.0, 6.0) < 1.0


@pytest.mark.parametrize("gamma,kappa", [
    (2.0, 6.0),
    (4.647580, 70.8),
    (6.1849, 110.936),
])
def test_gc4_increasing_beyond_last_critical_point(gamma, kappa):
    x0 = gc4_monotone_from(gamma, kappa)
    assert math.isfinite(x0)
    assert gc4(x0, gamma, kappa) > 0
    xs = np.linspace(x0, 20.0, 2001)
    slope = (1.0 + gamma / 6.0 * (xs ** 3 - 3 * xs) + kappa / 24.0 * (xs ** 4 - 6 * xs ** 2 + 3))
    assert np.all(slope[1:] > 0)
    tails = gc4_tail(xs, gamma, kappa)
    assert np.all(np.diff(tails) < 0)
    assert np.all((gc4(xs, gamma, kappa) > 0) & (gc4(xs, gamma, kappa) <= 1))


def test_g_at_zero_shift_matches_gc4_gap():
    gamma, kappa = 2.0, 6.0
    for x in np.linspace(1.0, 6.0, 26):
        closed = (gamma / 6.0 * (x * x - 1.0) - kappa / 24.0 * (-x ** 3 + 3.0 * x)) * pdf(x)
        assert g(x, 0.0, gamma, kappa) == pytest.approx(closed, abs=1e-14)


def test_g_sign_and_far_shift():
    assert g(2.5, 0.0, 2.0, 6.0) > 0
    assert g(2.0, 50.0, 2.0, 6.0) == pytest.approx(cdf(2.0) - 1.0, abs=1e-15)


@pytest.mark.parametrize("x", [8.0, -8.0])
def test_g_keeps_relative_digits_in_both_tails(x):
    gamma, kappa = 2.0, 6.0
    closed = (gamma / 6.0 * (x * x - 1.0) - kappa / 24.0 * (-x ** 3 + 3.0 * x)) * pdf(x)
    assert abs(closed) < 1e-11
    assert g(x, 0.0, gamma, kappa) == pytest.approx(closed, rel=1e-10)


def test_g_prime_at_zero_shift():
    gamma, kappa = 2.0, 6.0
    for x in np.linspace(1.0, 6.0, 26):
        closed = (-1.0 - gamma / 6.0 * (x ** 3 - 3 * x) - kappa / 24.0 * (x ** 4 - 6 * x * x + 3)) * pdf(x)
        assert g_prime(x, 0.0, gamma, kappa) == pytest.approx(closed, abs=1e-14)


def test_g_prime_is_derivative_of_g():
    h = 1e-6
    for x, delta in [(2.5, 0.3), (3.0, -0.2), (4.0, 1.1)]:
        numeric = (g(x, delta + h, 2.0, 6.0) - g(x, delta - h, 2.0, 6.0)) / (2 * h)
        assert numeric == pytest.approx(g_prime(x, delta, 2.0, 6.0), abs=1e-8)


def test_npa_cdf_inverts_npa_map():
    gamma = 2.0
    for z in np.linspace(-1.0, 5.0, 61):
        y = z + gamma / 6.0 * (z * z - 1.0)
        assert npa_cdf(y, gamma) == pytest.approx(cdf(z), abs=1e-12)


def test_npa_cdf_domain():
    with pytest.raises(DomainError):
        npa_cdf(0.5, 0.0)
    with pytest.raises(DomainError):
        npa_cdf(-10.0, 2.0)


# ═══ Group 3: delta corrections and Newton-Raphson ═══

def test_variants_coincide_without_kurtosis():
    for x in (2.0, 3.0, 4.5):
        values = {delta_correction(v, x, 1.5, 0.0) for v in Variant}
        assert max(values) - min(values) < 1e-15


def test_delta_at_one():
    gamma, kappa = 1.0, 2.0
    expected = (kappa / 12.0) / (-1.0 + gamma / 3.0 + kappa / 12.0)
    assert delta_correction(Variant.I, 1.0, gamma, kappa) == pytest.approx(expected, rel=1e-14)


def test_vanishing_denominator_raises():
    with pytest.raises(SingularityError) as exc:
        delta_correction(Variant.I, 1.0, 2.0, 4.0)
    assert abs(exc.value.denominator) < 1e-12


def test_newton_zero_and_one_steps():
    assert newton_raphson_delta(3.0, 2.0, 6.0, 0) == 0.0
    for x in (2.5, 3.0, 3.5, 4.0):
        assert newton_raphson_delta(x, 2.0, 6.0, 1) == pytest.approx(
            delta_correction(Variant.I, x, 2.0, 6.0), abs=1e-14)
    assert newton_raphson_delta(3.0, 2.0, 6.0, 1) == pytest.approx(0.4943, abs=1e-4)


def test_newton_converges_to_root():
    delta = newton_raphson_delta(3.0, 2.0, 6.0, 10)
    assert abs(g(3.0, delta, 2.0, 6.0)) < 1e-10
    root = optimize.brentq(lambda d: g(3.0, d, 2.0, 6.0), 0.5, 3.0, xtol=1e-14)
    assert delta == pytest.approx(root, abs=1e-9)
    assert delta == pytest.approx(1.17, abs=0.02)


def test_newton_residual_never_grows():
    m = moment_summary(CompoundPoisson(10.0, Lognormal(2.0, 1.0)))
    for alpha in alpha_grid(C1, 0.9999, 50):
        z = quantile(alpha)
        residuals = [abs(g(z, newton_raphson_delta(z, m.skewness, m.excess_kurtosis, k),
                           m.skewness, m.excess_kurtosis)) for k in range(0, 11)]
        assert all(b <= a + 1e-14 for a, b in zip(residuals, residuals[1:])), alpha


def test_newton_stalls_on_flat_derivative():
    with pytest.raises(IterationError) as exc:
        newton_raphson_delta(1.0, 2.0, 4.0, 3)
    assert exc.value.step >= 1


def test_newton_rejects_negative_count():
    with pytest.raises(DomainError):
        newton_raphson_delta(3.0, 2.0, 6.0, -1)


# ═══ Group 4: VaR approximations ═══

def test_npa_without_skew_is_normal_quantile():
    m = MomentSummary(10.0, 2.0, 0.0, 0.0)
    assert var_approx(ApproxMethod.NPA, m, 0.99).value == pytest.approx(10.0 + 2.0 * quantile(0.99), rel=1e-15)


def test_npa_and_cf_closed_forms(exp1_moments):
    z = quantile(0.999)
    npa = 1.0 + z + (z * z - 1.0) / 3.0
    cf = npa + 0.25 * (z ** 3 - 3 * z) - (2 * z ** 3 - 5 * z) / 9.0
    assert var_approx(ApproxMethod.NPA, exp1_moments, 0.999).value == pytest.approx(npa, rel=1e-14)
    assert var_approx(ApproxMethod.CORNISH_FISHER, exp1_moments, 0.999).value == pytest.approx(cf, rel=1e-14)


def test_kurt_estimates_carry_validity(exp1_moments):
    above = var_approx(ApproxMethod.KURT_I, exp1_moments, 0.995)
    assert above.in_validity_region and above.denominator_value < 0
    below = var_approx(ApproxMethod.KURT_I, exp1_moments, 0.97)
    assert not below.in_validity_region and below.notes
    assert var_approx(ApproxMethod.KURT_IV, exp1_moments, 0.97).in_validity_region


@pytest.mark.parametrize("method", KURT_METHODS)
def test_kurt_methods_need_positive_skew(method):
    with pytest.raises(DomainError) as exc:
        var_approx(method, MomentSummary(0.0, 1.0, 0.0, 1.0), 0.995)
    assert exc.value.key == "skewness"


def test_negative_kurtosis_only_for_variant_iv():
    m = MomentSummary(0.0, 1.0, 0.5, -0.5)
    for method in (ApproxMethod.KURT_I, ApproxMethod.KURT_II, ApproxMethod.KURT_III):
        with pytest.raises(DomainError):
            var_approx(method, m, 0.995)
    assert math.isfinite(var_approx(ApproxMethod.KURT_IV, m, 0.995).value)


@pytest.mark.parametrize("alpha", [0.0, 1.0, 1.2])
def test_var_alpha_domain(alpha, exp1_moments):
    with pytest.raises(DomainError):
        var_approx(ApproxMethod.NPA, exp1_moments, alpha)


def test_zero_kurtosis_collapses_variants():
    m = MomentSummary(0.0, 1.0, 1.0, 0.0)
    for alpha in (0.995, 0.999):
        values = [var_approx(method, m, alpha).value for method in KURT_METHODS]
        assert max(values) - min(values) < 1e-10


@hyp_settings(max_examples=60, deadline=None)
@given(
    gamma=st.floats(0.01, 20.0),
    kappa=st.floats(0.01, 200.0),
    alpha=st.floats(C1 + 1e-6, 1.0 - 1e-9),
)
def test_kurt1_denominator_negative_above_c1(gamma, kappa, alpha):
    assert denominator(Variant.I, quantile(alpha), gamma, kappa) < 0


@hyp_settings(max_examples=60, deadline=None)
@given(
    gamma=st.floats(0.01, 20.0),
    kappa=st.floats(0.0, 3.99),
    alpha=st.floats(C2 + 1e-6, 1.0 - 1e-9),
)
def test_kurt1_denominator_negative_above_c2_for_small_kurtosis(gamma, kappa, alpha):
    assert denominator(Variant.I, quantile(alpha), gamma, kappa) < 0


@hyp_settings(max_examples=40, deadline=None)
@given(scale=st.floats(0.01, 100.0), shift=st.floats(-1000.0, 1000.0))
def test_var_affine_equivariance(scale, shift):
    base = MomentSummary(1.0, 1.0, 2.0, 6.0)
    moved = base.affine(scale, shift)
    for method in DEFAULT_METHODS:
        for alpha in (0.995, 0.999):
            v = var_approx(method, base, alpha).value
            w = var_approx(method, moved, alpha).value
            assert w == pytest.approx(scale * v + shift, rel=1e-10, abs=1e-10 * (abs(shift) + scale * abs(v)))


# ═══ Group 5: ES approximations ═══

def test_npa_es_without_skew_is_normal_es():
    m = MomentSummary(0.0, 1.0, 0.0, 0.0)
    alpha = 0.99
    expected = pdf(quantile(alpha)) / (1 - alpha)
    assert es_approx(ApproxMethod.NPA, m, alpha).value == pytest.approx(expected, rel=1e-14)


def test_cf_es_closed_form(exp1_moments):
    alpha = 0.999
    z = quantile(alpha)
    factor = 1 + 2 * z / 6 + (z * z - 1) * 6 / 24 + (1 - 2 * z * z) * 4 / 36
    expected = 1.0 + pdf(z) / (1 - alpha) * factor
    assert es_approx(ApproxMethod.CORNISH_FISHER, exp1_moments, alpha).value == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("method", DEFAULT_METHODS)
def test_es_exceeds_var(method, exp1_moments):
    alpha = 0.999
    es = es_approx(method, exp1_moments, alpha)
    assert es.measure == "es"
    assert es.value > var_approx(method, exp1_moments, alpha).value


def test_kurt_es_needs_validity_region(exp1_moments):
    with pytest.raises(DomainError) as exc:
        es_approx(ApproxMethod.KURT_I, exp1_moments, 0.98)
    assert exc.value.key == "alpha"
    assert math.isfinite(es_approx(ApproxMethod.KURT_IV, exp1_moments, 0.98).value)


@hyp_settings(max_examples=20, deadline=None)
@given(scale=st.floats(0.01, 100.0), shift=st.floats(-1000.0, 1000.0))
def test_es_affine_equivariance(scale, shift):
    base = moment_summary(ParetoI(5.0, 10.0))
    moved = base.affine(scale, shift)
    for method in (ApproxMethod.KURT_I, ApproxMethod.KURT_IV):
        for alpha in (0.995, 0.999):
            v = es_approx(method, base, alpha).value
            w = es_approx(method, moved, alpha).value
            assert w == pytest.approx(scale * v + shift, rel=1e-10, abs=1e-10 * (abs(shift) + scale * abs(v)))


def test_es_variants_agree_without_kurtosis():
    m = MomentSummary(0.0, 1.0, 1.0, 0.0)
    a = es_approx(ApproxMethod.KURT_I, m, 0.995).value
    b = es_approx(ApproxMethod.KURT_IV, m, 0.995).value
    assert a == pytest.approx(b, abs=1e-9)


def test_es_kurt2_kurt3_on_heavy_compound(heavy_cp_moments):
    m = heavy_cp_moments
    limit = m.excess_kurtosis / (4.0 * m.skewness)
    assert limit > 1e25
    for alpha in alpha_grid(C1, 0.9999, 20):
        alpha = float(alpha)
        z = quantile(alpha)
        kurt2 = es_approx(ApproxMethod.KURT_II, m, alpha)
        assert math.isfinite(kurt2.value)
        assert kurt2.value == pytest.approx(var_approx(ApproxMethod.KURT_II, m, alpha).value, rel=1e-7)
        kurt3 = es_approx(ApproxMethod.KURT_III, m, alpha)
        assert kurt3.value == pytest.approx(m.mean + m.sd * pdf(z) / (1 - alpha), rel=1e-9)
        assert kurt3.value > var_approx(ApproxMethod.KURT_III, m, alpha).value


# ═══ Group 6: tail behaviour and blow-up level ═══

def test_mills_ratio_approaches_one():
    ratios = []
    for tail in (1e-4, 1e-8, 1e-12):
        z = quantile(1 - tail)
        ratios.append(pdf(z) / (tail * z))
    assert ratios == pytest.approx([1.0644, 1.0300, 1.0195], abs=5e-4)
    assert all(1.0 < r < 1.1 for r in ratios)
    assert ratios[0] > ratios[1] > ratios[2]


def test_envelope_example(exp1_moments):
    alpha = -math.expm1(-2.0)
    assert asymptotic_envelope(exp1_moments, alpha) == pytest.approx(1.0 + 2.0, rel=1e-12)


def test_variants_approach_envelope(exp1_moments):
    ratios = []
    for tail in (1e-4, 1e-8, 1e-12):
        alpha = 1 - tail
        value = var_approx(ApproxMethod.KURT_I, exp1_moments, alpha).value
        ratios.append(value / asymptotic_envelope(exp1_moments, alpha))
    assert ratios == pytest.approx([0.95592, 0.96299, 0.97054], abs=1e-3)
    assert all(0.85 < r < 1.10 for r in ratios)
    assert ratios[0] < ratios[1] < ratios[2]


def test_blowup_level_of_small_compound(cp_lambda4_moments):
    star = blowup_alpha(cp_lambda4_moments)
    assert star == pytest.approx(0.986567, abs=1e-5)
    assert denominator(Variant.I, quantile(0.95), cp_lambda4_moments.skewness,
                       cp_lambda4_moments.excess_kurtosis) > 0
    assert var_approx(ApproxMethod.KURT_I, cp_lambda4_moments, C1 + 1e-4).denominator_value < 0


def test_no_blowup_for_large_frequency():
    assert blowup_alpha(moment_summary(CompoundPoisson(60.0, Lognormal(3.0, 1.21)))) is None


def test_nr_var_first_step_is_kurt1(cp_lambda4_moments):
    for alpha in (0.995, 0.999):
        assert nr_var(cp_lambda4_moments, alpha, 1) == pytest.approx(
            var_approx(ApproxMethod.KURT_I, cp_lambda4_moments, alpha).value, rel=1e-13)
