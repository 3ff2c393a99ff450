import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from bqc.archimedean import (IntegralEstimate, WeightFunction, _finish, joint_delta_sumsq_oracle,
                             joint_singular_integral, kernel_K, kernel_K_array,
                             line_kernel_integral, line_kernel_integral_weighted,
                             predicted_main_term, sigma_delta, sigma_infinity,
                             sigma_infinity_quadrature)
from bqc.errors import NonConvergent, SingularForm
from bqc.forms import BiquadraticForm, QuadraticForm
from bqc.padic import singular_series

EXACT_DIAG5 = 2 * math.pi**2 / 3  # sigma_inf of x1^2+x2^2+x3^2+x4^2-x5^2 on the unit box


@given(st.floats(1e-3, 10))
def test_kernel_integrates_to_one(delta):
    val, err = integrate.quad(lambda u: kernel_K(u, delta), -delta, delta, points=[0.0],
                              epsabs=1e-13, epsrel=1e-13)
    assert abs(val - 1) < 1e-9


@given(st.fractions(Fraction(-5), Fraction(5)), st.fractions(Fraction(1, 100), Fraction(5)),
       st.fractions(Fraction(1, 10), Fraction(10)))
def test_kernel_scaling_exact(u, delta, t):
    assert kernel_K(t * u, delta) == kernel_K(u, delta / t) / t


def test_kernel_array_matches_scalar():
    u = np.linspace(-0.3, 0.3, 61)
    assert np.allclose(kernel_K_array(u, 0.2), [kernel_K(float(v), 0.2) for v in u])
    with pytest.raises(ValueError):
        kernel_K(0.1, 0)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-2, 2), st.sampled_from([0.2, 0.05, 0.01]))
def test_line_integral_matches_quadrature(a, b, c, delta):
    def g(t):
        return kernel_K(a * t * t + b * t + c, delta)

    ref = integrate.quad(g, -1, 1, limit=500, points=np.linspace(-1, 1, 41)[1:-1])[0]
    got = float(line_kernel_integral(np.array([a]), np.array([b]), np.array([c]), delta, -1, 1)[0])
    assert abs(got - ref) < 1e-6 * (1 + abs(ref))


def test_weighted_line_integral_with_unit_weight():
    rng = np.random.default_rng(0)
    a = rng.uniform(-2, 2, 50)
    b = rng.uniform(-2, 2, 50)
    c = rng.uniform(-1, 1, 50)
    plain = line_kernel_integral(a, b, c, 0.1, -1, 1)
    weighted = line_kernel_integral_weighted(a, b, c, 0.1, -1, 1, lambda t: np.ones_like(t), ())
    assert np.allclose(plain, weighted, rtol=1e-9, atol=1e-9)


@given(st.floats(0, 1.5), st.sampled_from([0.05, 0.1, 0.2]))
def test_weight_sandwich_pointwise(rho, eta):
    w0 = WeightFunction.box()
    w1 = WeightFunction.annular1(eta)
    w2 = WeightFunction.annular2(eta)
    assert w1.radial(rho) <= w0.radial(rho) + 1e-15
    assert w0.radial(rho) <= w2.radial(rho) + (rho <= 2 * eta) + 1e-15


def test_weight_validation():
    with pytest.raises(ValueError):
        WeightFunction.annular1(0.3)
    with pytest.raises(ValueError):
        WeightFunction("triangle")
    with pytest.raises(ValueError):
        WeightFunction.box(0)
    assert WeightFunction.box()(np.array([[0.5, -1.0], [0.2, 1.01]])).tolist() == [1.0, 0.0]


def test_sigma_infinity_against_exact_and_quadrature(diag5):
    est = sigma_infinity(diag5, samples=200_000, seed=3)
    assert abs(est.value - EXACT_DIAG5) < 4 * est.mc_stderr
    q, unc = sigma_infinity_quadrature(diag5, m=32)
    assert abs(q - EXACT_DIAG5) < max(2 * unc, 1e-2)
    assert [d for d, _, _ in est.levels] == [0.2, 0.1, 0.05, 0.025]


def test_sigma_infinity_is_deterministic(diag5):
    a = sigma_infinity(diag5, samples=50_000, seed=11)
    b = sigma_infinity(diag5, samples=50_000, seed=11)
    c = sigma_infinity(diag5, samples=50_000, seed=12)
    assert a == b
    assert a.value != c.value


def test_sigma_delta_matches_level(diag5):
    est = sigma_infinity(diag5, samples=30_000, seed=5, check=False)
    m, se = sigma_delta(diag5, WeightFunction.box(), 0.1, samples=30_000, seed=5)
    assert abs(m - est.levels[1][1]) < 4 * se


def test_sigma_infinity_singular():
    with pytest.raises(SingularForm):
        sigma_infinity(QuadraticForm.diagonal([1, 1, 0]), samples=100)


def test_sigma_infinity_annular_between_box_bounds(diag5):
    eta = 0.1
    w1 = sigma_infinity(diag5, WeightFunction.annular1(eta), samples=20_000, seed=1, check=False)
    w2 = sigma_infinity(diag5, WeightFunction.annular2(eta), samples=20_000, seed=1, check=False)
    assert w1.value < EXACT_DIAG5 < w2.value + 0.5


def test_non_convergence_is_reported():
    levels = ((0.2, 1.0, 1e-4), (0.1, 1.5, 1e-4), (0.05, 3.0, 1e-4))
    with pytest.raises(NonConvergent):
        _finish(4.5, 1e-4, levels, 2.0, 1e-4, (0.2, 0.1, 0.05), 10, 0, True)
    est = _finish(4.5, 1e-4, levels, 2.0, 1e-4, (0.2, 0.1, 0.05), 10, 0, False)
    assert isinstance(est, IntegralEstimate)


def test_bad_schedule():
    F = QuadraticForm.diagonal([1, 1, -1])
    with pytest.raises(ValueError):
        sigma_infinity(F, delta_schedule=(0.1, 0.2), samples=100)


def test_joint_levels_match_log_density_oracle():
    Bq = BiquadraticForm.diagonal([1, 1])
    est = joint_singular_integral(Bq, delta_schedule=(0.2, 0.1), samples=200_000, seed=2,
                                  check=False)
    for d, m, se in est.levels:
        assert abs(m - joint_delta_sumsq_oracle(2, d)) < 4 * se


def test_joint_integral_divergent_case_is_reported():
    # x1^2 y1^2 + x2^2 y2^2 - x3^2 y3^2 grows like log(1/delta): halving never settles
    with pytest.raises(NonConvergent):
        joint_singular_integral(BiquadraticForm.diagonal([1, 1, -1]), samples=100_000, seed=0)


def test_joint_integral_halving_diagnostic_passes():
    est = joint_singular_integral(BiquadraticForm.diagonal([1, 2, 3, -5]), samples=100_000,
                                  seed=0, check=True)
    assert est.value > 0
    assert all(m > 0 for _, m, _ in est.levels)


def test_joint_sum_of_squares_positive_at_every_level():
    est = joint_singular_integral(BiquadraticForm.diagonal([1, 1, 1]), samples=50_000, seed=1,
                                  check=False)
    assert all(m > 0 for _, m, _ in est.levels)
    for d, m, se in est.levels[:1]:
        assert abs(m - joint_delta_sumsq_oracle(3, d)) < 4 * se + 0.01 * m


def test_joint_sign_flip_invariance():
    Bq = BiquadraticForm.diagonal([1, 2, 3, -5])
    plain = joint_singular_integral(Bq, samples=20_000, seed=4, check=False)

    def flip(u):
        u = u.copy()
        u[:, :4] *= -1
        return u

    flipped = joint_singular_integral(Bq, samples=20_000, seed=4, sample_map=flip, check=False)
    assert flipped.levels == plain.levels


def test_anisotropic_form_has_zero_density():
    F = QuadraticForm.diagonal([1, 1, 1, 1, 1])
    est = sigma_infinity(F, samples=20_000, seed=0, check=False)
    assert abs(est.value) <= 3 * est.mc_stderr + 1e-12


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_box_scaling_law(diag5, lam):
    delta = 0.1
    m_lam, se_lam = sigma_delta(diag5, WeightFunction.box(lam), delta, samples=100_000, seed=7)
    m_1, se_1 = sigma_delta(diag5, WeightFunction.box(), delta / lam**2, samples=100_000, seed=8)
    assert abs(m_lam - lam**3 * m_1) < 4 * math.hypot(se_lam, lam**3 * se_1)


def test_predicted_main_term(diag5):
    sig = sigma_infinity(diag5, samples=20_000, seed=0)
    ser = singular_series(diag5, 10, 30)
    mt = predicted_main_term(diag5, None, 50, sigma=sig, series=ser)
    assert mt.value == pytest.approx(sig.value * ser.value * 50**3)
    assert mt.uncertainty > 0
    one = predicted_main_term(diag5, None, 1, sigma=sig, series=ser)
    assert one.value == pytest.approx(sig.value * ser.value)
    two = predicted_main_term(diag5, None, 100, sigma=sig, series=ser)
    assert two.value / mt.value == pytest.approx(8.0, rel=1e-14)
    with pytest.raises(ValueError):
        predicted_main_term(QuadraticForm.diagonal([1, 1, -1]), None, 10)


@given(st.floats(1e-3, 10))
def test_kernel_endpoints(delta):
    assert kernel_K(0.0, delta) == pytest.approx(1 / delta)
    assert kernel_K(delta, delta) == 0.0
    assert kernel_K(-2 * delta, delta) == 0.0


@pytest.mark.parametrize("eta", [0.05, 0.1])
def test_weight_sandwich_on_densities(diag5, eta):
    kw = dict(samples=50_000, seed=2, check=False)
    s1 = sigma_infinity(diag5, WeightFunction.annular1(eta), **kw)
    s0 = sigma_infinity(diag5, WeightFunction.box(), **kw)
    s2 = sigma_infinity(diag5, WeightFunction.annular2(eta), **kw)
    slack = 3 * math.hypot(s0.mc_stderr, max(s1.mc_stderr, s2.mc_stderr))
    assert s1.value <= s0.value + slack
    assert s0.value <= s2.value + (2 * eta) ** 3 * s0.value + slack


def test_density_envelope_over_growing_discriminant():
    vals = []
    for k in (1, 4, 16, 64, 256, 1024):
        F = QuadraticForm.diagonal([1, 1, 1, 1, -k])
        est = sigma_infinity(F, samples=30_000, seed=0, check=False)
        assert est.value >= -3 * est.mc_stderr
        vals.append(est.value * abs(F.discriminant) ** (1 / 5 - 0.1))
    assert max(vals) < 2 * vals[0]
    assert vals[-1] < vals[0]


@pytest.mark.parametrize("diag", [[1, 1, -1], [1, -2, 3, -1], [2, 1, -1, 1, -3], [1, 1, 1, 1, 1]])
def test_density_nonnegative(diag):
    est = sigma_infinity(QuadraticForm.diagonal(diag), samples=20_000, seed=9, check=False)
    assert est.mc_stderr >= 0
    assert est.value >= -3 * est.mc_stderr
