import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from price_lab.errors import DomainError, ParameterConflictError, UnsupportedSpaceError
from price_lab.harmonics import poisson_kernel
from price_lab.hypergeom import (QFormEvaluation, calibrate_c1, exact_exponential_coefficients,
                                 hyp2f1_terminating, log_growth_rate, poisson_parameters,
                                 q_closed_form, q_coefficients, q_quadrature, rescaled_ball_q,
                                 rescaled_q, series_coefficients)
from price_lab.quadrature import Integrand, sphere_integral
from price_lab.spaceform import SpaceForm


@pytest.fixture(scope="module")
def c1():
    return {n: calibrate_c1(n) for n in (3, 4, 5)}


@pytest.mark.parametrize("z", [0.0, 0.5, -2.0, 7.0])
def test_hand_expanded_series(z):
    assert hyp2f1_terminating(-2, 1, -2, z) == pytest.approx(1 + z + z * z)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-10, 10))
def test_a_zero_gives_one(b, c, z):
    assert hyp2f1_terminating(0, b, c, z) == 1.0


@pytest.mark.parametrize("n", range(3, 9))
def test_poisson_family_at_zero(n):
    assert hyp2f1_terminating(*poisson_parameters(n), 0.0) == 1.0


@pytest.mark.parametrize("a, b, c", [(-3, 0.5, 2.5), (-4, -1.5, 0.25), (-2, 3, -5.5), (-5, 2, 1)])
def test_matches_mpmath(a, b, c):
    for z in (-3.0, 0.4, 2.0, 30.0):
        ref = float(mpmath.hyp2f1(a, b, c, z))
        assert hyp2f1_terminating(a, b, c, z) == pytest.approx(ref, rel=1e-13, abs=1e-13)


def test_array_input():
    z = np.array([[0.0, 1.0], [2.0, 3.0]])
    out = hyp2f1_terminating(-2, 1, -2, z)
    np.testing.assert_allclose(out, 1 + z + z * z)


def test_parameter_conflict():
    # (c)_m vanishes at m = 2 while the series would run to m = 3
    with pytest.raises(ParameterConflictError):
        series_coefficients(-3, 1, -1)
    with pytest.raises(DomainError):
        hyp2f1_terminating(0.5, 1, 1, 0.2)


def test_coefficients_are_exact():
    coeffs = series_coefficients(-2, Fraction(1, 2), Fraction(-1, 2))
    assert coeffs == (1, 2, -3)
    assert all(isinstance(c, Fraction) for c in coeffs)


def test_n2_unsupported():
    with pytest.raises(UnsupportedSpaceError):
        poisson_parameters(2)
    with pytest.raises(UnsupportedSpaceError):
        q_closed_form(2, 1.0)


def test_n3_hand_form():
    # F(-2, 1, -2; z) = 1 + z + z^2 with z = e^{2R}
    R = 1.0
    z = math.exp(2 * R)
    expected = math.sinh(R) ** 2 * (1 + z + z * z) / math.exp(2 * R)
    assert q_closed_form(3, R) == pytest.approx(expected, rel=1e-14)


def test_c1_n3_is_four_pi_over_three(c1):
    assert c1[3] == pytest.approx(4 * math.pi / 3, rel=1e-11)


@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("R", [0.25, 0.5, 1.0, 2.0, 3.0])
def test_closed_form_vs_quadrature(c1, n, R):
    quad, _ = q_quadrature(n, R)
    assert q_closed_form(n, R, c1[n]) == pytest.approx(quad, rel=1e-9)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_coefficient_form_is_the_closed_form(c1, n):
    c = c1.get(n, 1.0)
    form = q_coefficients(n, c)
    assert len(form.alpha) == 2 * n - 1
    R = np.linspace(0.25, 10.0, 20)
    np.testing.assert_allclose(form.eval(R), q_closed_form(n, R, c), rtol=1e-12)
    assert np.all(form.eval(R) > 0)


def test_exact_n3_coefficients():
    assert exact_exponential_coefficients(3) == (Fraction(1, 4), Fraction(-1, 4), 0,
                                                 Fraction(-1, 4), Fraction(1, 4))


def test_alpha_vs_least_squares_fit(c1):
    # fit 5 exponentials e^{2jR} to 40 quadrature samples of Q
    R = np.linspace(0.25, 3.0, 40)
    Q = np.array([q_quadrature(3, r)[0] for r in R])
    A = np.exp(np.multiply.outer(R, 2.0 * np.arange(-2, 3)))
    scale = 1.0 / Q
    fit, *_ = np.linalg.lstsq(A * scale[:, None], Q * scale, rcond=None)
    alpha = np.array(q_coefficients(3, c1[3]).alpha)
    big = np.abs(alpha) > 0
    np.testing.assert_allclose(fit[big], alpha[big], rtol=1e-5)
    assert abs(fit[2]) < 1e-5 * np.max(np.abs(alpha))


def test_far_field_growth(c1):
    form = q_coefficients(3, c1[3])
    assert math.log(form.eval(11.0)) - math.log(form.eval(10.0)) == pytest.approx(4.0, abs=1e-3)
    R = np.linspace(20.0, 30.0, 11)
    assert log_growth_rate(form.eval(R), R) == pytest.approx(4.0, abs=1e-9)


def test_ball_integral_termwise():
    form = q_coefficients(4, 1.0)
    oracle, _ = integrate.quad(form.eval, 0.0, 2.5, epsrel=1e-13)
    assert form.ball_integral(2.5) == pytest.approx(oracle, rel=1e-12)


def test_qform_validation():
    with pytest.raises(DomainError):
        QFormEvaluation(3, 1.0, (1.0, 2.0))
    with pytest.raises(DomainError):
        QFormEvaluation(2, 1.0, (1.0, 2.0, 0.0))


def test_rescaled_reduces_at_unit_curvature(c1):
    R = np.array([0.5, 1.0, 4.0])
    np.testing.assert_allclose(rescaled_q(3, -1.0, R, c1[3]), q_closed_form(3, R, c1[3]),
                               rtol=1e-12)
    with pytest.raises(UnsupportedSpaceError):
        rescaled_q(3, 0.0, 1.0)


def test_rescaled_exponent():
    R = np.linspace(4.0, 8.0, 9)
    assert log_growth_rate(rescaled_q(3, -4.0, R), R) == pytest.approx(8.0, rel=1e-3)
    assert log_growth_rate(rescaled_ball_q(3, -4.0, R), R) == pytest.approx(8.0, rel=1e-3)


@pytest.mark.parametrize("R", [0.5, 1.3])
def test_rescaled_vs_quadrature(c1, R):
    space = SpaceForm(3, -4.0)
    P = poisson_kernel(space)
    g = Integrand(lambda x: P.evaluate(x) ** 2, axis=P.symmetry_axis, axial=True, peaked=True)
    quad, _ = sphere_integral(g, space, R)
    assert rescaled_q(3, -4.0, R, c1[3]) == pytest.approx(quad, rel=1e-9)
