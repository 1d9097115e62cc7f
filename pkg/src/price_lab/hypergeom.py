"""Sphere integral of the squared hyperbolic Poisson kernel via a terminating 2F1.

For n >= 3 and P the ball-model kernel normalized by P(0, zeta) = 1,

    Q(R) = int_{S_R} P^2 = c1 sinh^(n-1)(R) 2F1(1-n, (n-1)/2, (5-3n)/2; e^{2R}) / e^{(n-1)R},

and expanding sinh^(n-1) into exponentials collapses Q into a sum of 2n-1
exponentials alpha_{j+n-1} e^{2jR}, j = -(n-1) .. n-1. The constant c1 is
calibrated against quadrature at one radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError, ParameterConflictError, UnsupportedSpaceError

ANCHOR_RADIUS = 1.0


def _is_nonpositive_integer(a) -> bool:
    return float(a) == int(a) and int(a) <= 0


def _exact(v):
    return v if isinstance(v, (int, Fraction)) else Fraction(v).limit_denominator(10**12)


@lru_cache(maxsize=None)
def series_coefficients(a, b, c) -> tuple:
    """Exact coefficients (a)_m (b)_m / ((c)_m m!) of a terminating 2F1."""
    if not _is_nonpositive_integer(a):
        raise DomainError(f"a must be a non-positive integer, got {a}")
    a, b, c = int(a), _exact(b), _exact(c)
    coeffs = [Fraction(1)]
    term = Fraction(1)
    for m in range(-a):
        # passing from term m to m+1 multiplies by (a+m)(b+m) / ((c+m)(m+1))
        if c + m == 0:
            raise ParameterConflictError(
                f"(c)_m vanishes at m={m + 1} before the series truncates at m={-a}")
        term = term * (a + m) * (b + m) / ((c + m) * (m + 1))
        coeffs.append(term)
    return tuple(coeffs)


def hyp2f1_terminating(a, b, c, z):
    """Terminating Gauss series sum_{m=0}^{|a|} (a)_m (b)_m / ((c)_m m!) z^m.

    Terms are summed with math.fsum; z may be a scalar or an array.
    """
    coeffs = [float(t) for t in series_coefficients(a, b, c)]
    z_arr = np.asarray(z, dtype=float)
    flat = z_arr.reshape(-1)
    out = np.empty(flat.shape)
    for i, zi in enumerate(flat):
        out[i] = math.fsum(cm * zi**m for m, cm in enumerate(coeffs))
    out = out.reshape(z_arr.shape)
    return float(out) if z_arr.ndim == 0 else out


def poisson_parameters(n: int):
    """(a, b, c) = (1-n, (n-1)/2, (5-3n)/2), checked for truncation before any pole."""
    if n < 3:
        raise UnsupportedSpaceError("the 2F1 series terminates only for n >= 3")
    params = (1 - n, Fraction(n - 1, 2), Fraction(5 - 3 * n, 2))
    series_coefficients(*params)
    return params


def q_closed_form(n: int, R, c1: float = 1.0):
    """c1 sinh^(n-1)(R) 2F1(1-n, (n-1)/2, (5-3n)/2; e^{2R}) / e^{(n-1)R}."""
    a, b, c = poisson_parameters(n)
    R_arr = np.asarray(R, dtype=float)
    if np.any(R_arr <= 0):
        raise DomainError("R must be > 0")
    F = hyp2f1_terminating(a, b, c, np.exp(2.0 * R_arr))
    out = c1 * np.sinh(R_arr) ** (n - 1) * F / np.exp((n - 1) * R_arr)
    return float(out) if R_arr.ndim == 0 else out


@lru_cache(maxsize=None)
def exact_exponential_coefficients(n: int) -> tuple:
    """Rational coefficients of e^{2jR}, j = -(n-1)..(n-1), for c1 = 1."""
    a, b, c = poisson_parameters(n)
    F = series_coefficients(a, b, c)  # polynomial in u^2, u = e^R
    # sinh^(n-1)(R) / e^{(n-1)R} = 2^-(n-1) sum_i binom(n-1, i) (-1)^i u^(-2i)
    S = [Fraction(math.comb(n - 1, i) * (-1) ** i, 2 ** (n - 1)) for i in range(n)]
    alpha = [Fraction(0)] * (2 * n - 1)
    for m, fm in enumerate(F):
        for i, si in enumerate(S):
            alpha[m - i + n - 1] += fm * si
    return tuple(alpha)


@dataclass(frozen=True)
class QFormEvaluation:
    dim: int
    c1: float
    alpha: tuple

    def __post_init__(self):
        if len(self.alpha) != 2 * self.dim - 1:
            raise DomainError("alpha must have 2n-1 entries")
        if self.alpha[-1] == 0:
            raise DomainError("leading coefficient vanishes")

    @property
    def exponents(self) -> np.ndarray:
        """The rates 2j multiplying R, aligned with alpha."""
        return 2.0 * np.arange(-(self.dim - 1), self.dim)

    def eval(self, R):
        R_arr = np.asarray(R, dtype=float)
        terms = np.multiply.outer(R_arr, self.exponents)
        out = np.exp(terms) @ np.asarray(self.alpha, dtype=float)
        return float(out) if R_arr.ndim == 0 else out

    def ball_integral(self, R):
        """int_0^R Q(r) dr, integrated term by term."""
        R_arr = np.asarray(R, dtype=float)
        out = np.zeros(R_arr.shape)
        for rate, a in zip(self.exponents, self.alpha):
            if rate == 0:
                out = out + a * R_arr
            else:
                out = out + a * np.expm1(rate * R_arr) / rate
        return float(out) if R_arr.ndim == 0 else out


def q_coefficients(n: int, c1: float = 1.0) -> QFormEvaluation:
    alpha = tuple(c1 * float(a) for a in exact_exponential_coefficients(n))
    return QFormEvaluation(n, float(c1), alpha)


def q_quadrature(n: int, R: float, curvature: float = -1.0, spec=None):
    """Sphere integral of P^2 on the geodesic sphere of radius R, by quadrature."""
    from .harmonics import poisson_kernel
    from .quadrature import Integrand, QuadratureSpec, sphere_integral
    from .spaceform import SpaceForm

    space = SpaceForm(n, curvature)
    P = poisson_kernel(space)
    g = Integrand(lambda x: P.evaluate(x) ** 2, axis=P.symmetry_axis, axial=True, peaked=True)
    spec = spec or QuadratureSpec(target_rel_tol=1e-12, max_refinements=4)
    return sphere_integral(g, space, R, spec)


def calibrate_c1(n: int, anchor: float = ANCHOR_RADIUS, spec=None) -> float:
    """c1 such that the closed form matches quadrature at the anchor radius."""
    value, _ = q_quadrature(n, anchor, -1.0, spec)
    return value / q_closed_form(n, anchor, 1.0)


def rescaled_q(n: int, k_prime: float, R, c1: float = 1.0):
    """Q on curvature k' < 0: the k = -1 form at sqrt|k'| R times |k'|^-(n-1)/2."""
    if not k_prime < 0:
        raise UnsupportedSpaceError("rescaling needs k' < 0")
    a = math.sqrt(-k_prime)
    form = q_coefficients(n, c1)
    R_arr = np.asarray(R, dtype=float)
    out = form.eval(a * R_arr) * a ** (-(n - 1))
    return float(out) if R_arr.ndim == 0 else out


def rescaled_ball_q(n: int, k_prime: float, R, c1: float = 1.0):
    """int_0^R of :func:`rescaled_q`, i.e. the ball energy of a single kernel."""
    if not k_prime < 0:
        raise UnsupportedSpaceError("rescaling needs k' < 0")
    a = math.sqrt(-k_prime)
    form = q_coefficients(n, c1)
    return form.ball_integral(a * np.asarray(R, dtype=float)) * a ** (-n)


def log_growth_rate(values, radii) -> float:
    """Least-squares slope of log(values) against radii."""
    radii = np.asarray(radii, dtype=float)
    slope, _ = np.polyfit(radii, np.log(np.asarray(values, dtype=float)), 1)
    return float(slope)
