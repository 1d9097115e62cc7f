"""Growth profiles of harmonic functions: sphere/ball energies, mu and Almgren U.

For a harmonic f and geodesic radius R about the origin:

    S(R) = int_{S_R} f^2          B(R) = int_{B_R} f^2
    D(R) = int_{B_R} |grad f|^2   E(R) = 2 int_0^R D(r) dr
    mu(R) = E(R) / S(R)           U(R) = R D(R) / S(R)

On a space form the divergence theorem gives S(R) = int_{B_R} H_k f^2 + E(R);
every profile records the relative residual of that identity.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import quadrature
from .errors import DomainError, NumericalViolationError, PreconditionError
from .harmonics import (EuclideanPolynomial, HarmonicFunction, harmonicity_residual,
                        sample_points)
from .quadrature import Integrand, QuadratureSpec
from .spaceform import SpaceForm, conformal_factor, mean_curvature

log = logging.getLogger(__name__)

HARMONICITY_GATE = 1e-4
GATE_POINTS = 20


@dataclass(frozen=True)
class GrowthSample:
    R: float
    sphere_energy: float
    ball_energy: float
    dirichlet: float
    iterated: float
    mu: float
    almgren: float
    # int_{B_R} H_k f^2, and |S - int H f^2 - E| / S
    curvature_energy: float = float("nan")
    divergence_residual: float = float("nan")


@dataclass(frozen=True)
class PolynomialSpectrum:
    """Degrees d_j and sphere constants eps_j of u = sum_j v_{d_j} on R^n."""

    dim: int
    entries: tuple

    def __post_init__(self):
        entries = tuple((int(d), float(e)) for d, e in self.entries)
        if not entries:
            raise DomainError("spectrum must be non-empty")
        degrees = [d for d, _ in entries]
        if any(b <= a for a, b in zip(degrees, degrees[1:])):
            raise DomainError("spectrum degrees must be strictly increasing")
        if any(not e > 0 for _, e in entries):
            raise DomainError("spectrum constants must be positive")
        object.__setattr__(self, "entries", entries)


def spectrum_of(f: EuclideanPolynomial) -> PolynomialSpectrum:
    eps = f.sphere_constants
    return PolynomialSpectrum(f.space.dim, tuple(sorted(eps.items())))


def mu_closed_form(d: int, n: int) -> float:
    """mu of a homogeneous harmonic polynomial of degree d on R^n: 2d / (2d + n - 1)."""
    if d < 0 or n < 2:
        raise DomainError("need d >= 0 and n >= 2")
    return 2.0 * d / (2.0 * d + n - 1)


def spectrum_mu(spectrum: PolynomialSpectrum, R: float) -> float:
    """Exact mu(R) of a Euclidean polynomial from its spectrum."""
    n = spectrum.dim
    d1 = spectrum.entries[0][0]
    num = den = 0.0
    for d, eps in spectrum.entries:
        # S-weights eps R^(2d+n-1), rescaled by R^-(2 d1 + n - 1)
        a = eps * R ** (2 * (d - d1))
        num += mu_closed_form(d, n) * a
        den += a
    return num / den


def mu_prime_series(spectrum: PolynomialSpectrum, R: float) -> float:
    """Derivative of mu(R) for u = sum_j v_{d_j} on R^n.

    Numerator   sum_{j<k} 2 (d_k - d_j)(mu_k - mu_j) eps_j eps_k R^(2(d_j + d_k - 2 d_1) - 1)
    Denominator sum_j eps_j^2 R^(4(d_j - d_1)) + 2 sum_{j<k} eps_j eps_k R^(2(d_j + d_k - 2 d_1))

    which follows from S = sum eps_j R^(2d_j+n-1) and E = sum mu_j eps_j R^(2d_j+n-1).
    """
    if not R > 0:
        raise DomainError("R must be > 0")
    n = spectrum.dim
    entries = spectrum.entries
    d1 = entries[0][0]
    num = 0.0
    den = 0.0
    for j, (dj, ej) in enumerate(entries):
        den += ej * ej * R ** (4 * (dj - d1))
        for dk, ek in entries[j + 1:]:
            p = 2 * (dj + dk - 2 * d1)
            num += (2.0 * (dk - dj) * (mu_closed_form(dk, n) - mu_closed_form(dj, n))
                    * ej * ek * R ** (p - 1))
            den += 2.0 * ej * ek * R**p
    return num / den


def almgren_frequency(sample: GrowthSample) -> float:
    if not sample.sphere_energy > 0:
        raise DomainError("Almgren frequency needs S(R) > 0")
    return sample.R * sample.dirichlet / sample.sphere_energy


def _rule_options(f: HarmonicFunction) -> dict:
    axial = f.symmetry_axis is not None
    axis = f.symmetry_axis if axial else f.peak_axis
    peaked = not f.space.is_euclidean and not f.is_constant
    centers = getattr(f, "directions", None) if not axial else None
    return dict(axis=axis, axial=axial, peaked=peaked, centers=centers)


def _geodesic_radius(space: SpaceForm, x) -> np.ndarray:
    r = np.linalg.norm(x, axis=-1)
    if not space.is_euclidean:
        r = 2.0 * np.arctanh(r) / space.scale
    return r


def _integrands(f: HarmonicFunction):
    """Integrands f^2, |grad f|^2, H f^2 and d_r(f^2), all on the same rule."""
    kw = _rule_options(f)
    space = f.space

    def f_sq(x):
        return f.evaluate(x) ** 2

    def grad_sq(x):
        return f.riemannian_gradient_norm_sq(x)

    def h_f_sq(x):
        return mean_curvature(space, _geodesic_radius(space, x)) * f.evaluate(x) ** 2

    def radial_f_sq(x):
        return 2.0 * f.evaluate(x) * f.radial_derivative(x)

    return (Integrand(f_sq, **kw), Integrand(grad_sq, **kw),
            Integrand(h_f_sq, **kw), Integrand(radial_f_sq, **kw))


def _profile_columns(f: HarmonicFunction) -> Integrand:
    """Columns (f^2, H f^2, |grad f|^2) from one evaluation of f and its gradient."""
    space = f.space

    def columns(x):
        v, g = f.value_and_gradient(x)
        lam = conformal_factor(space, x)
        v2 = v * v
        h = mean_curvature(space, _geodesic_radius(space, x))
        return np.column_stack([v2, h * v2, np.einsum("ij,ij->i", g, g) / lam**2])

    return Integrand(columns, **_rule_options(f))


def check_harmonic(f: HarmonicFunction, max_radius: float, seed: int = 0,
                   count: int = GATE_POINTS, tol: float = HARMONICITY_GATE) -> float:
    """Largest harmonicity residual at ``count`` seeded points; raises above tol."""
    rng = np.random.default_rng(seed)
    radius = max_radius if f.space.is_euclidean else min(max_radius, 3.0)
    pts = sample_points(f.space, rng, count, radius)
    worst = float(np.max(harmonicity_residual(f, pts)))
    if worst > tol:
        raise PreconditionError(f"function fails the harmonicity gate: residual {worst:.3g}")
    return worst


def growth_profile(f: HarmonicFunction, space: SpaceForm | None = None, r_grid=(1.0,),
                   spec: QuadratureSpec = QuadratureSpec(), seed: int = 0,
                   check: bool = True) -> list[GrowthSample]:
    """All Def.-level growth quantities of f on the grid."""
    space = space or f.space
    if space != f.space:
        raise DomainError("function lives on a different space form")
    radii = np.asarray(r_grid, dtype=float)
    if radii.ndim != 1 or len(radii) == 0 or np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise DomainError("radius grid must be positive and strictly increasing")
    if check:
        check_harmonic(f, float(radii[-1]), seed)
    g_f2 = _integrands(f)[0]
    S = quadrature.sphere_integrals(g_f2, space, radii, spec)[0]
    prof = quadrature.cumulative_profile(_profile_columns(f), space, radii, spec)
    ball, hf2, D = prof.running.T
    E = 2.0 * prof.iterated[:, 2]
    samples = []
    for i, R in enumerate(radii):
        if not S[i] > 0:
            raise NumericalViolationError(f"non-positive sphere energy at R={R}")
        mu = E[i] / S[i]
        if mu >= 1.0:
            raise NumericalViolationError(f"computed mu={mu!r} >= 1 at R={R}")
        samples.append(GrowthSample(
            R=float(R), sphere_energy=float(S[i]), ball_energy=float(ball[i]),
            dirichlet=float(D[i]), iterated=float(E[i]), mu=float(mu),
            almgren=float(R * D[i] / S[i]), curvature_energy=float(hf2[i]),
            divergence_residual=float(abs(S[i] - hf2[i] - E[i]) / S[i]),
        ))
    log.debug("profile of %s on %d radii done", type(f).__name__, len(radii))
    return samples


def iterated_energy_radial_form(f: HarmonicFunction, r_grid,
                                spec: QuadratureSpec = QuadratureSpec()) -> np.ndarray:
    """E(R) computed as int_{B_R} d_r(f^2), the first form of the mu numerator."""
    *_, g_rad = _integrands(f)
    return quadrature.cumulative_profile(g_rad, f.space, r_grid, spec).running


def green_sphere_flux(f: HarmonicFunction, R: float,
                      spec: QuadratureSpec = QuadratureSpec()) -> float:
    """int_{S_R} d_r(f^2), which equals 2 D(R) by Green's identity."""
    *_, g_rad = _integrands(f)
    return quadrature.sphere_integral(g_rad, f.space, R, spec)[0]


def centered_differences(x, y) -> np.ndarray:
    """Second-order derivative estimate along a grid, one-sided at both ends."""
    return np.gradient(np.asarray(y, dtype=float), np.asarray(x, dtype=float), edge_order=2)


def profile_arrays(samples: list[GrowthSample]) -> dict[str, np.ndarray]:
    fields = ("R", "sphere_energy", "ball_energy", "dirichlet", "iterated", "mu", "almgren")
    return {k: np.array([getattr(s, k) for s in samples]) for k in fields}
