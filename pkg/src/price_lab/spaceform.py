"""Constant-curvature model spaces.

Euclidean space (k = 0) uses Cartesian coordinates. Hyperbolic space of
curvature k < 0 uses the Poincare ball model, with metric

    g = (2 / (sqrt|k| (1 - |x|^2)))^2 * delta,

so that a geodesic sphere of radius R about the origin is the Euclidean
sphere of radius tanh(sqrt|k| R / 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, UnsupportedSpaceError


@dataclass(frozen=True)
class SpaceForm:
    dim: int
    curvature: float = 0.0

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise DomainError(f"dimension must be an integer >= 2, got {self.dim}")
        if not math.isfinite(self.curvature) or self.curvature > 0:
            raise DomainError(f"curvature must be <= 0, got {self.curvature}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "curvature", float(self.curvature))

    @property
    def is_euclidean(self) -> bool:
        return self.curvature == 0.0

    @property
    def scale(self) -> float:
        """sqrt|k|; zero for Euclidean space."""
        return math.sqrt(-self.curvature)


def unit_sphere_area(n: int) -> float:
    """Area of the unit sphere S^{n-1} in R^n."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def _positive(r, name="r"):
    r = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(r)) or np.any(r <= 0):
        raise DomainError(f"{name} must be > 0")
    return r


def _nonnegative(r, name="R"):
    r = np.asarray(r, dtype=float)
    if np.any(np.isnan(r)) or np.any(r < 0):
        raise DomainError(f"{name} must be >= 0")
    return r


def _unwrap(value, like):
    return float(value) if np.ndim(like) == 0 else value


def mean_curvature(space: SpaceForm, r):
    """Mean curvature H_k(r) of the geodesic sphere of radius r."""
    r_arr = _positive(r)
    n = space.dim
    if space.is_euclidean:
        out = (n - 1) * (1.0 / r_arr)
    else:
        a = space.scale
        x = a * r_arr
        with np.errstate(divide="ignore", invalid="ignore"):
            direct = a / np.tanh(x)
        # Laurent series of coth keeps the k -> 0 limit exact
        series = 1.0 / r_arr + a * x / 3.0 - a * x**3 / 45.0
        out = (n - 1) * np.where(x < 1e-3, series, direct)
    return _unwrap(out, r)


def area_density(space: SpaceForm, r):
    """Ratio of the geodesic sphere area to the unit-sphere area."""
    r_arr = _nonnegative(r)
    n = space.dim
    if space.is_euclidean:
        out = r_arr ** (n - 1)
    else:
        a = space.scale
        out = (np.sinh(a * r_arr) / a) ** (n - 1)
    return _unwrap(out, r)


def sphere_area(space: SpaceForm, R):
    """Area of the geodesic sphere of radius R."""
    out = unit_sphere_area(space.dim) * np.asarray(area_density(space, R))
    return _unwrap(out, R)


def ball_volume(space: SpaceForm, R: float) -> float:
    """Volume of the geodesic ball of radius R."""
    R = float(_nonnegative(R))
    n = space.dim
    if space.is_euclidean:
        return unit_sphere_area(n) * R**n / n
    if R == 0.0:
        return 0.0
    a = space.scale
    # factor out the dominant growth so quad sees an O(1) integrand
    peak = math.sinh(a * R) / a
    val, _ = integrate.quad(
        lambda t: (math.sinh(a * t) / a / peak) ** (n - 1), 0.0, R,
        epsabs=0.0, epsrel=1e-13, limit=200,
    )
    return unit_sphere_area(n) * val * peak ** (n - 1)


def geodesic_to_ball_radius(space: SpaceForm, R):
    """Euclidean radius in the ball model of the geodesic sphere of radius R."""
    if space.is_euclidean:
        raise UnsupportedSpaceError("ball-model coordinates need curvature < 0")
    R_arr = _nonnegative(R)
    return _unwrap(np.tanh(space.scale * R_arr / 2.0), R)


def ball_to_geodesic_radius(space: SpaceForm, rho):
    """Inverse of :func:`geodesic_to_ball_radius`."""
    if space.is_euclidean:
        raise UnsupportedSpaceError("ball-model coordinates need curvature < 0")
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(rho_arr < 0) or np.any(rho_arr >= 1):
        raise DomainError("ball radius must lie in [0, 1)")
    return _unwrap(2.0 * np.arctanh(rho_arr) / space.scale, rho)


def model_radius(space: SpaceForm, R):
    """Coordinate radius of the geodesic sphere of radius R (identity for k = 0)."""
    if space.is_euclidean:
        return _unwrap(_nonnegative(R), R)
    return geodesic_to_ball_radius(space, R)


def conformal_factor(space: SpaceForm, x) -> np.ndarray:
    """Factor lambda(x) with g = lambda^2 * delta at model points x (shape (..., n))."""
    x = np.asarray(x, dtype=float)
    if space.is_euclidean:
        return np.ones(x.shape[:-1])
    s = np.sum(x * x, axis=-1)
    if np.any(s >= 1.0):
        raise DomainError("point outside the Poincare ball")
    return 2.0 / (space.scale * (1.0 - s))


def in_domain(space: SpaceForm, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if space.is_euclidean:
        return np.all(np.isfinite(x), axis=-1)
    return np.sum(x * x, axis=-1) < 1.0
