"""Catalog of exactly harmonic test functions on the model spaces.

Three families are supported:

* :class:`Constant` on any space form;
* :class:`EuclideanPolynomial`, finite sums of homogeneous harmonic
  polynomials on R^n (also accepted on the hyperbolic plane, where the
  Laplacian is conformally invariant);
* :class:`PoissonCombo`, positive combinations of hyperbolic Poisson kernels
  ``((1 - |x|^2) / |x - zeta|^2)^(n-1)`` in the ball model, normalized so the
  kernel equals 1 at the origin.

Points are arrays of shape ``(..., n)`` in model coordinates. ``gradient``
returns coordinate partial derivatives; Riemannian norms go through the
conformal factor of :mod:`price_lab.spaceform`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import quadrature
from .errors import DomainError, SingularBoundaryError, UnsupportedSpaceError
from .spaceform import SpaceForm, conformal_factor, in_domain

_AXIS_TOL = 1e-12


def _unit(v, n: int) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape != (n,):
        raise DomainError(f"direction must have {n} components, got {v.shape[0]}")
    norm = np.linalg.norm(v)
    if not norm > 0:
        raise DomainError("direction must be non-zero")
    return v / norm


def _basis_vector(i: int, n: int) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


def _parallel(a: np.ndarray, b: np.ndarray) -> bool:
    return abs(abs(float(a @ b)) - 1.0) < _AXIS_TOL


# -- homogeneous harmonic basis elements -----------------------------------


def zonal_coefficients(degree: int, n: int) -> np.ndarray:
    """Ascending coefficients of the zonal polynomial G_d(t), normalized G_d(1) = 1.

    Built from the Gegenbauer three-term recurrence with index (n-2)/2; in the
    plane (index 0) the Chebyshev recurrence is used instead.
    """
    if degree < 0:
        raise DomainError("degree must be >= 0")
    lam = (n - 2) / 2.0
    prev = np.array([1.0])
    if degree == 0:
        return prev
    cur = np.array([0.0, 1.0]) if lam == 0 else np.array([0.0, 2.0 * lam])
    for d in range(2, degree + 1):
        shifted = np.concatenate([[0.0], cur])
        padded = np.concatenate([prev, [0.0, 0.0]])
        if lam == 0:
            nxt = 2.0 * shifted - padded
        else:
            nxt = (2.0 * (d + lam - 1) * shifted - (d + 2 * lam - 2) * padded) / d
        prev, cur = cur, nxt
    return cur / np.sum(cur)


@dataclass(frozen=True)
class Unit:
    """The constant polynomial 1 (degree 0)."""

    degree: int = field(default=0, init=False)

    def value(self, x):
        return np.ones(np.shape(x)[:-1])

    def grad(self, x):
        return np.zeros(np.shape(x))

    def axis(self, n):
        return None


@dataclass(frozen=True)
class Coordinate:
    index: int
    degree: int = field(default=1, init=False)

    def value(self, x):
        return x[..., self.index]

    def grad(self, x):
        g = np.zeros(np.shape(x))
        g[..., self.index] = 1.0
        return g

    def axis(self, n):
        return _basis_vector(self.index, n)


@dataclass(frozen=True)
class Product:
    """x_i * x_j with i != j."""

    i: int
    j: int
    degree: int = field(default=2, init=False)

    def __post_init__(self):
        if self.i == self.j:
            raise DomainError("product basis element needs distinct indices")

    def value(self, x):
        return x[..., self.i] * x[..., self.j]

    def grad(self, x):
        g = np.zeros(np.shape(x))
        g[..., self.i] = x[..., self.j]
        g[..., self.j] = x[..., self.i]
        return g

    def axis(self, n):
        return None


@dataclass(frozen=True)
class DifferenceOfSquares:
    """x_i^2 - x_j^2 with i != j."""

    i: int
    j: int
    degree: int = field(default=2, init=False)

    def __post_init__(self):
        if self.i == self.j:
            raise DomainError("difference of squares needs distinct indices")

    def value(self, x):
        return x[..., self.i] ** 2 - x[..., self.j] ** 2

    def grad(self, x):
        g = np.zeros(np.shape(x))
        g[..., self.i] = 2.0 * x[..., self.i]
        g[..., self.j] = -2.0 * x[..., self.j]
        return g

    def axis(self, n):
        return None


@dataclass(frozen=True)
class Axial:
    """Solid zonal harmonic |x|^d G_d(a.x / |x|) about the unit axis a."""

    degree: int
    axis_vector: tuple
    dim: int

    def __post_init__(self):
        a = _unit(self.axis_vector, self.dim)
        object.__setattr__(self, "axis_vector", tuple(a))
        if self.degree < 0:
            raise DomainError("degree must be >= 0")

    @cached_property
    def _terms(self):
        # G_d(z/r) r^d = sum_j c_j z^j (r^2)^((d-j)/2); only j = d mod 2 survive
        c = zonal_coefficients(self.degree, self.dim)
        return [(j, (self.degree - j) // 2, c[j])
                for j in range(self.degree % 2, self.degree + 1, 2) if c[j] != 0.0]

    def value(self, x):
        a = np.asarray(self.axis_vector)
        z = x @ a
        s = np.sum(x * x, axis=-1)
        out = np.zeros(np.shape(x)[:-1])
        for j, p, c in self._terms:
            out = out + c * z**j * s**p
        return out

    def grad(self, x):
        a = np.asarray(self.axis_vector)
        z = x @ a
        s = np.sum(x * x, axis=-1)
        g = np.zeros(np.shape(x))
        for j, p, c in self._terms:
            if j > 0:
                g = g + (c * j * z ** (j - 1) * s**p)[..., None] * a
            if p > 0:
                g = g + (2.0 * c * p * z**j * s ** (p - 1))[..., None] * x
        return g

    def axis(self, n):
        return np.asarray(self.axis_vector)


@dataclass(frozen=True)
class Term:
    basis: object
    coefficient: float = 1.0

    @property
    def degree(self) -> int:
        return self.basis.degree


# -- harmonic functions ------------------------------------------------------


class HarmonicFunction:
    """Common interface of the catalog members."""

    space: SpaceForm

    def evaluate(self, x) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def value_and_gradient(self, x):
        return self.evaluate(x), self.gradient(x)

    def riemannian_gradient_norm_sq(self, x) -> np.ndarray:
        x = self._check(x)
        g = self.gradient(x)
        lam = conformal_factor(self.space, x)
        return np.sum(g * g, axis=-1) / lam**2

    def radial_derivative(self, x) -> np.ndarray:
        """Derivative along the unit-speed radial geodesic from the origin."""
        x = self._check(x)
        g = self.gradient(x)
        r = np.linalg.norm(x, axis=-1)
        lam = conformal_factor(self.space, x)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.sum(g * x, axis=-1) / (r * lam)
        return np.where(r > 0, out, 0.0)

    @property
    def is_constant(self) -> bool:
        return False

    @property
    def symmetry_axis(self):
        """Unit axis about which f is rotation invariant, or None."""
        return None

    @property
    def peak_axis(self):
        """Direction where |f| concentrates near the ideal boundary, or None."""
        return self.symmetry_axis

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.space.dim:
            raise DomainError(f"points must have {self.space.dim} components")
        if not np.all(in_domain(self.space, x)):
            raise DomainError("point outside the model domain")
        return x


@dataclass(frozen=True)
class Constant(HarmonicFunction):
    value: float
    space: SpaceForm

    def evaluate(self, x):
        x = self._check(x)
        return np.full(x.shape[:-1], float(self.value))

    def gradient(self, x):
        x = self._check(x)
        return np.zeros(x.shape)

    @property
    def is_constant(self) -> bool:
        return True

    @property
    def symmetry_axis(self):
        return _basis_vector(0, self.space.dim)


@dataclass(frozen=True)
class EuclideanPolynomial(HarmonicFunction):
    terms: tuple
    space: SpaceForm

    def __post_init__(self):
        n = self.space.dim
        if not self.space.is_euclidean and n != 2:
            raise UnsupportedSpaceError(
                "harmonic polynomials are hyperbolic-harmonic only in dimension 2")
        terms = tuple(t if isinstance(t, Term) else Term(*t) for t in self.terms)
        if not terms:
            raise DomainError("polynomial needs at least one term")
        for t in terms:
            b = t.basis
            for idx in (getattr(b, "index", None), getattr(b, "i", None),
                        getattr(b, "j", None)):
                if idx is not None and not 0 <= idx < n:
                    raise DomainError(f"coordinate index {idx} out of range for n={n}")
            if isinstance(b, Axial) and b.dim != n:
                raise DomainError("axial basis dimension does not match the space")
        object.__setattr__(self, "terms", terms)

    def evaluate(self, x):
        x = self._check(x)
        return sum(t.coefficient * t.basis.value(x) for t in self.terms)

    def gradient(self, x):
        x = self._check(x)
        return sum(t.coefficient * t.basis.grad(x) for t in self.terms)

    @property
    def is_constant(self) -> bool:
        return all(t.degree == 0 or t.coefficient == 0.0 for t in self.terms)

    @property
    def degrees(self) -> list[int]:
        return sorted({t.degree for t in self.terms if t.coefficient != 0.0})

    @cached_property
    def symmetry_axis(self):
        n = self.space.dim
        axes = [t.basis.axis(n) for t in self.terms if t.degree > 0]
        if any(a is None for a in axes):
            return None
        if not axes:
            return _basis_vector(0, n)
        if all(_parallel(axes[0], a) for a in axes[1:]):
            return axes[0]
        return None

    def component(self, degree: int) -> "EuclideanPolynomial":
        terms = tuple(t for t in self.terms if t.degree == degree)
        if not terms:
            raise DomainError(f"no terms of degree {degree}")
        return EuclideanPolynomial(terms, self.space)

    @cached_property
    def sphere_constants(self) -> dict:
        """epsilon_d = integral over the unit sphere of v_d^2, per degree present.

        Homogeneous components of distinct degree are L^2-orthogonal on spheres,
        so these constants determine every sphere and ball integral of f.
        """
        flat = SpaceForm(self.space.dim, 0.0)
        spec = quadrature.QuadratureSpec(angular_order=16, target_rel_tol=1e-12,
                                         max_refinements=4)
        out = {}
        for d in self.degrees:
            comp = EuclideanPolynomial(self.component(d).terms, flat)
            g = quadrature.Integrand(lambda x, c=comp: c.evaluate(x) ** 2,
                                     axis=comp.symmetry_axis,
                                     axial=comp.symmetry_axis is not None)
            out[d], _ = quadrature.sphere_integral(g, flat, 1.0, spec)
        return out


@dataclass(frozen=True)
class PoissonCombo(HarmonicFunction):
    """Positive combination sum_i w_i P(x, zeta_i) of ball-model Poisson kernels.

    In curvature k the same coordinate expression is used: the metric is a
    constant multiple of the k = -1 metric, so harmonicity is unchanged and
    Riemannian gradients pick up the factor |k|.
    """

    atoms: tuple
    space: SpaceForm

    def __post_init__(self):
        if self.space.is_euclidean:
            raise UnsupportedSpaceError("Poisson kernels need curvature < 0")
        n = self.space.dim
        if not self.atoms:
            raise DomainError("PoissonCombo needs at least one atom")
        atoms = []
        for w, zeta in self.atoms:
            if not (math.isfinite(w) and w > 0):
                raise DomainError(f"atom weights must be > 0, got {w}")
            atoms.append((float(w), tuple(_unit(zeta, n))))
        object.__setattr__(self, "atoms", tuple(atoms))

    @property
    def _weights(self):
        return np.array([w for w, _ in self.atoms])

    @property
    def _directions(self):
        return np.array([z for _, z in self.atoms])

    @property
    def directions(self) -> np.ndarray:
        return self._directions

    def _kernels(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.space.dim:
            raise DomainError(f"points must have {self.space.dim} components")
        zeta = self._directions
        diff = x[..., None, :] - zeta
        dist2 = np.einsum("...ij,...ij->...i", diff, diff)
        if np.any(dist2 == 0.0):
            raise SingularBoundaryError("point coincides with a boundary pole")
        s = np.einsum("...i,...i->...", x, x)
        if np.any(s >= 1.0):
            raise DomainError("point outside the Poincare ball")
        q = (1.0 - s)[..., None]
        kern = (q / dist2) ** (self.space.dim - 1)
        return x, s, diff, dist2, kern

    def evaluate(self, x):
        _, _, _, _, kern = self._kernels(x)
        return kern @ self._weights

    def gradient(self, x):
        return self.value_and_gradient(x)[1]

    def value_and_gradient(self, x):
        x, s, diff, dist2, kern = self._kernels(x)
        n = self.space.dim
        # grad log P_i = (n-1) (-2x/(1-|x|^2) - 2(x - zeta_i)/|x - zeta_i|^2)
        glog = -2.0 * (n - 1) * (x[..., None, :] / (1.0 - s)[..., None, None]
                                 + diff / dist2[..., None])
        wk = kern * self._weights
        return wk.sum(axis=-1), np.einsum("...i,...ij->...j", wk, glog)

    @cached_property
    def symmetry_axis(self):
        dirs = self._directions
        if all(_parallel(dirs[0], z) for z in dirs[1:]):
            return dirs[0]
        return None

    @property
    def peak_axis(self):
        return self._directions[0]


# -- self checks -------------------------------------------------------------


def laplace_beltrami(f: HarmonicFunction, x, h: float = 1e-3) -> np.ndarray:
    """Finite-difference Laplace-Beltrami operator of f at x.

    Uses the divergence form ``lambda^-n sum_i d_i(lambda^(n-2) d_i f)`` for
    the conformal metric ``lambda^2 delta`` with a symmetric three-point stencil.
    The coordinate step is ``h / lambda(x)``, i.e. h is measured in the metric,
    in units of the curvature radius 1/sqrt|k| when k < 0.
    """
    space = f.space
    n = space.dim
    x = np.asarray(x, dtype=float)
    if not np.all(in_domain(space, x)):
        raise DomainError("point outside the model domain")
    lam = conformal_factor(space, x)
    if not space.is_euclidean:
        h = h / space.scale
    delta = (h / lam)[..., None]
    f0 = f.evaluate(x)
    total = np.zeros(x.shape[:-1])
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        step = delta * e
        for sign in (1.0, -1.0):
            xs = x + sign * step
            xm = x + 0.5 * sign * step
            if not np.all(in_domain(space, xs)):
                raise DomainError("finite-difference stencil leaves the domain")
            weight = conformal_factor(space, xm) ** (n - 2)
            total = total + weight * (f.evaluate(xs) - f0)
    return total / (delta[..., 0] ** 2 * lam**n)


def harmonicity_residual(f: HarmonicFunction, x, h: float = 1e-3) -> np.ndarray:
    """Scaled residual |Delta_g f(x)| / max(|f(x)|, 1); O(h^2) for harmonic f.

    For k < 0 the Laplacian is also divided by |k|, which makes the residual
    invariant under rescaling the metric.
    """
    lap = laplace_beltrami(f, x, h)
    if not f.space.is_euclidean:
        lap = lap / -f.space.curvature
    return np.abs(lap) / np.maximum(np.abs(f.evaluate(x)), 1.0)


def sample_points(space: SpaceForm, rng: np.random.Generator, count: int,
                  max_radius: float) -> np.ndarray:
    """Random interior points with geodesic distance to the origin up to max_radius."""
    n = space.dim
    dirs = rng.standard_normal((count, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    r = max_radius * rng.uniform(0.0, 1.0, size=count)
    if not space.is_euclidean:
        r = np.tanh(space.scale * r / 2.0)
    return dirs * r[:, None]


# -- construction from plain data ---------------------------------------------


def basis_from_spec(spec: dict, n: int):
    kind = spec["basis"]
    if kind == "unit":
        return Unit()
    if kind == "coordinate":
        return Coordinate(int(spec["index"]))
    if kind == "product":
        i, j = spec["indices"]
        return Product(int(i), int(j))
    if kind == "difference_of_squares":
        i, j = spec["indices"]
        return DifferenceOfSquares(int(i), int(j))
    if kind == "axial":
        axis = spec.get("axis") or list(_basis_vector(0, n))
        return Axial(int(spec["degree"]), tuple(axis), n)
    raise DomainError(f"unknown basis element {kind!r}")


def function_from_spec(spec: dict, space: SpaceForm) -> HarmonicFunction:
    """Build a catalog member from its JSON description."""
    kind = spec["kind"]
    if kind == "constant":
        return Constant(float(spec.get("value", 1.0)), space)
    if kind == "polynomial":
        terms = []
        for t in spec["terms"]:
            basis = basis_from_spec(t, space.dim)
            if "degree" in t and int(t["degree"]) != basis.degree:
                raise DomainError(
                    f"term degree {t['degree']} does not match basis degree {basis.degree}")
            terms.append(Term(basis, float(t.get("coefficient", 1.0))))
        return EuclideanPolynomial(tuple(terms), space)
    if kind == "poisson":
        atoms = tuple((float(a.get("weight", 1.0)), tuple(a["direction"]))
                      for a in spec["atoms"])
        return PoissonCombo(atoms, space)
    raise DomainError(f"unknown function kind {kind!r}")


def axial_polynomial(space: SpaceForm, degrees: Sequence[int],
                     coefficients: Sequence[float] | None = None,
                     axis=None) -> EuclideanPolynomial:
    """Sum of zonal solid harmonics about one axis (default e_1)."""
    n = space.dim
    axis = tuple(_basis_vector(0, n) if axis is None else axis)
    coefficients = coefficients or [1.0] * len(degrees)
    terms = tuple(Term(Unit() if d == 0 else Axial(d, axis, n), c)
                  for d, c in zip(degrees, coefficients))
    return EuclideanPolynomial(terms, space)


def poisson_kernel(space: SpaceForm, direction=None, weight: float = 1.0) -> PoissonCombo:
    direction = _basis_vector(0, space.dim) if direction is None else direction
    return PoissonCombo(((weight, tuple(direction)),), space)
