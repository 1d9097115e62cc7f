"""Integration over geodesic spheres and balls centred at the origin of a model space.

Angular rule: a product rule on S^{n-1}, written in a frame whose first axis
is the integrand's distinguished direction. The polar angle from that axis
uses composite Gauss-Legendre panels (with the sin^(n-2) Jacobian folded into
the weights), graded geometrically towards both poles when the integrand is
peaked near the ideal boundary. The remaining directions form an S^(n-2)
handled recursively: Gauss-Legendre in each further polar angle, trapezoid in
the azimuth. Integrands invariant under rotations about the axis skip the
S^(n-2) factor entirely.

Radial rule: composite Gauss-Legendre panels in the geodesic radius, weighted
by the geodesic area element.

Integrands peaked at several boundary directions (non-axial Poisson
combinations) are split by a smooth partition of unity, one piece per
direction, and each piece is integrated with a rule oriented at its own peak.

Every result carries an error estimate equal to the change under doubling of
all orders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import DomainError, NonConvergenceError
from .spaceform import SpaceForm, area_density, model_radius, unit_sphere_area


@dataclass(frozen=True)
class QuadratureSpec:
    angular_order: int = 16
    radial_order: int = 16
    target_rel_tol: float = 1e-10
    max_refinements: int = 3
    # radial panels are at most this wide, in units of 1/sqrt|k| for k < 0
    panel_width: float = 0.5

    def __post_init__(self):
        if self.angular_order < 4:
            raise DomainError("angular_order must be >= 4")
        if self.radial_order < 8:
            raise DomainError("radial_order must be >= 8")
        if not 0 < self.target_rel_tol <= 1e-2:
            raise DomainError("target_rel_tol must lie in (0, 1e-2]")
        if self.max_refinements < 1:
            raise DomainError("max_refinements must be >= 1")
        if not self.panel_width > 0:
            raise DomainError("panel_width must be > 0")


@dataclass(frozen=True)
class Integrand:
    """Function of model points (shape (m, n)) -> values (m,) or components (m, c).

    ``axis`` orients the angular rule; ``axial`` promises invariance under
    rotations about it; ``peaked`` requests polar grading near the poles.
    ``centers`` (shape (k, n)) lists several peak directions; the sphere is
    then split by a partition of unity and each piece uses its own frame.
    """

    func: Callable[[np.ndarray], np.ndarray]
    axis: np.ndarray | None = None
    axial: bool = False
    peaked: bool = False
    centers: np.ndarray | None = None


@dataclass(frozen=True)
class CumulativeProfile:
    radii: np.ndarray
    running: np.ndarray
    running_err: np.ndarray
    iterated: np.ndarray
    iterated_err: np.ndarray


# -- rule construction ---------------------------------------------------------


@lru_cache(maxsize=None)
def gauss_legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _panel_nodes(breaks, order):
    x, w = gauss_legendre(order)
    breaks = np.asarray(breaks, dtype=float)
    a, b = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (b - a)
    return (a + half * (x + 1.0)).ravel(), (half * w).ravel()


def polar_breaks(width: float | None) -> np.ndarray:
    """Panel breakpoints on [0, pi], graded towards both poles down to ``width``."""
    if width is None or width >= 0.25:
        return np.array([0.0, 0.5 * math.pi, math.pi])
    inner = []
    t = width
    while t < 0.5 * math.pi:
        inner.append(t)
        t *= 2.0
    left = np.array([0.0] + inner)
    return np.concatenate([left, [0.5 * math.pi], math.pi - left[::-1]])


@lru_cache(maxsize=64)
def _polar_rule(order: int, power: int, width: float | None):
    theta, w = _panel_nodes(polar_breaks(width), order)
    w = w * np.sin(theta) ** power
    return theta, w


@lru_cache(maxsize=32)
def subsphere_rule(p: int, order: int):
    """Product rule on S^p in R^(p+1); weights sum to the area of S^p."""
    if p == 0:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if p == 1:
        m = 2 * order
        phi = 2.0 * math.pi * np.arange(m) / m
        return np.column_stack([np.cos(phi), np.sin(phi)]), np.full(m, 2.0 * math.pi / m)
    theta, wt = _polar_rule(order, p - 1, None)
    sub_pts, sub_w = subsphere_rule(p - 1, order)
    ct = np.repeat(np.cos(theta), len(sub_w))
    st = np.repeat(np.sin(theta), len(sub_w))
    pts = np.column_stack([ct, st[:, None] * np.tile(sub_pts, (len(theta), 1))])
    return pts, np.outer(wt, sub_w).ravel()


def _frame(axis, n: int) -> np.ndarray:
    """Orthogonal matrix whose first column is ``axis`` (Householder reflection)."""
    e1 = np.zeros(n)
    e1[0] = 1.0
    if axis is None:
        return np.eye(n)
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    v = e1 - a
    vv = v @ v
    if vv < 1e-30:
        return np.eye(n)
    return np.eye(n) - 2.0 * np.outer(v, v) / vv


def _peak_width(space: SpaceForm, R: float, peaked: bool):
    """Polar grading width 1 - rho, rounded down to a power of two so radii share rules."""
    if not peaked or space.is_euclidean:
        return None
    rho = model_radius(space, R)
    w = max(1.0 - rho, 1e-15)
    if w >= 0.25:
        return None
    return 2.0 ** math.floor(math.log2(w))


def unit_sphere_rule(n: int, order: int, axis=None, width=None, axial=False):
    """Nodes and weights on S^(n-1); axial rules return only the polar nodes.

    For ``axial`` the weights already include the area of S^(n-2).
    """
    theta, wt = _polar_rule(order, n - 2, width)
    frame = _frame(axis, n)
    if axial:
        local = np.zeros((len(theta), n))
        local[:, 0] = np.cos(theta)
        local[:, 1] = np.sin(theta)
        return local @ frame.T, wt * unit_sphere_area(n - 1)
    sub_pts, sub_w = subsphere_rule(n - 2, order)
    ct = np.repeat(np.cos(theta), len(sub_w))
    st = np.repeat(np.sin(theta), len(sub_w))
    local = np.column_stack([ct, st[:, None] * np.tile(sub_pts, (len(theta), 1))])
    return local @ frame.T, np.outer(wt, sub_w).ravel()


# -- evaluation ------------------------------------------------------------------


def _partition(points, s, centers, n):
    """Softmax weights proportional to ((1 - s^2) / |x - c_j|^2)^(2(n-1))."""
    d2 = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=-1)
    logits = -2.0 * (n - 1) * np.log(d2)
    logits -= logits.max(axis=1, keepdims=True)
    w = np.exp(logits)
    return w / w.sum(axis=1, keepdims=True)


# points per vectorized integrand call
_CHUNK = 200_000


def _rule_groups(space: SpaceForm, radii: np.ndarray, peaked: bool):
    """Indices of radii sharing one polar grading width."""
    widths = [_peak_width(space, R, peaked) for R in radii]
    groups: dict = {}
    for i, w in enumerate(widths):
        groups.setdefault(w, []).append(i)
    return groups.items()


def _apply_rule(func, pts, w, s_vals, chi=None):
    """sum_j w_j func(s_i * pts_j) [* chi] for every coordinate radius s_i, in chunks.

    ``func`` may return one value per point or a row of components per point.
    """
    parts = []
    step = max(1, _CHUNK // len(w))
    for lo in range(0, len(s_vals), step):
        s = s_vals[lo:lo + step]
        x = (s[:, None, None] * pts[None, :, :]).reshape(-1, pts.shape[1])
        vals = np.asarray(func(x), dtype=float)
        vals = vals.reshape(len(s), len(w), *vals.shape[1:])
        if chi is not None:
            c = chi(x).reshape(len(s), len(w))
            vals = vals * c.reshape(c.shape + (1,) * (vals.ndim - 2))
        parts.append(np.tensordot(w, vals, axes=([0], [1])))
    return np.concatenate(parts)


def _scale_rows(values: np.ndarray, factor: np.ndarray) -> np.ndarray:
    return values * factor.reshape(factor.shape + (1,) * (values.ndim - factor.ndim))


def _multi_center_values(g: Integrand, space: SpaceForm, radii, order: int) -> np.ndarray:
    centers = np.asarray(g.centers, dtype=float)
    n = space.dim
    out = None
    for width, idx in _rule_groups(space, radii, True):
        idx = np.asarray(idx)
        s = np.atleast_1d(model_radius(space, radii[idx]))
        for j, c in enumerate(centers):
            pts, w = unit_sphere_rule(n, order, c, width, False)
            part = _apply_rule(g.func, pts, w, s,
                               lambda x, j=j: _partition(x, None, centers, n)[:, j])
            if out is None:
                out = np.zeros((len(radii),) + part.shape[1:])
            out[idx] += part
    return _scale_rows(out, np.atleast_1d(area_density(space, radii)))


def _sphere_values(g: Integrand, space: SpaceForm, radii, order: int) -> np.ndarray:
    """Fixed-order sphere integrals at each geodesic radius (no error control)."""
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    n = space.dim
    if g.centers is not None and len(g.centers) > 1 and not g.axial:
        return _multi_center_values(g, space, radii, order)
    out = None
    for width, idx in _rule_groups(space, radii, g.peaked):
        idx = np.asarray(idx)
        pts, w = unit_sphere_rule(n, order, g.axis, width, g.axial)
        s = np.atleast_1d(model_radius(space, radii[idx]))
        part = _apply_rule(g.func, pts, w, s)
        if out is None:
            out = np.empty((len(radii),) + part.shape[1:])
        out[idx] = part
    return _scale_rows(out, np.atleast_1d(area_density(space, radii)))


def _converged(err, value, tol) -> bool:
    return bool(np.all(err <= tol * np.abs(value)))


def sphere_integrals(g: Integrand, space: SpaceForm, radii,
                     spec: QuadratureSpec = QuadratureSpec()):
    """Vectorized :func:`sphere_integral` over several radii; returns (values, errs)."""
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    if np.any(~(radii > 0)):
        raise DomainError("sphere radius must be > 0")
    prev = None
    for level in range(spec.max_refinements + 1):
        order = spec.angular_order * 2**level
        values = _sphere_values(g, space, radii, order)
        if prev is not None:
            errs = np.abs(values - prev)
            if _converged(errs, values, spec.target_rel_tol):
                return values, errs
        prev = values
    rel = errs / np.maximum(np.abs(values), 1e-300)
    worst = int(np.unravel_index(np.argmax(rel), rel.shape)[0])
    raise NonConvergenceError(
        f"sphere integral at R={radii[worst]} did not reach rel tol {spec.target_rel_tol}",
        float(np.ravel(values[worst])[0]), float(np.max(errs[worst])))


def sphere_integral(g: Integrand, space: SpaceForm, R: float,
                    spec: QuadratureSpec = QuadratureSpec()):
    """Integral of g over the geodesic sphere of radius R; returns (value, err_est)."""
    if not R > 0:
        raise DomainError("sphere radius must be > 0")
    values, errs = sphere_integrals(g, space, [R], spec)
    return float(values[0]), float(errs[0])


def radial_breaks(space: SpaceForm, radii, panel_width: float) -> np.ndarray:
    """Panel breakpoints on [0, max(radii)] containing every requested radius."""
    radii = np.asarray(radii, dtype=float)
    hmax = panel_width / space.scale if not space.is_euclidean else panel_width
    pts = [0.0]
    for r in radii:
        a = pts[-1]
        k = max(1, int(math.ceil((r - a) / hmax - 1e-12)))
        pts.extend(a + (r - a) * np.arange(1, k + 1) / k)
        pts[-1] = float(r)
    return np.array(pts)


def _cumulative_at(g, space, radii, ang_order, rad_order, panel_width):
    breaks = radial_breaks(space, radii, panel_width)
    x, w = gauss_legendre(rad_order)
    a, b = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (b - a)
    t = a + half * (x + 1.0)
    s = _sphere_values(g, space, t.ravel(), ang_order)
    s = s.reshape(t.shape + s.shape[1:])
    ws = _scale_rows(s, half * w)
    panel = ws.sum(axis=1)
    running = np.concatenate([np.zeros((1,) + panel.shape[1:]), np.cumsum(panel, axis=0)])
    # int_a^b D(r) dr = (b - a) D(a) + int_a^b (b - t) s(t) dt
    inc = _scale_rows(running[:-1], (b - a)[:, 0]) + _scale_rows(ws, b - t).sum(axis=1)
    iterated = np.concatenate([np.zeros((1,) + inc.shape[1:]), np.cumsum(inc, axis=0)])
    idx = np.searchsorted(breaks, radii)
    return running[idx], iterated[idx]


def cumulative_profile(g: Integrand, space: SpaceForm, r_grid,
                       spec: QuadratureSpec = QuadratureSpec()) -> CumulativeProfile:
    """Running ball integrals int_{B_r} g at each grid radius, plus their radial integral.

    ``iterated[i]`` is int_0^{r_i} (int_{B_r} g) dr, accumulated panel by panel
    alongside the running ball integrals.
    """
    radii = np.asarray(r_grid, dtype=float)
    if radii.ndim != 1 or len(radii) == 0:
        raise DomainError("radius grid must be a non-empty 1-D sequence")
    if np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise DomainError("radius grid must be positive and strictly increasing")
    prev = None
    for level in range(spec.max_refinements + 1):
        scale = 2**level
        run, it = _cumulative_at(g, space, radii, spec.angular_order * scale,
                                 spec.radial_order * scale, spec.panel_width)
        if prev is not None:
            run_err = np.abs(run - prev[0])
            it_err = np.abs(it - prev[1])
            tol = spec.target_rel_tol
            if _converged(run_err, run, tol) and _converged(it_err, it, tol):
                return CumulativeProfile(radii, run, run_err, it, it_err)
        prev = (run, it)
    rel = (run_err / np.maximum(np.abs(run), 1e-300)).ravel()
    worst = int(np.argmax(rel))
    raise NonConvergenceError(
        f"cumulative profile did not reach rel tol {spec.target_rel_tol}",
        float(run.ravel()[worst]), float(run_err.ravel()[worst]))


def ball_integral(g: Integrand, space: SpaceForm, R: float,
                  spec: QuadratureSpec = QuadratureSpec()):
    """Integral of g over the geodesic ball of radius R; returns (value, err_est)."""
    if not R > 0:
        raise DomainError("ball radius must be > 0")
    prof = cumulative_profile(g, space, [R], spec)
    return float(prof.running[0]), float(prof.running_err[0])


def radial_integral(h: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                    order: int = 32, panels: int = 16) -> float:
    """Composite Gauss-Legendre integral of a scalar radial function on [a, b]."""
    t, w = _panel_nodes(np.linspace(a, b, panels + 1), order)
    return float(np.sum(w * h(t)))
