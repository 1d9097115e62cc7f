"""Double-sided Price envelopes and the growth-window verification scenarios.

Given mu samples on a grid starting at R0, the envelopes are

    lower(R) = exp(int_{R0}^R H_k(s) / (1 - mu(s)) ds)
    upper(R) = exp(int_{R0}^R H_k'(s) / (1 - mu(s)) ds)

and the ball energy B(R) is expected to stay within constant multiples of
them. Constants are calibrated on the grid and then tested for stability
when the grid is extended.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import hypergeom, quadrature
from .errors import DomainError, NotFiniteEnergyError, NumericalViolationError, PreconditionError
from .harmonics import Constant, HarmonicFunction, PoissonCombo
from .mu_engine import GrowthSample, growth_profile, profile_arrays
from .quadrature import Integrand, QuadratureSpec
from .spaceform import SpaceForm, ball_volume, mean_curvature

MU_GUARD = 1e-12
DEFAULT_SLACK = 1.5
DEFAULT_TAIL_TOL = 0.01


@dataclass(frozen=True)
class Envelopes:
    r_grid: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


@dataclass
class EnvelopeReport:
    r_grid: np.ndarray
    lower_env: np.ndarray
    upper_env: np.ndarray
    ball_energy: np.ndarray
    C1: float
    C2: float
    C1_half: float
    C2_half: float
    window_exponents: dict
    stability_ok: bool
    slack: float
    samples: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "C1": self.C1,
            "C2": self.C2,
            "C1_half": self.C1_half,
            "C2_half": self.C2_half,
            "exponent": self.window_exponents,
            "stability_ok": self.stability_ok,
            "tolerances": {"slack": self.slack},
        }


@dataclass
class EnergyWindowReport:
    r_grid: np.ndarray
    ratios: np.ndarray
    min: float
    max: float
    min_half: float
    max_half: float
    stability_ok: bool
    plateau: float
    sigma: float
    c: float | None
    mu_bound: np.ndarray | None
    mu_bound_ok: bool | None
    slack: float
    tail_tol: float

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k not in ("r_grid", "ratios", "mu_bound")}
        out["ratios"] = [float(v) for v in self.ratios]
        return out


@dataclass
class ExponentReport:
    exponent: float
    lower_endpoint: float
    upper_endpoint: float
    tol: float
    ok: bool
    method: str
    r_grid: np.ndarray
    ball_energy: np.ndarray

    def to_dict(self) -> dict:
        return {"exponent": self.exponent, "lower_endpoint": self.lower_endpoint,
                "upper_endpoint": self.upper_endpoint, "tol": self.tol, "ok": self.ok,
                "method": self.method}


def price_envelopes(r_grid, mu, dim: int, k: float, k_prime: float | None = None,
                    r0: float = 1.0) -> Envelopes:
    """Lower/upper envelopes by cumulative trapezoidal integration of H/(1 - mu)."""
    radii = np.asarray(r_grid, dtype=float)
    mu = np.asarray(mu, dtype=float)
    k_prime = k if k_prime is None else k_prime
    if k_prime > k:
        raise DomainError("need k' <= k")
    if radii.shape != mu.shape or len(radii) < 2:
        raise DomainError("need matching radius and mu arrays of length >= 2")
    if np.any(np.diff(radii) <= 0):
        raise DomainError("radius grid must be strictly increasing")
    if abs(radii[0] - r0) > 1e-12:
        raise DomainError(f"grid must start at the calibration radius {r0}")
    if np.any(mu >= 1.0 - MU_GUARD) or np.any(np.isnan(mu)):
        raise NumericalViolationError("mu >= 1 on the envelope grid")
    if np.any(mu < 0):
        raise NumericalViolationError("mu < 0 on the envelope grid")
    out = []
    for curv in (k, k_prime):
        h = mean_curvature(SpaceForm(dim, curv), radii)
        integral = cumulative_trapezoid(h / (1.0 - mu), radii, initial=0.0)
        out.append(np.exp(integral))
    return Envelopes(radii, out[0], out[1])


def _half_mask(radii: np.ndarray) -> np.ndarray:
    mid = 0.5 * (radii[0] + radii[-1])
    return radii <= mid + 1e-12


def _slope(x, y) -> float:
    return hypergeom.log_growth_rate(y, x)


def verify_double_sided(f: HarmonicFunction, space: SpaceForm | None = None, r_grid=None,
                        spec: QuadratureSpec = QuadratureSpec(), k_prime: float | None = None,
                        slack: float = DEFAULT_SLACK, r0: float = 1.0,
                        samples: list[GrowthSample] | None = None) -> EnvelopeReport:
    """Calibrate C1, C2 with B/env on the grid and test them on its second half."""
    space = space or f.space
    if f.is_constant:
        raise PreconditionError("double-sided verification needs a non-constant function")
    radii = np.asarray(r_grid if r_grid is not None else np.linspace(r0, 6.0, 11), dtype=float)
    samples = samples or growth_profile(f, space, radii, spec)
    arr = profile_arrays(samples)
    env = price_envelopes(radii, arr["mu"], space.dim, space.curvature, k_prime, r0)
    B = arr["ball_energy"]
    lo_ratio = B / env.lower
    up_ratio = B / env.upper
    half = _half_mask(radii)
    C1, C2 = float(lo_ratio.min()), float(up_ratio.max())
    C1h, C2h = float(lo_ratio[half].min()), float(up_ratio[half].max())
    stable = bool(np.all(lo_ratio >= C1h / slack) and np.all(up_ratio <= C2h * slack))
    exps = {"lower": _slope(radii, env.lower), "upper": _slope(radii, env.upper),
            "ball": _slope(radii, B)}
    return EnvelopeReport(radii, env.lower, env.upper, B, C1, C2, C1h, C2h, exps,
                          stable, slack, samples)


def bounded_energy_window_check(f: HarmonicFunction, space: SpaceForm | None = None,
                                r_grid=None, spec: QuadratureSpec = QuadratureSpec(),
                                tail_tol: float = DEFAULT_TAIL_TOL,
                                slack: float = DEFAULT_SLACK) -> EnergyWindowReport:
    """Ratios B(R)/Vol(R) for a function whose Dirichlet energy plateaus.

    The plateau test is (D(R_max) - D(R_max/2)) / D(R_max) < tail_tol; the
    observed D(R_max) plays the role of the uniform energy bound sigma.
    """
    space = space or f.space
    radii = np.asarray(r_grid if r_grid is not None else np.linspace(1.0, 6.0, 11), dtype=float)
    r_half = 0.5 * radii[-1]
    full = np.union1d(radii, [r_half])
    samples = growth_profile(f, space, full, spec)
    arr = profile_arrays(samples)
    D = arr["dirichlet"]
    D_max = D[-1]
    D_half = D[np.searchsorted(full, r_half)]
    plateau = 0.0 if D_max == 0 else float((D_max - D_half) / D_max)
    if plateau >= tail_tol:
        err = NotFiniteEnergyError(
            f"not finite Dirichlet energy: relative tail {plateau:.4g} >= {tail_tol}")
        err.plateau = plateau
        raise err
    keep = np.isin(full, radii)
    B = arr["ball_energy"][keep]
    vol = np.array([ball_volume(space, R) for R in radii])
    ratios = B / vol
    half = _half_mask(radii)
    lo, hi = float(ratios.min()), float(ratios.max())
    lo_h, hi_h = float(ratios[half].min()), float(ratios[half].max())
    stable = bool(lo > 0 and np.all(ratios >= lo_h / slack) and np.all(ratios <= hi_h * slack))
    sigma = float(D_max)
    c = bound = bound_ok = None
    if not space.is_euclidean:
        growth = np.sinh(space.scale * radii) ** (space.dim - 1)
        S = arr["sphere_energy"][keep]
        c = float(np.min(S / growth))
        bound = 2.0 * sigma * radii / (c * growth)
        bound_ok = bool(np.all(arr["mu"][keep] <= bound))
    return EnergyWindowReport(radii, ratios, lo, hi, lo_h, hi_h, stable, plateau, sigma,
                              c, bound, bound_ok, slack, tail_tol)


@lru_cache(maxsize=None)
def calibrated_c1(n: int) -> float:
    return hypergeom.calibrate_c1(n)


def growth_exponent_window(f: HarmonicFunction, space: SpaceForm | None = None, r_grid_far=None,
                           spec: QuadratureSpec = QuadratureSpec(), k_prime: float | None = None,
                           use_closed_form: bool = True) -> ExponentReport:
    """Least-squares slope of log B(R) on a far grid, checked against the growth window."""
    space = space or f.space
    if space.is_euclidean:
        raise DomainError("growth window needs curvature < 0")
    radii = np.asarray(r_grid_far if r_grid_far is not None else np.linspace(4.0, 8.0, 9),
                       dtype=float)
    n, k = space.dim, space.curvature
    k_prime = k if k_prime is None else k_prime
    if isinstance(f, Constant):
        if not f.value > 0:
            raise DomainError("growth window needs a positive function")
    elif not isinstance(f, PoissonCombo):
        raise DomainError("growth window needs a positive function")
    if (use_closed_form and isinstance(f, PoissonCombo) and len(f.atoms) == 1 and n >= 3):
        w = f.atoms[0][0]
        B = w * w * hypergeom.rescaled_ball_q(n, k, radii, calibrated_c1(n))
        method = "closed-form"
    elif isinstance(f, Constant):
        B = f.value**2 * np.array([ball_volume(space, R) for R in radii])
        method = "volume"
    else:
        axial = f.symmetry_axis is not None
        g = Integrand(lambda x: f.evaluate(x) ** 2,
                      axis=f.symmetry_axis if axial else f.peak_axis, axial=axial,
                      peaked=True, centers=None if axial else f.directions)
        B = quadrature.cumulative_profile(g, space, radii, spec).running
        method = "quadrature"
    lam = _slope(radii, B)
    lower = (n - 1) * math.sqrt(-k)
    upper = 2.0 * (n - 1) * math.sqrt(-k_prime)
    tol = 0.1 * lower
    ok = bool(lower - tol <= lam <= upper + tol)
    return ExponentReport(lam, lower, upper, tol, ok, method, radii, B)
