"""Growth quantities of harmonic functions on Euclidean and hyperbolic space forms."""

from .errors import (DomainError, NonConvergenceError, NotFiniteEnergyError,
                     NumericalViolationError, ParameterConflictError, PreconditionError,
                     PriceLabError, SingularBoundaryError, UnsupportedSpaceError)
from .harmonics import (Constant, EuclideanPolynomial, PoissonCombo, Term, axial_polynomial,
                        function_from_spec, harmonicity_residual, laplace_beltrami,
                        poisson_kernel)
from .hypergeom import hyp2f1_terminating, q_closed_form, q_coefficients
from .mu_engine import (GrowthSample, almgren_frequency, growth_profile, mu_closed_form,
                        mu_prime_series, spectrum_of)
from .price import (bounded_energy_window_check, growth_exponent_window, price_envelopes,
                    verify_double_sided)
from .quadrature import QuadratureSpec, ball_integral, sphere_integral
from .spaceform import SpaceForm, ball_volume, mean_curvature, sphere_area

__version__ = "0.1.0"
