"""Pointwise fractional Laplacians, Riesz potentials and Dirichlet problems on balls,
with scaling checks for interior regularity estimates."""

from .ballsolver import (DirichletProblem, SolutionField, holder_extension, poisson_extend,
                         poisson_extend_gradient, poisson_extend_hessian, solve_dirichlet, sup_norm)
from .core import (ArgumentError, Ball, DivergenceError, DomainError, FieldEvaluationError, FracLapError,
                   FracOrder, Interface, ModulusSpec, QuadBudget, ScalarField, SingularityError,
                   UnsupportedInputError)
from .kernels import (Constants, bubble, bubble_field, constants, fundamental_solution,
                      fundamental_solution_gradient, poisson_kernel)
from .quad import (EngineResult, exterior_poisson_integral, frac_laplacian, riesz_potential,
                   riesz_potential_gradient)
from .schauder import (CascadeConfig, CascadeResult, VerificationReport, dyadic_cascade, fit_exponent,
                       theorem_rhs, verify_lemma_derivative_estimate, verify_lemma_supnorm_estimate,
                       verify_riesz_holder, verify_schauder)

__version__ = "0.1.0"
