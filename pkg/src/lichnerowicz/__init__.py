"""Lichnerowicz equation on flat tori: coefficients, assumption checks, a monotone
solver and nonexistence certificates."""
from .analysis import (AssumptionReport, Bracket, MinimizeResult, RParams, check_assumptions,
                       compute_bracket, minimize_r, r_of_t, subsolution_threshold)
from .coefficients import (CoefficientSet, GeometricData, ValidationReport, assemble_geometric,
                           kappa_N, load_coefficients, manufacture_h, save_coefficients,
                           validate_coefficients)
from .errors import (ConfigurationError, DomainError, InternalInconsistencyError,
                     LichnerowiczError, NonConvergenceError, NoSupersolutionError,
                     PreconditionError, SingularDataError)
from .grid import (Grid, ScalarField, SymTensorField, VectorField, divergence, gradient,
                   integrate, inv_helmholtz, lambda1, laplacian, make_grid, norm_inf, norm_L2)
from .nonexistence import (NonexistenceReport, ne_conditions, oracle_check, pointwise_min_f)
from .solver import (SolveReport, SolverConfig, VerifyReport, a_form, inner_solve,
                     outer_solve, residual, verify_solution)
from .truncation import TruncationContext, nemytskii_apply

__version__ = "0.1.0"
