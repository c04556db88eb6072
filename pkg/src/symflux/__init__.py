"""Lie point symmetries of finite difference schemes.

The scheme is replaced by its differential approximation (modified
equation), and the invariance condition of that equation is solved exactly
with a polynomial ansatz for the infinitesimals.
"""

from symflux.detsolve import (
    LieGenerator,
    SymmetryResult,
    build_ansatz,
    default_dependencies,
    determining_system,
    nullspace,
    solve_symmetries,
    span_contains,
    span_equal,
)
from symflux.errors import (
    KernelError,
    LaurentError,
    ParseError,
    ReductionError,
    SchemeError,
    SymfluxError,
    VerificationError,
)
from symflux.flow import AffineFlow, affine_flow
from symflux.modeq import (
    DifferentialApproximation,
    differential_approximation,
    gamma_form,
    pi_form,
    shift_expand,
    t_closure,
)
from symflux.parser import parse_expression, parse_problem
from symflux.prolong import (
    InfinitesimalSet,
    invariance_residual,
    manifold_reduce,
    operator,
    sigma_table,
)
from symflux.symkernel import Expr, total_derivative

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
