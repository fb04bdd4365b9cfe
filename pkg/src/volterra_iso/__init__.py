"""Isospectral zero-diagonal Jacobi matrices, the Volterra flow and its Morse theory."""

from .errors import *  # noqa: F401,F403
from .jacobi import (
    SpectrumSpec,
    char_poly_eval,
    eigenvalues,
    eigenvalues_batch,
    objective_f,
    power_trace_invariants,
    project_to_isospectral,
    sample_manifold_point,
    spectrum_symmetry_report,
)
from .flow import (
    commutator_residual,
    f_dissipation_rate,
    flow_to_equilibrium,
    integrate,
    lax_operator,
    volterra_field,
)
from .morse import (
    CriticalTriple,
    critical_matrix,
    enumerate_critical_points,
    index_combinatorial,
    index_jacobian,
    index_numeric,
    tangent_gradient_norm,
)

__version__ = "0.1.0"
