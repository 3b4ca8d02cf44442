"""Partially integrable Hamiltonian systems in partial action-angle coordinates."""

from .dynamics import (
    CBCoefficients,
    HamiltonianSpec,
    exact_flow_unperturbed,
    extract_cb,
    field_omega,
    field_w,
)
from .errors import ConvergenceError, DegenerateFormError, DomainError, PikamError
from .geometry import (
    AngleCoordinate,
    ChartSpec,
    DarbouxCandidate,
    ScalarField,
    SymplecticFormSpec,
    Term,
    poisson_bracket_w,
    recursion_operator_at,
    symplectic_matrix_at,
    validate_form,
    verify_darboux,
)
from .integrate import IntegratorConfig, Trajectory, integrate_omega, integrate_w
from .reduction import ReducedSystem, Section, bracket_pullback_residual, lift_field, reduce
from .state import PhasePoint, TangentVector

__version__ = "0.1.0"
