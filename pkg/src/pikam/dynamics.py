"""Hamiltonians and their vector fields under Omega and under w.

Conventions: the Omega-Hamiltonian field solves ``theta -| Omega = -dH'``,
i.e. ``M theta = grad H'``; the w-Hamiltonian field is
``theta(g) = {H', g}``.  Both give ``dI_i = -dH'/dphi^i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFormError
from .geometry import (
    NONDEGENERATE_TOL,
    ScalarField,
    SymplecticFormSpec,
    check_nondegenerate,
    symplectic_matrix_at,
)
from .state import PhasePoint, TangentVector, as_vector, wrap_angles

__all__ = [
    "HamiltonianSpec",
    "CBCoefficients",
    "PhasePoint",
    "TangentVector",
    "field_omega",
    "field_w",
    "extract_cb",
    "exact_flow_unperturbed",
]


@dataclass(frozen=True)
class HamiltonianSpec:
    """``H' = H(I) + epsilon * H1(I, phi)``.

    ``base`` may depend on the actions only; ``perturbation`` must not
    depend on z.  ``epsilon`` is kept apart from ``perturbation`` so a sweep
    can rescale without rebuilding fields.
    """

    base: ScalarField
    perturbation: ScalarField
    epsilon: float = 0.0
    _effective: ScalarField = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "epsilon", float(self.epsilon))
        if (self.base.k, self.base.m) != (self.perturbation.k, self.perturbation.m):
            raise ValueError("base and perturbation live on different charts")
        if not self.base.is_angle_independent() or self.base.depends_on_z():
            raise ValueError("the unperturbed Hamiltonian may depend on the actions only")
        if self.perturbation.depends_on_z():
            raise ValueError("the perturbation may not depend on z")
        if self.epsilon < 0 or not np.isfinite(self.epsilon):
            raise ValueError(f"epsilon must be finite and nonnegative, got {self.epsilon}")
        eff = self.base + self.perturbation.scaled(self.epsilon) if self.epsilon else self.base
        object.__setattr__(self, "_effective", eff)

    @classmethod
    def unperturbed(cls, base: ScalarField) -> "HamiltonianSpec":
        return cls(base, ScalarField.zero(base.k, base.m), 0.0)

    @property
    def k(self) -> int:
        return self.base.k

    @property
    def m(self) -> int:
        return self.base.m

    @property
    def effective(self) -> ScalarField:
        return self._effective

    def with_epsilon(self, epsilon: float) -> "HamiltonianSpec":
        return HamiltonianSpec(self.base, self.perturbation, epsilon)

    def is_separable(self) -> bool:
        """True when the perturbation depends on the angles only."""
        return not self.perturbation.depends_on_actions()

    def is_integrable(self) -> bool:
        return self.epsilon == 0 or not self.perturbation.terms

    def energy(self, x) -> float:
        return self._effective.value(x)

    def gradient(self, x) -> np.ndarray:
        return self._effective.gradient(x)

    def frequencies(self, I) -> np.ndarray:
        """``dH/dI`` of the unperturbed part at actions ``I``."""
        I = np.asarray(I, dtype=float)
        x = np.concatenate([I, np.zeros(self.m + self.k)])
        return self.base.gradient(x)[:self.k]


@dataclass(frozen=True, eq=False)
class CBCoefficients:
    """Correction coefficients of the Omega-field at one point.

    ``dphi = dH'/dI + C dH'/dphi`` and ``dz = B dH'/dphi``.
    """

    C: np.ndarray
    B: np.ndarray


def _split(v: np.ndarray, k: int, m: int) -> TangentVector:
    return TangentVector(v[:k], v[k:k + m], v[k + m:])


def _omega_velocity(form: SymplecticFormSpec, g: np.ndarray, x) -> np.ndarray:
    # Solves M v = g by eliminating the fixed (I, phi) pairing; only the
    # z-block needs a dense (partially pivoted) solve.
    k, m = form.chart.k, form.chart.m
    M = symplectic_matrix_at(form, x)
    Z = M[k:k + m, k:k + m]
    A = M[:k, k:k + m]
    if m and abs(np.linalg.det(Z)) <= NONDEGENERATE_TOL:
        raise DegenerateFormError(f"degenerate form at point {as_vector(x).tolist()}")
    g_I, g_z, g_phi = g[:k], g[k:k + m], g[k + m:]
    v_I = -g_phi
    v_z = np.linalg.solve(Z, g_z + A.T @ v_I) if m else np.zeros(0)
    v_phi = g_I - A @ v_z
    return np.concatenate([v_I, v_z, v_phi])


def field_omega(H: HamiltonianSpec, form: SymplecticFormSpec, x) -> TangentVector:
    """Hamiltonian vector field of ``H'`` with respect to the symplectic form."""
    v = _omega_velocity(form, H.gradient(x), x)
    return _split(v, form.chart.k, form.chart.m)


def omega_velocity_vector(H: HamiltonianSpec, form: SymplecticFormSpec, x) -> np.ndarray:
    return _omega_velocity(form, H.gradient(x), x)


def field_w(H: HamiltonianSpec, x) -> TangentVector:
    """Hamiltonian vector field of ``H'`` with respect to ``w = d^i ^ d_i``.

    The z components are identically zero.
    """
    k, m = H.k, H.m
    g = H.gradient(x)
    return TangentVector(-g[k + m:], np.zeros(m), g[:k])


def extract_cb(form: SymplecticFormSpec, x) -> CBCoefficients:
    """Read ``C`` and ``B`` off the (phi, phi) and (z, phi) blocks of ``M^{-1}``."""
    k, m = form.chart.k, form.chart.m
    M = check_nondegenerate(form, x)
    P = np.linalg.inv(M)
    return CBCoefficients(C=P[k + m:, k + m:].copy(), B=P[k:k + m, k + m:].copy())


def reconstruct_from_cb(cb: CBCoefficients, grad: np.ndarray, k: int, m: int) -> TangentVector:
    g_I, g_phi = grad[:k], grad[k + m:]
    return TangentVector(-g_phi, cb.B @ g_phi, g_I + cb.C @ g_phi)


def exact_flow_unperturbed(H: HamiltonianSpec, x0: PhasePoint, t: float) -> PhasePoint:
    """Flow of an angle-independent Hamiltonian: angles advance linearly."""
    if not H.is_integrable():
        raise ValueError("exact flow requires epsilon = 0 (or an empty perturbation)")
    omega = H.frequencies(x0.I)
    return PhasePoint(x0.I, x0.z, wrap_angles(x0.phi + t * omega))
