"""Reduction along constant-z sections of ``U -> V x T^k`` and lifting back."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import HamiltonianSpec, field_w
from .errors import DomainError
from .geometry import (
    AngleCoordinate,
    ChartSpec,
    ScalarField,
    SymplecticFormSpec,
    poisson_bracket_w,
    symplectic_matrix_at,
)
from .state import PhasePoint, TangentVector


@dataclass(frozen=True)
class Section:
    """The constant section ``z = z0``."""

    z0: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "z0", tuple(float(v) for v in self.z0))

    def check(self, chart: ChartSpec):
        if len(self.z0) != chart.m:
            raise DomainError(f"section has {len(self.z0)} z values, chart has m={chart.m}")
        for mu, (v, (lo, hi)) in enumerate(zip(self.z0, chart.w_box)):
            if not lo <= v <= hi:
                raise DomainError(f"section value z_{mu + 1}={v} outside [{lo}, {hi}]")


@dataclass(frozen=True)
class ReducedSystem:
    """Completely integrable system on ``V x T^k`` with ``Omega' = dI ^ dphi``."""

    chart: ChartSpec
    hamiltonian: HamiltonianSpec

    def __post_init__(self):
        if self.chart.k != self.chart.n:
            raise ValueError("a reduced chart has no z coordinates (k = n)")
        if self.hamiltonian.m != 0:
            raise ValueError("reduced Hamiltonian must not carry z coordinates")


def reduced_chart(chart: ChartSpec) -> ChartSpec:
    return ChartSpec(chart.k, chart.k, chart.v_box, ())


def restrict_field(f: ScalarField, section: Section) -> ScalarField:
    """Partial evaluation of ``f`` at the section; z powers fold into coefficients."""
    return f.restrict_z(section.z0)


def reduce(H: HamiltonianSpec, section: Section, chart: ChartSpec) -> ReducedSystem:
    section.check(chart)
    if (H.k, H.m) != (chart.k, chart.m):
        raise ValueError("Hamiltonian does not match the chart")
    reduced = HamiltonianSpec(
        restrict_field(H.base, section),
        restrict_field(H.perturbation, section),
        H.epsilon,
    )
    return ReducedSystem(reduced_chart(chart), reduced)


def lift_hamiltonian(H: HamiltonianSpec, m: int) -> HamiltonianSpec:
    """Pull a reduced Hamiltonian back along ``pi'`` to a chart with ``m`` z's."""
    return HamiltonianSpec(H.base.embed(m), H.perturbation.embed(m), H.epsilon)


def reduced_field(system: ReducedSystem, I, phi) -> TangentVector:
    """Hamilton equation on the toroidal cylinder: ``I' = -dH'/dphi``, ``phi' = dH'/dI``."""
    return field_w(system.hamiltonian, np.concatenate([np.asarray(I, float),
                                                       np.asarray(phi, float)]))


def lift_field(v: TangentVector, chart: ChartSpec) -> TangentVector:
    """Extend a vector on ``V x T^k`` to ``U`` with exactly zero z velocity."""
    if v.dz.size:
        raise ValueError("expected a reduced vector without z components")
    if v.dI.size != chart.k:
        raise ValueError(f"vector has {v.dI.size} actions, chart has k={chart.k}")
    return TangentVector(v.dI, np.zeros(chart.m), v.dphi)


def lift_point(I, phi, section: Section) -> PhasePoint:
    return PhasePoint(I, section.z0, phi)


def _pullback(f, m: int):
    if f.depends_on_z():
        raise ValueError("bracket pullback needs z-independent functions")
    return f if f.m == m else f.embed(m)


def canonical_bracket(f, g, x) -> float:
    """Bracket of ``Omega' = dI ^ dphi`` through the inverse of its matrix.

    ``{f, g}' = grad(g) . M'^{-1} grad(f)``; independent of the bivector
    formula used by :func:`poisson_bracket_w`.
    """
    k = f.k
    chart = ChartSpec(k, k, ((0.0, 0.0),) * k)
    M = symplectic_matrix_at(SymplecticFormSpec(chart), x)
    return float(g.gradient(x) @ np.linalg.solve(M, f.gradient(x)))


def bracket_pullback_residual(f, g, x: PhasePoint) -> float:
    """``|{pi'* f, pi'* g}_w(x) - {f, g}'(I(x), phi(x))|``.

    ``f`` and ``g`` may be given on the reduced chart (m = 0) or as
    z-independent functions on ``U``.
    """
    m = x.m
    lhs = poisson_bracket_w(_pullback(f, m), _pullback(g, m), x)
    y = np.concatenate([x.I, x.phi])
    rhs = canonical_bracket(_reduced(f), _reduced(g), y)
    return abs(lhs - rhs)


def _reduced(f):
    if f.m == 0:
        return f
    if isinstance(f, AngleCoordinate):
        return AngleCoordinate(f.k, 0, f.index)
    return f.restrict_z(np.zeros(f.m))
