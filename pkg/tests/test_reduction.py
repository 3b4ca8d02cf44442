import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import chart, field_strategy, random_field, random_hamiltonian
from pikam.dynamics import HamiltonianSpec, field_w
from pikam.errors import DomainError
from pikam.geometry import AngleCoordinate, ScalarField, Term
from pikam.integrate import IntegratorConfig, integrate_w
from pikam.reduction import (
    Section,
    bracket_pullback_residual,
    lift_field,
    lift_hamiltonian,
    lift_point,
    reduce,
    reduced_field,
    restrict_field,
)
from pikam.state import PhasePoint, TangentVector


def test_reduce_keeps_z_free_terms():
    rng = np.random.default_rng(0)
    H = random_hamiltonian(rng, 2, 2, eps=0.05)
    red = reduce(H, Section([0.1, -0.3]), chart(2, 3))
    assert red.chart.k == red.chart.n == 2
    assert red.chart.v_box == chart(2, 3).v_box
    for full, small in ((H.base, red.hamiltonian.base),
                        (H.perturbation, red.hamiltonian.perturbation)):
        assert [(t.coeff, t.i_pow, t.wave, t.phase) for t in full.terms] == \
               [(t.coeff, t.i_pow, t.wave, t.phase) for t in small.terms]
    assert red.hamiltonian.epsilon == 0.05


def test_restrict_z_dependent_term():
    f = ScalarField(1, 2, (Term(1.0, (1,), (1, 0)),))
    r = restrict_field(f, Section([0.5, 0.0]))
    assert r.terms == (Term(0.5, (1,), ()),)


def test_section_outside_box():
    H = random_hamiltonian(np.random.default_rng(1), 1, 2)
    with pytest.raises(DomainError, match="z_2"):
        reduce(H, Section([0.0, 3.0]), chart(1, 2))
    with pytest.raises(DomainError):
        reduce(H, Section([0.0]), chart(1, 2))


def test_reduced_equation_of_integrable_hamiltonian():
    rng = np.random.default_rng(2)
    H = random_hamiltonian(rng, 2, 2, eps=0.0)
    red = reduce(H, Section([0.0, 0.0]), chart(2, 3))
    I, phi = np.array([0.8, 1.2]), np.array([0.4, 5.0])
    v = reduced_field(red, I, phi)
    assert np.array_equal(v.dI, [0.0, 0.0])
    assert np.array_equal(v.dphi, H.frequencies(I))


def test_lift_copies_and_zeroes():
    ch = chart(1, 3)
    v = lift_field(TangentVector([0.0], [], [1.7]), ch)
    assert np.array_equal(v.dI, [0.0]) and np.array_equal(v.dphi, [1.7])
    assert np.array_equal(v.dz, np.zeros(4))
    z = lift_field(TangentVector([0.0], [], [0.0]), ch)
    assert not z.vector.any()


def test_lift_dimension_mismatch():
    with pytest.raises(ValueError):
        lift_field(TangentVector([0.0, 1.0], [], [1.0, 2.0]), chart(1, 2))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_lift_of_reduced_field_is_w_field(seed):
    rng = np.random.default_rng(seed)
    ch = chart(2, 3)
    H = random_hamiltonian(rng, 2, 2, eps=0.3)
    section = Section(rng.uniform(-1, 1, 2))
    red = reduce(H, section, ch)
    for x in ch.sample(rng, 5):
        x[2:4] = section.z0
        lifted = lift_field(reduced_field(red, x[:2], x[4:]), ch)
        assert lifted == field_w(H, x)


def test_lift_hamiltonian_round_trip():
    rng = np.random.default_rng(3)
    H = random_hamiltonian(rng, 2, 0, eps=0.2)
    up = lift_hamiltonian(H, 4)
    assert up.m == 4
    back = reduce(up, Section([0.0] * 4), chart(2, 4))
    assert back.hamiltonian == H


# bracket pullback

def test_pullback_action_angle():
    x = PhasePoint([1.0], [0.2, -0.1], [0.5])
    assert bracket_pullback_residual(ScalarField.action(1, 0, 0),
                                     AngleCoordinate(1, 0, 0), x) == 0.0


@settings(max_examples=30, deadline=None)
@given(field_strategy(2, 0), st.integers(0, 2**31))
def test_pullback_of_equal_pair(f, seed):
    rng = np.random.default_rng(seed)
    for x in chart(2, 3).sample(rng, 5):
        assert bracket_pullback_residual(f, f, PhasePoint.from_vector(x, 2, 2)) <= 1e-12


def test_pullback_random_pairs():
    rng = np.random.default_rng(4)
    ch = chart(2, 3)
    pts = [PhasePoint.from_vector(x, 2, 2) for x in ch.sample(rng, 100)]
    for _ in range(20):
        f = random_field(rng, 2, 0, n_terms=3)
        g = random_field(rng, 2, 0, n_terms=3)
        for x in pts:
            assert bracket_pullback_residual(f, g, x) <= 1e-12


def test_pullback_accepts_fields_on_full_chart():
    rng = np.random.default_rng(5)
    f = random_field(rng, 1, 2, zdep=False)
    g = random_field(rng, 1, 2, zdep=False)
    x = PhasePoint([1.1], [0.3, 0.4], [2.0])
    assert bracket_pullback_residual(f, g, x) <= 1e-12


def test_pullback_rejects_z_dependence():
    f = ScalarField.zcoord(1, 2, 0)
    with pytest.raises(ValueError, match="z-independent"):
        bracket_pullback_residual(f, ScalarField.action(1, 2, 0),
                                  PhasePoint([1.0], [0.0, 0.0], [0.0]))


# lifted versus reduced orbits

@pytest.mark.parametrize("method", ["splitting2", "midpoint"])
def test_lift_flow_commutation(method):
    rng = np.random.default_rng(6)
    H = random_hamiltonian(rng, 2, 2, eps=0.05, separable=True)
    section = Section([0.3, -0.7])
    red = reduce(H, section, chart(2, 3))
    cfg = IntegratorConfig(method=method, step=0.01, steps=2000, record_every=50)
    I0, phi0 = np.array([1.0, 0.8]), np.array([0.3, 1.9])
    full = integrate_w(H, lift_point(I0, phi0, section), cfg)
    small = integrate_w(red.hamiltonian, PhasePoint(I0, [], phi0), cfg)
    assert np.array_equal(full.I, small.I)
    assert np.array_equal(full.phi_unwrapped, small.phi_unwrapped)
    assert np.all(full.z == np.array(section.z0))


def test_lift_flow_with_action_dependent_perturbation():
    rng = np.random.default_rng(7)
    H = random_hamiltonian(rng, 1, 2, eps=0.05)
    section = Section([0.0, 0.5])
    red = reduce(H, section, chart(1, 2))
    cfg = IntegratorConfig(method="midpoint", step=0.01, steps=1000)
    full = integrate_w(H, lift_point([1.0], [0.0], section), cfg)
    small = integrate_w(red.hamiltonian, PhasePoint([1.0], [], [0.0]), cfg)
    assert np.max(np.abs(full.I - small.I)) <= 1e-12
    assert np.max(np.abs(full.phi_unwrapped - small.phi_unwrapped)) <= 1e-12
