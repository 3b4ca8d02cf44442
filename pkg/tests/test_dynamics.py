import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import (
    all_forms,
    chart,
    field_strategy,
    form_iz0,
    form_iz_const,
    random_field,
    random_hamiltonian,
)
from pikam.dynamics import (
    HamiltonianSpec,
    exact_flow_unperturbed,
    extract_cb,
    field_omega,
    field_w,
    reconstruct_from_cb,
)
from pikam.errors import DegenerateFormError
from pikam.geometry import ScalarField, SymplecticFormSpec, Term
from pikam.state import PhasePoint

FORMS = ["iz0", "iz_const", "iz_action"]


def half_square(k, m=0):
    return HamiltonianSpec.unperturbed(
        ScalarField(k, m, tuple(Term(0.5, tuple(2 * (j == i) for j in range(k)), (0,) * m)
                                for i in range(k))))


def test_hamiltonian_rejects_angle_dependent_base():
    with pytest.raises(ValueError):
        HamiltonianSpec(ScalarField.cosine(1, 0, (1,)), ScalarField.zero(1, 0))


def test_hamiltonian_rejects_z_dependent_perturbation():
    with pytest.raises(ValueError, match="z"):
        HamiltonianSpec(ScalarField.zero(1, 2), ScalarField.zcoord(1, 2, 0), 0.1)


def test_with_epsilon_rescales_without_rebuilding():
    H = random_hamiltonian(np.random.default_rng(0), 2, eps=0.1)
    H2 = H.with_epsilon(0.3)
    assert H2.perturbation is H.perturbation
    x = np.array([1.0, 0.8, 0.3, 2.0])
    expect = H.base.value(x) + 0.3 * H.perturbation.value(x)
    assert H2.energy(x) == pytest.approx(expect, rel=1e-14)


# the Omega field

@pytest.mark.parametrize("name", FORMS)
def test_unperturbed_field_under_any_form(name):
    form = all_forms()[name]
    H = half_square(1, 2)
    for x in form.chart.sample(np.random.default_rng(1), 20):
        v = field_omega(H, form, x)
        assert np.array_equal(v.dI, [0.0])
        assert np.array_equal(v.dz, [0.0, 0.0])
        assert v.dphi[0] == pytest.approx(x[0], abs=1e-15)


def test_two_action_unperturbed_field():
    ch = chart(2, 3)
    form = SymplecticFormSpec.canonical(ch)
    x = np.array([1.0, 2.0, 0.1, -0.4, 0.3, 0.2])
    v = field_omega(half_square(2, 2), form, x)
    assert np.array_equal(v.vector, [0, 0, 0, 0, 1.0, 2.0])


def test_pure_cosine_kick():
    eps = 0.3
    form = form_iz0()
    H = HamiltonianSpec(ScalarField.zero(1, 2), ScalarField.cosine(1, 2, (1,)), eps)
    v = field_omega(H, form, np.array([1.0, 0.2, 0.1, np.pi / 2]))
    assert v.dI[0] == pytest.approx(eps, rel=1e-15)
    assert np.array_equal(v.dz, [0.0, 0.0])
    assert v.dphi[0] == 0.0


@pytest.mark.parametrize("a,c", [(0.5, 1.0), (-1.3, 0.7), (2.0, -2.5)])
def test_constant_coupling_against_dense_solve(a, c):
    form = form_iz_const(a, c)
    rng = np.random.default_rng(7)
    H = random_hamiltonian(rng, 1, 2, eps=0.2)
    hand = np.array([[0.0, a, 0.0, 1.0], [-a, 0.0, c, 0.0],
                     [0.0, -c, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0]])
    for x in form.chart.sample(rng, 50):
        oracle = np.linalg.solve(hand, H.gradient(x))
        v = field_omega(H, form, x).vector
        assert np.max(np.abs(v - oracle)) <= 1e-12


@pytest.mark.parametrize("name", FORMS)
def test_action_equation_is_universal(name):
    form = all_forms()[name]
    rng = np.random.default_rng(3)
    H = random_hamiltonian(rng, 1, 2, eps=0.5)
    for x in form.chart.sample(rng, 50):
        g = H.gradient(x)
        assert np.array_equal(field_omega(H, form, x).dI, -g[3:])
        assert np.array_equal(field_w(H, x).dI, -g[3:])


def test_degenerate_form_raises():
    form = SymplecticFormSpec(chart(1, 2))
    with pytest.raises(DegenerateFormError, match="degenerate form at point"):
        field_omega(half_square(1, 2), form, np.zeros(4))


# the w field

def test_w_field_of_pendulum():
    H = HamiltonianSpec(ScalarField(1, 0, (Term(0.5, (2,)),)), ScalarField.cosine(1, 0, (1,)),
                        0.1)
    v = field_w(H, np.array([1.0, 0.0]))
    assert v.dI[0] == 0.0 and v.dphi[0] == 1.0


@settings(max_examples=40, deadline=None)
@given(field_strategy(2, 2, angles=False, zdep=False), field_strategy(2, 2, zdep=False),
       st.floats(0, 1), st.integers(0, 2**31))
def test_w_field_structure(base, pert, eps, seed):
    H = HamiltonianSpec(base, pert, eps)
    rng = np.random.default_rng(seed)
    for x in chart(2, 3).sample(rng, 5):
        v = field_w(H, x)
        assert np.array_equal(v.dz, np.zeros(2))
        g = H.gradient(x)
        assert abs(g @ v.vector) <= 1e-12 * max(1.0, np.max(np.abs(g)) ** 2)


@pytest.mark.parametrize("name", FORMS)
def test_omega_field_conserves_energy(name):
    form = all_forms()[name]
    rng = np.random.default_rng(12)
    H = random_hamiltonian(rng, 1, 2, eps=0.4)
    for x in form.chart.sample(rng, 100):
        g = H.gradient(x)
        assert abs(g @ field_omega(H, form, x).vector) <= 1e-12 * max(1.0, g @ g)


@settings(max_examples=40, deadline=None)
@given(field_strategy(1, 2, angles=False, zdep=False), st.sampled_from(FORMS),
       st.integers(0, 2**31))
def test_bi_hamiltonian_coincidence(base, name, seed):
    form = all_forms()[name]
    H = HamiltonianSpec.unperturbed(base)
    for x in form.chart.sample(np.random.default_rng(seed), 10):
        diff = field_omega(H, form, x).vector - field_w(H, x).vector
        assert np.max(np.abs(diff)) <= 1e-10


def test_integrals_conserved_by_w_field():
    rng = np.random.default_rng(4)
    H = random_hamiltonian(rng, 2, 2, eps=0.0)
    integral = random_field(rng, 2, 2, angles=False, zdep=False)
    for x in chart(2, 3).sample(rng, 50):
        assert integral.gradient(x) @ field_w(H, x).vector == 0.0


# C and B

def test_cb_vanish_without_coupling():
    form = form_iz0(1.4)
    for x in form.chart.sample(np.random.default_rng(0), 200):
        cb = extract_cb(form, x)
        assert not cb.C.any() and not cb.B.any()


def test_cb_constant_coupling_against_dense_inverse():
    a = 0.5
    form = form_iz_const(a, 1.0)
    cb = extract_cb(form, np.array([1.0, 0.3, -0.2, 0.5]))
    # frozen from np.linalg.inv of the hand-assembled matrix; by elimination
    # z2' = -a dH/dphi and there is no angle correction for k = 1
    assert cb.C.shape == (1, 1) and cb.B.shape == (2, 1)
    assert cb.C[0, 0] == 0.0
    assert cb.B[0, 0] == 0.0
    assert cb.B[1, 0] == pytest.approx(-a, abs=1e-15)


def test_cb_antisymmetric_for_two_actions():
    ch = chart(2, 3)
    iz = ((0, 0, ScalarField.constant(2, 2, 0.4)), (1, 1, ScalarField.constant(2, 2, -0.7)),
          (1, 0, ScalarField.constant(2, 2, 0.2)))
    form = SymplecticFormSpec(ch, ((0, 1, ScalarField.constant(2, 2, 1.0)),), iz)
    cb = extract_cb(form, ch.sample(np.random.default_rng(0), 1)[0])
    assert np.allclose(cb.C, -cb.C.T, atol=1e-15)
    assert np.abs(cb.C).max() > 0.1


@pytest.mark.parametrize("name", FORMS)
def test_cb_reconstruction(name):
    form = all_forms()[name]
    rng = np.random.default_rng(5)
    H = random_hamiltonian(rng, 1, 2, eps=0.6)
    for x in form.chart.sample(rng, 100):
        v = field_omega(H, form, x).vector
        rec = reconstruct_from_cb(extract_cb(form, x), H.gradient(x), 1, 2).vector
        assert np.max(np.abs(v - rec)) <= 1e-12


# exact unperturbed flow

def test_exact_flow_half_turn():
    H = half_square(2)
    x0 = PhasePoint([1.0, 2.0], [], [0.0, 0.0])
    x = exact_flow_unperturbed(H, x0, np.pi)
    assert np.array_equal(x.I, x0.I)
    assert x.phi[0] == pytest.approx(np.pi, abs=1e-15)
    assert x.phi[1] == pytest.approx(0.0, abs=1e-14) or x.phi[1] == pytest.approx(
        2 * np.pi, abs=1e-14)


def test_exact_flow_keeps_z():
    H = half_square(2, 2)
    x0 = PhasePoint([1.0, 2.0], [0.5, -0.25], [0.0, 0.0])
    x = exact_flow_unperturbed(H, x0, np.pi)
    assert np.array_equal(x.z, x0.z) and np.array_equal(x.I, x0.I)


def test_exact_flow_at_zero_time():
    x0 = PhasePoint([1.0, 2.0], [0.5, 0.1], [0.3, 6.0])
    assert exact_flow_unperturbed(half_square(2, 2), x0, 0.0) == x0


@settings(max_examples=50, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10), st.integers(0, 2**31))
def test_exact_flow_composition(t1, t2, seed):
    rng = np.random.default_rng(seed)
    H = random_hamiltonian(rng, 2, 0, eps=0.0)
    x0 = PhasePoint(rng.uniform(0.5, 1.5, 2), [], rng.uniform(0, 2 * np.pi, 2))
    a = exact_flow_unperturbed(H, x0, t1 + t2)
    b = exact_flow_unperturbed(H, exact_flow_unperturbed(H, x0, t1), t2)
    d = np.abs(a.phi - b.phi)
    d = np.minimum(d, 2 * np.pi - d)
    assert np.max(d) <= 1e-12


def test_exact_flow_rejects_perturbed():
    H = random_hamiltonian(np.random.default_rng(0), 1, 0, eps=0.1)
    with pytest.raises(ValueError):
        exact_flow_unperturbed(H, PhasePoint([1.0], [], [0.0]), 1.0)


@pytest.mark.parametrize("seed", range(5))
def test_cb_reconstruction_random_constant_forms(seed):
    rng = np.random.default_rng(100 + seed)
    ch = chart(2, 4)
    k, m = 2, 4
    zz = tuple((mu, nu, ScalarField.constant(k, m, float(rng.uniform(-2, 2))))
               for mu in range(m) for nu in range(mu + 1, m))
    iz = tuple((i, mu, ScalarField.constant(k, m, float(rng.uniform(-1, 1))))
               for i in range(k) for mu in range(m))
    form = SymplecticFormSpec(ch, zz, iz)
    H = random_hamiltonian(rng, k, m, eps=0.3)
    for x in ch.sample(rng, 100):
        v = field_omega(H, form, x).vector
        oracle = np.linalg.solve(_dense(form, x), H.gradient(x))
        assert np.max(np.abs(v - oracle)) <= 1e-10 * max(1.0, np.max(np.abs(oracle)))
        rec = reconstruct_from_cb(extract_cb(form, x), H.gradient(x), k, m).vector
        assert np.max(np.abs(v - rec)) <= 1e-12 * max(1.0, np.max(np.abs(v)))


def _dense(form, x):
    # independent assembly from the entry lists
    k, m = form.chart.k, form.chart.m
    M = np.zeros((2 * k + m, 2 * k + m))
    for i in range(k):
        M[i, k + m + i], M[k + m + i, i] = 1.0, -1.0
    for mu, nu, f in form.zz_entries:
        M[k + mu, k + nu] = f.value(x)
        M[k + nu, k + mu] = -f.value(x)
    for i, mu, f in form.iz_entries:
        M[i, k + mu] = f.value(x)
        M[k + mu, i] = -f.value(x)
    return M
