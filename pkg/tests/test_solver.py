import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ssdglab.schemes import SchemeSpec, canonical_c
from ssdglab.solver import (
    InstabilityError,
    Mesh1D,
    SolutionField,
    assemble_system_matrix,
    convergence_study,
    energy_diagnostic,
    integrate,
    l2_error,
    numerical_flux,
    observed_orders,
    project_initial,
    rhs,
    step,
)
from ssdglab.timestepping import get_rk

STABLE = [
    SchemeSpec("DG", 3),
    SchemeSpec("DG", 2, alpha=1.0),
    SchemeSpec("ESFR", 4, (0.01,), 0.2),
    SchemeSpec("SSDG", 3, (-1.42e-2, 8.06e-2)),
    SchemeSpec("SSDG", 4, (0.0, 0.02), 0.3),
    SchemeSpec("EESFR", 3, (29.4, 0.761)),
    SchemeSpec("EESFR", 4, (9.38, 0.349), 0.5),
]
UNSTABLE_GSFR = SchemeSpec("GSFR", 3, (0.03, 0.03, 0.0075))


def test_mesh_validation():
    with pytest.raises(ValueError):
        Mesh1D(0, 1, 1)
    with pytest.raises(ValueError):
        Mesh1D(1, 0, 4)
    with pytest.raises(ValueError):
        Mesh1D(0, 1, 4, periodic=False)
    np.testing.assert_allclose(Mesh1D(-1, 1, 4).edges, [-1, -0.5, 0, 0.5, 1])


@pytest.mark.parametrize("p", [0, 1, 3, 5])
def test_projection_reproduces_polynomials(p):
    mesh = Mesh1D(-1.0, 2.0, 5)
    coeffs = np.arange(1, p + 2, dtype=float)
    f = project_initial(lambda x: np.polyval(coeffs, x), mesh, SchemeSpec("DG", p))
    xi = np.linspace(-1, 1, 7)
    np.testing.assert_allclose(f.evaluate(xi), np.polyval(coeffs, mesh.physical(xi)), atol=1e-12)


def test_l2_error_of_zero_against_sine():
    mesh = Mesh1D(-math.pi, math.pi, 16)
    f = SolutionField(np.zeros((16, 4)), 0.0, mesh, SchemeSpec("DG", 3))
    assert l2_error(f, lambda x, t: np.sin(x)) == pytest.approx(math.sqrt(math.pi), rel=1e-12)


def test_total_mass_of_projection():
    mesh = Mesh1D(0.0, 1.0, 10)
    f = project_initial(lambda x: x**2, mesh, SchemeSpec("DG", 2))
    assert f.total_mass() == pytest.approx(1 / 3, rel=1e-14)


def test_flux_limits():
    assert numerical_flux(3.0, 1.0, 2.0, 1.0) == pytest.approx(4.0)  # central
    assert numerical_flux(3.0, 1.0, 2.0, 0.0) == pytest.approx(2.0)  # upwind takes the left state
    assert numerical_flux(3.0, 1.0, -2.0, 0.0) == pytest.approx(-6.0)


@pytest.mark.parametrize("a", [1.5, -0.7])
def test_p0_upwind_is_finite_volume(a):
    mesh = Mesh1D(0.0, 1.0, 9)
    rng = np.random.default_rng(3)
    u = rng.normal(size=9)
    f = SolutionField(u[:, None].copy(), 0.0, mesh, SchemeSpec("DG", 0))
    dx = mesh.width
    if a > 0:
        expected = -a * (u - np.roll(u, 1)) / dx
    else:
        expected = -a * (np.roll(u, -1) - u) / dx
    np.testing.assert_allclose(rhs(f, a)[:, 0], expected, atol=1e-12)


@pytest.mark.parametrize("spec", STABLE + [UNSTABLE_GSFR])
def test_rhs_matches_system_matrix(spec):
    mesh = Mesh1D(-1.0, 1.0, 7)
    sm = assemble_system_matrix(spec, mesh, 2.0)
    U = np.random.default_rng(5).normal(size=(7, spec.p + 1))
    f = SolutionField(U, 0.0, mesh, spec)
    np.testing.assert_allclose(rhs(f, 2.0).ravel(), sm.A_sys @ U.ravel(), atol=1e-11)


@pytest.mark.parametrize("rk", ["RK33", "RK44", "RK45"])
def test_step_is_the_stability_polynomial(rk):
    spec = SchemeSpec("SSDG", 3, (0.0, 0.02))
    mesh = Mesh1D(0.0, 1.0, 6)
    A = assemble_system_matrix(spec, mesh, 1.0).A_sys
    U = np.random.default_rng(1).normal(size=(6, 4))
    tau = 0.003
    poly = get_rk(rk).coeffs
    # coefficients are stated in z = -tau A
    R = sum(c * np.linalg.matrix_power(-tau * A, k) for k, c in enumerate(poly))
    out = step(SolutionField(U, 0.0, mesh, spec), 1.0, tau, rk).modes
    np.testing.assert_allclose(out.ravel(), R @ U.ravel(), atol=1e-11)


@pytest.mark.parametrize("spec", STABLE)
def test_energy_identity(spec):
    # u^T (M + A) du/dt = -(1 - alpha) |a_hat| / 2 * sum of squared interface jumps
    mesh = Mesh1D(0.0, 1.0, 8)
    U = np.random.default_rng(11).normal(size=(8, spec.p + 1))
    f = SolutionField(U, 0.0, mesh, spec)
    a_hat = 2.0 / mesh.width
    jump = np.roll(U @ ((-1.0) ** np.arange(spec.p + 1)), -1) - U.sum(axis=1)
    expected = -0.5 * (1 - spec.alpha) * a_hat * np.sum(jump**2)
    assert energy_diagnostic(f, 1.0) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_energy_non_increasing_500_fields():
    rng = np.random.default_rng(20240611)
    worst = -np.inf
    for i in range(500):
        spec = STABLE[i % len(STABLE)]
        mesh = Mesh1D(0.0, 1.0, int(rng.integers(2, 12)))
        f = SolutionField(rng.normal(size=(mesh.N, spec.p + 1)), 0.0, mesh, spec)
        worst = max(worst, energy_diagnostic(f, float(rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 3))))
    assert worst <= 1e-12


def test_gsfr_energy_can_grow():
    # this GSFR scheme is not energy stable: some field gains energy
    mesh = Mesh1D(-1.0, 1.0, 10)
    sm = assemble_system_matrix(UNSTABLE_GSFR, mesh, 2.0)
    i = int(np.argmax(sm.eigenvalues.real))
    assert sm.eigenvalues[i].real > 0.1


@pytest.mark.parametrize("spec", STABLE)
def test_mass_conserved_over_one_period(spec):
    mesh = Mesh1D(-math.pi, math.pi, 16)
    f0 = project_initial(lambda x: 1.0 + np.sin(x) + 0.3 * np.cos(3 * x), mesh, spec)
    f1 = integrate(f0, 2.0, math.pi, 0.02, "RK44")
    assert abs(f1.total_mass() - f0.total_mass()) < 1e-11


def test_gsfr_blows_up_and_is_reported():
    mesh = Mesh1D(-1.0, 1.0, 10)
    rng = np.random.default_rng(0)
    f0 = SolutionField(rng.normal(size=(10, 4)) * 1e-3, 0.0, mesh, UNSTABLE_GSFR)
    with pytest.raises(InstabilityError):
        integrate(f0, 2.0, 200.0, 5e-3, "RK44", blowup=10.0)


def test_unstable_gsfr_eigenvalue():
    sm = assemble_system_matrix(UNSTABLE_GSFR, Mesh1D(-1.0, 1.0, 10), 2.0)
    lam = sm.max_re_eigenvalue
    assert lam.real == pytest.approx(0.1479591, abs=1e-6)
    assert lam.imag == pytest.approx(18.3845952, abs=1e-6)


def test_system_size_cap():
    with pytest.raises(ValueError):
        assemble_system_matrix(SchemeSpec("DG", 9), Mesh1D(0, 1, 300), 1.0)


def test_observed_orders():
    out = observed_orders([1.0, 0.25, 0.0625])
    assert math.isnan(out[0]) and out[1:] == pytest.approx([2.0, 2.0])


def test_short_convergence_study_dg():
    rec = convergence_study(SchemeSpec("DG", 2), N_list=(8, 16, 32))
    assert rec.finest_order == pytest.approx(3.0, abs=0.15)
    assert rec.temporal_check < 0.01
    assert len(rec.rows()) == 3


def test_convergence_requires_doubling():
    with pytest.raises(ValueError):
        convergence_study(SchemeSpec("DG", 1), N_list=(8, 12))


@settings(max_examples=25, deadline=None)
@given(p=st.integers(0, 5), alpha=st.floats(0, 1), seed=st.integers(0, 2**16))
def test_rhs_is_linear(p, alpha, seed):
    spec = SchemeSpec("ESFR", p, (canonical_c(p, "SD") if p else 0.0,), alpha) if p else SchemeSpec("DG", 0, alpha=alpha)
    mesh = Mesh1D(0.0, 1.0, 5)
    rng = np.random.default_rng(seed)
    U, V = rng.normal(size=(2, 5, p + 1))
    f = SolutionField(U, 0.0, mesh, spec)
    np.testing.assert_allclose(rhs(f, 1.3, U + 2 * V), rhs(f, 1.3, U) + 2 * rhs(f, 1.3, V), atol=1e-9)
