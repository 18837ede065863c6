import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ssdglab.operators import kp_constant
from ssdglab.schemes import SchemeSpec, build_filter, canonical_c
from ssdglab.timestepping import (
    RK33,
    RK44,
    RK45,
    CflError,
    amplification,
    cfl_limit,
    get_rk,
    max_spectral_radius,
)
from ssdglab.vonneumann import assemble_H


def test_polynomial_coefficients():
    assert RK33.coeffs == (1.0, -1.0, 0.5, -1 / 6)
    assert RK44.coeffs == (1.0, -1.0, 0.5, -1 / 6, 1 / 24)
    assert RK45.coeffs[-1] == -1 / 200
    assert get_rk("rk44") is RK44
    with pytest.raises(ValueError):
        get_rk("RK99")


@pytest.mark.parametrize("rk", [RK33, RK44, RK45])
def test_amplification_matches_explicit_powers(rk):
    H = assemble_H(build_filter(SchemeSpec("SSDG", 3, (0.0, 0.02))), 0.0, 1.1)
    tau = 0.3
    Z = 2 * tau * H
    expected = sum(c * np.linalg.matrix_power(Z, k) for k, c in enumerate(rk.coeffs))
    np.testing.assert_allclose(amplification(H, tau, rk), expected, atol=1e-13)


def test_amplification_scalar_example():
    # H = 1/2 (upwind p=0 at theta=pi): z = 2 tau, RK44 at tau = 1/2 gives 1 - 1 + 1/2 - 1/6 + 1/24
    H = np.array([[1.0]])
    R = amplification(H, 0.5, RK44)
    assert R[0, 0] == pytest.approx(1 - 1 + 0.5 - 1 / 6 + 1 / 24)


# first-order upwind finite volumes: classical RK3/RK4 CFL limits from the literature
@pytest.mark.parametrize("rk,nu", [("RK33", 1.25637), ("RK44", 1.39265)])
def test_p0_upwind_cfl_literature(rk, nu):
    res = cfl_limit(build_filter(SchemeSpec("DG", 0)), 0.0, rk, tol=1e-6, theta_samples=2001)
    assert res.tau_cfl == pytest.approx(nu, abs=2e-5)
    assert abs(res.argmax_theta) == pytest.approx(math.pi, abs=1e-6)


@pytest.mark.parametrize("spec,rk", [
    (SchemeSpec("DG", 3), "RK44"),
    (SchemeSpec("SSDG", 3, (-1.72e-2, 8.43e-2)), "RK45"),
    (SchemeSpec("EESFR", 4, (9.38, 0.349)), "RK33"),
])
def test_cfl_brackets_the_stability_boundary(spec, rk):
    fp = build_filter(spec)
    res = cfl_limit(fp, 0.0, rk)
    assert max_spectral_radius(fp, 0.0, res.tau_cfl, rk) <= 1 + 1e-9
    assert max_spectral_radius(fp, 0.0, res.tau_cfl + 2e-4, rk, theta_samples=2000) > 1 + 1e-9


def test_cfl_insensitive_to_theta_doubling():
    fp = build_filter(SchemeSpec("EESFR", 3, (24.9, 0.757)))
    a = cfl_limit(fp, 0.0, "RK45", theta_samples=400).tau_cfl
    b = cfl_limit(fp, 0.0, "RK45", theta_samples=800).tau_cfl
    assert abs(a - b) <= 2e-4


@pytest.mark.parametrize("family,p,params,rk,tau", [
    ("SSDG", 3, (-1.72e-2, 8.43e-2), "RK45", 1.0373),
    ("EESFR", 3, (24.9, 0.757), "RK45", 1.0376),
    ("EESFR", 4, (9.23, 0.350), "RK44", 0.4352),
])
def test_frozen_cfl_values(family, p, params, rk, tau):
    res = cfl_limit(build_filter(SchemeSpec(family, p, params)), 0.0, rk)
    assert res.tau_cfl == pytest.approx(tau, abs=2e-4)


def test_dg_p3_rk44_frozen():
    assert cfl_limit(build_filter(SchemeSpec("DG", 3)), 0.0, "RK44").tau_cfl == pytest.approx(0.1453, abs=2e-4)


@pytest.mark.parametrize("kind", ["DG", "SD", "HU"])
@pytest.mark.parametrize("p", [3, 4])
def test_collapse_limits(p, kind):
    c = canonical_c(p - 1, kind)
    ref = cfl_limit(build_filter(SchemeSpec("ESFR", p - 1, (c,))), 0.0, "RK44").tau_cfl
    ssdg = cfl_limit(build_filter(SchemeSpec("SSDG", p, (1e6, c))), 0.0, "RK44").tau_cfl
    eesfr = cfl_limit(build_filter(SchemeSpec("EESFR", p, (1e6, kp_constant(p - 1) ** 2 * c))), 0.0, "RK44").tau_cfl
    assert abs(ssdg - ref) <= 0.01 * ref
    assert abs(eesfr - ref) <= 0.01 * ref


def test_unstable_scheme_raises():
    with pytest.raises(CflError, match="unstable scheme"):
        cfl_limit(build_filter(SchemeSpec("ESFR", 3, (-1.0,))), 0.0, "RK44")


def test_central_flux_rk33():
    # RK33 covers part of the imaginary axis, so central DG has a finite limit
    res = cfl_limit(build_filter(SchemeSpec("DG", 2, alpha=1.0)), 1.0, "RK33")
    assert 0 < res.tau_cfl < 1


@settings(max_examples=20, deadline=None)
@given(tau=st.floats(0.01, 2.0), theta=st.floats(-np.pi, np.pi))
def test_spectral_radius_is_polynomial_of_eigenvalues(tau, theta):
    H = assemble_H(build_filter(SchemeSpec("ESFR", 2, (0.01,))), 0.0, theta)
    rho_direct = np.abs(np.linalg.eigvals(amplification(H, tau, RK44))).max()
    rho_map = np.abs(RK44.polynomial(2 * tau * np.linalg.eigvals(H))).max()
    assert rho_direct == pytest.approx(rho_map, rel=1e-8, abs=1e-12)
