import math

import numpy as np
import numpy.polynomial.legendre as npleg
import pytest
from hypothesis import given, settings, strategies as st

from ssdglab.operators import (
    build_operators,
    gauss_legendre,
    kp_constant,
    legendre_eval,
    legendre_vandermonde,
)


@pytest.mark.parametrize("p", range(0, 9))
def test_mass_matrix_closed_form(p):
    ops = build_operators(p)
    np.testing.assert_allclose(np.diag(ops.M), [2 / (2 * i + 1) for i in range(p + 1)], rtol=0, atol=1e-15)
    assert np.count_nonzero(ops.M - np.diag(np.diag(ops.M))) == 0


def test_differentiation_matrix_p3_frozen():
    D = build_operators(3).D
    expected = np.array([
        [0, 1, 0, 1],
        [0, 0, 3, 0],
        [0, 0, 0, 5],
        [0, 0, 0, 0],
    ], dtype=float)
    np.testing.assert_array_equal(D, expected)


@pytest.mark.parametrize("p", range(1, 10))
def test_differentiation_matches_numpy_legder(p):
    ops = build_operators(p)
    for j in range(p + 1):
        e = np.zeros(p + 1)
        e[j] = 1.0
        d = np.zeros(p + 1)
        der = npleg.legder(e)
        d[: der.size] = der
        np.testing.assert_allclose(ops.D @ e, d, atol=1e-12)


@pytest.mark.parametrize("p", range(0, 10))
def test_traces(p):
    ops = build_operators(p)
    np.testing.assert_array_equal(ops.r, np.ones(p + 1))
    np.testing.assert_array_equal(ops.l, (-1.0) ** np.arange(p + 1))


@pytest.mark.parametrize("p,k", [(0, 1), (1, 1), (2, 3), (3, 15), (4, 105), (5, 945)])
def test_kp_frozen(p, k):
    assert kp_constant(p) == k


@pytest.mark.parametrize("p", range(1, 9))
def test_kp_is_pth_derivative_of_legendre(p):
    e = np.zeros(p + 1)
    e[p] = 1.0
    der = npleg.legder(e, m=p)
    assert der[0] == pytest.approx(kp_constant(p), rel=1e-12)


@pytest.mark.parametrize("p", range(1, 9))
def test_D_power_p_isolates_top_mode(p):
    ops = build_operators(p)
    Dp = ops.power_D(p)
    expected = np.zeros_like(Dp)
    expected[0, p] = kp_constant(p)
    np.testing.assert_allclose(Dp, expected, atol=1e-9 * kp_constant(p))
    assert np.all(ops.power_D(p + 1) == 0)


@pytest.mark.parametrize("n", range(1, 14))
def test_gauss_nodes_against_numpy(n):
    x, w = gauss_legendre(n)
    xr, wr = npleg.leggauss(n)
    np.testing.assert_allclose(x, xr, atol=2e-15)
    np.testing.assert_allclose(w, wr, atol=2e-15)


@given(st.integers(0, 10), st.floats(-1, 1))
def test_legendre_eval_matches_numpy(n, xi):
    e = np.zeros(n + 1)
    e[n] = 1.0
    assert legendre_eval(n, xi) == pytest.approx(npleg.legval(xi, e), abs=1e-13)


@pytest.mark.parametrize("p", range(1, 8))
def test_nodal_mass_is_quadrature_weights(p):
    # Gauss rule with p+1 points is exact for degree 2p, so M_nodal = diag(w).
    ops = build_operators(p, "nodal")
    _, w = gauss_legendre(p + 1)
    np.testing.assert_allclose(ops.M, np.diag(w), atol=1e-13)


@pytest.mark.parametrize("p", range(1, 8))
def test_nodal_derivative_and_traces(p):
    ops = build_operators(p, "nodal")
    x, _ = gauss_legendre(p + 1)
    rng = np.random.default_rng(p)
    c = rng.normal(size=p + 1)  # monomial coefficients, highest first
    vals = np.polyval(c, x)
    np.testing.assert_allclose(ops.D @ vals, np.polyval(np.polyder(c), x), atol=1e-10)
    assert ops.r @ vals == pytest.approx(np.polyval(c, 1.0), abs=1e-11)
    assert ops.l @ vals == pytest.approx(np.polyval(c, -1.0), abs=1e-11)


@pytest.mark.parametrize("p", range(1, 7))
def test_nodal_determinant_ratio(p):
    # det M_nodal = det M_legendre / det(V)^2
    leg, nod = build_operators(p), build_operators(p, "nodal")
    ratio = np.linalg.det(nod.M) / np.linalg.det(leg.M)
    assert ratio == pytest.approx(1 / np.linalg.det(nod.V) ** 2, rel=1e-9)


def test_vandermonde_shape():
    V = legendre_vandermonde(3, np.array([-1.0, 0.0, 1.0]))
    assert V.shape == (3, 4)
    np.testing.assert_allclose(V[1], [1, 0, -0.5, 0])


def test_degree_limits():
    with pytest.raises(ValueError):
        build_operators(-1)
    with pytest.raises(ValueError):
        build_operators(13)
    with pytest.raises(ValueError):
        build_operators(2, "chebyshev")
    assert math.isclose(build_operators(12).M[12, 12], 2 / 25)
