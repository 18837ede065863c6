"""Modal operators on the reference element [-1, 1].

Everything downstream is built in the Legendre basis; the nodal Lagrange
variant only exists so the Von Neumann spectra can be checked for basis
independence.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

LEGENDRE = "legendre"
NODAL = "nodal"

MAX_DEGREE = 12


def legendre_eval(n: int, xi):
    """Evaluate the Legendre polynomial P_n at ``xi`` by the three-term recurrence."""
    xi = np.asarray(xi, dtype=float)
    p_prev = np.ones_like(xi)
    if n == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    p_cur = xi.copy()
    for k in range(1, n):
        p_prev, p_cur = p_cur, ((2 * k + 1) * xi * p_cur - k * p_prev) / (k + 1)
    return p_cur if p_cur.ndim else float(p_cur)


def legendre_vandermonde(p: int, xi) -> np.ndarray:
    """V[i, j] = P_j(xi_i) for j = 0..p."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    V = np.empty((xi.size, p + 1))
    V[:, 0] = 1.0
    if p >= 1:
        V[:, 1] = xi
    for k in range(1, p):
        V[:, k + 1] = ((2 * k + 1) * xi * V[:, k] - k * V[:, k - 1]) / (k + 1)
    return V


def _legendre_pair(n: int, x: np.ndarray):
    """Return (P_n(x), P_{n-1}(x)) for n >= 1."""
    p_prev, p_cur = np.ones_like(x), x.copy()
    for j in range(1, n):
        p_prev, p_cur = p_cur, ((2 * j + 1) * x * p_cur - j * p_prev) / (j + 1)
    return p_cur, p_prev


def gauss_legendre(n: int, tol: float = 1e-14, maxiter: int = 100):
    """Gauss-Legendre nodes and weights with ``n`` points (Newton on P_n)."""
    if n < 1:
        raise ValueError("need at least one quadrature point")
    k = np.arange(1, n + 1)
    x = -np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(maxiter):
        pn, pm = _legendre_pair(n, x)
        dp = n * (x * pn - pm) / (x**2 - 1.0)
        dx = pn / dp
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    pn, pm = _legendre_pair(n, x)
    dp = n * (x * pn - pm) / (x**2 - 1.0)
    w = 2.0 / ((1.0 - x**2) * dp**2)
    return x, w


def kp_constant(p: int) -> float:
    """k_p = (2p)! / (2^p p!), the constant p-th derivative of P_p."""
    if p < 0:
        raise ValueError("degree must be non-negative")
    return float(factorial(2 * p) // (2**p * factorial(p)))


@dataclass(frozen=True, eq=False)
class OperatorSet:
    """Mass and differentiation matrices plus boundary traces for degree ``p``.

    ``r`` and ``l`` are the basis functions evaluated at xi = +1 and xi = -1,
    so ``r @ u`` is the right trace of the polynomial with coefficients ``u``.
    """

    p: int
    M: np.ndarray
    D: np.ndarray
    r: np.ndarray
    l: np.ndarray
    basis: str = LEGENDRE
    V: np.ndarray | None = None  # nodal -> Legendre map is V^{-1}; None for Legendre

    @property
    def n(self) -> int:
        return self.p + 1

    def to_basis(self, A: np.ndarray) -> np.ndarray:
        """Carry a Legendre-basis bilinear-form matrix (M-like) into this basis."""
        if self.basis == LEGENDRE:
            return np.array(A, dtype=float)
        Vinv = np.linalg.inv(self.V)
        return Vinv.T @ A @ Vinv

    def power_D(self, k: int) -> np.ndarray:
        return np.linalg.matrix_power(self.D, k)


def _legendre_operators(p: int) -> OperatorSet:
    n = p + 1
    idx = np.arange(n)
    M = np.diag(2.0 / (2 * idx + 1))
    i, j = np.meshgrid(idx, idx, indexing="ij")
    D = np.where((j > i) & ((i + j) % 2 == 1), 2.0 * i + 1.0, 0.0)
    r = np.ones(n)
    l = (-1.0) ** idx
    for a in (M, D, r, l):
        a.setflags(write=False)
    return OperatorSet(p=p, M=M, D=D, r=r, l=l, basis=LEGENDRE)


def build_operators(p: int, basis: str = LEGENDRE) -> OperatorSet:
    """Operator set for degree ``p`` in the Legendre or Gauss-nodal Lagrange basis."""
    if p < 0:
        raise ValueError("degree must be non-negative")
    if p > MAX_DEGREE:
        raise ValueError(f"degree {p} exceeds the supported maximum of {MAX_DEGREE}")
    leg = _legendre_operators(p)
    if basis == LEGENDRE:
        return leg
    if basis != NODAL:
        raise ValueError(f"unknown basis {basis!r}")
    nodes, _ = gauss_legendre(p + 1)
    # Legendre coefficients u_leg = V^{-1} u_nodal
    V = legendre_vandermonde(p, nodes)
    Vinv = np.linalg.inv(V)
    return OperatorSet(
        p=p,
        M=Vinv.T @ leg.M @ Vinv,
        D=V @ leg.D @ Vinv,
        r=Vinv.T @ leg.r,
        l=Vinv.T @ leg.l,
        basis=NODAL,
        V=V,
    )
