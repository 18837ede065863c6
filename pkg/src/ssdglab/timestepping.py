"""Explicit Runge-Kutta amplification and CFL limits from the Bloch matrices."""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .schemes import FilterPair, is_linearly_stable
from .vonneumann import assemble_H, h_components

# Neutral modes (theta = 0) sit exactly on |R| = 1.
RHO_MARGIN = 1e-9


@dataclass(frozen=True)
class RkMethod:
    """Stability polynomial R = sum_k coeffs[k] (2 tau H)^k."""

    tag: str
    coeffs: tuple[float, ...]
    stages: int

    def polynomial(self, z):
        """Evaluate sum_k coeffs[k] z^k (Horner), elementwise."""
        z = np.asarray(z)
        acc = np.full(z.shape, self.coeffs[-1], dtype=complex)
        for c in self.coeffs[-2::-1]:
            acc = acc * z + c
        return acc


def _taylor(order: int) -> tuple[float, ...]:
    return tuple((-1.0) ** k / factorial(k) for k in range(order + 1))


RK33 = RkMethod("RK33", _taylor(3), 3)
RK44 = RkMethod("RK44", _taylor(4), 4)
RK45 = RkMethod("RK45", _taylor(4) + (-1.0 / 200.0,), 5)
RK_METHODS = {m.tag: m for m in (RK33, RK44, RK45)}


def get_rk(tag) -> RkMethod:
    if isinstance(tag, RkMethod):
        return tag
    try:
        return RK_METHODS[str(tag).upper()]
    except KeyError:
        raise ValueError(f"unknown RK method {tag!r}; expected one of {sorted(RK_METHODS)}") from None


def amplification(H: np.ndarray, tau: float, rk) -> np.ndarray:
    """Amplification matrix R(2 tau H), evaluated by Horner's rule."""
    rk = get_rk(rk)
    H = np.asarray(H)
    Z = 2.0 * tau * H
    eye = np.broadcast_to(np.eye(H.shape[-1]), H.shape)
    R = rk.coeffs[-1] * eye.astype(complex)
    for c in rk.coeffs[-2::-1]:
        R = R @ Z + c * eye
    return R


class CflError(RuntimeError):
    pass


@dataclass(frozen=True)
class CflResult:
    tau_cfl: float
    argmax_theta: float
    iterations: int


def cfl_theta_grid(samples: int) -> np.ndarray:
    if samples < 3:
        raise ValueError("need at least 3 wavenumber samples")
    return np.linspace(-np.pi, np.pi, samples)


def _eigs(fp: FilterPair, alpha: float, theta: np.ndarray, components=None) -> np.ndarray:
    return np.linalg.eigvals(assemble_H(fp, alpha, theta, components))


def _eigs_symmetric(fp, alpha, theta, components):
    # H(-theta) = conj(H(theta)); |R| only sees the conjugate pair once.
    half = theta[theta >= 0]
    return _eigs(fp, alpha, half, components)


def _rho_per_theta(lam: np.ndarray, tau: float, rk: RkMethod) -> np.ndarray:
    # R is a polynomial in H, so its eigenvalues are the polynomial of H's.
    return np.abs(rk.polynomial(2.0 * tau * lam)).max(axis=-1)


def max_spectral_radius(fp: FilterPair, alpha: float, tau: float, rk, theta_samples: int = 400) -> float:
    """max over theta in [-pi, pi] of rho(R(H(theta), tau))."""
    rk = get_rk(rk)
    lam = _eigs(fp, alpha, cfl_theta_grid(theta_samples))
    return float(_rho_per_theta(lam, tau, rk).max())


def _golden_max(f, a: float, b: float, iters: int = 25) -> float:
    g = (np.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return c if fc >= fd else d


def cfl_limit(fp: FilterPair, alpha: float, rk, tol: float = 1e-4, theta_samples: int = 400,
              tau_max: float = 1e3) -> CflResult:
    """Largest tau with max_theta rho(R) <= 1, by doubling then bisection."""
    rk = get_rk(rk)
    if not is_linearly_stable(fp):
        raise CflError("unstable scheme: M + A is not positive definite")
    theta = cfl_theta_grid(theta_samples)
    comps = h_components(fp, alpha)
    lam = _eigs_symmetric(fp, alpha, theta, comps)
    theta = theta[theta >= 0]

    def unstable(tau):
        return _rho_per_theta(lam, tau, rk).max() > 1.0 + RHO_MARGIN

    if unstable(tol):
        raise CflError(f"unstable scheme: rho(R) > 1 already at tau={tol:g}")
    iterations = 0
    lo, hi = 0.0, 0.1
    while not unstable(hi):
        lo, hi = hi, 2.0 * hi
        iterations += 1
        if hi > tau_max:
            raise CflError("no instability found below tau=1e3")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if unstable(mid):
            hi = mid
        else:
            lo = mid
        iterations += 1

    # Locate the critical wavenumber at the first unstable tau.
    rho_hi = _rho_per_theta(lam, hi, rk)
    i = int(np.argmax(rho_hi))
    a, b = theta[max(i - 1, 0)], theta[min(i + 1, theta.size - 1)]

    def rho_at(t, tau=hi):
        return _rho_per_theta(_eigs(fp, alpha, np.array([t]), comps), tau, rk)[0]

    theta_star = _golden_max(rho_at, a, b)
    # A sharper peak between samples can only lower the limit.
    if rho_at(theta_star, lo) > 1.0 + RHO_MARGIN:
        lam = np.concatenate([lam, _eigs(fp, alpha, np.array([theta_star]), comps)])
        lo, hi = 0.0, lo
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if unstable(mid):
                hi = mid
            else:
                lo = mid
            iterations += 1
    return CflResult(tau_cfl=float(lo), argmax_theta=float(theta_star), iterations=iterations)
