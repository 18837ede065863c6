"""Bloch-wave (Von Neumann) analysis of the semi-discrete schemes.

With unit elements and unit advection speed, a Bloch wave
``u_k = exp(I (k theta - omega t)) v`` turns the scheme into the eigenproblem
``I omega v = 2 H(theta) v``.  ``H`` is assembled exactly as the FDG or FR
formula prescribes, and ``omega = -2 I lambda(H)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .schemes import FDG, FilterPair


class SingularFilterError(np.linalg.LinAlgError):
    pass


class TrackingError(RuntimeError):
    """Physical-mode continuation hit two equally plausible successors."""


class RoundoffError(ArithmeticError):
    """Spectral error too small to difference meaningfully."""


def h_components(fp: FilterPair, alpha: float):
    """(C0, C+, C-) with H(theta) = C0 + C+ e^{I theta} + C- e^{-I theta}."""
    ops = fp.ops
    MA = fp.MA
    if np.linalg.cond(MA) > 1e14:
        raise SingularFilterError("M + A is singular")
    inv = np.linalg.inv(MA)
    r, l = ops.r, ops.l
    base = inv @ ops.M @ ops.D if fp.side == FDG else ops.D
    ir, il = inv @ r, inv @ l
    const = base - 0.5 * alpha * np.outer(ir, r) + 0.5 * (2 - alpha) * np.outer(il, l)
    plus = 0.5 * alpha * np.outer(ir, l)
    minus = -0.5 * (2 - alpha) * np.outer(il, r)
    return const, plus, minus


def assemble_H(fp: FilterPair, alpha: float, theta, components=None) -> np.ndarray:
    """H(theta) for a scalar or an array of wavenumbers (stacked on axis 0)."""
    const, plus, minus = components or h_components(fp, alpha)
    e = np.exp(1j * np.asarray(theta, dtype=float))[..., None, None]
    return const + plus * e + minus / e


def eigen_omegas(fp: FilterPair, alpha: float, theta) -> np.ndarray:
    """All p+1 numerical frequencies at each wavenumber (unordered)."""
    return -2j * np.linalg.eigvals(assemble_H(fp, alpha, theta))


@dataclass
class WaveAnalysis:
    theta: np.ndarray
    omega_all: np.ndarray  # (n_theta, p+1), physical mode in column 0 after tracking
    omega_phys: np.ndarray
    eigvecs: np.ndarray  # (n_theta, p+1, p+1), columns normalized

    def at(self, theta: float) -> complex:
        i = int(np.argmin(np.abs(self.theta - theta)))
        if abs(self.theta[i] - theta) > 1e-12 * max(1.0, abs(theta)):
            raise KeyError(f"theta={theta} is not on the analysis grid")
        return complex(self.omega_phys[i])


def _overlaps(v_prev: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    return np.abs(vecs.conj().T @ v_prev)


def solve_modes(fp: FilterPair, alpha: float, theta_grid, ambiguity: float = 1e-6) -> WaveAnalysis:
    """Eigenpairs on ``theta_grid`` with the physical mode tracked by continuation.

    The physical mode is picked at the smallest positive wavenumber as the
    frequency closest to the exact ``omega = theta``, then followed outward in
    both directions by maximal eigenvector overlap.
    """
    theta = np.asarray(theta_grid, dtype=float)
    if theta.ndim != 1 or theta.size < 2 or np.any(np.diff(theta) <= 0):
        raise ValueError("theta grid must be 1-D and strictly increasing")
    lam, vecs = np.linalg.eig(assemble_H(fp, alpha, theta))
    omegas = -2j * lam
    vecs = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)

    pos = np.flatnonzero(theta > 0)
    start = pos[0] if pos.size else int(np.argmin(np.abs(theta)))
    phys = np.empty(theta.size, dtype=int)
    phys[start] = int(np.argmin(np.abs(omegas[start] - theta[start])))

    for step in (1, -1):
        i = start
        while 0 <= i + step < theta.size:
            score = _overlaps(vecs[i][:, phys[i]], vecs[i + step])
            order = np.argsort(score)[::-1]
            if score.size > 1 and score[order[0]] - score[order[1]] < ambiguity:
                raise TrackingError(
                    f"ambiguous mode continuation near theta={theta[i + step]:.6g}"
                )
            phys[i + step] = order[0]
            i += step

    n = omegas.shape[1]
    omega_all = np.empty_like(omegas)
    vec_sorted = np.empty_like(vecs)
    for i, j in enumerate(phys):
        perm = [j] + [m for m in range(n) if m != j]
        omega_all[i] = omegas[i, perm]
        vec_sorted[i] = vecs[i][:, perm]
    return WaveAnalysis(theta=theta, omega_all=omega_all, omega_phys=omega_all[:, 0].copy(),
                        eigvecs=vec_sorted)


def default_theta_grid(p: int, samples: int = 401) -> np.ndarray:
    # built from integer offsets so the grid is exactly symmetric and hits 0 for odd samples
    half = (p + 1) * np.pi
    m = (samples - 1) / 2
    return half * (np.arange(samples) - m) / m


def spectral_error(wa: WaveAnalysis, theta: float) -> float:
    """|omega_h(theta) - theta| for the tracked physical mode."""
    return abs(wa.at(theta) - theta)


def spectral_order(fp: FilterPair, alpha: float, theta_R: float = np.pi / 4,
                   threshold: float = 1e-15, samples: int = 33) -> float:
    """A_T = log2(E_T(theta_R) / E_T(theta_R / 2)) - 1."""
    # symmetric grid through 0, theta_R/2 and theta_R
    half = (samples - 1) // 4 * 2
    grid = np.linspace(-theta_R, theta_R, 2 * half + 1)
    wa = solve_modes(fp, alpha, grid)
    e_full = spectral_error(wa, grid[-1])
    e_half = spectral_error(wa, grid[half + half // 2])
    if e_full < threshold or e_half < threshold:
        raise RoundoffError(
            f"spectral error below round-off (E_T={e_full:.3g}, {e_half:.3g}); "
            "lower p or raise theta_R"
        )
    return float(np.log(e_full / e_half) / np.log(2.0) - 1.0)
