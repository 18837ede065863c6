"""Periodic 1D linear advection with any of the scheme families.

Solutions are stored as Legendre modes, one row per element.  The flux is
linear (f = a u), so the collocated flux polynomial is exactly a_hat * u.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .operators import gauss_legendre, legendre_vandermonde
from .schemes import FDG, FilterPair, SchemeSpec, build_filter
from .timestepping import cfl_limit, get_rk

log = logging.getLogger(__name__)

MAX_SYSTEM_SIZE = 2000


class InstabilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class Mesh1D:
    x_left: float
    x_right: float
    N: int
    periodic: bool = True

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("need at least two elements")
        if not self.x_right > self.x_left:
            raise ValueError("x_right must exceed x_left")
        if not self.periodic:
            raise ValueError("only periodic meshes are supported")

    @property
    def width(self) -> float:
        return (self.x_right - self.x_left) / self.N

    @property
    def edges(self) -> np.ndarray:
        return self.x_left + self.width * np.arange(self.N + 1)

    def physical(self, xi) -> np.ndarray:
        """Physical coordinates of reference points ``xi`` in every element, shape (N, len(xi))."""
        xi = np.atleast_1d(xi)
        left = self.edges[:-1, None]
        return left + 0.5 * (1.0 + xi[None, :]) * self.width


@dataclass
class SolutionField:
    modes: np.ndarray  # (N, p+1) Legendre coefficients
    t: float
    mesh: Mesh1D
    spec: SchemeSpec

    def evaluate(self, xi) -> np.ndarray:
        """Solution at reference points ``xi`` in every element, shape (N, len(xi))."""
        V = legendre_vandermonde(self.spec.p, xi)
        return self.modes @ V.T

    def total_mass(self) -> float:
        # integral of P_0 over [-1, 1] is 2; dx/dxi = width/2
        return float(self.mesh.width * self.modes[:, 0].sum())

    def copy(self) -> "SolutionField":
        return replace(self, modes=self.modes.copy())


def project_initial(u0: Callable, mesh: Mesh1D, spec: SchemeSpec) -> SolutionField:
    """Element-wise L2 projection onto Legendre modes (p+3 point Gauss rule)."""
    p = spec.p
    xi, w = gauss_legendre(p + 3)
    V = legendre_vandermonde(p, xi)
    vals = np.asarray(u0(mesh.physical(xi)), dtype=float)
    norms = (2 * np.arange(p + 1) + 1) / 2.0
    modes = (vals * w) @ V * norms
    return SolutionField(modes=modes, t=0.0, mesh=mesh, spec=spec)


@dataclass
class _Lifted:
    fp: FilterPair
    inv: np.ndarray
    MD: np.ndarray


_cache: dict = {}


def _lifted(spec: SchemeSpec) -> _Lifted:
    key = (spec.family, spec.p, spec.params)
    if key not in _cache:
        fp = build_filter(spec)
        _cache[key] = _Lifted(fp, np.linalg.inv(fp.MA), fp.ops.M @ fp.ops.D)
    return _cache[key]


def numerical_flux(u_plus, u_minus, a_hat: float, alpha: float):
    """Blended flux: central average minus (1 - alpha) times the upwind penalty.

    ``u_minus`` is the trace on the left of the interface, ``u_plus`` the right.
    """
    return a_hat * 0.5 * (u_plus + u_minus) - (1.0 - alpha) * abs(a_hat) * 0.5 * (u_plus - u_minus)


def rhs(field: SolutionField, a: float, modes: np.ndarray | None = None) -> np.ndarray:
    """Semi-discrete time derivative of the modal coefficients."""
    U = field.modes if modes is None else modes
    spec = field.spec
    L = _lifted(spec)
    ops = L.fp.ops
    a_hat = 2.0 * a / field.mesh.width
    u_right = U @ ops.r  # trace at xi = +1 of each element
    u_left = U @ ops.l
    # interface k+1/2 between element k (minus side) and k+1 (plus side)
    f_face = numerical_flux(np.roll(u_left, -1), u_right, a_hat, spec.alpha)
    jump_r = a_hat * u_right - f_face
    jump_l = a_hat * u_left - np.roll(f_face, 1)
    face = np.outer(jump_r, ops.r) - np.outer(jump_l, ops.l)
    if L.fp.side == FDG:
        return (-a_hat * U @ L.MD.T + face) @ L.inv.T
    return -a_hat * U @ ops.D.T + face @ L.inv.T


def _apply_rk(field: SolutionField, a: float, tau: float, rk) -> np.ndarray:
    rk = get_rk(rk)
    U = field.modes

    def f(V):
        return rhs(field, a, V)

    if rk.tag == "RK33":
        k1 = f(U)
        k2 = f(U + 0.5 * tau * k1)
        k3 = f(U - tau * k1 + 2.0 * tau * k2)
        return U + tau / 6.0 * (k1 + 4.0 * k2 + k3)
    if rk.tag == "RK44":
        k1 = f(U)
        k2 = f(U + 0.5 * tau * k1)
        k3 = f(U + 0.5 * tau * k2)
        k4 = f(U + tau * k3)
        return U + tau / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    # Linear problem: apply the stability polynomial in (tau L) directly.
    # coeffs are stated in (2 tau H) = -(tau L), hence the sign flips.
    coeffs = [c * (-1) ** k for k, c in enumerate(rk.coeffs)]
    acc = coeffs[-1] * U
    for c in coeffs[-2::-1]:
        acc = tau * f(acc) + c * U
    return acc


def step(field: SolutionField, a: float, tau: float, rk) -> SolutionField:
    """Advance one explicit RK step of size ``tau``."""
    if tau == 0:
        return field.copy()
    return replace(field, modes=_apply_rk(field, a, tau, rk), t=field.t + tau)


def integrate(field: SolutionField, a: float, t_final: float, dt: float, rk,
              blowup: float = 1e6) -> SolutionField:
    """March to ``t_final`` with steps no larger than ``dt``."""
    nsteps = max(1, math.ceil((t_final - field.t) / dt - 1e-12))
    tau = (t_final - field.t) / nsteps
    ref = max(np.abs(field.modes).max(), 1e-300)
    for n in range(nsteps):
        field = step(field, a, tau, rk)
        if n % 64 == 0 or n == nsteps - 1:
            growth = np.abs(field.modes).max() / ref
            if not np.isfinite(growth) or growth > blowup:
                raise InstabilityError(
                    f"solution grew by {growth:.3g} at t={field.t:.6g} ({field.spec.label()})"
                )
    field.t = t_final
    return field


def l2_error(field: SolutionField, u_exact: Callable) -> float:
    """L2 distance to ``u_exact(x, t)`` using a (p+5)-point Gauss rule per element."""
    xi, w = gauss_legendre(field.spec.p + 5)
    diff = field.evaluate(xi) - u_exact(field.mesh.physical(xi), field.t)
    return float(np.sqrt(0.5 * field.mesh.width * np.sum(diff**2 * w)))


# -- convergence studies -----------------------------------------------------


@dataclass
class ConvergenceRecord:
    N: list[int] = field(default_factory=list)
    dx: list[float] = field(default_factory=list)
    l2_error: list[float] = field(default_factory=list)
    order: list[float] = field(default_factory=list)  # NaN on the coarsest level
    tau_cfl: float = math.nan
    temporal_check: float = math.nan  # relative error change under tau/2 at the coarsest level

    def rows(self):
        return list(zip(self.N, self.dx, self.l2_error, self.order))

    @property
    def finest_order(self) -> float:
        return self.order[-1]


def observed_orders(errors: Sequence[float], ratio: float = 2.0) -> list[float]:
    out = [math.nan]
    for e0, e1 in zip(errors[:-1], errors[1:]):
        out.append(math.log(e0 / e1) / math.log(ratio))
    return out


def _run_level(spec, rk, a, xl, xr, N, u0, t_final, dt_nondim):
    mesh = Mesh1D(xl, xr, N)
    f0 = project_initial(u0, mesh, spec)
    dt = dt_nondim * mesh.width / abs(a)
    f1 = integrate(f0, a, t_final, dt, rk)
    length = xr - xl

    def exact(x, t):
        return u0(xl + np.mod(x - a * t - xl, length))

    return l2_error(f1, exact)


def convergence_study(spec: SchemeSpec, rk="RK44", a: float = 2.0,
                      domain: tuple[float, float] = (-math.pi, math.pi),
                      u0: Callable = np.sin, t_final: float = math.pi,
                      N_list: Sequence[int] = (16, 32, 64, 128, 256),
                      cfl_fraction: float = 0.1, executor=None) -> ConvergenceRecord:
    """h-refinement study with tau = cfl_fraction * tau_CFL per level.

    The coarsest level is rerun with half the time step; the relative change
    in error is stored as ``temporal_check`` so callers can confirm the
    spatial error dominates.
    """
    N_list = list(N_list)
    if any(n1 != 2 * n0 for n0, n1 in zip(N_list[:-1], N_list[1:])):
        raise ValueError("N_list must double from level to level")
    rk = get_rk(rk)
    tau_cfl = cfl_limit(build_filter(spec), spec.alpha, rk).tau_cfl
    dt = cfl_fraction * tau_cfl
    xl, xr = domain
    args = [(spec, rk, a, xl, xr, N, u0, t_final, dt) for N in N_list]
    args.append((spec, rk, a, xl, xr, N_list[0], u0, t_final, 0.5 * dt))
    if executor is None:
        errs = [_run_level(*x) for x in args]
    else:
        errs = list(executor.map(lambda x: _run_level(*x), args))
    half = errs.pop()
    rec = ConvergenceRecord(
        N=N_list,
        dx=[(xr - xl) / N for N in N_list],
        l2_error=errs,
        order=observed_orders(errs),
        tau_cfl=tau_cfl,
        temporal_check=abs(half - errs[0]) / errs[0],
    )
    log.info("convergence %s: orders %s", spec.label(), rec.order)
    return rec


# -- global system matrix ----------------------------------------------------


@dataclass
class SystemMatrix:
    A_sys: np.ndarray
    eigenvalues: np.ndarray

    @property
    def max_re(self) -> float:
        return float(self.eigenvalues.real.max())

    @property
    def max_re_eigenvalue(self) -> complex:
        """Eigenvalue of largest real part (positive imaginary part on ties)."""
        ev = self.eigenvalues
        top = ev.real.max()
        cands = ev[np.abs(ev.real - top) <= 1e-10 * max(1.0, abs(top))]
        return complex(cands[np.argmax(cands.imag)])


def element_blocks(spec: SchemeSpec, mesh: Mesh1D, a: float):
    """(self, left-neighbour, right-neighbour) coupling blocks of the semi-discrete operator."""
    L = _lifted(spec)
    ops = L.fp.ops
    r, l = ops.r, ops.l
    a_hat = 2.0 * a / mesh.width
    s = (1.0 - spec.alpha) * abs(a_hat)
    # face vector: r (a_hat u_R - f_right) - l (a_hat u_L - f_left)
    # f_right = (a_hat - s)/2 * l.u_{k+1} + (a_hat + s)/2 * r.u_k
    # f_left  = (a_hat - s)/2 * l.u_k     + (a_hat + s)/2 * r.u_{k-1}
    face_self = np.outer(r, (a_hat - 0.5 * (a_hat + s)) * r) - np.outer(l, (a_hat - 0.5 * (a_hat - s)) * l)
    face_right = -np.outer(r, 0.5 * (a_hat - s) * l)
    face_left = np.outer(l, 0.5 * (a_hat + s) * r)
    vol = -a_hat * (L.inv @ L.MD if L.fp.side == FDG else ops.D)
    return vol + L.inv @ face_self, L.inv @ face_left, L.inv @ face_right


def assemble_system_matrix(spec: SchemeSpec, mesh: Mesh1D, a: float) -> SystemMatrix:
    """Dense global matrix A_sys with d/dt u = A_sys u (element-major ordering)."""
    n, N = spec.p + 1, mesh.N
    if n * N > MAX_SYSTEM_SIZE:
        raise ValueError(f"system size {n * N} exceeds the cap of {MAX_SYSTEM_SIZE}")
    B0, Bl, Br = element_blocks(spec, mesh, a)
    A = np.zeros((n * N, n * N))
    for k in range(N):
        rows = slice(k * n, (k + 1) * n)
        A[rows, rows] += B0
        km, kp = (k - 1) % N, (k + 1) % N
        A[rows, km * n:(km + 1) * n] += Bl
        A[rows, kp * n:(kp + 1) * n] += Br
    return SystemMatrix(A_sys=A, eigenvalues=np.linalg.eigvals(A))


def energy_diagnostic(field: SolutionField, a: float) -> float:
    """sum_k u_k^T (M + A) du_k/dt, half the rate of change of the (M + A) energy."""
    L = _lifted(field.spec)
    dU = rhs(field, a)
    return float(np.einsum("ki,ij,kj->", field.modes, L.fp.MA, dU))
