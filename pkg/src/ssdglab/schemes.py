"""Filtering (K) and correction (Q) matrices for the DG/ESFR/EESFR/SSDG/GSFR families.

A scheme is either a filtered DG scheme, ``(M + K) du/dt = DG residual``, or a
flux reconstruction scheme, ``du/dt = -D f + (M + Q)^{-1} face terms``.  Both
are captured by :class:`FilterPair`, which stores the matrix ``A`` (K or Q)
together with the side it should be read on.

Unstable or non-conservative parameters are constructible on purpose; the
stability and conservation predicates are separate queries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .operators import LEGENDRE, OperatorSet, build_operators, kp_constant

FAMILIES = ("DG", "ESFR", "EESFR", "SSDG", "GSFR")

FDG = "fdg"
FR = "fr"

PD_THRESHOLD = 1e-12


class SchemeError(ValueError):
    pass


@dataclass(frozen=True)
class SchemeSpec:
    """Family tag, degree, parameter vector and numerical-flux blend ``alpha``.

    Parameter layouts:

    * DG: ``()``
    * ESFR: ``(c_p,)``
    * EESFR: ``(q0, q1)``
    * SSDG: ``(c_p, c_{p-1})`` for the two-parameter form, or ``(c_1, ..., c_p)``
      for the general form (length ``p``, ``p != 2``)
    * GSFR: ``(b_1, ..., b_p)``

    ``alpha = 0`` is the upwind flux and ``alpha = 1`` the central flux.
    """

    family: str
    p: int
    params: tuple[float, ...] = ()
    alpha: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))
        fam = self.family.upper()
        object.__setattr__(self, "family", fam)
        if fam not in FAMILIES:
            raise SchemeError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if not isinstance(self.p, (int, np.integer)) or self.p < 0:
            raise SchemeError(f"degree must be a non-negative integer, got {self.p!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise SchemeError(f"alpha must lie in [0, 1], got {self.alpha}")
        n = len(self.params)
        p = self.p
        if fam == "DG" and n != 0:
            raise SchemeError("DG takes no parameters")
        if fam == "ESFR" and n != 1:
            raise SchemeError("ESFR takes exactly one parameter c_p")
        if fam == "EESFR":
            if n != 2:
                raise SchemeError("EESFR takes two parameters (q0, q1)")
            if p < 2:
                raise SchemeError("two-parameter EESFR requires p >= 2")
        if fam == "SSDG" and not (n == p or (n == 2 and p >= 2)):
            raise SchemeError(f"SSDG with p={p} takes (c_p, c_p-1) or (c_1..c_p)")
        if fam == "SSDG" and p == 0:
            raise SchemeError("SSDG requires p >= 1")
        if fam == "GSFR" and n != p:
            raise SchemeError(f"GSFR with p={p} takes {p} parameters b_1..b_p")

    @property
    def ssdg_coefficients(self) -> tuple[float, ...]:
        """SSDG parameters expanded to the full ``(c_1, ..., c_p)`` layout."""
        if self.family != "SSDG":
            raise SchemeError("not an SSDG scheme")
        if len(self.params) == 2 and self.p >= 2:
            cp, cpm1 = self.params
            return (0.0,) * (self.p - 2) + (cpm1, cp)
        return self.params

    def to_dict(self) -> dict:
        return {"family": self.family, "p": int(self.p), "params": list(self.params), "alpha": self.alpha}

    @classmethod
    def from_dict(cls, data: dict) -> "SchemeSpec":
        unknown = set(data) - {"family", "p", "params", "alpha"}
        if unknown:
            raise SchemeError(f"unknown scheme keys: {sorted(unknown)}")
        return cls(
            family=data["family"],
            p=int(data["p"]),
            params=tuple(data.get("params", ())),
            alpha=float(data.get("alpha", 0.0)),
        )

    def label(self) -> str:
        vals = "_".join(f"{v:.6g}" for v in self.params)
        return f"{self.family}_p{self.p}" + (f"_{vals}" if vals else "") + f"_a{self.alpha:g}"


@dataclass(frozen=True, eq=False)
class FilterPair:
    """Realized K (``side == "fdg"``) or Q (``side == "fr"``) for one scheme."""

    side: str
    A: np.ndarray
    ops: OperatorSet
    spec: SchemeSpec | None = None
    dual: bool = field(default=False)

    @property
    def MA(self) -> np.ndarray:
        return self.ops.M + self.A

    def as_side(self, side: str) -> "FilterPair":
        """Reinterpret the same matrix on the other side (K <-> Q).

        Only meaningful for DG and ESFR, whose matrix is valid on both sides.
        """
        if side not in (FDG, FR):
            raise SchemeError(f"unknown side {side!r}")
        if side == self.side:
            return self
        if not self.dual:
            raise SchemeError("this filter is not valid as both K and Q")
        return replace(self, side=side)

    def in_basis(self, basis: str) -> "FilterPair":
        """Same scheme expressed in another polynomial basis."""
        if self.ops.basis != LEGENDRE:
            raise SchemeError("conversion is only defined from the Legendre basis")
        ops = build_operators(self.ops.p, basis)
        return replace(self, ops=ops, A=ops.to_basis(self.A))


def _sobolev_sum(ops: OperatorSet, weights: Sequence[float]) -> np.ndarray:
    """sum_k w_k (D^k)^T M D^k for k = 1..len(weights)."""
    A = np.zeros((ops.n, ops.n))
    Dk = np.eye(ops.n)
    for w in weights:
        Dk = Dk @ ops.D
        if w != 0.0:
            A += w * (Dk.T @ ops.M @ Dk)
    return A


def _require_legendre(ops: OperatorSet):
    if ops.basis != LEGENDRE:
        raise SchemeError("scheme matrices are constructed in the Legendre basis")


def esfr_filter(ops: OperatorSet, c_p: float) -> FilterPair:
    """K_ESFR = Q_ESFR = c_p/2 (D^p)^T M D^p; single entry k_p^2 c_p at (p, p)."""
    _require_legendre(ops)
    A = 0.5 * c_p * (ops.power_D(ops.p).T @ ops.M @ ops.power_D(ops.p)) if ops.p > 0 else np.zeros((1, 1))
    return FilterPair(FDG, A, ops, dual=True)


def ssdg_filter(ops: OperatorSet, c: Sequence[float]) -> FilterPair:
    """K_SSDG = 1/2 sum_k c_k (D^k)^T M D^k with ``c = (c_1, ..., c_p)``.

    Diagonal for the two-parameter form.  With ``c_k != 0`` for ``k < p - 1``
    the matrix picks up off-diagonal entries (e.g. ``(D^T M D)_{13} = 2`` for p=3).
    """
    _require_legendre(ops)
    if len(c) != ops.p:
        raise SchemeError(f"expected {ops.p} SSDG coefficients, got {len(c)}")
    return FilterPair(FDG, 0.5 * _sobolev_sum(ops, c), ops)


def eesfr_q(ops: OperatorSet, q0: float, q1: float) -> FilterPair:
    """Two-parameter EESFR correction matrix."""
    _require_legendre(ops)
    p = ops.p
    if p < 2:
        raise SchemeError("two-parameter EESFR requires p >= 2")
    beta = (2 * p - 1) / (2 * p - 3)
    Q = np.zeros((p + 1, p + 1))
    Q[p - 1, p - 1] = q1
    Q[p, p] = q0
    Q[p - 2, p] = Q[p, p - 2] = -beta * q1
    return FilterPair(FR, Q, ops)


def gsfr_q(ops: OperatorSet, b: Sequence[float]) -> FilterPair:
    """Q_GSFR = sum_k b_k (D^k)^T M D^k (no 1/2 factor)."""
    _require_legendre(ops)
    if len(b) != ops.p:
        raise SchemeError(f"expected {ops.p} GSFR coefficients, got {len(b)}")
    return FilterPair(FR, _sobolev_sum(ops, b), ops)


def build_filter(spec: SchemeSpec, basis: str = LEGENDRE) -> FilterPair:
    """Realize the matrix for ``spec`` on its native side."""
    ops = build_operators(spec.p)
    fam = spec.family
    if fam == "DG":
        fp = FilterPair(FDG, np.zeros((ops.n, ops.n)), ops, dual=True)
    elif fam == "ESFR":
        fp = esfr_filter(ops, spec.params[0])
    elif fam == "SSDG":
        fp = ssdg_filter(ops, spec.ssdg_coefficients)
    elif fam == "EESFR":
        fp = eesfr_q(ops, *spec.params)
    else:
        fp = gsfr_q(ops, spec.params)
    fp = replace(fp, spec=spec)
    return fp if basis == LEGENDRE else fp.in_basis(basis)


# -- canonical values and closed-form bounds ---------------------------------


def canonical_c(p: int, kind: str) -> float:
    """c_DG, c_SD, c_HU or the lower stability bound c^- of the ESFR family."""
    if p < 1:
        raise SchemeError("canonical ESFR values need p >= 1")
    k2 = kp_constant(p) ** 2
    kind = kind.upper()
    if kind == "DG":
        return 0.0
    if kind == "SD":
        return 2 * p / ((2 * p + 1) * (p + 1) * k2)
    if kind == "HU":
        return 2 * (p + 1) / ((2 * p + 1) * p * k2)
    if kind == "LOWER":
        return -2 / ((2 * p + 1) * k2)
    raise SchemeError(f"unknown canonical value {kind!r}")


def esfr_to_eesfr_q0(p: int, c_p: float) -> float:
    return kp_constant(p) ** 2 * c_p


def ssdg_lower_bounds(p: int, c_pm1: float) -> tuple[float, float]:
    """Lower bounds (c_{p-1}^-, c_p^-) of the two-parameter SSDG family.

    The second bound depends on the actual ``c_{p-1}``.
    """
    cpm1_min = -2 / (kp_constant(p - 1) ** 2 * (2 * p - 1))
    cp_min = -c_pm1 / 3 - 2 / (kp_constant(p) ** 2 * (2 * p + 1))
    return cpm1_min, cp_min


def ssdg_cpm1_lower(p: int, c_p: float) -> float:
    """Effective c_{p-1}^- at fixed ``c_p``: the tighter of both SSDG constraints."""
    from_cp = -3 * c_p - 6 / (kp_constant(p) ** 2 * (2 * p + 1))
    return max(ssdg_lower_bounds(p, 0.0)[0], from_cp)


def eesfr_q1_bounds(p: int, q0: float) -> tuple[float, float]:
    """(q1^-, q1^+) for two-parameter EESFR; NaN upper bound when none is admissible."""
    lower = -2 / (2 * p - 1)
    rhs = 2 * (2 * p - 3) / (2 * p - 1) ** 2 * (2 / (2 * p + 1) + q0)
    upper = math.sqrt(rhs) if rhs > 0 else math.nan
    return lower, upper


def stability_violations(spec: SchemeSpec) -> list[str]:
    """Closed-form linear-stability bounds violated by ``spec`` (empty when stable).

    Families without a closed form (general SSDG, GSFR) fall back to the
    positive-definiteness test of M + A.
    """
    p, fam, prm = spec.p, spec.family, spec.params
    out = []
    if fam == "ESFR" and p >= 1:
        lo = canonical_c(p, "LOWER")
        if not prm[0] > lo:
            out.append(f"ESFR requires c_p > c^- = {lo:.6g} (got {prm[0]:.6g})")
    elif fam == "SSDG" and len(prm) == 2 and p >= 2:
        cp, cpm1 = prm
        lo1, lo0 = ssdg_lower_bounds(p, cpm1)
        if not cpm1 > lo1:
            out.append(f"SSDG requires c_p-1 > {lo1:.6g} (got {cpm1:.6g})")
        if not cp > lo0:
            out.append(f"SSDG requires c_p > -c_p-1/3 - 2/(k_p^2(2p+1)) = {lo0:.6g} (got {cp:.6g})")
    elif fam == "EESFR":
        q0, q1 = prm
        lo, hi = eesfr_q1_bounds(p, q0)
        if not q1 > lo:
            out.append(f"EESFR requires q1 > -2/(2p-1) = {lo:.6g} (got {q1:.6g})")
        if not (q1 * q1 < 2 * (2 * p - 3) / (2 * p - 1) ** 2 * (2 / (2 * p + 1) + q0)):
            out.append(f"EESFR requires |q1| < q1+ = {hi:.6g} (got {q1:.6g})")
    elif fam != "DG":
        if not is_linearly_stable(build_filter(spec)):
            out.append(f"{fam} requires M + A positive definite")
    return out


# -- predicates --------------------------------------------------------------


def is_linearly_stable(fp: FilterPair) -> bool:
    """M + A positive definite (eigenvalues of its symmetric part above 1e-12)."""
    MA = fp.MA
    sym = 0.5 * (MA + MA.T)
    return bool(np.linalg.eigvalsh(sym).min() > PD_THRESHOLD)


def is_conservative(fp: FilterPair, side: str | None = None) -> bool:
    """First row of K (FDG side), or first row and column of Q (FR side), vanish."""
    if fp.ops.basis != LEGENDRE:
        raise SchemeError("the conservation test is stated in the Legendre basis")
    side = side or fp.side
    ok = np.max(np.abs(fp.A[0, :])) < 1e-14
    if side == FR:
        ok = ok and np.max(np.abs(fp.A[:, 0])) < 1e-14
    return bool(ok)


def _parity_matrix(n: int) -> np.ndarray:
    return np.diag([(-1.0) ** (i + 1) for i in range(n)])


def eesfr_structure_check(fp: FilterPair, tol: float = 1e-12) -> bool:
    """Q symmetric, QD + D^T Q^T = 0, and Q commutes with the parity matrix J."""
    Q, D = fp.A, fp.ops.D
    J = _parity_matrix(fp.ops.n)
    sym = np.max(np.abs(Q - Q.T)) < tol
    anti = np.max(np.abs(Q @ D + D.T @ Q.T)) < tol
    comm = np.max(np.abs(J @ Q - Q @ J)) < tol
    return bool(sym and anti and comm)


def fdg_expressible_as_fr(fp: FilterPair) -> bool:
    """K D = 0 and M + K invertible."""
    K = fp.A
    if np.linalg.cond(fp.MA) >= 1e12:
        return False
    return bool(np.max(np.abs(K @ fp.ops.D)) < 1e-12)


class IllConditionedError(ArithmeticError):
    pass


def fr_expressible_as_fdg(fp: FilterPair, alpha: float, tol: float = 1e-10):
    """Search for a filter K with K D = 0 reproducing the FR lifting of Q.

    Returns ``(True, K)`` when one exists and ``(False, None)`` otherwise.
    In the Legendre basis K D = 0 leaves only the last column of K free, so
    the lifting constraints are linear in those p + 1 entries.  With an upwind
    flux (``alpha == 0``) the downwind trace never enters the scheme and only
    the ``l`` constraint remains.
    """
    ops = fp.ops
    if ops.basis != LEGENDRE:
        raise SchemeError("equivalence search is done in the Legendre basis")
    n, p = ops.n, ops.p
    MQ = fp.MA
    if np.linalg.cond(MQ) >= 1e12:
        raise IllConditionedError("M + Q is singular")
    traces = [ops.l] if alpha == 0 else [ops.r, ops.l]
    blocks, rhs = [], []
    for v in traces:
        y = np.linalg.solve(MQ, v)
        # (M + k e_p^T) y = v  <=>  y_p k = v - M y
        blocks.append(y[p] * np.eye(n))
        rhs.append(v - ops.M @ y)
    G = np.vstack(blocks)
    g = np.concatenate(rhs)
    if np.linalg.cond(G) > 1e12:
        raise IllConditionedError("constraint system for the equivalent filter is ill-conditioned")
    k, *_ = np.linalg.lstsq(G, g, rcond=None)
    if np.max(np.abs(G @ k - g)) >= tol:
        return False, None
    K = np.zeros((n, n))
    K[:, p] = k
    if np.linalg.cond(ops.M + K) >= 1e12:
        return False, None
    return True, K


def equivalence_verdict(spec: SchemeSpec) -> str:
    """Classify ``spec`` as ``"both"``, ``"FDG-only"`` or ``"FR-only"``."""
    fp = build_filter(spec)
    if fp.side == FDG:
        return "both" if fdg_expressible_as_fr(fp) else "FDG-only"
    ok, _ = fr_expressible_as_fdg(fp, spec.alpha)
    return "both" if ok else "FR-only"
