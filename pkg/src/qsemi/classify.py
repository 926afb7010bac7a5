"""Haar-type classification of idempotent states.

Five conditions that are equivalent for valid input, each computed by its
own procedure: (1) the left kernel C_omega is a two-sided ideal, (2) the
support p is central, (3) pAp is multiplicatively closed and a -> pap is
multiplicative, (4) the compressed (X, Delta_omega) is a compact quantum
group, (5) omega is of Haar type (by definition the same as (4)).  The
equivalence is used only as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fdalg import DEFAULT_TOL, Element, Functional, matrix_rank
from .hyper import ProtoCQH, build_hypergroup
from .idem import NotIdempotentError, idempotency_residual
from .qsg import QuantumSemigroup

EPS_IDEAL = 1e-8


@dataclass(frozen=True)
class Condition:
    holds: bool
    residual: float

    def as_dict(self) -> dict:
        return {"holds": self.holds, "residual": self.residual}


@dataclass(frozen=True)
class ClassificationReport:
    cond1_two_sided_ideal: Condition
    cond2_central: Condition
    cond3_cstar_and_hom: Condition
    cond4_cqg: Condition
    cond5_haar_type: bool
    is_tracial: bool
    left_kernel_dim: int
    support_ranks: tuple
    corner_closed: float  # residual of pAp being closed under products (always ~0)
    compression_hom: float  # multiplicativity residual of a -> pap
    delta_hom: float
    cancellation_ranks: tuple
    tol: float

    @property
    def conditions(self) -> tuple:
        return (
            self.cond1_two_sided_ideal.holds,
            self.cond2_central.holds,
            self.cond3_cstar_and_hom.holds,
            self.cond4_cqg.holds,
            self.cond5_haar_type,
        )

    @property
    def agreement(self) -> bool:
        return len(set(self.conditions)) == 1

    @property
    def haar_type(self) -> bool:
        return self.cond5_haar_type

    def as_dict(self) -> dict:
        return {
            "cond1_two_sided_ideal": self.cond1_two_sided_ideal.as_dict(),
            "cond2_central": self.cond2_central.as_dict(),
            "cond3_cstar_and_hom": self.cond3_cstar_and_hom.as_dict(),
            "cond4_cqg": self.cond4_cqg.as_dict(),
            "cond5_haar_type": self.cond5_haar_type,
            "agreement": self.agreement,
            "is_tracial": self.is_tracial,
            "left_kernel_dim": self.left_kernel_dim,
            "support_ranks": list(self.support_ranks),
            "corner_closed": self.corner_closed,
            "compression_hom": self.compression_hom,
            "delta_hom": self.delta_hom,
            "cancellation_ranks": list(self.cancellation_ranks),
            "tol": self.tol,
        }


class TheoremViolation(ArithmeticError):
    """The five conditions disagree; the input or the tolerances are broken."""

    def __init__(self, report: ClassificationReport):
        super().__init__(f"Haar-type conditions disagree: {report.conditions}")
        self.report = report


def _gram(qs: QuantumSemigroup, omega: Functional, vecs: np.ndarray) -> np.ndarray:
    alg = qs.algebra
    star = alg.star_perm
    n = vecs.shape[1]
    g = np.empty((n, n), dtype=complex)
    for i in range(n):
        vi = np.conj(vecs[star, i])
        for j in range(n):
            g[i, j] = omega.covector @ alg.multiply(vi, vecs[:, j])
    return g


def left_kernel(qs: QuantumSemigroup, omega: Functional, tol: float = EPS_IDEAL) -> np.ndarray:
    """Orthonormal basis (columns) of C_omega = {a : omega(a* a) = 0}."""
    g = _gram(qs, omega, np.eye(qs.dim, dtype=complex))
    g = (g + g.conj().T) / 2
    lam, v = np.linalg.eigh(g)
    return v[:, lam <= tol * max(1.0, lam.max())]


def _ideal_residual(qs: QuantumSemigroup, K: np.ndarray) -> float:
    if K.shape[1] == 0:
        return 0.0
    alg = qs.algebra
    proj = np.eye(qs.dim) - K @ K.conj().T
    eye = np.eye(qs.dim)
    worst = 0.0
    for c in K.T:
        for k in range(qs.dim):
            for prod in (alg.multiply(eye[k], c), alg.multiply(c, eye[k])):
                worst = max(worst, float(np.linalg.norm(proj @ prod)))
    return worst


def _centrality(qs: QuantumSemigroup, p: np.ndarray) -> float:
    alg = qs.algebra
    eye = np.eye(qs.dim)
    return max(float(np.linalg.norm(alg.multiply(p, eye[k]) - alg.multiply(eye[k], p))) for k in range(qs.dim))


def _compression_hom(qs: QuantumSemigroup, p: np.ndarray) -> float:
    alg = qs.algebra
    eye = np.eye(qs.dim)

    def comp(a):
        return alg.multiply(alg.multiply(p, a), p)

    worst = 0.0
    for i in range(qs.dim):
        ci = comp(eye[i])
        for j in range(qs.dim):
            lhs = comp(alg.multiply(eye[i], eye[j]))
            rhs = alg.multiply(ci, comp(eye[j]))
            worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst


def _corner_closed(H: ProtoCQH) -> float:
    alg = H.qs.algebra
    B = H.system.matrix
    proj = np.eye(alg.dim) - B @ B.conj().T
    return max(
        float(np.linalg.norm(proj @ alg.multiply(B[:, k], B[:, l]))) for k in range(H.m) for l in range(H.m)
    )


def _delta_hom(H: ProtoCQH) -> float:
    """*-homomorphism residual of Delta_omega with X carrying the corner product."""
    qs = H.qs
    alg = qs.algebra
    ts = qs.delta.tensor_structure
    B = H.system.matrix
    BB = np.kron(B, B)
    lifted = BB @ H.delta_omega  # columns: Delta_omega(x_k) in A (x) A
    m = H.m
    worst = 0.0
    for k in range(m):
        for l in range(m):
            xy = H.system.coords(Element(alg, alg.multiply(B[:, k], B[:, l])))
            lhs = lifted @ xy
            rhs = ts.multiply(lifted[:, k], lifted[:, l])
            worst = max(worst, float(np.linalg.norm(lhs - rhs)))
        xs = H.system.coords(Element(alg, np.conj(B[alg.star_perm, k])))
        star_img = np.conj((lifted[:, k])[ts.star_perm])
        worst = max(worst, float(np.linalg.norm(lifted @ xs - star_img)))
    return worst


def _compressed_cancellation(H: ProtoCQH, tol: float) -> tuple[int, int]:
    qs = H.qs
    ts = qs.delta.tensor_structure
    B = H.system.matrix
    BB = np.kron(B, B)
    lifted = BB @ H.delta_omega
    pe = H.support.element.coeffs
    m = H.m
    first = np.empty((BB.shape[0], m * m), dtype=complex)
    second = np.empty_like(first)
    for k in range(m):
        for l in range(m):
            first[:, k * m + l] = ts.multiply(np.kron(B[:, k], pe), lifted[:, l])
            second[:, k * m + l] = ts.multiply(lifted[:, k], np.kron(pe, B[:, l]))
    return matrix_rank(first, tol), matrix_rank(second, tol)


def tracial_check(qs: QuantumSemigroup, omega: Functional, tol: float = 1e-8) -> bool:
    """omega(ab) = omega(ba) on all basis pairs."""
    alg = qs.algebra
    eye = np.eye(qs.dim)
    w = omega.covector
    for i in range(qs.dim):
        for j in range(i + 1, qs.dim):
            if abs(w @ alg.multiply(eye[i], eye[j]) - w @ alg.multiply(eye[j], eye[i])) > tol:
                return False
    return True


def haar_type_report(
    qs: QuantumSemigroup,
    omega: Functional,
    tol: float = 1e-8,
    H: Optional[ProtoCQH] = None,
    strict: bool = False,
) -> ClassificationReport:
    r = idempotency_residual(qs, omega)
    if r > max(tol, 1e-8):
        raise NotIdempotentError(f"idempotency residual {r:.3e}")
    if H is None:
        H = build_hypergroup(qs, omega, min(tol, DEFAULT_TOL))
    pe = H.support.element.coeffs

    K = left_kernel(qs, omega, EPS_IDEAL)
    ideal = _ideal_residual(qs, K)
    central = _centrality(qs, pe)
    closed = _corner_closed(H)
    comp_hom = _compression_hom(qs, pe)
    cond3_res = max(closed, comp_hom)
    dhom = _delta_hom(H)
    ranks = _compressed_cancellation(H, 1e-9)
    cancels = ranks[0] == H.m**2 and ranks[1] == H.m**2
    cond4 = dhom <= tol and cancels

    report = ClassificationReport(
        cond1_two_sided_ideal=Condition(ideal <= EPS_IDEAL, ideal),
        cond2_central=Condition(central <= tol, central),
        cond3_cstar_and_hom=Condition(cond3_res <= tol, cond3_res),
        cond4_cqg=Condition(cond4, dhom),
        cond5_haar_type=cond4,
        is_tracial=tracial_check(qs, omega, tol),
        left_kernel_dim=K.shape[1],
        support_ranks=H.support.ranks,
        corner_closed=closed,
        compression_hom=comp_hom,
        delta_hom=dhom,
        cancellation_ranks=ranks,
        tol=tol,
    )
    if strict and not report.agreement:
        raise TheoremViolation(report)
    return report
