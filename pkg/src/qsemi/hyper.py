"""The compressed object of an idempotent state and its universal property.

For an idempotent state omega with support p, X = pAp is an operator system
with unit p, Delta_omega(pap) = (p (x) p) Delta(a) (p (x) p) maps X into
X (x) X, and h = omega|_X is a faithful invariant state.  Everything here is
expressed in the Hilbert-Schmidt orthonormal basis returned by
:func:`compress_basis`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .fdalg import (
    DEFAULT_TOL,
    BlockStructure,
    Element,
    Functional,
    OperatorSystemBasis,
    Projection,
    compress_basis,
    compression_matrix,
    cp_margin,
    matrix_rank,
    null_space,
    support_projection,
)
from .idem import NotIdempotentError, idempotency_residual
from .qsg import QuantumSemigroup, conv_state_elt


class RangeContainmentError(ArithmeticError):
    """(p (x) p) Delta(a) (p (x) p) left X (x) X; impossible for valid input."""


class HypothesisError(ValueError):
    hypothesis = "unspecified"

    def __init__(self, residual: float, detail: str = ""):
        msg = f"factorization hypothesis '{self.hypothesis}' fails (residual {residual:.3e})"
        super().__init__(msg + (f": {detail}" if detail else ""))
        self.residual = residual


class NotCompletelyPositive(HypothesisError):
    hypothesis = "completely positive"


class NotSurjective(HypothesisError):
    hypothesis = "surjective"


class NotIntertwining(HypothesisError):
    hypothesis = "intertwines comultiplications"


class StateMismatch(HypothesisError):
    hypothesis = "omega = h_Y o pi_Y"


class HaarNotFaithful(HypothesisError):
    hypothesis = "h_Y faithful"


class NotContractive(HypothesisError):
    hypothesis = "contractive"


class KernelInclusionError(ArithmeticError):
    """ker pi_omega is not contained in ker pi_Y."""


def _tensor_compress(qs: QuantumSemigroup, pp: np.ndarray, y: np.ndarray) -> np.ndarray:
    ts = qs.delta.tensor_structure
    return ts.multiply(ts.multiply(pp, y), pp)


@dataclass(frozen=True, eq=False)
class ProtoCQH:
    system: OperatorSystemBasis
    delta_omega: np.ndarray  # (m*m, m), column k = Delta_omega(x_k) in the basis x_k (x) x_l
    haar: np.ndarray  # h(x_k)
    qs: QuantumSemigroup = field(repr=False)
    omega: Functional = field(repr=False)
    range_residual: float = 0.0

    @property
    def m(self) -> int:
        return self.system.m

    @property
    def support(self) -> Projection:
        return self.system.unit

    @cached_property
    def pi_omega(self) -> np.ndarray:
        """(m, d) matrix of a -> pap in system coordinates."""
        B = self.system.matrix
        return B.conj().T @ compression_matrix(self.support.element)

    def haar_functional(self) -> Functional:
        return self.omega


def build_hypergroup(qs: QuantumSemigroup, omega: Functional, tol: float = DEFAULT_TOL) -> ProtoCQH:
    r = idempotency_residual(qs, omega)
    if r > max(tol, 1e-8):
        raise NotIdempotentError(f"idempotency residual {r:.3e}")
    p = support_projection(omega, tol)
    X = compress_basis(p)
    B = X.matrix
    m = X.m
    pe = p.element.coeffs
    pp = np.kron(pe, pe)
    BB = np.kron(B, B)
    D = qs.delta.matrix
    delta_omega = np.empty((m * m, m), dtype=complex)
    worst = 0.0
    for k in range(m):
        z = _tensor_compress(qs, pp, D @ B[:, k])
        c = BB.conj().T @ z
        worst = max(worst, float(np.linalg.norm(z - BB @ c)))
        delta_omega[:, k] = c
    scale = max(1.0, float(np.abs(D).max()))
    if worst > tol * scale * 10:
        raise RangeContainmentError(f"range residual {worst:.3e}")
    haar = omega.covector @ B
    return ProtoCQH(X, delta_omega, haar, qs, omega, worst)


@dataclass(frozen=True)
class HypergroupReport:
    dp0: float
    ompom: float  # max_a || p (a * omega) p - omega(a) p ||
    ompom_left: float  # same with omega * a
    range_residual: float
    unitality: float
    coassociativity: float
    cp_margin: float
    left_invariance: float
    right_invariance: float
    faithfulness_margin: float
    uniqueness_dim: int
    uniqueness_residual: float
    converse_witness: float  # e = 1 in the converse criterion for compact support
    tol: float

    @property
    def passed(self) -> bool:
        t = self.tol
        small = (
            self.dp0,
            self.ompom,
            self.ompom_left,
            self.range_residual,
            self.unitality,
            self.coassociativity,
            self.left_invariance,
            self.right_invariance,
            self.uniqueness_residual,
            self.converse_witness,
        )
        return (
            all(v <= t for v in small)
            and self.cp_margin >= -t
            and self.faithfulness_margin > t
            and self.uniqueness_dim == 1
        )

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["passed"] = self.passed
        return out


def invariance_constraints(delta_omega: np.ndarray, unit: np.ndarray) -> np.ndarray:
    """Rows of the linear system (h (x) id)Delta(x_k) = h(x_k) p = (id (x) h)Delta(x_k)."""
    m = unit.size
    C = delta_omega.reshape(m, m, m)  # C[a, b, k]
    rows = []
    for k in range(m):
        for l in range(m):
            left = C[:, l, k].copy()
            left[k] -= unit[l]
            right = C[l, :, k].copy()
            right[k] -= unit[l]
            rows.append(left)
            rows.append(right)
    return np.array(rows)


def verify_hypergroup(H: ProtoCQH, tol: float = 1e-8) -> HypergroupReport:
    qs, omega = H.qs, H.omega
    X = H.system
    B = X.matrix
    m = X.m
    d = qs.dim
    ts = qs.delta.tensor_structure
    pe = H.support.element.coeffs
    pp = np.kron(pe, pe)
    D = qs.delta.matrix

    dp0 = float(np.linalg.norm(ts.multiply(D @ pe, pp) - pp))

    ompom = ompom_left = 0.0
    for k in range(d):
        a = Element.basis(qs.algebra, k)
        wa = omega(a)
        for side in ("right", "left"):
            y = conv_state_elt(qs, omega, a, side)
            res = float(np.linalg.norm(qs.algebra.multiply(qs.algebra.multiply(pe, y.coeffs), pe) - wa * pe))
            if side == "right":
                ompom = max(ompom, res)
            else:
                ompom_left = max(ompom_left, res)

    u = X.unit_coords()
    Dw = H.delta_omega
    unitality = float(np.linalg.norm(Dw @ u - np.kron(u, u)))
    eye = np.eye(m)
    coassoc = float(np.abs(np.kron(Dw, eye) @ Dw - np.kron(eye, Dw) @ Dw).max())

    ambient = np.stack([_tensor_compress(qs, pp, D[:, c]) for c in range(d)], axis=1)
    margin = cp_margin(ambient, qs.algebra, ts)

    C = Dw.reshape(m, m, m)
    h = H.haar
    left_inv = float(np.abs(np.einsum("a,abk->bk", h, C) - np.outer(u, h)).max())
    right_inv = float(np.abs(np.einsum("b,abk->ak", h, C) - np.outer(u, h)).max())

    alg = qs.algebra
    star = alg.star_perm
    gram = np.empty((m, m), dtype=complex)
    for k in range(m):
        bk_star = np.conj(B[star, k])
        for l in range(m):
            gram[k, l] = omega.covector @ alg.multiply(bk_star, B[:, l])
    faithful = float(np.linalg.eigvalsh((gram + gram.conj().T) / 2).min())

    ns = null_space(invariance_constraints(Dw, u), 1e-10)
    udim = ns.shape[1]
    if udim == 1:
        v = ns[:, 0]
        v = v / (v @ u)
        ures = float(np.linalg.norm(v - h))
    else:
        ures = float("inf") if udim == 0 else 0.0

    witness = float(np.linalg.norm(_tensor_compress(qs, pp, D @ alg.unit_coeffs()) - pp))
    witness = max(witness, abs(omega(Element.unit(alg)) - 1))

    return HypergroupReport(
        dp0=dp0,
        ompom=ompom,
        ompom_left=ompom_left,
        range_residual=H.range_residual,
        unitality=unitality,
        coassociativity=coassoc,
        cp_margin=margin,
        left_invariance=left_inv,
        right_invariance=right_inv,
        faithfulness_margin=faithful,
        uniqueness_dim=udim,
        uniqueness_residual=ures,
        converse_witness=witness,
        tol=tol,
    )


# --- universal factorization ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class Target:
    """A proto-hypergroup Y sitting in some ambient algebra, with a map pi_Y: A -> Y.

    ``delta`` is (k*k, k) over the system basis, ``haar`` a functional on the
    ambient algebra of Y, ``pi`` the (k, d) coordinate matrix of pi_Y.
    """

    system: OperatorSystemBasis
    delta: np.ndarray
    haar: Functional
    pi: np.ndarray

    @property
    def k(self) -> int:
        return self.system.m

    @property
    def haar_coords(self) -> np.ndarray:
        return self.haar.covector @ self.system.matrix


def full_system(algebra: BlockStructure) -> OperatorSystemBasis:
    return compress_basis(Projection.from_element(Element.unit(algebra)))


def trivial_target(omega: Functional) -> Target:
    """Y = C with pi_Y = omega."""
    one = BlockStructure([1])
    return Target(full_system(one), np.ones((1, 1), dtype=complex), Functional(one, (np.ones((1, 1)),)), omega.covector[None, :])


def self_target(H: ProtoCQH) -> Target:
    return Target(H.system, H.delta_omega, H.omega, H.pi_omega)


@dataclass(frozen=True, eq=False)
class InducedMap:
    matrix: np.ndarray  # (k, m): X_omega -> Y
    target: Target
    hypotheses: dict
    factorization: float
    unitality: float
    intertwining: float
    cp_margin: float
    kernel_inclusion: float
    unique: bool
    norm_of_unit: float

    def residuals(self) -> dict:
        return {
            "factorization": self.factorization,
            "unitality": self.unitality,
            "intertwining": self.intertwining,
            "cp_margin": self.cp_margin,
            "kernel_inclusion": self.kernel_inclusion,
            "unique": self.unique,
            "norm_of_unit": self.norm_of_unit,
        }


def _corner_algebra(X: OperatorSystemBasis) -> BlockStructure:
    return BlockStructure([r for r in X.unit.ranks if r > 0])


def _check_hypotheses(qs: QuantumSemigroup, omega: Functional, Y: Target, tol: float) -> dict:
    d, k = qs.dim, Y.k
    if Y.pi.shape != (k, d) or Y.delta.shape != (k * k, k):
        raise ValueError("target matrices have inconsistent shapes")
    Ym = Y.system.matrix
    amb = Ym @ Y.pi
    margin = cp_margin(amb, qs.algebra, Y.system.parent)
    if margin < -tol:
        raise NotCompletelyPositive(-margin)
    rank = matrix_rank(Y.pi, 1e-10)
    if rank < k:
        raise NotSurjective(float(k - rank), f"rank {rank} < {k}")
    inter = float(np.abs(Y.delta @ Y.pi - np.kron(Y.pi, Y.pi) @ qs.delta.matrix).max())
    if inter > tol:
        raise NotIntertwining(inter)
    state = float(np.abs(Y.haar_coords @ Y.pi - omega.covector).max())
    if state > tol:
        raise StateMismatch(state)
    par = Y.system.parent
    star = par.star_perm
    gram = np.array([[Y.haar.covector @ par.multiply(np.conj(Ym[star, a]), Ym[:, b]) for b in range(k)] for a in range(k)])
    faithful = float(np.linalg.eigvalsh((gram + gram.conj().T) / 2).min())
    if faithful <= tol:
        raise HaarNotFaithful(faithful)
    unit_img = Element(par, amb @ qs.algebra.unit_coeffs())
    nrm = unit_img.norm()
    if nrm > 1 + tol:
        raise NotContractive(nrm - 1)
    return {
        "cp_margin": margin,
        "surjective_rank": rank,
        "intertwining": inter,
        "state": state,
        "faithfulness": faithful,
        "norm_pi_unit": nrm,
    }


def factor_through(qs: QuantumSemigroup, omega: Functional, target: Target, tol: float = 1e-8, H: Optional[ProtoCQH] = None) -> InducedMap:
    """The unique map pi with pi_Y = pi o pi_omega, checked against every claimed property."""
    hyp = _check_hypotheses(qs, omega, target, tol)
    if H is None:
        H = build_hypergroup(qs, omega)
    piw = H.pi_omega
    K = null_space(piw, 1e-10)
    kern = float(np.abs(target.pi @ K).max()) if K.size else 0.0
    if kern > tol:
        raise KernelInclusionError(f"pi_Y does not vanish on ker pi_omega (residual {kern:.3e})")
    Pi = np.linalg.lstsq(piw.T, target.pi.T, rcond=None)[0].T
    fac = float(np.abs(Pi @ piw - target.pi).max())
    uX = H.system.unit_coords()
    uY = target.system.unit_coords()
    unital = float(np.abs(Pi @ uX - uY).max())
    inter = float(np.abs(target.delta @ Pi - np.kron(Pi, Pi) @ H.delta_omega).max())
    cp = cp_margin(target.system.matrix @ Pi, _corner_algebra(H.system), target.system.parent)
    unique = matrix_rank(piw, 1e-10) == H.m
    nrm = Element(target.system.parent, target.system.matrix @ Pi @ uX).norm()
    return InducedMap(Pi, target, hyp, fac, unital, inter, cp, kern, unique, nrm)
