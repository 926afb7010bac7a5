"""Quantum semigroups: comultiplications, convolution and cancellation."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .fdalg import (
    DEFAULT_TOL,
    BlockStructure,
    Element,
    Functional,
    StructureMismatch,
    TensorStructure,
    matrix_rank,
)


class InvalidQuantumSemigroup(ValueError):
    def __init__(self, report: "AxiomReport"):
        super().__init__(f"comultiplication fails the axioms: {report.residuals}")
        self.report = report


@dataclass(frozen=True, eq=False)
class Comultiplication:
    """Column c of ``matrix`` holds Delta(E_c) in the product basis i*d + j."""

    parent: BlockStructure
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        d = self.parent.dim
        if m.shape != (d * d, d):
            raise StructureMismatch(f"delta has shape {m.shape}, expected {(d * d, d)}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @cached_property
    def tensor_structure(self) -> TensorStructure:
        return TensorStructure(self.parent, self.parent)

    @cached_property
    def cube(self) -> np.ndarray:
        """D[i, j, c]: coefficient of E_i (x) E_j in Delta(E_c)."""
        d = self.parent.dim
        return self.matrix.reshape(d, d, d)

    def __call__(self, a: Element) -> Element:
        if a.structure != self.parent:
            raise StructureMismatch(f"{a.structure!r} vs {self.parent!r}")
        return Element(self.tensor_structure, self.matrix @ a.coeffs)

    def opposite(self) -> "Comultiplication":
        d = self.parent.dim
        flipped = self.cube.transpose(1, 0, 2).reshape(d * d, d)
        return Comultiplication(self.parent, flipped)


@dataclass(frozen=True)
class AxiomReport:
    unitality: float
    star: float
    multiplicativity: float
    coassociativity: float
    tol: float

    @property
    def residuals(self) -> dict:
        return {
            "unitality": self.unitality,
            "star": self.star,
            "multiplicativity": self.multiplicativity,
            "coassociativity": self.coassociativity,
        }

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.residuals.values())

    def as_dict(self) -> dict:
        return {**self.residuals, "tol": self.tol, "passed": self.passed}


def verify_quantum_semigroup(
    algebra: BlockStructure, delta, tol: float = DEFAULT_TOL
) -> AxiomReport:
    """Residuals of the four axioms of a unital coassociative *-homomorphism."""
    if not isinstance(delta, Comultiplication):
        delta = Comultiplication(algebra, delta)
    if delta.parent != algebra:
        raise StructureMismatch("comultiplication lives on a different algebra")
    d = algebra.dim
    ts = delta.tensor_structure
    D = delta.matrix

    unitality = float(np.abs(D @ algebra.unit_coeffs() - ts.unit_coeffs()).max())
    star = float(np.abs(D[:, algebra.star_perm] - np.conj(D[ts.star_perm, :])).max())

    mult = 0.0
    for i in range(d):
        for j in range(d):
            prod = algebra.multiply(np.eye(d)[i], np.eye(d)[j])
            lhs = D @ prod
            rhs = ts.multiply(D[:, i], D[:, j])
            mult = max(mult, float(np.abs(lhs - rhs).max()))

    C = delta.cube
    first = np.einsum("abi,ijc->abjc", C, C)  # (Delta (x) id) Delta
    second = np.einsum("ijc,abj->iabc", C, C)  # (id (x) Delta) Delta
    coassoc = float(np.abs(first - second).max())
    return AxiomReport(unitality, star, mult, coassoc, tol)


@dataclass(frozen=True, eq=False)
class QuantumSemigroup:
    name: str
    algebra: BlockStructure
    delta: Comultiplication
    report: AxiomReport
    oracle: Optional[Callable[[], list]] = field(default=None, repr=False)

    @classmethod
    def build(
        cls,
        name: str,
        algebra: BlockStructure,
        delta_matrix: np.ndarray,
        tol: float = DEFAULT_TOL,
        oracle: Optional[Callable[[], list]] = None,
    ) -> "QuantumSemigroup":
        delta = Comultiplication(algebra, delta_matrix)
        report = verify_quantum_semigroup(algebra, delta, tol)
        if not report.passed:
            raise InvalidQuantumSemigroup(report)
        return cls(name, algebra, delta, report, oracle)

    @property
    def dim(self) -> int:
        return self.algebra.dim

    def counit_candidates(self, tol: float = 1e-9) -> list[Functional]:
        """Characters eps with (eps (x) id) Delta = id = (id (x) eps) Delta."""
        out = []
        C = self.delta.cube
        eye = np.eye(self.dim)
        for b, n in enumerate(self.algebra.blocks):
            if n != 1:
                continue
            w = np.zeros(self.dim, dtype=complex)
            w[self.algebra.index(b, 0, 0)] = 1.0
            left = np.einsum("i,ijc->jc", w, C)
            right = np.einsum("j,ijc->ic", w, C)
            if np.abs(left - eye).max() <= tol and np.abs(right - eye).max() <= tol:
                out.append(Functional.from_covector(self.algebra, w))
        return out


def _same(mu: Functional, nu: Functional, qs: QuantumSemigroup):
    if mu.structure != qs.algebra or nu.structure != qs.algebra:
        raise StructureMismatch("functional lives on a different algebra")


def convolve(qs: QuantumSemigroup, mu: Functional, nu: Functional) -> Functional:
    """mu * nu = (mu (x) nu) o Delta."""
    _same(mu, nu, qs)
    w = np.einsum("i,j,ijc->c", mu.covector, nu.covector, qs.delta.cube)
    return Functional.from_covector(qs.algebra, w)


def conv_state_elt(qs: QuantumSemigroup, mu: Functional, a: Element, side: str = "left") -> Element:
    """side='left': mu * a = (id (x) mu) Delta(a); side='right': a * mu = (mu (x) id) Delta(a)."""
    _same(mu, mu, qs)
    if a.structure != qs.algebra:
        raise StructureMismatch("element lives on a different algebra")
    d = qs.dim
    X = (qs.delta.matrix @ a.coeffs).reshape(d, d)
    if side == "left":
        return Element(qs.algebra, X @ mu.covector)
    if side == "right":
        return Element(qs.algebra, mu.covector @ X)
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def act(a: Element, mu: Functional, side: str = "left") -> Functional:
    """Bimodule actions: (a . mu)(b) = mu(b a), (mu . a)(b) = mu(a b)."""
    if a.structure != mu.structure:
        raise StructureMismatch("element and functional live on different algebras")
    blocks = a.blocks()
    if side == "left":
        dens = tuple(x @ r for x, r in zip(blocks, mu.density))
    elif side == "right":
        dens = tuple(r @ x for x, r in zip(blocks, mu.density))
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return Functional(mu.structure, dens)


def opposite(qs: QuantumSemigroup) -> QuantumSemigroup:
    """Same algebra with the flipped comultiplication."""
    return QuantumSemigroup.build(
        qs.name + "^op", qs.algebra, qs.delta.opposite().matrix, qs.report.tol
    )


def translate_spans(qs: QuantumSemigroup) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient matrices of {(E_i (x) 1) Delta(E_j)} and {Delta(E_i) (1 (x) E_j)}.

    Column i*d + j of each matrix is the corresponding element of A (x) A.
    """
    d = qs.dim
    ts = qs.delta.tensor_structure
    unit = qs.algebra.unit_coeffs()
    eye = np.eye(d)
    D = qs.delta.matrix
    first = np.empty((d * d, d * d), dtype=complex)
    second = np.empty((d * d, d * d), dtype=complex)
    for i in range(d):
        left_factor = np.kron(eye[i], unit)
        for j in range(d):
            first[:, i * d + j] = ts.multiply(left_factor, D[:, j])
            second[:, i * d + j] = ts.multiply(D[:, i], np.kron(unit, eye[j]))
    return first, second


@dataclass(frozen=True)
class CancellationReport:
    proper_left: bool
    proper_right: bool
    weak: bool
    rank_left: int
    rank_right: int
    probe_left: bool
    probe_right: bool
    witness: Optional[Functional]
    witness_side: Optional[str]
    seed: int
    probes: int

    def as_dict(self) -> dict:
        return {
            "proper_left": self.proper_left,
            "proper_right": self.proper_right,
            "weak": self.weak,
            "rank_left": self.rank_left,
            "rank_right": self.rank_right,
            "probe_left": self.probe_left,
            "probe_right": self.probe_right,
            "witness_side": self.witness_side,
            "seed": self.seed,
            "probes": self.probes,
        }


def random_functional(algebra: BlockStructure, rng: np.random.Generator) -> Functional:
    """Complex-Gaussian density entries, Hermitized."""
    dens = []
    for n in algebra.blocks:
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        dens.append((g + g.conj().T) / 2)
    return Functional(algebra, tuple(dens))


def _diagonal_functionals(algebra: BlockStructure) -> list[Functional]:
    out = []
    for b, n in enumerate(algebra.blocks):
        for i in range(n):
            dens = [np.zeros((m, m), dtype=complex) for m in algebra.blocks]
            dens[b][i, i] = 1.0
            out.append(Functional(algebra, tuple(dens)))
    return out


def cancellation_check(
    qs: QuantumSemigroup, tol: float = DEFAULT_TOL, seed: int = 42, probes: int = 20
) -> CancellationReport:
    """Proper cancellation by span rank, plus a randomized weak-cancellation probe.

    Naming follows the classical canonical maps: "right" cancellation is
    density of {(a (x) 1) Delta(b)} (the map (x, y) -> (x, xy) on a classical
    semigroup), "left" cancellation is density of {Delta(a) (1 (x) b)} (the
    map (x, y) -> (xy, y)).  In finite dimension weak and proper cancellation
    coincide, so ``weak`` is the conjunction of the two rank tests; the probes
    (diagonal pure functionals, then ``probes`` random ones) only search for
    a falsifying functional.
    """
    d = qs.dim
    first, second = translate_spans(qs)
    rank_right = matrix_rank(first, tol)
    rank_left = matrix_rank(second, tol)
    proper_right = rank_right == d * d
    proper_left = rank_left == d * d

    rng = np.random.default_rng(seed)
    probe_left = probe_right = True
    witness, witness_side = None, None
    F = first.reshape(d, d, d * d)  # F[i, j, col]
    S = second.reshape(d, d, d * d)
    candidates = _diagonal_functionals(qs.algebra)
    candidates += [random_functional(qs.algebra, rng) for _ in range(probes)]
    for mu in candidates:
        w = mu.covector
        # b * (mu . a) = (mu (x) id)((a (x) 1) Delta(b))
        right_span = np.einsum("i,ijk->jk", w, F)
        # (b . mu) * a = (id (x) mu)(Delta(a) (1 (x) b))
        left_span = np.einsum("j,ijk->ik", w, S)
        ok_r = matrix_rank(right_span, tol) == d
        ok_l = matrix_rank(left_span, tol) == d
        if not ok_r and probe_right:
            probe_right = False
            if witness is None:
                witness, witness_side = mu, "right"
        if not ok_l and probe_left:
            probe_left = False
            if witness is None:
                witness, witness_side = mu, "left"
    return CancellationReport(
        proper_left=proper_left,
        proper_right=proper_right,
        weak=proper_left and proper_right,
        rank_left=rank_left,
        rank_right=rank_right,
        probe_left=probe_left,
        probe_right=probe_right,
        witness=witness,
        witness_side=witness_side,
        seed=seed,
        probes=probes,
    )
