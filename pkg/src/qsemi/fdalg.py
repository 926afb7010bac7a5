"""Arithmetic in finite-dimensional C*-algebras A = M_{n_1} + ... + M_{n_k}.

Elements are coefficient vectors over the matrix-unit basis: blocks in the
declared order, row-major inside each block.  Functionals are stored as
density blocks, so that phi(a) = sum_b tr(rho_b a_b).

Every algebra here is realised inside a full matrix algebra M_N (block
diagonal embedding), and every matrix unit is a single entry of that
embedding.  The tensor product A (x) B is realised inside M_{N_A N_B} with
E_i (x) E_j at product index i * dim(B) + j.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np
from scipy import sparse

DEFAULT_TOL = 1e-9


class StructureMismatch(ValueError):
    pass


class NotAStateError(ValueError):
    pass


class _MatrixAlgebra:
    """Common embedding machinery: each basis element is one matrix entry."""

    rows: np.ndarray
    cols: np.ndarray
    dim: int
    size: int

    def embed(self, coeffs: np.ndarray) -> np.ndarray:
        m = np.zeros((self.size, self.size), dtype=complex)
        m[self.rows, self.cols] = coeffs
        return m

    def extract(self, mat: np.ndarray) -> np.ndarray:
        return np.asarray(mat, dtype=complex)[self.rows, self.cols]

    def multiply(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Coefficients of the product of two coefficient vectors."""
        if self.size <= 64:
            return self.extract(self.embed(a) @ self.embed(b))
        shape = (self.size, self.size)
        x = sparse.csr_matrix((a, (self.rows, self.cols)), shape=shape)
        y = sparse.csr_matrix((b, (self.rows, self.cols)), shape=shape)
        return np.asarray((x @ y)[self.rows, self.cols]).ravel().astype(complex)

    def unit_coeffs(self) -> np.ndarray:
        return (self.rows == self.cols).astype(complex)

    @cached_property
    def star_perm(self) -> np.ndarray:
        """Permutation k -> index of E_k^*."""
        lookup = {(int(r), int(c)): k for k, (r, c) in enumerate(zip(self.rows, self.cols))}
        return np.array([lookup[(int(c), int(r))] for r, c in zip(self.rows, self.cols)])

    @cached_property
    def structure_constants(self) -> np.ndarray:
        """Dense (dim, dim, dim) tensor m with E_i E_j = sum_c m[i, j, c] E_c."""
        d = self.dim
        pos = {(int(r), int(c)): k for k, (r, c) in enumerate(zip(self.rows, self.cols))}
        m = np.zeros((d, d, d))
        for i in range(d):
            for j in range(d):
                if self.cols[i] == self.rows[j]:
                    m[i, j, pos[(int(self.rows[i]), int(self.cols[j]))]] = 1.0
        return m


class BlockStructure(_MatrixAlgebra):
    """The algebra M_{n_1} + ... + M_{n_k} with its canonical matrix units."""

    def __init__(self, blocks: Sequence[int]):
        blocks = tuple(int(n) for n in blocks)
        if not blocks or any(n < 1 for n in blocks):
            raise ValueError(f"block sizes must be positive, got {blocks}")
        self.blocks = blocks
        self.dim = sum(n * n for n in blocks)
        self.size = sum(blocks)
        rows, cols, starts, offsets = [], [], [], []
        off = 0
        for n in blocks:
            starts.append(len(rows))
            offsets.append(off)
            for i in range(n):
                for j in range(n):
                    rows.append(off + i)
                    cols.append(off + j)
            off += n
        self.rows = np.array(rows)
        self.cols = np.array(cols)
        self.starts = tuple(starts)
        self.offsets = tuple(offsets)

    def __eq__(self, other):
        return isinstance(other, BlockStructure) and other.blocks == self.blocks

    def __hash__(self):
        return hash(("BlockStructure", self.blocks))

    def __repr__(self):
        return f"BlockStructure({list(self.blocks)})"

    def index(self, b: int, i: int, j: int) -> int:
        n = self.blocks[b]
        return self.starts[b] + i * n + j

    def to_blocks(self, coeffs: np.ndarray) -> list[np.ndarray]:
        return [
            np.asarray(coeffs[s : s + n * n], dtype=complex).reshape(n, n)
            for s, n in zip(self.starts, self.blocks)
        ]

    def from_blocks(self, blocks: Sequence[np.ndarray]) -> np.ndarray:
        if len(blocks) != len(self.blocks):
            raise StructureMismatch("wrong number of blocks")
        out = []
        for m, n in zip(blocks, self.blocks):
            m = np.asarray(m, dtype=complex)
            if m.shape != (n, n):
                raise StructureMismatch(f"block of shape {m.shape}, expected {(n, n)}")
            out.append(m.ravel())
        return np.concatenate(out)


class TensorStructure(_MatrixAlgebra):
    """Minimal (= algebraic) tensor product of two finite-dimensional algebras."""

    def __init__(self, left: _MatrixAlgebra, right: _MatrixAlgebra):
        self.left, self.right = left, right
        self.dim = left.dim * right.dim
        self.size = left.size * right.size
        self.rows = (left.rows[:, None] * right.size + right.rows[None, :]).ravel()
        self.cols = (left.cols[:, None] * right.size + right.cols[None, :]).ravel()

    @property
    def blocks(self) -> tuple[int, ...]:
        return tuple(a * b for a in self.left.blocks for b in self.right.blocks)

    def __eq__(self, other):
        return (
            isinstance(other, TensorStructure)
            and other.left == self.left
            and other.right == self.right
        )

    def __hash__(self):
        return hash(("TensorStructure", self.left, self.right))

    def __repr__(self):
        return f"TensorStructure({self.left!r}, {self.right!r})"

    def split_index(self, r: int) -> tuple[int, int]:
        return divmod(r, self.right.dim)


Structure = Union[BlockStructure, TensorStructure]


@dataclass(frozen=True, eq=False)
class Element:
    structure: Structure
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.structure.dim,):
            raise StructureMismatch(
                f"coefficient length {c.shape} does not match dimension {self.structure.dim}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def unit(cls, structure: Structure) -> "Element":
        return cls(structure, structure.unit_coeffs())

    @classmethod
    def basis(cls, structure: Structure, k: int) -> "Element":
        c = np.zeros(structure.dim, dtype=complex)
        c[k] = 1.0
        return cls(structure, c)

    @classmethod
    def from_matrix(cls, structure: Structure, mat: np.ndarray) -> "Element":
        return cls(structure, structure.extract(mat))

    @property
    def matrix(self) -> np.ndarray:
        return self.structure.embed(self.coeffs)

    def blocks(self) -> list[np.ndarray]:
        return self.structure.to_blocks(self.coeffs)

    def _check(self, other: "Element"):
        if other.structure != self.structure:
            raise StructureMismatch(f"{self.structure!r} vs {other.structure!r}")

    def __add__(self, other: "Element") -> "Element":
        self._check(other)
        return Element(self.structure, self.coeffs + other.coeffs)

    def __sub__(self, other: "Element") -> "Element":
        self._check(other)
        return Element(self.structure, self.coeffs - other.coeffs)

    def __neg__(self) -> "Element":
        return Element(self.structure, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, Element):
            return mul(self, other)
        return Element(self.structure, self.coeffs * other)

    def __rmul__(self, scalar):
        return Element(self.structure, scalar * self.coeffs)

    def star(self) -> "Element":
        return star(self)

    def norm(self) -> float:
        """C*-norm (largest singular value of the embedding)."""
        return float(np.linalg.norm(self.matrix, 2))

    def hs_norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def close_to(self, other: "Element", tol: float = DEFAULT_TOL) -> bool:
        self._check(other)
        return float(np.linalg.norm(self.coeffs - other.coeffs)) <= tol

    def __repr__(self):
        return f"Element({self.structure!r}, {np.round(self.coeffs, 6).tolist()})"


def mul(x: Element, y: Element) -> Element:
    x._check(y)
    return Element(x.structure, x.structure.multiply(x.coeffs, y.coeffs))


def star(x: Element) -> Element:
    s = x.structure
    return Element(s, np.conj(x.coeffs[s.star_perm]))


def tensor(x, y):
    """x (x) y for two Elements (product basis index i*dim + j) or two linear maps."""
    if isinstance(x, Element) and isinstance(y, Element):
        return Element(TensorStructure(x.structure, y.structure), np.kron(x.coeffs, y.coeffs))
    if isinstance(x, Element) or isinstance(y, Element):
        raise TypeError("tensor expects two Elements or two linear maps")
    return np.kron(np.asarray(x), np.asarray(y))


@dataclass(frozen=True)
class PositivityResult:
    positive: bool
    min_eigenvalue: float
    hermitian: bool = True


def positivity_check(x: Element, tol: float = DEFAULT_TOL) -> PositivityResult:
    m = x.matrix
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    herm = float(np.abs(m - m.conj().T).max(initial=0.0)) <= tol * scale
    lam = float(np.linalg.eigvalsh((m + m.conj().T) / 2).min())
    return PositivityResult(positive=herm and lam >= -tol, min_eigenvalue=lam, hermitian=herm)


@dataclass(frozen=True, eq=False)
class Functional:
    """phi(a) = sum_b tr(rho_b a_b).  Densities need not be Hermitian in general."""

    structure: BlockStructure
    density: tuple

    def __post_init__(self):
        blocks = tuple(np.array(r, dtype=complex) for r in self.density)
        if len(blocks) != len(self.structure.blocks):
            raise StructureMismatch("wrong number of density blocks")
        for r, n in zip(blocks, self.structure.blocks):
            if r.shape != (n, n):
                raise StructureMismatch(f"density block {r.shape}, expected {(n, n)}")
            r.setflags(write=False)
        object.__setattr__(self, "density", blocks)

    @classmethod
    def from_covector(cls, structure: BlockStructure, w: np.ndarray) -> "Functional":
        # covector entry phi(E_{b,ij}) equals rho_b[j, i]
        return cls(structure, tuple(b.T for b in structure.to_blocks(np.asarray(w))))

    @cached_property
    def covector(self) -> np.ndarray:
        return np.concatenate([r.T.ravel() for r in self.density])

    def __call__(self, x: Element) -> complex:
        return functional_apply(self, x)

    def _check(self, other: "Functional"):
        if other.structure != self.structure:
            raise StructureMismatch(f"{self.structure!r} vs {other.structure!r}")

    def __add__(self, other: "Functional") -> "Functional":
        self._check(other)
        return Functional(self.structure, tuple(a + b for a, b in zip(self.density, other.density)))

    def __sub__(self, other: "Functional") -> "Functional":
        self._check(other)
        return Functional(self.structure, tuple(a - b for a, b in zip(self.density, other.density)))

    def __mul__(self, scalar) -> "Functional":
        return Functional(self.structure, tuple(scalar * r for r in self.density))

    __rmul__ = __mul__

    def norm(self) -> float:
        """Frobenius norm of the density blocks."""
        return float(np.sqrt(sum(np.sum(np.abs(r) ** 2) for r in self.density)))

    def distance(self, other: "Functional") -> float:
        return (self - other).norm()

    def adjoint(self) -> "Functional":
        """phi^*(a) = conj(phi(a^*)); density rho -> rho^*."""
        return Functional(self.structure, tuple(r.conj().T for r in self.density))

    def is_hermitian(self, tol: float = DEFAULT_TOL) -> bool:
        return all(np.abs(r - r.conj().T).max(initial=0.0) <= tol for r in self.density)

    def trace(self) -> complex:
        return complex(sum(np.trace(r) for r in self.density))

    def min_eigenvalue(self) -> float:
        return float(min(np.linalg.eigvalsh((r + r.conj().T) / 2).min() for r in self.density))

    def is_state(self, tol: float = DEFAULT_TOL) -> bool:
        return (
            self.is_hermitian(tol)
            and self.min_eigenvalue() >= -tol
            and abs(self.trace() - 1) <= tol
        )

    def check_state(self, tol: float = DEFAULT_TOL) -> "Functional":
        if not self.is_hermitian(tol):
            raise NotAStateError("density is not Hermitian")
        if self.min_eigenvalue() < -tol:
            raise NotAStateError(f"density has eigenvalue {self.min_eigenvalue():.3e} < 0")
        if abs(self.trace() - 1) > tol:
            raise NotAStateError(f"functional has phi(1) = {self.trace():.6g}")
        return self

    def __repr__(self):
        return f"Functional({self.structure!r}, {[np.round(r, 6).tolist() for r in self.density]})"


def functional_apply(phi: Functional, x: Element) -> complex:
    if x.structure != phi.structure:
        raise StructureMismatch(f"{phi.structure!r} vs {x.structure!r}")
    return complex(phi.covector @ x.coeffs)


def state_from_density(structure: BlockStructure, density: Sequence) -> Functional:
    return Functional(structure, tuple(np.asarray(r, dtype=complex) for r in density))


def nearest_state(phi: Functional) -> Functional:
    """Hermitize, clamp negative eigenvalues to zero and renormalise the trace."""
    out = []
    for r in phi.density:
        lam, v = np.linalg.eigh((r + r.conj().T) / 2)
        out.append((v * np.clip(lam, 0.0, None)) @ v.conj().T)
    tr = sum(np.trace(r).real for r in out)
    if tr <= 0:
        raise NotAStateError("no positive part to renormalise")
    return Functional(phi.structure, tuple(r / tr for r in out))


@dataclass(frozen=True, eq=False)
class Projection:
    """A projection p, kept together with orthonormal frames V_b, p_b = V_b V_b^*."""

    element: Element
    frames: tuple = field(default=())
    compact: bool = True  # every projection is compact in finite dimension

    @classmethod
    def from_frames(cls, structure: BlockStructure, frames: Sequence[np.ndarray]) -> "Projection":
        frames = tuple(np.asarray(v, dtype=complex).reshape(n, -1) for v, n in zip(frames, structure.blocks))
        p = Element(structure, structure.from_blocks([v @ v.conj().T for v in frames]))
        return cls(p, frames)

    @classmethod
    def from_element(cls, x: Element, tol: float = DEFAULT_TOL) -> "Projection":
        if not isinstance(x.structure, BlockStructure):
            raise TypeError("frames are only computed for block algebras")
        if (x * x - x).norm() > tol or (x.star() - x).norm() > tol:
            raise ValueError("element is not a projection")
        frames = []
        for blk in x.blocks():
            lam, v = np.linalg.eigh((blk + blk.conj().T) / 2)
            frames.append(v[:, lam > 0.5])
        return cls(x, tuple(frames))

    @property
    def structure(self) -> BlockStructure:
        return self.element.structure

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(v.shape[1] for v in self.frames)

    @property
    def rank(self) -> int:
        return sum(self.ranks)

    def complement(self) -> "Projection":
        frames = []
        for v in self.frames:
            n = v.shape[0]
            lam, u = np.linalg.eigh(np.eye(n) - v @ v.conj().T)
            frames.append(u[:, lam > 0.5])
        return Projection.from_frames(self.structure, frames)

    def is_projection(self, tol: float = DEFAULT_TOL) -> bool:
        p = self.element
        return (p * p - p).norm() <= tol and (p.star() - p).norm() <= tol


def support_projection(phi: Functional, tol: float = DEFAULT_TOL) -> Projection:
    """Smallest projection p with phi(p) = 1: blockwise range projection of rho_b."""
    phi.check_state(max(tol, 1e-8))
    eigs = [np.linalg.eigh((r + r.conj().T) / 2) for r in phi.density]
    scale = max(float(np.abs(lam).max()) for lam, _ in eigs)
    frames = []
    for lam, v in eigs:
        q, _ = np.linalg.qr(v[:, lam > tol * scale])
        frames.append(q)
    return Projection.from_frames(phi.structure, frames)


@dataclass(frozen=True, eq=False)
class OperatorSystemBasis:
    """Hilbert-Schmidt orthonormal basis of the corner pAp, with unit p."""

    parent: BlockStructure
    unit: Projection
    basis: tuple

    @cached_property
    def matrix(self) -> np.ndarray:
        """(d, m) array whose columns are basis coefficient vectors (orthonormal)."""
        return np.stack([v.coeffs for v in self.basis], axis=1)

    @property
    def dims(self) -> tuple[int, int]:
        return (self.parent.dim, len(self.basis))

    @property
    def m(self) -> int:
        return len(self.basis)

    def coords(self, x: Element) -> np.ndarray:
        return self.matrix.conj().T @ x.coeffs

    def lift(self, c: np.ndarray) -> Element:
        return Element(self.parent, self.matrix @ c)

    def span_residual(self, x: Element) -> float:
        return float(np.linalg.norm(x.coeffs - self.matrix @ self.coords(x)))

    def unit_coords(self) -> np.ndarray:
        return self.coords(self.unit.element)

    def matrix_units(self) -> list[list[tuple[int, int, int]]]:
        """Per block of the corner, (k, l, basis index) for the units V e_kl V^*."""
        out, idx = [], 0
        for r in self.unit.ranks:
            out.append([(k, l, idx + k * r + l) for k in range(r) for l in range(r)])
            idx += r * r
        return out


def compress_basis(p: Projection) -> OperatorSystemBasis:
    """Orthonormal basis {V_b e_kl V_b^*} of pAp; m = sum_b rank(p_b)^2."""
    if p.rank == 0:
        raise ValueError("cannot compress to the zero projection")
    s = p.structure
    basis = []
    for b, v in enumerate(p.frames):
        r = v.shape[1]
        for k in range(r):
            for l in range(r):
                blocks = [np.zeros((n, n), dtype=complex) for n in s.blocks]
                blocks[b] = np.outer(v[:, k], v[:, l].conj())
                basis.append(Element(s, s.from_blocks(blocks)))
    return OperatorSystemBasis(s, p, tuple(basis))


def span_rank(elements: Sequence[Element], tol: float = DEFAULT_TOL) -> int:
    if len(elements) == 0:
        return 0
    s = elements[0].structure
    if any(e.structure != s for e in elements):
        raise StructureMismatch("span_rank needs a common structure")
    return matrix_rank(np.stack([e.coeffs for e in elements], axis=1), tol)


def matrix_rank(mat: np.ndarray, tol: float = DEFAULT_TOL) -> int:
    if mat.size == 0:
        return 0
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def null_space(mat: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of ker(mat), relative singular-value cutoff."""
    mat = np.atleast_2d(mat)
    n = mat.shape[1]
    if mat.shape[0] == 0:
        return np.eye(n, dtype=complex)
    _, sv, vh = np.linalg.svd(mat)
    cut = tol * (sv[0] if sv.size and sv[0] > 0 else 1.0)
    rank = int(np.sum(sv > cut))
    return vh[rank:].conj().T


def choi_blocks(
    linear_map: np.ndarray, source: BlockStructure, target: _MatrixAlgebra
) -> list[np.ndarray]:
    """Choi matrices sum_ij e_ij (x) Phi(E_{b,ij}) of a map given on coefficients.

    ``linear_map`` has shape (target.dim, source.dim).  Phi is completely
    positive iff every returned matrix is positive semidefinite.
    """
    out = []
    for b, n in enumerate(source.blocks):
        big = np.zeros((n * target.size, n * target.size), dtype=complex)
        for i in range(n):
            for j in range(n):
                img = target.embed(linear_map[:, source.index(b, i, j)])
                big[i * target.size : (i + 1) * target.size, j * target.size : (j + 1) * target.size] = img
        out.append(big)
    return out


def cp_margin(linear_map: np.ndarray, source: BlockStructure, target: _MatrixAlgebra) -> float:
    """Smallest Choi eigenvalue over all blocks (>= 0 iff completely positive)."""
    return float(
        min(np.linalg.eigvalsh((c + c.conj().T) / 2).min() for c in choi_blocks(linear_map, source, target))
    )


def left_multiplication_matrix(x: Element) -> np.ndarray:
    """Matrix of a -> x a on coefficients."""
    m = x.structure.structure_constants
    return np.einsum("i,ijc->cj", x.coeffs, m)


def right_multiplication_matrix(x: Element) -> np.ndarray:
    """Matrix of a -> a x on coefficients."""
    m = x.structure.structure_constants
    return np.einsum("j,ijc->ci", x.coeffs, m)


def compression_matrix(p: Element) -> np.ndarray:
    """Matrix of a -> p a p on coefficients."""
    return left_multiplication_matrix(p) @ right_multiplication_matrix(p)


def random_element(structure: Structure, rng: np.random.Generator) -> Element:
    c = rng.standard_normal(structure.dim) + 1j * rng.standard_normal(structure.dim)
    return Element(structure, c)


def random_state(
    structure: BlockStructure, rng: np.random.Generator, kind: str = "mixed"
) -> Functional:
    """Random state: 'mixed' (Wishart), 'pure' (one block, rank one) or 'few' (2-3 pure)."""
    blocks = structure.blocks
    weights = np.array([n * n for n in blocks], dtype=float)
    weights /= weights.sum()

    def pure():
        b = rng.choice(len(blocks), p=weights)
        v = rng.standard_normal(blocks[b]) + 1j * rng.standard_normal(blocks[b])
        v /= np.linalg.norm(v)
        dens = [np.zeros((n, n), dtype=complex) for n in blocks]
        dens[b] = np.outer(v, v.conj())
        return dens

    if kind == "pure":
        dens = pure()
    elif kind == "few":
        k = int(rng.integers(2, 4))
        parts = [pure() for _ in range(k)]
        lam = rng.dirichlet(np.ones(k))
        dens = [sum(l * p[b] for l, p in zip(lam, parts)) for b in range(len(blocks))]
    elif kind == "mixed":
        dens = []
        for n in blocks:
            g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            dens.append(g @ g.conj().T)
        tr = sum(np.trace(r).real for r in dens)
        dens = [r / tr for r in dens]
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return Functional(structure, tuple(dens))

