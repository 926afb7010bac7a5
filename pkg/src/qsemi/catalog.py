"""Testbed quantum semigroups and exact classical oracles.

Function algebras C(S) of finite semigroups, duals C[G] of small groups
realised through their irreducible representations, and the eight
dimensional Kac-Paljutkin quantum group.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .fdalg import BlockStructure, Functional
from .qsg import QuantumSemigroup


class InvalidTable(ValueError):
    pass


class InvalidGroupData(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MultiplicationTable:
    n: int
    table: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        t = np.array(self.table, dtype=int)
        if t.shape != (self.n, self.n):
            raise InvalidTable(f"table of shape {t.shape}, expected {(self.n, self.n)}")
        if t.size and (t.min() < 0 or t.max() >= self.n):
            raise InvalidTable("entries must lie in [0, n)")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(self.n)))

    def __call__(self, x: int, y: int) -> int:
        return int(self.table[x, y])

    def is_associative(self) -> bool:
        t = self.table
        # t[t][x, y, z] = t[t[x, y], z]
        return bool(np.array_equal(t[t], _right_assoc(t)))

    def identity(self) -> Optional[int]:
        idx = np.arange(self.n)
        for e in range(self.n):
            if np.array_equal(self.table[e], idx) and np.array_equal(self.table[:, e], idx):
                return e
        return None

    def is_group(self) -> bool:
        e = self.identity()
        if e is None or not self.is_associative():
            return False
        return all((self.table[x] == e).any() for x in range(self.n))

    def inverse(self, x: int) -> int:
        e = self.identity()
        return int(np.flatnonzero(self.table[x] == e)[0])

    def to_json(self) -> dict:
        return {"n": self.n, "table": self.table.tolist(), "labels": list(self.labels)}

    @classmethod
    def from_json(cls, data: dict) -> "MultiplicationTable":
        try:
            return cls(int(data["n"]), np.array(data["table"], dtype=int), tuple(data.get("labels", ())))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidTable(f"bad table JSON: {exc}") from exc


def _right_assoc(t: np.ndarray) -> np.ndarray:
    n = t.shape[0]
    out = np.empty((n, n, n), dtype=int)
    for x in range(n):
        out[x] = t[x][t]  # out[x, y, z] = t[x, t[y, z]]
    return out


@dataclass(frozen=True, eq=False)
class GroupData:
    table: MultiplicationTable
    irreps: tuple  # each an array of shape (|G|, n, n)

    def __post_init__(self):
        object.__setattr__(self, "irreps", tuple(np.asarray(r, dtype=complex) for r in self.irreps))

    @property
    def order(self) -> int:
        return self.table.n

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(r.shape[1] for r in self.irreps)

    def validate(self, tol: float = 1e-10) -> None:
        t = self.table
        if not t.is_group():
            raise InvalidGroupData("table is not a group")
        if sum(n * n for n in self.dims) != t.n:
            raise InvalidGroupData(f"sum of squared irrep dimensions {self.dims} != |G| = {t.n}")
        for r in self.irreps:
            if r.shape[0] != t.n or r.shape[1] != r.shape[2]:
                raise InvalidGroupData(f"irrep array of shape {r.shape}")
            n = r.shape[1]
            for g in range(t.n):
                if np.abs(r[g] @ r[g].conj().T - np.eye(n)).max() > tol:
                    raise InvalidGroupData("irrep is not unitary")
                for h in range(t.n):
                    if np.abs(r[g] @ r[h] - r[t(g, h)]).max() > tol:
                        raise InvalidGroupData("irrep is not a homomorphism")
        # irreducibility and inequivalence via character orthogonality
        chars = np.array([[np.trace(r[g]) for g in range(t.n)] for r in self.irreps])
        gram = chars.conj() @ chars.T / t.n
        if np.abs(gram - np.eye(len(self.irreps))).max() > 1e-8:
            raise InvalidGroupData("irreps are reducible or equivalent")

    def to_json(self) -> dict:
        return {
            "table": self.table.to_json(),
            "irreps": [
                [[[[float(z.real), float(z.imag)] for z in row] for row in mat] for mat in r]
                for r in self.irreps
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "GroupData":
        try:
            table = MultiplicationTable.from_json(data["table"])
            irreps = []
            for r in data["irreps"]:
                a = np.array(r, dtype=float)
                irreps.append(a[..., 0] + 1j * a[..., 1])
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise InvalidGroupData(f"bad group JSON: {exc}") from exc
        return cls(table, tuple(irreps))


# --- group construction by closure ---------------------------------------


def _closure(gens: Sequence[np.ndarray], key: Callable[[np.ndarray], tuple]):
    """Elements of the group generated by ``gens`` in BFS order, with words."""
    n = gens[0].shape[0]
    ident = np.eye(n, dtype=gens[0].dtype)
    elems, words = [ident], [()]
    index = {key(ident): 0}
    frontier = [0]
    while frontier:
        nxt = []
        for i in frontier:
            for k, g in enumerate(gens):
                m = elems[i] @ g
                kk = key(m)
                if kk not in index:
                    index[kk] = len(elems)
                    elems.append(m)
                    words.append(words[i] + (k,))
                    nxt.append(index[kk])
        frontier = nxt
    table = np.empty((len(elems), len(elems)), dtype=int)
    for i, a in enumerate(elems):
        for j, b in enumerate(elems):
            table[i, j] = index[key(a @ b)]
    return elems, words, table


def _mkey(m: np.ndarray) -> tuple:
    m = np.asarray(m, dtype=complex).ravel()
    return tuple(np.round(m.real * 1e6).astype(np.int64)) + tuple(np.round(m.imag * 1e6).astype(np.int64))


def _perm_matrix(perm: Sequence[int]) -> np.ndarray:
    n = len(perm)
    m = np.zeros((n, n))
    for i, j in enumerate(perm):
        m[j, i] = 1.0
    return m


def _cycle_label(m: np.ndarray) -> str:
    perm = [int(np.argmax(m[:, i])) for i in range(m.shape[0])]
    seen, parts = set(), []
    for s in range(len(perm)):
        if s in seen or perm[s] == s:
            continue
        cyc, x = [], s
        while x not in seen:
            seen.add(x)
            cyc.append(str(x + 1))
            x = perm[x]
        parts.append("(" + "".join(cyc) + ")")
    return "".join(parts) or "e"


def _irrep_from_words(words, gen_images: Sequence[np.ndarray]) -> np.ndarray:
    n = gen_images[0].shape[0]
    out = []
    for w in words:
        m = np.eye(n, dtype=complex)
        for k in w:
            m = m @ gen_images[k]
        out.append(m)
    return np.array(out)


def _group(gens, gen_irreps, labeller, key=_mkey) -> GroupData:
    elems, words, table = _closure(gens, key)
    labels = tuple(labeller(e, w) for e, w in zip(elems, words))
    irreps = tuple(_irrep_from_words(words, imgs) for imgs in gen_irreps)
    g = GroupData(MultiplicationTable(len(elems), table, labels), irreps)
    g.validate()
    return g


def _rot(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


@lru_cache(maxsize=None)
def cyclic_group(n: int) -> GroupData:
    shift = _perm_matrix([(i + 1) % n for i in range(n)])
    chars = [[np.array([[np.exp(2j * np.pi * k / n)]])] for k in range(n)]
    return _group([shift], chars, lambda e, w: str(len(w)))


@lru_cache(maxsize=None)
def klein_four() -> GroupData:
    a = _perm_matrix([1, 0, 3, 2])
    b = _perm_matrix([2, 3, 0, 1])
    chars = [[np.array([[sa]]), np.array([[sb]])] for sa in (1, -1) for sb in (1, -1)]
    names = {(): "e", (0,): "a", (1,): "b", (0, 1): "ab"}
    return _group([a, b], chars, lambda e, w: names.get(w, _cycle_label(e)))


@lru_cache(maxsize=None)
def symmetric_group_3() -> GroupData:
    t = _perm_matrix([1, 0, 2])  # (12)
    r = _perm_matrix([1, 2, 0])  # (123)
    refl = np.array([[1, 0], [0, -1]], dtype=complex)
    irreps = [
        [np.eye(1), np.eye(1)],
        [-np.eye(1), np.eye(1)],
        [refl, _rot(2 * np.pi / 3)],
    ]
    return _group([t, r], irreps, lambda e, w: _cycle_label(e))


@lru_cache(maxsize=None)
def dihedral_group_4() -> GroupData:
    r = _perm_matrix([1, 2, 3, 0])
    s = _perm_matrix([0, 3, 2, 1])
    refl = np.array([[1, 0], [0, -1]], dtype=complex)
    irreps = [[np.array([[sr]]), np.array([[ss]])] for sr in (1, -1) for ss in (1, -1)]
    irreps.append([_rot(np.pi / 2), refl])
    return _group([r, s], irreps, lambda e, w: _cycle_label(e))


@lru_cache(maxsize=None)
def quaternion_group() -> GroupData:
    qi = np.array([[1j, 0], [0, -1j]])
    qj = np.array([[0, 1], [-1, 0]], dtype=complex)
    names = {}
    for sign, s in ((1, ""), (-1, "-")):
        names[_mkey(sign * np.eye(2, dtype=complex))] = s + "1"
        names[_mkey(sign * qi)] = s + "i"
        names[_mkey(sign * qj)] = s + "j"
        names[_mkey(sign * qi @ qj)] = s + "k"
    irreps = [[np.array([[si]]), np.array([[sj]])] for si in (1, -1) for sj in (1, -1)]
    irreps.append([qi, qj])
    return _group([qi, qj], irreps, lambda e, w: names[_mkey(e)])


def direct_product_table(a: MultiplicationTable, b: MultiplicationTable) -> MultiplicationTable:
    n = a.n * b.n
    t = np.empty((n, n), dtype=int)
    for x1, x2, y1, y2 in itertools.product(range(a.n), range(b.n), range(a.n), range(b.n)):
        t[x1 * b.n + x2, y1 * b.n + y2] = a(x1, y1) * b.n + b(x2, y2)
    labels = tuple(f"({p},{q})" for p in a.labels for q in b.labels)
    return MultiplicationTable(n, t, labels)


# --- semigroup tables -------------------------------------------------------


def left_zero_table(n: int = 2) -> MultiplicationTable:
    """x y = x."""
    return MultiplicationTable(n, np.repeat(np.arange(n)[:, None], n, axis=1))


def right_zero_table(n: int = 2) -> MultiplicationTable:
    """x y = y."""
    return MultiplicationTable(n, np.repeat(np.arange(n)[None, :], n, axis=0))


def null_table(n: int = 3) -> MultiplicationTable:
    """Every product equals the zero element 0."""
    return MultiplicationTable(n, np.zeros((n, n), dtype=int))


def multiplicative_01_table() -> MultiplicationTable:
    """({0, 1}, *): a monoid with a zero."""
    return MultiplicationTable(2, np.array([[0, 0], [0, 1]]), ("0", "1"))


# --- subgroups and classical oracles -----------------------------------------


def generated_subgroup(t: MultiplicationTable, elements) -> frozenset:
    e = t.identity()
    current = {e, *elements}
    while True:
        new = {t(x, y) for x in current for y in current} | current
        if new == current:
            return frozenset(current)
        current = new


def subgroup_enumeration(g) -> list[frozenset]:
    """All subgroups of a finite group, by closing up one element at a time."""
    t = g.table if isinstance(g, GroupData) else g
    if not t.is_group():
        raise InvalidTable("subgroup enumeration needs a group table")
    trivial = frozenset({t.identity()})
    found = {trivial}
    frontier = [trivial]
    while frontier:
        nxt = []
        for h in frontier:
            for x in range(t.n):
                if x in h:
                    continue
                k = generated_subgroup(t, h | {x})
                if k not in found:
                    found.add(k)
                    nxt.append(k)
        frontier = nxt
    return sorted(found, key=lambda h: (len(h), sorted(h)))


def classical_cancellation(t: MultiplicationTable) -> dict:
    """Injectivity of the canonical maps of a finite semigroup.

    ``right`` refers to (x, y) -> (x, xy) and ``left`` to (x, y) -> (xy, y),
    matching the naming of :func:`qsemi.qsg.cancellation_check`.
    """
    if not t.is_associative():
        raise InvalidTable("table is not associative")
    pairs = list(itertools.product(range(t.n), repeat=2))
    right = len({(x, t(x, y)) for x, y in pairs}) == len(pairs)
    left = len({(t(x, y), y) for x, y in pairs}) == len(pairs)
    return {"left": left, "right": right}


def uniform_measure(n: int, subset) -> np.ndarray:
    v = np.zeros(n)
    v[sorted(subset)] = 1.0 / len(subset)
    return v


def classical_idempotent_oracle(t: MultiplicationTable, config=None) -> list[np.ndarray]:
    """Idempotent probability measures on a finite semigroup.

    For a group the uniform measures on subgroups, which is exact and
    complete.  Otherwise the numerical multi-start search on C(S); that list
    is not claimed to be complete (a semigroup may even carry a continuum of
    idempotent measures).
    """
    if t.is_group():
        return [uniform_measure(t.n, h) for h in subgroup_enumeration(t)]
    from .idem import SolverConfig, find_idempotents

    qs = build_function_algebra(t)
    found = find_idempotents(qs, config or SolverConfig())
    return [np.real(np.concatenate([r.ravel() for r in c.state.density])) for c in found]


def dual_idempotent_oracle(g: GroupData, brute_force: Optional[bool] = None) -> list[tuple[frozenset, np.ndarray]]:
    """{0,1}-valued positive-definite functions on G, i.e. indicators of subgroups.

    With ``brute_force`` every subset containing the identity is tested for
    positive-definiteness of the matrix [f(x^-1 y)]; otherwise subgroups are
    enumerated directly.  Returns (subset, values-on-G) pairs.
    """
    t = g.table
    n = t.n
    if brute_force is None:
        brute_force = n <= 10
    e = t.identity()
    inv = [t.inverse(x) for x in range(n)]
    out = []
    if brute_force:
        others = [x for x in range(n) if x != e]
        for bits in itertools.product((0, 1), repeat=len(others)):
            f = np.zeros(n)
            f[e] = 1.0
            f[[x for x, b in zip(others, bits) if b]] = 1.0
            gram = np.array([[f[t(inv[x], y)] for y in range(n)] for x in range(n)])
            # eigvalsh reads one triangle only, so test symmetry first
            if np.array_equal(gram, gram.T) and np.linalg.eigvalsh(gram).min() >= -1e-9:
                out.append((frozenset(np.flatnonzero(f).tolist()), f))
    else:
        for h in subgroup_enumeration(t):
            f = np.zeros(n)
            f[sorted(h)] = 1.0
            out.append((h, f))
    return sorted(out, key=lambda p: (len(p[0]), sorted(p[0])))


# --- builders -----------------------------------------------------------------


def build_function_algebra(t: MultiplicationTable, name: str = "C(S)", tol: float = 1e-12) -> QuantumSemigroup:
    """C(S) = C^n with Delta(e_z) = sum_{xy = z} e_x (x) e_y."""
    if not t.is_associative():
        raise InvalidTable("table is not associative")
    n = t.n
    delta = np.zeros((n * n, n))
    for x in range(n):
        for y in range(n):
            delta[x * n + y, t(x, y)] = 1.0
    algebra = BlockStructure([1] * n)
    def subgroup_oracle():
        return [
            (label_subset(t, h), Functional(algebra, tuple(np.array([[v]]) for v in uniform_measure(n, h))))
            for h in subgroup_enumeration(t)
        ]

    return QuantumSemigroup.build(name, algebra, delta, tol, subgroup_oracle if t.is_group() else None)


def label_subset(t: MultiplicationTable, subset) -> str:
    return "{" + ",".join(t.labels[i] for i in sorted(subset)) + "}"


def fourier_matrix(g: GroupData) -> np.ndarray:
    """Column g holds the block coefficients of lambda_g = (pi(g))_pi."""
    blocks = BlockStructure(g.dims)
    cols = []
    for x in range(g.order):
        cols.append(blocks.from_blocks([r[x] for r in g.irreps]))
    return np.array(cols).T


def build_group_dual(g: GroupData, name: str = "C[G]", tol: float = 1e-12) -> QuantumSemigroup:
    """C[G] = sum_pi M_{n_pi} with Delta(lambda_g) = lambda_g (x) lambda_g."""
    g.validate()
    algebra = BlockStructure(g.dims)
    L = fourier_matrix(g)
    L_inv = np.linalg.inv(L)
    K = np.stack([np.kron(L[:, x], L[:, x]) for x in range(g.order)], axis=1)
    delta = K @ L_inv
    delta.real[np.abs(delta.real) < 1e-15] = 0.0
    delta.imag[np.abs(delta.imag) < 1e-15] = 0.0

    def oracle():
        return [
            (label_subset(g.table, h), positive_definite_state(g, f, algebra, L_inv))
            for h, f in dual_idempotent_oracle(g)
        ]

    return QuantumSemigroup.build(name, algebra, delta, tol, oracle)


def positive_definite_state(g: GroupData, f: np.ndarray, algebra=None, L_inv=None) -> Functional:
    """The functional on C[G] with phi(lambda_g) = f(g)."""
    algebra = algebra or BlockStructure(g.dims)
    if L_inv is None:
        L_inv = np.linalg.inv(fourier_matrix(g))
    phi = Functional.from_covector(algebra, np.asarray(f, dtype=complex) @ L_inv)
    # symmetrise away rounding so the density is exactly Hermitian
    return Functional(algebra, tuple((r + r.conj().T) / 2 for r in phi.density))


def subgroup_state(g: GroupData, subset) -> Functional:
    f = np.zeros(g.order)
    f[sorted(subset)] = 1.0
    return positive_definite_state(g, f)


def kac_paljutkin_delta() -> np.ndarray:
    """Comultiplication of the Kac-Paljutkin algebra C+C+C+C+M_2.

    Basis order e1, e2, e3, e4, E11, E12, E21, E22 (one-dimensional blocks
    first, then the 2x2 block row-major).
    """
    e1, e2, e3, e4, E11, E12, E21, E22 = range(8)
    d = 8
    terms = {
        e1: [(e1, e1, 1), (e2, e2, 1), (e3, e3, 1), (e4, e4, 1),
             (E11, E11, .5), (E12, E12, .5), (E21, E21, .5), (E22, E22, .5)],
        e2: [(e1, e2, 1), (e2, e1, 1), (e3, e4, 1), (e4, e3, 1),
             (E11, E22, .5), (E22, E11, .5), (E21, E12, .5j), (E12, E21, -.5j)],
        e3: [(e1, e3, 1), (e3, e1, 1), (e2, e4, 1), (e4, e2, 1),
             (E11, E22, .5), (E22, E11, .5), (E21, E12, -.5j), (E12, E21, .5j)],
        e4: [(e1, e4, 1), (e4, e1, 1), (e2, e3, 1), (e3, e2, 1),
             (E11, E11, .5), (E22, E22, .5), (E12, E12, -.5), (E21, E21, -.5)],
        E11: [(e1, E11, 1), (E11, e1, 1), (e2, E22, 1), (E22, e2, 1),
              (e3, E22, 1), (E22, e3, 1), (e4, E11, 1), (E11, e4, 1)],
        E12: [(e1, E12, 1), (E12, e1, 1), (e2, E21, 1j), (E21, e2, -1j),
              (e3, E21, -1j), (E21, e3, 1j), (e4, E12, -1), (E12, e4, -1)],
        E21: [(e1, E21, 1), (E21, e1, 1), (e2, E12, -1j), (E12, e2, 1j),
              (e3, E12, 1j), (E12, e3, -1j), (e4, E21, -1), (E21, e4, -1)],
        E22: [(e1, E22, 1), (E22, e1, 1), (e2, E11, 1), (E11, e2, 1),
              (e3, E11, 1), (E11, e3, 1), (e4, E22, 1), (E22, e4, 1)],
    }
    delta = np.zeros((d * d, d), dtype=complex)
    for c, items in terms.items():
        for i, j, v in items:
            delta[i * d + j, c] += v
    return delta


def build_kac_paljutkin(tol: float = 1e-12) -> QuantumSemigroup:
    algebra = BlockStructure([1, 1, 1, 1, 2])
    return QuantumSemigroup.build("kac-paljutkin", algebra, kac_paljutkin_delta(), tol)


def kac_paljutkin_haar() -> Functional:
    """h(x) = (x1 + x2 + x3 + x4)/8 + tr(X)/4."""
    algebra = BlockStructure([1, 1, 1, 1, 2])
    d = [np.array([[1 / 8]])] * 4 + [np.eye(2) / 4]
    return Functional(algebra, tuple(d))


# --- registry -----------------------------------------------------------------

_GROUPS = {
    "S3": symmetric_group_3,
    "D4": dihedral_group_4,
    "Q8": quaternion_group,
    "Z2xZ2": klein_four,
}

_TABLES = {
    "leftzero2": lambda: left_zero_table(2),
    "rightzero2": lambda: right_zero_table(2),
    "null3": lambda: null_table(3),
    "mult01": multiplicative_01_table,
}


def group_by_name(name: str) -> GroupData:
    if name in _GROUPS:
        return _GROUPS[name]()
    m = re.fullmatch(r"Z(\d+)", name)
    if m and int(m.group(1)) >= 1:
        return cyclic_group(int(m.group(1)))
    raise KeyError(f"unknown group {name!r}")


def table_by_name(name: str) -> MultiplicationTable:
    if name in _TABLES:
        return _TABLES[name]()
    return group_by_name(name).table


CATALOG_NAMES = (
    "CZ2", "CZ3", "CZ4", "CZ2xZ2", "CS3", "CD4", "CQ8",
    "dualZ2", "dualZ4", "dualZ2xZ2", "dualS3", "dualD4", "dualQ8",
    "kac-paljutkin", "leftzero2", "rightzero2", "null3", "mult01",
)


def build(name: str) -> QuantumSemigroup:
    """Build a catalog quantum semigroup: C<G>, dual<G>, a table name or kac-paljutkin."""
    if name == "kac-paljutkin":
        qs = build_kac_paljutkin()
        haar = kac_paljutkin_haar()
        eps = qs.counit_candidates()
        return QuantumSemigroup(qs.name, qs.algebra, qs.delta, qs.report,
                                lambda: [("haar", haar)] + [("counit", e) for e in eps])
    if name in _TABLES:
        return build_function_algebra(_TABLES[name](), name)
    if name.startswith("dual"):
        return build_group_dual(group_by_name(name[4:]), name)
    if name.startswith("C"):
        return build_function_algebra(group_by_name(name[1:]).table, name)
    raise KeyError(f"unknown catalog entry {name!r}")


def catalog_group(name: str) -> Optional[GroupData]:
    """The group behind a C<G> or dual<G> catalog name, if any."""
    for prefix in ("dual", "C"):
        if name.startswith(prefix):
            try:
                return group_by_name(name[len(prefix):])
            except KeyError:
                return None
    return None
