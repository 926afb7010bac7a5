import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsemi.fdalg import (
    BlockStructure,
    Element,
    Functional,
    NotAStateError,
    Projection,
    StructureMismatch,
    choi_blocks,
    compress_basis,
    cp_margin,
    functional_apply,
    mul,
    nearest_state,
    positivity_check,
    random_element,
    random_state,
    span_rank,
    star,
    support_projection,
    tensor,
)

ALG = BlockStructure([1, 1, 2])


def test_block_indexing_and_dims():
    assert ALG.dim == 6
    assert ALG.size == 4
    assert ALG.index(2, 1, 0) == 4
    x = random_element(ALG, np.random.default_rng(0))
    assert np.allclose(ALG.from_blocks(ALG.to_blocks(x.coeffs)), x.coeffs)


def test_matrix_unit_products():
    e01 = Element.basis(ALG, ALG.index(2, 0, 1))
    e10 = Element.basis(ALG, ALG.index(2, 1, 0))
    e00 = Element.basis(ALG, ALG.index(2, 0, 0))
    assert mul(e01, e10).close_to(e00)
    assert np.allclose(mul(e10, e01).coeffs, Element.basis(ALG, ALG.index(2, 1, 1)).coeffs)
    # different blocks annihilate
    assert mul(Element.basis(ALG, 0), e01).norm() == 0


def test_product_matches_dense_matrices(rng):
    x, y = random_element(ALG, rng), random_element(ALG, rng)
    assert np.allclose((x * y).matrix, x.matrix @ y.matrix)


def test_structure_mismatch():
    with pytest.raises(StructureMismatch):
        Element.unit(ALG) * Element.unit(BlockStructure([2]))


def test_star_on_block():
    x = Element.from_matrix(ALG, np.diag([1j, 2, 0, 0]).astype(complex))
    x = x + Element.basis(ALG, ALG.index(2, 0, 1)) * (3 + 1j)
    assert np.allclose(star(x).matrix, x.matrix.conj().T)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 3), min_size=1, max_size=3), st.integers(0, 2**31 - 1))
def test_star_is_antimultiplicative_involution(blocks, seed):
    s = BlockStructure(blocks)
    r = np.random.default_rng(seed)
    x, y = random_element(s, r), random_element(s, r)
    assert star(star(x)).close_to(x, 1e-12)
    assert star(x * y).close_to(star(y) * star(x), 1e-10)
    assert ((x * y) * x).close_to(x * (y * x), 1e-10)


def test_tensor_of_units_is_unit():
    t = tensor(Element.unit(ALG), Element.unit(ALG))
    assert t.close_to(Element.unit(t.structure))
    a, b = Element.basis(ALG, 4), Element.basis(ALG, 3)
    assert np.allclose(t.structure.embed(tensor(a, b).coeffs), np.kron(a.matrix, b.matrix))


def test_tensor_of_maps_is_kron():
    assert np.array_equal(tensor(np.eye(2), np.ones((2, 2))), np.kron(np.eye(2), np.ones((2, 2))))
    with pytest.raises(TypeError):
        tensor(Element.unit(ALG), np.eye(2))


def test_positivity_check():
    p = Element.from_matrix(ALG, np.diag([1.0, 0, 0.5, 0]))
    assert positivity_check(p).positive
    q = Element.from_matrix(ALG, np.diag([1.0, -0.1, 0, 0]))
    res = positivity_check(q)
    assert not res.positive and res.min_eigenvalue == pytest.approx(-0.1)
    nh = Element.basis(ALG, ALG.index(2, 0, 1))
    assert not positivity_check(nh).hermitian


def test_functional_covector_convention():
    rho = np.array([[0.3, 0.1j], [-0.1j, 0.2]])
    phi = Functional(ALG, (np.array([[0.4]]), np.array([[0.1]]), rho))
    # phi(E_ij) = tr(rho E_ij) = rho[j, i]
    assert functional_apply(phi, Element.basis(ALG, ALG.index(2, 0, 1))) == pytest.approx(rho[1, 0])
    assert phi(Element.unit(ALG)) == pytest.approx(1.0)
    assert phi.is_state()
    back = Functional.from_covector(ALG, phi.covector)
    assert all(np.array_equal(a, b) for a, b in zip(back.density, phi.density))


def test_not_a_state():
    bad = Functional(ALG, (np.array([[1.5]]), np.array([[-0.5]]), np.zeros((2, 2))))
    assert not bad.is_state()
    with pytest.raises(NotAStateError):
        bad.check_state()
    fixed = nearest_state(bad)
    assert fixed.is_state() and fixed.density[0][0, 0] == pytest.approx(1.0)


def test_support_projection_pure_state():
    v = np.array([1, 1j]) / np.sqrt(2)
    phi = Functional(ALG, (np.zeros((1, 1)), np.zeros((1, 1)), np.outer(v, v.conj())))
    p = support_projection(phi)
    assert p.ranks == (0, 0, 1)
    assert p.is_projection()
    assert phi(p.element) == pytest.approx(1.0)
    assert p.complement().ranks == (1, 1, 1)


def test_support_projection_faithful_state_is_unit(rng):
    phi = random_state(ALG, rng, "mixed")
    p = support_projection(phi)
    assert p.element.close_to(Element.unit(ALG), 1e-10)


def test_compress_basis_orthonormal_corner():
    v = np.array([[1.0], [1.0]]) / np.sqrt(2)
    p = Projection.from_frames(ALG, [np.ones((1, 1)), np.zeros((1, 0)), v])
    X = compress_basis(p)
    assert X.m == 2  # ranks (1, 0, 1)
    B = X.matrix
    assert np.allclose(B.conj().T @ B, np.eye(2))
    assert np.allclose(X.lift(X.unit_coords()).coeffs, p.element.coeffs)
    assert X.span_residual(Element.basis(ALG, 1)) == pytest.approx(1.0)


def test_compress_basis_rejects_zero():
    with pytest.raises(ValueError):
        compress_basis(Projection.from_frames(ALG, [np.zeros((1, 0)), np.zeros((1, 0)), np.zeros((2, 0))]))


def test_span_rank():
    els = [Element.basis(ALG, k) for k in range(ALG.dim)]
    assert span_rank(els) == ALG.dim
    assert span_rank(els[:2] + [els[0] + els[1]]) == 2
    assert span_rank([]) == 0


def test_choi_identity_and_transpose():
    s = BlockStructure([2])
    ident = np.eye(4)
    assert cp_margin(ident, s, s) >= -1e-12
    transpose = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            transpose[s.index(0, j, i), s.index(0, i, j)] = 1
    assert cp_margin(transpose, s, s) == pytest.approx(-1.0)
    assert choi_blocks(ident, s, s)[0].shape == (4, 4)


@pytest.mark.parametrize("kind", ["mixed", "pure", "few"])
def test_random_states(kind, rng):
    phi = random_state(ALG, rng, kind)
    assert phi.is_state(1e-12)
