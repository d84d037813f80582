import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import as_operator, random_complex, random_j_hermitian, random_state
from kreinqm import (AxiomResiduals, Boundary, DimensionError, Grid, Involution,
                     InvolutionKind, OperatorMatrix, PhysicalConstants, StateVector,
                     adjoint_axiom_residuals, build_kinetic, build_momentum, build_position,
                     dirac_inner, dirac_j_product_identity, even_odd_decompose, gram_matrix,
                     is_j_hermitian, is_krein_skew_hermitian, j_inner,
                     j_product_adjoint_identity, krein_adjoint, krein_inner,
                     krein_inner_swapped, sample_potential, PotentialSpec)


# -- grids -------------------------------------------------------------------

@pytest.mark.parametrize("n,L", [(3, 1.0), (11, 2.5), (401, 8.0), (1201, 10.0), (1001, 0.3)])
def test_dirichlet_nodes_are_exact_mirrors(n, L):
    g = Grid(n, L)
    x = g.nodes
    assert np.array_equal(x[::-1], -x)
    assert x[n // 2] == 0.0
    assert x[0] == -L and x[-1] == L
    assert np.allclose(np.diff(x), g.spacing, rtol=1e-12, atol=0)


@pytest.mark.parametrize("n,L", [(2, 1.0), (16, 3.0), (256, np.pi)])
def test_periodic_mirror_map(n, L):
    g = Grid(n, L, Boundary.PERIODIC)
    x = g.nodes
    k = np.arange(n)
    # x_0 = -L is its own image modulo the period 2L
    assert np.array_equal(x[(n - k[1:]) % n], -x[1:])
    assert x[0] == -L
    assert g.spacing == pytest.approx(2 * L / n)


@pytest.mark.parametrize("args", [(4, 1.0), (1, 1.0), (5, 0.0), (5, -1.0), (5, np.inf)])
def test_dirichlet_grid_rejects_bad_input(args):
    with pytest.raises(ValueError):
        Grid(*args)


def test_periodic_grid_needs_even_count():
    with pytest.raises(ValueError):
        Grid(7, 1.0, Boundary.PERIODIC)


def test_constants_must_be_positive():
    with pytest.raises(ValueError):
        PhysicalConstants(hbar=0.0)
    with pytest.raises(ValueError):
        PhysicalConstants(mass=-1.0)


def test_state_rejects_wrong_length_and_nonfinite():
    g = Grid(5, 1.0)
    with pytest.raises(DimensionError):
        StateVector(g, np.ones(4))
    with pytest.raises(ValueError):
        StateVector(g, [1, 2, np.nan, 0, 0])


def test_state_and_operator_are_immutable():
    g = Grid(5, 1.0)
    psi = StateVector(g, np.arange(5.0))
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 3.0
    A = OperatorMatrix.identity(g)
    with pytest.raises(ValueError):
        A.entries[0, 0] = 2.0


def test_operator_shape_checked():
    with pytest.raises(DimensionError):
        OperatorMatrix(np.eye(4), Grid(5, 1.0))


# -- involutions ---------------------------------------------------------------

@pytest.mark.parametrize("J", [
    Involution.parity(Grid(9, 1.0)),
    Involution.parity(Grid(8, 1.0, Boundary.PERIODIC)),
    Involution.block_signature(4, 4),
    Involution.block_signature(3, 5),
    Involution.identity(6),
])
def test_involution_squares_to_identity_exactly(J):
    M = J.matrix
    assert M.dtype.kind == "i"
    assert np.array_equal(M @ M, np.eye(J.dim, dtype=M.dtype))


def test_involution_validation():
    with pytest.raises(ValueError):
        Involution([1, 2, 0], [1, 1, 1], "parity")  # a 3-cycle
    with pytest.raises(ValueError):
        Involution([1, 0], [1, -1], "parity")  # signs disagree on an orbit
    with pytest.raises(ValueError):
        Involution([0, 1], [1, 2], "identity")


def test_parity_matches_dense_matrix(rng):
    g = Grid(9, 2.0)
    J = Involution.parity(g)
    assert J.kind is InvolutionKind.PARITY
    a = random_complex(rng, 9)
    assert np.array_equal(J.apply(a), J.matrix @ a)
    A = random_complex(rng, 9, 9)
    assert np.allclose(J.conjugate(A), J.matrix @ A @ J.matrix, rtol=0, atol=0)
    assert np.array_equal(J.left(A), J.matrix @ A)


# -- inner products ------------------------------------------------------------

def test_dirac_unit_norm_and_disjoint_support():
    g = Grid(11, 1.0)
    a = np.zeros(11)
    a[2] = 1.0
    psi = StateVector(g, a).normalized()
    assert dirac_inner(psi, psi) == pytest.approx(1.0, abs=1e-15)
    b = np.zeros(11)
    b[7] = 2.0
    assert dirac_inner(psi, StateVector(g, b)) == 0.0


def test_dirac_fourier_modes_orthogonal():
    g = Grid(64, 2.0, Boundary.PERIODIC)
    L, x = g.half_width, g.nodes
    for m in range(1, 5):
        for n in range(1, 5):
            if m == n:
                continue
            cm, cn = np.cos(2 * m * np.pi * x / L), np.cos(2 * n * np.pi * x / L)
            # oracle: plain summation loop
            oracle = g.spacing * sum(float(u) * float(v) for u, v in zip(cm, cn))
            val = dirac_inner(StateVector(g, cm), StateVector(g, cn))
            assert abs(oracle) < 1e-12
            assert abs(val) < 1e-12


def test_grid_mismatch_raises():
    a, b = StateVector(Grid(5, 1.0), np.ones(5)), StateVector(Grid(5, 2.0), np.ones(5))
    with pytest.raises(DimensionError):
        dirac_inner(a, b)
    with pytest.raises(DimensionError):
        krein_inner(a, a, Involution.identity(4))


@pytest.mark.parametrize("boundary,n", [("dirichlet", 201), ("periodic", 200)])
def test_even_and_odd_modes_have_signed_norms(boundary, n):
    g = Grid(n, 3.0, boundary)
    J = Involution.parity(g)
    x = g.nodes
    # smooth and 2L-periodic, so exactly even/odd on both grid types
    k = np.pi / g.half_width
    even = StateVector(g, np.exp(np.cos(k * x))).normalized()
    odd = StateVector(g, np.sin(k * x) * np.exp(np.cos(k * x))).normalized()
    assert krein_inner(even, even, J) == pytest.approx(1.0, abs=1e-13)
    assert krein_inner(odd, odd, J) == pytest.approx(-1.0, abs=1e-13)
    assert abs(krein_inner(even, odd, J)) < 1e-14
    # the J-product is the positive-definite bracket
    assert j_inner(odd, odd, J) == pytest.approx(1.0, abs=1e-13)


def test_j_inner_equals_dirac(rng):
    g = Grid(21, 2.0)
    J = Involution.parity(g)
    for _ in range(20):
        phi, psi = random_state(rng, g), random_state(rng, g)
        assert abs(j_inner(phi, psi, J) - dirac_inner(phi, psi)) < 1e-14 * 50
        n = j_inner(psi, psi, J)
        assert n.real > 0 and abs(n.imag) < 1e-13


def test_two_written_forms_of_product_agree(rng):
    # J on the ket versus J on the bra are equal because J is a symmetric permutation
    g = Grid(31, 1.5)
    J = Involution.parity(g)
    for _ in range(10):
        phi, psi = random_state(rng, g), random_state(rng, g)
        assert abs(krein_inner(phi, psi, J) - krein_inner_swapped(phi, psi, J)) < 1e-13


_vec = arrays(np.complex128, 9, elements=st.complex_numbers(max_magnitude=10, allow_nan=False,
                                                             allow_infinity=False))
_scalar = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(_vec, _vec)
def test_krein_conjugate_symmetry(a, b):
    g = Grid(9, 4.0)
    J = Involution.parity(g)
    phi, psi = StateVector(g, a), StateVector(g, b)
    scale = 1 + np.abs(a).sum() * np.abs(b).sum()
    assert abs(krein_inner(phi, psi, J) - np.conj(krein_inner(psi, phi, J))) <= 1e-13 * scale


@settings(max_examples=60, deadline=None)
@given(_vec, _vec, _vec, _scalar, _scalar)
def test_krein_linear_in_second_slot(a, b1, b2, s, t):
    g = Grid(9, 4.0)
    J = Involution.parity(g)
    phi = StateVector(g, a)
    lhs = krein_inner(phi, StateVector(g, s * b1 + t * b2), J)
    rhs = s * krein_inner(phi, StateVector(g, b1), J) + t * krein_inner(phi, StateVector(g, b2), J)
    scale = 1 + np.abs(a).sum() * (abs(s) * np.abs(b1).sum() + abs(t) * np.abs(b2).sum())
    assert abs(lhs - rhs) <= 1e-13 * scale


# -- adjoints and Hermiticity --------------------------------------------------

def test_adjoint_of_identity():
    g = Grid(7, 1.0)
    I = OperatorMatrix.identity(g)
    assert np.array_equal(krein_adjoint(I, Involution.parity(g)).entries, I.entries)


def test_even_real_diagonal_is_self_adjoint():
    g = Grid(9, 2.0)
    A = OperatorMatrix(np.diag(np.cosh(g.nodes)), g)
    assert np.array_equal(krein_adjoint(A, Involution.parity(g)).entries, A.entries)


def test_adjoint_defining_relation(rng, block_J):
    g = Grid.index_grid(8)
    A = as_operator(random_complex(rng, 8, 8), g)
    As = krein_adjoint(A, block_J)
    for _ in range(20):
        phi, psi = random_state(rng, g), random_state(rng, g)
        lhs = krein_inner(phi, A @ psi, block_J)
        rhs = krein_inner(As @ phi, psi, block_J)
        assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))


def test_random_j_hermitian_passes(rng, block_J):
    for _ in range(20):
        A = as_operator(random_j_hermitian(rng, block_J))
        assert is_j_hermitian(A, block_J).passed
        assert is_j_hermitian(A, block_J).residual == 0.0


def test_generic_matrix_fails(rng, block_J):
    A = as_operator(random_complex(rng, 8, 8))
    check = is_j_hermitian(A, block_J)
    assert not check.passed and check.residual > 0.1


def test_tolerance_scales_with_entries(rng, block_J):
    A = as_operator(1e6 * random_j_hermitian(rng, block_J))
    assert is_j_hermitian(A, block_J).tolerance == pytest.approx(1e-10 * A.scale)
    with pytest.raises(ValueError):
        is_j_hermitian(A, block_J, tol=0.0)


def test_discrete_operator_classes():
    g = Grid(101, 5.0)
    J = Involution.parity(g)
    T = build_kinetic(g)
    p = build_momentum(g)
    x = build_position(g)
    V = OperatorMatrix(np.diag(sample_potential(PotentialSpec.imaginary_cubic(), g)), g)
    assert is_j_hermitian(T, J).passed
    assert is_j_hermitian(V, J).passed
    assert not is_j_hermitian(p, J).passed
    assert is_krein_skew_hermitian(p, J).passed
    assert is_krein_skew_hermitian(x, J).passed
    assert not is_krein_skew_hermitian(T, J).passed


def test_axioms_trivial_case():
    g = Grid(5, 1.0)
    I = OperatorMatrix.identity(g)
    r = adjoint_axiom_residuals(I, I, 1.0, Involution.parity(g))
    assert isinstance(r, AxiomResiduals)
    assert r.max() == 0.0 and not r.singular


def test_conjugate_homogeneity_with_imaginary_scalar():
    g = Grid(5, 1.0)
    J = Involution.parity(g)
    I = OperatorMatrix.identity(g)
    assert np.array_equal(krein_adjoint(1j * I, J).entries, -1j * np.eye(5))


def test_axioms_random(rng, block_J):
    g = Grid.index_grid(8)
    for _ in range(25):
        A = as_operator(random_complex(rng, 8, 8), g)
        B = as_operator(random_complex(rng, 8, 8), g)
        r = adjoint_axiom_residuals(A, B, complex(*rng.normal(size=2)), block_J)
        assert r.max() < 1e-12


def test_axioms_skip_inverse_for_singular_matrix(block_J):
    g = Grid.index_grid(8)
    A = np.zeros((8, 8))
    A[0, 0] = 1.0
    r = adjoint_axiom_residuals(as_operator(A, g), OperatorMatrix.identity(g), 2.0, block_J)
    assert r.singular and r.inverse is None


def test_product_identity_holds_when_commuting_with_j(rng):
    g = Grid(31, 3.0)
    J = Involution.parity(g)
    assert j_product_adjoint_identity(OperatorMatrix.identity(g), J) == 0.0
    T = build_kinetic(g)
    assert j_product_adjoint_identity(T, J) == 0.0
    harm = T + OperatorMatrix(np.diag(0.5 * g.nodes**2), g)
    assert j_product_adjoint_identity(harm, J) == 0.0


def test_product_identity_equals_commutator_size(rng, block_J):
    # (JA)* = A* J, so the residual is max|[A*, J]| in disguise
    for _ in range(10):
        A = as_operator(random_complex(rng, 8, 8))
        As = krein_adjoint(A, block_J).entries
        comm = np.max(np.abs(As @ block_J.matrix - block_J.matrix @ As))
        assert j_product_adjoint_identity(A, block_J) == pytest.approx(comm, rel=1e-12)


def test_dirac_form_of_product_identity_always_holds(rng, block_J):
    g9 = Grid(9, 2.0)
    for J, grid in ((block_J, Grid.index_grid(8)), (Involution.parity(g9), g9)):
        for _ in range(20):
            A = as_operator(random_complex(rng, J.dim, J.dim), grid)
            assert dirac_j_product_identity(A, J) < 1e-12


# -- decomposition -------------------------------------------------------------

def test_decomposition_of_even_and_odd_inputs():
    g = Grid(21, 2.0)
    J = Involution.parity(g)
    x = g.nodes
    d = even_odd_decompose(StateVector(g, np.exp(-x**2)), J)
    assert not np.any(d.odd_part.amplitudes)
    d = even_odd_decompose(StateVector(g, x**3), J)
    assert not np.any(d.even_part.amplitudes)


def test_decomposition_offcenter_gaussian():
    g = Grid(201, 5.0)
    J = Involution.parity(g)
    psi = StateVector(g, np.exp(-(g.nodes - 1.3) ** 2))
    d = even_odd_decompose(psi, J)
    assert np.allclose((d.even_part + d.odd_part).amplitudes, psi.amplitudes, rtol=0,
                       atol=1e-15)
    assert abs(krein_inner(d.even_part, d.odd_part, J)) < 1e-13


def test_decomposition_needs_parity(block_J):
    with pytest.raises(ValueError):
        even_odd_decompose(StateVector(Grid.index_grid(8), np.ones(8)), block_J)


def test_gram_signature():
    # Gaussians times even/odd polynomials: Krein Gram positive/negative definite
    g = Grid(301, 6.0)
    J = Involution.parity(g)
    x = g.nodes
    w = np.exp(-x**2 / 2)
    even = [StateVector(g, x ** (2 * k) * w) for k in range(4)]
    odd = [StateVector(g, x ** (2 * k + 1) * w) for k in range(4)]
    Ge, Go = gram_matrix(even, J), gram_matrix(odd, J)
    assert np.allclose(Ge, Ge.conj().T) and np.allclose(Go, Go.conj().T)
    assert np.all(np.linalg.eigvalsh(Ge) > 0)
    assert np.all(np.linalg.eigvalsh(Go) < 0)
    assert gram_matrix([], J).shape == (0, 0)
