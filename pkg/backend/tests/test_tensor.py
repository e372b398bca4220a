import numpy as np
import pytest

from qmemory.errors import DimensionError, LabelError, NotHermitianError
from qmemory.sampling import random_density, random_hermitian, random_kraus
from qmemory.tensor import (
    HilbertSpace,
    LabeledOperator,
    choi_of_map,
    hermitian_basis,
    hermitian_eig,
    identity,
    kraus_of_choi,
    link_product,
    link_value,
    map_of_choi,
    max_entangled,
    partial_trace,
    partial_transpose,
    tensor,
)


def test_partial_trace_of_product(rng):
    rho = random_density(("A", 2), rng)
    sigma = random_density(("B", 3), rng)
    joint = tensor(rho, sigma)
    assert np.abs(partial_trace(joint, ["B"]).matrix - rho.matrix).max() < 1e-12
    assert np.abs(partial_trace(joint, ["A"]).matrix - sigma.matrix).max() < 1e-12
    assert abs(partial_trace(joint, ["A", "B"]).trace() - 1) < 1e-12


def test_partial_trace_unknown_label(rng):
    rho = random_density(("A", 2), rng)
    with pytest.raises(LabelError):
        partial_trace(rho, ["Z"])


def test_tensor_label_collision(rng):
    rho = random_density(("A", 2), rng)
    with pytest.raises(LabelError):
        tensor(rho, rho)


def test_reorder_is_label_addressed(rng):
    x = random_hermitian([("A", 2), ("B", 3)], rng)
    y = x.reorder(["B", "A"])
    assert y.names == ("B", "A")
    assert np.abs(partial_trace(y, ["B"]).matrix - partial_trace(x, ["B"]).matrix).max() < 1e-12
    assert np.abs((x - y).matrix).max() < 1e-12


def test_matrix_shape_checked():
    with pytest.raises(DimensionError):
        LabeledOperator(HilbertSpace.of(("A", 2)), np.eye(3))


def test_partial_transpose_involution(rng):
    x = random_hermitian([("A", 2), ("B", 2), ("C", 3)], rng)
    twice = partial_transpose(partial_transpose(x, ["B"]), ["B"])
    assert np.abs(twice.matrix - x.matrix).max() < 1e-14
    full = partial_transpose(x, ["A", "B", "C"])
    assert np.abs(full.matrix - x.matrix.T).max() < 1e-14


def test_bell_state_partial_transpose():
    bell = max_entangled(2, "A", "B").projector()
    vals = np.linalg.eigvalsh(partial_transpose(bell, ["B"]).matrix)
    assert abs(vals[0] + 0.5) < 1e-12


def test_link_product_with_identity_channel(rng):
    rho = random_density(("A", 3), rng)
    # Choi operator of the identity channel A -> B
    ident = choi_of_map([np.eye(3)], ("A", 3), ("B", 3))
    out = link_product(rho, ident)
    assert out.names == ("B",)
    assert np.abs(out.matrix - rho.matrix).max() < 1e-12


def test_link_product_labels_and_scalar(rng):
    x = random_hermitian([("A", 2), ("B", 2)], rng)
    y = random_hermitian([("B", 2), ("C", 3)], rng)
    assert link_product(x, y).names == ("A", "C")
    z = random_hermitian([("B", 2), ("A", 2)], rng)
    scalar = link_product(x, z)
    assert scalar.dim == 1
    expected = np.trace(x.matrix.T @ z.reorder(["A", "B"]).matrix)
    assert abs(scalar.matrix[0, 0] - expected) < 1e-12
    assert abs(link_value(x, z) - expected) < 1e-12


def test_link_product_dimension_mismatch(rng):
    x = random_hermitian([("A", 2), ("B", 2)], rng)
    y = random_hermitian([("B", 3)], rng)
    with pytest.raises(DimensionError):
        link_product(x, y)


def test_link_value_needs_equal_labels(rng):
    x = random_hermitian([("A", 2), ("B", 2)], rng)
    y = random_hermitian([("A", 2)], rng)
    with pytest.raises(LabelError):
        link_value(x, y)


@pytest.mark.parametrize("d_in,d_out", [(2, 2), (2, 3), (3, 2)])
def test_choi_kraus_roundtrip(rng, d_in, d_out):
    kraus = random_kraus(d_in, d_out, rng)
    m = choi_of_map(kraus, ("A", d_in), ("B", d_out))
    assert np.abs(partial_trace(m, ["B"]).matrix - np.eye(d_in)).max() < 1e-10
    rho = random_density(("A", d_in), rng)
    direct = sum(k @ rho.matrix @ k.conj().T for k in kraus)
    assert np.abs(map_of_choi(m, rho).matrix - direct).max() < 1e-10
    rebuilt = choi_of_map(kraus_of_choi(m, ("A", d_in)), ("A", d_in), ("B", d_out))
    assert np.abs(rebuilt.matrix - m.matrix).max() < 1e-10


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_hermitian_basis_orthonormal(d):
    basis = hermitian_basis(d)
    assert len(basis) == d * d
    gram = np.array([[np.trace(a @ b) for b in basis] for a in basis])
    assert np.abs(gram - np.eye(d * d)).max() < 1e-12
    for h in basis:
        assert np.abs(h - h.conj().T).max() < 1e-15


def test_hermitian_eig_rejects_non_hermitian():
    x = LabeledOperator(HilbertSpace.of(("A", 2)), np.array([[0, 1], [0, 0]]))
    with pytest.raises(NotHermitianError):
        hermitian_eig(x)


def test_identity_trace():
    assert abs(identity([("A", 2), ("B", 3)]).trace() - 6) < 1e-14
