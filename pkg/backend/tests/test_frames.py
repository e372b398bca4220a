import numpy as np
import pytest

from qmemory.errors import FrameError
from qmemory.frames import frame_from_elements, ic_projectors, product_frame, sic_frame, sic_projectors
from qmemory.sampling import random_hermitian
from qmemory.tensor import SubsystemLabel


def test_sic_projectors_overlaps():
    proj = sic_projectors()
    for i, p in enumerate(proj):
        assert abs(np.trace(p) - 1) < 1e-12
        for j, q in enumerate(proj):
            expected = 1.0 if i == j else 1 / 3
            assert abs(np.trace(p @ q) - expected) < 1e-12


def test_sic_frame_biorthogonal():
    frame = sic_frame("A")
    gram = np.array([[np.trace(d.matrix @ e.matrix) for e in frame.elements] for d in frame.duals])
    assert np.abs(gram - np.eye(4)).max() < 1e-12
    total = sum(e.matrix for e in frame.elements)
    assert np.abs(total - np.eye(2)).max() < 1e-12


def test_sic_frame_reconstruction(rng):
    frame = sic_frame("A")
    x = random_hermitian(("A", 2), rng)
    assert frame.reconstruction_error(x) < 1e-12


def test_sic_frame_qubit_only():
    with pytest.raises(FrameError):
        sic_frame("A", d=3)
    with pytest.raises(FrameError):
        sic_frame(SubsystemLabel("A", 3))


@pytest.mark.parametrize("d", [2, 3, 4])
def test_ic_projectors_span(d):
    proj = ic_projectors(d)
    assert len(proj) == d * d
    stacked = np.array([p.reshape(-1) for p in proj])
    assert np.linalg.matrix_rank(stacked) == d * d


def test_product_frame_reconstruction(rng):
    a, b = SubsystemLabel("A", 2), SubsystemLabel("B", 3)
    frame = product_frame(a, b)
    assert len(frame) == 4 * 9
    x = random_hermitian([a, b], rng)
    assert frame.reconstruction_error(x) < 1e-10
    assert frame.reconstruction_error(x.reorder(["B", "A"])) < 1e-10


def test_non_spanning_set_rejected():
    elements = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    with pytest.raises(FrameError):
        frame_from_elements(("A", 2), elements)
