"""Informationally complete operator frames and their duals."""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from config.tolerances import TOLERANCES

from .errors import FrameError
from .tensor import LabeledOperator, SubsystemLabel, as_space, identity, tensor

logger = logging.getLogger(__name__)

# Bloch vectors of a regular tetrahedron.
_TETRAHEDRON = np.array(
    [
        [0.0, 0.0, 1.0],
        [2 * np.sqrt(2) / 3, 0.0, -1 / 3],
        [-np.sqrt(2) / 3, np.sqrt(2 / 3), -1 / 3],
        [-np.sqrt(2) / 3, -np.sqrt(2 / 3), -1 / 3],
    ]
)
_PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


@dataclass(frozen=True, eq=False)
class OperatorFrame:
    """Frame elements with duals: X = Σ_k Tr(dual_k X) element_k for every X."""

    space: object
    elements: Tuple[LabeledOperator, ...]
    duals: Tuple[LabeledOperator, ...]

    def __len__(self):
        return len(self.elements)

    def coefficients(self, x: LabeledOperator) -> np.ndarray:
        xm = x.reorder(self.space.names).matrix
        return np.array([np.real(np.sum(d.matrix.T * xm)) for d in self.duals])

    def reconstruct(self, coefficients) -> LabeledOperator:
        m = sum(c * e.matrix for c, e in zip(coefficients, self.elements))
        return LabeledOperator(self.space, m)

    def reconstruction_error(self, x: LabeledOperator) -> float:
        diff = self.reconstruct(self.coefficients(x)).matrix - x.reorder(self.space.names).matrix
        return float(np.abs(diff).max())


def sic_projectors() -> list:
    """The four rank-1 tetrahedral projectors Π_μ = (id + n_μ·σ)/2."""
    return [(np.eye(2) + np.einsum("k,kij->ij", n, _PAULI)) / 2 for n in _TETRAHEDRON]


def ic_projectors(d: int) -> list:
    """Rank-1 informationally complete projector set for any dimension."""
    vectors = []
    for i in range(d):
        v = np.zeros(d, dtype=complex)
        v[i] = 1.0
        vectors.append(v)
    for i in range(d):
        for j in range(i + 1, d):
            for phase in (1.0, 1j):
                v = np.zeros(d, dtype=complex)
                v[i] = 1 / np.sqrt(2)
                v[j] = phase / np.sqrt(2)
                vectors.append(v)
    return [np.outer(v, v.conj()) for v in vectors]


def sic_frame(label="A", d: int = 2) -> OperatorFrame:
    """Qubit SIC-POVM P_μ = Π_μ/2 with closed-form duals d(d+1)P_μ − id."""
    if d != 2:
        raise FrameError(f"SIC frames are shipped for d=2 only, got d={d}")
    if isinstance(label, str):
        label = SubsystemLabel(label, 2)
    space = as_space(label)
    if space.dim != 2:
        raise FrameError(f"SIC frame needs a qubit label, got dimension {space.dim}")
    elements = tuple(LabeledOperator(space, p / 2) for p in sic_projectors())
    duals = tuple(e * (d * (d + 1)) - identity(space) for e in elements)
    return OperatorFrame(space, elements, duals)


def _base_frame(label: SubsystemLabel) -> list:
    if label.dim == 2:
        return [p / 2 for p in sic_projectors()]
    return ic_projectors(label.dim)


def frame_from_elements(space, elements) -> OperatorFrame:
    """Canonical duals from the pseudo-inverse of the frame Gram matrix."""
    space = as_space(space)
    mats = [e.reorder(space.names).matrix if isinstance(e, LabeledOperator) else np.asarray(e) for e in elements]
    gram = np.array([[np.real(np.sum(a.T * b)) for b in mats] for a in mats])
    rank = np.linalg.matrix_rank(gram, tol=TOLERANCES["frame"])
    if rank < space.dim**2:
        raise FrameError(
            f"Frame on {space.names} is not spanning: rank {rank} < {space.dim ** 2}"
        )
    inverse = np.linalg.pinv(gram, rcond=1e-12)
    duals = [sum(inverse[k, l] * mats[l] for l in range(len(mats))) for k in range(len(mats))]
    return OperatorFrame(
        space,
        tuple(LabeledOperator(space, m) for m in mats),
        tuple(LabeledOperator(space, (d + d.conj().T) / 2) for d in duals),
    )


def product_frame(*labels) -> OperatorFrame:
    """Tensor product of per-factor frames (SIC for qubits, rank-1 IC sets otherwise)."""
    labels = [SubsystemLabel(l[0], l[1]) if isinstance(l, tuple) else l for l in labels]
    if not labels:
        raise FrameError("product_frame needs at least one factor")
    factors = [[LabeledOperator(as_space(l), m) for m in _base_frame(l)] for l in labels]
    elements = factors[0]
    for factor in factors[1:]:
        elements = [tensor(a, b) for a in elements for b in factor]
    space = as_space(labels)
    logger.info(f"Built product frame on {space.names} with {len(elements)} elements")
    return frame_from_elements(space, elements)
