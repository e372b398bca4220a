"""Labeled multipartite operator algebra.

Operators live on an ordered tensor product of named subsystems. All
contractions (partial traces, transposes, link products) are addressed by
label name, never by position. Every subsystem uses its fixed computational
basis, which is the basis all transposes and Choi operators refer to.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple, Union

import numpy as np

from config.tolerances import TOLERANCES

from .errors import DimensionError, InputError, LabelError, NotHermitianError

logger = logging.getLogger(__name__)

_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


@dataclass(frozen=True)
class SubsystemLabel:
    name: str
    dim: int

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise LabelError(f"Subsystem name must be a non-empty string, got {self.name!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise DimensionError(f"Subsystem {self.name} has invalid dimension {self.dim}")


LabelLike = Union[SubsystemLabel, Tuple[str, int]]


@dataclass(frozen=True)
class HilbertSpace:
    subsystems: Tuple[SubsystemLabel, ...] = ()

    def __post_init__(self):
        names = [s.name for s in self.subsystems]
        if len(set(names)) != len(names):
            raise LabelError(f"Duplicate subsystem names in {names}")

    @classmethod
    def of(cls, *labels: LabelLike) -> "HilbertSpace":
        return cls(tuple(_as_label(l) for l in labels))

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(s.name for s in self.subsystems)

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(s.dim for s in self.subsystems)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=int)) if self.subsystems else 1

    def label(self, name: str) -> SubsystemLabel:
        for s in self.subsystems:
            if s.name == name:
                return s
        raise LabelError(f"Unknown label {name}. Available labels: {', '.join(self.names)}")

    def index(self, name: str) -> int:
        return self.names.index(self.label(name).name)

    def subspace(self, names: Iterable[str]) -> "HilbertSpace":
        return HilbertSpace(tuple(self.label(n) for n in names))

    def without(self, names: Iterable[str]) -> "HilbertSpace":
        drop = set(names)
        return HilbertSpace(tuple(s for s in self.subsystems if s.name not in drop))

    def __add__(self, other: "HilbertSpace") -> "HilbertSpace":
        return HilbertSpace(self.subsystems + other.subsystems)


def _as_label(label: LabelLike) -> SubsystemLabel:
    if isinstance(label, SubsystemLabel):
        return label
    name, dim = label
    return SubsystemLabel(name, int(dim))


def as_space(spec) -> HilbertSpace:
    """Coerce a label, a (name, dim) pair, a sequence of those, or a space into a HilbertSpace."""
    if isinstance(spec, HilbertSpace):
        return spec
    if isinstance(spec, SubsystemLabel):
        return HilbertSpace((spec,))
    if isinstance(spec, tuple) and len(spec) == 2 and isinstance(spec[0], str):
        return HilbertSpace((_as_label(spec),))
    return HilbertSpace(tuple(_as_label(l) for l in spec))


@dataclass(frozen=True, eq=False)
class LabeledOperator:
    space: HilbertSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        d = self.space.dim
        if m.shape != (d, d):
            raise DimensionError(
                f"Matrix shape {m.shape} does not match space {self.space.names} of dimension {d}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_array(cls, matrix, labels: Sequence[LabelLike]) -> "LabeledOperator":
        return cls(as_space(labels), np.asarray(matrix))

    @property
    def names(self) -> Tuple[str, ...]:
        return self.space.names

    @property
    def dims(self) -> Tuple[int, ...]:
        return self.space.dims

    @property
    def dim(self) -> int:
        return self.space.dim

    def tensor_view(self) -> np.ndarray:
        return self.matrix.reshape(self.dims * 2)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def dag(self) -> "LabeledOperator":
        return LabeledOperator(self.space, self.matrix.conj().T)

    def transpose(self) -> "LabeledOperator":
        return LabeledOperator(self.space, self.matrix.T)

    def hermitian_residual(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max()) if self.dim else 0.0

    def is_hermitian(self, tol: float = TOLERANCES["hermitian"]) -> bool:
        return self.hermitian_residual() <= tol

    def hermitian_part(self) -> "LabeledOperator":
        return LabeledOperator(self.space, (self.matrix + self.matrix.conj().T) / 2)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.hermitian_part().matrix)[0])

    def reorder(self, names: Sequence[str]) -> "LabeledOperator":
        names = tuple(names)
        if sorted(names) != sorted(self.names):
            raise LabelError(f"Cannot reorder {self.names} into {names}")
        if names == self.names:
            return self
        k = len(names)
        idx = [self.space.index(n) for n in names]
        t = self.tensor_view().transpose(idx + [k + i for i in idx])
        space = self.space.subspace(names)
        return LabeledOperator(space, t.reshape(space.dim, space.dim))

    def relabel(self, mapping: dict) -> "LabeledOperator":
        for old in mapping:
            self.space.label(old)
        space = HilbertSpace(
            tuple(SubsystemLabel(mapping.get(s.name, s.name), s.dim) for s in self.space.subsystems)
        )
        return LabeledOperator(space, self.matrix)

    def _aligned(self, other: "LabeledOperator") -> np.ndarray:
        if not isinstance(other, LabeledOperator):
            raise InputError(f"Expected LabeledOperator, got {type(other).__name__}")
        return other.reorder(self.names).matrix

    def __add__(self, other):
        return LabeledOperator(self.space, self.matrix + self._aligned(other))

    def __sub__(self, other):
        return LabeledOperator(self.space, self.matrix - self._aligned(other))

    def __matmul__(self, other):
        return LabeledOperator(self.space, self.matrix @ self._aligned(other))

    def __mul__(self, scalar):
        return LabeledOperator(self.space, self.matrix * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return LabeledOperator(self.space, self.matrix / scalar)

    def __neg__(self):
        return LabeledOperator(self.space, -self.matrix)

    def __repr__(self):
        labels = ", ".join(f"{s.name}:{s.dim}" for s in self.space.subsystems)
        return f"LabeledOperator([{labels}])"


@dataclass(frozen=True, eq=False)
class LabeledVector:
    space: HilbertSpace
    vector: np.ndarray

    def __post_init__(self):
        v = np.array(self.vector, dtype=complex).reshape(-1)
        if v.shape != (self.space.dim,):
            raise DimensionError(f"Vector length {v.shape[0]} does not match dimension {self.space.dim}")
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    def projector(self) -> LabeledOperator:
        return LabeledOperator(self.space, np.outer(self.vector, self.vector.conj()))


def identity(space) -> LabeledOperator:
    space = as_space(space)
    return LabeledOperator(space, np.eye(space.dim))


def basis_projector(index: int, label: LabelLike) -> LabeledOperator:
    space = as_space(label)
    m = np.zeros((space.dim, space.dim))
    m[index, index] = 1.0
    return LabeledOperator(space, m)


def tensor(x: LabeledOperator, *others: LabeledOperator) -> LabeledOperator:
    result = x
    for y in others:
        clash = set(result.names) & set(y.names)
        if clash:
            raise LabelError(f"Label collision in tensor product: {sorted(clash)}")
        result = LabeledOperator(result.space + y.space, np.kron(result.matrix, y.matrix))
    return result


def expand(x: LabeledOperator, space) -> LabeledOperator:
    """Pad x with identities up to `space` and order it like `space`."""
    space = as_space(space)
    missing = space.without(x.names)
    for n in x.names:
        if space.label(n).dim != x.space.label(n).dim:
            raise DimensionError(f"Label {n} has dimension {x.space.label(n).dim}, expected {space.label(n).dim}")
    full = tensor(x, identity(missing)) if missing.subsystems else x
    return full.reorder(space.names)


def _check_labels(x: LabeledOperator, names: Iterable[str]) -> set:
    names = set(names)
    unknown = names - set(x.names)
    if unknown:
        raise LabelError(f"Unknown labels {sorted(unknown)}. Available labels: {', '.join(x.names)}")
    return names


def partial_trace(x: LabeledOperator, over: Iterable[str]) -> LabeledOperator:
    over = _check_labels(x, over)
    if not over:
        return x
    k = len(x.names)
    rows = _LETTERS[:k]
    cols = [rows[i] if n in over else _LETTERS[k + i] for i, n in enumerate(x.names)]
    kept = [i for i, n in enumerate(x.names) if n not in over]
    out = "".join(rows[i] for i in kept) + "".join(cols[i] for i in kept)
    t = np.einsum(f"{rows}{''.join(cols)}->{out}", x.tensor_view())
    space = x.space.without(over)
    return LabeledOperator(space, np.asarray(t).reshape(space.dim, space.dim))


def partial_transpose(x: LabeledOperator, over: Iterable[str]) -> LabeledOperator:
    over = _check_labels(x, over)
    k = len(x.names)
    perm = list(range(2 * k))
    for i, n in enumerate(x.names):
        if n in over:
            perm[i], perm[k + i] = k + i, i
    t = x.tensor_view().transpose(perm)
    return LabeledOperator(x.space, t.reshape(x.dim, x.dim))


def _shared(x: LabeledOperator, y: LabeledOperator) -> list:
    shared = [n for n in x.names if n in y.names]
    for n in shared:
        if x.space.label(n).dim != y.space.label(n).dim:
            raise DimensionError(
                f"Shared label {n} has dimension {x.space.label(n).dim} in one operand and "
                f"{y.space.label(n).dim} in the other"
            )
    return shared


def link_product(x: LabeledOperator, y: LabeledOperator) -> LabeledOperator:
    """X ⋆ Y = Tr_S[(X^{T_S} ⊗ id)(id ⊗ Y)] over the shared labels S.

    The result lives on x's unshared labels followed by y's unshared labels.
    With no shared labels this is the tensor product; with all labels shared
    it is the 1x1 operator Tr(XᵀY).
    """
    shared = _shared(x, y)
    if not shared:
        return tensor(x, y)
    rest_x = [n for n in x.names if n not in shared]
    rest_y = [n for n in y.names if n not in shared]
    xs = x.reorder(rest_x + shared)
    ys = y.reorder(shared + rest_y)
    da = x.space.subspace(rest_x).dim
    db = y.space.subspace(rest_y).dim
    ds = x.space.subspace(shared).dim
    xt = xs.matrix.reshape(da, ds, da, ds)
    yt = ys.matrix.reshape(ds, db, ds, db)
    r = np.einsum("iujv,ukvl->ikjl", xt, yt)
    space = x.space.subspace(rest_x) + y.space.subspace(rest_y)
    return LabeledOperator(space, r.reshape(da * db, da * db))


def link_value(x: LabeledOperator, y: LabeledOperator) -> complex:
    """Scalar link product of two operators on the same label set."""
    if sorted(x.names) != sorted(y.names):
        raise LabelError(f"Full contraction needs equal label sets, got {x.names} and {y.names}")
    _shared(x, y)
    return complex(np.sum(x.reorder(y.names).matrix * y.matrix))


def choi_of_map(kraus: Sequence, in_label, out_label) -> LabeledOperator:
    """Choi operator Σ_ij |i⟩⟨j| ⊗ 𝓜(|i⟩⟨j|) on (in, out) of the map ρ ↦ Σ K ρ K†."""
    in_space = as_space(in_label)
    out_space = as_space(out_label)
    d_in, d_out = in_space.dim, out_space.dim
    m = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for k in kraus:
        k = np.asarray(k.matrix if isinstance(k, LabeledOperator) else k, dtype=complex)
        if k.shape != (d_out, d_in):
            raise DimensionError(f"Kraus operator of shape {k.shape}, expected {(d_out, d_in)}")
        v = k.T.reshape(-1)
        m += np.outer(v, v.conj())
    return LabeledOperator(in_space + out_space, m)


def map_of_choi(m: LabeledOperator, arg: LabeledOperator) -> LabeledOperator:
    """Apply the map with Choi operator m: 𝓜(ρ) = Tr_in[(ρᵀ ⊗ id) M]."""
    missing = set(arg.names) - set(m.names)
    if missing:
        raise LabelError(f"Argument labels {sorted(missing)} are not inputs of the Choi operator {m.names}")
    return link_product(arg, m)


def kraus_of_choi(m: LabeledOperator, in_label, tol: float = 1e-12) -> list:
    """Kraus operators (arrays of shape d_out x d_in) of a positive Choi operator."""
    in_space = as_space(in_label)
    out_names = [n for n in m.names if n not in in_space.names]
    mr = m.reorder(list(in_space.names) + out_names)
    d_in = in_space.dim
    d_out = m.space.subspace(out_names).dim
    vals, vecs = hermitian_eig(mr)
    cutoff = tol * max(1.0, float(np.abs(vals).max(initial=0.0)))
    if vals[0] < -max(TOLERANCES["psd"], cutoff):
        raise InputError(f"Choi operator is not positive: minimum eigenvalue {vals[0]:.3e}")
    return [
        np.sqrt(lam) * vecs[:, i].reshape(d_in, d_out).T
        for i, lam in enumerate(vals)
        if lam > cutoff
    ]


def max_entangled(d: int, first: str = "A", second: str = "A'", normalized: bool = True) -> LabeledVector:
    """|Φ⁺⟩ = Σ_i |i⟩|i⟩, divided by √d when normalized."""
    if d < 1:
        raise DimensionError(f"Dimension must be positive, got {d}")
    v = np.eye(d).reshape(-1)
    if normalized:
        v = v / np.sqrt(d)
    return LabeledVector(HilbertSpace.of((first, d), (second, d)), v)


def hermitian_eig(x: LabeledOperator, tol: float = TOLERANCES["hermitian"]):
    """Ascending eigenvalues and eigenvector columns of a Hermitian operator."""
    residual = x.hermitian_residual()
    if residual > tol:
        raise NotHermitianError(f"Operator on {x.names} is not Hermitian: residual {residual:.3e} > {tol:.1e}")
    return np.linalg.eigh(x.hermitian_part().matrix)


def hermitian_basis(d: int) -> list:
    """Orthonormal Hermitian basis of d x d matrices under Tr(AB)."""
    basis = []
    for j in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[j, j] = 1.0
        basis.append(e)
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[j, k] = s[k, j] = 1 / np.sqrt(2)
            a = np.zeros((d, d), dtype=complex)
            a[j, k] = 1j / np.sqrt(2)
            a[k, j] = -1j / np.sqrt(2)
            basis.extend([s, a])
    return basis

