"""Two-point-measurement process matrices.

A process matrix W lives on A⊗B⊗C: A is the system handed out at the first
measurement time, B the system fed back in after the first instrument, and
C the system at the second time. Labels keep these roles positionally, so a
process on ("S_t", "S_in", "S_out") is read as A="S_t", B="S_in", C="S_out".
Scalar pairings of operators with W are full link products X ⋆ W = Tr(Xᵀ W).
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from config.tolerances import TOLERANCES

from .errors import DimensionError, InputError, InvalidProcessError, InvalidTesterError, LabelError
from .tensor import (
    HilbertSpace,
    LabeledOperator,
    SubsystemLabel,
    as_space,
    choi_of_map,
    expand,
    identity,
    link_product,
    link_value,
    partial_trace,
    tensor,
)

logger = logging.getLogger(__name__)

PROCESS_LABELS = ("A", "B", "C")


class ValidityReport(BaseModel):
    positivity: float
    trace: float
    causality: float
    tolerance: float
    valid: bool

    def residuals(self) -> Dict[str, float]:
        return {"positivity": self.positivity, "trace": self.trace, "causality": self.causality}


class TesterReport(BaseModel):
    positivity: float
    marginal_c: float
    marginal_a: float
    ancilla_label: str
    tolerance: float
    valid: bool


def validate_tpm(w: LabeledOperator, tol: float = TOLERANCES["tpm"]) -> ValidityReport:
    """Residuals of the positivity, normalization and causality constraints.

    Args:
        w: operator on three labeled factors, read as (A, B, C)
        tol: pass/fail threshold for every residual

    Returns:
        ValidityReport with the three residuals and the verdict
    """
    if len(w.names) != 3:
        raise LabelError(f"A TPM process matrix needs three labels (A, B, C), got {w.names}")
    a, b, c = w.names
    d_b = w.space.label(b).dim
    positivity = max(0.0, -w.min_eigenvalue())
    trace = abs(w.trace() - d_b)
    marginal_ab = partial_trace(w, [c]) * d_b
    marginal_a = partial_trace(w, [b, c])
    causality = float(np.abs((marginal_ab - expand(marginal_a, marginal_ab.space)).matrix).max())
    valid = positivity <= tol and trace <= tol and causality <= tol and w.is_hermitian()
    return ValidityReport(
        positivity=positivity, trace=float(trace), causality=causality, tolerance=tol, valid=valid
    )


@dataclass(frozen=True, eq=False)
class TpmProcess:
    w: LabeledOperator

    @property
    def labels(self) -> Tuple[str, str, str]:
        return self.w.names

    @property
    def a(self) -> SubsystemLabel:
        return self.w.space.subsystems[0]

    @property
    def b(self) -> SubsystemLabel:
        return self.w.space.subsystems[1]

    @property
    def c(self) -> SubsystemLabel:
        return self.w.space.subsystems[2]

    @property
    def dims(self) -> Tuple[int, int, int]:
        return self.w.dims

    def mix(self, other: "TpmProcess", p: float) -> "TpmProcess":
        return as_tpm(self.w * p + other.w * (1 - p))


def as_tpm(w: LabeledOperator, tol: float = TOLERANCES["tpm"]) -> TpmProcess:
    report = validate_tpm(w, tol)
    if not report.valid:
        raise InvalidProcessError(f"Operator on {w.names} is not a TPM process matrix: {report.residuals()}")
    return TpmProcess(w)


@dataclass(frozen=True, eq=False)
class MeasurementOp:
    """Measurement operator E (maps A to B) or F (acts on C), as a plain matrix."""

    operator: np.ndarray

    def __post_init__(self):
        e = np.array(self.operator, dtype=complex)
        if e.ndim != 2:
            raise DimensionError(f"Measurement operator must be a matrix, got shape {e.shape}")
        excess = np.linalg.eigvalsh(e.conj().T @ e)[-1] - 1
        if excess > TOLERANCES["psd"]:
            raise InvalidProcessError(f"Measurement operator violates E†E ⪯ id by {excess:.3e}")
        e.setflags(write=False)
        object.__setattr__(self, "operator", e)

    @property
    def effect(self) -> np.ndarray:
        return self.operator.conj().T @ self.operator


@dataclass(frozen=True, eq=False)
class ChoiChannel:
    """Choi operator of a channel, on (input, output) labels."""

    n: LabeledOperator

    def __post_init__(self):
        if len(self.n.names) != 2:
            raise LabelError(f"Channel Choi operator needs (input, output) labels, got {self.n.names}")
        tol = TOLERANCES["tpm"]
        if self.n.min_eigenvalue() < -tol:
            raise InvalidProcessError(f"Channel Choi operator is not positive: {self.n.min_eigenvalue():.3e}")
        marginal = partial_trace(self.n, [self.n.names[1]])
        residual = float(np.abs(marginal.matrix - np.eye(marginal.dim)).max())
        if residual > tol:
            raise InvalidProcessError(f"Channel is not trace preserving: residual {residual:.3e}")

    @classmethod
    def from_kraus(cls, kraus: Sequence[np.ndarray], in_label, out_label) -> "ChoiChannel":
        return cls(choi_of_map(kraus, in_label, out_label))

    @property
    def input(self) -> SubsystemLabel:
        return self.n.space.subsystems[0]

    @property
    def output(self) -> SubsystemLabel:
        return self.n.space.subsystems[1]


def _check_state(rho: LabeledOperator, what: str = "state"):
    tol = TOLERANCES["tpm"]
    if not rho.is_hermitian() or rho.min_eigenvalue() < -tol or abs(rho.trace() - 1) > tol:
        raise InvalidProcessError(
            f"{what} on {rho.names} is not a density operator "
            f"(min eigenvalue {rho.min_eigenvalue():.3e}, trace {rho.trace().real:.12f})"
        )


@dataclass(frozen=True, eq=False)
class CmEnsemble:
    weights: Tuple[float, ...]
    states: Tuple[LabeledOperator, ...]
    channels: Tuple[ChoiChannel, ...]

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        if not (len(weights) == len(self.states) == len(self.channels)) or len(weights) == 0:
            raise InputError(
                f"Ensemble needs matching non-empty weights/states/channels, got "
                f"{len(weights)}/{len(self.states)}/{len(self.channels)}"
            )
        if np.any(weights < 0) or abs(weights.sum() - 1) > TOLERANCES["tpm"]:
            raise InvalidProcessError(f"Ensemble weights must be a probability vector, got {weights.tolist()}")
        for rho in self.states:
            _check_state(rho, "Ensemble state")
        object.__setattr__(self, "weights", tuple(float(x) for x in weights))
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "channels", tuple(self.channels))


@dataclass(frozen=True, eq=False)
class HeisenbergMap:
    """Φ̂(X) = Σ K† X K for Kraus operators K of the Schrödinger-picture channel."""

    kraus: Tuple[np.ndarray, ...]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return sum(k.conj().T @ x @ k for k in self.kraus)

    def unital_residual(self) -> float:
        d = self.kraus[0].shape[0]
        return float(np.abs(self(np.eye(d)) - np.eye(self.kraus[0].shape[1])).max())


def heisenberg_map(kraus: Sequence[np.ndarray]) -> HeisenbergMap:
    if not kraus:
        raise InputError("heisenberg_map needs at least one Kraus operator")
    return HeisenbergMap(tuple(np.asarray(k, dtype=complex) for k in kraus))


def tpm_correlation(w: TpmProcess, e: MeasurementOp, f: MeasurementOp) -> float:
    """Two-time correlation (M_E ⊗ (F†F)ᵀ) ⋆ W."""
    a, b, c = w.a, w.b, w.c
    if e.operator.shape != (b.dim, a.dim):
        raise DimensionError(f"E has shape {e.operator.shape}, expected {(b.dim, a.dim)}")
    if f.operator.shape[1] != c.dim:
        raise DimensionError(f"F has shape {f.operator.shape}, expected {c.dim} columns")
    m_e = choi_of_map([e.operator], a, b)
    readout = LabeledOperator(as_space(c), f.effect.T)
    return float(np.real(link_value(tensor(m_e, readout), w.w)))


def regression_correlation(rho: LabeledOperator, channel_heis: HeisenbergMap, e: MeasurementOp, f: MeasurementOp) -> float:
    """Tr[E† Φ̂(F†F) E ρ] for a unital Heisenberg-picture map Φ̂."""
    residual = channel_heis.unital_residual()
    if residual > TOLERANCES["tpm"]:
        raise InvalidProcessError(f"Heisenberg map is not unital: residual {residual:.3e}")
    ee = e.operator
    value = np.trace(ee.conj().T @ channel_heis(f.effect) @ ee @ rho.matrix)
    return float(np.real(value))


def markov_process(rho: LabeledOperator, n: ChoiChannel) -> TpmProcess:
    _check_state(rho)
    return as_tpm(tensor(rho, n.n))


def cm_mixture(ens: CmEnsemble) -> TpmProcess:
    terms = [
        tensor(rho, ch.n) * wgt for wgt, rho, ch in zip(ens.weights, ens.states, ens.channels) if wgt != 0
    ]
    w = terms[0]
    for term in terms[1:]:
        w = w + term
    return as_tpm(w)


def _check_unitary(u: np.ndarray, what: str) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionError(f"{what} must be square, got shape {u.shape}")
    residual = float(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max())
    if residual > TOLERANCES["unitary"]:
        raise InputError(f"{what} is not unitary: residual {residual:.3e}")
    return u


def evolve(u: np.ndarray, rho: LabeledOperator) -> LabeledOperator:
    return LabeledOperator(rho.space, u @ rho.matrix @ u.conj().T)


def process_from_dynamics(
    u1: np.ndarray,
    u2: np.ndarray,
    rho_s: LabeledOperator,
    rho_env: LabeledOperator,
    labels: Sequence[str] = PROCESS_LABELS,
) -> TpmProcess:
    """Process matrix of a system that shares unitary dynamics with an environment.

    The joint state after the first interval, ρ_SEnv(t) = u1 (ρ_S ⊗ ρ_Env) u1†,
    is linked over the environment with the CJ operator of the second
    interval X_{B,Env} ↦ Tr_Env[u2 X u2†]. Equivalently
    W = Σ_{μν} Tr_Env[ρ_SEnv(t)(id ⊗ |ν⟩⟨μ|)] ⊗ N_{μν} in the computational
    basis of the environment.

    Args:
        u1: unitary on S⊗Env for the first interval
        u2: unitary on S⊗Env for the second interval
        rho_s: initial system state (one label)
        rho_env: initial environment state (one label)
        labels: names for the (A, B, C) slots of the result

    Returns:
        The validated TpmProcess on `labels`.
    """
    if len(rho_s.names) != 1 or len(rho_env.names) != 1:
        raise LabelError(f"System and environment states need one label each, got {rho_s.names}, {rho_env.names}")
    _check_state(rho_s, "System state")
    _check_state(rho_env, "Environment state")
    d, d_env = rho_s.dim, rho_env.dim
    env = rho_env.space.subsystems[0]
    if env.name in labels:
        raise LabelError(f"Environment label {env.name} collides with process labels {tuple(labels)}")
    u1 = _check_unitary(u1, "u1")
    u2 = _check_unitary(u2, "u2")
    if u1.shape[0] != d * d_env or u2.shape[0] != d * d_env:
        raise DimensionError(f"Unitaries must act on dimension {d * d_env}, got {u1.shape[0]} and {u2.shape[0]}")
    a, b, c = (SubsystemLabel(name, d) for name in labels)

    initial = tensor(rho_s.relabel({rho_s.names[0]: a.name}), rho_env)
    rho_t = evolve(u1, initial)
    u2_blocks = u2.reshape(d, d_env, d * d_env)
    kraus = [u2_blocks[:, k, :] for k in range(d_env)]
    second = choi_of_map(kraus, HilbertSpace((b, env)), c)
    w = link_product(rho_t, second).reorder([a.name, b.name, c.name])
    return as_tpm(w)


def dephasing_process(
    v: Sequence[np.ndarray],
    f: Sequence[int],
    rho_s: LabeledOperator,
    rho_env: LabeledOperator,
    u1: np.ndarray,
    labels: Sequence[str] = PROCESS_LABELS,
) -> TpmProcess:
    """Process whose second interval is U = Σ_μ V_μ ⊗ |μ⟩⟨f(μ)|, which only reads the environment classically."""
    d_env = rho_env.dim
    if len(v) != d_env:
        raise DimensionError(f"Need one system unitary per environment level ({d_env}), got {len(v)}")
    if sorted(int(x) for x in f) != list(range(d_env)):
        raise InputError(f"f must be a permutation of range({d_env}), got {list(f)}")
    blocks = [_check_unitary(vm, f"V_{mu}") for mu, vm in enumerate(v)]
    u2 = np.zeros((rho_s.dim * d_env,) * 2, dtype=complex)
    for mu, vm in enumerate(blocks):
        shift = np.zeros((d_env, d_env))
        shift[mu, int(f[mu])] = 1.0
        u2 += np.kron(vm, shift)
    return process_from_dynamics(u1, u2, rho_s, rho_env, labels)


@dataclass(frozen=True, eq=False)
class Tester:
    effects: Dict[str, LabeledOperator]

    def __post_init__(self):
        if not self.effects:
            raise InputError("A tester needs at least one effect")
        names = {tuple(sorted(e.names)) for e in self.effects.values()}
        if len(names) != 1:
            raise LabelError(f"Tester effects live on different label sets: {sorted(names)}")

    @property
    def labels(self) -> Tuple[str, ...]:
        return next(iter(self.effects.values())).names


def validate_tester(effects: Dict[str, LabeledOperator], tol: float = TOLERANCES["tester"]) -> TesterReport:
    """Check positivity and the two sum rules of a tester on (A or A', B, C)."""
    tester = effects if isinstance(effects, Tester) else Tester(dict(effects))
    ops = list(tester.effects.values())
    order = ops[0].names
    if len(order) != 3:
        raise LabelError(f"Tester effects need three labels, got {order}")
    first, _, last = order
    positivity = max(0.0, max(-e.min_eigenvalue() for e in ops))
    total = ops[0]
    for e in ops[1:]:
        total = total + e
    d_c = total.space.label(last).dim
    marginal = partial_trace(total, [last]) / d_c
    marginal_c = float(np.abs((total - expand(marginal, total.space)).matrix).max())
    reduced = partial_trace(total, order[1:]) / d_c
    marginal_a = float(np.abs(reduced.matrix - np.eye(reduced.dim)).max())
    valid = positivity <= tol and marginal_c <= tol and marginal_a <= tol
    return TesterReport(
        positivity=positivity,
        marginal_c=marginal_c,
        marginal_a=marginal_a,
        ancilla_label=first,
        tolerance=tol,
        valid=valid,
    )


def tester_apply(t: Tester, w: TpmProcess, tol: float = TOLERANCES["tester"]) -> Dict[str, float]:
    """Outcome distribution E_x ⋆ W of a tester on a process."""
    report = validate_tester(t, tol)
    if not report.valid:
        raise InvalidTesterError(f"Tester fails validation: {report.model_dump()}")
    probabilities = {x: float(np.real(link_value(e, w.w))) for x, e in t.effects.items()}
    total = sum(probabilities.values())
    if min(probabilities.values()) < -tol or abs(total - 1) > tol:
        raise InvalidTesterError(f"Tester outcome distribution is not normalized: sum {total:.12f}")
    return probabilities
