"""Truncated single-mode Jaynes-Cummings dynamics and the heat-flow inequality.

The qubit (index 0 = |g⟩, 1 = |e⟩) couples resonantly to one bosonic mode
in the rotating frame through H = i g (σ ⊗ b† − σ† ⊗ b), σ = |g⟩⟨e|. The
qubit always starts excited.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.linalg import expm

from config.tolerances import TOLERANCES

from .bath import thermal_cutoff, thermal_weights
from .errors import CutoffLeakageError, InputError
from .memory import EntanglementRetriever
from .process import PROCESS_LABELS, TpmProcess, process_from_dynamics
from .tensor import LabeledOperator, SubsystemLabel, as_space, tensor

logger = logging.getLogger(__name__)

SYSTEM_LABEL = "S"
ENV_LABEL = "E"
SIGMA = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_Z = np.diag([-1.0, 1.0]).astype(complex)


@dataclass(frozen=True)
class Vacuum:
    def levels(self) -> int:
        return 3


@dataclass(frozen=True)
class Fock:
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise InputError(f"Fock number must be nonnegative, got {self.n}")

    def levels(self) -> int:
        return self.n + 3


@dataclass(frozen=True)
class Thermal:
    beta: float
    cutoff: Optional[int] = None

    def __post_init__(self):
        if not self.beta > 0:
            raise InputError(f"Inverse temperature must be positive, got {self.beta}")

    def levels(self, omega0: float = 1.0) -> int:
        n_max = self.cutoff if self.cutoff is not None else thermal_cutoff(self.beta, omega0)
        return n_max + 3


EnvState = Union[Vacuum, Fock, Thermal]


@dataclass(frozen=True)
class JcModel:
    g: float
    env: EnvState = field(default_factory=Vacuum)
    omega0: float = 1.0
    fock_cutoff: Optional[int] = None

    def __post_init__(self):
        if not self.g > 0:
            raise InputError(f"Coupling g must be positive, got {self.g}")
        if self.fock_cutoff is not None and self.fock_cutoff < 2:
            raise InputError(f"Fock cutoff must keep at least two levels, got {self.fock_cutoff}")

    @property
    def levels(self) -> int:
        """Number of Fock levels kept."""
        if self.fock_cutoff is not None:
            return self.fock_cutoff
        if isinstance(self.env, Thermal):
            return self.env.levels(self.omega0)
        return self.env.levels()

    def annihilation(self) -> np.ndarray:
        return np.diag(np.sqrt(np.arange(1, self.levels)), k=1).astype(complex)

    def initial_env(self) -> LabeledOperator:
        d = self.levels
        label = SubsystemLabel(ENV_LABEL, d)
        populations = np.zeros(d)
        if isinstance(self.env, Vacuum):
            populations[0] = 1.0
        elif isinstance(self.env, Fock):
            if self.env.n >= d:
                raise CutoffLeakageError(f"Fock state {self.env.n} does not fit in {d} levels")
            populations[self.env.n] = 1.0
        else:
            n_max = self.env.cutoff if self.env.cutoff is not None else thermal_cutoff(self.env.beta, self.omega0)
            if n_max >= d:
                raise CutoffLeakageError(f"Thermal cutoff {n_max} does not fit in {d} levels")
            populations[: n_max + 1] = thermal_weights(self.env.beta, n_max, self.omega0)
        return LabeledOperator(as_space(label), np.diag(populations).astype(complex))

    def initial_system(self) -> LabeledOperator:
        return LabeledOperator(as_space(SubsystemLabel(SYSTEM_LABEL, 2)), np.diag([0.0, 1.0]).astype(complex))


def jc_hamiltonian(model: JcModel) -> np.ndarray:
    b = model.annihilation()
    coupling = np.kron(SIGMA, b.conj().T)
    return 1j * model.g * (coupling - coupling.conj().T)


def jc_unitary(model: JcModel, duration: float) -> np.ndarray:
    return expm(-1j * jc_hamiltonian(model) * duration)


def _evolved_state(model: JcModel, t: float) -> np.ndarray:
    initial = tensor(model.initial_system(), model.initial_env()).matrix
    u = jc_unitary(model, t)
    return u @ initial @ u.conj().T


def _check_leakage(model: JcModel, rho_t: np.ndarray):
    d = model.levels
    populations = np.real(np.diag(rho_t)).reshape(2, d).sum(axis=0)
    leaked = float(populations[d - 1 :].sum())
    if leaked > TOLERANCES["leakage"]:
        logger.error(f"Population {leaked:.2e} reached the top Fock level {d - 1}")
        raise CutoffLeakageError(f"Fock cutoff {d} too small: top-level population {leaked:.2e}")


def jc_process_matrix(model: JcModel, t: float, tau: float) -> TpmProcess:
    """TPM process of the qubit probed at t and t + τ."""
    if t < 0 or tau < 0:
        raise InputError(f"Times must be nonnegative, got t={t}, tau={tau}")
    _check_leakage(model, _evolved_state(model, t))
    return process_from_dynamics(
        jc_unitary(model, t),
        jc_unitary(model, tau),
        model.initial_system(),
        model.initial_env(),
        PROCESS_LABELS,
    )


def _bell_retriever(sign: float) -> EntanglementRetriever:
    a, b, c = (SubsystemLabel(name, 2) for name in PROCESS_LABELS)
    psi = np.array([0, 1, sign, 0], dtype=complex) / np.sqrt(2)
    pair = LabeledOperator(as_space([a, c]), 2 * np.outer(psi, psi.conj()))
    ground = LabeledOperator(as_space(b), np.diag([1.0, 0.0]).astype(complex))
    theta = tensor(pair, ground).reorder(PROCESS_LABELS)
    return EntanglementRetriever(theta, ground)


def theta_star() -> EntanglementRetriever:
    """Θ* = 2|g⟩⟨g|_B ⊗ |Ψ⁻⟩⟨Ψ⁻|_AC with η = |g⟩⟨g|."""
    return _bell_retriever(-1.0)


def theta_triplet() -> EntanglementRetriever:
    """Companion retriever with |Ψ⁺⟩ in place of |Ψ⁻⟩."""
    return _bell_retriever(1.0)


def _operator_function(n: np.ndarray, fn) -> np.ndarray:
    vals, vecs = np.linalg.eigh(n)
    return vecs @ np.diag(fn(np.clip(vals, 0, None))) @ vecs.conj().T


def _sinc(root: np.ndarray, tau: float) -> np.ndarray:
    """sin(x τ)/x, continued to τ at x = 0."""
    small = np.abs(root) * tau < 1e-4
    safe = np.where(small, 1.0, root)
    series = tau - root**2 * tau**3 / 6 + root**4 * tau**5 / 120
    return np.where(small, series, np.sin(root * tau) / safe)


def heat_inequality_lhs(model: JcModel, t: float, tau: float) -> float:
    """Left side of the classical heat-flow bound, in units of ℏω0/2.

    Evaluates 4 Re⟨N^{-1/2} sin(√N τ) B† σ cos(√N τ)⟩ + ⟨cos(2√N τ) σ_z⟩ in the
    state at time t, with B = g b and N = B†B. Classical memory bounds it by 1.
    """
    rho_t = _evolved_state(model, t)
    _check_leakage(model, rho_t)
    b = model.annihilation()
    number = model.g**2 * b.conj().T @ b
    root_sinc = _operator_function(number, lambda x: _sinc(np.sqrt(x), tau))
    root_cos = _operator_function(number, lambda x: np.cos(np.sqrt(x) * tau))
    double_cos = _operator_function(number, lambda x: np.cos(2 * np.sqrt(x) * tau))
    eye = np.eye(2)
    exchange = np.kron(eye, root_sinc) @ np.kron(SIGMA, model.g * b.conj().T) @ np.kron(eye, root_cos)
    energy = np.kron(SIGMA_Z, double_cos)
    value = 4 * np.real(np.trace(rho_t @ exchange)) + np.real(np.trace(rho_t @ energy))
    return float(value)


def system_energy(model: JcModel, t: float) -> float:
    """⟨σ_z⟩ at time t, in units of ℏω0/2."""
    rho_t = _evolved_state(model, t)
    return float(np.real(np.trace(rho_t @ np.kron(SIGMA_Z, np.eye(model.levels)))))
