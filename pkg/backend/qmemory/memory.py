"""Quantum-memory detection on TPM processes.

Entanglement retrievers (ER) are pairs (Θ, η) with Θ ⪰ 0 and
Tr_A Θ ⪯ η ⊗ id_C. Their value Θ ⋆ W never exceeds 1 on classical-memory
(CM) processes, so the maximal value 𝓔(W) > 1 certifies quantum memory.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config.seesaw_defaults import SEESAW_DEFAULTS
from config.tolerances import TOLERANCES

from .errors import (
    FrameError,
    InputError,
    InvalidRetrieverError,
    InvalidTesterError,
    LabelError,
    NumericError,
    WitnessRejectedError,
)
from .frames import OperatorFrame
from .process import (
    ChoiChannel,
    CmEnsemble,
    MeasurementOp,
    TpmProcess,
    Tester,
    cm_mixture,
    markov_process,
    tpm_correlation,
    validate_tester,
)
from .sampling import random_channel, random_cm_process, random_tpm
from .sdp import SdpProblem, solve
from .tensor import (
    LabeledOperator,
    SubsystemLabel,
    as_space,
    choi_of_map,
    hermitian_basis,
    identity,
    kraus_of_choi,
    link_product,
    link_value,
    partial_trace,
    partial_transpose,
    tensor,
)

logger = logging.getLogger(__name__)

PAULIS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
PROTOCOL_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class EntanglementRetriever:
    theta: LabeledOperator
    eta: LabeledOperator

    def __post_init__(self):
        if len(self.theta.names) != 3:
            raise LabelError(f"Θ needs three labels (A, B, C), got {self.theta.names}")
        if self.eta.names != (self.theta.names[1],):
            raise LabelError(f"η must live on {self.theta.names[1]}, got {self.eta.names}")

    @property
    def labels(self) -> Tuple[str, str, str]:
        return self.theta.names

    @property
    def d_a(self) -> int:
        return self.theta.dims[0]

    def domination_gap(self) -> LabeledOperator:
        """η ⊗ id_C − Tr_A Θ on (B, C)."""
        a, b, c = self.theta.space.subsystems
        bound = tensor(self.eta, identity(c))
        return bound - partial_trace(self.theta, [a.name])

    def residuals(self) -> Dict[str, float]:
        return {
            "theta_positivity": max(0.0, -self.theta.min_eigenvalue()),
            "eta_positivity": max(0.0, -self.eta.min_eigenvalue()),
            "eta_trace": abs(self.eta.trace() - 1),
            "domination": max(0.0, -self.domination_gap().min_eigenvalue()),
        }

    def validate(self, tol: float = TOLERANCES["psd"]) -> "EntanglementRetriever":
        residuals = self.residuals()
        if max(residuals.values()) > tol or not self.theta.is_hermitian():
            raise InvalidRetrieverError(f"Not an entanglement retriever: {residuals}")
        return self

    def value(self, w: TpmProcess) -> float:
        return float(np.real(link_value(self.theta, w.w)))


def _theta_operator(theta: Union[EntanglementRetriever, LabeledOperator]) -> LabeledOperator:
    return theta.theta if isinstance(theta, EntanglementRetriever) else theta


def _retriever_problem(w: TpmProcess) -> SdpProblem:
    da, db, dc = w.dims
    problem = SdpProblem()
    problem.add_block("theta", da * db * dc, objective=w.w.matrix.T)
    problem.add_block("eta", db)
    problem.add_block("slack", db * dc)
    problem.add_constraint({"eta": np.eye(db)}, 1.0, "trace eta")
    for k, h in enumerate(hermitian_basis(db * dc)):
        h_b = np.trace(h.reshape(db, dc, db, dc), axis1=1, axis2=3)
        problem.add_constraint(
            {"eta": h_b, "theta": -np.kron(np.eye(da), h), "slack": -h}, 0.0, f"domination {k}"
        )
    return problem


def retriever_value(w: TpmProcess, tol: float = 1e-8) -> Tuple[float, EntanglementRetriever]:
    """𝓔(W): the largest ER value on W, with an optimal retriever.

    Args:
        w: a validated process
        tol: solver tolerance

    Returns:
        (value, retriever) where value lies in [0, d_A]
    """
    solution = solve(_retriever_problem(w), tol=tol).require_optimal("ER program")
    theta = LabeledOperator(w.w.space, solution.primal["theta"])
    eta = LabeledOperator(as_space(w.b), solution.primal["eta"])
    value = float(np.real(link_value(theta, w.w)))
    logger.info(f"ER value {value:.10f} after {solution.iterations} iterations")
    return value, EntanglementRetriever(theta.hermitian_part(), eta.hermitian_part())


def memory_dimension_bound(value: float) -> int:
    """Smallest memory dimension d compatible with an ER value (value ≤ d)."""
    if value < -1e-12:
        raise InputError(f"ER value must be nonnegative, got {value}")
    return max(1, int(np.ceil(value - TOLERANCES["detection_margin"])))


@dataclass(frozen=True, eq=False)
class SeesawResult:
    value: float
    ensemble: CmEnsemble
    samples: Tuple[TpmProcess, ...] = ()

    @property
    def process(self) -> TpmProcess:
        return cm_mixture(self.ensemble)


def _project_channel(n: np.ndarray, b: SubsystemLabel, c: SubsystemLabel) -> ChoiChannel:
    """Nearest-by-congruence exact channel to a solver output."""
    vals, vecs = np.linalg.eigh((n + n.conj().T) / 2)
    n = vecs @ np.diag(np.clip(vals, 0, None)) @ vecs.conj().T
    marginal = np.trace(n.reshape(b.dim, c.dim, b.dim, c.dim), axis1=1, axis2=3)
    mvals, mvecs = np.linalg.eigh((marginal + marginal.conj().T) / 2)
    fix = np.kron(mvecs @ np.diag(mvals ** -0.5) @ mvecs.conj().T, np.eye(c.dim))
    return ChoiChannel(LabeledOperator(as_space([b, c]), fix @ n @ fix))


def _best_channel(x: LabeledOperator) -> ChoiChannel:
    """Channel N on (B, C) maximizing X ⋆ N."""
    b, c = x.space.subsystems
    problem = SdpProblem()
    problem.add_block("n", b.dim * c.dim, objective=x.matrix.T)
    for k, h in enumerate(hermitian_basis(b.dim)):
        problem.add_constraint({"n": np.kron(h, np.eye(c.dim))}, float(np.trace(h).real), f"trace preserving {k}")
    solution = solve(problem).require_optimal("channel step")
    return _project_channel(solution.primal["n"], b, c)


def _best_state(o: LabeledOperator) -> LabeledOperator:
    """Pure state ρ maximizing ρ ⋆ O."""
    _, vecs = np.linalg.eigh(o.hermitian_part().matrix.T)
    v = vecs[:, -1]
    return LabeledOperator(o.space, np.outer(v, v.conj()))


def _seesaw_atom(k_op: LabeledOperator, rng: np.random.Generator, max_sweeps: int, tol: float):
    a, b, c = k_op.space.subsystems
    channel = random_channel(b, c, rng)
    best = (-np.inf, None, None)
    for _ in range(max_sweeps):
        rho = _best_state(link_product(k_op, channel.n))
        channel = _best_channel(link_product(k_op, rho))
        value = float(np.real(link_value(k_op, tensor(rho, channel.n))))
        improved = value - best[0]
        if value > best[0]:
            best = (value, rho, channel)
        if improved < tol:
            break
    return best


def seesaw_maximize(
    k_op: LabeledOperator,
    ensemble_size: int = SEESAW_DEFAULTS["ensemble_size"],
    restarts: int = SEESAW_DEFAULTS["restarts"],
    seed: Optional[int] = None,
    max_sweeps: int = SEESAW_DEFAULTS["max_sweeps"],
    tol: float = SEESAW_DEFAULTS["improvement_tol"],
) -> SeesawResult:
    """Lower bound on max_{Ω ∈ CM} K ⋆ Ω by alternating state and channel optimizations.

    The objective is linear in the ensemble weights, so each atom is optimized
    from its own random start and the best atom carries the full weight.
    Atom (r, λ) draws from a seed stream keyed by (restart, index), so larger
    ensembles explore a superset of the starts of smaller ones.
    """
    if ensemble_size < 1 or restarts < 1:
        raise InputError(f"ensemble_size and restarts must be positive, got {ensemble_size}, {restarts}")
    atoms = []
    for r in range(restarts):
        for lam in range(ensemble_size):
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r, lam)))
            atoms.append(_seesaw_atom(k_op, rng, max_sweeps, tol))
    best = max(range(len(atoms)), key=lambda i: atoms[i][0])
    order = [best] + [i for i in range(len(atoms)) if i != best][: ensemble_size - 1]
    ensemble = CmEnsemble(
        tuple(1.0 if i == best else 0.0 for i in order),
        tuple(atoms[i][1] for i in order),
        tuple(atoms[i][2] for i in order),
    )
    samples = tuple(markov_process(rho, ch) for _, rho, ch in atoms)
    logger.info(f"See-saw over {len(atoms)} atoms: best value {atoms[best][0]:.10f}")
    return SeesawResult(atoms[best][0], ensemble, samples)


def classical_threshold_seesaw(
    theta: Union[EntanglementRetriever, LabeledOperator],
    ensemble_size: int = SEESAW_DEFAULTS["ensemble_size"],
    restarts: int = SEESAW_DEFAULTS["restarts"],
    seed: Optional[int] = None,
) -> SeesawResult:
    """Feasible lower bound λ* on max_{Ω ∈ CM} Θ ⋆ Ω."""
    return seesaw_maximize(_theta_operator(theta), ensemble_size, restarts, seed)


def relaxation_upper_bound(theta: Union[EntanglementRetriever, LabeledOperator], tol: float = 1e-8) -> float:
    """Upper bound on λ*: max Θ ⋆ Ω over TPM Ω with positive partial transpose on A."""
    op = _theta_operator(theta)
    a, b, c = op.space.subsystems
    n = op.dim
    problem = SdpProblem()
    problem.add_block("omega", n, objective=op.matrix.T)
    problem.add_block("pt", n)
    problem.add_constraint({"omega": np.eye(n)}, float(b.dim), "trace")
    for k, h in enumerate(hermitian_basis(a.dim * b.dim)):
        h_a = np.trace(h.reshape(a.dim, b.dim, a.dim, b.dim), axis1=1, axis2=3)
        coefficient = b.dim * np.kron(h, np.eye(c.dim)) - np.kron(h_a, np.eye(b.dim * c.dim))
        problem.add_constraint({"omega": coefficient}, 0.0, f"causality {k}")
    for k, h in enumerate(hermitian_basis(n)):
        h_pt = partial_transpose(LabeledOperator(op.space, h), [a.name]).matrix
        problem.add_constraint({"omega": h_pt, "pt": -h}, 0.0, f"partial transpose {k}")
    solution = solve(problem, tol=tol).require_optimal("relaxation bound")
    return solution.value


def _sample_like(op: LabeledOperator, rng: np.random.Generator) -> TpmProcess:
    dims = op.dims
    if len(set(dims)) == 1:
        return random_tpm(rng, dims[0], 2, labels=op.names)
    return random_cm_process(rng, dims=dims, labels=op.names)


def check_positive_on_tpm(z0: LabeledOperator, battery: int = 50, seed: Optional[int] = None) -> float:
    """Smallest value of Z0 ⋆ W over a random TPM battery."""
    rng = np.random.default_rng(seed)
    worst = min(float(np.real(link_value(z0, _sample_like(z0, rng).w))) for _ in range(battery))
    if worst < -TOLERANCES["psd"]:
        raise WitnessRejectedError(f"Z0 is negative on a sampled TPM: {worst:.3e}")
    return worst


@dataclass(frozen=True, eq=False)
class KappaEstimate:
    value: float
    lower: Optional[float]
    upper: Optional[float]
    sign_change: bool
    samples: Tuple[TpmProcess, ...] = ()
    heuristic: bool = True


def _dinkelbach(z0, delta, start: TpmProcess, ensemble_size, restarts, seed, samples: list) -> float:
    def ratio(omega: TpmProcess) -> float:
        return float(np.real(link_value(z0, omega.w)) / np.real(link_value(delta, omega.w)))

    value = ratio(start)
    for it in range(SEESAW_DEFAULTS["dinkelbach_iterations"]):
        step = seesaw_maximize(delta * value - z0, ensemble_size, restarts, None if seed is None else seed + it + 1)
        samples.extend(step.samples)
        if step.value <= 1e-10 * (1 + abs(value)):
            break
        candidate = step.process
        new_value = ratio(candidate)
        logger.info(f"Dinkelbach step {it}: kappa {value:.10f} -> {new_value:.10f}")
        value = new_value
    return value


def kappa(
    theta: Union[EntanglementRetriever, LabeledOperator],
    z0: LabeledOperator,
    ensemble_size: int = SEESAW_DEFAULTS["ensemble_size"],
    restarts: int = SEESAW_DEFAULTS["restarts"],
    seed: Optional[int] = None,
) -> KappaEstimate:
    """See-saw estimate of the witness offset κ(Θ, Z0).

    Z0 ⋆ Ω − κ D(Ω) ≥ 0 with D(Ω) = 1/d_A − Θ ⋆ Ω must hold on CM. Samples
    with D > 0 bound κ from above, samples with D < 0 from below. Both ends
    are located by Dinkelbach iterations. The lower end is returned when a
    D < 0 region exists, since only a negative κ can make the witness detect.
    """
    op = _theta_operator(theta)
    z0 = z0.reorder(op.names)
    check_positive_on_tpm(z0, seed=seed)
    d_a, d_b = op.dims[0], op.dims[1]
    delta = identity(op.space) / (d_a * d_b) - op

    samples: List[TpmProcess] = []
    high = seesaw_maximize(op, ensemble_size, restarts, seed)
    low = seesaw_maximize(-op, ensemble_size, restarts, None if seed is None else seed + 1000)
    samples.extend(high.samples + low.samples)
    denominators = [float(np.real(link_value(delta, s.w))) for s in samples]
    eps = 1e-9
    lower = upper = None
    if min(denominators) < -eps:
        start = samples[int(np.argmin(denominators))]
        lower = _dinkelbach(z0, delta, start, ensemble_size, restarts, seed, samples)
    if max(denominators) > eps:
        start = samples[int(np.argmax(denominators))]
        upper = _dinkelbach(z0, delta, start, ensemble_size, restarts, None if seed is None else seed + 2000, samples)
    if lower is None and upper is None:
        raise WitnessRejectedError("kappa undefined on sampled region: the denominator vanishes on every sample")
    if lower is not None and upper is not None:
        if lower > upper + 1e-9:
            raise WitnessRejectedError(
                f"kappa undefined on sampled region: lower end {lower:.6f} exceeds upper end {upper:.6f}"
            )
        logger.warning(
            f"Denominator changes sign over the sampled CM set; feasible kappa interval [{lower:.6f}, {upper:.6f}]"
        )
    value = lower if lower is not None else upper
    logger.info(f"Heuristic kappa estimate {value:.10f}")
    return KappaEstimate(
        value=value,
        lower=lower,
        upper=upper,
        sign_change=lower is not None and upper is not None,
        samples=tuple(samples),
    )


@dataclass(frozen=True, eq=False)
class MemoryWitness:
    z: LabeledOperator
    theta: LabeledOperator
    z0: LabeledOperator
    kappa: float
    battery_minimum: float = 0.0

    def value(self, w: TpmProcess) -> float:
        return float(np.real(link_value(self.z, w.w)))

    def reproduction_error(self) -> float:
        d_a, d_b = self.theta.dims[0], self.theta.dims[1]
        expected = self.z0 + (self.theta - identity(self.theta.space) / (d_a * d_b)) * self.kappa
        return float(np.abs((self.z - expected).matrix).max())


def build_witness(
    theta: Union[EntanglementRetriever, LabeledOperator],
    z0: LabeledOperator,
    kappa_value: Union[float, KappaEstimate],
    battery_size: int = SEESAW_DEFAULTS["battery_size"],
    seed: Optional[int] = None,
    extra_samples: Sequence[TpmProcess] = (),
) -> MemoryWitness:
    """Assemble Z = Z0 + κ(Θ − id/(d_A d_B)) and check it on a CM battery."""
    op = _theta_operator(theta)
    z0 = z0.reorder(op.names)
    samples = list(extra_samples)
    if isinstance(kappa_value, KappaEstimate):
        samples.extend(kappa_value.samples)
        kappa_value = kappa_value.value
    d_a, d_b = op.dims[0], op.dims[1]
    z = z0 + (op - identity(op.space) / (d_a * d_b)) * kappa_value
    rng = np.random.default_rng(seed)
    samples.extend(random_cm_process(rng, dims=op.dims, labels=op.names) for _ in range(battery_size))
    values = [float(np.real(link_value(z, s.w))) for s in samples]
    worst = min(values) if values else 0.0
    if worst < -TOLERANCES["witness_battery"]:
        raise WitnessRejectedError(
            f"Witness with kappa={kappa_value:.6f} is negative on a classical-memory sample: {worst:.3e}"
        )
    return MemoryWitness(z=z, theta=op, z0=z0, kappa=float(kappa_value), battery_minimum=worst)


@dataclass(frozen=True, eq=False)
class CorrelationDecomposition:
    """Z = Σ_ij d_ij M_i ⊗ Q_j with M_i realized by Kraus operators E_γ and Q_j = (F_j†F_j)ᵀ."""

    coefficients: np.ndarray
    measurements: Tuple[Tuple[MeasurementOp, ...], ...]
    readouts: Tuple[MeasurementOp, ...]
    labels: Tuple[str, str, str]

    def terms(self, tol: float = 0.0):
        for i, row in enumerate(self.coefficients):
            for j, d in enumerate(row):
                if abs(d) > tol:
                    yield float(d), self.measurements[i], self.readouts[j]

    def correlation(self, w: TpmProcess, i: int, j: int) -> float:
        return sum(tpm_correlation(w, e, self.readouts[j]) for e in self.measurements[i])

    def evaluate(self, w: TpmProcess) -> float:
        total = 0.0
        for i, row in enumerate(self.coefficients):
            for j, d in enumerate(row):
                if d != 0:
                    total += d * self.correlation(w, i, j)
        return float(total)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    return vecs @ np.diag(np.sqrt(np.clip(vals, 0, None))) @ vecs.conj().T


def witness_to_correlations(z: LabeledOperator, frame_ab: OperatorFrame, frame_c: OperatorFrame) -> CorrelationDecomposition:
    """Expand a witness into two-time correlations through dual frames.

    Args:
        z: Hermitian operator on A⊗B⊗C
        frame_ab: informationally complete frame on (A, B)
        frame_c: informationally complete frame on C

    Returns:
        CorrelationDecomposition with d_ij = Tr[(M̃_i ⊗ Q̃_j) Z]
    """
    for frame in (frame_ab, frame_c):
        if len(frame) < frame.space.dim**2:
            raise FrameError(f"Frame on {frame.space.names} has {len(frame)} elements, not informationally complete")
    names = frame_ab.space.names + frame_c.space.names
    if len(names) != 3:
        raise LabelError(f"Frames must cover (A, B) and C, got {names}")
    z = z.reorder(names)
    n_ab, n_c = frame_ab.space.dim, frame_c.space.dim
    dual_ab = np.array([d.matrix for d in frame_ab.duals])
    dual_c = np.array([d.matrix for d in frame_c.duals])
    zt = z.matrix.reshape(n_ab, n_c, n_ab, n_c)
    coefficients = np.real(np.einsum("iba,jdc,acbd->ij", dual_ab, dual_c, zt))
    a_label = frame_ab.space.subsystems[0]
    measurements = tuple(
        tuple(MeasurementOp(k) for k in kraus_of_choi(m, a_label)) for m in frame_ab.elements
    )
    readouts = tuple(MeasurementOp(_psd_sqrt(q.matrix.T)) for q in frame_c.elements)
    return CorrelationDecomposition(coefficients, measurements, readouts, names)


@dataclass(frozen=True)
class ProtocolResult:
    per_letter: Dict[str, float]
    inconclusive: Dict[str, float]
    average: float
    retriever_value: float


def discrimination_protocol(theta: EntanglementRetriever, w: TpmProcess) -> ProtocolResult:
    """Pauli-encoding discrimination game decoded by the tester built from Θ.

    Letter x is encoded by the Pauli unitary U_x on A and decoded with
    effects E_x = F_x ⋆ Θ, F_x the Bell projector paired with U_x, plus the
    inconclusive effect E_∅ = id ⊗ η ⊗ id − Σ_x E_x.
    """
    if w.dims[0] != 2:
        raise InputError(f"The discrimination protocol needs a qubit A, got dimension {w.dims[0]}")
    theta_op = theta.theta.relabel(dict(zip(theta.labels, w.labels)))
    eta = theta.eta.relabel({theta.labels[1]: w.labels[1]})
    a, b, c = w.a, w.b, w.c
    ancilla = SubsystemLabel(f"{a.name}'", 2)
    if ancilla.name in w.labels:
        raise LabelError(f"Ancilla label {ancilla.name} collides with process labels {w.labels}")

    effects, encoded = {}, {}
    for x, u in PAULIS.items():
        phi = u.conj().T.reshape(-1) / np.sqrt(2)
        bell = LabeledOperator(as_space([a, ancilla]), np.outer(phi, phi.conj()))
        effects[x] = link_product(bell, theta_op)
        encoded[x] = link_product(w.w, choi_of_map([u], a, ancilla))
    total = effects["I"]
    for x in ("X", "Y", "Z"):
        total = total + effects[x]
    normalization = tensor(identity(ancilla), eta, identity(c))
    effects["none"] = normalization - total
    report = validate_tester(Tester(effects), PROTOCOL_TOL)
    if not report.valid:
        raise InvalidTesterError(f"Decoding tester fails validation: {report.model_dump()}")

    per_letter = {x: float(np.real(link_value(effects[x], encoded[x]))) for x in PAULIS}
    inconclusive = {x: float(np.real(link_value(effects["none"], encoded[x]))) for x in PAULIS}
    value = float(np.real(link_value(theta_op, w.w)))
    residual = abs(sum(per_letter.values()) - len(PAULIS) / w.dims[0] * value)
    if residual > 1e-8 * (1 + abs(value)):
        raise NumericError(f"Protocol identity violated: residual {residual:.3e}")
    return ProtocolResult(
        per_letter=per_letter,
        inconclusive=inconclusive,
        average=sum(per_letter.values()) / len(PAULIS),
        retriever_value=value,
    )
