"""Dense semidefinite programming for small complex-Hermitian block problems.

Problems are stated in the maximization form

    max  Σ_b Tr(C_b X_b)
    s.t. Σ_b Tr(A_ib X_b) = b_i,   X_b ⪰ 0,

with Hermitian data. Every complex block is realified and the real problem
is solved by an infeasible primal-dual interior-point method with the HKM
search direction.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import solve_triangular

from config.solver_defaults import SOLVER_DEFAULTS
from config.tolerances import TOLERANCES

from .errors import DimensionError, InputError, NotHermitianError, SolverError

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
MAX_ITERATIONS = "max-iterations"
INFEASIBLE_SUSPECTED = "infeasible-suspected"


def realify(h: np.ndarray, tol: float = TOLERANCES["hermitian"]) -> np.ndarray:
    """Real symmetric embedding [[Re H, −Im H], [Im H, Re H]] of a Hermitian matrix."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionError(f"realify needs a square matrix, got shape {h.shape}")
    residual = float(np.abs(h - h.conj().T).max()) if h.size else 0.0
    if residual > tol:
        raise NotHermitianError(f"realify needs a Hermitian matrix: residual {residual:.3e}")
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def complexify(x: np.ndarray) -> np.ndarray:
    """Inverse of realify on the symmetric part of a 2n x 2n real matrix."""
    n = x.shape[0] // 2
    p = (x[:n, :n] + x[n:, n:]) / 2
    q = (x[n:, :n] - x[:n, n:]) / 2
    return p + 1j * q


@dataclass
class SdpConstraint:
    coefficients: Dict[str, np.ndarray]
    rhs: float
    label: str = ""


@dataclass
class SdpProblem:
    blocks: List[Tuple[str, int]] = field(default_factory=list)
    objective: Dict[str, np.ndarray] = field(default_factory=dict)
    constraints: List[SdpConstraint] = field(default_factory=list)

    def add_block(self, name: str, dim: int, objective: Optional[np.ndarray] = None):
        if name in self.block_dims:
            raise InputError(f"Block {name} already exists")
        self.blocks.append((name, int(dim)))
        if objective is not None:
            self.objective[name] = np.asarray(objective, dtype=complex)

    def add_constraint(self, coefficients: Dict[str, np.ndarray], rhs: float, label: str = ""):
        self.constraints.append(
            SdpConstraint({k: np.asarray(v, dtype=complex) for k, v in coefficients.items()}, float(rhs), label)
        )

    @property
    def block_dims(self) -> Dict[str, int]:
        return dict(self.blocks)

    def validate(self):
        dims = self.block_dims
        for name, c in list(self.objective.items()) + [
            (n, a) for con in self.constraints for n, a in con.coefficients.items()
        ]:
            if name not in dims:
                raise InputError(f"Unknown block {name}. Available blocks: {', '.join(dims)}")
            if c.shape != (dims[name], dims[name]):
                raise DimensionError(f"Data for block {name} has shape {c.shape}, expected {(dims[name],) * 2}")
            residual = float(np.abs(c - c.conj().T).max())
            if residual > TOLERANCES["hermitian"]:
                raise NotHermitianError(f"Data for block {name} is not Hermitian: residual {residual:.3e}")
        dof = sum(d * d for d in dims.values())
        if len(self.constraints) > dof:
            raise InputError(f"{len(self.constraints)} constraints exceed {dof} real degrees of freedom")


@dataclass(frozen=True)
class SdpIterate:
    """Diagnostics of one interior-point iterate, in the maximization convention.

    dual_objective − primal_objective = complementarity + infeasibility_term,
    with complementarity = ⟨X, Z⟩ ≥ 0 for the positive definite iterates X and Z.
    The plain objective gap is nonnegative once both residuals vanish.
    """

    iteration: int
    primal_objective: float
    dual_objective: float
    complementarity: float
    infeasibility_term: float
    primal_infeasibility: float
    dual_infeasibility: float


@dataclass
class SdpSolution:
    status: str
    primal: Dict[str, np.ndarray]
    dual: np.ndarray
    dual_slack: Dict[str, np.ndarray]
    primal_objective: float
    dual_objective: float
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    history: List[SdpIterate] = field(default_factory=list)

    @property
    def value(self) -> float:
        return self.primal_objective

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def require_optimal(self, what: str = "SDP") -> "SdpSolution":
        if not self.optimal:
            raise SolverError(
                f"{what} finished with status {self.status} after {self.iterations} iterations "
                f"(gap {self.gap:.2e}, residuals {self.primal_residual:.2e}/{self.dual_residual:.2e})"
            )
        return self


class _RealProblem:
    """Realified, constraint-reduced problem in minimization form."""

    def __init__(self, problem: SdpProblem):
        self.names = [n for n, _ in problem.blocks]
        self.dims = [2 * d for _, d in problem.blocks]
        self.c = [
            -realify(problem.objective.get(n, np.zeros((d, d)))) / 2 for n, d in problem.blocks
        ]
        m = len(problem.constraints)
        a_full = [np.zeros((m, k, k)) for k in self.dims]
        for i, con in enumerate(problem.constraints):
            for j, name in enumerate(self.names):
                if name in con.coefficients:
                    a_full[j][i] = realify(con.coefficients[name]) / 2
        b_full = np.array([con.rhs for con in problem.constraints], dtype=float)
        self.basis, self.inconsistency = self._reduce(a_full, b_full)
        self.a = [np.einsum("mr,mij->rij", self.basis, a) for a in a_full]
        self.b = self.basis.T @ b_full
        self.b_full = b_full
        self.a_full = a_full

    @staticmethod
    def _reduce(a_full, b_full):
        m = len(b_full)
        if m == 0:
            return np.zeros((0, 0)), 0.0
        stacked = np.hstack([a.reshape(m, -1) for a in a_full])
        u, s, _ = np.linalg.svd(stacked, full_matrices=False)
        rank = int(np.sum(s > 1e-10 * max(1.0, s[0])))
        basis = u[:, :rank]
        inconsistency = float(np.linalg.norm(b_full - basis @ (basis.T @ b_full)))
        if rank < m:
            logger.info(f"Removed {m - rank} linearly dependent constraints ({m} -> {rank})")
        return basis, inconsistency

    def op_a(self, xs):
        out = np.zeros(len(self.b))
        for a, x in zip(self.a, xs):
            out += np.einsum("mij,ij->m", a, x)
        return out

    def op_at(self, y):
        return [np.einsum("m,mij->ij", y, a) for a in self.a]


def _inner(xs, ys) -> float:
    return float(sum(np.sum(x * y) for x, y in zip(xs, ys)))


def _sym(x):
    return (x + x.T) / 2


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest alpha with x + alpha dx ⪰ 0 (inf when dx keeps x positive)."""
    try:
        lower = np.linalg.cholesky(x)
        t = solve_triangular(lower, dx, lower=True)
        t = solve_triangular(lower, t.T, lower=True)
        lam = np.linalg.eigvalsh(_sym(t))[0]
        return np.inf if lam >= 0 else -1.0 / lam
    except np.linalg.LinAlgError:
        lo, hi = 0.0, 1.0
        if np.linalg.eigvalsh(_sym(x + dx))[0] >= 0:
            return 1.0
        for _ in range(40):
            mid = (lo + hi) / 2
            if np.linalg.eigvalsh(_sym(x + mid * dx))[0] >= 0:
                lo = mid
            else:
                hi = mid
        return lo


def solve(
    problem: SdpProblem,
    tol: float = SOLVER_DEFAULTS["tol"],
    max_iter: int = SOLVER_DEFAULTS["max_iter"],
) -> SdpSolution:
    """Solve an SdpProblem (maximization) by a primal-dual interior-point method.

    Args:
        problem: the block SDP in maximization form
        tol: bound on relative gap, primal and dual residuals for status "optimal"
        max_iter: iteration cap

    Returns:
        SdpSolution with complex primal blocks, the dual vector for the original
        constraints (Σ y_i A_i − C ⪰ 0) and convergence diagnostics.
    """
    problem.validate()
    rp_ = _RealProblem(problem)
    sigma = SOLVER_DEFAULTS["mu_factor"]
    fraction = SOLVER_DEFAULTS["step_fraction"]
    stall_window = SOLVER_DEFAULTS["stall_iterations"]
    stall_gain = SOLVER_DEFAULTS["stall_improvement"]

    xs = [np.eye(k) for k in rp_.dims]
    zs = [np.eye(k) for k in rp_.dims]
    y = np.zeros(len(rp_.b))
    n_total = sum(rp_.dims)
    b_norm = 1.0 + np.linalg.norm(rp_.b)
    c_norm = 1.0 + np.sqrt(_inner(rp_.c, rp_.c))

    status = MAX_ITERATIONS
    history: List[SdpIterate] = []
    best_infeasibility, last_progress = np.inf, 0
    iteration = 0
    for iteration in range(1, max_iter + 1):
        r_primal = rp_.b - rp_.op_a(xs)
        at_y = rp_.op_at(y)
        r_dual = [c - z - a for c, z, a in zip(rp_.c, zs, at_y)]
        pobj = _inner(rp_.c, xs)
        dobj = float(rp_.b @ y)
        mu = _inner(xs, zs) / n_total
        p_inf = np.linalg.norm(r_primal) / b_norm
        d_inf = np.sqrt(_inner(r_dual, r_dual)) / c_norm
        scale = 1.0 + abs(pobj) + abs(dobj)
        gap = max(abs(pobj - dobj), n_total * mu) / scale
        history.append(
            SdpIterate(
                iteration=iteration,
                primal_objective=-pobj,
                dual_objective=-dobj,
                complementarity=n_total * mu,
                infeasibility_term=_inner(r_dual, xs) - float(r_primal @ y),
                primal_infeasibility=float(p_inf),
                dual_infeasibility=float(d_inf),
            )
        )

        if p_inf <= tol and d_inf <= tol and gap <= tol:
            status = OPTIMAL
            break
        infeasibility = max(p_inf, d_inf)
        if infeasibility < (1 - stall_gain) * best_infeasibility:
            best_infeasibility, last_progress = infeasibility, iteration
        elif infeasibility > tol and iteration - last_progress >= stall_window:
            status = INFEASIBLE_SUSPECTED
            logger.warning(f"Residuals stalled at {infeasibility:.2e} for {stall_window} iterations")
            break

        z_inv = [_sym(np.linalg.inv(z)) for z in zs]
        m_mat = np.zeros((len(y), len(y)))
        for a, x, zi in zip(rp_.a, xs, z_inv):
            m_mat += np.einsum("ikl,jlk->ij", a @ x, a @ zi)
        rhs = rp_.b - sigma * mu * rp_.op_a(z_inv) + rp_.op_a([x @ r @ zi for x, r, zi in zip(xs, r_dual, z_inv)])
        try:
            dy = np.linalg.solve(_sym(m_mat), rhs) if len(y) else y
        except np.linalg.LinAlgError:
            dy = np.linalg.lstsq(m_mat, rhs, rcond=None)[0]
        at_dy = rp_.op_at(dy)
        dzs = [r - a for r, a in zip(r_dual, at_dy)]
        dxs = [_sym(sigma * mu * zi - x - x @ dz @ zi) for x, dz, zi in zip(xs, dzs, z_inv)]

        alpha_p = min([1.0] + [fraction * _max_step(x, dx) for x, dx in zip(xs, dxs)])
        alpha_d = min([1.0] + [fraction * _max_step(z, dz) for z, dz in zip(zs, dzs)])
        xs = [x + alpha_p * dx for x, dx in zip(xs, dxs)]
        zs = [z + alpha_d * dz for z, dz in zip(zs, dzs)]
        y = y + alpha_d * dy

    if rp_.inconsistency > tol * (1 + np.linalg.norm(rp_.b_full)):
        status = INFEASIBLE_SUSPECTED
        logger.warning(f"Equality constraints are inconsistent (residual {rp_.inconsistency:.2e})")

    primal = {name: complexify(x) for name, x in zip(rp_.names, xs)}
    slack = {name: complexify(z) for name, z in zip(rp_.names, zs)}
    y_full = -(rp_.basis @ y) if len(y) else np.zeros(len(problem.constraints))
    residuals = [
        sum(np.real(np.sum(con.coefficients[n].T * primal[n])) for n in con.coefficients) - con.rhs
        for con in problem.constraints
    ]
    r_dual = [c - z - a for c, z, a in zip(rp_.c, zs, rp_.op_at(y))]
    pobj = -_inner(rp_.c, xs)
    dobj = -float(rp_.b @ y)
    solution = SdpSolution(
        status=status,
        primal=primal,
        dual=y_full,
        dual_slack=slack,
        primal_objective=pobj,
        dual_objective=dobj,
        gap=abs(dobj - pobj) / (1 + abs(pobj) + abs(dobj)),
        primal_residual=float(np.max(np.abs(residuals))) if residuals else 0.0,
        dual_residual=float(np.sqrt(_inner(r_dual, r_dual))),
        iterations=iteration,
        history=history,
    )
    logger.info(
        f"SDP finished: status={status}, iterations={iteration}, objective={pobj:.10f}, gap={solution.gap:.2e}"
    )
    return solution
