import numpy as np
import pytest

from qmemory.errors import DimensionError, InputError, NotHermitianError, SolverError
from qmemory.schemas import dump_problem, load_problem
from qmemory.sdp import INFEASIBLE_SUSPECTED, SdpProblem, complexify, realify, solve


def _hermitian(rng, d):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (g + g.conj().T) / 2


def _lambda_max_problem(c):
    problem = SdpProblem()
    problem.add_block("x", c.shape[0], objective=c)
    problem.add_constraint({"x": np.eye(c.shape[0])}, 1.0, "trace")
    return problem


def test_realify_roundtrip(rng):
    h = _hermitian(rng, 3)
    r = realify(h)
    assert r.shape == (6, 6)
    assert np.abs(r - r.T).max() < 1e-15
    assert np.abs(complexify(r) - h).max() < 1e-15
    assert np.abs(np.sort(np.linalg.eigvalsh(r))[::2] - np.linalg.eigvalsh(h)).max() < 1e-12


def test_realify_errors():
    with pytest.raises(NotHermitianError):
        realify(np.array([[0, 1], [0, 0]]))
    with pytest.raises(DimensionError):
        realify(np.ones((2, 3)))


@pytest.mark.parametrize("d", [2, 3, 5])
def test_lambda_max(rng, d):
    c = _hermitian(rng, d)
    solution = solve(_lambda_max_problem(c), tol=1e-8)
    assert solution.optimal
    assert solution.gap <= 1e-8
    assert abs(solution.value - np.linalg.eigvalsh(c)[-1]) < 1e-7
    x = solution.primal["x"]
    assert abs(np.trace(x) - 1) < 1e-7
    assert np.linalg.eigvalsh((x + x.conj().T) / 2)[0] > -1e-7


@pytest.mark.parametrize("d", [2, 4])
def test_duality_gap_history(rng, d):
    c = _hermitian(rng, d)
    solution = solve(_lambda_max_problem(c))
    assert len(solution.history) == solution.iterations
    for it in solution.history:
        gap = it.dual_objective - it.primal_objective
        scale = 1 + abs(it.primal_objective) + abs(it.dual_objective) + abs(it.infeasibility_term)
        assert it.complementarity >= -1e-12
        assert abs(gap - it.complementarity - it.infeasibility_term) < 1e-10 * scale
        assert gap >= it.infeasibility_term - 1e-10 * scale
    last = solution.history[-1]
    assert last.primal_infeasibility <= 1e-8 and last.dual_infeasibility <= 1e-8
    assert last.dual_objective - last.primal_objective >= -1e-8 * (1 + abs(last.dual_objective))


def test_dependent_constraints_are_reduced(rng):
    c = _hermitian(rng, 3)
    problem = _lambda_max_problem(c)
    problem.add_constraint({"x": 2 * np.eye(3)}, 2.0, "trace again")
    solution = solve(problem)
    assert solution.optimal
    assert abs(solution.value - np.linalg.eigvalsh(c)[-1]) < 1e-7


def test_inconsistent_constraints_flagged(rng):
    problem = _lambda_max_problem(_hermitian(rng, 2))
    problem.add_constraint({"x": np.eye(2)}, 2.0, "contradiction")
    solution = solve(problem)
    assert solution.status == INFEASIBLE_SUSPECTED
    with pytest.raises(SolverError):
        solution.require_optimal()


def test_deterministic(rng):
    c = _hermitian(rng, 4)
    first = solve(_lambda_max_problem(c))
    second = solve(_lambda_max_problem(c))
    assert first.iterations == second.iterations
    assert np.abs(first.primal["x"] - second.primal["x"]).max() == 0


def test_problem_validation():
    problem = SdpProblem()
    problem.add_block("x", 2)
    with pytest.raises(InputError):
        problem.add_block("x", 3)
    problem.add_constraint({"y": np.eye(2)}, 1.0)
    with pytest.raises(InputError):
        problem.validate()
    bad_shape = SdpProblem()
    bad_shape.add_block("x", 2, objective=np.eye(3))
    with pytest.raises(DimensionError):
        bad_shape.validate()


def test_problem_file_roundtrip(rng, tmp_path):
    c = _hermitian(rng, 3)
    problem = _lambda_max_problem(c)
    path = dump_problem(problem, tmp_path / "problem.json")
    loaded = load_problem(path)
    assert loaded.blocks == problem.blocks
    assert np.abs(loaded.objective["x"] - c).max() < 1e-15
    assert abs(solve(loaded).value - np.linalg.eigvalsh(c)[-1]) < 1e-7
