import numpy as np
import pytest

from qmemory import process
from qmemory.errors import InvalidProcessError, InvalidTesterError, LabelError
from qmemory.process import (
    ChoiChannel,
    MeasurementOp,
    Tester,
    as_tpm,
    cm_mixture,
    heisenberg_map,
    markov_process,
    process_from_dynamics,
    regression_correlation,
    tpm_correlation,
    validate_tester,
    validate_tpm,
)
from qmemory.sampling import (
    random_cm_ensemble,
    random_cm_process,
    random_density,
    random_dephasing,
    random_kraus,
    random_markov,
    random_tpm,
    random_unitary,
)
from qmemory.tensor import LabeledOperator, as_space, partial_trace, tensor


@pytest.mark.parametrize("maker", [random_markov, random_cm_process, random_tpm, random_dephasing])
def test_random_processes_are_valid(rng, maker):
    w = maker(rng)
    report = validate_tpm(w.w)
    assert report.valid
    assert abs(w.w.trace() - w.b.dim) < 1e-10


def test_scaled_process_fails_trace(rng):
    w = random_markov(rng)
    report = validate_tpm(w.w * 1.5)
    assert not report.valid
    assert abs(report.trace - 1.0) < 1e-10
    with pytest.raises(InvalidProcessError):
        as_tpm(w.w * 1.5)


def test_signalling_operator_fails_causality():
    # Tr_C W is not of the form rho_A ⊗ id_B
    op = np.kron(np.kron(np.diag([1.0, 0.0]), np.diag([1.0, 0.0])), np.eye(2))
    w = LabeledOperator(as_space([("A", 2), ("B", 2), ("C", 2)]), op)
    report = validate_tpm(w)
    assert report.trace < 1e-12
    assert abs(report.causality - 2) < 1e-12
    assert not report.valid


def test_validate_needs_three_labels(rng):
    with pytest.raises(LabelError):
        validate_tpm(random_density(("A", 2), rng))


def test_markov_process_is_product(rng):
    rho = random_density(("A", 2), rng)
    channel = ChoiChannel.from_kraus(random_kraus(2, 2, rng), ("B", 2), ("C", 2))
    w = markov_process(rho, channel)
    assert np.abs(partial_trace(w.w, ["B", "C"]).matrix - 2 * rho.matrix).max() < 1e-12
    assert np.abs((w.w - tensor(rho, channel.n)).matrix).max() < 1e-14


def test_channel_must_preserve_trace():
    with pytest.raises(InvalidProcessError):
        ChoiChannel.from_kraus([np.diag([1.0, 0.5])], ("B", 2), ("C", 2))


def test_cm_mixture_is_convex(rng):
    ens = random_cm_ensemble(rng, 3)
    w = cm_mixture(ens)
    expected = sum(p * tensor(r, n.n).matrix for p, r, n in zip(ens.weights, ens.states, ens.channels))
    assert np.abs(w.w.matrix - expected).max() < 1e-12


def test_mix_of_processes(rng):
    w1, w2 = random_tpm(rng), random_tpm(rng)
    assert validate_tpm(w1.mix(w2, 0.3).w).valid


def test_correlation_matches_regression_on_markov(rng):
    rho = random_density(("A", 2), rng)
    kraus = random_kraus(2, 2, rng)
    w = markov_process(rho, ChoiChannel.from_kraus(kraus, ("B", 2), ("C", 2)))
    e = MeasurementOp(random_unitary(2, rng) * np.sqrt(0.6))
    f = MeasurementOp(random_unitary(2, rng) @ np.diag([1.0, 0.3]))
    expected = regression_correlation(rho, heisenberg_map(kraus), e, f)
    assert abs(tpm_correlation(w, e, f) - expected) < 1e-12


def test_measurement_operator_is_contraction():
    with pytest.raises(InvalidProcessError):
        MeasurementOp(np.eye(2) * 1.1)


def test_dynamics_without_coupling_is_markov(rng):
    u_s = random_unitary(2, rng)
    u_e = random_unitary(3, rng)
    rho_s = random_density(("S", 2), rng)
    rho_e = random_density(("E", 3), rng)
    w = process_from_dynamics(np.kron(u_s, u_e), np.kron(u_s, u_e), rho_s, rho_e)
    state = LabeledOperator(as_space(("A", 2)), u_s @ rho_s.matrix @ u_s.conj().T)
    channel = ChoiChannel.from_kraus([u_s], ("B", 2), ("C", 2))
    assert np.abs((w.w - tensor(state, channel.n)).matrix).max() < 1e-12


def test_environment_label_collision(rng):
    with pytest.raises(LabelError):
        process_from_dynamics(
            np.eye(4), np.eye(4), random_density(("S", 2), rng), random_density(("A", 2), rng)
        )


def _measure_prepare_tester():
    # measure A in the computational basis, prepare |0> on B, measure C
    effects = {}
    for i in range(2):
        for j in range(2):
            pa = np.diag([1.0 - i, float(i)])
            pc = np.diag([1.0 - j, float(j)])
            op = np.kron(np.kron(pa, np.diag([1.0, 0.0])), pc)
            effects[f"{i}{j}"] = LabeledOperator(as_space([("A", 2), ("B", 2), ("C", 2)]), op)
    return Tester(effects)


def test_tester_outcomes_sum_to_one(rng):
    tester = _measure_prepare_tester()
    assert validate_tester(tester).valid
    probabilities = process.tester_apply(tester, random_tpm(rng))
    assert abs(sum(probabilities.values()) - 1) < 1e-10
    assert min(probabilities.values()) > -1e-12


def test_invalid_tester_rejected(rng):
    tester = _measure_prepare_tester()
    broken = Tester({k: e * 2 for k, e in tester.effects.items()})
    assert not validate_tester(broken).valid
    with pytest.raises(InvalidTesterError):
        process.tester_apply(broken, random_tpm(rng))


def _reduce_env(joint, d, d_env):
    return np.trace(joint.reshape(d, d_env, d, d_env), axis1=1, axis2=3)


@pytest.mark.parametrize("d_env", [1, 2, 3])
def test_first_marginal_is_reduced_state(rng, d_env):
    u1, u2 = random_unitary(2 * d_env, rng), random_unitary(2 * d_env, rng)
    rho_s, rho_e = random_density(("S", 2), rng), random_density(("E", d_env), rng)
    w = process_from_dynamics(u1, u2, rho_s, rho_e)
    joint = u1 @ np.kron(rho_s.matrix, rho_e.matrix) @ u1.conj().T
    marginal = partial_trace(w.w, ["B", "C"]).matrix / w.b.dim
    assert np.abs(marginal - _reduce_env(joint, 2, d_env)).max() < 1e-10


@pytest.mark.parametrize("d_env", [2, 3])
def test_correlation_matches_joint_evolution(rng, d_env):
    u1, u2 = random_unitary(2 * d_env, rng), random_unitary(2 * d_env, rng)
    rho_s, rho_e = random_density(("S", 2), rng), random_density(("E", d_env), rng)
    w = process_from_dynamics(u1, u2, rho_s, rho_e)
    e = MeasurementOp(random_unitary(2, rng) * np.sqrt(0.7))
    f = MeasurementOp(random_unitary(2, rng) @ np.diag([1.0, 0.4]))

    joint = u1 @ np.kron(rho_s.matrix, rho_e.matrix) @ u1.conj().T
    e_joint = np.kron(e.operator, np.eye(d_env))
    later = u2 @ e_joint @ joint @ e_joint.conj().T @ u2.conj().T
    expected = np.real(np.trace(f.effect @ _reduce_env(later, 2, d_env)))
    assert abs(tpm_correlation(w, e, f) - expected) < 1e-12


def test_product_first_interval_gives_markov_process(rng):
    # u1 = id keeps the system and environment uncorrelated at t
    d_env = 3
    u2 = random_unitary(2 * d_env, rng)
    rho_s, rho_e = random_density(("S", 2), rng), random_density(("E", d_env), rng)
    w = process_from_dynamics(np.eye(2 * d_env), u2, rho_s, rho_e)

    probs, vecs = np.linalg.eigh(rho_e.matrix)
    blocks = u2.reshape(2, d_env, 2, d_env)
    kraus = [
        np.sqrt(max(p, 0.0)) * np.einsum("abl,l->ab", blocks[:, k], vecs[:, l])
        for k in range(d_env)
        for l, p in enumerate(probs)
    ]
    channel = ChoiChannel.from_kraus(kraus, ("B", 2), ("C", 2))
    state = LabeledOperator(as_space(("A", 2)), rho_s.matrix)
    assert np.abs((w.w - tensor(state, channel.n)).matrix).max() < 1e-10
