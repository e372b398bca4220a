import itertools

import numpy as np
import pytest

from qmemory.bath import singlemode_fock_m, singlemode_thermal_m, thermal_cutoff
from qmemory.errors import CutoffLeakageError, InputError
from qmemory.memory import retriever_value
from qmemory.process import validate_tpm
from qmemory.spinboson import (
    Fock,
    JcModel,
    Thermal,
    heat_inequality_lhs,
    jc_process_matrix,
    system_energy,
    theta_star,
    theta_triplet,
)
from qmemory.tensor import partial_trace

GRID = np.linspace(0, np.pi, 5)


def test_theta_triplet_is_retriever():
    retriever = theta_triplet().validate()
    assert abs(retriever.theta.trace() - 2) < 1e-12
    assert retriever.labels == ("A", "B", "C")


def test_jc_process_is_valid():
    w = jc_process_matrix(JcModel(g=1.0), 0.7, 1.3)
    assert validate_tpm(w.w).valid
    assert w.labels == ("A", "B", "C")


@pytest.mark.parametrize("t,tau", list(itertools.product(GRID, GRID)))
def test_retriever_values_match_memory_functional(t, tau):
    w = jc_process_matrix(JcModel(g=1.0), t, tau)
    assert abs(theta_star().value(w) - singlemode_fock_m(1.0, t, tau, 0)) < 1e-10
    assert abs(theta_triplet().value(w) - singlemode_fock_m(1.0, t, tau, 0, retriever="triplet")) < 1e-10


@pytest.mark.parametrize("t,tau", list(itertools.product(GRID, GRID)))
def test_optimal_value_dominates_memory_functional(t, tau):
    value, _ = retriever_value(jc_process_matrix(JcModel(g=1.0), t, tau))
    m = singlemode_fock_m(1.0, t, tau, 0)
    assert m - 1e-5 <= value <= 2 + 1e-5
    # equality where m saturates d_A and where the state at t is a pure product
    if abs(m - 2) < 1e-9 or t in (GRID[0], GRID[-1]):
        assert abs(value - m) < 1e-5


def test_optimal_value_exceeds_memory_functional_off_the_maximum():
    t, tau = np.pi / 4, 3 * np.pi / 4
    value, _ = retriever_value(jc_process_matrix(JcModel(g=1.0), t, tau))
    assert value > singlemode_fock_m(1.0, t, tau, 0) + 0.1


@pytest.mark.parametrize("t,tau", [(0.0, 0.0), (np.pi / 4, np.pi / 2), (0.3, 1.2), (1.4, 0.2)])
def test_heat_inequality_agrees_with_retriever(t, tau):
    model = JcModel(g=1.0)
    lhs = heat_inequality_lhs(model, t, tau)
    w = jc_process_matrix(model, t, tau)
    assert abs((1 + lhs) / 2 - theta_star().value(w)) < 1e-10
    assert abs((1 + lhs) / 2 - singlemode_fock_m(1.0, t, tau, 0)) < 1e-10


def test_heat_inequality_violated_at_optimum():
    assert abs(heat_inequality_lhs(JcModel(g=1.0), np.pi / 4, np.pi / 2) - 3) < 1e-10


@pytest.mark.parametrize("t", [0.2, 0.6, 1.0])
def test_heat_inequality_short_delay_expansion(t):
    model = JcModel(g=1.0)
    tau = 1e-4
    energy = system_energy(model, t)
    assert abs(energy - np.cos(2 * t)) < 1e-12
    assert abs(heat_inequality_lhs(model, t, 0.0) - energy) < 1e-12
    slope = (heat_inequality_lhs(model, t, tau) - energy) / tau
    assert abs(slope - 2 * np.sin(2 * t)) < 1e-3


def test_fock_energy_oscillates_faster():
    model = JcModel(g=1.0, env=Fock(2))
    for t in (0.3, 0.9):
        assert abs(system_energy(model, t) - np.cos(2 * np.sqrt(3) * t)) < 1e-10


@pytest.mark.parametrize("n", [1, 2])
def test_fock_process_matches_closed_form(n):
    model = JcModel(g=1.0, env=Fock(n))
    for t, tau in [(0.4, 0.9), (1.2, 0.3)]:
        w = jc_process_matrix(model, t, tau)
        assert abs(theta_star().value(w) - singlemode_fock_m(1.0, t, tau, n)) < 1e-10


def test_thermal_process_matches_closed_form():
    model = JcModel(g=1.0, env=Thermal(beta=2.0))
    assert model.levels == thermal_cutoff(2.0) + 3
    t, tau = 0.5, 0.8
    w = jc_process_matrix(model, t, tau)
    assert abs(theta_star().value(w) - singlemode_thermal_m(1.0, t, tau, 2.0)) < 1e-9


def test_reduced_state_at_first_time():
    t = 0.6
    w = jc_process_matrix(JcModel(g=1.0), t, 0.4)
    rho_a = partial_trace(w.w, ["B", "C"]).matrix / 2
    assert np.abs(rho_a - np.diag([np.sin(t) ** 2, np.cos(t) ** 2])).max() < 1e-12


def test_fock_cutoff_leakage():
    with pytest.raises(CutoffLeakageError):
        jc_process_matrix(JcModel(g=1.0, env=Fock(2), fock_cutoff=3), 0.5, 0.5)
    with pytest.raises(CutoffLeakageError):
        jc_process_matrix(JcModel(g=1.0, env=Fock(5), fock_cutoff=4), 0.5, 0.5)


def test_model_input_checks():
    with pytest.raises(InputError):
        JcModel(g=-1.0)
    with pytest.raises(InputError):
        Fock(-1)
    with pytest.raises(InputError):
        Thermal(beta=0.0)
    with pytest.raises(InputError):
        jc_process_matrix(JcModel(g=1.0), -0.1, 0.2)
