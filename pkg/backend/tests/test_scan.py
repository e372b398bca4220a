import numpy as np
import pandas as pd
import pytest

from qmemory.bath import Lorentzian, SingleMode, solve_amplitude
from qmemory.errors import InputError
from qmemory.scan import (
    TABLE_COLUMNS,
    figureA1,
    lorentzian_family,
    ohmic_family,
    scan_detection,
    single_mode_window_family,
    threshold_scan,
    write_table,
)
from qmemory.schemas import FockScanConfig


def test_single_mode_maximum():
    grid = np.linspace(0, np.pi / 2, 41)
    result = scan_detection(SingleMode(g=1.0), grid, grid, dt=1e-3)
    assert abs(result.max_m - 2) < 1e-5
    assert abs(result.argmax[0] - np.pi / 4) < 2e-3
    assert abs(result.argmax[1] - np.pi / 2) < 2e-3
    assert result.detected
    assert result.m.shape == (41, 41)
    assert np.abs(result.m[0] - 1).max() < 1e-10


def test_triplet_window_boundary():
    result = threshold_scan(single_mode_window_family, [1.0, 2.0], tol=0.01)
    assert result.boundary == pytest.approx(np.pi / 2, abs=0.02)
    lo, hi = result.bracket
    assert hi - lo <= 0.01
    assert not result.scans[1.0].detected
    assert result.scans[2.0].detected


def test_threshold_without_verdict_change():
    result = threshold_scan(single_mode_window_family, [0.5, 1.0, 0.5])
    assert result.boundary is None
    assert [p for p, _, _ in result.points] == [0.5, 1.0]
    assert result.summary()["bracket"] is None


def test_threshold_needs_parameters():
    with pytest.raises(InputError):
        threshold_scan(single_mode_window_family, [])


def test_lorentzian_family_detects():
    result = lorentzian_family(2.0)
    assert result.detected
    assert result.non_markovian
    sd = Lorentzian.from_rabi_ratio(2.0)
    t, tau = result.argmax
    assert abs(result.max_m - sd.memory_functional(t, tau)) < 1e-2


def test_ohmic_family_runs():
    result = ohmic_family(3.0, t_max=6.0, dt=0.01, coarse_points=21)
    assert result.max_m >= 1 - 1e-12
    assert result.t_grid[-1] == pytest.approx(3.0)


def test_precomputed_solution_too_short():
    sd = SingleMode(g=1.0)
    sol = solve_amplitude(sd, 1.0, 0.01)
    grid = np.linspace(0, 1.0, 11)
    with pytest.raises(InputError):
        scan_detection(sd, grid, grid, sol=sol)


def test_negative_times_rejected():
    with pytest.raises(InputError):
        scan_detection(SingleMode(g=1.0), [-1.0, 0.0], [0.0, 1.0], dt=0.01)


def test_table_csv_header(tmp_path):
    grid = np.linspace(0, 1.0, 5)
    result = scan_detection(SingleMode(g=1.0), grid, grid, dt=0.01)
    path = write_table(result.table(param=1.0), tmp_path / "scan.csv")
    assert path.read_text().splitlines()[0] == ",".join(TABLE_COLUMNS)
    table = pd.read_csv(path)
    assert len(table) == 25
    assert (table["param"] == 1.0).all()


def test_fock_tables():
    tables = figureA1(FockScanConfig().as_config())
    assert set(tables) == {"fock", "beta_0.5", "beta_1", "beta_2", "beta_5"}
    fock = tables["fock"]
    assert list(fock.columns) == TABLE_COLUMNS
    vacuum = fock[fock["param"] == 0]
    assert abs(vacuum["m"].max() - 2) < 1e-3
    assert vacuum["detected"].any()
