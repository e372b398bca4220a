"""Detection scans of m(t, τ) over time grids and parameter families."""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config.tolerances import TOLERANCES

from .bath import (
    AmplitudeSolution,
    Lorentzian,
    OhmicHardCutoff,
    SingleMode,
    SpectralDensity,
    memory_surface,
    singlemode_fock_m,
    singlemode_thermal_m,
    solve_amplitude,
)
from .errors import InputError

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ["param", "t", "tau", "m", "detected"]
_GOLDEN = (np.sqrt(5) - 1) / 2


@dataclass(frozen=True, eq=False)
class ScanResult:
    max_m: float
    argmax: Tuple[float, float]
    detected: bool
    non_markovian: bool
    t_grid: np.ndarray
    tau_grid: np.ndarray
    m: np.ndarray
    retriever: str = "singlet"

    def table(self, param: float = float("nan"), margin: float = TOLERANCES["detection_margin"]) -> pd.DataFrame:
        tt, uu = np.meshgrid(self.t_grid, self.tau_grid, indexing="ij")
        return pd.DataFrame(
            {
                "param": param,
                "t": tt.ravel(),
                "tau": uu.ravel(),
                "m": self.m.ravel(),
                "detected": self.m.ravel() > 1 + margin,
            },
            columns=TABLE_COLUMNS,
        )


def _snap(grid: Sequence[float], dt: float) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0 or np.any(grid < 0):
        raise InputError(f"Time grids must be non-empty, one-dimensional and nonnegative, got shape {grid.shape}")
    return np.unique(np.round(grid / dt).astype(int))


def _golden_index_search(fn: Callable[[int], float], lo: int, hi: int) -> Tuple[int, float]:
    """Maximize fn over integers in [lo, hi], assuming it is unimodal there."""
    cache: Dict[int, float] = {}

    def value(k: int) -> float:
        if k not in cache:
            cache[k] = fn(k)
        return cache[k]

    while hi - lo > 3:
        a = hi - int(round(_GOLDEN * (hi - lo)))
        b = lo + int(round(_GOLDEN * (hi - lo)))
        if a >= b:
            b = a + 1
        if value(a) < value(b):
            lo = a
        else:
            hi = b
    best = max(range(lo, hi + 1), key=value)
    return best, value(best)


def scan_detection(
    sd: SpectralDensity,
    t_grid: Sequence[float],
    tau_grid: Sequence[float],
    retriever: str = "singlet",
    dt: Optional[float] = None,
    margin: float = TOLERANCES["detection_margin"],
    sol: Optional[AmplitudeSolution] = None,
) -> ScanResult:
    """Maximize m(t, τ) over a grid, then refine the maximum once.

    Requested times are snapped to the amplitude grid of step dt. The
    refinement runs a golden-section search in t between the neighbours of
    the coarse maximizer and re-maximizes over the fine τ grid in the same
    neighbourhood.

    Args:
        sd: spectral density
        t_grid: first-interval durations
        tau_grid: second-interval durations
        retriever: "singlet" or "triplet"
        dt: amplitude grid step, defaults to a fortieth of the fastest period
        margin: detection requires max m > 1 + margin
        sol: precomputed amplitude solution covering max t + max τ

    Returns:
        ScanResult with the coarse surface and the refined maximum
    """
    period = 2 * np.pi / sd.fastest_rate()
    if dt is None:
        dt = sol.dt if sol is not None else period / 40
    t_idx = _snap(t_grid, dt)
    tau_idx = _snap(tau_grid, dt)
    for name, idx in (("t", t_idx), ("tau", tau_idx)):
        if len(idx) > 1 and np.diff(idx).max() * dt > period / 20:
            logger.warning(
                f"{name} grid spacing {np.diff(idx).max() * dt:.4g} does not resolve the period {period:.4g} "
                f"with 20 points"
            )
    n_needed = int(t_idx[-1] + tau_idx[-1])
    if sol is None:
        sol = solve_amplitude(sd, max(n_needed, 1) * dt, dt)
    elif len(sol.q) <= n_needed:
        raise InputError(f"Amplitude solution ends at {sol.t_max}, scan needs {n_needed * dt}")

    surfaces: Dict[int, np.ndarray] = {}

    def surface(i: int) -> np.ndarray:
        if i not in surfaces:
            surfaces[i] = memory_surface(sol, i, retriever)
        return surfaces[i]

    m = np.array([surface(i)[tau_idx] for i in t_idx])
    bi, bj = np.unravel_index(int(np.argmax(m)), m.shape)
    j_lo = tau_idx[max(bj - 1, 0)]
    j_hi = tau_idx[min(bj + 1, len(tau_idx) - 1)]

    def best_over_tau(i: int) -> float:
        hi = min(j_hi, len(sol.q) - 1 - i)
        return float(surface(i)[j_lo : hi + 1].max()) if hi >= j_lo else -np.inf

    i_lo = t_idx[max(bi - 1, 0)]
    i_hi = t_idx[min(bi + 1, len(t_idx) - 1)]
    best_i, best_value = _golden_index_search(best_over_tau, int(i_lo), int(i_hi))
    if best_value < m[bi, bj]:
        best_i, best_value, best_j = int(t_idx[bi]), float(m[bi, bj]), int(tau_idx[bj])
    else:
        hi = min(j_hi, len(sol.q) - 1 - best_i)
        best_j = int(j_lo + np.argmax(surface(best_i)[j_lo : hi + 1]))

    non_markovian = bool(np.any(np.diff(np.abs(sol.q)) > 1e-12))
    return ScanResult(
        max_m=float(best_value),
        argmax=(best_i * dt, best_j * dt),
        detected=bool(best_value > 1 + margin),
        non_markovian=non_markovian,
        t_grid=t_idx * dt,
        tau_grid=tau_idx * dt,
        m=m,
        retriever=retriever,
    )


def lorentzian_family(
    ratio: float,
    lam: float = 1.0,
    omega0: float = 1.0,
    points_per_period: int = 200,
    periods: float = 1.5,
    coarse_points: int = 41,
    retriever: str = "singlet",
) -> ScanResult:
    """Scan of the Lorentzian density with Rabi frequency Ω = ratio · λ."""
    sd = Lorentzian.from_rabi_ratio(ratio, lam, omega0)
    period = 2 * np.pi / abs(sd.rabi_frequency)
    window = periods * period
    grid = np.linspace(0, window, coarse_points)
    return scan_detection(sd, grid, grid, retriever, dt=period / points_per_period)


def ohmic_family(
    ratio: float,
    eta: float = 0.1,
    omega0: float = 1.0,
    t_max: float = 12.0,
    dt: float = 0.01,
    coarse_points: int = 41,
    retriever: str = "singlet",
) -> ScanResult:
    """Scan of the Ohmic density with cutoff ω_c = ratio · ω0."""
    sd = OhmicHardCutoff(eta=eta, omega_c=ratio * omega0, omega0=omega0)
    grid = np.linspace(0, t_max / 2, coarse_points)
    return scan_detection(sd, grid, grid, retriever, dt=dt)


def single_mode_window_family(
    window: float,
    g: float = 1.0,
    dt: float = 1e-3,
    coarse_points: int = 41,
    retriever: str = "triplet",
) -> ScanResult:
    """Single-mode scan with t and τ restricted to [0, window]."""
    sd = SingleMode(g=g)
    grid = np.linspace(0, window, coarse_points)
    return scan_detection(sd, grid, grid, retriever, dt=dt)


@dataclass(frozen=True, eq=False)
class ThresholdResult:
    boundary: Optional[float]
    bracket: Optional[Tuple[float, float]]
    points: List[Tuple[float, float, bool]] = field(default_factory=list)
    scans: Dict[float, ScanResult] = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "boundary": self.boundary,
            "bracket": list(self.bracket) if self.bracket else None,
            "points": [{"param": p, "max_m": v, "detected": d} for p, v, d in self.points],
        }


def _run(family: Callable[[float], ScanResult], params: Sequence[float], jobs: int) -> List[ScanResult]:
    if jobs <= 1 or len(params) <= 1:
        return [family(p) for p in params]
    with ProcessPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(family, params))


def threshold_scan(
    family: Callable[[float], ScanResult],
    parameter_grid: Sequence[float],
    tol: float = 1e-2,
    jobs: int = 1,
) -> ThresholdResult:
    """Locate the detection boundary of a one-parameter family.

    The family is evaluated on the sorted grid; the first change of the
    detection verdict between neighbours is then bisected down to width tol.
    No boundary is reported when the verdict is constant on the grid.
    """
    params = sorted({float(p) for p in parameter_grid})
    if not params:
        raise InputError("threshold_scan needs a non-empty parameter grid")
    scans = dict(zip(params, _run(family, params, jobs)))
    points = [(p, scans[p].max_m, scans[p].detected) for p in params]
    for p, v, d in points:
        logger.info(f"param={p:.6g}: max m={v:.8f}, detected={d}")
    change = next((k for k in range(len(params) - 1) if scans[params[k]].detected != scans[params[k + 1]].detected), None)
    if change is None:
        logger.info(f"Detection verdict constant over [{params[0]}, {params[-1]}]; no boundary")
        return ThresholdResult(None, None, points, scans)
    lo, hi = params[change], params[change + 1]
    lo_detected = scans[lo].detected
    while hi - lo > tol:
        mid = (lo + hi) / 2
        result = family(mid)
        scans[mid] = result
        points.append((mid, result.max_m, result.detected))
        if result.detected == lo_detected:
            lo = mid
        else:
            hi = mid
    boundary = (lo + hi) / 2
    logger.info(f"Detection boundary at {boundary:.6g} (bracket [{lo:.6g}, {hi:.6g}])")
    return ThresholdResult(boundary, (lo, hi), sorted(points), scans)


def _family_figure(family, cfg: dict, jobs: int) -> Tuple[pd.DataFrame, dict]:
    values = list(cfg["table_values"])
    results = _run(family, values, jobs)
    table = pd.concat([r.table(v) for v, r in zip(values, results)], ignore_index=True)
    grid = list(cfg["bracket"]) + values
    thresholds = {}
    for retriever in cfg["retrievers"]:
        result = threshold_scan(partial(family, retriever=retriever), grid, cfg["bisection_tol"], jobs)
        thresholds[retriever] = result.summary()
    summary = {
        "parameter": cfg["parameter"],
        "thresholds": thresholds,
        "maxima": [
            {"param": v, "max_m": r.max_m, "argmax": list(r.argmax), "non_markovian": r.non_markovian}
            for v, r in zip(values, results)
        ],
    }
    return table, summary


def figure3(cfg: dict, jobs: int = 1) -> Tuple[pd.DataFrame, dict]:
    """Lorentzian detection table over Ω/λ and per-retriever thresholds."""
    family = partial(
        lorentzian_family,
        lam=cfg["lambda"],
        omega0=cfg["omega0"],
        points_per_period=cfg["points_per_period"],
        periods=cfg["periods"],
        coarse_points=cfg["coarse_points"],
    )
    return _family_figure(family, cfg, jobs)


def figureA2(cfg: dict, jobs: int = 1) -> Tuple[pd.DataFrame, dict]:
    """Ohmic detection table over ω_c/ω0 and per-retriever thresholds."""
    family = partial(
        ohmic_family,
        eta=cfg["eta"],
        omega0=cfg["omega0"],
        t_max=cfg["t_max"],
        dt=cfg["dt"],
        coarse_points=cfg["coarse_points"],
    )
    return _family_figure(family, cfg, jobs)


def figureA1(cfg: dict) -> Dict[str, pd.DataFrame]:
    """Closed-form m(t, τ) at fixed t over τ, for Fock numbers and for each β."""
    g, t = cfg["g"], cfg["t"]
    tau = np.linspace(0, cfg["tau_max"], cfg["tau_points"])
    margin = TOLERANCES["detection_margin"]

    def frame(param, values):
        return pd.DataFrame(
            {"param": param, "t": t, "tau": tau, "m": values, "detected": values > 1 + margin},
            columns=TABLE_COLUMNS,
        )

    tables = {"fock": pd.concat([frame(n, singlemode_fock_m(g, t, tau, n)) for n in cfg["fock_numbers"]], ignore_index=True)}
    for beta in cfg["betas"]:
        values = singlemode_thermal_m(g, t, tau, beta, omega0=cfg["omega0"])
        tables[f"beta_{beta:g}"] = frame(beta, values)
    return tables


def write_table(table: pd.DataFrame, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False, float_format="%.12g")
    logger.info(f"Wrote {len(table)} rows to {path}")
    return path
