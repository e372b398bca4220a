"""File formats and run configurations."""

import logging
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from config.figure_scans import FIGURE_SCANS
from config.tolerances import TOLERANCES

from .bath import Lorentzian, OhmicHardCutoff, SingleMode, SpectralDensity, Tabulated
from .errors import InputError
from .sdp import SdpProblem
from .tensor import LabeledOperator, SubsystemLabel, as_space

logger = logging.getLogger(__name__)

LORENTZIAN_SCAN = FIGURE_SCANS["figure3"]
FOCK_SCAN = FIGURE_SCANS["figureA1"]
OHMIC_SCAN = FIGURE_SCANS["figureA2"]

Entries = List[List[Tuple[float, float]]]
MatrixKind = Literal["tpm", "retriever", "witness", "operator"]


class LabelModel(BaseModel):
    name: str
    dim: int = Field(ge=1)


def _encode(matrix: np.ndarray) -> Entries:
    return [[(float(z.real), float(z.imag)) for z in row] for row in np.asarray(matrix, dtype=complex)]


def _decode(entries: Entries) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in entries], dtype=complex)


class MatrixFile(BaseModel):
    labels: List[LabelModel]
    entries: Entries
    kind: Optional[MatrixKind] = None
    dims: Optional[List[int]] = None

    @model_validator(mode="after")
    def check_shape(self):
        dim = int(np.prod([l.dim for l in self.labels])) if self.labels else 1
        if len(self.entries) != dim or any(len(row) != dim for row in self.entries):
            raise ValueError(f"entries must be a {dim}x{dim} matrix for labels {[l.name for l in self.labels]}")
        if self.dims is not None and self.dims != [l.dim for l in self.labels]:
            raise ValueError(f"dims {self.dims} disagree with label dimensions {[l.dim for l in self.labels]}")
        return self

    @classmethod
    def from_operator(cls, op: LabeledOperator, kind: Optional[str] = None) -> "MatrixFile":
        return cls(
            labels=[LabelModel(name=l.name, dim=l.dim) for l in op.space.subsystems],
            entries=_encode(op.matrix),
            kind=kind,
            dims=list(op.dims),
        )

    def to_operator(self) -> LabeledOperator:
        space = as_space([SubsystemLabel(l.name, l.dim) for l in self.labels])
        return LabeledOperator(space, _decode(self.entries))


def _read_json(path, model):
    try:
        return model.model_validate_json(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"Cannot read {path}: {exc}") from exc
    except ValidationError as exc:
        raise InputError(f"Malformed {model.__name__} in {path}: {exc.errors()[0]['msg']}") from exc


def _write_json(path, model: BaseModel) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2))
    logger.info(f"Wrote {path}")
    return path


def load_operator(path) -> Tuple[LabeledOperator, Optional[str]]:
    """Read a matrix file; returns the operator and its declared kind."""
    data = _read_json(path, MatrixFile)
    return data.to_operator(), data.kind


def dump_operator(op: LabeledOperator, path, kind: Optional[str] = None) -> Path:
    return _write_json(path, MatrixFile.from_operator(op, kind))


class LambdaStarReport(BaseModel):
    lower: float
    relaxation_upper: float
    ensemble_size: int
    restarts: int


class ProtocolReport(BaseModel):
    per_letter: Dict[str, float]
    inconclusive: Dict[str, float]
    average: float


class DetectionReport(BaseModel):
    value: float
    dimension_bound: int
    detected: bool
    message: str
    lambda_star: Optional[LambdaStarReport] = None
    protocol: Optional[ProtocolReport] = None


_REQUIRED_PARAMETERS = {
    "single_mode": ("g",),
    "lorentzian": ("gamma0", "lam"),
    "ohmic": ("eta", "omega_c"),
    "tabulated": ("omegas", "values"),
}


class SpectralDensityConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    variant: Literal["single_mode", "lorentzian", "ohmic", "tabulated"]
    omega0: float = Field(default=1.0, gt=0)
    g: Optional[float] = Field(default=None, gt=0)
    gamma0: Optional[float] = Field(default=None, gt=0)
    lam: Optional[float] = Field(default=None, gt=0, alias="lambda")
    eta: Optional[float] = Field(default=None, gt=0)
    omega_c: Optional[float] = Field(default=None, gt=0)
    omegas: Optional[List[float]] = None
    values: Optional[List[float]] = None

    @model_validator(mode="after")
    def check_parameters(self):
        missing = [name for name in _REQUIRED_PARAMETERS[self.variant] if getattr(self, name) is None]
        if missing:
            raise ValueError(f"variant {self.variant} needs {missing}")
        return self

    def build(self) -> SpectralDensity:
        if self.variant == "single_mode":
            return SingleMode(g=self.g, omega0=self.omega0)
        if self.variant == "lorentzian":
            return Lorentzian(gamma0=self.gamma0, lam=self.lam, omega0=self.omega0)
        if self.variant == "ohmic":
            return OhmicHardCutoff(eta=self.eta, omega_c=self.omega_c, omega0=self.omega0)
        return Tabulated(tuple(self.omegas), tuple(self.values), omega0=self.omega0)

    def unit_rate(self, units: str) -> float:
        """Rate whose inverse is the requested time unit."""
        rates = {"omega0": self.omega0, "g": self.g, "lambda": self.lam}
        if rates.get(units) is None:
            raise InputError(f"Time unit {units} not available for variant {self.variant}")
        return rates[units]


class GridConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    start: float = Field(default=0.0, ge=0)
    stop: float = Field(gt=0)
    points: int = Field(ge=1)

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)


class ScanConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    spectral_density: SpectralDensityConfig
    t_grid: GridConfig
    tau_grid: GridConfig
    dt: float = Field(gt=0)
    retriever: Literal["singlet", "triplet"] = "singlet"
    margin: float = Field(default=TOLERANCES["detection_margin"], ge=0)


class LorentzianScanConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    variant: Literal["lorentzian"] = "lorentzian"
    parameter: Literal["omega_over_lambda"] = "omega_over_lambda"
    bracket: Tuple[float, float] = tuple(LORENTZIAN_SCAN["bracket"])
    bisection_tol: float = Field(default=LORENTZIAN_SCAN["bisection_tol"], gt=0)
    lam: float = Field(default=LORENTZIAN_SCAN["lambda"], gt=0, alias="lambda")
    omega0: float = Field(default=LORENTZIAN_SCAN["omega0"], gt=0)
    points_per_period: int = Field(default=LORENTZIAN_SCAN["points_per_period"], ge=20)
    periods: float = Field(default=LORENTZIAN_SCAN["periods"], gt=0)
    coarse_points: int = Field(default=LORENTZIAN_SCAN["coarse_points"], ge=2)
    retrievers: List[Literal["singlet", "triplet"]] = list(LORENTZIAN_SCAN["retrievers"])
    table_values: List[float] = list(LORENTZIAN_SCAN["table_values"])

    def as_config(self) -> dict:
        return self.model_dump(by_alias=True)


class OhmicScanConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    variant: Literal["ohmic"] = "ohmic"
    parameter: Literal["omega_c_over_omega0"] = "omega_c_over_omega0"
    bracket: Tuple[float, float] = tuple(OHMIC_SCAN["bracket"])
    bisection_tol: float = Field(default=OHMIC_SCAN["bisection_tol"], gt=0)
    eta: float = Field(default=OHMIC_SCAN["eta"], gt=0)
    omega0: float = Field(default=OHMIC_SCAN["omega0"], gt=0)
    t_max: float = Field(default=OHMIC_SCAN["t_max"], gt=0)
    dt: float = Field(default=OHMIC_SCAN["dt"], gt=0)
    coarse_points: int = Field(default=OHMIC_SCAN["coarse_points"], ge=2)
    retrievers: List[Literal["singlet", "triplet"]] = list(OHMIC_SCAN["retrievers"])
    table_values: List[float] = list(OHMIC_SCAN["table_values"])

    def as_config(self) -> dict:
        return self.model_dump()


class FockScanConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    variant: Literal["single_mode"] = "single_mode"
    g: float = Field(default=FOCK_SCAN["g"], gt=0)
    omega0: float = Field(default=FOCK_SCAN["omega0"], gt=0)
    t: float = Field(default=FOCK_SCAN["t"], ge=0)
    tau_max: float = Field(default=FOCK_SCAN["tau_max"], gt=0)
    tau_points: int = Field(default=FOCK_SCAN["tau_points"], ge=2)
    fock_numbers: List[int] = list(FOCK_SCAN["fock_numbers"])
    betas: List[float] = list(FOCK_SCAN["betas"])

    def as_config(self) -> dict:
        return self.model_dump()


FIGURE_CONFIGS = {
    "figure3": LorentzianScanConfig,
    "figureA1": FockScanConfig,
    "figureA2": OhmicScanConfig,
}


def load_config(path, model):
    """Validate a JSON run configuration; no path means the defaults."""
    if path is None:
        return model()
    return _read_json(path, model)


class ConstraintModel(BaseModel):
    coefficients: Dict[str, Entries]
    rhs: float
    label: str = ""


class SdpProblemFile(BaseModel):
    blocks: List[Tuple[str, int]]
    objective: Dict[str, Entries]
    constraints: List[ConstraintModel]


def dump_problem(problem: SdpProblem, path) -> Path:
    data = SdpProblemFile(
        blocks=list(problem.blocks),
        objective={name: _encode(c) for name, c in problem.objective.items()},
        constraints=[
            ConstraintModel(
                coefficients={name: _encode(a) for name, a in con.coefficients.items()},
                rhs=con.rhs,
                label=con.label,
            )
            for con in problem.constraints
        ],
    )
    return _write_json(path, data)


def load_problem(path) -> SdpProblem:
    data = _read_json(path, SdpProblemFile)
    problem = SdpProblem()
    for name, dim in data.blocks:
        objective = data.objective.get(name)
        problem.add_block(name, dim, None if objective is None else _decode(objective))
    for con in data.constraints:
        problem.add_constraint({n: _decode(a) for n, a in con.coefficients.items()}, con.rhs, con.label)
    problem.validate()
    return problem


class SelfCheck(BaseModel):
    direct: float
    reconstructed: float
    residual: float


class DecompositionTerm(BaseModel):
    i: int
    j: int
    coefficient: float


class DecompositionFile(BaseModel):
    labels: List[str]
    terms: List[DecompositionTerm]
    measurements: List[List[Entries]]
    readouts: List[Entries]
    self_check: Optional[SelfCheck] = None


def dump_decomposition(decomposition, path, self_check: Optional[SelfCheck] = None, tol: float = 0.0) -> Path:
    terms = [
        DecompositionTerm(i=i, j=j, coefficient=float(d))
        for i, row in enumerate(decomposition.coefficients)
        for j, d in enumerate(row)
        if abs(d) > tol
    ]
    data = DecompositionFile(
        labels=list(decomposition.labels),
        terms=terms,
        measurements=[[_encode(e.operator) for e in kraus] for kraus in decomposition.measurements],
        readouts=[_encode(f.operator) for f in decomposition.readouts],
        self_check=self_check,
    )
    return _write_json(path, data)

