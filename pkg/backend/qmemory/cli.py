"""Command-line front end: validate, detect, spinboson scans and witness decompositions.

Exit codes: 0 ok, 1 semantic failure, 2 input failure, 3 numeric failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from config.seesaw_defaults import SEESAW_DEFAULTS
from config.tolerances import TOLERANCES

from .errors import InputError, NumericError, QMemoryError
from .frames import product_frame
from .memory import (
    build_witness,
    classical_threshold_seesaw,
    discrimination_protocol,
    kappa,
    memory_dimension_bound,
    relaxation_upper_bound,
    retriever_value,
    witness_to_correlations,
)
from .process import as_tpm, validate_tpm
from .sampling import random_cm_process
from .scan import figure3, figureA1, figureA2, scan_detection, write_table
from .schemas import (
    FIGURE_CONFIGS,
    DetectionReport,
    LambdaStarReport,
    ProtocolReport,
    ScanConfig,
    SelfCheck,
    dump_decomposition,
    dump_operator,
    load_config,
    load_operator,
)
from .spinboson import theta_star
from .tensor import identity, link_value

logger = logging.getLogger(__name__)


def _emit(payload: str):
    print(payload)


def _out_dir(args) -> Path:
    path = Path(args.out or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_validate(args) -> int:
    w, _ = load_operator(args.path)
    report = validate_tpm(w, args.tol or TOLERANCES["tpm"])
    _emit(report.model_dump_json(indent=2))
    if not report.valid:
        logger.error(f"{args.path} is not a valid TPM process matrix: {report.residuals()}")
        return 1
    return 0


def cmd_detect(args) -> int:
    w, _ = load_operator(args.path)
    process = as_tpm(w)
    value, retriever = retriever_value(process, tol=args.tol or 1e-8)
    d_min = memory_dimension_bound(value)
    detected = value > 1 + 1e-6
    message = (
        f"environment cannot be simulated with memory dimension < {d_min}"
        if detected
        else "no quantum memory detected"
    )
    report = DetectionReport(value=value, dimension_bound=d_min, detected=detected, message=message)
    if args.lambda_star:
        seesaw = classical_threshold_seesaw(retriever, args.ensemble_size, args.restarts, args.seed)
        report.lambda_star = LambdaStarReport(
            lower=seesaw.value,
            relaxation_upper=relaxation_upper_bound(retriever),
            ensemble_size=args.ensemble_size,
            restarts=args.restarts,
        )
    if args.protocol:
        result = discrimination_protocol(retriever, process)
        report.protocol = ProtocolReport(
            per_letter=result.per_letter, inconclusive=result.inconclusive, average=result.average
        )
    if args.theta_out:
        dump_operator(retriever.theta, args.theta_out, kind="retriever")
    _emit(report.model_dump_json(indent=2))
    return 0


def cmd_scan(args) -> int:
    if args.config is None:
        raise InputError("spinboson scan needs a --config file")
    cfg = load_config(args.config, ScanConfig)
    sd_cfg = cfg.spectral_density
    scale = 1.0 / sd_cfg.unit_rate(args.units)
    retriever = args.retriever or cfg.retriever
    result = scan_detection(
        sd_cfg.build(),
        cfg.t_grid.values() * scale,
        cfg.tau_grid.values() * scale,
        retriever,
        dt=cfg.dt * scale,
        margin=cfg.margin,
    )
    table = result.table()
    table["t"] /= scale
    table["tau"] /= scale
    out = _out_dir(args)
    write_table(table, out / "scan.csv")
    summary = {
        "units": args.units,
        "retriever": retriever,
        "max_m": result.max_m,
        "argmax": [x / scale for x in result.argmax],
        "detected": result.detected,
        "non_markovian": result.non_markovian,
    }
    (out / "scan_summary.json").write_text(json.dumps(summary, indent=2))
    _emit(json.dumps(summary, indent=2))
    return 0


def _figure_config(args):
    if args.config is None:
        return FIGURE_CONFIGS[args.figure]().as_config()
    return load_config(args.config, FIGURE_CONFIGS[args.figure]).as_config()


def cmd_figure(args) -> int:
    cfg = _figure_config(args)
    out = _out_dir(args)
    if args.figure == "figureA1":
        tables = figureA1(cfg)
        for name, table in tables.items():
            write_table(table, out / f"figureA1_{name}.csv")
        _emit(json.dumps({"files": sorted(f"figureA1_{name}.csv" for name in tables)}, indent=2))
        return 0
    builder = figure3 if args.figure == "figure3" else figureA2
    table, summary = builder(cfg, jobs=args.jobs)
    write_table(table, out / f"{args.figure}.csv")
    (out / f"{args.figure}_summary.json").write_text(json.dumps(summary, indent=2))
    _emit(json.dumps(summary, indent=2))
    return 0


def cmd_witness(args) -> int:
    if args.theta_star:
        theta = theta_star()
        z = theta.theta
    elif args.z:
        z, _ = load_operator(args.z)
        theta = None
    else:
        raise InputError("witness needs --z FILE or --theta-star")
    if args.assemble:
        if theta is None:
            raise InputError("--assemble needs --theta-star")
        b = z.space.subsystems[1]
        z0 = identity(z.space) / b.dim
        estimate = kappa(theta, z0, args.ensemble_size, args.restarts, args.seed)
        z = build_witness(theta, z0, estimate, seed=args.seed).z
        logger.info(f"Assembled witness with heuristic kappa {estimate.value:.8f}")
    if len(z.names) != 3:
        raise InputError(f"Witness must live on three labels, got {z.names}")
    a, b, c = z.space.subsystems
    decomposition = witness_to_correlations(z, product_frame(a, b), product_frame(c))
    if args.process:
        w = as_tpm(load_operator(args.process)[0])
    else:
        w = random_cm_process(np.random.default_rng(args.seed), dims=z.dims, labels=z.names)
    direct = float(np.real(link_value(z, w.w)))
    reconstructed = decomposition.evaluate(w)
    check = SelfCheck(direct=direct, reconstructed=reconstructed, residual=abs(direct - reconstructed))
    dump_decomposition(decomposition, _out_dir(args) / "decomposition.json", check)
    _emit(check.model_dump_json(indent=2))
    tol = args.tol or 1e-9
    if check.residual > tol * (1 + abs(direct)):
        logger.error(f"Reconstruction misses the direct value by {check.residual:.3e} (tolerance {tol:.1e})")
        return NumericError.exit_code
    return 0


_OPTIONS = {
    "config": dict(help="JSON run configuration"),
    "out": dict(help="output directory"),
    "seed": dict(type=int, default=None),
    "jobs": dict(type=int, default=1, help="worker processes for parameter scans"),
    "tol": dict(type=float, default=None),
    "units": dict(choices=["omega0", "g", "lambda"], default="omega0"),
}


def _common(*names: str) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    for name in names:
        common.add_argument(f"--{name}", **_OPTIONS[name])
    common.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmemory", description="Quantum memory detection in TPM processes")
    commands = parser.add_subparsers(dest="command", required=True)

    validate = commands.add_parser("validate", parents=[_common("tol")], help="check a TPM process matrix file")
    validate.add_argument("path")
    validate.set_defaults(func=cmd_validate)

    detect = commands.add_parser(
        "detect", parents=[_common("seed", "tol")], help="compute the entanglement retriever value"
    )
    detect.add_argument("path")
    detect.add_argument("--lambda-star", action="store_true", help="bracket the classical threshold of the optimal retriever")
    detect.add_argument("--protocol", action="store_true", help="run the Pauli discrimination protocol")
    detect.add_argument("--theta-out", help="write the optimal retriever to this file")
    detect.add_argument("--ensemble-size", type=int, default=SEESAW_DEFAULTS["ensemble_size"])
    detect.add_argument("--restarts", type=int, default=SEESAW_DEFAULTS["restarts"])
    detect.set_defaults(func=cmd_detect)

    spinboson = commands.add_parser("spinboson", help="spin-boson memory scans")
    scans = spinboson.add_subparsers(dest="figure", required=True)
    scan = scans.add_parser(
        "scan", parents=[_common("config", "out", "units")], help="scan m(t, tau) for one spectral density"
    )
    scan.add_argument("--retriever", choices=["singlet", "triplet"], default=None)
    scan.set_defaults(func=cmd_scan)
    for name in FIGURE_CONFIGS:
        # figureA1 is closed-form and runs inline
        options = ("config", "out") if name == "figureA1" else ("config", "out", "jobs")
        figure = scans.add_parser(name, parents=[_common(*options)], help=f"reproduce the {name} tables")
        figure.set_defaults(func=cmd_figure)

    witness = commands.add_parser(
        "witness", parents=[_common("out", "seed", "tol")], help="decompose a witness into correlations"
    )
    witness.add_argument("--z", help="Hermitian operator file on (A, B, C)")
    witness.add_argument("--theta-star", action="store_true", help="use the built-in optimal retriever")
    witness.add_argument("--assemble", action="store_true", help="assemble a witness with a see-saw kappa first")
    witness.add_argument("--process", help="TPM file for the self-check")
    witness.add_argument("--ensemble-size", type=int, default=SEESAW_DEFAULTS["ensemble_size"])
    witness.add_argument("--restarts", type=int, default=SEESAW_DEFAULTS["restarts"])
    witness.set_defaults(func=cmd_witness)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(asctime)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except QMemoryError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return exc.exit_code
    except (np.linalg.LinAlgError, ArithmeticError) as exc:
        logger.error(f"Numeric failure {type(exc).__name__}: {exc}")
        return NumericError.exit_code


if __name__ == "__main__":
    sys.exit(main())
