"""Numerical tolerances shared by validators and detectors."""

TOLERANCES = {
    "hermitian": 1e-10,
    "psd": 1e-9,
    "tpm": 1e-9,
    "tester": 1e-9,
    "frame": 1e-10,
    "unitary": 1e-10,
    "witness_battery": 1e-6,
    "detection_margin": 1e-6,
    "leakage": 1e-8,
    "thermal_tail": 1e-10,
}
