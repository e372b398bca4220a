"""Default single-mode scans over Fock numbers and inverse temperatures (times in units of 1/g)."""

FOCK_SCAN = {
    "variant": "single_mode",
    "g": 1.0,
    "omega0": 1.0,
    "t": 0.7853981633974483,
    "tau_max": 6.283185307179586,
    "tau_points": 201,
    "fock_numbers": [0, 1, 2, 5],
    "betas": [0.5, 1.0, 2.0, 5.0],
}
