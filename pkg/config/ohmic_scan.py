"""Default scan for the Ohmic spectral density with hard cutoff (times in units of 1/omega0)."""

OHMIC_SCAN = {
    "variant": "ohmic",
    "parameter": "omega_c_over_omega0",
    "bracket": [0.5, 8.0],
    "bisection_tol": 1e-2,
    "eta": 0.1,
    "omega0": 1.0,
    "t_max": 12.0,
    "dt": 0.01,
    "coarse_points": 41,
    "retrievers": ["singlet", "triplet"],
    "table_values": [0.5, 1.0, 2.0, 2.5, 3.0, 3.5, 4.0, 6.0],
}
