"""Default scan for the Lorentzian spectral density family (times in units of 1/lambda)."""

LORENTZIAN_SCAN = {
    "variant": "lorentzian",
    "parameter": "omega_over_lambda",
    "bracket": [0.5, 20.0],
    "bisection_tol": 1e-2,
    "lambda": 1.0,
    "omega0": 1.0,
    "points_per_period": 200,
    "periods": 1.5,
    "coarse_points": 41,
    "retrievers": ["singlet", "triplet"],
    "table_values": [1.0, 2.0, 4.0, 6.0, 7.0, 8.0, 10.0, 14.0],
}
