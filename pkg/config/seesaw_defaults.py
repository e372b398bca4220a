"""Configuration for see-saw optimizations over the classical-memory set."""

SEESAW_DEFAULTS = {
    "ensemble_size": 4,
    "restarts": 8,
    "max_sweeps": 50,
    "improvement_tol": 1e-9,
    "battery_size": 100,
    "dinkelbach_iterations": 30,
}
