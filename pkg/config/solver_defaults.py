"""Configuration for the interior-point SDP solver."""

SOLVER_DEFAULTS = {
    "tol": 1e-8,
    "max_iter": 200,
    "step_fraction": 0.98,
    "mu_factor": 0.1,
    "stall_iterations": 30,
    "stall_improvement": 0.01,
}
