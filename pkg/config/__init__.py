"""Configuration package for the quantum memory detection toolkit."""
