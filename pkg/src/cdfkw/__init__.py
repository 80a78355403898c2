"""Fine-grained CDF solvers for kinematic wave models with random inputs."""

__version__ = "0.1.0"
