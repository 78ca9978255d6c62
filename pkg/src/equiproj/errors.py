"""Exception types shared across the package.

Plain ``ValueError`` is used for invalid arguments; the classes below carry
extra diagnostic state that callers (and the CLI exit-code mapping) need.
"""

from __future__ import annotations


class ConvergenceError(RuntimeError):
    """An iterative routine hit its iteration cap without converging."""

    def __init__(self, message: str, iterations: int):
        super().__init__(f"{message} (after {iterations} iterations)")
        self.iterations = iterations


class RankDeficiencyError(ValueError):
    """A least-squares system had numerically deficient column rank."""

    def __init__(self, message: str, rank: int):
        super().__init__(f"{message} (numerical rank {rank})")
        self.rank = rank


class CapacityError(ValueError):
    """A dense solve was requested above the supported size cap."""


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, message: str, last_finite_epoch: int):
        super().__init__(f"{message} (last finite epoch {last_finite_epoch})")
        self.last_finite_epoch = last_finite_epoch


class ModelEvaluationError(RuntimeError):
    """A model callable failed during defect evaluation."""

    def __init__(self, message: str, sample_index: int, rotation_index: int):
        super().__init__(
            f"{message} (sample {sample_index}, rotation {rotation_index})"
        )
        self.sample_index = sample_index
        self.rotation_index = rotation_index


class BoundViolationError(RuntimeError):
    """A theoretical inequality failed outside numerical slack."""
