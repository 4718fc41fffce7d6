from .errors import (
    ErmIcaError,
    NumericsError,
    NonSymmetricMatrixError,
    SingularMatrixError,
    ConvergenceError,
    GenerationError,
    ModelError,
    TrainingDivergedError,
    TransformError,
    MetricError,
    ConfigError,
    HarnessError,
    register_exception_handlers,
)

__all__ = [
    "ErmIcaError",
    "NumericsError",
    "NonSymmetricMatrixError",
    "SingularMatrixError",
    "ConvergenceError",
    "GenerationError",
    "ModelError",
    "TrainingDivergedError",
    "TransformError",
    "MetricError",
    "ConfigError",
    "HarnessError",
    "register_exception_handlers",
]
