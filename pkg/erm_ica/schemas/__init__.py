from .experiment import (
    TaskType,
    LatentDistribution,
    GeneratorKind,
    LossKind,
    IcaContrast,
    DatasetConfig,
    TrainOverrides,
    TrainConfig,
    IcaSettings,
    ExperimentConfig,
    loss_for_task,
)
from .results import Method, METHOD_ORDER, RESULT_COLUMNS, EvalResult, CellAggregate, CellFailure
from .artifacts import TransformKind, DatasetMeta, ModelCheckpoint, TransformFile

__all__ = [
    "TaskType",
    "LatentDistribution",
    "GeneratorKind",
    "LossKind",
    "IcaContrast",
    "DatasetConfig",
    "TrainOverrides",
    "TrainConfig",
    "IcaSettings",
    "ExperimentConfig",
    "loss_for_task",
    "Method",
    "METHOD_ORDER",
    "RESULT_COLUMNS",
    "EvalResult",
    "CellAggregate",
    "CellFailure",
    "TransformKind",
    "DatasetMeta",
    "ModelCheckpoint",
    "TransformFile",
]
