from .dataset import Dataset, Generator, Split, TaskMatrix
from .predictor import EpochRecord, ForwardResult, OptimizerState, PredictorModel, TrainResult
from .results_table import ResultsTable
from .transform import LinearTransform
from .types import Matrix

__all__ = [
    "Dataset",
    "Generator",
    "Split",
    "TaskMatrix",
    "EpochRecord",
    "ForwardResult",
    "OptimizerState",
    "PredictorModel",
    "TrainResult",
    "ResultsTable",
    "LinearTransform",
    "Matrix",
]
