"""평가 결과 스키마."""
from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .experiment import TaskType


class Method(str, Enum):
    erm = "erm"
    erm_pca = "erm_pca"
    erm_ica = "erm_ica"


METHOD_ORDER: tuple[Method, ...] = (Method.erm, Method.erm_pca, Method.erm_ica)

# results.csv 컬럼 순서 (고정)
RESULT_COLUMNS: tuple[str, ...] = (
    "method",
    "task_type",
    "d",
    "k",
    "seed",
    "label_score",
    "mcc",
    "ica_converged",
    "wall_time_s",
)


class EvalResult(BaseModel):
    """(method, d, k, task_type, seed) 한 칸의 점수."""

    model_config = ConfigDict(extra="forbid")

    method: Method
    task_type: TaskType
    d: int
    k: int
    seed: int
    label_score: float  # 회귀: 평균 R², 분류: 평균 정확도
    mcc: float = Field(..., ge=0.0, le=1.0)
    ica_converged: bool | None = None
    affine_r2: float | None = None
    wall_time_s: float | None = None

    @model_validator(mode="after")
    def _check_score(self) -> "EvalResult":
        if self.label_score > 1.0 + 1e-12:
            raise ValueError(f"label_score {self.label_score} > 1")
        if self.task_type == TaskType.classification and self.label_score < 0.0:
            raise ValueError(f"accuracy {self.label_score} < 0")
        return self

    @property
    def cell_key(self) -> tuple[str, int, int, int]:
        return (self.task_type.value, self.d, self.k, self.seed)


class CellAggregate(BaseModel):
    """seed 평균/표준편차 (ddof=0)."""

    method: Method
    task_type: TaskType
    d: int
    k: int
    n_seeds: int
    label_score_mean: float
    label_score_std: float
    mcc_mean: float
    mcc_std: float


class CellFailure(BaseModel):
    task_type: TaskType
    d: int
    k: int
    seed: int
    error: str
