"""파일 산출물 스키마 (meta.json, model.json, transform.json)."""
from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict

from .experiment import GeneratorKind, LatentDistribution, TaskType, TrainConfig


class TransformKind(str, Enum):
    whiten = "whiten"
    pca = "pca"
    ica = "ica"


class DatasetMeta(BaseModel):
    model_config = ConfigDict(extra="forbid")

    d: int
    k: int
    task_type: TaskType
    seed: int
    noise_std: float
    slope: float
    latent_dist: LatentDistribution = LatentDistribution.bernoulli
    generator: GeneratorKind = GeneratorKind.mlp
    task_scale: float = 1.0


class ModelCheckpoint(BaseModel):
    """model.json: 파라미터, running stats, 학습 설정."""

    model_config = ConfigDict(extra="forbid")

    d: int
    k: int
    hidden: int
    leaky_slope: float
    bn_momentum: float
    bn_eps: float
    shapes: dict[str, list[int]]
    params: dict[str, list[float]]
    buffers: dict[str, list[float]]
    train_config: TrainConfig | None = None
    best_epoch: int | None = None


class TransformFile(BaseModel):
    """transform.json."""

    model_config = ConfigDict(extra="forbid")

    kind: TransformKind
    matrix: list[list[float]]
    offset: list[float]
    converged: bool | None = None
    iterations: int | None = None
