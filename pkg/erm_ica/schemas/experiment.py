"""실험 설정 스키마."""
from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..config.settings import settings

SEED_MAX = 2**64 - 1


class TaskType(str, Enum):
    regression = "regression"
    classification = "classification"


class LatentDistribution(str, Enum):
    bernoulli = "bernoulli"  # {0,1} 균등
    uniform = "uniform"  # 연속 [0,1]


class GeneratorKind(str, Enum):
    mlp = "mlp"
    linear = "linear"  # leaky slope 1 → 선형 g


class LossKind(str, Enum):
    mse = "mse"
    bce = "bce"


class IcaContrast(str, Enum):
    logcosh = "logcosh"
    exp = "exp"
    cube = "cube"


def loss_for_task(task_type: TaskType) -> LossKind:
    return LossKind.mse if task_type == TaskType.regression else LossKind.bce


class DatasetConfig(BaseModel):
    """한 실험 조건의 (X, Y, Z) 생성 설정."""

    model_config = ConfigDict(extra="forbid")

    task_type: TaskType
    d: int = Field(..., ge=1)
    k: int = Field(..., ge=1)
    seed: int = Field(0, ge=0, le=SEED_MAX)
    noise_std: float = Field(1.0, ge=0.0)
    latent_dist: LatentDistribution = LatentDistribution.bernoulli
    generator: GeneratorKind = GeneratorKind.mlp
    n_train: int = Field(5000, ge=2)
    n_val: int = Field(1250, ge=1)
    n_test: int = Field(5000, ge=3)

    @model_validator(mode="after")
    def _check_k(self) -> "DatasetConfig":
        if self.k > self.d:
            raise ValueError(f"k={self.k} must not exceed d={self.d}")
        return self


class TrainOverrides(BaseModel):
    """TrainConfig 기본값 위에 덮어쓸 항목 (None이면 기본값 유지)."""

    model_config = ConfigDict(extra="forbid")

    epochs: int | None = Field(None, ge=1)
    batch_size: int | None = Field(None, ge=2)
    base_lr: float | None = Field(None, gt=0.0)
    lr_halve_every: int | None = Field(None, ge=1)
    momentum: float | None = Field(None, ge=0.0, lt=1.0)
    weight_decay: float | None = Field(None, ge=0.0)


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(..., ge=1)
    batch_size: int = Field(512, ge=2)
    base_lr: float = Field(..., gt=0.0)
    lr_halve_every: int = Field(50, ge=1)
    loss: LossKind
    seed: int = Field(0, ge=0, le=SEED_MAX)
    momentum: float = Field(0.9, ge=0.0, lt=1.0)
    weight_decay: float = Field(5e-4, ge=0.0)

    @classmethod
    def for_task(
        cls,
        task_type: TaskType,
        seed: int = 0,
        overrides: TrainOverrides | None = None,
    ) -> "TrainConfig":
        """과제 유형별 기본값 (회귀: lr 0.01 / 1000 epochs, 분류: lr 0.05 / 200 epochs)."""
        if task_type == TaskType.regression:
            base = {"epochs": 1000, "base_lr": 0.01}
        else:
            base = {"epochs": 200, "base_lr": 0.05}
        values = {**base, "loss": loss_for_task(task_type), "seed": seed}
        if overrides is not None:
            values.update(overrides.model_dump(exclude_none=True))
        return cls(**values)

    def lr_at(self, epoch: int) -> float:
        """epoch는 1부터. lr_halve_every epoch마다 절반."""
        return self.base_lr * 0.5 ** ((epoch - 1) // self.lr_halve_every)


class IcaSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    max_iter: int = Field(default_factory=lambda: settings.ica_max_iter, ge=1)
    tol: float = Field(default_factory=lambda: settings.ica_tol, gt=0.0)
    fun: IcaContrast = IcaContrast.logcosh
    alpha: float = Field(1.0, ge=1.0, le=2.0)


class ExperimentConfig(BaseModel):
    """sweep 설정 파일(JSON). 알 수 없는 키는 거부."""

    model_config = ConfigDict(extra="forbid")

    task_type: TaskType
    d: int | list[int]
    k_list: list[int] | None = None
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2])
    noise_std: float = Field(1.0, ge=0.0)
    latent_dist: LatentDistribution = LatentDistribution.bernoulli
    generator: GeneratorKind = GeneratorKind.mlp
    n_train: int = Field(5000, ge=2)
    n_val: int = Field(1250, ge=1)
    n_test: int = Field(5000, ge=3)
    train: TrainOverrides = Field(default_factory=TrainOverrides)
    ica: IcaSettings = Field(default_factory=IcaSettings)
    workers: int | None = Field(None, ge=1)
    output_dir: str | None = None

    @field_validator("seeds")
    @classmethod
    def _check_seeds(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("seeds must not be empty")
        for s in v:
            if not 0 <= s <= SEED_MAX:
                raise ValueError(f"seed {s} is not a 64-bit unsigned integer")
        return v

    @field_validator("d")
    @classmethod
    def _check_d(cls, v: int | list[int]) -> int | list[int]:
        values = [v] if isinstance(v, int) else v
        if not values or any(x < 1 for x in values):
            raise ValueError("d must be a positive integer or a non-empty list of them")
        return v

    @model_validator(mode="after")
    def _check_k(self) -> "ExperimentConfig":
        for d in self.d_values:
            for k in self.k_values(d):
                if not 1 <= k <= d:
                    raise ValueError(f"k={k} must satisfy 1 <= k <= d={d}")
        return self

    @property
    def d_values(self) -> list[int]:
        return [self.d] if isinstance(self.d, int) else list(self.d)

    def k_values(self, d: int) -> list[int]:
        """k_list 미지정 시 {d/2, 3d/4, d}."""
        if self.k_list is not None:
            return list(self.k_list)
        return sorted({max(1, d // 2), max(1, (3 * d) // 4), d})

    def cells(self) -> list[tuple[int, int, int]]:
        return [(d, k, seed) for d in self.d_values for k in self.k_values(d) for seed in self.seeds]

    def dataset_config(self, d: int, k: int, seed: int) -> DatasetConfig:
        return DatasetConfig(
            task_type=self.task_type,
            d=d,
            k=k,
            seed=seed,
            noise_std=self.noise_std,
            latent_dist=self.latent_dist,
            generator=self.generator,
            n_train=self.n_train,
            n_val=self.n_val,
            n_test=self.n_test,
        )
