"""생성기, 과제 행렬, 데이터셋. 모두 생성 후 불변."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..schemas.experiment import GeneratorKind, LatentDistribution, TaskType
from .types import Matrix


@dataclass(frozen=True)
class Generator:
    """가역 2층 leaky-ReLU MLP g (bias 없음)."""

    layer1_weight: Matrix
    layer2_weight: Matrix
    leaky_slope: float

    @property
    def d(self) -> int:
        return self.layer1_weight.shape[0]


@dataclass(frozen=True)
class TaskMatrix:
    gamma: Matrix  # k×d
    scale: float

    @property
    def k(self) -> int:
        return self.gamma.shape[0]


@dataclass(frozen=True)
class Split:
    X: Matrix
    Y: Matrix
    Z: Matrix

    @property
    def n(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class Dataset:
    task_type: TaskType
    d: int
    k: int
    train: Split
    val: Split
    test: Split
    generator: Generator
    tasks: TaskMatrix
    seed: int
    noise_std: float = 1.0
    latent_dist: LatentDistribution = LatentDistribution.bernoulli
    generator_kind: GeneratorKind = GeneratorKind.mlp

    def split(self, name: str) -> Split:
        if name not in ("train", "val", "test"):
            raise KeyError(name)
        return getattr(self, name)

    def arrays(self) -> list[Matrix]:
        return [
            self.generator.layer1_weight,
            self.generator.layer2_weight,
            self.tasks.gamma,
            *(getattr(self.split(s), a) for s in ("train", "val", "test") for a in ("X", "Y", "Z")),
        ]

    def equals(self, other: "Dataset") -> bool:
        """모든 배열이 비트 단위로 같은지."""
        return all(np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays()))
