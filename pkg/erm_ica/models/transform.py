"""표현에 적용하는 선형 변환 (R − offset) · matrixᵀ."""
from __future__ import annotations

from dataclasses import dataclass

from ..schemas.artifacts import TransformKind
from .types import Matrix


@dataclass(frozen=True)
class LinearTransform:
    matrix: Matrix  # d'×d
    offset: Matrix  # (d,) 열 평균
    kind: TransformKind
    converged: bool | None = None
    iterations: int | None = None
    # ica 전용: 백색화 좌표에서의 unmixing W와 백색화 변환 (matrix = W · whitener.matrix)
    unmixing: Matrix | None = None
    whitener: "LinearTransform | None" = None

    @property
    def in_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def out_dim(self) -> int:
        return self.matrix.shape[0]
