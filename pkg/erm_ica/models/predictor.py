"""예측기 Θ∘Φ — fc1(d→100) · bn1 · leaky · fc2(100→d) · bn2 · leaky · head(d→k)."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .types import Matrix

HIDDEN = 100
LEAKY_SLOPE = 0.5
BN_MOMENTUM = 0.1
BN_EPS = 1e-5

# weight decay 적용 대상 (affine weight만)
WEIGHT_PARAMS = ("fc1_w", "fc2_w", "head_w")
PARAM_NAMES = (
    "fc1_w",
    "fc1_b",
    "bn1_scale",
    "bn1_shift",
    "fc2_w",
    "fc2_b",
    "bn2_scale",
    "bn2_shift",
    "head_w",
    "head_b",
)
BUFFER_NAMES = ("bn1_running_mean", "bn1_running_var", "bn2_running_mean", "bn2_running_var")


@dataclass
class PredictorModel:
    d: int
    k: int
    params: dict[str, np.ndarray]
    buffers: dict[str, np.ndarray]
    hidden: int = HIDDEN
    leaky_slope: float = LEAKY_SLOPE
    bn_momentum: float = BN_MOMENTUM
    bn_eps: float = BN_EPS
    training: bool = True

    def train(self) -> "PredictorModel":
        self.training = True
        return self

    def eval(self) -> "PredictorModel":
        self.training = False
        return self

    @property
    def mode(self) -> str:
        return "train" if self.training else "eval"

    def parameter_count(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def copy(self) -> "PredictorModel":
        return copy.deepcopy(self)


@dataclass
class OptimizerState:
    """SGD + momentum. buffer 모양은 파라미터와 같음."""

    lr: float
    momentum: float = 0.9
    weight_decay: float = 5e-4
    buffers: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_model(cls, model: PredictorModel, lr: float, momentum: float = 0.9, weight_decay: float = 5e-4) -> "OptimizerState":
        return cls(
            lr=lr,
            momentum=momentum,
            weight_decay=weight_decay,
            buffers={name: np.zeros_like(p) for name, p in model.params.items()},
        )


@dataclass
class ForwardResult:
    representation: Matrix  # n×d, head 직전
    output: Matrix  # n×k
    cache: dict[str, np.ndarray] = field(default_factory=dict, repr=False)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    lr: float


@dataclass
class TrainResult:
    best_model: PredictorModel
    history: list[EpochRecord]
    best_epoch: int

    @property
    def best_val_loss(self) -> float:
        return self.history[self.best_epoch - 1].val_loss
