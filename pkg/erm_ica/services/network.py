"""지도학습 예측기 Θ∘Φ — 순전파/역전파(batch-norm 포함), SGD momentum, 검증 손실 기반 모델 선택."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.special import expit

from ..config.settings import settings
from ..middleware.errors import ModelError, TrainingDivergedError
from ..models.dataset import Dataset
from ..models.predictor import (
    BUFFER_NAMES,
    HIDDEN,
    PARAM_NAMES,
    WEIGHT_PARAMS,
    EpochRecord,
    ForwardResult,
    OptimizerState,
    PredictorModel,
    TrainResult,
)
from ..models.types import Matrix
from ..schemas.artifacts import ModelCheckpoint
from ..schemas.experiment import LossKind, TaskType, TrainConfig
from ..utils.io import read_json, write_json
from .metrics import score_labels
from .numerics import RngStream, derive_seed

logger = logging.getLogger(__name__)


def _fan_in_uniform(rng: RngStream, rows: int, cols: int) -> Matrix:
    bound = 1.0 / np.sqrt(cols)
    return rng.uniform(rows, cols) * (2.0 * bound) - bound


def init_model(rng: RngStream, d: int, k: int, hidden: int = HIDDEN) -> PredictorModel:
    """affine weight ~ U(±1/√fan_in), bias 0, bn scale 1 / shift 0, running stats (0, 1)."""
    if d < 1 or k < 1:
        raise ModelError(f"init_model: d and k must be >= 1 (d={d}, k={k})")
    params = {
        "fc1_w": _fan_in_uniform(rng, hidden, d),
        "fc1_b": np.zeros(hidden),
        "bn1_scale": np.ones(hidden),
        "bn1_shift": np.zeros(hidden),
        "fc2_w": _fan_in_uniform(rng, d, hidden),
        "fc2_b": np.zeros(d),
        "bn2_scale": np.ones(d),
        "bn2_shift": np.zeros(d),
        "head_w": _fan_in_uniform(rng, k, d),
        "head_b": np.zeros(k),
    }
    buffers = {
        "bn1_running_mean": np.zeros(hidden),
        "bn1_running_var": np.ones(hidden),
        "bn2_running_mean": np.zeros(d),
        "bn2_running_var": np.ones(d),
    }
    return PredictorModel(d=d, k=k, params=params, buffers=buffers, hidden=hidden)


def _leaky(x: Matrix, slope: float) -> Matrix:
    return np.where(x >= 0, x, slope * x)


def _leaky_grad(x: Matrix, slope: float) -> Matrix:
    return np.where(x >= 0, 1.0, slope)


def _batch_norm(model: PredictorModel, h: Matrix, prefix: str, training: bool, cache: dict) -> Matrix:
    scale = model.params[f"{prefix}_scale"]
    shift = model.params[f"{prefix}_shift"]
    if training:
        n = h.shape[0]
        mu = h.mean(axis=0)
        var = h.var(axis=0)
        inv_std = 1.0 / np.sqrt(var + model.bn_eps)
        xhat = (h - mu) * inv_std
        m = model.bn_momentum
        # running_var는 불편 분산으로 갱신
        model.buffers[f"{prefix}_running_mean"] = (1 - m) * model.buffers[f"{prefix}_running_mean"] + m * mu
        model.buffers[f"{prefix}_running_var"] = (1 - m) * model.buffers[f"{prefix}_running_var"] + m * var * n / (n - 1)
    else:
        inv_std = 1.0 / np.sqrt(model.buffers[f"{prefix}_running_var"] + model.bn_eps)
        xhat = (h - model.buffers[f"{prefix}_running_mean"]) * inv_std
    cache[f"{prefix}_xhat"] = xhat
    cache[f"{prefix}_inv_std"] = inv_std
    return scale * xhat + shift


def forward(model: PredictorModel, X: Matrix, *, training: bool | None = None) -> ForwardResult:
    """train 모드는 배치 통계 사용 + running stats 갱신, eval 모드는 running stats 사용."""
    training = model.training if training is None else training
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.d:
        raise ModelError(f"forward: expected n×{model.d} input, got {X.shape}")
    if training and X.shape[0] < 2:
        raise ModelError(f"forward: train mode needs a batch of at least 2 rows, got {X.shape[0]}")

    p = model.params
    cache: dict[str, np.ndarray] = {"x": X, "training": np.array(training)}
    h1 = X @ p["fc1_w"].T + p["fc1_b"]
    b1 = _batch_norm(model, h1, "bn1", training, cache)
    a1 = _leaky(b1, model.leaky_slope)
    h2 = a1 @ p["fc2_w"].T + p["fc2_b"]
    b2 = _batch_norm(model, h2, "bn2", training, cache)
    rep = _leaky(b2, model.leaky_slope)
    out = rep @ p["head_w"].T + p["head_b"]
    cache.update(b1=b1, a1=a1, b2=b2)
    return ForwardResult(representation=rep, output=out, cache=cache)


def loss(output: Matrix, Y: Matrix, kind: LossKind) -> tuple[float, Matrix]:
    """(값, 출력에 대한 기울기). n·k 전체 평균."""
    if output.shape != Y.shape:
        raise ModelError(f"loss: output shape {output.shape} != label shape {Y.shape}")
    size = output.size
    if kind == LossKind.mse:
        diff = output - Y
        return float(np.mean(diff**2)), 2.0 * diff / size
    if not np.all((Y == 0.0) | (Y == 1.0)):
        raise ModelError("loss: binary cross-entropy needs labels in {0, 1}")
    # log(1 + e^o) - y·o 를 안정적으로
    value = np.maximum(output, 0.0) - output * Y + np.log1p(np.exp(-np.abs(output)))
    return float(np.mean(value)), (expit(output) - Y) / size


def _batch_norm_backward(model: PredictorModel, dy: Matrix, prefix: str, cache: dict, grads: dict) -> Matrix:
    xhat = cache[f"{prefix}_xhat"]
    inv_std = cache[f"{prefix}_inv_std"]
    scale = model.params[f"{prefix}_scale"]
    grads[f"{prefix}_scale"] = np.sum(dy * xhat, axis=0)
    grads[f"{prefix}_shift"] = np.sum(dy, axis=0)
    dxhat = dy * scale
    if not bool(cache["training"]):
        return dxhat * inv_std
    n = dy.shape[0]
    return inv_std / n * (n * dxhat - dxhat.sum(axis=0) - xhat * np.sum(dxhat * xhat, axis=0))


def backward(model: PredictorModel, result: ForwardResult, grad_output: Matrix) -> dict[str, np.ndarray]:
    """같은 배치의 forward 결과로 모든 파라미터 기울기 계산 (배치 통계 항 포함)."""
    c = result.cache
    p = model.params
    if grad_output.shape != result.output.shape:
        raise ModelError(f"backward: grad shape {grad_output.shape} != output shape {result.output.shape}")
    grads: dict[str, np.ndarray] = {}

    grads["head_w"] = grad_output.T @ result.representation
    grads["head_b"] = grad_output.sum(axis=0)
    d_rep = grad_output @ p["head_w"]

    d_b2 = d_rep * _leaky_grad(c["b2"], model.leaky_slope)
    d_h2 = _batch_norm_backward(model, d_b2, "bn2", c, grads)
    grads["fc2_w"] = d_h2.T @ c["a1"]
    grads["fc2_b"] = d_h2.sum(axis=0)
    d_a1 = d_h2 @ p["fc2_w"]

    d_b1 = d_a1 * _leaky_grad(c["b1"], model.leaky_slope)
    d_h1 = _batch_norm_backward(model, d_b1, "bn1", c, grads)
    grads["fc1_w"] = d_h1.T @ c["x"]
    grads["fc1_b"] = d_h1.sum(axis=0)
    return grads


def sgd_step(model: PredictorModel, grads: dict[str, np.ndarray], opt: OptimizerState) -> None:
    """g' = g + wd·θ (affine weight만), buf = μ·buf + g', θ ← θ − lr·buf."""
    for name in PARAM_NAMES:
        theta = model.params[name]
        g = grads[name]
        if g.shape != theta.shape:
            raise ModelError(f"sgd_step: grad {name} has shape {g.shape}, parameter {theta.shape}")
        if opt.weight_decay and name in WEIGHT_PARAMS:
            g = g + opt.weight_decay * theta
        buf = opt.buffers.get(name)
        buf = g.copy() if buf is None else opt.momentum * buf + g
        opt.buffers[name] = buf
        model.params[name] = theta - opt.lr * buf


def evaluate_loss(model: PredictorModel, X: Matrix, Y: Matrix, kind: LossKind) -> float:
    value, _ = loss(forward(model, X, training=False).output, Y, kind)
    return value


def train(
    model: PredictorModel,
    dataset: Dataset,
    config: TrainConfig,
    *,
    log_every: int | None = None,
) -> TrainResult:
    """epoch마다 train 행을 셔플해 미니배치 SGD, 검증 손실 최소 시점의 스냅샷 반환.

    마지막 미니배치는 크기가 모자라도 사용한다 (2행 미만이면 batch-norm 때문에 건너뜀).
    """
    log_every = settings.log_every_epochs if log_every is None else log_every
    X, Y = dataset.train.X, dataset.train.Y
    if X.shape[0] < 2 or dataset.val.n < 1:
        raise ModelError("train: dataset needs a train split of >= 2 rows and a non-empty val split")

    opt = OptimizerState.for_model(model, config.base_lr, config.momentum, config.weight_decay)
    shuffle_rng = RngStream(derive_seed(config.seed, "shuffle"))
    n = X.shape[0]
    history: list[EpochRecord] = []
    best_model: PredictorModel | None = None
    best_epoch = 0
    best_val = np.inf

    for epoch in range(1, config.epochs + 1):
        opt.lr = config.lr_at(epoch)
        model.train()
        order = shuffle_rng.permutation(n)
        total, count = 0.0, 0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            if idx.size < 2:
                logger.debug("epoch %d: skipping batch of %d row(s)", epoch, idx.size)
                continue
            result = forward(model, X[idx])
            value, grad_out = loss(result.output, Y[idx], config.loss)
            if not np.isfinite(value):
                raise TrainingDivergedError(epoch, value)
            sgd_step(model, backward(model, result, grad_out), opt)
            total += value * idx.size
            count += idx.size

        train_loss = total / count
        val_loss = evaluate_loss(model, dataset.val.X, dataset.val.Y, config.loss)
        if not np.isfinite(val_loss):
            raise TrainingDivergedError(epoch, val_loss)
        history.append(EpochRecord(epoch=epoch, train_loss=train_loss, val_loss=val_loss, lr=opt.lr))
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_model = model.copy().eval()
        if log_every and epoch % log_every == 0:
            logger.info(
                "epoch %d/%d lr=%.5g train=%.5f val=%.5f (best %.5f @ %d)",
                epoch,
                config.epochs,
                opt.lr,
                train_loss,
                val_loss,
                best_val,
                best_epoch,
            )

    model.eval()
    assert best_model is not None
    return TrainResult(best_model=best_model, history=history, best_epoch=best_epoch)


def extract_representation(model: PredictorModel, X: Matrix) -> Matrix:
    """head 직전 표현 Φ(X), eval 모드."""
    return forward(model, X, training=False).representation


def predict(model: PredictorModel, X: Matrix) -> Matrix:
    return forward(model, X, training=False).output


def label_score(model: PredictorModel, X: Matrix, Y: Matrix, task_type: TaskType) -> float:
    """학습된 head의 점수. 분류는 logit을 확률로 바꿔 0.5 기준."""
    output = predict(model, X)
    if task_type == TaskType.classification:
        output = expit(output)
    return score_labels(Y, output, task_type)


def apply_head(model: PredictorModel, representation: Matrix) -> Matrix:
    return representation @ model.params["head_w"].T + model.params["head_b"]


def numerical_gradient(f: Callable[[], float], param: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """중심 차분 기울기. param을 제자리에서 흔들었다가 되돌림."""
    grad = np.zeros_like(param)
    it = np.nditer(param, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = param[idx]
        param[idx] = orig + step
        plus = f()
        param[idx] = orig - step
        minus = f()
        param[idx] = orig
        grad[idx] = (plus - minus) / (2 * step)
    return grad


def save_checkpoint(
    model: PredictorModel,
    path: Path,
    train_config: TrainConfig | None = None,
    best_epoch: int | None = None,
) -> Path:
    ckpt = ModelCheckpoint(
        d=model.d,
        k=model.k,
        hidden=model.hidden,
        leaky_slope=model.leaky_slope,
        bn_momentum=model.bn_momentum,
        bn_eps=model.bn_eps,
        shapes={name: list(arr.shape) for name, arr in {**model.params, **model.buffers}.items()},
        params={name: model.params[name].ravel().tolist() for name in PARAM_NAMES},
        buffers={name: model.buffers[name].ravel().tolist() for name in BUFFER_NAMES},
        train_config=train_config,
        best_epoch=best_epoch,
    )
    write_json(Path(path), ckpt.model_dump(mode="json"))
    return Path(path)


def load_checkpoint(path: Path) -> tuple[PredictorModel, TrainConfig | None]:
    ckpt = ModelCheckpoint.model_validate(read_json(Path(path)))
    missing = [n for n in (*PARAM_NAMES, *BUFFER_NAMES) if n not in ckpt.shapes]
    if missing:
        raise ModelError(f"checkpoint {path} is missing {missing}")

    def restore(values: dict[str, list[float]], name: str) -> np.ndarray:
        return np.asarray(values[name], dtype=np.float64).reshape(ckpt.shapes[name])

    model = PredictorModel(
        d=ckpt.d,
        k=ckpt.k,
        params={n: restore(ckpt.params, n) for n in PARAM_NAMES},
        buffers={n: restore(ckpt.buffers, n) for n in BUFFER_NAMES},
        hidden=ckpt.hidden,
        leaky_slope=ckpt.leaky_slope,
        bn_momentum=ckpt.bn_momentum,
        bn_eps=ckpt.bn_eps,
        training=False,
    )
    return model, ckpt.train_config
