"""(X, Y, Z) 데이터 생성 — 독립 잠재변수 Z가 관측 X와 레이블 Y를 모두 만든다.

Z ~ i.i.d. {0,1} (또는 연속 균등), X = g(Z) (가역 2층 leaky-ReLU MLP),
회귀 Y = ZΓᵀ + N, 분류 Y ~ Bernoulli(σ(ZΓᵀ)).
"""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from scipy.special import expit

from ..config.settings import settings
from ..middleware.errors import GenerationError
from ..models.dataset import Dataset, Generator, Split, TaskMatrix
from ..models.types import Matrix
from ..schemas.artifacts import DatasetMeta
from ..schemas.experiment import DatasetConfig, GeneratorKind, LatentDistribution, TaskType
from ..utils.io import read_json, read_matrix_csv, write_json, write_matrix_csv
from .numerics import RngStream, as_matrix, condition_number, rng_normal, solve_linear

logger = logging.getLogger(__name__)

GENERATOR_SLOPE = 0.2
CLASSIFICATION_TASK_SCALE = 10.0
SPLITS = ("train", "val", "test")


def latent_variance(dist: LatentDistribution) -> float:
    return 0.25 if dist == LatentDistribution.bernoulli else 1.0 / 12.0


def sample_latents(
    rng: RngStream,
    n: int,
    d: int,
    dist: LatentDistribution = LatentDistribution.bernoulli,
) -> Matrix:
    """n×d 잠재변수. 각 성분 독립."""
    if n < 1 or d < 1:
        raise GenerationError(f"sample_latents: n and d must be >= 1 (n={n}, d={d})")
    if dist == LatentDistribution.bernoulli:
        return rng.integers(0, 2, n, d).astype(np.float64)
    return rng.uniform(n, d)


def sample_task_matrix(
    rng: RngStream,
    k: int,
    d: int,
    task_type: TaskType,
    *,
    cond_limit: float | None = None,
    max_tries: int | None = None,
) -> TaskMatrix:
    """Γ (k×d), 성분 i.i.d. N(0, scale²). k = d면 조건수 cond_limit 이하가 될 때까지 재추출."""
    if not 1 <= k <= d:
        raise GenerationError(f"sample_task_matrix: need 1 <= k <= d (k={k}, d={d})")
    cond_limit = settings.task_cond_limit if cond_limit is None else cond_limit
    max_tries = settings.task_max_tries if max_tries is None else max_tries
    scale = 1.0 if task_type == TaskType.regression else CLASSIFICATION_TASK_SCALE

    for attempt in range(1, max_tries + 1):
        gamma = rng_normal(rng, k, d, 0.0, scale)
        if np.any(np.all(gamma == 0.0, axis=1)):
            continue
        if k == d and condition_number(gamma) > cond_limit:
            logger.debug("task matrix rejected (attempt %d, cond %.3g)", attempt, condition_number(gamma))
            continue
        return TaskMatrix(gamma=as_matrix(gamma, "gamma", frozen=True), scale=scale)
    raise GenerationError(f"no invertible task matrix after {max_tries} tries (k=d={d}, cond limit {cond_limit:g})")


def _compress_spectrum(W: Matrix, cond_limit: float) -> Matrix:
    """특이값을 [σ_max / cond_limit, σ_max]로 잘라 조건수를 제한. 특이벡터는 유지."""
    U, s, Vt = np.linalg.svd(W)
    floor = s[0] / (cond_limit * (1.0 - 1e-9))
    return (U * np.maximum(s, floor)) @ Vt


def _sample_layer(
    rng: RngStream,
    d: int,
    name: str,
    cond_limit: float,
    max_tries: int,
    spectrum_fallback: bool,
) -> Matrix:
    std = 1.0 / np.sqrt(d)
    W = rng_normal(rng, d, d, 0.0, std)
    for attempt in range(1, max_tries + 1):
        if condition_number(W) <= cond_limit:
            return W
        if attempt < max_tries:
            W = rng_normal(rng, d, d, 0.0, std)
    if not spectrum_fallback:
        raise GenerationError(f"{name}: condition number <= {cond_limit:g} not reached in {max_tries} tries (d={d})")
    logger.debug("%s: rejection cap reached at d=%d, compressing spectrum", name, d)
    return _compress_spectrum(W, cond_limit)


def build_generator(
    rng: RngStream,
    d: int,
    *,
    kind: GeneratorKind = GeneratorKind.mlp,
    slope: float = GENERATOR_SLOPE,
    cond_limit: float | None = None,
    max_tries: int | None = None,
    spectrum_fallback: bool | None = None,
) -> Generator:
    """가역 2층 MLP. 가중치 N(0, 1/d) 성분, 층별 조건수 ≤ cond_limit. linear면 slope = 1."""
    if d < 1:
        raise GenerationError(f"build_generator: d must be >= 1, got {d}")
    cond_limit = settings.generator_cond_limit if cond_limit is None else cond_limit
    max_tries = settings.generator_max_tries if max_tries is None else max_tries
    if spectrum_fallback is None:
        spectrum_fallback = settings.generator_spectrum_fallback
    if kind == GeneratorKind.linear:
        slope = 1.0
    if not 0.0 < slope <= 1.0:
        raise GenerationError(f"leaky slope must be in (0, 1], got {slope}")

    w1 = _sample_layer(rng, d, "layer1", cond_limit, max_tries, spectrum_fallback)
    w2 = _sample_layer(rng, d, "layer2", cond_limit, max_tries, spectrum_fallback)
    return Generator(
        layer1_weight=as_matrix(w1, "layer1_weight", frozen=True),
        layer2_weight=as_matrix(w2, "layer2_weight", frozen=True),
        leaky_slope=float(slope),
    )


def leaky_relu(x: Matrix, slope: float) -> Matrix:
    return np.where(x >= 0, x, slope * x)


def inverse_leaky_relu(x: Matrix, slope: float) -> Matrix:
    return np.where(x >= 0, x, x / slope)


def apply_generator(g: Generator, Z: Matrix) -> Matrix:
    """X = leaky(leaky(Z W1ᵀ) W2ᵀ), 행 단위."""
    if Z.shape[1] != g.d:
        raise GenerationError(f"apply_generator: Z has {Z.shape[1]} columns, generator expects {g.d}")
    h = leaky_relu(Z @ g.layer1_weight.T, g.leaky_slope)
    return leaky_relu(h @ g.layer2_weight.T, g.leaky_slope)


def invert_generator(g: Generator, X: Matrix) -> Matrix:
    """층을 역순으로 풀어 Z 복원: leaky 역변환 후 선형계 풀이."""
    if X.shape[1] != g.d:
        raise GenerationError(f"invert_generator: X has {X.shape[1]} columns, generator expects {g.d}")
    u = inverse_leaky_relu(X, g.leaky_slope)
    h = solve_linear(g.layer2_weight, u.T).T
    h = inverse_leaky_relu(h, g.leaky_slope)
    return solve_linear(g.layer1_weight, h.T).T


def gen_labels(
    rng: RngStream,
    tasks: TaskMatrix,
    Z: Matrix,
    task_type: TaskType,
    noise_std: float = 1.0,
) -> Matrix:
    """회귀: ZΓᵀ + N(0, noise_std²) (과제별 독립). 분류: Bernoulli(σ(ZΓᵀ)) 성분별."""
    if Z.shape[1] != tasks.gamma.shape[1]:
        raise GenerationError(f"gen_labels: Z has {Z.shape[1]} columns, Γ expects {tasks.gamma.shape[1]}")
    logits = Z @ tasks.gamma.T
    n, k = logits.shape
    if task_type == TaskType.regression:
        return logits + rng_normal(rng, n, k, 0.0, noise_std)
    return (rng.uniform(n, k) < expit(logits)).astype(np.float64)


def bayes_r2(tasks: TaskMatrix, noise_std: float, latent_var: float = 0.25) -> np.ndarray:
    """회귀 과제별 Bayes R² = Var(ΓZ)_j / (Var(ΓZ)_j + σ²)."""
    signal = latent_var * np.sum(tasks.gamma**2, axis=1)
    return signal / (signal + noise_std**2)


def make_dataset(config: DatasetConfig) -> Dataset:
    """Γ → g → Z(전체 행) → Y 순서로 하나의 스트림에서 추출 후 train/val/test 분할."""
    rng = RngStream(config.seed)
    tasks = sample_task_matrix(rng, config.k, config.d, config.task_type)
    generator = build_generator(rng, config.d, kind=config.generator)

    n_total = config.n_train + config.n_val + config.n_test
    Z = sample_latents(rng, n_total, config.d, config.latent_dist)
    X = apply_generator(generator, Z)
    Y = gen_labels(rng, tasks, Z, config.task_type, config.noise_std)

    bounds = np.cumsum([0, config.n_train, config.n_val, config.n_test])
    splits = {
        name: Split(
            X=as_matrix(X[lo:hi], f"{name}.X", frozen=True),
            Y=as_matrix(Y[lo:hi], f"{name}.Y", frozen=True),
            Z=as_matrix(Z[lo:hi], f"{name}.Z", frozen=True),
        )
        for name, lo, hi in zip(SPLITS, bounds[:-1], bounds[1:])
    }
    logger.debug(
        "dataset %s d=%d k=%d seed=%d: %s",
        config.task_type.value,
        config.d,
        config.k,
        config.seed,
        {name: s.n for name, s in splits.items()},
    )
    return Dataset(
        task_type=config.task_type,
        d=config.d,
        k=config.k,
        train=splits["train"],
        val=splits["val"],
        test=splits["test"],
        generator=generator,
        tasks=tasks,
        seed=config.seed,
        noise_std=config.noise_std,
        latent_dist=config.latent_dist,
        generator_kind=config.generator,
    )


def save_dataset(ds: Dataset, directory: Path) -> Path:
    """meta.json, gamma.csv, gen_w1.csv, gen_w2.csv, {train,val,test}/{X,Y,Z}.csv."""
    directory = Path(directory)
    meta = DatasetMeta(
        d=ds.d,
        k=ds.k,
        task_type=ds.task_type,
        seed=ds.seed,
        noise_std=ds.noise_std,
        slope=ds.generator.leaky_slope,
        latent_dist=ds.latent_dist,
        generator=ds.generator_kind,
        task_scale=ds.tasks.scale,
    )
    write_json(directory / "meta.json", meta.model_dump(mode="json"))
    write_matrix_csv(directory / "gamma.csv", ds.tasks.gamma)
    write_matrix_csv(directory / "gen_w1.csv", ds.generator.layer1_weight)
    write_matrix_csv(directory / "gen_w2.csv", ds.generator.layer2_weight)
    for name in SPLITS:
        split = ds.split(name)
        for attr in ("X", "Y", "Z"):
            write_matrix_csv(directory / name / f"{attr}.csv", getattr(split, attr))
    logger.info("dataset saved: %s", directory)
    return directory


def load_dataset(directory: Path) -> Dataset:
    directory = Path(directory)
    if not (directory / "meta.json").exists():
        raise GenerationError(f"dataset directory has no meta.json: {directory}")
    meta = DatasetMeta.model_validate(read_json(directory / "meta.json"))
    splits = {
        name: Split(
            **{attr: as_matrix(read_matrix_csv(directory / name / f"{attr}.csv"), f"{name}.{attr}", frozen=True)
               for attr in ("X", "Y", "Z")}
        )
        for name in SPLITS
    }
    return Dataset(
        task_type=meta.task_type,
        d=meta.d,
        k=meta.k,
        train=splits["train"],
        val=splits["val"],
        test=splits["test"],
        generator=Generator(
            layer1_weight=as_matrix(read_matrix_csv(directory / "gen_w1.csv"), "gen_w1", frozen=True),
            layer2_weight=as_matrix(read_matrix_csv(directory / "gen_w2.csv"), "gen_w2", frozen=True),
            leaky_slope=meta.slope,
        ),
        tasks=TaskMatrix(gamma=as_matrix(read_matrix_csv(directory / "gamma.csv"), "gamma", frozen=True), scale=meta.task_scale),
        seed=meta.seed,
        noise_std=meta.noise_std,
        latent_dist=meta.latent_dist,
        generator_kind=meta.generator,
    )
