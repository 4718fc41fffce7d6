"""셀 단위 비교 실행(ERM, ERM-PCA, ERM-ICA)과 재개 가능한 sweep."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path

from tqdm import tqdm

from ..config.settings import settings
from ..middleware.errors import HarnessError
from ..models.results_table import ResultsTable
from ..models.types import Matrix
from ..schemas.experiment import ExperimentConfig, TaskType, TrainConfig
from ..schemas.results import CellFailure, EvalResult, Method
from ..utils.io import ensure_writable_dir, read_json, write_json
from .datagen import make_dataset
from .metrics import affine_identification_r2, downstream_readout, mcc
from .network import extract_representation, init_model, label_score, save_checkpoint, train
from .numerics import RngStream, derive_seed
from .transform import apply_transform, fit_ica, fit_pca, save_transform

logger = logging.getLogger(__name__)

CELL_DIR = "cells"
# 격자(d, k_list, seeds)와 실행 방식은 셀 결과에 영향이 없음
GRID_FIELDS = {"d", "k_list", "seeds", "workers", "output_dir"}


def cell_id(task_type: TaskType, d: int, k: int, seed: int) -> str:
    return f"{task_type.value}-d{d}-k{k}-s{seed}"


def cell_seed(seed: int, d: int, k: int, task_type: TaskType) -> int:
    """(seed, d, k, task_type)에서 유도. 다른 셀의 존재와 무관."""
    return derive_seed(seed, d, k, task_type)


def run_cell(
    task_type: TaskType,
    d: int,
    k: int,
    seed: int,
    config: ExperimentConfig,
    *,
    artifacts_dir: Path | None = None,
    record_wall_time: bool | None = None,
) -> list[EvalResult]:
    """데이터 생성 → 학습 1회 → 같은 표현 위에서 세 방법 평가."""
    record_wall_time = settings.record_wall_time if record_wall_time is None else record_wall_time
    root = RngStream(cell_seed(seed, d, k, task_type))
    started = time.perf_counter()

    ds_config = config.dataset_config(d, k, seed).model_copy(
        update={"task_type": task_type, "seed": root.child("data").seed}
    )
    dataset = make_dataset(ds_config)
    train_config = TrainConfig.for_task(task_type, seed=root.child("shuffle").seed, overrides=config.train)
    trained = train(init_model(root.child("init"), d, k), dataset, train_config)
    best = trained.best_model
    logger.info(
        "cell %s: best epoch %d, val loss %.5f",
        cell_id(task_type, d, k, seed),
        trained.best_epoch,
        trained.best_val_loss,
    )

    train_split, test_split = dataset.train, dataset.test
    R_train = extract_representation(best, train_split.X)
    R_test = extract_representation(best, test_split.X)
    erm_elapsed = time.perf_counter() - started

    def row(method: Method, score: float, reps_train: Matrix, reps_test: Matrix, elapsed: float,
            converged: bool | None = None) -> EvalResult:
        return EvalResult(
            method=method,
            task_type=task_type,
            d=d,
            k=k,
            seed=seed,
            label_score=score,
            mcc=mcc(test_split.Z, reps_test),
            ica_converged=converged,
            affine_r2=affine_identification_r2(reps_train, train_split.Z, reps_test, test_split.Z),
            wall_time_s=round(elapsed, 3) if record_wall_time else None,
        )

    results = [row(Method.erm, label_score(best, test_split.X, test_split.Y, task_type), R_train, R_test, erm_elapsed)]

    t0 = time.perf_counter()
    pca = fit_pca(R_train)
    P_train, P_test = apply_transform(pca, R_train), apply_transform(pca, R_test)
    readout = downstream_readout(P_train, train_split.Y, P_test, test_split.Y, task_type, rng=root.child("readout", "pca"))
    results.append(row(Method.erm_pca, readout.score, P_train, P_test, erm_elapsed + time.perf_counter() - t0))

    t0 = time.perf_counter()
    ica = fit_ica(
        R_train,
        config.ica.max_iter,
        config.ica.tol,
        rng=root.child("ica"),
        fun=config.ica.fun,
        alpha=config.ica.alpha,
    )
    I_train, I_test = apply_transform(ica, R_train), apply_transform(ica, R_test)
    readout = downstream_readout(I_train, train_split.Y, I_test, test_split.Y, task_type, rng=root.child("readout", "ica"))
    results.append(
        row(Method.erm_ica, readout.score, I_train, I_test, erm_elapsed + time.perf_counter() - t0, converged=ica.converged)
    )

    if artifacts_dir is not None:
        artifacts_dir = Path(artifacts_dir)
        save_checkpoint(best, artifacts_dir / "model.json", train_config, trained.best_epoch)
        save_transform(pca, artifacts_dir / "transform_pca.json")
        save_transform(ica, artifacts_dir / "transform_ica.json")
    return results


def _cell_paths(outdir: Path, name: str) -> tuple[Path, Path, Path]:
    base = outdir / CELL_DIR
    return base / f"{name}.json", base / f"{name}.done", base / f"{name}.failed.json"


def _cell_job(config_json: str, task_type: str, d: int, k: int, seed: int) -> tuple[list[dict], dict | None]:
    """worker 프로세스 단위 작업. 실패는 예외 대신 failure로 반환."""
    config = ExperimentConfig.model_validate_json(config_json)
    tt = TaskType(task_type)
    try:
        rows = run_cell(tt, d, k, seed, config)
    except Exception as exc:
        logger.exception("cell %s failed", cell_id(tt, d, k, seed))
        failure = CellFailure(task_type=tt, d=d, k=k, seed=seed, error=f"{type(exc).__name__}: {exc}")
        return [], failure.model_dump(mode="json")
    return [r.model_dump(mode="json") for r in rows], None


def _record(outdir: Path, name: str, rows: list[dict], failure: dict | None) -> None:
    """메인 프로세스에서만 호출. 완료 마커는 결과 파일을 쓴 뒤에 만든다."""
    result_path, marker, failed_path = _cell_paths(outdir, name)
    if failure is not None:
        write_json(failed_path, failure)
        return
    write_json(result_path, {"rows": rows})
    marker.touch()
    failed_path.unlink(missing_ok=True)


def _cell_settings(config: ExperimentConfig) -> dict:
    return config.model_dump(mode="json", exclude=GRID_FIELDS)


def _check_resumable(outdir: Path, config: ExperimentConfig) -> None:
    """이전 sweep의 config.json과 셀 설정이 다르면 거부. 격자 확장은 허용."""
    stored_path = outdir / "config.json"
    if not stored_path.exists():
        return
    stored = ExperimentConfig.model_validate(read_json(stored_path))
    old, new = _cell_settings(stored), _cell_settings(config)
    if old != new:
        changed = sorted(key for key in old.keys() | new.keys() if old.get(key) != new.get(key))
        raise HarnessError(f"{outdir} holds cells from a different configuration (changed: {changed}); use a fresh output directory")


def run_sweep(
    config: ExperimentConfig,
    outdir: Path | None = None,
    workers: int | None = None,
    *,
    progress: bool | None = None,
) -> ResultsTable:
    """격자의 모든 (d, k, seed) 셀 실행. 완료 마커가 있는 셀은 건너뛰어 중단 후 재개 가능."""
    outdir = Path(outdir or config.output_dir or settings.output_dir)
    workers = workers or config.workers or settings.workers
    progress = settings.progress if progress is None else progress
    try:
        ensure_writable_dir(outdir / CELL_DIR)
    except OSError as exc:
        raise HarnessError(f"cannot write to output directory {outdir}: {exc}") from exc
    _check_resumable(outdir, config)
    write_json(outdir / "config.json", config.model_dump(mode="json"))

    cells = [(config.task_type, d, k, seed) for d, k, seed in config.cells()]
    pending = [c for c in cells if not _cell_paths(outdir, cell_id(*c))[1].exists()]
    if len(pending) < len(cells):
        logger.info("resuming: %d of %d cells already complete", len(cells) - len(pending), len(cells))

    config_json = config.model_dump_json()
    bar = tqdm(total=len(pending), desc="cells", disable=not progress)
    if workers > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_cell_job, config_json, tt.value, d, k, seed): cell_id(tt, d, k, seed)
                for tt, d, k, seed in pending
            }
            for future in as_completed(futures):
                _record(outdir, futures[future], *future.result())
                bar.update()
    else:
        for tt, d, k, seed in pending:
            _record(outdir, cell_id(tt, d, k, seed), *_cell_job(config_json, tt.value, d, k, seed))
            bar.update()
    bar.close()

    table = load_results(outdir, cells={cell_id(*c) for c in cells})
    if table.failures:
        logger.warning("%d cell(s) failed: %s", len(table.failures), [cell_id(f.task_type, f.d, f.k, f.seed) for f in table.failures])
    return table


def load_results(outdir: Path, cells: set[str] | None = None) -> ResultsTable:
    """셀 파일에서 ResultsTable 재구성. cells가 주어지면 그 셀만."""
    base = Path(outdir) / CELL_DIR
    if not base.is_dir():
        raise HarnessError(f"no results under {outdir}")
    table = ResultsTable()
    for marker in sorted(base.glob("*.done")):
        name = marker.name.removesuffix(".done")
        if cells is not None and name not in cells:
            continue
        payload = read_json(base / f"{name}.json")
        table.add([EvalResult.model_validate(r) for r in payload["rows"]])
    for failed in sorted(base.glob("*.failed.json")):
        name = failed.name.removesuffix(".failed.json")
        if cells is not None and name not in cells:
            continue
        if not (base / f"{name}.done").exists():
            table.failures.append(CellFailure.model_validate(read_json(failed)))
    return table
