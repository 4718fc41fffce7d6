"""train / transform / eval 명령."""
from __future__ import annotations

import argparse
import logging
from pathlib import Path

from ..middleware.errors import ConfigError
from ..schemas.artifacts import TransformKind
from ..schemas.experiment import IcaSettings, TrainConfig, TrainOverrides
from ..schemas.results import EvalResult, Method
from ..services.datagen import load_dataset
from ..services.metrics import affine_identification_r2, downstream_readout, mcc
from ..services.network import extract_representation, init_model, label_score, load_checkpoint, save_checkpoint, train
from ..services.numerics import RngStream, derive_seed
from ..services.transform import apply_transform, fit_ica, fit_pca, load_transform, save_transform
from ..utils.io import write_json
from .common import load_config_file, output_dir, print_json

logger = logging.getLogger(__name__)

TRANSFORM_METHODS = {TransformKind.pca: Method.erm_pca, TransformKind.ica: Method.erm_ica}


def _seed(args: argparse.Namespace, fallback: int) -> int:
    return args.seed if getattr(args, "seed", None) is not None else fallback


def _overrides(args: argparse.Namespace) -> TrainOverrides:
    overrides = load_config_file(args.config).train if getattr(args, "config", None) else TrainOverrides()
    if args.epochs is not None:
        overrides = overrides.model_copy(update={"epochs": args.epochs})
    return overrides


def _ica_settings(args: argparse.Namespace) -> IcaSettings:
    return load_config_file(args.config).ica if getattr(args, "config", None) else IcaSettings()


def train_model(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.data)
    seed = _seed(args, dataset.seed)
    config = TrainConfig.for_task(dataset.task_type, seed=derive_seed(seed, "shuffle"), overrides=_overrides(args))
    model = init_model(RngStream(derive_seed(seed, "init")), dataset.d, dataset.k)
    result = train(model, dataset, config)

    out = output_dir(args, default="model")
    save_checkpoint(result.best_model, out / "model.json", config, result.best_epoch)
    write_json(out / "history.json", [vars(h) for h in result.history])
    print_json({"model": str(out / "model.json"), "best_epoch": result.best_epoch, "best_val_loss": result.best_val_loss})
    return 0


def fit_transform(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.data)
    model, _ = load_checkpoint(args.model)
    R_train = extract_representation(model, dataset.train.X)
    kind = TransformKind(args.kind)
    if kind == TransformKind.pca:
        transform = fit_pca(R_train)
    else:
        ica = _ica_settings(args)
        seed = _seed(args, dataset.seed)
        transform = fit_ica(R_train, ica.max_iter, ica.tol, rng=RngStream(derive_seed(seed, "ica")), fun=ica.fun, alpha=ica.alpha)

    path = save_transform(transform, output_dir(args, default="model") / f"transform_{kind.value}.json")
    print_json({"transform": str(path), "kind": kind.value, "converged": transform.converged, "iterations": transform.iterations})
    return 0


def evaluate(args: argparse.Namespace) -> int:
    """ERM 행과, 넘겨받은 변환마다 한 행씩 test split에서 평가."""
    dataset = load_dataset(args.data)
    model, _ = load_checkpoint(args.model)
    train_split, test_split = dataset.train, dataset.test
    R_train = extract_representation(model, train_split.X)
    R_test = extract_representation(model, test_split.X)
    seed = _seed(args, dataset.seed)
    common = {"task_type": dataset.task_type, "d": dataset.d, "k": dataset.k, "seed": seed}

    rows = [
        EvalResult(
            method=Method.erm,
            label_score=label_score(model, test_split.X, test_split.Y, dataset.task_type),
            mcc=mcc(test_split.Z, R_test),
            affine_r2=affine_identification_r2(R_train, train_split.Z, R_test, test_split.Z),
            **common,
        )
    ]
    for path in args.transform or []:
        transform = load_transform(path)
        if transform.kind not in TRANSFORM_METHODS:
            raise ConfigError(f"{path}: cannot evaluate a {transform.kind.value} transform as a method")
        T_train, T_test = apply_transform(transform, R_train), apply_transform(transform, R_test)
        readout = downstream_readout(
            T_train, train_split.Y, T_test, test_split.Y, dataset.task_type,
            rng=RngStream(derive_seed(seed, "readout", transform.kind)),
        )
        rows.append(
            EvalResult(
                method=TRANSFORM_METHODS[transform.kind],
                label_score=readout.score,
                mcc=mcc(test_split.Z, T_test),
                ica_converged=transform.converged if transform.kind == TransformKind.ica else None,
                affine_r2=affine_identification_r2(T_train, train_split.Z, T_test, test_split.Z),
                **common,
            )
        )

    payload = [r.model_dump(mode="json") for r in rows]
    write_json(output_dir(args, default="model") / "eval.json", payload)
    print_json(payload)
    return 0


def register(subparsers, parents: list[argparse.ArgumentParser]) -> None:
    p = subparsers.add_parser("train", parents=parents, help="예측기 학습 (검증 손실 최소 모델 저장)")
    p.add_argument("--data", type=Path, required=True, help="datagen 출력 디렉터리")
    p.add_argument("--epochs", type=int, default=None, help="epoch 수 덮어쓰기")
    p.set_defaults(handler=train_model)

    p = subparsers.add_parser("transform", parents=parents, help="표현에 PCA / ICA 적합")
    p.add_argument("--kind", choices=[TransformKind.pca.value, TransformKind.ica.value], required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True, help="model.json")
    p.set_defaults(handler=fit_transform)

    p = subparsers.add_parser("eval", parents=parents, help="test split에서 label score / MCC")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--transform", type=Path, action="append", help="transform.json (여러 번 지정 가능)")
    p.set_defaults(handler=evaluate)
