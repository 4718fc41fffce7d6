"""명령 공통 옵션. 우선순위는 CLI > 설정 파일 > settings."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..config.settings import settings
from ..middleware.errors import ConfigError
from ..schemas.experiment import SEED_MAX, ExperimentConfig, TaskType

logger = logging.getLogger(__name__)


def _seed(value: str) -> int:
    seed = int(value)
    if not 0 <= seed <= SEED_MAX:
        raise argparse.ArgumentTypeError(f"seed must be a 64-bit unsigned integer, got {value}")
    return seed


def global_options() -> argparse.ArgumentParser:
    """모든 하위 명령에 붙는 전역 플래그. 명령 앞/뒤 어디에 와도 됨."""
    parent = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    parent.add_argument("--config", type=Path, help="ExperimentConfig JSON 파일")
    parent.add_argument("--out", type=Path, help="출력 디렉터리")
    parent.add_argument("--seed", type=_seed, help="64-bit 시드 (datagen/cell에서 생략하면 설정의 첫 seed)")
    parent.add_argument("--workers", type=int, help="병렬 셀 수")
    parent.add_argument("--log-level", dest="log_level", help="DEBUG / INFO / WARNING")
    return parent


def add_cell_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--task", choices=[t.value for t in TaskType], help="regression | classification")
    parser.add_argument("--d", type=int, help="잠재 차원")
    parser.add_argument("--k", type=int, help="과제 수")


def load_config_file(path: Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return ExperimentConfig.model_validate_json(text)


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """설정 파일 위에 --task/--d/--k/--seed 덮어쓰기. 파일이 없으면 플래그만으로 구성."""
    base: dict = {}
    if getattr(args, "config", None) is not None:
        base = load_config_file(args.config).model_dump(mode="json", exclude_unset=True)
    if getattr(args, "task", None):
        base["task_type"] = args.task
    if getattr(args, "d", None) is not None:
        base["d"] = args.d
    if getattr(args, "k", None) is not None:
        base["k_list"] = [args.k]
    if getattr(args, "seed", None) is not None:
        base["seeds"] = [args.seed]
    if "task_type" not in base or "d" not in base:
        raise ConfigError("task type and d are required (use --config or --task/--d)")
    return ExperimentConfig.model_validate(base)


def output_dir(args: argparse.Namespace, config: ExperimentConfig | None = None, default: str = "") -> Path:
    if getattr(args, "out", None) is not None:
        return Path(args.out)
    if config is not None and config.output_dir:
        return Path(config.output_dir)
    return Path(settings.output_dir) / default if default else Path(settings.output_dir)


def single_cell(config: ExperimentConfig) -> tuple[int, int, int]:
    """(d, k)는 하나로 정해져야 함. seed가 여럿이면 첫 번째를 쓴다."""
    pairs = sorted({(d, k) for d, k, _ in config.cells()})
    if len(pairs) != 1:
        raise ConfigError(f"expected exactly one (d, k) pair, config describes {len(pairs)}; pass --d/--k")
    d, k = pairs[0]
    seed = config.seeds[0]
    if len(config.seeds) > 1:
        logger.info("no single seed given, using seed %d of %s", seed, config.seeds)
    return d, k, seed


def print_json(payload) -> None:
    json.dump(payload, sys.stdout, indent=2, ensure_ascii=False)
    sys.stdout.write("\n")
