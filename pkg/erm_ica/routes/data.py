"""datagen 명령."""
from __future__ import annotations

import argparse
import logging

from ..services.datagen import make_dataset, save_dataset
from .common import add_cell_options, output_dir, print_json, resolve_config, single_cell

logger = logging.getLogger(__name__)


def datagen(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    d, k, seed = single_cell(config)
    dataset = make_dataset(config.dataset_config(d, k, seed))
    target = save_dataset(dataset, output_dir(args, config, default="data"))
    print_json({"dataset": str(target), "d": d, "k": k, "seed": seed, "task_type": config.task_type.value})
    return 0


def register(subparsers, parents: list[argparse.ArgumentParser]) -> None:
    p = subparsers.add_parser("datagen", parents=parents, help="데이터셋 생성")
    add_cell_options(p)
    p.set_defaults(handler=datagen)
