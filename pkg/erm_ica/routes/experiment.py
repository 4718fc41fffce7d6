"""cell / sweep / report 명령."""
from __future__ import annotations

import argparse
import logging

from ..models.results_table import ResultsTable
from ..services.harness import cell_id, load_results, run_cell, run_sweep
from ..services.report import emit_report
from .common import add_cell_options, output_dir, print_json, resolve_config, single_cell

logger = logging.getLogger(__name__)


def cell(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    d, k, seed = single_cell(config)
    out = output_dir(args, config) / cell_id(config.task_type, d, k, seed)
    rows = run_cell(config.task_type, d, k, seed, config, artifacts_dir=out)
    table = ResultsTable(rows=rows)
    emit_report(table, out)
    print_json([r.model_dump(mode="json") for r in table.sorted_rows()])
    return 0


def sweep(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    out = output_dir(args, config)
    table = run_sweep(config, out, workers=getattr(args, "workers", None), progress=args.progress or None)
    if len(table) == 0:
        logger.error("sweep produced no rows (%d failure(s))", len(table.failures))
        return 8
    emit_report(table, out)
    print_json({"rows": len(table), "failures": len(table.failures), "output_dir": str(out)})
    # 일부 셀 실패는 치명적이지 않지만 종료 코드로 알림
    return 0 if not table.failures else 8


def report(args: argparse.Namespace) -> int:
    out = output_dir(args)
    cells = None
    if getattr(args, "config", None) is not None:
        config = resolve_config(args)
        cells = {cell_id(config.task_type, d, k, seed) for d, k, seed in config.cells()}
    table = load_results(out, cells=cells)
    written = emit_report(table, out)
    print_json({"files": [str(p) for p in written]})
    return 0


def register(subparsers, parents: list[argparse.ArgumentParser]) -> None:
    p = subparsers.add_parser("cell", parents=parents, help="한 (d, k, seed) 셀에서 세 방법 비교")
    add_cell_options(p)
    p.set_defaults(handler=cell)

    p = subparsers.add_parser("sweep", parents=parents, help="설정 격자 전체 실행 (재개 가능) 후 report")
    add_cell_options(p)
    p.add_argument("--progress", action="store_true", help="tqdm 진행 표시")
    p.set_defaults(handler=sweep)

    p = subparsers.add_parser("report", parents=parents, help="셀 결과에서 results.csv/json, SVG 재생성")
    p.set_defaults(handler=report)

