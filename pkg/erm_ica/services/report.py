"""results.csv, results.json, (task_type, d)별 SVG 막대 차트 출력."""
from __future__ import annotations

import csv
import io
import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..middleware.errors import HarnessError  # noqa: E402
from ..models.results_table import ResultsTable  # noqa: E402
from ..schemas.results import METHOD_ORDER, RESULT_COLUMNS, EvalResult  # noqa: E402
from ..utils.io import atomic_write_text, ensure_writable_dir, write_json  # noqa: E402

logger = logging.getLogger(__name__)

# 텍스트는 <text>로 남기고, id/메타데이터를 고정해 같은 표 → 같은 SVG
SVG_RC = {"svg.fonttype": "none", "svg.hashsalt": "erm-ica"}
METHOD_LABELS = {"erm": "ERM", "erm_pca": "ERM-PCA", "erm_ica": "ERM-ICA"}
METHOD_COLORS = {"erm": "#4c72b0", "erm_pca": "#dd8452", "erm_ica": "#55a868"}
PANELS = (("label", "label_score", "label score"), ("mcc", "mcc", "MCC"))


def _csv_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def results_csv_text(rows: list[EvalResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for row in rows:
        writer.writerow([_csv_value(getattr(row, col)) for col in RESULT_COLUMNS])
    return buf.getvalue()


def bar_gid(panel: str, method: str, k: int) -> str:
    return f"bar-{panel}-{method}-k{k}"


def value_gid(panel: str, method: str, k: int) -> str:
    return f"value-{panel}-{method}-k{k}"


def _chart(table: ResultsTable, task_type, d: int, path: Path) -> Path:
    aggs = [a for a in table.aggregates() if a.task_type == task_type and a.d == d]
    ks = sorted({a.k for a in aggs})
    ind = np.arange(len(ks))
    width = 0.8 / len(METHOD_ORDER)

    with plt.rc_context(SVG_RC):
        fig, axes = plt.subplots(1, 2, figsize=(11, 4.2))
        for ax, (panel, field, ylabel) in zip(axes, PANELS):
            for slot, method in enumerate(METHOD_ORDER):
                series = {a.k: a for a in aggs if a.method == method}
                if not series:
                    logger.debug("chart %s d=%d: no rows for %s", task_type.value, d, method.value)
                    continue
                ks_m = [k for k in ks if k in series]
                xs = ind[[ks.index(k) for k in ks_m]] + (slot - 1) * width
                means = [getattr(series[k], f"{field}_mean") for k in ks_m]
                stds = [getattr(series[k], f"{field}_std") for k in ks_m]
                rects = ax.bar(
                    xs,
                    means,
                    width,
                    yerr=stds,
                    capsize=3,
                    color=METHOD_COLORS[method.value],
                    label=METHOD_LABELS[method.value],
                )
                for rect, k, mean in zip(rects, ks_m, means):
                    rect.set_gid(bar_gid(panel, method.value, k))
                    ax.text(
                        rect.get_x() + rect.get_width() / 2.0,
                        mean,
                        f"{mean:.4f}",
                        ha="center",
                        va="bottom",
                        fontsize=7,
                        gid=value_gid(panel, method.value, k),
                    )
            ax.set_xticks(ind)
            ax.set_xticklabels([str(k) for k in ks])
            ax.set_xlabel("k (tasks)")
            ax.set_ylabel(ylabel)
            ax.axhline(0.0, color="black", linewidth=0.6)
        axes[1].set_ylim(0.0, 1.05)
        axes[0].legend(loc="lower right", fontsize=8)
        fig.suptitle(f"{task_type.value}, d = {d}")
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    atomic_write_text(path, buf.getvalue())
    return path


def emit_report(table: ResultsTable, outdir: Path) -> list[Path]:
    """results.csv, results.json, chart_<task_type>_d<d>.svg 생성. 쓴 파일 목록 반환."""
    if len(table) == 0:
        raise HarnessError("emit_report: results table is empty")
    outdir = ensure_writable_dir(Path(outdir))
    rows = table.sorted_rows()

    written = [outdir / "results.csv", outdir / "results.json"]
    atomic_write_text(written[0], results_csv_text(rows))
    write_json(
        written[1],
        {
            "rows": [r.model_dump(mode="json") for r in rows],
            "aggregates": [a.model_dump(mode="json") for a in table.aggregates()],
            "failures": [f.model_dump(mode="json") for f in table.sorted_failures()],
        },
    )
    for task_type, d in table.panels():
        written.append(_chart(table, task_type, d, outdir / f"chart_{task_type.value}_d{d}.svg"))
    logger.info("report: %d rows, %d file(s) under %s", len(rows), len(written), outdir)
    return written
