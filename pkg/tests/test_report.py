import csv
import json
import re
import xml.etree.ElementTree as ET

import numpy.testing as npt
import pytest

from erm_ica.middleware.errors import HarnessError
from erm_ica.models.results_table import ResultsTable
from erm_ica.schemas.experiment import TaskType
from erm_ica.schemas.results import RESULT_COLUMNS, EvalResult, Method
from erm_ica.services.report import bar_gid, emit_report, value_gid

SVG_NS = "{http://www.w3.org/2000/svg}"


def make_table(methods=(Method.erm, Method.erm_pca, Method.erm_ica)):
    rows = []
    for k in (2, 3, 4):
        for seed in (0, 1, 2):
            for i, method in enumerate(methods):
                rows.append(
                    EvalResult(
                        method=method,
                        task_type=TaskType.regression,
                        d=4,
                        k=k,
                        seed=seed,
                        label_score=0.6 + 0.05 * k + 0.01 * seed,
                        mcc=0.2 * (i + 1) + 0.02 * seed + 0.01 * k,
                        ica_converged=True if method == Method.erm_ica else None,
                    )
                )
    return ResultsTable(rows=rows)


def svg_groups(path):
    return {g.get("id"): g for g in ET.parse(path).getroot().iter(f"{SVG_NS}g") if g.get("id")}


def bar_height(group):
    d = group.find(f"{SVG_NS}path").get("d")
    ys = [float(v) for v in re.findall(r"[-\d.]+ ([-\d.]+)", d)]
    return max(ys) - min(ys)


def test_csv_and_json_row_counts(tmp_path):
    table = make_table()
    emit_report(table, tmp_path)
    with open(tmp_path / "results.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert tuple(rows[0]) == RESULT_COLUMNS
    assert len(rows) - 1 == len(table) == 27
    payload = json.loads((tmp_path / "results.json").read_text())
    assert len(payload["rows"]) == 27
    assert len(payload["aggregates"]) == 9
    assert payload["failures"] == []
    assert rows[1][:5] == ["erm", "regression", "4", "2", "0"]
    assert rows[3][7] == "true" and rows[1][7] == "" and rows[1][8] == ""


def test_chart_values_match_aggregates(tmp_path):
    table = make_table()
    written = emit_report(table, tmp_path)
    chart = tmp_path / "chart_regression_d4.svg"
    assert chart in written
    groups = svg_groups(chart)

    for panel, field in (("label", "label_score_mean"), ("mcc", "mcc_mean")):
        heights, means = [], []
        for agg in table.aggregates():
            text = groups[value_gid(panel, agg.method.value, agg.k)].find(f"{SVG_NS}text").text
            assert float(text) == pytest.approx(getattr(agg, field), abs=5e-5)
            heights.append(bar_height(groups[bar_gid(panel, agg.method.value, agg.k)]))
            means.append(getattr(agg, field))
        npt.assert_allclose([h / heights[0] for h in heights], [m / means[0] for m in means], rtol=1e-3)


def test_missing_method_omitted(tmp_path):
    emit_report(make_table(methods=(Method.erm, Method.erm_ica)), tmp_path)
    groups = svg_groups(tmp_path / "chart_regression_d4.svg")
    assert bar_gid("mcc", "erm_ica", 3) in groups
    assert not any(gid.startswith("bar-mcc-erm_pca") for gid in groups)


def test_one_chart_per_task_and_d(tmp_path):
    table = make_table()
    extra = table.rows[0].model_copy(update={"d": 8, "k": 8})
    table.add([extra])
    written = emit_report(table, tmp_path)
    assert {p.name for p in written if p.suffix == ".svg"} == {"chart_regression_d4.svg", "chart_regression_d8.svg"}


def test_report_is_deterministic(tmp_path):
    emit_report(make_table(), tmp_path / "a")
    emit_report(make_table(), tmp_path / "b")
    for name in ("results.csv", "results.json", "chart_regression_d4.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_empty_table_rejected(tmp_path):
    with pytest.raises(HarnessError):
        emit_report(ResultsTable(), tmp_path)
