"""sweep 결과 표."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from ..schemas.results import METHOD_ORDER, CellAggregate, CellFailure, EvalResult


def _row_order(row: EvalResult) -> tuple:
    return (row.task_type.value, row.d, row.k, row.seed, METHOD_ORDER.index(row.method))


@dataclass
class ResultsTable:
    rows: list[EvalResult] = field(default_factory=list)
    failures: list[CellFailure] = field(default_factory=list)

    def add(self, results: list[EvalResult]) -> None:
        self.rows.extend(results)

    def sorted_rows(self) -> list[EvalResult]:
        """(task_type, d, k, seed, method) 순. 실행/완료 순서와 무관."""
        return sorted(self.rows, key=_row_order)

    def sorted_failures(self) -> list[CellFailure]:
        return sorted(self.failures, key=lambda f: (f.task_type.value, f.d, f.k, f.seed))

    def aggregates(self) -> list[CellAggregate]:
        """(method, task_type, d, k)별 seed 평균과 표준편차 (ddof=0)."""
        groups: dict[tuple, list[EvalResult]] = defaultdict(list)
        for row in self.rows:
            groups[(row.method, row.task_type, row.d, row.k)].append(row)
        out = []
        for (method, task_type, d, k), rows in groups.items():
            scores = np.array([r.label_score for r in rows])
            mccs = np.array([r.mcc for r in rows])
            out.append(
                CellAggregate(
                    method=method,
                    task_type=task_type,
                    d=d,
                    k=k,
                    n_seeds=len(rows),
                    label_score_mean=float(scores.mean()),
                    label_score_std=float(scores.std(ddof=0)),
                    mcc_mean=float(mccs.mean()),
                    mcc_std=float(mccs.std(ddof=0)),
                )
            )
        return sorted(out, key=lambda a: (a.task_type.value, a.d, a.k, METHOD_ORDER.index(a.method)))

    def aggregate(self, method, task_type, d: int, k: int) -> CellAggregate | None:
        for agg in self.aggregates():
            if (agg.method, agg.task_type, agg.d, agg.k) == (method, task_type, d, k):
                return agg
        return None

    def panels(self) -> list[tuple]:
        """차트 단위 (task_type, d) 목록."""
        return sorted({(r.task_type, r.d) for r in self.rows}, key=lambda p: (p[0].value, p[1]))

    def __len__(self) -> int:
        return len(self.rows)
