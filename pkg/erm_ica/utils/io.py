"""파일 입출력: CSV 행렬(유효숫자 17자리), JSON."""
from __future__ import annotations

import io
import json
import logging
import os
from pathlib import Path
from typing import Any

import numpy as np

from ..models.types import Matrix

logger = logging.getLogger(__name__)

FLOAT_FMT = "%.17g"


def atomic_write_text(path: Path, text: str) -> None:
    """임시 파일에 쓴 뒤 os.replace."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def write_matrix_csv(path: Path, matrix: Matrix) -> None:
    """헤더 없는 쉼표 구분 CSV."""
    buf = io.StringIO()
    np.savetxt(buf, np.atleast_2d(matrix), fmt=FLOAT_FMT, delimiter=",")
    atomic_write_text(path, buf.getvalue())


def read_matrix_csv(path: Path) -> Matrix:
    arr = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return arr


def write_json(path: Path, payload: Any) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, ensure_ascii=False) + "\n")


def read_json(path: Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def ensure_writable_dir(path: Path) -> Path:
    """디렉터리 생성 후 쓰기 가능 여부 확인. 실패 시 OSError."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(f"output directory is not writable: {path}")
    return path
