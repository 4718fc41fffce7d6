"""에러 핸들링 — 모듈별 예외 계층과 CLI 전역 예외 경계."""
from __future__ import annotations

import functools
import logging
import sys
from typing import Callable

from pydantic import ValidationError

logger = logging.getLogger(__name__)


class ErmIcaError(Exception):
    """패키지 공통 예외. exit_code는 CLI 종료 코드."""

    exit_code: int = 1

    def __init__(self, detail: str) -> None:
        super().__init__(detail)
        self.detail = detail


class NumericsError(ErmIcaError):
    exit_code = 3


class NonSymmetricMatrixError(NumericsError):
    pass


class SingularMatrixError(NumericsError):
    """LU 분해 중 pivot 크기가 허용치 이하."""

    def __init__(self, pivot_index: int, pivot_value: float) -> None:
        super().__init__(f"singular matrix: pivot {pivot_index} has magnitude {abs(pivot_value):.3e}")
        self.pivot_index = pivot_index
        self.pivot_value = pivot_value


class ConvergenceError(NumericsError):
    pass


class GenerationError(ErmIcaError):
    exit_code = 4


class ModelError(ErmIcaError):
    exit_code = 5


class TrainingDivergedError(ModelError):
    def __init__(self, epoch: int, value: float) -> None:
        super().__init__(f"non-finite loss ({value}) at epoch {epoch}")
        self.epoch = epoch


class TransformError(ErmIcaError):
    exit_code = 6


class MetricError(ErmIcaError):
    exit_code = 7


class ConfigError(ErmIcaError):
    exit_code = 2


class HarnessError(ErmIcaError):
    exit_code = 8


def register_exception_handlers(func: Callable[..., int], *, debug: bool = False) -> Callable[..., int]:
    """CLI 진입점에 전역 예외 핸들러 적용. 반환값은 종료 코드."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs) -> int:
        try:
            return func(*args, **kwargs)
        except ValidationError as exc:
            print("설정 데이터 형식 오류:", file=sys.stderr)
            for err in exc.errors():
                loc = ".".join(str(x) for x in err.get("loc", ()))
                print(f"  {loc}: {err.get('msg')}", file=sys.stderr)
            return 2
        except ErmIcaError as exc:
            logger.error("%s: %s", type(exc).__name__, exc.detail)
            return exc.exit_code
        except Exception as exc:
            logger.exception("Unhandled exception: %s", exc)
            detail = "내부 오류"
            if debug:
                detail = f"{type(exc).__name__}: {exc}"
            print(detail, file=sys.stderr)
            return 1

    return wrapper
