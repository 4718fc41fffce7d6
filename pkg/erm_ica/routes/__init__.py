"""CLI 명령 그룹. 각 모듈의 register가 하위 명령을 붙인다."""
from . import data, experiment, model

COMMAND_GROUPS = (data, model, experiment)

__all__ = ["COMMAND_GROUPS", "data", "model", "experiment"]
