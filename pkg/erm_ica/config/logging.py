"""로깅 설정."""
import logging

from .settings import settings

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def setup_logging(level: str | None = None) -> None:
    """루트 로거 초기화. debug 모드면 DEBUG."""
    if level is None:
        level = "DEBUG" if settings.debug else settings.log_level
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT, force=True)
    # matplotlib 폰트 탐색 로그 억제
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
