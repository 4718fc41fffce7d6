"""ERM-ICA: 다중 과제 지도학습 표현에서 선형 ICA로 독립 잠재변수를 식별."""

__version__ = "1.0.0"
