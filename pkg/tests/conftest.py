"""공통 fixture와 slow 마커 처리."""
from __future__ import annotations

import numpy as np
import pytest

from erm_ica.schemas.experiment import DatasetConfig, ExperimentConfig, TaskType, TrainOverrides
from erm_ica.services.datagen import make_dataset
from erm_ica.services.numerics import RngStream


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow end-to-end cells")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return RngStream(1234)


@pytest.fixture
def np_rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def small_regression():
    return make_dataset(DatasetConfig(task_type=TaskType.regression, d=4, k=4, seed=3, n_train=400, n_val=100, n_test=300))


@pytest.fixture(scope="session")
def small_classification():
    return make_dataset(
        DatasetConfig(task_type=TaskType.classification, d=4, k=3, seed=5, n_train=400, n_val=100, n_test=300)
    )


@pytest.fixture
def tiny_experiment(tmp_path):
    """몇 초 안에 끝나는 sweep 설정 (d=4, k ∈ {2, 4}, seed 1개)."""
    return ExperimentConfig(
        task_type=TaskType.regression,
        d=4,
        k_list=[2, 4],
        seeds=[0],
        n_train=300,
        n_val=80,
        n_test=200,
        train=TrainOverrides(epochs=3, batch_size=64),
        output_dir=str(tmp_path / "runs"),
    )
