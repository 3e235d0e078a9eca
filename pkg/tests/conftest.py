from pathlib import Path

import pytest

from panolidar.projection import SensorIntrinsics

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def os1() -> SensorIntrinsics:
    return SensorIntrinsics.profile("os1-128")


@pytest.fixture
def tiny() -> SensorIntrinsics:
    # Small grid keeps exhaustive checks cheap.
    return SensorIntrinsics(width=64, height=16)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
