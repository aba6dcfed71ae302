import numpy as np
import pytest

from evfuse.dataset_io import CameraModel, Trajectory


@pytest.fixture
def cam():
    return CameraModel(240, 180, 200.0, 200.0, 120.0, 90.0)


@pytest.fixture
def small_cam():
    return CameraModel(64, 64, 80.0, 80.0, 32.0, 32.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def identity_trajectory(t0: float, t1: float, n: int = 5) -> Trajectory:
    ts = np.linspace(t0, t1, n)
    quats = np.zeros((n, 4))
    quats[:, 0] = 1.0
    return Trajectory(ts, np.zeros((n, 3)), quats)


@pytest.fixture
def static_traj():
    return identity_trajectory(0.0, 1.0)
