import numpy as np
import pytest

from smallobstacle.biot_savart import VorticityProfile
from smallobstacle.geometry import ConformalMap, ObstacleShape


@pytest.fixture(scope="session")
def disk():
    return ObstacleShape("disk")


@pytest.fixture(scope="session")
def ellipse():
    return ObstacleShape("ellipse", a=1.0, b=0.5)


@pytest.fixture(scope="session")
def disk_map(disk):
    return ConformalMap(disk)


@pytest.fixture(scope="session")
def ellipse_map(ellipse):
    return ConformalMap(ellipse)


@pytest.fixture(scope="session")
def annulus_profile():
    """Radial annulus vorticity, support 1 < |x| < 2, smoothed edges."""
    return VorticityProfile.radial_annulus(1.0, 1.0, 2.0, mollify=0.25)


@pytest.fixture(scope="session")
def bump_profile():
    """Offset smooth bump at distance 1.5 from the origin."""
    return VorticityProfile.offset_bump(center=(1.5, 0.0), amplitude=1.0,
                                        radius=0.5)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
