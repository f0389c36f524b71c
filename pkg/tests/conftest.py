import os
import sys

import pytest

sys.path.append(os.path.dirname(__file__))

from scenes import scene  # noqa: E402

from cdplan.core.geometry import Circle, ConvexPolygon  # noqa: E402
from cdplan.core.ir import ObstacleSpec  # noqa: E402
from cdplan.engine.pipeline import run_pipeline  # noqa: E402
from cdplan.scenarios import corridor, gap  # noqa: E402


@pytest.fixture
def blocked_scene():
    """A straight run whose line passes through one movable circle."""
    return scene([ObstacleSpec.create("rock", Circle.at(2.0, 0.05, 0.3))])


@pytest.fixture
def open_scene():
    return scene([ObstacleSpec.create("far", Circle.at(2.0, 0.8, 0.1))])


@pytest.fixture
def unit_square():
    return ConvexPolygon.rectangle(1.0, 1.0)


@pytest.fixture(scope="session")
def corridor_report():
    return run_pipeline(corridor(), raise_on_failure=False)


@pytest.fixture(scope="session")
def gap_report():
    return run_pipeline(gap(), raise_on_failure=False)
