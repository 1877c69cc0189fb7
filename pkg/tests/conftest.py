import math
import logging
from collections.abc import Iterator

import pytest
from hypothesis import HealthCheck, settings

from bogs.spectral import Grid

settings.register_profile(
    'bogs',
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile('bogs')


@pytest.fixture
def grid() -> Grid:
    """The standard experiment grid: 512 points on a period of 64 pi."""
    return Grid(512, 64 * math.pi)


@pytest.fixture
def small_grid() -> Grid:
    return Grid(128, 16 * math.pi)


@pytest.fixture(autouse=True)
def _restore_bogs_logger() -> Iterator[None]:
    """``main`` detaches the package logger from the root; undo that between tests."""
    logger = logging.getLogger('bogs')
    handlers, level, propagate = logger.handlers[:], logger.level, logger.propagate
    yield
    logger.handlers[:] = handlers
    logger.setLevel(level)
    logger.propagate = propagate
