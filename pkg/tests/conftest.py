import os

import numpy as np
import pytest

from snapslam.io_utils import BUNDLED_SCENARIO, parse_scenario


def pytest_collection_modifyitems(config, items):
    if os.environ.get("SNAPSLAM_RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="slow; set SNAPSLAM_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def room():
    """The bundled reference room: 50 ceiling APs, one wall at y=10, one scatterer."""
    return parse_scenario(BUNDLED_SCENARIO)


@pytest.fixture(scope="session")
def room_aps(room):
    return room.ap_positions()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
