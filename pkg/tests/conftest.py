import dataclasses

import numpy as np
import pytest

from mbsfuse import sim


@pytest.fixture
def rng():
    return np.random.default_rng(20240801)


@pytest.fixture
def small_cfg():
    """A short two-corner scenario that runs in well under a second."""
    return dataclasses.replace(
        sim.ScenarioConfig(),
        waypoints=((0.0, 0.0), (400.0, 0.0), (400.0, 300.0), (0.0, 300.0)),
        speed=dataclasses.replace(sim.SpeedProfile(), stops=((150.0, 4.0),)),
        seed=123,
    )
