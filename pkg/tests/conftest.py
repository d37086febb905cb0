from datetime import datetime, timezone

import pytest

from thermolab.clock import SimulatedClock
from thermolab.store import SessionStore

from goldens import (ANGER_VIDEO, HAPPINESS_MUSIC, JOY_MUSIC, JOY_VIDEO,
                     conduct_golden)

SIM_START = datetime(2019, 2, 21, 10, 0, tzinfo=timezone.utc)


@pytest.fixture
def sim_store(tmp_path):
    return SessionStore(tmp_path / "sessions", clock=SimulatedClock(SIM_START))


@pytest.fixture(scope="session")
def golden_store(tmp_path_factory):
    """One store holding all four reference sessions, built once."""
    root = tmp_path_factory.mktemp("golden") / "sessions"
    store = SessionStore(root, clock=SimulatedClock(SIM_START))
    ids = {
        "anger_video": conduct_golden(store, ANGER_VIDEO),
        "happiness_music": conduct_golden(store, HAPPINESS_MUSIC),
        "joy_music": conduct_golden(store, JOY_MUSIC),
        "joy_video": conduct_golden(store, JOY_VIDEO),
    }
    return store, ids
