import pathlib
import time

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def figure_points():
    return np.loadtxt(DATA / "figure_theta.csv", delimiter=",", skiprows=1)


SESSION_START = time.perf_counter()


def pytest_collection_modifyitems(session, config, items):
    # the wall-clock criterion has to see every other test finish first
    last = [it for it in items if it.get_closest_marker("run_last")]
    items[:] = [it for it in items if not it.get_closest_marker("run_last")] + last


def pytest_configure(config):
    config.addinivalue_line("markers", "run_last: run after every other collected test")
