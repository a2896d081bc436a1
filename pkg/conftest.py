"""Shared pytest fixtures and markers."""

import pytest

from src.mac.csma import MacParams
from src.mac.frames import FrameIds
from src.phy.channel import Medium, PhyParams
from src.scenario import parse_scenario_text
from src.sim.engine import Engine
from src.util.log import TraceWriter


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long multi-seed runs (deselect with -m 'not slow')")


@pytest.fixture
def engine():
    return Engine()


@pytest.fixture
def phy():
    return PhyParams()


@pytest.fixture
def medium(phy):
    return Medium(phy)


@pytest.fixture
def mac_params():
    return MacParams()


@pytest.fixture
def frame_ids():
    return FrameIds()


@pytest.fixture
def tracer():
    return TraceWriter()


ONE_FLOW = """
name = "one-flow"
duration = {duration}
warmup = {warmup}
bucket_width = 10.0
seed = {seed}

[topology]
kind = "star"
end_devices = 1

[flags]
strict_sizes = true

[profiles.EndDevice]
interarrival = {{ kind = "constant", value = 1.0 }}
packet_size = {{ kind = "constant", value = 1024 }}
start_time = {{ kind = "constant", value = {start} }}
destination = "PanCoord"
"""


@pytest.fixture
def one_flow_scenario():
    """Single end device sending 1024 bits/s to its coordinator, no contention."""
    def make(duration=620.0, warmup=20.0, start=20.0, seed=1):
        return parse_scenario_text(
            ONE_FLOW.format(duration=duration, warmup=warmup, start=start, seed=seed),
            default_name="one-flow",
        )
    return make
