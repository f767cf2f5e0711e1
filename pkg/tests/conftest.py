import os
import sys

import matplotlib
import numpy as np
import pytest

matplotlib.use("Agg")

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.insert(0, ROOT)

from src.simulation.channel import ChannelSet, build_channel_set  # noqa: E402
from src.simulation.config import SystemConfig  # noqa: E402

CONFIG_DIR = os.path.join(ROOT, "configs")


@pytest.fixture
def small_config():
    """A scenario small enough for full optimiser runs inside the test suite."""
    return SystemConfig(num_bs_antennas=4, num_ris_elements=4, num_users=2, max_outer_iterations=4,
                        max_inner_iterations=3, rng_seed=7).validate()


@pytest.fixture
def small_channels(small_config):
    return build_channel_set(small_config)


@pytest.fixture
def miso_config():
    return SystemConfig(num_bs_antennas=2, num_ris_elements=2, num_users=1, max_outer_iterations=10,
                        rng_seed=3).validate()


@pytest.fixture
def miso_channels(miso_config):
    """
    Single user served only by the direct link, with the primary Rx orthogonal
    to it. The optimum is maximum-ratio transmission at full power.
    """
    sigma = np.sqrt(miso_config.noise_power)
    zeros = np.zeros((2, 2), dtype=complex)
    return ChannelSet(
        h0=sigma * np.array([0.0, 1.0], dtype=complex),
        h=sigma * np.array([[10.0, 0.0]], dtype=complex),
        H=sigma * np.ones((2, 2), dtype=complex),
        g0=np.zeros(2, dtype=complex),
        g=np.zeros((1, 2), dtype=complex),
        G0=zeros,
        G=zeros[None, :, :].copy(),
        ue_positions=np.zeros((1, 3)),
    )
