import math
import os

import numpy as np
import pytest

from conftest import CONFIG_DIR
from src.optimisation.sca_optimiser import alternate
from src.simulation.campaign import run_single
from src.simulation.channel import ChannelSet, build_channel_set
from src.simulation.config import SystemConfig, watts_to_dbm
from src.utils.comparator import SchemeComparator

SEEDS = (0, 1, 2)
REDUCED = {"num_bs_antennas": 4, "num_ris_elements": 8, "num_users": 2,
           "max_outer_iterations": 5, "max_inner_iterations": 3}
GAMMA_POINTS_DB = (0.0, 15.0, 30.0)
# just above the noise floor at 30 dB, so only the last sweep point binds
NEAR_NOISE_RX_DBM = -83.5
TOY_INSTANCES = 20


def blocked_config(**changes):
    base = SystemConfig.from_json_file(os.path.join(CONFIG_DIR, "blocked_direct_scenario.json"))
    return base.with_overrides(**{**REDUCED, **changes})


def mean_efficiency(records):
    assert all(record.status != "error" and record.feasible for record in records)
    return float(np.mean([record.final_spectral_efficiency for record in records]))


@pytest.fixture(scope="module")
def gamma_sweep():
    """Paired STAR and conventional trials per (gamma_min, seed) on shared channels."""
    records = []
    for gamma_db in GAMMA_POINTS_DB:
        for seed in SEEDS:
            config = blocked_config(rng_seed=seed, min_primary_sinr_db=gamma_db,
                                    primary_rx_power_dbm=NEAR_NOISE_RX_DBM)
            channels = build_channel_set(config)
            for scheme in ("star", "conventional"):
                records.append(run_single(config, scheme, swept_value=gamma_db, channels=channels))
    return records


def test_star_beats_conventional_on_blocked_scenario(gamma_sweep):
    comparator = SchemeComparator()
    assert comparator.add_records(gamma_sweep) == len(SEEDS) * len(GAMMA_POINTS_DB)
    analysis = comparator.analyse_results()
    assert analysis["relative_gain"] > 0
    assert analysis["sign_test"]["wins"] > analysis["sign_test"]["losses"]
    for gamma_db in GAMMA_POINTS_DB:
        assert analysis["per_point"][str(gamma_db)]["average_spectral_efficiency"]["difference"] >= 0


@pytest.mark.parametrize("scheme", ["star", "conventional"])
def test_efficiency_does_not_grow_with_gamma_min(gamma_sweep, scheme):
    means = [mean_efficiency([r for r in gamma_sweep if r.scheme == scheme and r.swept_value == gamma_db])
             for gamma_db in GAMMA_POINTS_DB]
    assert all(later <= earlier * (1 + 1e-2) for earlier, later in zip(means, means[1:]))


def test_power_increase_beats_doubling_the_surface():
    base, more_power, more_elements = [], [], []
    for seed in SEEDS:
        config = blocked_config(rng_seed=seed, max_power_dbm=25.0)
        for target, variant in ((base, config),
                                (more_power, config.with_overrides(max_power_dbm=35.0)),
                                (more_elements, config.with_overrides(num_ris_elements=16))):
            target.append(run_single(variant, "star", channels=build_channel_set(variant)))
    power_gain = mean_efficiency(more_power) - mean_efficiency(base)
    surface_gain = mean_efficiency(more_elements) - mean_efficiency(base)
    assert surface_gain > 0
    assert power_gain > surface_gain


# --------------------------------------------------------------------------
# Exhaustive search on two-antenna, two-element, single-user instances
# --------------------------------------------------------------------------

def circular_normal(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def toy_instance(rng, config):
    """
    Rank-one cascade H = u v^T, so phi^T G = (sum_n phi_n g_n^* u_n) v for every
    receiver. Returns the channels, the per-element reflection and transmission
    terms and the common BS-side direction v.
    """
    sigma = math.sqrt(config.noise_power)
    u, v = circular_normal(rng, 2), circular_normal(rng, 2)
    g = circular_normal(rng, 1, 2)
    g0 = 0.1 * circular_normal(rng, 2)
    H = 10.0 * sigma * np.outer(u, v)
    channels = ChannelSet(
        h0=10.0 * sigma * circular_normal(rng, 2),
        h=12.0 * sigma * circular_normal(rng, 1, 2),
        H=H,
        g0=g0,
        g=g,
        G0=g0.conj()[:, None] * H,
        G=(g[0].conj()[:, None] * H)[None, :, :],
        ue_positions=np.zeros((1, 3)),
    )
    return channels, 10.0 * sigma * g[0].conj() * u, 10.0 * sigma * g0.conj() * u, v


def best_signal_power(a, b, max_power, budget):
    """
    max |a w|^2 subject to ||w||^2 <= P and |b w|^2 <= I for every row pair of a
    and b: maximum-ratio transmission when it meets the budget, otherwise the
    budget is spent along b and the remaining power orthogonal to it.
    """
    cross = np.abs(a @ b.conj().T)
    a_power = np.sum(np.abs(a) ** 2, axis=1)[:, None]
    b_power = np.sum(np.abs(b) ** 2, axis=1)[None, :]
    along = math.sqrt(budget) * cross / b_power
    across = np.sqrt(np.maximum(a_power - cross ** 2 / b_power, 0.0))
    remaining = np.sqrt(np.maximum(max_power - budget / b_power, 0.0))
    return np.where(max_power * cross ** 2 / a_power <= budget, max_power * a_power,
                    (along + across * remaining) ** 2)


def grid_optimum(channels, config, reflect_terms, transmit_terms, direction):
    """
    Exhaustive search over the amplitude split (0.05 steps on each element) and
    the absolute reflection phase (2 degrees) with the two reflected paths in
    phase, which is where the rate peaks for a fixed split since it is convex in
    the reflected sum. Transmission phases use a 10 degree grid.
    """
    budget = config.primary_rx_power / config.min_primary_sinr - config.noise_power
    amplitudes = np.linspace(0.0, 1.0, 21)
    reflect_phases = np.exp(1j * np.deg2rad(np.arange(0.0, 360.0, 2.0)))
    spin = np.exp(1j * np.deg2rad(np.arange(0.0, 360.0, 10.0)))
    relative = np.exp(1j * np.deg2rad(np.arange(0.0, 181.0, 10.0)))
    direct, primary_direct = channels.h[0].conj(), channels.h0.conj()
    best = 0.0
    for beta_1 in amplitudes:
        for beta_2 in amplitudes:
            radius = math.sqrt(beta_1) * abs(reflect_terms[0]) + math.sqrt(beta_2) * abs(reflect_terms[1])
            a = direct[None, :] + (radius * reflect_phases)[:, None] * direction[None, :]
            leak_1 = math.sqrt(1.0 - beta_1) * abs(transmit_terms[0])
            leak_2 = math.sqrt(1.0 - beta_2) * abs(transmit_terms[1])
            c_t = (spin[:, None] * (leak_1 + leak_2 * relative)[None, :]).ravel()
            b = primary_direct[None, :] + c_t[:, None] * direction[None, :]
            best = max(best, float(np.max(best_signal_power(a, b, config.max_power, budget))))
    return math.log2(1.0 + best / config.noise_power)


def test_random_toy_instances_reach_grid_optimum(miso_config):
    # a budget of 20 noise powers, well under what maximum-ratio transmission leaks
    config = miso_config.with_overrides(
        primary_rx_power_dbm=watts_to_dbm(21.0 * miso_config.min_primary_sinr * miso_config.noise_power))
    rng = np.random.default_rng(2024)
    ratios = []
    for _ in range(TOY_INSTANCES):
        channels, reflect_terms, transmit_terms, direction = toy_instance(rng, config)
        result = alternate(channels, config)
        assert result.feasibility.feasible
        best = grid_optimum(channels, config, reflect_terms, transmit_terms, direction)
        ratios.append(result.final_metrics.spectral_efficiency / best)
    assert min(ratios) >= 0.95
