import numpy as np
import pytest

from src.exceptions import ConfigError
from src.optimisation.baseline import SplitRisProfile, optimize_conventional, optimize_random_phase
from src.optimisation.sca_optimiser import initial_profile
from src.simulation.config import RANDOM_PHASE_STREAM, derive_rng


def test_split_profile_conversion():
    split = SplitRisProfile.from_phases([0.1, 0.2], [1.0, -1.0])
    assert split.is_unit_modulus()
    profile = split.to_star_profile()
    assert np.allclose(profile.phi_r, np.concatenate([split.psi_r, [0, 0]]))
    assert np.allclose(profile.phi_t, np.concatenate([[0, 0], split.psi_t]))
    assert profile.is_strict_es()
    back = SplitRisProfile.from_star_profile(profile)
    assert np.allclose(back.psi_r, split.psi_r) and np.allclose(back.psi_t, split.psi_t)


def test_modulus_error_is_reported():
    split = SplitRisProfile(np.array([0.5 + 0j, 1.0]), np.array([1j, -1.0]))
    assert split.max_modulus_error() == pytest.approx(0.5)
    assert not split.is_unit_modulus()


def test_conventional_surface_stays_unit_modulus(small_config, small_channels):
    result = optimize_conventional(small_channels, small_config)
    assert result.scheme == "conventional"
    assert result.layout.name == "conventional"
    half = small_config.num_ris_elements // 2
    assert np.all(result.final_profile.phi_t[:half] == 0)
    assert np.all(result.final_profile.phi_r[half:] == 0)
    assert SplitRisProfile.from_star_profile(result.final_profile, result.layout).is_unit_modulus()
    trace = result.objective_trace
    assert all(later >= earlier for earlier, later in zip(trace, trace[1:]))
    assert result.final_metrics.transmit_power <= small_config.max_power * (1 + 1e-6)


def test_conventional_needs_even_surface(small_config, small_channels):
    with pytest.raises(ConfigError):
        optimize_conventional(small_channels.restricted_rows([0, 1, 2]), small_config)


def test_random_phase_keeps_its_surface(small_config, small_channels):
    result = optimize_random_phase(small_channels, small_config)
    expected = initial_profile(small_config.num_ris_elements, derive_rng(small_config.rng_seed, RANDOM_PHASE_STREAM))
    assert result.scheme == "random_phase"
    assert np.allclose(result.final_profile.phi_t, expected.phi_t)
    assert np.allclose(result.final_profile.phi_r, expected.phi_r)
    assert all(stats.coefficient.inner_iterations == 0 for stats in result.subproblem_stats)
