import math

import numpy as np
import pytest

from src.analysis.system_model import (
    StarRisProfile,
    SurfaceLayout,
    effective_channels,
    primary_interference,
    primary_sinr,
    signal_and_interference,
    spectral_efficiency,
    user_sinrs,
)
from src.exceptions import DegenerateSlack, InitializationInfeasible
from src.optimisation import sca_optimiser
from src.optimisation.sca_optimiser import (
    AlternatingOptimiser,
    SubproblemState,
    align_phases,
    alternate,
    build_beamforming_program,
    build_coefficient_program,
    initial_profile,
    initialize,
    normalised_channels,
    normalised_interference_budget,
    penalty_schedule,
    reseed_slacks,
    solve_beamforming_subproblem,
    solve_coefficient_subproblem,
)
from src.simulation.channel import ChannelSet
from src.simulation.config import watts_to_dbm


def central_difference(function, x, scales):
    grad = np.zeros_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = scales[i]
        grad[i] = (function(x + step) - function(x - step)) / (2.0 * scales[i])
    return grad


def test_initialisation_properties(small_config, small_channels):
    beamformer, profile = initialize(small_config, small_channels)
    W = beamformer.W
    assert W.shape == (small_config.num_bs_antennas, small_config.num_users)
    assert beamformer.total_power <= small_config.initial_power_fraction * small_config.max_power * (1 + 1e-12)
    assert primary_sinr(W, profile, small_channels, small_config) >= small_config.min_primary_sinr
    assert profile.is_strict_es()
    assert np.allclose(profile.beta_t, 0.5)

    again, profile_again = initialize(small_config, small_channels)
    assert np.array_equal(W, again.W)
    assert np.array_equal(profile.phi_r, profile_again.phi_r)


def test_initial_profile_on_split_layout():
    profile = initial_profile(6, np.random.default_rng(0), SurfaceLayout.split(6))
    assert np.all(profile.phi_t[:3] == 0) and np.all(profile.phi_r[3:] == 0)
    assert np.allclose(np.abs(profile.phi_t[3:]), 1.0)
    assert np.allclose(np.abs(profile.phi_r[:3]), 1.0)


def test_unreachable_primary_constraint_fails_initialisation(small_config, small_channels):
    # P_Rx / gamma_min below the noise floor: no transmit power is low enough
    config = small_config.with_overrides(primary_rx_power_dbm=-120.0)
    with pytest.raises(InitializationInfeasible):
        initialize(config, small_channels)


def test_reseeded_slacks_are_exact(small_config, small_channels):
    beamformer, profile = initialize(small_config, small_channels)
    state = reseed_slacks(beamformer.W, profile, small_channels, small_config)
    z_r = effective_channels(small_channels, profile).z_r
    signal, interference = signal_and_interference(z_r, beamformer.W)
    assert np.allclose(state.zeta, interference + small_config.noise_power, rtol=1e-12)
    assert np.allclose(state.eta, user_sinrs(beamformer.W, profile, small_channels, small_config), rtol=1e-12)
    assert np.array_equal(state.rho, state.eta)


def beamforming_program_at_initial_point(config, channels):
    beamformer, profile = initialize(config, channels)
    z_r = effective_channels(channels, profile).z_r
    W = align_phases(beamformer.W, z_r)
    state = reseed_slacks(W, profile, channels, config)
    channels_n = normalised_channels(channels, config)
    program, index = build_beamforming_program(
        profile, W, state.eta, state.zeta / config.noise_power, channels_n,
        normalised_interference_budget(config), config.max_power,
    )
    return program, index, W, profile, state


def test_beamforming_constraints_are_tight_at_expansion_point(small_config, small_channels):
    program, index, W, profile, state = beamforming_program_at_initial_point(small_config, small_channels)
    values = program.inequality_values(program.warm_start)
    zeta_n = state.zeta / small_config.noise_power
    for k in index.users:
        assert abs(values[program.constraint_index(f"interference[{k}]")]) <= 1e-9 * zeta_n[k]
        scale = math.sqrt(state.eta[k] * zeta_n[k])
        assert abs(values[program.constraint_index(f"sinr_taylor[{k}]")]) <= 1e-9 * scale
    assert np.allclose(index.beamformer(program.warm_start), W)


def test_degenerate_slack_is_detected(small_config, small_channels):
    beamformer, profile = initialize(small_config, small_channels)
    state = reseed_slacks(beamformer.W, profile, small_channels, small_config)
    with pytest.raises(DegenerateSlack) as caught:
        build_beamforming_program(profile, beamformer.W, np.full(small_config.num_users, 1e-11),
                                  state.zeta / small_config.noise_power,
                                  normalised_channels(small_channels, small_config),
                                  normalised_interference_budget(small_config), small_config.max_power)
    assert caught.value.users == list(range(small_config.num_users))


def starved_second_user(config, channels):
    """Initial point with user 1's beam shrunk until its SINR is far below the floor."""
    beamformer, profile = initialize(config, channels)
    W = beamformer.W.copy()
    W[:, 1] *= 1e-12
    return W, profile


def test_starved_user_is_pinned_in_coefficient_block(small_config, small_channels):
    W, profile = starved_second_user(small_config, small_channels)
    assert user_sinrs(W, profile, small_channels, small_config)[1] < 1e-9
    state = reseed_slacks(W, profile, small_channels, small_config)
    assert state.rho[1] == 0 and state.eta[1] == 0
    assert state.rho[0] > 0

    _, index = build_coefficient_program(W, profile, state.rho, normalised_channels(small_channels, small_config),
                                         normalised_interference_budget(small_config), 1.0,
                                         SurfaceLayout.star(small_config.num_ris_elements))
    assert list(index.users) == [0]

    step = solve_coefficient_subproblem(W, profile, state, small_channels, small_config)
    assert step.slacks[1] == 0
    assert step.slacks[0] > 0

    optimiser = AlternatingOptimiser(small_channels, small_config)
    improved, stats = optimiser.coefficient_block(W, profile, small_config.effective_penalty_constant, 1)
    assert stats.inner_iterations >= 1
    assert spectral_efficiency(W, improved, small_channels, small_config) >= \
        spectral_efficiency(W, profile, small_channels, small_config)


def test_pinned_users_are_left_out_of_beamforming_program(small_config, small_channels):
    W, profile = starved_second_user(small_config, small_channels)
    state = reseed_slacks(W, profile, small_channels, small_config)
    _, index = build_beamforming_program(profile, W, state.eta, state.zeta / small_config.noise_power,
                                         normalised_channels(small_channels, small_config),
                                         normalised_interference_budget(small_config), small_config.max_power)
    assert list(index.users) == [0]


def test_degenerate_slacks_are_reseeded_with_users_pinned(small_config, small_channels, monkeypatch):
    W, profile = starved_second_user(small_config, small_channels)
    z_r = effective_channels(small_channels, profile).z_r
    W = align_phases(W, z_r)
    signal, interference = signal_and_interference(z_r, W)
    zeta = interference + small_config.noise_power
    eta = signal / zeta
    assert 0 < eta[1] < 1e-9
    state = SubproblemState(rho=eta.copy(), eta=eta, zeta=zeta, iterate_index=1)

    calls = []
    original = sca_optimiser.reseed_slacks

    def recording(*args, **kwargs):
        calls.append(list(kwargs.get("exclude", ())))
        return original(*args, **kwargs)

    monkeypatch.setattr(sca_optimiser, "reseed_slacks", recording)
    optimiser = AlternatingOptimiser(small_channels, small_config)
    W_new, stats = optimiser.beamforming_block(W, profile, 1, state=state)

    assert calls == [[1]]
    assert stats.inner_iterations >= 1
    assert spectral_efficiency(W_new, profile, small_channels, small_config) >= \
        spectral_efficiency(W, profile, small_channels, small_config)


def test_coefficient_rate_constraint_is_tangent(small_config, small_channels):
    beamformer, profile = initialize(small_config, small_channels)
    W = beamformer.W
    state = reseed_slacks(W, profile, small_channels, small_config)
    channels_n = normalised_channels(small_channels, small_config)
    layout = SurfaceLayout.star(small_config.num_ris_elements)
    program, index = build_coefficient_program(W, profile, state.rho, channels_n,
                                               normalised_interference_budget(small_config), 1.0, layout)
    x0 = program.warm_start
    assert np.allclose(index.profile(x0).phi_r, profile.phi_r)
    scales = 1e-6 * np.maximum(1.0, np.abs(x0))

    for k in index.users:
        constraint = program.quadratics[program.constraint_index(f"rate[{k}]")]
        column = index.rho_column(k)

        def exact(x, k=k, column=column):
            z_r = effective_channels(channels_n, index.profile(x)).z_r
            gains = np.abs(z_r[k] @ W) ** 2
            return gains.sum() - gains[k] + 1.0 - gains[k] / x[column]

        signal = np.abs(effective_channels(channels_n, profile).z_r[k] @ W[:, k]) ** 2
        assert abs(constraint.value(x0)) <= 1e-9 * signal / state.rho[k]
        assert abs(exact(x0)) <= 1e-9 * signal / state.rho[k]
        gradient = constraint.gradient(x0)
        fd = central_difference(exact, x0, scales)
        assert np.linalg.norm(gradient - fd) <= 1e-5 * np.linalg.norm(gradient)


def test_beamforming_subproblem_keeps_constraints(small_config, small_channels):
    beamformer, profile = initialize(small_config, small_channels)
    state = reseed_slacks(beamformer.W, profile, small_channels, small_config)
    step = solve_beamforming_subproblem(profile, beamformer.W, state, small_channels, small_config)
    assert np.sum(np.abs(step.W) ** 2) <= small_config.max_power * (1 + 1e-9)
    assert primary_sinr(step.W, profile, small_channels, small_config) >= small_config.min_primary_sinr
    responses = np.einsum("km,mk->k", effective_channels(small_channels, profile).z_r, step.W)
    assert np.allclose(responses.imag, 0.0, atol=1e-12 * np.max(np.abs(responses)))
    assert np.all(responses.real >= 0)


def test_primary_constraint_is_active_in_coefficient_block(miso_config):
    # the direct path alone breaks the budget, the transmission side has to cancel half of it
    config = miso_config.with_overrides(min_primary_sinr_db=30.0,
                                        primary_rx_power_dbm=watts_to_dbm(101.0 * 1000.0 * miso_config.noise_power))
    sigma = np.sqrt(config.noise_power)
    direction = np.array([1.0, 0.0], dtype=complex)
    reflect_phases = np.array([0.4, -1.1])
    channels = ChannelSet(
        h0=20.0 * sigma * direction,
        h=10.0 * sigma * direction[None, :],
        H=sigma * np.ones((2, 2), dtype=complex),
        g0=np.ones(2, dtype=complex),
        g=np.ones((1, 2), dtype=complex),
        G0=10.0 * sigma * np.outer(np.ones(2), direction),
        G=(3.0 * sigma * np.outer(np.exp(1j * reflect_phases), direction))[None, :, :],
        ue_positions=np.zeros((1, 3)),
    )
    W = direction[:, None].copy()
    profile = StarRisProfile(-np.sqrt(0.5) * np.ones(2, dtype=complex), np.sqrt(0.5) * np.exp(-1j * reflect_phases))
    budget = normalised_interference_budget(config)
    assert budget == pytest.approx(100.0)

    state = reseed_slacks(W, profile, channels, config)
    step = solve_coefficient_subproblem(W, profile, state, channels, config)
    leaked = primary_interference(effective_channels(channels, step.profile).z_t0, W) / config.noise_power
    assert leaked <= budget * (1 + 1e-9)
    assert leaked >= budget * (1 - 1e-3)
    assert np.all(step.profile.beta_r > 0.5)
    assert user_sinrs(W, step.profile, channels, config)[0] > user_sinrs(W, profile, channels, config)[0]


def test_power_constraint_is_active_in_beamforming_block(miso_config, miso_channels):
    config = miso_config.with_overrides(min_primary_sinr_db=0.0)
    beamformer, profile = initialize(config, miso_channels)
    state = reseed_slacks(beamformer.W, profile, miso_channels, config)
    step = solve_beamforming_subproblem(profile, beamformer.W, state, miso_channels, config)
    assert np.sum(np.abs(step.W) ** 2) == pytest.approx(config.max_power, rel=1e-4)
    assert np.sum(np.abs(step.W) ** 2) <= config.max_power * (1 + 1e-9)
    assert primary_sinr(step.W, profile, miso_channels, config) > config.min_primary_sinr


def test_single_user_reaches_maximum_ratio_transmission(miso_config, miso_channels):
    result = alternate(miso_channels, miso_config, optimise_surface=False)
    gain = np.linalg.norm(miso_channels.h[0]) ** 2 / miso_config.noise_power
    expected = math.log2(1.0 + miso_config.max_power * gain)
    assert result.final_metrics.spectral_efficiency == pytest.approx(expected, abs=1e-3)
    assert result.final_metrics.transmit_power <= miso_config.max_power * (1 + 1e-6)
    assert result.final_metrics.transmit_power == pytest.approx(miso_config.max_power, rel=1e-3)


def test_alternating_run_is_monotone_and_feasible(small_config, small_channels):
    result = alternate(small_channels, small_config)
    trace = result.objective_trace
    assert 1 <= len(trace) <= small_config.max_outer_iterations
    assert trace[0] >= result.initial_spectral_efficiency
    assert all(later >= earlier for earlier, later in zip(trace, trace[1:]))
    assert result.status in ("converged", "iteration_limit", "subproblem_failure")
    assert len(result.trace_records()) == len(trace)

    assert result.final_profile.max_abs_energy_residual() <= 1e-6
    assert result.final_metrics.transmit_power <= small_config.max_power * (1 + 1e-6)
    assert result.feasibility.feasible
    assert result.final_metrics.spectral_efficiency == pytest.approx(
        spectral_efficiency(result.final_beamformer.W, result.final_profile, small_channels, small_config))


def test_alternating_run_is_deterministic(small_config, small_channels):
    first = alternate(small_channels, small_config)
    second = alternate(small_channels, small_config)
    assert first.objective_trace == second.objective_trace
    assert np.array_equal(first.final_beamformer.W, second.final_beamformer.W)


def test_single_inner_step_mode(small_config, small_channels):
    config = small_config.with_overrides(inner_mode="single")
    assert AlternatingOptimiser(small_channels, config).inner_cap == 1
    result = alternate(small_channels, config)
    for stats in result.subproblem_stats:
        assert stats.coefficient.inner_iterations <= 1
        assert stats.beamforming.inner_iterations <= 1


def test_penalty_schedule(small_config):
    base = small_config.effective_penalty_constant
    assert [penalty_schedule(j, small_config) for j in (1, 2, 3)] == [base] * 3
    assert penalty_schedule(4, small_config) == pytest.approx(5.0 * base)
    assert penalty_schedule(7, small_config) == pytest.approx(25.0 * base)
    assert penalty_schedule(100, small_config) == pytest.approx(small_config.penalty_cap_ratio * base)


def test_surface_phases_reach_grid_optimum(miso_config):
    # every surface path adds to the direct path along the same antenna direction
    sigma = np.sqrt(miso_config.noise_power)
    direction = np.array([1.0, 0.0], dtype=complex)
    paths = 3.0 * sigma * np.exp(1j * np.array([0.9, -2.3]))
    G = (paths[:, None] * direction[None, :])[None, :, :]
    channels = ChannelSet(
        h0=sigma * np.array([0.0, 1.0], dtype=complex),
        h=14.0 * sigma * direction[None, :].conj(),
        H=sigma * np.ones((2, 2), dtype=complex),
        g0=np.zeros(2, dtype=complex),
        g=np.ones((1, 2), dtype=complex),
        G0=np.zeros((2, 2), dtype=complex),
        G=G,
        ue_positions=np.zeros((1, 3)),
    )
    result = alternate(channels, miso_config)

    # exhaustive search over reflection phases at 2 degrees, full reflection, maximum-ratio beam
    grid = np.deg2rad(np.arange(0.0, 360.0, 2.0))
    theta_1, theta_2 = np.meshgrid(grid, grid)
    z = (channels.h[0, 0].conj() + np.exp(1j * theta_1) * G[0, 0, 0] + np.exp(1j * theta_2) * G[0, 1, 0])
    best = np.max(np.log2(1.0 + miso_config.max_power * np.abs(z) ** 2 / miso_config.noise_power))

    assert result.final_metrics.spectral_efficiency >= 0.95 * best
    assert result.final_metrics.spectral_efficiency <= best + 1e-3
    assert result.feasibility.feasible
