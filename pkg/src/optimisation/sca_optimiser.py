"""
Alternating SCA Optimiser

Maximises the secondary sum-rate of the STAR-RIS spectrum-sharing downlink by
alternating between the surface coefficients (phi_t, phi_r) with W fixed and the
beamformer W with the surface fixed. Each block is itself a loop of convexified
subproblems solved by the interior-point engine, expanded around the previous
iterate with slacks re-seeded from the exact SINRs.

Inside the subproblems all channels are expressed in noise-normalised units
(sigma^2 = 1); the public functions take and return physical quantities.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from src.analysis.system_model import (
    Beamformer,
    StarRisProfile,
    SurfaceLayout,
    check_feasibility,
    effective_channels,
    evaluate,
    primary_sinr,
    signal_and_interference,
    spectral_efficiency,
)
from src.exceptions import DegenerateSlack, InitializationInfeasible, SubproblemInfeasible
from src.optimisation.convex_engine import (
    ConvexProgram,
    InteriorPointSolver,
    embed_complex,
    lift_real,
    real_part_row,
    squared_modulus_form,
)
from src.simulation.config import INIT_STREAM, derive_rng

logger = logging.getLogger(__name__)

DEGENERATE_THRESHOLD = 1e-12
SINR_FLOOR = 1e-9
POWER_FLOOR_RATIO = 1e-6
BISECTION_STEPS = 60
RATE_EPSILON = 1e-12
MAX_CONSECUTIVE_FAILURES = 2
LOG2_E = 1.0 / math.log(2.0)


@dataclass
class SubproblemState:
    """
    SINR slacks rho (coefficient block) and eta (beamforming block), and the
    interference-plus-noise slack zeta in watts, for iterate j.
    """

    rho: np.ndarray
    eta: np.ndarray
    zeta: np.ndarray
    iterate_index: int = 0


@dataclass
class BlockStep:
    """Outcome of one convexified subproblem."""

    profile: StarRisProfile
    W: np.ndarray
    slacks: np.ndarray
    zeta: np.ndarray
    inner_value: float
    status: str
    newton_iterations: int


@dataclass
class BlockStats:
    statuses: list = field(default_factory=list)
    inner_iterations: int = 0
    rejected: int = 0


@dataclass
class IterationStats:
    iteration: int
    spectral_efficiency: float
    penalty_constant: float
    coefficient: BlockStats
    beamforming: BlockStats
    primary_sinr_margin: float
    power_margin: float
    max_energy_residual: float
    failed: bool = False

    def to_record(self):
        return {
            "iteration": self.iteration,
            "spectral_efficiency": self.spectral_efficiency,
            "penalty_constant": self.penalty_constant,
            "coefficient_statuses": "|".join(self.coefficient.statuses),
            "coefficient_inner_iterations": self.coefficient.inner_iterations,
            "beamforming_statuses": "|".join(self.beamforming.statuses),
            "beamforming_inner_iterations": self.beamforming.inner_iterations,
            "primary_sinr_margin": self.primary_sinr_margin,
            "power_margin": self.power_margin,
            "max_energy_residual": self.max_energy_residual,
            "failed": self.failed,
        }


@dataclass
class OptimizationResult:
    objective_trace: list
    final_profile: StarRisProfile
    final_beamformer: Beamformer
    final_metrics: object
    feasibility: object
    outer_iterations: int
    subproblem_stats: list
    status: str = "converged"
    scheme: str = "star"
    layout: SurfaceLayout = None
    initial_spectral_efficiency: float = float("nan")

    def trace_records(self):
        return [stats.to_record() for stats in self.subproblem_stats]


# --------------------------------------------------------------------------
# Units and schedules
# --------------------------------------------------------------------------

def normalised_channels(channels, config):
    """Channels divided by the noise amplitude, so the noise power becomes 1."""
    return channels.scaled(1.0 / math.sqrt(config.noise_power))


def normalised_interference_budget(config):
    """Primary-Rx interference budget in noise units, P_Rx/(gamma_min sigma^2) - 1."""
    return config.primary_rx_power / (config.min_primary_sinr * config.noise_power) - 1.0


def penalty_schedule(iteration, config):
    """Penalty constant C for outer iteration ``iteration`` (1-based)."""
    base = config.effective_penalty_constant
    grown = base * config.penalty_growth ** ((iteration - 1) // config.penalty_growth_interval)
    return min(grown, base * config.penalty_cap_ratio)


def starved(sinr, threshold=SINR_FLOOR):
    """
    Users whose SINR (or SINR slack) is at or below the floor. Their slacks are
    pinned to zero and they are left out of every Taylor expansion.
    """
    return np.asarray(sinr, dtype=float) <= threshold


# --------------------------------------------------------------------------
# Initialisation and slacks
# --------------------------------------------------------------------------

def initial_profile(num_elements, rng, layout=None):
    """
    Equal energy split over the supported coefficients of every element with
    independent uniform phases (2N draws, transmission phases first).
    """
    layout = layout or SurfaceLayout.star(num_elements)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(2, num_elements))
    sides = layout.transmit_mask.astype(float) + layout.reflect_mask.astype(float)
    amplitude = 1.0 / np.sqrt(np.maximum(sides, 1.0))
    phi_t = np.where(layout.transmit_mask, amplitude * np.exp(1j * phases[0]), 0.0)
    phi_r = np.where(layout.reflect_mask, amplitude * np.exp(1j * phases[1]), 0.0)
    return StarRisProfile(phi_t.astype(complex), phi_r.astype(complex))


def scale_to_primary_feasibility(W, profile, channels, config, floor_ratio=POWER_FLOOR_RATIO):
    """
    Shrink W by bisection on its power until the primary SINR constraint holds.
    Returns the scaled matrix, or raises InitializationInfeasible when even a
    total power of floor_ratio * P_max violates it.
    """
    gamma_min = config.min_primary_sinr

    def feasible(fraction):
        return primary_sinr(W * math.sqrt(fraction), profile, channels, config) >= gamma_min

    if feasible(1.0):
        return W
    power = float(np.sum(np.abs(W) ** 2))
    low = min(1.0, floor_ratio * config.max_power / power) if power > 0 else 1.0
    if not feasible(low):
        raise InitializationInfeasible(
            f"primary SINR below {config.min_primary_sinr_db} dB even at {floor_ratio:g} x P_max"
        )
    high = 1.0
    for _ in range(BISECTION_STEPS):
        middle = 0.5 * (low + high)
        if feasible(middle):
            low = middle
        else:
            high = middle
    logger.debug("Scaled beamformer power by %.6g to meet the primary SINR", low)
    return W * math.sqrt(low)


def initialize(config, channels, rng=None, layout=None):
    """Matched-filter beamformer at 90 % of P_max and a random equal-split profile."""
    rng = derive_rng(config.rng_seed, INIT_STREAM) if rng is None else rng
    profile = initial_profile(channels.num_elements, rng, layout)
    k = channels.num_users
    norms = np.linalg.norm(channels.h, axis=1)
    if np.any(norms == 0):
        raise InitializationInfeasible("a direct BS-UE channel is identically zero")
    column_power = config.initial_power_fraction * config.max_power / k
    W = (channels.h / norms[:, None]).T * math.sqrt(column_power)
    W = scale_to_primary_feasibility(W, profile, channels, config)
    return Beamformer(W), profile


def reseed_slacks(W, profile, channels, config, iterate_index=0, exclude=()):
    """
    Slacks set from the exact SINRs and interference-plus-noise of (W, profile).
    Starved users, and any listed in ``exclude``, get rho = eta = 0.
    """
    z_r = effective_channels(channels, profile).z_r
    signal, interference = signal_and_interference(z_r, W)
    zeta = interference + config.noise_power
    sinr = signal / zeta
    pinned = starved(sinr)
    pinned[list(exclude)] = True
    rho = np.where(pinned, 0.0, sinr)
    return SubproblemState(rho=rho, eta=rho.copy(), zeta=zeta, iterate_index=iterate_index)


# --------------------------------------------------------------------------
# Coefficient subproblem
# --------------------------------------------------------------------------

@dataclass
class CoefficientIndex:
    """Column layout [embed(phi_t[T]), embed(phi_r[R]), rho_active]."""

    layout: SurfaceLayout
    users: np.ndarray

    @property
    def transmit(self):
        return slice(0, 2 * len(self.layout.transmit_support))

    @property
    def reflect(self):
        start = 2 * len(self.layout.transmit_support)
        return slice(start, start + 2 * len(self.layout.reflect_support))

    def rho_column(self, k):
        return self.reflect.stop + int(np.flatnonzero(self.users == k)[0])

    @property
    def dim(self):
        return self.reflect.stop + len(self.users)

    def element_columns(self, n):
        columns = []
        for support, block in ((self.layout.transmit_support, self.transmit),
                               (self.layout.reflect_support, self.reflect)):
            if n in support:
                j = support.index(n)
                columns.extend([block.start + 2 * j, block.start + 2 * j + 1])
        return columns

    def profile(self, x):
        n = self.layout.num_elements
        phi_t = np.zeros(n, dtype=complex)
        phi_r = np.zeros(n, dtype=complex)
        phi_t[list(self.layout.transmit_support)] = lift_real(x[self.transmit])
        phi_r[list(self.layout.reflect_support)] = lift_real(x[self.reflect])
        return StarRisProfile(phi_t, phi_r)


def build_coefficient_program(W, profile, rho, channels_n, budget, penalty, layout):
    """
    Convexified coefficient problem around (profile, rho) in noise units.
    ``penalty`` is the per-element penalty constant divided by the bandwidth.
    """
    T = list(layout.transmit_support)
    R = list(layout.reflect_support)
    effective = effective_channels(channels_n, profile)
    h_tilde = effective.h_tilde(W)
    h_primary = effective.h_tilde_primary(W)
    cross = np.einsum("knm,mi->kin", channels_n.G, W)  # G_k w_i
    cross_primary = (channels_n.G0 @ W).T  # G0 w_k
    users = np.flatnonzero(~starved(rho))
    index = CoefficientIndex(layout, users)
    dim = index.dim
    ts, rs = index.transmit, index.reflect
    program = ConvexProgram(dim, name="coefficient")

    for k in users:
        P = np.zeros((dim, dim))
        q = np.zeros(dim)
        r = 1.0
        for i in range(channels_n.num_users):
            if i == k:
                continue
            Pi, qi, ri = squared_modulus_form(cross[k, i, R], h_tilde[k, i])
            P[rs, rs] += Pi
            q[rs] += qi
            r += ri
        a0 = h_tilde[k, k] + cross[k, k, R] @ profile.phi_r[R]
        q[rs] -= (2.0 / rho[k]) * real_part_row(np.conj(a0) * cross[k, k, R])
        r -= (2.0 / rho[k]) * float(np.real(np.conj(a0) * h_tilde[k, k]))
        q[index.rho_column(k)] = abs(a0) ** 2 / rho[k] ** 2
        program.add_quadratic(P, q, r, name=f"rate[{k}]")

    P = np.zeros((dim, dim))
    q = np.zeros(dim)
    r = -budget
    for k in range(channels_n.num_users):
        Pk, qk, rk = squared_modulus_form(cross_primary[k, T], h_primary[k])
        P[ts, ts] += Pk
        q[ts] += qk
        r += rk
    program.add_quadratic(P, q, r, name="primary_interference")

    for n in range(layout.num_elements):
        columns = index.element_columns(n)
        if not columns:
            continue
        P = np.zeros((dim, dim))
        P[columns, columns] = 1.0
        program.add_quadratic(P, np.zeros(dim), -1.0, name=f"energy[{n}]")

    lower = np.full(dim, -1.0)
    upper = np.full(dim, 1.0)
    lower[rs.stop:] = 0.0
    upper[rs.stop:] = np.inf
    program.add_bounds(lower, upper)

    for k in users:
        row = np.zeros(dim)
        row[index.rho_column(k)] = 1.0
        program.add_log_term(row, 0.0, weight=LOG2_E)
    current = np.concatenate([embed_complex(profile.phi_t[T]), embed_complex(profile.phi_r[R])])
    linear = np.zeros(dim)
    linear[: rs.stop] = 2.0 * penalty * current
    program.add_linear_objective(linear, -penalty * (current @ current + layout.num_elements))
    program.warm_start = np.concatenate([current, rho[users]])
    return program, index


def solve_coefficient_subproblem(W, profile, state, channels, config, penalty_constant=None,
                                 layout=None, solver=None):
    """
    One convexified surface-coefficient problem with W fixed. Raises
    SubproblemInfeasible when the engine finds no usable point.
    """
    layout = layout or SurfaceLayout.star(channels.num_elements)
    solver = solver or InteriorPointSolver(config.solver_tolerance)
    penalty = config.effective_penalty_constant if penalty_constant is None else penalty_constant
    program, index = build_coefficient_program(
        W, profile, np.asarray(state.rho, dtype=float), normalised_channels(channels, config),
        normalised_interference_budget(config), penalty / config.bandwidth_hz, layout,
    )
    outcome = solver.solve(program)
    if not outcome.usable:
        raise SubproblemInfeasible("coefficient", f"{outcome.status.value} {outcome.message}".strip())
    rho = np.zeros(channels.num_users)
    rho[index.users] = outcome.x_star[index.reflect.stop:]
    return BlockStep(index.profile(outcome.x_star), W, rho, np.asarray(state.zeta), outcome.objective_value,
                     outcome.status.value, outcome.iterations)


# --------------------------------------------------------------------------
# Beamforming subproblem
# --------------------------------------------------------------------------

@dataclass
class BeamformingIndex:
    """Column layout [embed(w_0), ..., embed(w_{K-1}), eta_active, zeta_active]."""

    num_antennas: int
    num_users: int
    users: np.ndarray

    def column(self, k):
        width = 2 * self.num_antennas
        return slice(k * width, (k + 1) * width)

    @property
    def beams(self):
        return slice(0, 2 * self.num_antennas * self.num_users)

    def eta_column(self, k):
        return self.beams.stop + int(np.flatnonzero(self.users == k)[0])

    def zeta_column(self, k):
        return self.beams.stop + len(self.users) + int(np.flatnonzero(self.users == k)[0])

    @property
    def dim(self):
        return self.beams.stop + 2 * len(self.users)

    def beamformer(self, x):
        return lift_real(x[self.beams]).reshape(self.num_users, self.num_antennas).T


def build_beamforming_program(profile, W, eta, zeta, channels_n, budget, max_power):
    """
    Convexified beamforming problem around (W, eta, zeta), zeta in noise units.
    Users pinned at eta = 0 are left out; a tracked user whose eta is starved or
    whose zeta is (near) zero raises DegenerateSlack.
    """
    effective = effective_channels(channels_n, profile)
    z_r, z_t0 = effective.z_r, effective.z_t0
    m, k_users = W.shape
    users = np.flatnonzero(eta != 0.0)
    degenerate = [int(k) for k in users if starved(eta[k]) or zeta[k] <= DEGENERATE_THRESHOLD]
    if degenerate:
        raise DegenerateSlack(degenerate)
    index = BeamformingIndex(m, k_users, users)
    dim = index.dim
    program = ConvexProgram(dim, name="beamforming")

    for k in users:
        row = np.zeros(dim)
        row[index.eta_column(k)] = 0.5 * math.sqrt(zeta[k] / eta[k])
        row[index.zeta_column(k)] = 0.5 * math.sqrt(eta[k] / zeta[k])
        row[index.column(k)] = -real_part_row(z_r[k])
        program.add_affine(row, 0.0, name=f"sinr_taylor[{k}]")

        P = np.zeros((dim, dim))
        q = np.zeros(dim)
        Pk, _, _ = squared_modulus_form(z_r[k])
        for i in range(k_users):
            if i != k:
                P[index.column(i), index.column(i)] += Pk
        q[index.zeta_column(k)] = -1.0
        program.add_quadratic(P, q, 1.0, name=f"interference[{k}]")

    P = np.zeros((dim, dim))
    P0, _, _ = squared_modulus_form(z_t0)
    for k in range(k_users):
        P[index.column(k), index.column(k)] += P0
    program.add_quadratic(P, np.zeros(dim), -budget, name="primary_interference")

    P = np.zeros((dim, dim))
    P[index.beams, index.beams] = np.eye(index.beams.stop)
    program.add_quadratic(P, np.zeros(dim), -max_power, name="power")

    lower = np.full(dim, -np.inf)
    lower[index.beams.stop:] = 0.0
    program.add_bounds(lower=lower)

    for k in users:
        row = np.zeros(dim)
        row[index.eta_column(k)] = 1.0
        program.add_log_term(row, 0.0, weight=LOG2_E)
    program.warm_start = np.concatenate([embed_complex(W.T.ravel()), eta[users], zeta[users]])
    return program, index


def align_phases(W, z_r):
    """Rotate every column so z_rk w_k is real and nonnegative."""
    W = W.copy()
    for k in range(W.shape[1]):
        response = z_r[k] @ W[:, k]
        if abs(response) > 0:
            W[:, k] *= np.exp(-1j * np.angle(response))
    return W


def solve_beamforming_subproblem(profile, W, state, channels, config, solver=None):
    """
    One convexified beamforming problem with the surface fixed. Raises
    DegenerateSlack when a tracked user has a starved slack and SubproblemInfeasible
    when the engine finds no usable point.
    """
    solver = solver or InteriorPointSolver(config.solver_tolerance)
    noise = config.noise_power
    channels_n = normalised_channels(channels, config)
    program, index = build_beamforming_program(
        profile, W, np.asarray(state.eta, dtype=float), np.asarray(state.zeta, dtype=float) / noise,
        channels_n, normalised_interference_budget(config), config.max_power,
    )
    outcome = solver.solve(program)
    if not outcome.usable:
        raise SubproblemInfeasible("beamforming", f"{outcome.status.value} {outcome.message}".strip())
    z_r = effective_channels(channels_n, profile).z_r
    W_new = align_phases(index.beamformer(outcome.x_star), z_r)
    n_users = len(index.users)
    eta = np.zeros(channels.num_users)
    zeta = np.asarray(state.zeta, dtype=float).copy()
    eta[index.users] = outcome.x_star[index.beams.stop:index.beams.stop + n_users]
    zeta[index.users] = outcome.x_star[index.beams.stop + n_users:] * noise
    return BlockStep(profile, W_new, eta, zeta, outcome.objective_value, outcome.status.value, outcome.iterations)


# --------------------------------------------------------------------------
# Alternating loop
# --------------------------------------------------------------------------

class AlternatingOptimiser:
    """
    Outer loop of the alternating optimisation. ``optimise_surface`` switches
    the coefficient block off, leaving a beamforming-only optimiser around a
    fixed surface profile.
    """

    def __init__(self, channels, config, layout=None, rng=None, optimise_surface=True, scheme="star"):
        self.channels = channels
        self.config = config.validate()
        self.layout = layout or SurfaceLayout.star(channels.num_elements)
        self.rng = rng
        self.optimise_surface = optimise_surface
        self.scheme = scheme
        self.solver = InteriorPointSolver(config.solver_tolerance)
        self.inner_cap = 1 if config.inner_mode == "single" else config.max_inner_iterations

    def _rate(self, W, profile):
        return spectral_efficiency(W, profile, self.channels, self.config)

    @staticmethod
    def _improvement(new, old):
        return (new - old) / max(old, RATE_EPSILON)

    def coefficient_block(self, W, profile, penalty, iteration):
        """Inner SCA loop over the surface coefficients; rejects steps that lower the rate."""
        stats = BlockStats()
        rate = self._rate(W, profile)
        for inner in range(self.inner_cap):
            state = reseed_slacks(W, profile, self.channels, self.config, iteration)
            try:
                step = solve_coefficient_subproblem(W, profile, state, self.channels, self.config,
                                                    penalty, self.layout, self.solver)
            except SubproblemInfeasible:
                if inner == 0:
                    raise
                break
            stats.statuses.append(step.status)
            stats.inner_iterations += 1
            candidate = self._rate(W, step.profile)
            if candidate < rate:
                logger.debug("Coefficient step rejected: %.8f < %.8f", candidate, rate)
                stats.rejected += 1
                break
            improvement = self._improvement(candidate, rate)
            profile, rate = step.profile, candidate
            if improvement <= self.config.inner_tolerance:
                break
        return profile, stats

    def beamforming_block(self, W, profile, iteration, state=None):
        """
        Inner SCA loop over the beamformer; rejects steps that lower the rate.
        The first step expands around ``state`` (re-seeded when None), later ones
        around the slacks of the previous solve.
        """
        stats = BlockStats()
        rate = self._rate(W, profile)
        if state is None:
            state = reseed_slacks(W, profile, self.channels, self.config, iteration)
        for inner in range(self.inner_cap):
            try:
                step = self._beamforming_step(profile, W, state, iteration)
            except SubproblemInfeasible:
                if inner == 0:
                    raise
                break
            stats.statuses.append(step.status)
            stats.inner_iterations += 1
            candidate = self._rate(step.W, profile)
            if candidate < rate:
                logger.debug("Beamforming step rejected: %.8f < %.8f", candidate, rate)
                stats.rejected += 1
                break
            improvement = self._improvement(candidate, rate)
            W, rate = step.W, candidate
            state = SubproblemState(rho=state.rho, eta=step.slacks, zeta=step.zeta, iterate_index=iteration)
            if improvement <= self.config.inner_tolerance:
                break
        return W, stats

    def _beamforming_step(self, profile, W, state, iteration):
        """One beamforming solve, retried once from exact slacks with degenerate users pinned."""
        try:
            return solve_beamforming_subproblem(profile, W, state, self.channels, self.config, self.solver)
        except DegenerateSlack as exc:
            logger.debug("Degenerate slacks for users %s; re-seeding with them pinned", exc.users)
            state = reseed_slacks(W, profile, self.channels, self.config, iteration, exclude=exc.users)
        return solve_beamforming_subproblem(profile, W, state, self.channels, self.config, self.solver)

    def run(self, initial=None):
        config = self.config
        if initial is None:
            beamformer, profile = initialize(config, self.channels, self.rng, self.layout)
        else:
            beamformer, profile = initial
        W = beamformer.W
        previous = initial_rate = self._rate(W, profile)
        logger.info("[%s] initial spectral efficiency %.4f bits/s/Hz", self.scheme, initial_rate)

        trace, history = [], []
        status = "iteration_limit"
        failures = 0
        for iteration in range(1, config.max_outer_iterations + 1):
            penalty = penalty_schedule(iteration, config)
            coefficient_stats, beamforming_stats = BlockStats(), BlockStats()
            failed = False
            try:
                if self.optimise_surface:
                    profile, coefficient_stats = self.coefficient_block(W, profile, penalty, iteration)
                W, beamforming_stats = self.beamforming_block(W, profile, iteration)
                failures = 0
            except SubproblemInfeasible as exc:
                failed = True
                failures += 1
                logger.warning("[%s] outer iteration %d: %s", self.scheme, iteration, exc)

            rate = self._rate(W, profile)
            report = check_feasibility(W, profile, config, self.channels)
            trace.append(rate)
            history.append(IterationStats(
                iteration=iteration, spectral_efficiency=rate, penalty_constant=penalty,
                coefficient=coefficient_stats, beamforming=beamforming_stats,
                primary_sinr_margin=report.primary_sinr_margin, power_margin=report.power_margin,
                max_energy_residual=float(np.max(report.energy_residuals)), failed=failed,
            ))
            logger.info("[%s] outer iteration %d: %.6f bits/s/Hz (C=%.3g)", self.scheme, iteration, rate, penalty)

            if failures >= MAX_CONSECUTIVE_FAILURES:
                status = "subproblem_failure"
                break
            if not failed and abs(rate - previous) / max(previous, RATE_EPSILON) <= config.sca_tolerance:
                status = "converged"
                break
            previous = rate

        W, profile = self._post_process(W, profile)
        metrics = evaluate(W, profile, self.channels, config)
        feasibility = check_feasibility(W, profile, config, self.channels)
        logger.info("[%s] finished (%s) after %d iterations: %.6f bits/s/Hz", self.scheme, status,
                    len(trace), metrics.spectral_efficiency)
        return OptimizationResult(
            objective_trace=trace, final_profile=profile, final_beamformer=Beamformer(W),
            final_metrics=metrics, feasibility=feasibility, outer_iterations=len(trace),
            subproblem_stats=history, status=status, scheme=self.scheme, layout=self.layout,
            initial_spectral_efficiency=initial_rate,
        )

    def _post_process(self, W, profile):
        """Strict-ES projection, primary feasibility restore and one more beamforming pass."""
        profile = profile.project_strict_es(self.layout)
        try:
            W = scale_to_primary_feasibility(W, profile, self.channels, self.config)
        except InitializationInfeasible as exc:
            logger.warning("[%s] projected point stays infeasible: %s", self.scheme, exc)
            return W, profile
        try:
            W, _ = self.beamforming_block(W, profile, self.config.max_outer_iterations + 1)
        except SubproblemInfeasible as exc:
            logger.warning("[%s] final beamforming pass failed: %s", self.scheme, exc)
        return W, profile


def alternate(channels, config, layout=None, rng=None, optimise_surface=True, scheme="star", initial=None):
    """Run the alternating optimisation; failures become the result's status."""
    optimiser = AlternatingOptimiser(channels, config, layout, rng, optimise_surface, scheme)
    return optimiser.run(initial)
