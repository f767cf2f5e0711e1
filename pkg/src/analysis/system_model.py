"""
STAR-RIS System Model

Coefficient model of an energy-splitting STAR-RIS and the closed-form
performance expressions of the spectrum-sharing downlink: effective channels,
primary and secondary SINR, secondary sum-rate and the feasibility audit of the
master problem's constraints.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from src.simulation.config import linear_to_db, watts_to_dbm

logger = logging.getLogger(__name__)

STRICT_ES_TOLERANCE = 1e-6


@dataclass(frozen=True)
class SurfaceLayout:
    """
    Which surface elements carry a transmission and which a reflection
    coefficient. A STAR-RIS supports both on every element; the conventional
    baseline splits the surface into a reflect-only and a transmit-only half.
    """

    num_elements: int
    transmit_support: tuple
    reflect_support: tuple
    name: str = "star"

    @classmethod
    def star(cls, num_elements):
        elements = tuple(range(num_elements))
        return cls(num_elements, elements, elements, "star")

    @classmethod
    def split(cls, num_elements):
        if num_elements % 2:
            raise ValueError(f"split layout needs an even element count, got {num_elements}")
        half = num_elements // 2
        return cls(num_elements, tuple(range(half, num_elements)), tuple(range(half)), "conventional")

    @property
    def transmit_mask(self):
        mask = np.zeros(self.num_elements, dtype=bool)
        mask[list(self.transmit_support)] = True
        return mask

    @property
    def reflect_mask(self):
        mask = np.zeros(self.num_elements, dtype=bool)
        mask[list(self.reflect_support)] = True
        return mask


@dataclass
class StarRisProfile:
    """Transmission (phi_t) and reflection (phi_r) coefficient vectors."""

    phi_t: np.ndarray
    phi_r: np.ndarray

    @classmethod
    def from_amplitude_phase(cls, beta_t, beta_r, theta_t, theta_r):
        """Build T_n = sqrt(beta_t) e^{j theta_t}, R_n = sqrt(beta_r) e^{j theta_r}."""
        phi_t = np.sqrt(np.asarray(beta_t, dtype=float)) * np.exp(1j * np.asarray(theta_t, dtype=float))
        phi_r = np.sqrt(np.asarray(beta_r, dtype=float)) * np.exp(1j * np.asarray(theta_r, dtype=float))
        return cls(phi_t, phi_r)

    @property
    def num_elements(self):
        return self.phi_t.shape[0]

    @property
    def beta_t(self):
        return np.abs(self.phi_t) ** 2

    @property
    def beta_r(self):
        return np.abs(self.phi_r) ** 2

    @property
    def theta_t(self):
        return np.mod(np.angle(self.phi_t), 2.0 * np.pi)

    @property
    def theta_r(self):
        return np.mod(np.angle(self.phi_r), 2.0 * np.pi)

    def energy_residuals(self):
        """Per-element |T_n|^2 + |R_n|^2 - 1."""
        return self.beta_t + self.beta_r - 1.0

    def max_abs_energy_residual(self):
        return float(np.max(np.abs(self.energy_residuals())))

    def is_strict_es(self, tolerance=STRICT_ES_TOLERANCE):
        return self.max_abs_energy_residual() <= tolerance

    def amplitude_excess(self):
        """Largest amount by which any coefficient modulus exceeds one."""
        return float(max(np.max(np.abs(self.phi_t)) - 1.0, np.max(np.abs(self.phi_r)) - 1.0, 0.0))

    def project_strict_es(self, layout=None):
        """
        Rescale every element radially onto the energy circle. Elements with no
        energy left are reset to an equal split with zero phase.
        """
        layout = layout or SurfaceLayout.star(self.num_elements)
        phi_t = np.where(layout.transmit_mask, self.phi_t, 0.0).astype(complex)
        phi_r = np.where(layout.reflect_mask, self.phi_r, 0.0).astype(complex)
        norm = np.sqrt(np.abs(phi_t) ** 2 + np.abs(phi_r) ** 2)
        empty = norm <= 1e-12
        safe = np.where(empty, 1.0, norm)
        phi_t = phi_t / safe
        phi_r = phi_r / safe
        if np.any(empty):
            sides = layout.transmit_mask.astype(float) + layout.reflect_mask.astype(float)
            fill = 1.0 / np.sqrt(np.maximum(sides, 1.0))
            phi_t = np.where(empty & layout.transmit_mask, fill, phi_t)
            phi_r = np.where(empty & layout.reflect_mask, fill, phi_r)
        return StarRisProfile(phi_t, phi_r)

    def copy(self):
        return StarRisProfile(self.phi_t.copy(), self.phi_r.copy())


@dataclass
class Beamformer:
    """BS beamforming matrix W (M x K); column k serves UE k."""

    W: np.ndarray

    @property
    def total_power(self):
        return float(np.sum(np.abs(self.W) ** 2))

    def column(self, k):
        return self.W[:, k]

    def copy(self):
        return Beamformer(self.W.copy())


@dataclass
class PerformanceMetrics:
    sum_rate: float
    spectral_efficiency: float
    primary_sinr: float
    per_user_sinr: np.ndarray
    interference_at_rx: float
    transmit_power: float = 0.0

    def to_record(self):
        """Flat JSON-compatible record; dB conversions happen only here."""
        record = {
            "sum_rate_bps": float(self.sum_rate),
            "spectral_efficiency": float(self.spectral_efficiency),
            "primary_sinr_db": linear_to_db(self.primary_sinr),
            "interference_at_rx_dbm": watts_to_dbm(self.interference_at_rx) if self.interference_at_rx > 0 else float("-inf"),
            "transmit_power_dbm": watts_to_dbm(self.transmit_power) if self.transmit_power > 0 else float("-inf"),
        }
        for k, value in enumerate(self.per_user_sinr):
            record[f"user_{k}_sinr_db"] = linear_to_db(float(value))
        return record


@dataclass
class FeasibilityReport:
    """
    Residuals of the master-problem constraints. Power and SINR margins are
    relative, energy and amplitude residuals absolute. Positive margins mean
    slack.
    """

    primary_sinr_margin: float
    power_margin: float
    energy_residuals: np.ndarray
    amplitude_excess: float
    tolerance: float
    violations: list = field(default_factory=list)

    @property
    def feasible(self):
        return not self.violations

    @property
    def strict_es(self):
        return float(np.max(np.abs(self.energy_residuals))) <= STRICT_ES_TOLERANCE

    def to_record(self):
        return {
            "feasible": self.feasible,
            "primary_sinr_margin": float(self.primary_sinr_margin),
            "power_margin": float(self.power_margin),
            "max_energy_residual": float(np.max(self.energy_residuals)),
            "max_abs_energy_residual": float(np.max(np.abs(self.energy_residuals))),
            "amplitude_excess": float(self.amplitude_excess),
            "strict_es": self.strict_es,
            "violations": list(self.violations),
        }


@dataclass
class EffectiveChannels:
    """
    Composite channels for a given surface profile, z_t0 = h0^H + phi_t^T G0 and
    z_rk = h_k^H + phi_r^T G_k, plus the per-beamformer substitutions of the
    coefficient subproblem.
    """

    z_t0: np.ndarray  # (M,)
    z_r: np.ndarray  # (K, M)
    channels: object

    def h_tilde(self, W):
        """h~_ki = h_k^H w_i as a K x K matrix."""
        return self.channels.h.conj() @ W

    def h_tilde_primary(self, W):
        """h~_0k = h0^H w_k."""
        return self.channels.h0.conj() @ W

    def g_tilde(self, W):
        """g~_ki = (G_k w_i)^* as a K x K x N array."""
        return np.einsum("knm,mi->kin", self.channels.G, W).conj()

    def g_tilde_primary(self, W):
        """g~_0k = (G0 w_k)^* as a K x N array."""
        return (self.channels.G0 @ W).T.conj()


def effective_channels(channels, profile):
    z_t0 = channels.h0.conj() + profile.phi_t @ channels.G0
    z_r = channels.h.conj() + np.einsum("n,knm->km", profile.phi_r, channels.G)
    return EffectiveChannels(z_t0=z_t0, z_r=z_r, channels=channels)


def signal_and_interference(z_r, W):
    """Desired power |z_rk w_k|^2 and multi-user interference per user."""
    gains = np.abs(z_r @ W) ** 2
    signal = np.diag(gains).copy()
    interference = gains.sum(axis=1) - signal
    return signal, interference


def primary_interference(z_t0, W):
    """Secondary power leaking into the primary Rx, sum_k |z_t0 w_k|^2."""
    return float(np.sum(np.abs(z_t0 @ W) ** 2))


def primary_sinr(W, profile, channels, config):
    interference = primary_interference(effective_channels(channels, profile).z_t0, W)
    return config.primary_rx_power / (interference + config.noise_power)


def user_sinrs(W, profile, channels, config):
    signal, interference = signal_and_interference(effective_channels(channels, profile).z_r, W)
    return signal / (interference + config.noise_power)


def secondary_sinr(k, W, profile, channels, config):
    if not 0 <= k < channels.num_users:
        raise ValueError(f"user index {k} out of range for K={channels.num_users}")
    return float(user_sinrs(W, profile, channels, config)[k])


def sum_rate(W, profile, channels, config):
    """Secondary sum-rate in bits/s."""
    return float(config.bandwidth_hz * np.sum(np.log2(1.0 + user_sinrs(W, profile, channels, config))))


def spectral_efficiency(W, profile, channels, config):
    """Sum-rate divided by the bandwidth, bits/s/Hz."""
    return float(np.sum(np.log2(1.0 + user_sinrs(W, profile, channels, config))))


def evaluate(W, profile, channels, config):
    effective = effective_channels(channels, profile)
    signal, interference = signal_and_interference(effective.z_r, W)
    sinr = signal / (interference + config.noise_power)
    leak = primary_interference(effective.z_t0, W)
    efficiency = float(np.sum(np.log2(1.0 + sinr)))
    return PerformanceMetrics(
        sum_rate=efficiency * config.bandwidth_hz,
        spectral_efficiency=efficiency,
        primary_sinr=config.primary_rx_power / (leak + config.noise_power),
        per_user_sinr=sinr,
        interference_at_rx=leak,
        transmit_power=float(np.sum(np.abs(W) ** 2)),
    )


def check_feasibility(W, profile, config, channels, tolerance=None):
    """Audit the primary SINR, power, energy and amplitude constraints; infeasibility is reported, never raised."""
    tolerance = config.solver_tolerance if tolerance is None else tolerance
    gamma = primary_sinr(W, profile, channels, config)
    gamma_min = config.min_primary_sinr
    power = float(np.sum(np.abs(W) ** 2))
    report = FeasibilityReport(
        primary_sinr_margin=(gamma - gamma_min) / gamma_min,
        power_margin=(config.max_power - power) / config.max_power,
        energy_residuals=profile.energy_residuals(),
        amplitude_excess=profile.amplitude_excess(),
        tolerance=tolerance,
    )
    if report.primary_sinr_margin < -tolerance:
        report.violations.append("primary_sinr")
    if report.power_margin < -tolerance:
        report.violations.append("power")
    if np.max(report.energy_residuals) > tolerance:
        report.violations.append("energy")
    if report.amplitude_excess > tolerance:
        report.violations.append("amplitude")
    if report.violations:
        logger.debug("Infeasible point: %s", report.violations)
    return report
