"""
mmWave Channel Synthesis

Generates the line-of-sight channels of the STAR-RIS spectrum-sharing scenario:
pathloss, uniform-linear-array responses, the direct BS links, the BS-to-surface
matrix, the surface-to-endpoint vectors and the cascaded channels that factor
the surface coefficients out.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from src.exceptions import GeometryError
from src.simulation.config import CHANNEL_STREAM, derive_rng

logger = logging.getLogger(__name__)


def pathloss_db(distance, freq_ghz, exponent):
    """
    Pathloss in dB: 32.4 + 10 c log10(d) + 20 log10(f), d in metres, f in GHz.

    Callers turn the result into an amplitude attenuation 10^(-PL/20).
    """
    if distance <= 0:
        raise ValueError(f"distance must be positive, got {distance}")
    if freq_ghz <= 0:
        raise ValueError(f"frequency must be positive, got {freq_ghz}")
    return 32.4 + 10.0 * exponent * math.log10(distance) + 20.0 * math.log10(freq_ghz)


def array_response(num_elements, azimuth, elevation, spacing_over_wavelength=0.5):
    """Unit-modulus ULA response; entry n carries phase 2 pi d n sin(az) cos(el)."""
    if num_elements < 1:
        raise ValueError(f"num_elements must be at least 1, got {num_elements}")
    step = 2.0 * np.pi * spacing_over_wavelength * np.sin(azimuth) * np.cos(elevation)
    return np.exp(1j * step * np.arange(num_elements))


def steering_angles(origin, target):
    """Azimuth and elevation (radians) of the direction origin -> target."""
    direction = np.asarray(target, dtype=float) - np.asarray(origin, dtype=float)
    if np.linalg.norm(direction) == 0:
        raise GeometryError(f"coincident positions {tuple(origin)} and {tuple(target)}")
    azimuth = math.atan2(direction[1], direction[0])
    elevation = math.atan2(direction[2], math.hypot(direction[0], direction[1]))
    return azimuth, elevation


def link_distance(origin, target):
    distance = float(np.linalg.norm(np.asarray(target, dtype=float) - np.asarray(origin, dtype=float)))
    if distance == 0:
        raise GeometryError(f"coincident positions {tuple(origin)} and {tuple(target)}")
    return distance


def complex_gain(rng, size=None):
    """Circularly-symmetric complex normal draw(s) with unit variance."""
    count = 1 if size is None else int(size)
    draws = rng.standard_normal((count, 2))
    gain = (draws[:, 0] + 1j * draws[:, 1]) / math.sqrt(2.0)
    return complex(gain[0]) if size is None else gain


def synthesize_bs_ris_channel(config, rng, gain=None):
    """
    Rank-one BS -> surface matrix H = alpha / sqrt(PL) * a_r a_t^H (N x M).
    """
    bs, ris = config.bs_position, config.ris_position
    azimuth_t, elevation_t = steering_angles(bs, ris)
    azimuth_r, elevation_r = steering_angles(ris, bs)
    loss = pathloss_db(link_distance(bs, ris), config.carrier_freq_ghz, config.pathloss_exponent_los)
    alpha = complex_gain(rng) if gain is None else complex(gain)
    a_t = array_response(config.num_bs_antennas, azimuth_t, elevation_t, config.spacing_over_wavelength)
    a_r = array_response(config.num_ris_elements, azimuth_r, elevation_r, config.spacing_over_wavelength)
    return alpha * 10.0 ** (-loss / 20.0) * np.outer(a_r, a_t.conj())


def synthesize_direct_channel(config, endpoint_position, rng, source="bs", gain=None):
    """
    Single-path channel alpha / sqrt(PL) * a(theta, psi) from the BS (M entries)
    or from the surface (N entries) towards an endpoint.
    """
    if source == "bs":
        origin, size = config.bs_position, config.num_bs_antennas
        exponent = config.pathloss_exponent_nlos if config.direct_link_blocked else config.pathloss_exponent_los
    elif source == "ris":
        origin, size = config.ris_position, config.num_ris_elements
        exponent = config.pathloss_exponent_los
    else:
        raise ValueError(f"source must be 'bs' or 'ris', got {source!r}")
    azimuth, elevation = steering_angles(origin, endpoint_position)
    loss = pathloss_db(link_distance(origin, endpoint_position), config.carrier_freq_ghz, exponent)
    alpha = complex_gain(rng) if gain is None else complex(gain)
    return alpha * 10.0 ** (-loss / 20.0) * array_response(size, azimuth, elevation, config.spacing_over_wavelength)


def synthesize_cascaded(g, H, cascade_gain=1.0, cascade_pl_db=0.0):
    """Cascaded channel (gain / sqrt(PL')) diag(g^H) H."""
    g = np.asarray(g)
    H = np.asarray(H)
    if g.ndim != 1 or H.ndim != 2 or H.shape[0] != g.shape[0]:
        raise ValueError(f"shape mismatch: g {g.shape} vs H {H.shape}")
    scale = complex(cascade_gain) * 10.0 ** (-cascade_pl_db / 20.0)
    return scale * g.conj()[:, None] * H


def sample_ue_positions(config, rng):
    """K points uniform over the disk of radius r around the surface, z = 0."""
    k = config.num_users
    radius = config.ue_sampling_radius * np.sqrt(rng.random(k))
    angle = 2.0 * np.pi * rng.random(k)
    centre = np.asarray(config.ris_position, dtype=float)
    positions = np.zeros((k, 3))
    positions[:, 0] = centre[0] + radius * np.cos(angle)
    positions[:, 1] = centre[1] + radius * np.sin(angle)
    return positions


@dataclass
class ChannelSet:
    """One realisation of every channel in the scenario."""

    h0: np.ndarray  # (M,)      BS -> primary Rx
    h: np.ndarray  # (K, M)     BS -> UE k
    H: np.ndarray  # (N, M)     BS -> surface
    g0: np.ndarray  # (N,)      surface -> primary Rx
    g: np.ndarray  # (K, N)     surface -> UE k
    G0: np.ndarray  # (N, M)    cascaded BS -> surface -> primary Rx
    G: np.ndarray  # (K, N, M)  cascaded BS -> surface -> UE k
    ue_positions: np.ndarray  # (K, 3)

    @property
    def num_users(self):
        return self.h.shape[0]

    @property
    def num_bs_antennas(self):
        return self.h.shape[1]

    @property
    def num_elements(self):
        return self.H.shape[0]

    def scaled(self, factor):
        """Copy with every channel multiplied by a real factor."""
        return ChannelSet(
            h0=self.h0 * factor, h=self.h * factor, H=self.H * factor,
            g0=self.g0 * factor, g=self.g * factor,
            G0=self.G0 * factor, G=self.G * factor,
            ue_positions=self.ue_positions.copy(),
        )

    def restricted_rows(self, rows):
        """Copy keeping only the given surface elements."""
        rows = np.asarray(rows, dtype=int)
        return ChannelSet(
            h0=self.h0.copy(), h=self.h.copy(), H=self.H[rows],
            g0=self.g0[rows], g=self.g[:, rows],
            G0=self.G0[rows], G=self.G[:, rows],
            ue_positions=self.ue_positions.copy(),
        )

    def check_invariants(self, config=None, atol=1e-12):
        """Raise ValueError if shapes, finiteness or geometry are inconsistent."""
        k, m = self.h.shape
        n = self.H.shape[0]
        expected = {"h0": (m,), "H": (n, m), "g0": (n,), "g": (k, n), "G0": (n, m),
                    "G": (k, n, m), "ue_positions": (k, 3)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        for name in ("h0", "h", "H", "g0", "g", "G0", "G"):
            value = getattr(self, name)
            if not np.all(np.isfinite(value)):
                raise ValueError(f"{name} contains non-finite entries")
        for name, value in (("h0", self.h0), ("H", self.H), ("g0", self.g0)):
            if not np.any(value):
                raise ValueError(f"{name} is identically zero")
        if not np.all(np.any(self.h, axis=1)) or not np.all(np.any(self.g, axis=1)):
            raise ValueError("a user channel is identically zero")
        if config is not None:
            centre = np.asarray(config.ris_position)
            offsets = np.linalg.norm(self.ue_positions[:, :2] - centre[:2], axis=1)
            if np.any(offsets > config.ue_sampling_radius + atol) or np.any(self.ue_positions[:, 2] != 0):
                raise ValueError("UE position outside the sampling disk")
        return self


def build_channel_set(config, rng=None, ue_positions=None):
    """
    Draw positions and channels for one trial.

    Draw order is fixed (positions, H, h0, h_k, g0, g_k, cascaded gains) so a
    seed fully determines the realisation. Passing ue_positions keeps the users
    in place; the position draws are still consumed so the gains do not shift.
    """
    if rng is None:
        rng = derive_rng(config.rng_seed, CHANNEL_STREAM)
    sampled = sample_ue_positions(config, rng)
    ue_positions = sampled if ue_positions is None else np.array(ue_positions, dtype=float).reshape(sampled.shape)
    H = synthesize_bs_ris_channel(config, rng)
    h0 = synthesize_direct_channel(config, config.primary_rx_position, rng, source="bs")
    h = np.array([synthesize_direct_channel(config, p, rng, source="bs") for p in ue_positions])
    g0 = synthesize_direct_channel(config, config.primary_rx_position, rng, source="ris")
    g = np.array([synthesize_direct_channel(config, p, rng, source="ris") for p in ue_positions])

    k = config.num_users
    if config.random_cascade_gain:
        gains = complex_gain(rng, size=k + 1)
    else:
        gains = np.ones(k + 1, dtype=complex)
    G0 = synthesize_cascaded(g0, H, gains[0], config.cascade_pathloss_db)
    G = np.array([synthesize_cascaded(g[i], H, gains[i + 1], config.cascade_pathloss_db) for i in range(k)])

    channels = ChannelSet(h0=h0, h=h, H=H, g0=g0, g=g, G0=G0, G=G, ue_positions=ue_positions)
    logger.debug("Built channel set: M=%d N=%d K=%d seed=%d", h.shape[1], H.shape[0], k, config.rng_seed)
    return channels.check_invariants(config)
