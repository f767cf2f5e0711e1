"""
Comparison Schemes

The conventional baseline replaces the STAR-RIS by a reflect-only surface next
to a transmit-only surface, each with half of the elements and unit-modulus
responses. It reuses the alternating SCA machinery with a split surface layout:
the first N/2 elements carry only a reflection coefficient and the last N/2 only
a transmission coefficient, with both halves sharing the co-located channels.

The random-phase reference keeps its initial equal-split profile and optimises
only the beamformer.
"""

import logging
from dataclasses import dataclass

import numpy as np

from src.analysis.system_model import StarRisProfile, SurfaceLayout
from src.exceptions import ConfigError
from src.optimisation.sca_optimiser import alternate, initialize
from src.simulation.config import RANDOM_PHASE_STREAM, derive_rng

logger = logging.getLogger(__name__)

UNIT_MODULUS_TOLERANCE = 1e-9


@dataclass
class SplitRisProfile:
    """Reflect-only responses psi_r and transmit-only responses psi_t, N/2 each."""

    psi_r: np.ndarray
    psi_t: np.ndarray

    @classmethod
    def from_phases(cls, theta_r, theta_t):
        return cls(np.exp(1j * np.asarray(theta_r, dtype=float)), np.exp(1j * np.asarray(theta_t, dtype=float)))

    @classmethod
    def from_star_profile(cls, profile, layout=None):
        layout = layout or SurfaceLayout.split(profile.num_elements)
        return cls(profile.phi_r[list(layout.reflect_support)].copy(),
                   profile.phi_t[list(layout.transmit_support)].copy())

    def to_star_profile(self):
        """Equivalent N-element profile with zeros on the unsupported coefficients."""
        zeros_r = np.zeros(self.psi_t.size, dtype=complex)
        zeros_t = np.zeros(self.psi_r.size, dtype=complex)
        return StarRisProfile(np.concatenate([zeros_t, self.psi_t]), np.concatenate([self.psi_r, zeros_r]))

    def max_modulus_error(self):
        moduli = np.abs(np.concatenate([self.psi_r, self.psi_t]))
        return float(np.max(np.abs(moduli - 1.0)))

    def is_unit_modulus(self, tolerance=UNIT_MODULUS_TOLERANCE):
        return self.max_modulus_error() <= tolerance


def optimize_conventional(channels, config, rng=None):
    """Alternating optimisation of the split reflect-only / transmit-only surface."""
    n = channels.num_elements
    if n % 2:
        raise ConfigError(f"the conventional baseline needs an even element count, got {n}")
    layout = SurfaceLayout.split(n)
    result = alternate(channels, config, layout=layout, rng=rng, scheme="conventional")
    split = SplitRisProfile.from_star_profile(result.final_profile, layout)
    logger.debug("Conventional surface modulus error %.3e", split.max_modulus_error())
    return result


def optimize_random_phase(channels, config, rng=None):
    """Beamforming-only optimisation around a random equal-split surface profile."""
    rng = derive_rng(config.rng_seed, RANDOM_PHASE_STREAM) if rng is None else rng
    initial = initialize(config, channels, rng)
    return alternate(channels, config, optimise_surface=False, scheme="random_phase", initial=initial)
