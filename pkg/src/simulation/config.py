"""
Scenario Configuration

Holds every scalar and geometric parameter of a spectrum-sharing scenario,
loads it from JSON scenario files and converts the dB/dBm quantities into the
linear units used by the channel and optimisation code.
"""

import dataclasses
import hashlib
import json
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.exceptions import ConfigError

logger = logging.getLogger(__name__)

# Spawn keys of the independent random streams drawn from one scenario seed
CHANNEL_STREAM = 0
INIT_STREAM = 1
RANDOM_PHASE_STREAM = 2

INNER_MODES = ("full", "single")

Position = Tuple[float, float, float]


def dbm_to_watts(value_dbm):
    return 10.0 ** ((value_dbm - 30.0) / 10.0)


def watts_to_dbm(value_w):
    return 10.0 * math.log10(value_w) + 30.0


def db_to_linear(value_db):
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value):
    """Convert a power ratio to dB; zero maps to -inf."""
    if value <= 0:
        return float("-inf")
    return 10.0 * math.log10(value)


def derive_rng(seed, stream):
    """Return the generator of one named stream derived from a scenario seed."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),)))


@dataclass(frozen=True)
class SystemConfig:
    """
    Scenario parameters.

    Powers and ratios are kept in the units they are configured in (dBm / dB);
    the linear values are available through the read-only properties.
    """

    num_bs_antennas: int = 16
    num_ris_elements: int = 32
    num_users: int = 4
    max_power_dbm: float = 35.0
    min_primary_sinr_db: float = 20.0
    bandwidth_hz: float = 1e6
    carrier_freq_ghz: float = 28.0
    # Noise power spectral density in dBm/Hz, shared by the primary Rx and the UEs
    noise_density_dbm: float = -174.0
    primary_rx_power_dbm: float = -50.0
    # None selects 10 * B * K / ln 2
    penalty_constant: Optional[float] = None
    bs_position: Position = (0.0, 25.0, 0.0)
    ris_position: Position = (50.0, 0.0, 0.0)
    primary_rx_position: Position = (60.0, 5.0, 0.0)
    ue_sampling_radius: float = 5.0
    pathloss_exponent_los: float = 2.0
    pathloss_exponent_nlos: float = 5.0
    sca_tolerance: float = 1e-4
    solver_tolerance: float = 1e-6
    max_outer_iterations: int = 20
    rng_seed: int = 0

    spacing_over_wavelength: float = 0.5
    direct_link_blocked: bool = False
    random_cascade_gain: bool = False
    cascade_pathloss_db: float = 0.0
    penalty_growth: float = 5.0
    penalty_growth_interval: int = 3
    penalty_cap_ratio: float = 1e6
    max_inner_iterations: int = 15
    inner_tolerance: float = 1e-4
    inner_mode: str = "full"
    initial_power_fraction: float = 0.9

    def __post_init__(self):
        for name in ("bs_position", "ris_position", "primary_rx_position"):
            value = getattr(self, name)
            object.__setattr__(self, name, tuple(float(v) for v in value))

    # ------------------------------------------------------------------ units

    @property
    def max_power(self):
        """P_max in watts."""
        return dbm_to_watts(self.max_power_dbm)

    @property
    def min_primary_sinr(self):
        """gamma_min as a linear ratio."""
        return db_to_linear(self.min_primary_sinr_db)

    @property
    def noise_power(self):
        """sigma^2 in watts: noise density integrated over the bandwidth."""
        return dbm_to_watts(self.noise_density_dbm + 10.0 * math.log10(self.bandwidth_hz))

    @property
    def noise_power_dbm(self):
        return self.noise_density_dbm + 10.0 * math.log10(self.bandwidth_hz)

    @property
    def primary_rx_power(self):
        """P_Rx in watts."""
        return dbm_to_watts(self.primary_rx_power_dbm)

    @property
    def interference_budget(self):
        """Largest secondary interference (watts) the primary Rx tolerates."""
        return self.primary_rx_power / self.min_primary_sinr - self.noise_power

    @property
    def effective_penalty_constant(self):
        if self.penalty_constant is not None:
            return float(self.penalty_constant)
        return 10.0 * self.bandwidth_hz * self.num_users / math.log(2.0)

    # ------------------------------------------------------------- validation

    def validate(self):
        """Raise ConfigError if any scenario invariant is violated."""
        m, n, k = self.num_bs_antennas, self.num_ris_elements, self.num_users
        for name in ("num_bs_antennas", "num_ris_elements", "num_users", "max_outer_iterations",
                     "max_inner_iterations", "penalty_growth_interval", "rng_seed"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ConfigError(f"{name} must be an integer, got {value!r}")
        if not m >= k >= 1:
            raise ConfigError(f"need num_bs_antennas >= num_users >= 1, got M={m}, K={k}")
        if n < 2 or n % 2:
            raise ConfigError(f"num_ris_elements must be even and >= 2, got {n}")
        if self.bandwidth_hz <= 0:
            raise ConfigError(f"bandwidth_hz must be positive, got {self.bandwidth_hz}")
        if self.carrier_freq_ghz <= 0:
            raise ConfigError(f"carrier_freq_ghz must be positive, got {self.carrier_freq_ghz}")
        if self.penalty_constant is not None and self.penalty_constant <= 0:
            raise ConfigError(f"penalty_constant must be positive, got {self.penalty_constant}")
        if self.ue_sampling_radius <= 0:
            raise ConfigError(f"ue_sampling_radius must be positive, got {self.ue_sampling_radius}")
        if self.spacing_over_wavelength <= 0:
            raise ConfigError("spacing_over_wavelength must be positive")
        for name in ("sca_tolerance", "solver_tolerance", "inner_tolerance"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.max_outer_iterations < 1 or self.max_inner_iterations < 1:
            raise ConfigError("iteration caps must be at least 1")
        if self.penalty_growth < 1 or self.penalty_cap_ratio < 1 or self.penalty_growth_interval < 1:
            raise ConfigError("penalty schedule must be non-shrinking")
        if self.inner_mode not in INNER_MODES:
            raise ConfigError(f"inner_mode must be one of {INNER_MODES}, got {self.inner_mode!r}")
        if not 0 < self.initial_power_fraction <= 1:
            raise ConfigError("initial_power_fraction must lie in (0, 1]")
        if self.rng_seed < 0 or self.rng_seed >= 2 ** 64:
            raise ConfigError(f"rng_seed must be a 64-bit unsigned integer, got {self.rng_seed}")
        for name in ("bs_position", "ris_position", "primary_rx_position"):
            value = getattr(self, name)
            if len(value) != 3 or not all(math.isfinite(v) for v in value):
                raise ConfigError(f"{name} must be a finite 3-vector, got {value!r}")
        scalars = (self.max_power_dbm, self.min_primary_sinr_db, self.noise_density_dbm,
                   self.primary_rx_power_dbm, self.pathloss_exponent_los, self.pathloss_exponent_nlos,
                   self.cascade_pathloss_db)
        if not all(math.isfinite(v) for v in scalars):
            raise ConfigError("dB-valued fields and pathloss exponents must be finite")
        return self

    # ------------------------------------------------------- (de)serialisation

    @classmethod
    def field_names(cls):
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_dict(cls, data):
        unknown = sorted(set(data) - set(cls.field_names()))
        if unknown:
            raise ConfigError(f"Unknown configuration keys: {unknown}")
        try:
            config = cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"Invalid configuration: {exc}") from exc
        return config.validate()

    @classmethod
    def from_json_file(cls, path):
        try:
            with open(path, "r") as handle:
                data = json.load(handle)
        except FileNotFoundError as exc:
            raise ConfigError(f"Scenario file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"Scenario file {path} is not valid JSON: {exc}") from exc
        logger.debug("Loaded scenario file %s", path)
        return cls.from_dict(data)

    def to_dict(self):
        data = dataclasses.asdict(self)
        for name in ("bs_position", "ris_position", "primary_rx_position"):
            data[name] = list(data[name])
        return data

    def to_json_file(self, path):
        with open(path, "w") as handle:
            json.dump(self.to_dict(), handle, indent=2, sort_keys=True)

    def with_overrides(self, **changes):
        unknown = sorted(set(changes) - set(self.field_names()))
        if unknown:
            raise ConfigError(f"Unknown configuration keys: {unknown}")
        return dataclasses.replace(self, **changes).validate()

    def fingerprint(self):
        """SHA-256 of the canonical JSON form; identifies a scenario in manifests."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
