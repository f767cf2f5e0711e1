"""
Monte Carlo Campaigns

Runs seeded trials of the optimisation schemes over a parameter sweep and
writes the per-trial table, the per-point summary, the convergence traces and a
JSON manifest. Every numeric output is determined by the master seed and the
campaign description; wall-clock timings only go to the manifest.
"""

import csv
import json
import logging
import math
import os
import platform
import time
from dataclasses import dataclass, field
from multiprocessing import Pool

import numpy as np
import scipy
from tqdm import tqdm

import src
from src.exceptions import ConfigError, StarRisError
from src.optimisation.baseline import optimize_conventional, optimize_random_phase
from src.optimisation.sca_optimiser import alternate
from src.simulation.channel import build_channel_set, sample_ue_positions
from src.simulation.config import CHANNEL_STREAM, derive_rng, linear_to_db, watts_to_dbm

logger = logging.getLogger(__name__)

SCHEMES = ("star", "conventional", "random_phase")

# sweep axis -> SystemConfig field
SWEEP_AXES = {
    "none": None,
    "p_max_dbm": "max_power_dbm",
    "num_elements": "num_ris_elements",
    "gamma_min_db": "min_primary_sinr_db",
}

TRIAL_COLUMNS = (
    "scheme", "trial_index", "seed", "swept_value", "final_spectral_efficiency", "primary_sinr_db",
    "transmit_power_dbm", "max_energy_residual", "iterations", "feasible", "status",
)
SUMMARY_COLUMNS = (
    "scheme", "swept_value", "trials", "feasible_trials", "mean_spectral_efficiency",
    "std_spectral_efficiency", "mean_primary_sinr_db", "mean_iterations",
)
CONVERGENCE_COLUMNS = ("scheme", "seed", "swept_value", "iteration", "spectral_efficiency")
CONVERGENCE_HEADER_COMMENT = (
    "# columns: scheme=optimised scheme; seed=trial seed; swept_value=value of the swept parameter "
    "(empty without a sweep); iteration=1-based outer iteration; spectral_efficiency=bits/s/Hz"
)


def format_value(value):
    """Exact text form used in every CSV: repr for floats, empty for None."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def parse_value(text):
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


@dataclass
class TrialRecord:
    scheme: str
    seed: int
    swept_value: object
    final_spectral_efficiency: float
    primary_sinr_db: float
    iterations: int
    wall_time_s: float
    feasible: bool
    trace: list = field(default_factory=list)
    status: str = "converged"
    trial_index: int = 0
    transmit_power_dbm: float = float("nan")
    max_energy_residual: float = float("nan")

    def to_row(self):
        return {name: format_value(getattr(self, name)) for name in TRIAL_COLUMNS}

    @classmethod
    def from_row(cls, row):
        values = {name: parse_value(row[name]) for name in TRIAL_COLUMNS}
        for name in ("final_spectral_efficiency", "primary_sinr_db", "transmit_power_dbm", "max_energy_residual"):
            values[name] = float(values[name]) if values[name] is not None else float("nan")
        return cls(wall_time_s=float("nan"), **values)


def run_scheme(channels, config, scheme):
    """Dispatch one optimisation scheme on a channel realisation."""
    if scheme == "star":
        return alternate(channels, config)
    if scheme == "conventional":
        return optimize_conventional(channels, config)
    if scheme == "random_phase":
        return optimize_random_phase(channels, config)
    raise ConfigError(f"Unknown scheme {scheme!r}; expected one of {SCHEMES}")


def run_single(config, scheme, swept_value=None, trial_index=0, channels=None):
    """
    Run one trial. Optimiser and configuration errors are recorded in the
    returned record's status instead of being raised.
    """
    start = time.perf_counter()
    try:
        channels = build_channel_set(config) if channels is None else channels
        result = run_scheme(channels, config, scheme)
    except StarRisError as exc:
        logger.warning("Trial %s/%d (seed %d) failed: %s", scheme, trial_index, config.rng_seed, exc)
        return TrialRecord(scheme=scheme, seed=config.rng_seed, swept_value=swept_value,
                           final_spectral_efficiency=float("nan"), primary_sinr_db=float("nan"),
                           iterations=0, wall_time_s=time.perf_counter() - start, feasible=False,
                           status="error", trial_index=trial_index)
    metrics = result.final_metrics
    return TrialRecord(
        scheme=scheme,
        seed=config.rng_seed,
        swept_value=swept_value,
        final_spectral_efficiency=float(metrics.spectral_efficiency),
        primary_sinr_db=linear_to_db(metrics.primary_sinr),
        iterations=result.outer_iterations,
        wall_time_s=time.perf_counter() - start,
        feasible=result.feasibility.feasible,
        trace=[float(value) for value in result.objective_trace],
        status=result.status,
        trial_index=trial_index,
        transmit_power_dbm=watts_to_dbm(metrics.transmit_power) if metrics.transmit_power > 0 else float("-inf"),
        max_energy_residual=float(np.max(np.abs(result.feasibility.energy_residuals))),
    )


@dataclass
class TrialTask:
    config: object
    scheme: str
    swept_value: object
    trial_index: int
    ue_positions: object = None


def _run_task(task):
    """Worker entry point; returns None when the trial could not produce a record."""
    try:
        channels = None
        if task.ue_positions is not None:
            channels = build_channel_set(task.config, ue_positions=task.ue_positions)
        return run_single(task.config, task.scheme, task.swept_value, task.trial_index, channels)
    except Exception:
        logger.exception("Trial %s/%d crashed", task.scheme, task.trial_index)
        return None


@dataclass
class Campaign:
    """
    A sweep of one configuration axis with seeded trials per point. Schemes run
    on the same seed at the same point share their channel realisation.
    """

    base_config: object
    sweep_axis: str = "none"
    sweep_values: list = field(default_factory=list)
    trials_per_point: int = 50
    schemes: tuple = ("star", "conventional")
    output_dir: str = "results"
    master_seed: int = None
    workers: int = 1
    show_progress: bool = True
    # False keeps the UE positions of the master seed and re-draws only the gains
    redraw_positions: bool = True

    def __post_init__(self):
        if self.master_seed is None:
            self.master_seed = self.base_config.rng_seed
        self.schemes = tuple(self.schemes)
        self.sweep_values = list(self.sweep_values)

    def validate(self):
        if self.sweep_axis not in SWEEP_AXES:
            raise ConfigError(f"Unknown sweep axis {self.sweep_axis!r}; expected one of {sorted(SWEEP_AXES)}")
        if self.sweep_axis != "none" and not self.sweep_values:
            raise ConfigError(f"sweep axis {self.sweep_axis!r} needs at least one value")
        if self.trials_per_point < 1:
            raise ConfigError(f"trials_per_point must be at least 1, got {self.trials_per_point}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        if not self.schemes:
            raise ConfigError("a campaign needs at least one scheme")
        unknown = sorted(set(self.schemes) - set(SCHEMES))
        if unknown:
            raise ConfigError(f"Unknown schemes {unknown}; expected a subset of {SCHEMES}")
        self.points()
        return self

    def points(self):
        """(swept value, validated config) per sweep point."""
        key = SWEEP_AXES[self.sweep_axis]
        if key is None:
            return [(None, self.base_config.validate())]
        points = []
        for value in self.sweep_values:
            if key == "num_ris_elements":
                if float(value) != int(value):
                    raise ConfigError(f"num_elements sweep values must be integers, got {value!r}")
                value = int(value)
            else:
                value = float(value)
            points.append((value, self.base_config.with_overrides(**{key: value})))
        return points

    def trial_seeds(self):
        """Per-trial seeds derived from (master seed, trial index)."""
        return [int(np.random.SeedSequence([int(self.master_seed), index]).generate_state(1, np.uint64)[0])
                for index in range(self.trials_per_point)]

    def tasks(self):
        seeds = self.trial_seeds()
        tasks = []
        for value, config in self.points():
            positions = None
            if not self.redraw_positions:
                positions = sample_ue_positions(config, derive_rng(self.master_seed, CHANNEL_STREAM))
            for index, seed in enumerate(seeds):
                trial_config = config.with_overrides(rng_seed=seed)
                for scheme in self.schemes:
                    tasks.append(TrialTask(trial_config, scheme, value, index, positions))
        return tasks


@dataclass
class CampaignOutcome:
    records: list
    summary: list
    expected_records: int
    paths: dict
    interrupted: bool = False

    @property
    def complete(self):
        return not self.interrupted and len(self.records) == self.expected_records


def _execute(tasks, workers, show_progress):
    """Yield results in task order, inline or from a process pool."""
    progress = dict(total=len(tasks), disable=not show_progress, desc="trials", unit="trial")
    if workers == 1 or len(tasks) <= 1:
        for task in tqdm(tasks, **progress):
            yield _run_task(task)
        return
    pool = Pool(processes=min(workers, len(tasks)))
    try:
        for record in tqdm(pool.imap(_run_task, tasks), **progress):
            yield record
        pool.close()
    except BaseException:
        pool.terminate()
        raise
    finally:
        pool.join()


def summarise(records, schemes, swept_values):
    """Mean/std of the final spectral efficiency per (scheme, swept value)."""
    rows = []
    for value in swept_values:
        for scheme in schemes:
            group = [r for r in records if r.scheme == scheme and r.swept_value == value]
            finite = [r for r in group if math.isfinite(r.final_spectral_efficiency)]
            efficiencies = np.array([r.final_spectral_efficiency for r in finite])
            sinrs = np.array([r.primary_sinr_db for r in finite])
            rows.append({
                "scheme": scheme,
                "swept_value": value,
                "trials": len(group),
                "feasible_trials": sum(1 for r in group if r.feasible),
                "mean_spectral_efficiency": float(np.mean(efficiencies)) if finite else float("nan"),
                "std_spectral_efficiency": float(np.std(efficiencies, ddof=1)) if len(finite) > 1 else 0.0,
                "mean_primary_sinr_db": float(np.mean(sinrs)) if finite else float("nan"),
                "mean_iterations": float(np.mean([r.iterations for r in group])) if group else float("nan"),
            })
    return rows


def _open_for_write(path):
    try:
        return open(path, "w", newline="")
    except OSError as exc:
        raise OSError(f"Cannot write {path}: {exc}") from exc


def write_trials_csv(records, path):
    with _open_for_write(path) as handle:
        writer = csv.DictWriter(handle, fieldnames=TRIAL_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for record in records:
            writer.writerow(record.to_row())
    return path


def read_trials_csv(path):
    """Parse a trials table back into TrialRecords (traces and timings are not stored there)."""
    try:
        with open(path, "r", newline="") as handle:
            return [TrialRecord.from_row(row) for row in csv.DictReader(handle)]
    except OSError as exc:
        raise OSError(f"Cannot read {path}: {exc}") from exc


def write_summary_csv(rows, path):
    with _open_for_write(path) as handle:
        writer = csv.DictWriter(handle, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({name: format_value(row[name]) for name in SUMMARY_COLUMNS})
    return path


def emit_convergence_csv(records, path):
    """One row per (scheme, seed, swept value, iteration), after a comment line naming the columns."""
    with _open_for_write(path) as handle:
        handle.write(CONVERGENCE_HEADER_COMMENT + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CONVERGENCE_COLUMNS)
        for record in records:
            for iteration, value in enumerate(record.trace, start=1):
                writer.writerow([record.scheme, format_value(record.seed), format_value(record.swept_value),
                                 iteration, format_value(value)])
    return path


def read_convergence_csv(path):
    """Traces keyed by (scheme, seed, swept value), in iteration order."""
    traces = {}
    try:
        with open(path, "r", newline="") as handle:
            lines = [line for line in handle if not line.startswith("#")]
    except OSError as exc:
        raise OSError(f"Cannot read {path}: {exc}") from exc
    for row in csv.DictReader(lines):
        key = (row["scheme"], int(row["seed"]), parse_value(row["swept_value"]))
        traces.setdefault(key, []).append((int(row["iteration"]), float(row["spectral_efficiency"])))
    return {key: [value for _, value in sorted(rows)] for key, rows in traces.items()}


def write_manifest(campaign, records, expected, wall_time, interrupted, path):
    manifest = {
        "config_fingerprint": campaign.base_config.fingerprint(),
        "base_config": campaign.base_config.to_dict(),
        "sweep_axis": campaign.sweep_axis,
        "sweep_values": campaign.sweep_values,
        "trials_per_point": campaign.trials_per_point,
        "schemes": list(campaign.schemes),
        "master_seed": int(campaign.master_seed),
        "trial_seeds": campaign.trial_seeds(),
        "redraw_positions": campaign.redraw_positions,
        "records_written": len(records),
        "expected_records": expected,
        "interrupted": interrupted,
        "versions": {
            "package": src.__version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "timings": {
            "total_wall_time_s": wall_time,
            "trial_wall_time_s": [r.wall_time_s for r in records],
        },
    }
    with _open_for_write(path) as handle:
        json.dump(manifest, handle, indent=2)
    return path


def run_campaign(campaign):
    """
    Run every trial of a campaign and write trials.csv, summary.csv,
    convergence.csv and manifest.json into the output directory. Files are
    written even when the run is interrupted; the interruption is then re-raised.
    """
    campaign.validate()
    os.makedirs(campaign.output_dir, exist_ok=True)
    tasks = campaign.tasks()
    swept_values = [value for value, _ in campaign.points()]
    logger.info("Campaign: %d trials (%d points x %d seeds x %d schemes)", len(tasks), len(swept_values),
                campaign.trials_per_point, len(campaign.schemes))

    records, interrupted = [], False
    start = time.perf_counter()
    try:
        for record in _execute(tasks, campaign.workers, campaign.show_progress):
            if record is not None:
                records.append(record)
    except KeyboardInterrupt:
        interrupted = True
        logger.warning("Campaign interrupted after %d of %d trials; writing partial results",
                       len(records), len(tasks))
    wall_time = time.perf_counter() - start

    summary = summarise(records, campaign.schemes, swept_values)
    directory = campaign.output_dir
    paths = {
        "trials": write_trials_csv(records, os.path.join(directory, "trials.csv")),
        "summary": write_summary_csv(summary, os.path.join(directory, "summary.csv")),
        "convergence": emit_convergence_csv(records, os.path.join(directory, "convergence.csv")),
        "manifest": write_manifest(campaign, records, len(tasks), wall_time, interrupted,
                                   os.path.join(directory, "manifest.json")),
    }
    if interrupted:
        raise KeyboardInterrupt
    return CampaignOutcome(records, summary, len(tasks), paths, interrupted)
