"""
Command-line entry point.

    python -m src.cli run --config configs/default_scenario.json --scheme star
    python -m src.cli campaign --sweep-axis gamma_min_db --sweep-values 0 10 20 30 --trials 50
    python -m src.cli validate-config --config configs/blocked_direct_scenario.json

Every SystemConfig field can be overridden with --<field> (e.g. --max_power_dbm 30).
"""

import argparse
import dataclasses
import json
import logging
import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from src.exceptions import ConfigError
from src.simulation.campaign import SCHEMES, SWEEP_AXES, Campaign, emit_convergence_csv, run_campaign, run_single, write_trials_csv
from src.simulation.config import SystemConfig

logger = logging.getLogger("src.cli")


def _parse_bool(text):
    lowered = text.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _add_config_flags(parser):
    group = parser.add_argument_group("configuration overrides")
    for entry in dataclasses.fields(SystemConfig):
        default = entry.default
        options = dict(dest=f"override_{entry.name}", default=argparse.SUPPRESS, help=f"default: {default!r}")
        if isinstance(default, bool):
            options.update(type=_parse_bool, metavar="BOOL")
        elif isinstance(default, tuple):
            options.update(type=float, nargs=3, metavar=("X", "Y", "Z"))
        elif isinstance(default, int):
            options.update(type=int)
        elif isinstance(default, str):
            options.update(type=str)
        else:
            options.update(type=float)
        flags = [f"--{entry.name}"]
        if "_" in entry.name:
            flags.append(f"--{entry.name.replace('_', '-')}")
        group.add_argument(*flags, **options)


def build_parser():
    parser = argparse.ArgumentParser(prog="star-ris-sca",
                                     description="STAR-RIS assisted spectrum sharing: sum-rate optimisation")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON scenario file (defaults apply when omitted)")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    common.add_argument("--quiet", action="store_true", help="hide progress bars")
    _add_config_flags(common)

    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", parents=[common], help="optimise a single trial")
    run.add_argument("--scheme", choices=SCHEMES, default="star")
    run.add_argument("--output-dir", help="write trials.csv and convergence.csv here")

    campaign = subparsers.add_parser("campaign", parents=[common], help="seeded Monte Carlo sweep")
    campaign.add_argument("--sweep-axis", choices=sorted(SWEEP_AXES), default="none")
    campaign.add_argument("--sweep-values", type=float, nargs="+", default=[])
    campaign.add_argument("--trials", type=int, default=50, help="trials per sweep point")
    campaign.add_argument("--schemes", nargs="+", choices=SCHEMES, default=["star", "conventional"])
    campaign.add_argument("--workers", type=int, default=1)
    campaign.add_argument("--master-seed", type=int, help="defaults to the configuration's rng_seed")
    campaign.add_argument("--fixed-positions", action="store_true",
                          help="keep the UE positions of the master seed and re-draw only the gains")
    campaign.add_argument("--output-dir", default="results")
    campaign.add_argument("--plot", action="store_true", help="save convergence and sweep figures")

    subparsers.add_parser("validate-config", parents=[common], help="check a scenario file and print it")
    return parser


def load_config(args):
    config = SystemConfig.from_json_file(args.config) if args.config else SystemConfig()
    prefix = "override_"
    overrides = {key[len(prefix):]: value for key, value in vars(args).items() if key.startswith(prefix)}
    if "penalty_constant" in overrides and overrides["penalty_constant"] <= 0:
        overrides["penalty_constant"] = None
    return config.with_overrides(**overrides) if overrides else config.validate()


def _configure_logging(verbosity):
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _command_run(args, config):
    record = run_single(config, args.scheme)
    if args.output_dir:
        os.makedirs(args.output_dir, exist_ok=True)
        write_trials_csv([record], os.path.join(args.output_dir, "trials.csv"))
        emit_convergence_csv([record], os.path.join(args.output_dir, "convergence.csv"))
    print(json.dumps({**record.to_row(), "wall_time_s": record.wall_time_s, "trace": record.trace}, indent=2))
    return 0


def _command_campaign(args, config):
    campaign = Campaign(
        base_config=config,
        sweep_axis=args.sweep_axis,
        sweep_values=args.sweep_values,
        trials_per_point=args.trials,
        schemes=args.schemes,
        output_dir=args.output_dir,
        master_seed=args.master_seed,
        workers=args.workers,
        show_progress=not args.quiet,
        redraw_positions=not args.fixed_positions,
    )
    outcome = run_campaign(campaign)
    for row in outcome.summary:
        print(f"{row['scheme']:>13} {str(row['swept_value']):>8}: "
              f"{row['mean_spectral_efficiency']:.4f} +/- {row['std_spectral_efficiency']:.4f} bits/s/Hz "
              f"({row['feasible_trials']}/{row['trials']} feasible)")
    if args.plot:
        from src.utils.visualiser import ResultVisualisation

        visualiser = ResultVisualisation(outcome.records, outcome.summary, sweep_axis=args.sweep_axis)
        visualiser.plot_convergence(os.path.join(args.output_dir, "convergence.png"))
        if args.sweep_axis != "none":
            visualiser.plot_sweep(os.path.join(args.output_dir, "sweep.png"))
    print(f"Results written to {args.output_dir}")
    return 0 if outcome.complete else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        config = load_config(args)
        if args.command == "validate-config":
            print(json.dumps(config.to_dict(), indent=2, sort_keys=True))
            print(f"fingerprint: {config.fingerprint()}")
            return 0
        if args.command == "run":
            return _command_run(args, config)
        return _command_campaign(args, config)
    except ConfigError as exc:
        logger.error("%s", exc)
        return 2
    except KeyboardInterrupt:
        logger.error("Interrupted")
        return 130


if __name__ == "__main__":
    sys.exit(main())
