import os
import sys
import logging
import argparse
from typing import List, Optional

from .config import ConfigError, config_from_manifest, load_config
from .artifacts import write_estimation, write_run
from .estimate import EstimationError, correlation_matrix, estimate_series
from .constants import DEFAULT_DECAY_GUARD, DEFAULT_HISTOGRAM_BINS, DEFAULT_MAX_DECAY_FIT_LAG
from .sde import NoiseKind
from .series import SeriesError, read_price_csv
from .simulator import run
from .sweep import load_sweep, run_sweep, summarize_sweep
from .topology import TopologyError, default_topology, load_topology_file

logger = logging.getLogger("bandwidth_market.cli")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILED = 2

MODELS = {"ou": NoiseKind.ADDITIVE, "mn": NoiseKind.MULTIPLICATIVE}


class EstimateFailure(RuntimeError):
    pass


def main(argv: Optional[List[str]] = None) -> int:
    args = interface(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except (ConfigError, TopologyError, SeriesError, OSError) as e:
        logger.error(str(e))
        return EXIT_INVALID
    except Exception as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_FAILED
    return EXIT_OK


def interface(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="bandwidth_market",
        description="Simulate a bandwidth market and calibrate price models to its output.",
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="Log per-step detail"
    )
    subparsers = parser.add_subparsers()

    # Print out usage if no subcommands provided
    parser.set_defaults(func=lambda _: parser.print_usage(None))

    # Parser for a single simulation run
    run_parser = subparsers.add_parser(
        "run", help="Run one simulation and write its prices, demands and manifest"
    )
    source = run_parser.add_mutually_exclusive_group()
    source.add_argument(
        "-c", "--config", help="Path to a yaml simulation config (default parameters if omitted)"
    )
    source.add_argument(
        "-m", "--manifest", help="Path to the manifest of an earlier run to regenerate"
    )
    run_parser.add_argument("-s", "--seed", type=int, help="Random seed (overrides the config)")
    run_parser.add_argument(
        "-d", "--out_dir", help="Directory to write the run artifacts to", required=True
    )
    run_parser.set_defaults(func=cmd_run)

    # Parser for a parameter sweep
    sweep_parser = subparsers.add_parser(
        "sweep", help="Run a liquidity x budget x seed grid and aggregate efficiency metrics"
    )
    sweep_parser.add_argument("-f", "--sweep_file", help="Path to a yaml sweep document")
    sweep_parser.add_argument(
        "-c", "--config", help="Path to the base simulation config (overrides the sweep file)"
    )
    sweep_parser.add_argument("--lambda", dest="liquidity", type=float, nargs="+")
    sweep_parser.add_argument("--c_max", type=float, nargs="+")
    sweep_parser.add_argument("--seeds", type=int, nargs="+")
    sweep_parser.add_argument(
        "-w", "--workers", type=int, help="Worker processes (1 runs in this process)"
    )
    sweep_parser.add_argument(
        "-o", "--out_file", help="Where to write the aggregated CSV", required=True
    )
    sweep_parser.set_defaults(func=cmd_sweep)

    # Parser for model calibration
    estimate_parser = subparsers.add_parser(
        "estimate", help="Fit a mean-reverting model to every column of a price CSV"
    )
    estimate_parser.add_argument(
        "-p", "--prices", help="Path to a price CSV with a t column", required=True
    )
    estimate_parser.add_argument(
        "--model", choices=sorted(MODELS), default="mn", help="Noise model to fit"
    )
    estimate_parser.add_argument("--bins", type=int, default=DEFAULT_HISTOGRAM_BINS)
    estimate_parser.add_argument("--k_max", type=int, default=DEFAULT_MAX_DECAY_FIT_LAG)
    estimate_parser.add_argument(
        "--k_fit", type=int, help="Decay fit window (chosen from the data if omitted)"
    )
    estimate_parser.add_argument("--guard", type=float, default=DEFAULT_DECAY_GUARD)
    estimate_parser.add_argument(
        "--dt", type=float, help="Time step (inferred from the t column if omitted)"
    )
    estimate_parser.add_argument(
        "-t",
        "--topology",
        help="Topology used to mark adjacent routers: 'default' or an edge-list path "
        "(defaults to topology.txt next to the price CSV, if present)",
    )
    estimate_parser.add_argument(
        "-d", "--out_dir", help="Directory to write the reports to", required=True
    )
    estimate_parser.set_defaults(func=cmd_estimate)

    return parser.parse_args(argv)


def cmd_run(args: argparse.Namespace):
    if args.manifest:
        config = config_from_manifest(args.manifest)
        if args.seed is not None:
            config = config._replace(seed=args.seed)
    else:
        config = load_config(args.config, seed=args.seed)

    log = run(config)
    write_run(log, args.out_dir)


def cmd_sweep(args: argparse.Namespace):
    spec = load_sweep(args.sweep_file, args.liquidity, args.c_max, args.seeds)
    config_path = os.path.abspath(args.config) if args.config else spec.config_path
    base = load_config(config_path)

    df = run_sweep(spec, base, workers=args.workers)
    out_dir = os.path.dirname(os.path.abspath(args.out_file))
    os.makedirs(out_dir, exist_ok=True)
    df.to_csv(args.out_file, index=False, float_format="%.12g")

    for _, row in summarize_sweep(df).iterrows():
        logger.info(
            f"lambda={row['lambda']:g} C_max={row['C_max']:g}: "
            f"success ratio {row['success_ratio']:.3f}, profit {row['avg_profit']:.2f}"
        )


def _estimate_topology(args: argparse.Namespace):
    if args.topology == "default":
        return default_topology()
    if args.topology:
        return load_topology_file(args.topology)

    sibling = os.path.join(os.path.dirname(os.path.abspath(args.prices)), "topology.txt")
    return load_topology_file(sibling) if os.path.exists(sibling) else None


def cmd_estimate(args: argparse.Namespace):
    series_list = read_price_csv(args.prices, dt=args.dt)
    topology = _estimate_topology(args)
    model = MODELS[args.model]

    reports, failures = [], {}
    for series in series_list:
        try:
            reports.append(
                estimate_series(
                    series,
                    model,
                    n_bins=args.bins,
                    k_max=args.k_max,
                    guard=args.guard,
                    k_fit=args.k_fit,
                )
            )
        except (ValueError, RuntimeError) as e:
            logger.warning(f"{series.label}: {e}")
            failures[series.label] = str(e)

    rho = None
    if len(reports) >= 2:
        try:
            rho = correlation_matrix([r.residuals for r in reports])
        except EstimationError as e:
            logger.warning(f"residual correlation: {e}")

    write_estimation(reports, failures, rho, args.out_dir, topology)
    if not reports:
        raise EstimateFailure(f"all {len(series_list)} columns failed to estimate")


if __name__ == "__main__":
    sys.exit(main())
