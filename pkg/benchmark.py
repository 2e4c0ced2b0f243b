import os
import pstats
import cProfile
import argparse
import tempfile
from contextlib import contextmanager

import pandas as pd
from tqdm import tqdm

from bandwidth_market.artifacts import adjacency_means, correlation_pairs, write_run
from bandwidth_market.config import load_config
from bandwidth_market.estimate import correlation_matrix, estimate_series
from bandwidth_market.sde import NoiseKind
from bandwidth_market.series import read_price_csv
from bandwidth_market.simulator import run as run_simulation
from bandwidth_market.sweep import SweepSpec, run_cell, summarize_sweep


@contextmanager
def profiling(run_name: str, outdir: str = "benchmark"):
    """A context manager that profiles enclosed code using cProfile.Profile,
    outputting results to the specified output director (defaults to "benchmark/").
    """
    if not os.path.isdir(outdir):
        os.mkdir(outdir)

    profiler = cProfile.Profile()
    profiler.enable()
    exception = None
    try:
        print(f"Running step '{run_name}'")
        yield
    except Exception as e:
        exception = e
    finally:
        profiler.disable()
        filename = os.path.join(outdir, f"{run_name}.profile.txt")
        with open(filename, "w") as outfile:
            outfile.write(f"[profiler output for '{run_name}']\n\n")
            ps = pstats.Stats(profiler, stream=outfile).sort_stats("time")
            ps.print_stats()
        print(f"Wrote profiler results to {filename}")
        if exception:
            raise exception


def estimate_run(liquidity: float, seed: int, steps: int, workdir: str):
    """Simulate one run and fit the multiplicative model to every router's prices."""
    config = load_config(seed=seed, L=steps, **{"lambda": liquidity})
    run_dir = os.path.join(workdir, f"lambda_{liquidity:g}_seed_{seed}")
    log = run_simulation(config)
    write_run(log, run_dir)

    reports = []
    for series in read_price_csv(os.path.join(run_dir, "prices.csv")):
        try:
            reports.append(estimate_series(series, NoiseKind.MULTIPLICATIVE))
        except (ValueError, RuntimeError) as e:
            print(f"  {series.label}: {e}")
    return config, reports


def run(seeds: int, steps: int, outdir: str):
    """Run and profile a default simulation, a calibration pass and a small sweep."""
    base = load_config()

    with profiling("1_simulate_default_run", outdir):
        run_simulation(base)

    workdir = tempfile.mkdtemp(prefix="bandwidth_market_")
    with profiling("2_estimate_deep_and_shallow_markets", outdir):
        rows = []
        for seed in tqdm(range(1, seeds + 1)):
            for liquidity in (10.0, 100.0):
                config, reports = estimate_run(liquidity, seed, steps, workdir)
                row = {"seed": seed, "lambda": liquidity}
                row["mean_ks_distance"] = sum(
                    r.normality.ks_distance for r in reports
                ) / max(1, len(reports))
                if len(reports) >= 2:
                    labels = [r.label for r in reports]
                    rho = correlation_matrix([r.residuals for r in reports])
                    pairs = correlation_pairs(rho, labels, config.topology)
                    row.update(adjacency_means(pairs))
                rows.append(row)
        print(pd.DataFrame(rows).to_string(index=False))

    with profiling("3_sweep_liquidity_and_budget", outdir):
        spec = SweepSpec(
            (1.0, 10.0, 100.0), (1.0, 4.0, 16.0, 64.0), tuple(range(1, seeds + 1))
        )
        # tqdm gives us a stdout progress indicator as the grid is worked through
        cells = tqdm(spec.cells())
        df = pd.DataFrame([run_cell(base, cell) for cell in cells])
        print(summarize_sweep(df).to_string(index=False))


if __name__ == "__main__":
    parser = argparse.ArgumentParser(
        description="Run and profile a typical simulation and calibration workload."
    )
    parser.add_argument(
        "--seeds", type=int, default=3, help="number of seeds per configuration"
    )
    parser.add_argument(
        "--steps", type=int, default=5000, help="time steps of the calibration runs"
    )
    parser.add_argument(
        "--out-dir",
        required=False,
        help="root directory to write profile info to",
        default="benchmark",
    )
    args = parser.parse_args()

    run(args.seeds, args.steps, args.out_dir)
