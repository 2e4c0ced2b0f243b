# -*- coding: utf-8 -*-

"""Parameter sweeps: independent runs over a liquidity × budget × seed grid."""

import os
import functools
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .config import SimulationConfig, load_config, load_yaml
from .constants import SWEEP_SCHEMA
from .json_validation import validate_document
from .metrics import efficiency_report
from .simulator import run

logger = logging.getLogger("bandwidth_market.sweep")

KEY_COLUMNS = ["lambda", "C_max", "seed"]
METRIC_COLUMNS = [
    "success_ratio",
    "avg_profit",
    "avg_profit_per_demand",
    "demands",
    "satisfied",
    "trades",
    "bids",
    "quote_updates",
    "updates_per_trade",
]
SWEEP_COLUMNS = KEY_COLUMNS + METRIC_COLUMNS + ["status", "error"]


class SweepCell(NamedTuple):
    liquidity: float
    C_max: float
    seed: int


class SweepSpec(NamedTuple):
    liquidity: Tuple[float, ...]
    C_max: Tuple[float, ...]
    seeds: Tuple[int, ...]
    config_path: Optional[str] = None

    def cells(self) -> List[SweepCell]:
        return [
            SweepCell(float(lam), float(c_max), int(seed))
            for lam, c_max, seed in itertools.product(
                sorted(self.liquidity), sorted(self.C_max), sorted(self.seeds)
            )
        ]


def load_sweep(
    path: Optional[str] = None,
    liquidity: Optional[Sequence[float]] = None,
    C_max: Optional[Sequence[float]] = None,
    seeds: Optional[Sequence[int]] = None,
) -> SweepSpec:
    """
    Build a `SweepSpec` from a YAML sweep document and/or explicit lists; the
    lists take precedence. A relative base config path resolves against the
    sweep file's directory.

    Raises:
        ConfigError naming the offending field
    """
    doc = load_yaml(path) if path else {}
    if isinstance(doc, dict):
        doc = dict(doc)
        for field, values in (("lambda", liquidity), ("C_max", C_max), ("seeds", seeds)):
            if values is not None:
                doc[field] = list(values)
    validate_document(doc, SWEEP_SCHEMA)

    config_path = doc.get("config")
    if config_path and path and not os.path.isabs(config_path):
        config_path = os.path.join(os.path.dirname(os.path.abspath(path)), config_path)

    return SweepSpec(
        liquidity=tuple(doc["lambda"]),
        C_max=tuple(doc["C_max"]),
        seeds=tuple(doc["seeds"]),
        config_path=config_path,
    )


def cell_config(base: SimulationConfig, cell: SweepCell) -> SimulationConfig:
    return base.with_liquidity(cell.liquidity)._replace(C_max=cell.C_max, seed=cell.seed)


def run_cell(base: SimulationConfig, cell: SweepCell) -> dict:
    """Run one grid cell. Failures are recorded in the row rather than raised."""
    row = {"lambda": cell.liquidity, "C_max": cell.C_max, "seed": cell.seed}
    try:
        report = efficiency_report(run(cell_config(base, cell)))
    except Exception as e:
        logger.warning(f"Sweep cell {tuple(cell)} failed: {e}")
        row.update({col: np.nan for col in METRIC_COLUMNS})
        row.update({"status": "failed", "error": f"{type(e).__name__}: {e}"})
        return row

    row.update(report.to_row())
    row.update({"status": "ok", "error": ""})
    return row


def run_sweep(
    spec: SweepSpec, base: Optional[SimulationConfig] = None, workers: Optional[int] = None
) -> pd.DataFrame:
    """
    Run every cell of `spec` on top of `base` (the config at `spec.config_path`
    if not given). Cells run in worker processes unless `workers` is 1.
    Rows come back ordered by (lambda, C_max, seed).
    """
    if base is None:
        base = load_config(spec.config_path)

    cells = spec.cells()
    logger.info(f"Sweeping {len(cells)} cells")
    job = functools.partial(run_cell, base)
    if workers == 1:
        rows = [job(cell) for cell in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(job, cells))

    df = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    df = df.sort_values(KEY_COLUMNS, kind="mergesort").reset_index(drop=True)

    n_failed = int((df["status"] != "ok").sum())
    if n_failed:
        logger.warning(f"{n_failed} of {len(df)} sweep cells failed")
    return df


def summarize_sweep(df: pd.DataFrame) -> pd.DataFrame:
    """Seed-averaged success ratio and profit per (lambda, C_max)."""
    ok = df[df["status"] == "ok"]
    return (
        ok.groupby(["lambda", "C_max"])
        .agg(
            success_ratio=("success_ratio", "mean"),
            avg_profit=("avg_profit", "mean"),
            seeds=("seed", "count"),
        )
        .reset_index()
    )
