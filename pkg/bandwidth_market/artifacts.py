# -*- coding: utf-8 -*-

"""Writing runs and estimation results to CSV, JSON-lines and YAML files."""

import os
import logging
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import yaml

from .config import RunManifest
from .estimate import DensityFit, EstimationReport
from .metrics import MetricsError, efficiency_report
from .series import TIME_COLUMN, time_column
from .simulator import SimulationLog
from .topology import Topology

logger = logging.getLogger("bandwidth_market.artifacts")

FLOAT_FORMAT = "%.12g"

RUN_ARTIFACTS = {
    "prices": "prices.csv",
    "steps": "steps.csv",
    "demands": "demands.jsonl",
    "topology": "topology.txt",
    "efficiency": "efficiency.yaml",
}
MANIFEST_FILE = "manifest.yaml"
CORRELATION_FILE = "correlation.csv"
CORRELATION_PAIRS_FILE = "correlation_pairs.csv"
ESTIMATION_SUMMARY_FILE = "summary.yaml"


def _plain(value):
    """Convert numpy scalars and arrays into types yaml.safe_dump understands."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    return value


def _dump_yaml(doc: dict, path: str):
    with open(path, "w") as f:
        yaml.safe_dump(_plain(doc), f, sort_keys=False, default_flow_style=None)


def price_frame(log: SimulationLog) -> pd.DataFrame:
    """One row per step: t = (k+1)·dt, then the last price of every router."""
    prices = log.prices
    df = pd.DataFrame(prices, columns=[f"S_{j}" for j in range(log.config.N)])
    df.insert(0, TIME_COLUMN, time_column(len(prices), log.config.dt))
    return df


def step_frame(log: SimulationLog) -> pd.DataFrame:
    rows = []
    for s in log.steps:
        row = {
            TIME_COLUMN: s.t,
            "generated": s.generated,
            "satisfied": s.satisfied,
            "rejected": s.rejected,
            "sold": s.sold,
            "trades": s.trades,
            "bids": s.bids,
            "quote_updates": s.quote_updates,
            "cash_credited": s.cash_credited,
            "cash_traded": s.cash_traded,
            "cash_turnover": s.cash_turnover,
            "total_cash": sum(s.user_cash),
        }
        row.update({f"load_{j}": units for j, units in enumerate(s.outstanding)})
        rows.append(row)
    return pd.DataFrame(rows)


def demand_frame(log: SimulationLog) -> pd.DataFrame:
    return pd.DataFrame([o.to_record() for o in log.outcomes], dtype=object)


def write_run(log: SimulationLog, out_dir: str) -> RunManifest:
    """
    Write the price CSV, step summary, demand outcomes, topology, efficiency
    summary and a manifest from which the run can be regenerated.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {name: os.path.join(out_dir, f) for name, f in RUN_ARTIFACTS.items()}

    price_frame(log).to_csv(paths["prices"], index=False, float_format=FLOAT_FORMAT)
    step_frame(log).to_csv(paths["steps"], index=False, float_format=FLOAT_FORMAT)
    demand_frame(log).to_json(paths["demands"], orient="records", lines=True)
    with open(paths["topology"], "w") as f:
        f.write(log.config.topology.to_text())

    try:
        report = efficiency_report(log)
        efficiency = report.to_row()
        efficiency["avg_profit_per_user"] = list(report.per_user_profit)
        efficiency["mean_load"] = list(report.mean_load)
    except MetricsError as e:
        efficiency = {"error": str(e)}
    _dump_yaml(efficiency, paths["efficiency"])

    manifest = RunManifest(
        config=log.config.to_document(topology_ref=RUN_ARTIFACTS["topology"]),
        seed=log.config.seed,
        artifacts=dict(RUN_ARTIFACTS),
    )
    _dump_yaml(manifest.to_document(), os.path.join(out_dir, MANIFEST_FILE))
    logger.info(f"Wrote run artifacts to {out_dir}")
    return manifest


def _fit_document(fit: DensityFit) -> dict:
    return {"family": fit.family, "params": fit.params, "fit_error": fit.fit_error}


def report_document(report: EstimationReport) -> dict:
    p = report.params
    params = {"alpha": p.alpha, "mu": p.mu, "sigma": p.sigma}
    if p.sigma > 0:
        params["gamma"] = p.gamma
    decay = report.decay
    return {
        "label": report.label,
        "model": p.kind.value,
        "params": params,
        "n_residuals": len(report.residuals),
        "k_fit": report.k_fit,
        "density_fit": _fit_document(report.density_fit),
        "residual_fit": _fit_document(report.residual_fit),
        "normality": report.normality._asdict(),
        "decay": {
            "y": decay.y,
            "alpha": decay.alpha,
            "autocov": decay.autocov,
            "excluded": decay.excluded,
        },
    }


def _curve_frame(fit: DensityFit) -> pd.DataFrame:
    return pd.DataFrame(
        {"center": fit.bin_centers, "height": fit.heights, "fitted": fit.fitted}
    )


def write_report(report: EstimationReport, out_dir: str) -> Dict[str, str]:
    """Write one column's report document and its plot-ready curves."""
    os.makedirs(out_dir, exist_ok=True)
    label = report.label
    paths = {
        "report": os.path.join(out_dir, f"{label}.report.yaml"),
        "decay": os.path.join(out_dir, f"{label}.decay.csv"),
        "density": os.path.join(out_dir, f"{label}.density.csv"),
        "residuals": os.path.join(out_dir, f"{label}.residuals.csv"),
    }

    _dump_yaml(report_document(report), paths["report"])
    decay = report.decay
    pd.DataFrame(
        {
            "k": decay.lags,
            "y": decay.y,
            "y_stderr": decay.y_stderr,
            "alpha": decay.alpha,
            "autocov": decay.autocov,
            "autocorr": decay.autocorr,
            "excluded": decay.excluded,
        }
    ).to_csv(paths["decay"], index=False, float_format=FLOAT_FORMAT)
    _curve_frame(report.density_fit).to_csv(
        paths["density"], index=False, float_format=FLOAT_FORMAT
    )
    _curve_frame(report.residual_fit).to_csv(
        paths["residuals"], index=False, float_format=FLOAT_FORMAT
    )
    return paths


def router_id(label: str) -> Optional[int]:
    """Router index of a price column named like S_3, else None."""
    suffix = label.rsplit("_", 1)[-1]
    return int(suffix) if suffix.isdigit() else None


def correlation_pairs(
    rho: np.ndarray, labels: Sequence[str], topology: Optional[Topology] = None
) -> pd.DataFrame:
    """Upper-triangle pairs of the matrix, marked as adjacent where the topology connects them."""
    rows = []
    for a in range(len(labels)):
        for b in range(a + 1, len(labels)):
            i, j = router_id(labels[a]), router_id(labels[b])
            adjacent = None
            if topology is not None and i is not None and j is not None:
                if i < topology.n_nodes and j < topology.n_nodes:
                    adjacent = topology.is_adjacent(i, j)
            rows.append(
                {"i": labels[a], "j": labels[b], "rho": rho[a, b], "adjacent": adjacent}
            )
    return pd.DataFrame(rows, columns=["i", "j", "rho", "adjacent"])


def adjacency_means(pairs: pd.DataFrame) -> Dict[str, float]:
    marked = pairs.dropna(subset=["adjacent"])
    if marked.empty:
        return {}
    adjacent = marked["adjacent"].astype(bool)
    return {
        "adjacent_mean": float(marked.loc[adjacent, "rho"].mean()),
        "non_adjacent_mean": float(marked.loc[~adjacent, "rho"].mean()),
    }


def write_estimation(
    reports: List[EstimationReport],
    failures: Dict[str, str],
    rho: Optional[np.ndarray],
    out_dir: str,
    topology: Optional[Topology] = None,
) -> dict:
    """Write every column report, the residual correlation matrix and a summary document."""
    os.makedirs(out_dir, exist_ok=True)
    for report in reports:
        write_report(report, out_dir)

    summary = {
        "estimated": [r.label for r in reports],
        "failed": dict(failures),
    }
    if rho is not None:
        labels = [r.label for r in reports]
        pd.DataFrame(rho, index=labels, columns=labels).to_csv(
            os.path.join(out_dir, CORRELATION_FILE), float_format=FLOAT_FORMAT
        )
        pairs = correlation_pairs(rho, labels, topology)
        pairs.to_csv(
            os.path.join(out_dir, CORRELATION_PAIRS_FILE),
            index=False,
            float_format=FLOAT_FORMAT,
        )
        summary["correlation"] = adjacency_means(pairs)

    _dump_yaml(summary, os.path.join(out_dir, ESTIMATION_SUMMARY_FILE))
    logger.info(f"Wrote {len(reports)} estimation reports to {out_dir}")
    return summary
