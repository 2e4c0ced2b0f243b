#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Tests for liquidity and budget sweeps."""

import os

import numpy as np
import pandas as pd
import pytest

from bandwidth_market import sweep
from bandwidth_market.config import load_config
from bandwidth_market.json_validation import ConfigError
from bandwidth_market.sweep import (
    SWEEP_COLUMNS,
    SweepCell,
    SweepSpec,
    cell_config,
    load_sweep,
    run_cell,
    run_sweep,
    summarize_sweep,
)

from .constants import TEST_DATA_DIR

SWEEP_PATH = os.path.join(TEST_DATA_DIR, "small_sweep.yaml")


def test_load_sweep():
    spec = load_sweep(SWEEP_PATH)
    assert spec.liquidity == (100.0, 10.0)
    assert spec.C_max == (1.0,)
    assert spec.seeds == (2, 1)
    assert spec.config_path == os.path.join(TEST_DATA_DIR, "small_config.yaml")

    assert spec.cells() == [
        SweepCell(10.0, 1.0, 1),
        SweepCell(10.0, 1.0, 2),
        SweepCell(100.0, 1.0, 1),
        SweepCell(100.0, 1.0, 2),
    ]


def test_load_sweep_overrides():
    spec = load_sweep(SWEEP_PATH, seeds=[5], C_max=[0.5, 2.0])
    assert spec.seeds == (5,)
    assert spec.C_max == (0.5, 2.0)
    assert spec.liquidity == (100.0, 10.0)
    assert len(spec.cells()) == 4

    spec = load_sweep(liquidity=[10], C_max=[1], seeds=[1])
    assert spec.config_path is None


def test_load_sweep_errors():
    with pytest.raises(ConfigError, match="liquidity"):
        load_sweep(liquidity=[0], C_max=[1], seeds=[1])
    with pytest.raises(ConfigError, match="missing required property 'seeds'"):
        load_sweep(liquidity=[10], C_max=[1])
    with pytest.raises(ConfigError, match="seeds"):
        load_sweep(liquidity=[10], C_max=[1], seeds=[1, 1])


def test_cell_config():
    base = load_config(os.path.join(TEST_DATA_DIR, "small_config.yaml"))
    config = cell_config(base, SweepCell(50.0, 0.5, 9))
    assert config.liquidity == (50.0,) * base.N
    assert config.C_max == 0.5
    assert config.seed == 9
    assert config.initial_prices == base.initial_prices


def test_run_cell_is_reproducible():
    base = load_config(os.path.join(TEST_DATA_DIR, "small_config.yaml"))
    cell = SweepCell(10.0, 1.0, 4)
    row = run_cell(base, cell)
    assert row["status"] == "ok"
    assert row["error"] == ""
    assert row == run_cell(base, cell)


def test_run_sweep():
    df = run_sweep(load_sweep(SWEEP_PATH), workers=1)
    assert list(df.columns) == SWEEP_COLUMNS
    assert len(df) == 4
    assert list(df["lambda"]) == [10.0, 10.0, 100.0, 100.0]
    assert list(df["seed"]) == [1, 2, 1, 2]
    assert (df["status"] == "ok").all()
    assert df["success_ratio"].between(0, 1).all()

    # deeper markets move less, so more demands fit the budget
    by_liquidity = df.groupby("lambda")["success_ratio"].mean()
    assert by_liquidity[100.0] > by_liquidity[10.0]

    summary = summarize_sweep(df)
    assert list(summary.columns) == ["lambda", "C_max", "success_ratio", "avg_profit", "seeds"]
    assert list(summary["seeds"]) == [2, 2]
    assert summary["success_ratio"].iloc[1] == pytest.approx(by_liquidity[100.0])


def test_run_sweep_in_worker_processes():
    spec = SweepSpec((10.0, 20.0), (1.0,), (1,), os.path.join(TEST_DATA_DIR, "small_config.yaml"))
    pd.testing.assert_frame_equal(run_sweep(spec, workers=2), run_sweep(spec, workers=1))


def test_failed_cells_are_recorded(monkeypatch):
    real_run = sweep.run

    def flaky_run(config):
        if config.seed == 2:
            raise RuntimeError("boom")
        return real_run(config)

    monkeypatch.setattr(sweep, "run", flaky_run)
    df = run_sweep(load_sweep(SWEEP_PATH, liquidity=[10.0]), workers=1)

    failed = df[df["seed"] == 2].iloc[0]
    assert failed["status"] == "failed"
    assert failed["error"] == "RuntimeError: boom"
    assert np.isnan(failed["success_ratio"])
    assert df[df["seed"] == 1].iloc[0]["status"] == "ok"

    summary = summarize_sweep(df)
    assert list(summary["seeds"]) == [1]
