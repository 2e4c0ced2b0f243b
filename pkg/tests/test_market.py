#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Tests for the price-impact market maker."""

import math

import numpy as np
import pytest

from bandwidth_market.market import (
    MarketError,
    MarketState,
    NonFiniteVolumeError,
    PriceRangeError,
    execute,
    impact_price,
    implied_load,
)


def test_impact_price():
    assert impact_price(10.0, 0.0, 10.0) == 10.0
    assert math.isclose(impact_price(10.0, 10.0, 10.0), 10.0 * math.e)
    assert math.isclose(impact_price(10.0, -5.0, 10.0), 10.0 * math.exp(-0.5))


def test_execute_buy():
    market = MarketState(10.0, 10.0)
    trade = execute(market, 5)
    new_price = 10.0 * math.exp(0.5)
    assert trade.prior_price == 10.0
    assert math.isclose(trade.unit_price, new_price)
    assert math.isclose(trade.cash_delta, -5 * new_price)
    assert trade.new_quote == market.price == trade.unit_price
    assert math.isclose(implied_load(market), 5.0)


def test_execute_sell_receives_cash():
    market = MarketState(10.0, 10.0)
    trade = execute(market, -5)
    assert trade.cash_delta > 0
    assert math.isclose(trade.cash_delta, 5 * 10.0 * math.exp(-0.5))
    assert math.isclose(implied_load(market), -5.0)


def test_execute_quote_pricing():
    market = MarketState(10.0, 10.0)
    trade = execute(market, 5, cash_pricing="quote")
    assert trade.cash_delta == -50.0
    # the quote moves the same way under either rule
    assert math.isclose(market.price, 10.0 * math.exp(0.5))


def test_zero_volume_is_identity():
    market = MarketState(12.5, 3.0, initial_price=10.0)
    trade = execute(market, 0)
    assert trade.cash_delta == 0.0
    assert trade.unit_price == trade.new_quote == 12.5
    assert market.price == 12.5


def test_market_validation():
    with pytest.raises(MarketError, match="liquidity"):
        MarketState(10.0, 0.0)
    with pytest.raises(MarketError, match="price"):
        MarketState(-1.0, 10.0)
    with pytest.raises(MarketError, match="initial_price"):
        MarketState(1.0, 10.0, initial_price=float("nan"))

    market = MarketState(10.0, 10.0)
    with pytest.raises(NonFiniteVolumeError):
        execute(market, float("inf"))
    with pytest.raises(MarketError, match="unknown cash pricing"):
        execute(market, 1, cash_pricing="average")
    with pytest.raises(PriceRangeError):
        execute(market, 1e6)
    # a failed trade leaves the quote alone
    assert market.price == 10.0


def test_copy_is_independent():
    market = MarketState(10.0, 10.0)
    other = market.copy()
    execute(other, 3)
    assert market.price == 10.0
    assert other.initial_price == 10.0


@pytest.mark.parametrize("cash_pricing", ["impact", "quote"])
def test_round_trip_restores_quote(cash_pricing):
    """Buying and selling the same volume brings the quote back to where it started"""
    rng = np.random.default_rng(0)
    for _ in range(100):
        market = MarketState(rng.uniform(1, 100), rng.uniform(0.5, 200))
        start = market.price
        volume = int(rng.integers(1, 50))
        execute(market, volume, cash_pricing)
        execute(market, -volume, cash_pricing)
        assert math.isclose(market.price, start, rel_tol=1e-12)
        assert abs(implied_load(market)) < 1e-9


def test_round_trip_costs_the_spread():
    """Under impact pricing a round trip never makes money"""
    market = MarketState(10.0, 10.0)
    buy = execute(market, 7)
    sell = execute(market, -7)
    assert buy.cash_delta + sell.cash_delta < 0


def test_circle_of_trades(benchmark):
    """Any sequence of trades netting to zero volume restores the quote"""
    rng = np.random.default_rng(1)
    volumes = rng.integers(-20, 21, 1000)
    volumes = np.append(volumes, -volumes.sum())

    def trade_circle():
        market = MarketState(10.0, 25.0)
        for v in volumes:
            execute(market, int(v))
        return market

    market = benchmark(trade_circle)
    assert math.isclose(market.price, 10.0, rel_tol=1e-9)
