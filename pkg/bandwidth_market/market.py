# -*- coding: utf-8 -*-

"""Per-router spot markets with exponential price impact."""

import math
import logging
from typing import NamedTuple

logger = logging.getLogger("bandwidth_market.market")

CASH_PRICING_RULES = ("impact", "quote")


class MarketError(ValueError):
    pass


class NonFiniteVolumeError(MarketError):
    pass


class PriceRangeError(MarketError):
    pass


class MarketState:
    """
    One market maker's book: the last transaction price S, the price S(0) the
    market opened at, and the liquidity λ (volume needed to move log S by one).
    """

    __slots__ = ("price", "initial_price", "liquidity")

    def __init__(self, price: float, liquidity: float, initial_price: float = None):
        if initial_price is None:
            initial_price = price
        for name, value in (
            ("price", price),
            ("initial_price", initial_price),
            ("liquidity", liquidity),
        ):
            if not (math.isfinite(value) and value > 0):
                raise MarketError(f"{name} must be positive and finite, got {value}")

        self.price = float(price)
        self.initial_price = float(initial_price)
        self.liquidity = float(liquidity)

    def __repr__(self):
        return (
            f"MarketState(price={self.price!r}, initial_price={self.initial_price!r}, "
            f"liquidity={self.liquidity!r})"
        )

    def copy(self) -> "MarketState":
        return MarketState(self.price, self.liquidity, self.initial_price)


class Trade(NamedTuple):
    volume: float
    prior_price: float
    unit_price: float
    cash_delta: float
    new_quote: float


def impact_price(price: float, volume: float, liquidity: float) -> float:
    """S̃(S, ω) = S·e^{ω/λ}."""
    try:
        new_price = price * math.exp(volume / liquidity)
    except OverflowError as e:
        raise PriceRangeError(
            f"trading {volume} units at liquidity {liquidity} overflows the price {price}"
        ) from e
    if not (math.isfinite(new_price) and new_price > 0):
        raise PriceRangeError(
            f"trading {volume} units at liquidity {liquidity} moves the price {price} "
            f"out of range ({new_price})"
        )
    return new_price


def execute(market: MarketState, volume: float, cash_pricing: str = "impact") -> Trade:
    """
    Trade `volume` units (positive buys, negative sells) against `market`,
    moving its quote to S·e^{ω/λ}.

    With the default "impact" rule the trader pays the post-impact transaction
    price S̃ for every unit; the "quote" rule charges the pre-trade quote S instead.
    Either way the market's new quote is S̃. Volume 0 leaves the market unchanged.

    Raises:
        NonFiniteVolumeError if `volume` is nan or infinite
        PriceRangeError if the new price is not a positive finite float
    """
    if not math.isfinite(volume):
        raise NonFiniteVolumeError(f"cannot trade a non-finite volume {volume}")
    if cash_pricing not in CASH_PRICING_RULES:
        raise MarketError(
            f"unknown cash pricing rule {cash_pricing!r}, expected one of {CASH_PRICING_RULES}"
        )

    prior_price = market.price
    if volume == 0:
        return Trade(0.0, prior_price, prior_price, 0.0, prior_price)

    unit_price = impact_price(prior_price, volume, market.liquidity)
    charged = unit_price if cash_pricing == "impact" else prior_price
    market.price = unit_price

    return Trade(float(volume), prior_price, unit_price, -volume * charged, unit_price)


def implied_load(market: MarketState) -> float:
    """Outstanding volume implied by the quote: λ·log(S/S(0))."""
    return market.liquidity * math.log(market.price / market.initial_price)
