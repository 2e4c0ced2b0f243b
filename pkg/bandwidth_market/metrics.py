# -*- coding: utf-8 -*-

"""Market efficiency measurements computed from simulation logs."""

import logging
import math
from collections import defaultdict
from typing import NamedTuple, Tuple

import numpy as np

from .simulator import ACCOUNTING_ATOL, CASH_RTOL, DemandStatus, SimulationLog

logger = logging.getLogger("bandwidth_market.metrics")


class MetricsError(ValueError):
    pass


class ProfitSummary(NamedTuple):
    per_user: np.ndarray
    mean_per_user: float
    mean_per_demand: float
    total: float


class MessageSummary(NamedTuple):
    trades: int
    bids: int
    quote_updates: int
    max_updates_per_trade: int

    @property
    def updates_per_trade(self) -> float:
        return self.quote_updates / self.trades if self.trades else 0.0


class EfficiencyReport(NamedTuple):
    success_ratio: float
    avg_net_profit: float
    avg_profit_per_demand: float
    per_user_profit: Tuple[float, ...]
    mean_load: Tuple[float, ...]
    n_demands: int
    n_satisfied: int
    messages: MessageSummary

    def to_row(self) -> dict:
        return {
            "success_ratio": self.success_ratio,
            "avg_profit": self.avg_net_profit,
            "avg_profit_per_demand": self.avg_profit_per_demand,
            "demands": self.n_demands,
            "satisfied": self.n_satisfied,
            "trades": self.messages.trades,
            "bids": self.messages.bids,
            "quote_updates": self.messages.quote_updates,
            "updates_per_trade": self.messages.updates_per_trade,
        }


def success_ratio(log: SimulationLog) -> float:
    """
    Share of demands that were bought, whatever they ended up costing.

    Raises:
        MetricsError if the log holds no demands
    """
    if log.n_demands == 0:
        raise MetricsError("success ratio is undefined for a run without demands")
    return log.n_satisfied / log.n_demands


def net_profit(log: SimulationLog) -> ProfitSummary:
    """
    Profit per user is the user's final cash (everyone starts at 0). Also
    averaged over users and over demands.
    """
    if not log.books_closed:
        logger.warning("Some reservations were never sold; profits are not final")

    per_user = log.final_cash
    total = float(per_user.sum())

    # per-demand flows must add up to each user's cash
    # rounding grows with the cash that changed hands over the run
    tolerance = ACCOUNTING_ATOL + CASH_RTOL * math.fsum(
        s.cash_turnover for s in log.steps
    )
    realized = defaultdict(float)
    for outcome in log.outcomes:
        realized[outcome.demand.uid] += outcome.realized_cash
    for uid, cash in enumerate(per_user):
        if not abs(cash - realized[uid]) <= tolerance:
            raise MetricsError(
                f"user {uid} holds {cash} but its demands realized {realized[uid]}"
            )

    return ProfitSummary(
        per_user=per_user,
        mean_per_user=float(per_user.mean()) if len(per_user) else 0.0,
        mean_per_demand=total / log.n_demands if log.n_demands else 0.0,
        total=total,
    )


def load_series(log: SimulationLog) -> np.ndarray:
    """
    Implied load λ_j·log(Ŝ_j/Ŝ_j(0)) per market, shape (steps + 1, N);
    row 0 is the opening state and row k the load after k steps.
    """
    config = log.config
    liquidity = np.asarray(config.liquidity)
    initial = np.asarray(config.initial_prices)
    loads = liquidity * np.log(log.prices / initial)
    return np.vstack([np.zeros((1, config.N)), loads])


def message_summary(log: SimulationLog) -> MessageSummary:
    trades = sum(s.trades for s in log.steps)
    return MessageSummary(
        trades=trades,
        bids=sum(s.bids for s in log.steps),
        quote_updates=sum(s.quote_updates for s in log.steps),
        max_updates_per_trade=log.config.M - 1 if trades else 0,
    )


def efficiency_report(log: SimulationLog) -> EfficiencyReport:
    profit = net_profit(log)
    loads = load_series(log)
    return EfficiencyReport(
        success_ratio=success_ratio(log),
        avg_net_profit=profit.mean_per_user,
        avg_profit_per_demand=profit.mean_per_demand,
        per_user_profit=tuple(float(p) for p in profit.per_user),
        mean_load=tuple(float(v) for v in loads[1:].mean(axis=0))
        if len(loads) > 1
        else tuple(0.0 for _ in range(log.config.N)),
        n_demands=log.n_demands,
        n_satisfied=sum(o.status == DemandStatus.SATISFIED for o in log.outcomes),
        messages=message_summary(log),
    )
