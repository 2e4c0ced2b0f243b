# -*- coding: utf-8 -*-

"""The discrete-time bandwidth market: demands, reservations and trading."""

import math
import logging
from collections import defaultdict
from enum import Enum
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .config import SimulationConfig
from .market import MarketState, execute, implied_load
from .topology import PathQuote, least_cost_path

logger = logging.getLogger("bandwidth_market.simulator")

__all__ = [
    "AccountingError",
    "Demand",
    "DemandStatus",
    "DemandOutcome",
    "UserState",
    "SimulationConfig",
    "StepLog",
    "SimulationLog",
    "Simulation",
    "generate_demands",
    "run",
]

# Tolerances for the per-step bookkeeping checks. Cash rounding grows with the
# amounts moved, which reach 1e20 and beyond at low liquidity.
ACCOUNTING_ATOL = 1e-6
CASH_RTOL = 1e-12
LOAD_RTOL = 1e-12


class AccountingError(RuntimeError):
    pass


class Demand(NamedTuple):
    """A request for `cap` units on every router of a path from `src` to `dst`."""

    id: int
    uid: int
    src: int
    dst: int
    cap: int
    dur: int
    max: float
    t: int = 0


class DemandStatus(Enum):
    PENDING = "pending"
    SATISFIED = "satisfied"
    REJECTED = "rejected"


class DemandOutcome(NamedTuple):
    demand: Demand
    status: DemandStatus
    path: Tuple[int, ...]
    est_cost: float
    end_time: Optional[int]
    sold_at: Optional[int]
    realized_cash: float

    def to_record(self) -> dict:
        d = self.demand
        return {
            "id": d.id,
            "uid": d.uid,
            "src": d.src,
            "dst": d.dst,
            "cap": d.cap,
            "dur": d.dur,
            "max": d.max,
            "t": d.t,
            "outcome": self.status.value,
            "path": list(self.path),
            "est_cost": self.est_cost,
            "end_time": self.end_time,
            "sold_at": self.sold_at,
            "realized_net_cash": self.realized_cash,
        }


class UserState:
    __slots__ = ("cash", "holdings")

    def __init__(self, n_nodes: int):
        self.cash = 0.0
        self.holdings = [0] * n_nodes

    def __repr__(self):
        return f"UserState(cash={self.cash!r}, holdings={self.holdings!r})"


class StepLog(NamedTuple):
    t: int
    prices: Tuple[float, ...]
    generated: int
    satisfied: int
    rejected: int
    sold: int
    trades: int
    bids: int
    quote_updates: int
    cash_credited: float
    cash_traded: float
    cash_turnover: float
    user_cash: Tuple[float, ...]
    outstanding: Tuple[int, ...]
    implied_load: Tuple[float, ...]


class _Booking:
    """Mutable bookkeeping for one demand while the run is in progress."""

    __slots__ = ("demand", "quote", "status", "end_time", "sold_at", "realized_cash")

    def __init__(self, demand: Demand, quote: PathQuote):
        self.demand = demand
        self.quote = quote
        self.status = DemandStatus.PENDING
        self.end_time: Optional[int] = None
        self.sold_at: Optional[int] = None
        self.realized_cash = 0.0

    def outcome(self) -> DemandOutcome:
        return DemandOutcome(
            demand=self.demand,
            status=self.status,
            path=self.quote.path if self.status == DemandStatus.SATISFIED else (),
            est_cost=self.quote.est_cost,
            end_time=self.end_time,
            sold_at=self.sold_at,
            realized_cash=self.realized_cash,
        )


class SimulationLog:
    """The record of a finished (or partial) run: one `StepLog` per step plus demand outcomes."""

    def __init__(
        self,
        config: SimulationConfig,
        steps: Sequence[StepLog],
        outcomes: Sequence[DemandOutcome],
    ):
        self.config = config
        self.steps = list(steps)
        self.outcomes = list(outcomes)

    def __len__(self):
        return len(self.steps)

    @property
    def prices(self) -> np.ndarray:
        """Last transaction prices, shape (steps, N)."""
        return np.array([s.prices for s in self.steps], dtype=float).reshape(
            len(self.steps), self.config.N
        )

    @property
    def outstanding(self) -> np.ndarray:
        """Bookkept outstanding volume per market after every step, shape (steps, N)."""
        return np.array([s.outstanding for s in self.steps], dtype=float).reshape(
            len(self.steps), self.config.N
        )

    @property
    def final_cash(self) -> np.ndarray:
        if not self.steps:
            return np.zeros(self.config.M)
        return np.array(self.steps[-1].user_cash, dtype=float)

    @property
    def n_demands(self) -> int:
        return len(self.outcomes)

    @property
    def n_satisfied(self) -> int:
        return sum(o.status == DemandStatus.SATISFIED for o in self.outcomes)

    @property
    def books_closed(self) -> bool:
        return all(
            o.sold_at is not None
            for o in self.outcomes
            if o.status == DemandStatus.SATISFIED
        )


def generate_demands(
    rng: np.random.Generator, config: SimulationConfig, t: int, next_id: int = 0
) -> List[Demand]:
    """
    Draw the `m` demands of step `t`. Per demand the draws are taken in a fixed
    order: uid, src, dst (redrawn until it differs from src), ξ, dur.
    """
    demands = []
    for k in range(config.m):
        uid = int(rng.integers(config.M))
        src = int(rng.integers(config.N))
        dst = int(rng.integers(config.N))
        while dst == src:
            dst = int(rng.integers(config.N))
        xi = rng.random()
        cap = int(math.ceil(math.exp(config.K * xi)))
        dur = int(rng.integers(1, config.D + 1))
        demands.append(
            Demand(next_id + k, uid, src, dst, cap, dur, config.C_unit * cap, t)
        )
    return demands


class Simulation:
    """
    A single seeded run. Call `step` to advance one time step or `run` to play
    out all remaining steps.

    The seed is split into two independent streams: one for demand generation
    and one for the order in which trades are effectuated. This departs from
    drawing everything from a single generator on purpose: a given seed yields
    the same demands whatever the budget or liquidity settings, so runs that
    differ only in those settings are paired.
    """

    def __init__(self, config: SimulationConfig):
        self.config = config

        demand_seq, effectuation_seq = np.random.SeedSequence(config.seed).spawn(2)
        self.demand_rng = np.random.Generator(np.random.PCG64(demand_seq))
        self.effectuation_rng = np.random.Generator(np.random.PCG64(effectuation_seq))

        self.markets = [
            MarketState(price, liquidity)
            for price, liquidity in zip(config.initial_prices, config.liquidity)
        ]
        self.users = [UserState(config.N) for _ in range(config.M)]
        self.t = 0
        self.next_id = 0
        self.steps: List[StepLog] = []
        self._bookings: List[_Booking] = []
        self._sales: Dict[int, List[_Booking]] = defaultdict(list)

    @property
    def done(self) -> bool:
        return self.t >= self.config.L

    def quotes(self) -> Tuple[float, ...]:
        return tuple(market.price for market in self.markets)

    def step(self, demands: Optional[Sequence[Demand]] = None) -> StepLog:
        """
        Advance one time step. New demands are drawn from the demand stream
        unless `demands` is given.

        Raises:
            AccountingError if the books fail to balance after trading
        """
        config = self.config
        if self.done:
            raise RuntimeError(f"simulation already ran all {config.L} steps")

        t = self.t
        if demands is None:
            demands = generate_demands(self.demand_rng, config, t, self.next_id)
        if demands:
            self.next_id = max(self.next_id, max(d.id for d in demands) + 1)

        # Users decide on the quotes as they stood at the start of the step
        quotes = self.quotes()
        cash_before = [user.cash for user in self.users]
        volumes: Dict[Tuple[int, int], int] = defaultdict(int)
        contributions: Dict[Tuple[int, int], List[Tuple[_Booking, int]]] = defaultdict(
            list
        )

        credited = 0.0
        n_satisfied = n_rejected = 0
        for demand in demands:
            quote = least_cost_path(
                config.topology, quotes, demand.src, demand.dst, demand.cap
            )
            booking = _Booking(demand, quote)
            self._bookings.append(booking)

            if quote.est_cost < config.C_max * demand.max:
                booking.status = DemandStatus.SATISFIED
                booking.end_time = t + demand.dur
                booking.realized_cash = demand.max
                self.users[demand.uid].cash += demand.max
                credited += demand.max
                for node in quote.path:
                    volumes[(demand.uid, node)] += demand.cap
                    contributions[(demand.uid, node)].append((booking, demand.cap))
                self._sales[booking.end_time].append(booking)
                n_satisfied += 1
            else:
                booking.status = DemandStatus.REJECTED
                n_rejected += 1

        due = self._sales.pop(t, [])
        if config.close_out and t == config.L - 1:
            for end_time in sorted(k for k in self._sales if k > t):
                due.extend(self._sales.pop(end_time))
        for booking in due:
            if booking.sold_at is not None:
                raise AccountingError(
                    f"demand {booking.demand.id} was already sold at step {booking.sold_at}"
                )
            booking.sold_at = t
            demand = booking.demand
            for node in booking.quote.path:
                volumes[(demand.uid, node)] -= demand.cap
                contributions[(demand.uid, node)].append((booking, -demand.cap))

        pairs = sorted(pair for pair, volume in volumes.items() if volume != 0)
        traded = []
        booked = []
        moved = set()
        for idx in self.effectuation_rng.permutation(len(pairs)):
            uid, node = pairs[idx]
            volume = volumes[(uid, node)]
            trade = execute(self.markets[node], volume, config.cash_pricing)

            user = self.users[uid]
            user.cash += trade.cash_delta
            user.holdings[node] += volume
            traded.append(trade.cash_delta)
            moved.add(node)

            charged = -trade.cash_delta / trade.volume
            for booking, share in contributions[(uid, node)]:
                booking.realized_cash -= share * charged
                booked.append(abs(share * charged))
            logger.debug(
                f"t={t} user {uid} traded {volume} on router {node}: "
                f"{trade.prior_price:.6g} -> {trade.unit_price:.6g}"
            )

        # Buys and sells that netted to zero never reach the market
        for pair, volume in volumes.items():
            if volume == 0:
                for booking, share in contributions[pair]:
                    booking.realized_cash -= share * quotes[pair[1]]
                    booked.append(abs(share * quotes[pair[1]]))

        cash_traded = math.fsum(traded)
        # gross cash moved, including what was booked against single demands
        turnover = credited + math.fsum(booked)
        outstanding, loads = self._check_books(
            t, cash_before, credited + cash_traded, turnover
        )

        log = StepLog(
            t=t,
            prices=self.quotes(),
            generated=len(demands),
            satisfied=n_satisfied,
            rejected=n_rejected,
            sold=len(due),
            trades=len(pairs),
            bids=len(pairs),
            quote_updates=len(moved) * (config.M - 1),
            cash_credited=credited,
            cash_traded=cash_traded,
            cash_turnover=turnover,
            user_cash=tuple(user.cash for user in self.users),
            outstanding=outstanding,
            implied_load=loads,
        )
        self.steps.append(log)
        self.t += 1
        return log

    def _check_books(
        self,
        t: int,
        cash_before: Sequence[float],
        expected_change: float,
        turnover: float,
    ) -> Tuple[Tuple[int, ...], Tuple[float, ...]]:
        for uid, user in enumerate(self.users):
            for node, units in enumerate(user.holdings):
                if units < 0:
                    raise AccountingError(
                        f"t={t}: user {uid} holds {units} units of router {node}"
                    )

        cash_change = math.fsum(
            user.cash - before for user, before in zip(self.users, cash_before)
        )
        scale = turnover + math.fsum(abs(before) for before in cash_before)
        if abs(cash_change - expected_change) > ACCOUNTING_ATOL + CASH_RTOL * scale:
            raise AccountingError(
                f"t={t}: user cash changed by {cash_change}, expected {expected_change}"
            )

        outstanding = tuple(
            sum(user.holdings[node] for user in self.users)
            for node in range(self.config.N)
        )
        loads = tuple(implied_load(market) for market in self.markets)
        for node, (units, load) in enumerate(zip(outstanding, loads)):
            # rounding in log(S/S0) is amplified by λ
            tolerance = ACCOUNTING_ATOL * max(1.0, abs(units)) + LOAD_RTOL * (
                self.markets[node].liquidity
            )
            if abs(load - units) > tolerance:
                raise AccountingError(
                    f"t={t}: router {node} implies a load of {load} "
                    f"but {units} units are outstanding"
                )

        return outstanding, loads

    def run(self) -> SimulationLog:
        while not self.done:
            self.step()

        log = self.log()
        logger.info(
            f"Ran {len(log)} steps (seed {self.config.seed}): "
            f"{log.n_satisfied}/{log.n_demands} demands satisfied"
        )
        return log

    def log(self) -> SimulationLog:
        return SimulationLog(
            self.config, self.steps, [booking.outcome() for booking in self._bookings]
        )


def run(config: SimulationConfig) -> SimulationLog:
    """Play out all L steps of `config` from a fresh state."""
    return Simulation(config).run()
