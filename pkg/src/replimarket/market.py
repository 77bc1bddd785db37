"""LMSR market state machine for binary replication contracts.

A market holds outstanding share quantities for the two contract sides,
prices them with a logarithmic market scoring rule, and executes
single-share buy/sell orders against per-trader ledger accounts.  All
mutation flows through :func:`execute_order` / :func:`step_iteration`;
every operation is deterministic.

Cost potential:  C(q) = b * ln(exp(q_yes/b) + exp(q_no/b))
Instantaneous price of a side: exp(q_side/b) / (exp(q_yes/b) + exp(q_no/b))

Prices of the two sides always sum to 1; the market maker's worst-case
loss is bounded by b*ln(2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import AlreadyClosedError, MarketClosedError, SettleBeforeCloseError


class AssetSide(Enum):
    """The two contract sides of a replication market."""

    WILL_REPLICATE = "WillReplicate"
    WILL_NOT_REPLICATE = "WillNotReplicate"

    @property
    def other(self) -> "AssetSide":
        if self is AssetSide.WILL_REPLICATE:
            return AssetSide.WILL_NOT_REPLICATE
        return AssetSide.WILL_REPLICATE


class Outcome(Enum):
    REPLICATED = "Replicated"
    NOT_REPLICATED = "NotReplicated"

    @property
    def winning_side(self) -> AssetSide:
        if self is Outcome.REPLICATED:
            return AssetSide.WILL_REPLICATE
        return AssetSide.WILL_NOT_REPLICATE

    @property
    def indicator(self) -> float:
        """1.0 for a successful replication, else 0.0 (value of the YES asset)."""
        return 1.0 if self is Outcome.REPLICATED else 0.0


class Direction(Enum):
    BUY = "Buy"
    SELL = "Sell"


class TraderKind(Enum):
    AGENT = "Agent"
    HUMAN = "Human"


class MarketStatus(Enum):
    OPEN = "Open"
    CLOSED = "Closed"
    SETTLED = "Settled"


class RejectReason(Enum):
    INSUFFICIENT_CASH = "InsufficientCash"
    INSUFFICIENT_HOLDINGS = "InsufficientHoldings"
    MARKET_CLOSED = "MarketClosed"


# -- pure LMSR arithmetic ----------------------------------------------------

def lmsr_cost(q_yes: float, q_no: float, b: float) -> float:
    """Cost potential C(q).  Stabilized so |q|/b up to ~700 cannot overflow."""
    m = max(q_yes, q_no) / b
    return b * (m + math.log(math.exp(q_yes / b - m) + math.exp(q_no / b - m)))


def lmsr_price_yes(q_yes: float, q_no: float, b: float) -> float:
    m = max(q_yes, q_no) / b
    ey = math.exp(q_yes / b - m)
    en = math.exp(q_no / b - m)
    return ey / (ey + en)


@dataclass
class MarketState:
    market_id: str
    b: float
    max_iterations: int
    q_yes: float = 0.0
    q_no: float = 0.0
    iteration: int = 0
    status: MarketStatus = MarketStatus.OPEN
    final_price_yes: float | None = None

    def __post_init__(self):
        if self.b <= 0:
            raise ValueError("liquidity parameter b must be positive")
        if self.max_iterations <= 0:
            raise ValueError("max_iterations must be positive")

    def quantity(self, side: AssetSide) -> float:
        return self.q_yes if side is AssetSide.WILL_REPLICATE else self.q_no


@dataclass
class Account:
    cash: float
    holdings: dict[AssetSide, int] = field(
        default_factory=lambda: {AssetSide.WILL_REPLICATE: 0, AssetSide.WILL_NOT_REPLICATE: 0}
    )


@dataclass
class Ledger:
    accounts: dict[str, Account] = field(default_factory=dict)
    market_maker_collected: float = 0.0

    def open_account(self, trader_id: str, cash: float) -> Account:
        if trader_id in self.accounts:
            raise ValueError(f"account {trader_id!r} already exists")
        acct = Account(cash=cash)
        self.accounts[trader_id] = acct
        return acct

    def total_cash(self) -> float:
        return sum(a.cash for a in self.accounts.values())


@dataclass
class Order:
    trader_id: str
    kind: TraderKind
    side: AssetSide
    direction: Direction
    sequence: int = 0


@dataclass
class TradeRecord:
    order: Order
    executed_at_iteration: int
    price_yes_after: float
    cash_delta: float
    accepted: bool
    reject_reason: RejectReason | None = None

    # field order here defines the serialized column order
    CSV_HEADER = (
        "traderId,traderKind,side,direction,sequence,"
        "executedAtIteration,priceYesAfter,cashDelta,accepted,rejectReason"
    )

    def to_csv_row(self) -> str:
        o = self.order
        return ",".join(
            (
                o.trader_id,
                o.kind.value,
                o.side.value,
                o.direction.value,
                str(o.sequence),
                str(self.executed_at_iteration),
                repr(self.price_yes_after),
                repr(self.cash_delta),
                "1" if self.accepted else "0",
                self.reject_reason.value if self.reject_reason else "",
            )
        )


# -- operations --------------------------------------------------------------

def price(state: MarketState, side: AssetSide) -> float:
    """Instantaneous price of `side`, in (0,1).  Prices of both sides sum to 1."""
    p_yes = lmsr_price_yes(state.q_yes, state.q_no, state.b)
    return p_yes if side is AssetSide.WILL_REPLICATE else 1.0 - p_yes


def cost(state: MarketState) -> float:
    return lmsr_cost(state.q_yes, state.q_no, state.b)


def quote_trade(state: MarketState, side: AssetSide, direction: Direction) -> float:
    """Signed cash delta to the trader for a one-share trade.

    Buys quote negative (the trader pays), sells positive (the trader
    receives); |delta| < 1 for any state.  The quote is the exact cost
    difference C(q') - C(q), so buying and immediately selling the same
    share nets to zero.
    """
    if state.status is not MarketStatus.OPEN:
        raise MarketClosedError(f"cannot quote on {state.status.value} market {state.market_id}")
    delta = 1.0 if direction is Direction.BUY else -1.0
    if direction is Direction.SELL and state.quantity(side) < 1.0:
        raise ValueError("cannot quote a sell with no outstanding shares on that side")
    if side is AssetSide.WILL_REPLICATE:
        new_cost = lmsr_cost(state.q_yes + delta, state.q_no, state.b)
    else:
        new_cost = lmsr_cost(state.q_yes, state.q_no + delta, state.b)
    return -(new_cost - lmsr_cost(state.q_yes, state.q_no, state.b))


def execute_order(state: MarketState, ledger: Ledger, order: Order) -> TradeRecord:
    """Execute a single-share order atomically, or reject it without side effects.

    Accepted orders update share quantities, the trader's cash and
    holdings, and the market maker's collected total in one step.
    Rejected orders leave every piece of state bit-identical and carry a
    reject reason.
    """

    def rejected(reason: RejectReason) -> TradeRecord:
        return TradeRecord(
            order=order,
            executed_at_iteration=state.iteration,
            price_yes_after=lmsr_price_yes(state.q_yes, state.q_no, state.b),
            cash_delta=0.0,
            accepted=False,
            reject_reason=reason,
        )

    if state.status is not MarketStatus.OPEN:
        return rejected(RejectReason.MARKET_CLOSED)

    acct = ledger.accounts[order.trader_id]
    if order.direction is Direction.SELL and acct.holdings[order.side] < 1:
        return rejected(RejectReason.INSUFFICIENT_HOLDINGS)

    cash_delta = quote_trade(state, order.side, order.direction)
    if order.direction is Direction.BUY and -cash_delta > acct.cash:
        return rejected(RejectReason.INSUFFICIENT_CASH)

    shares = 1 if order.direction is Direction.BUY else -1
    if order.side is AssetSide.WILL_REPLICATE:
        state.q_yes += shares
    else:
        state.q_no += shares
    acct.cash += cash_delta
    acct.holdings[order.side] += shares
    ledger.market_maker_collected += -cash_delta

    return TradeRecord(
        order=order,
        executed_at_iteration=state.iteration,
        price_yes_after=lmsr_price_yes(state.q_yes, state.q_no, state.b),
        cash_delta=cash_delta,
        accepted=True,
    )


def step_iteration(
    state: MarketState,
    ledger: Ledger,
    agent_orders: list[Order],
    human_queue: list[Order],
) -> list[TradeRecord]:
    """Process one market iteration: all agent orders, then queued human orders.

    Agent orders execute in the given order; human orders execute in
    ascending sequence (first-in-first-out).  The human queue is fully
    drained even when individual orders are rejected.  The iteration
    counter advances by one and stamps every record.
    """
    if state.status is not MarketStatus.OPEN:
        raise MarketClosedError(f"market {state.market_id} is {state.status.value}")
    if state.iteration >= state.max_iterations:
        raise MarketClosedError(f"market {state.market_id} has exhausted its iterations")

    state.iteration += 1
    records: list[TradeRecord] = []
    for order in agent_orders:
        records.append(execute_order(state, ledger, order))
    for order in sorted(human_queue, key=lambda o: o.sequence):
        records.append(execute_order(state, ledger, order))
    return records


def close_market(state: MarketState) -> float:
    """Close the market and record the final WillReplicate price immutably."""
    if state.status is not MarketStatus.OPEN:
        raise AlreadyClosedError(f"market {state.market_id} is {state.status.value}")
    state.status = MarketStatus.CLOSED
    state.final_price_yes = lmsr_price_yes(state.q_yes, state.q_no, state.b)
    return state.final_price_yes


def settle(state: MarketState, ledger: Ledger, outcome: Outcome) -> dict[str, float]:
    """Pay 1 per winning-side share plus remaining cash; returns per-trader payouts."""
    if state.status is not MarketStatus.CLOSED:
        raise SettleBeforeCloseError(
            f"market {state.market_id} must be Closed to settle, is {state.status.value}"
        )
    winning = outcome.winning_side
    payouts = {
        trader_id: acct.cash + 1.0 * acct.holdings[winning]
        for trader_id, acct in ledger.accounts.items()
    }
    state.status = MarketStatus.SETTLED
    return payouts
