"""Drives one market from open to close: sampling, decisions, iteration steps.

:class:`MarketSession` owns a market's state, ledger, and queued human
orders, and advances it one iteration at a time: draw the per-agent
participation sample, collect orders from sampled agents at the
start-of-iteration price, then execute agents first and queued human
orders second (FIFO).  Training, batch evaluation, and the live service
all step markets exclusively through this class, so their dynamics are
identical by construction.

Bot-only sessions may fast-forward: once no agent could place an
acceptable order at the standing price, no further state change is
possible (prices only move on accepted trades), so the session jumps
straight to the final iteration.  Prices, ledgers, and accepted trades
are unaffected; only repeat rejected submissions from cash-starved
agents are elided.  Sessions with human participation never skip.

Batch evaluation and the live service step markets exclusively through
:class:`MarketSession`.  Training runs thousands of bot-only markets and
uses :func:`run_bot_market_compact`, a bookkeeping-light executor that
reproduces the session's trajectory bit for bit (same participation
draws per iteration, same quotes, same accept/reject outcomes) without
building per-trade records; the equivalence is pinned by a property
test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .agents import PoolDecision, PoolEvaluator
from .errors import MarketClosedError
from .market import (
    AssetSide,
    Direction,
    Ledger,
    MarketState,
    MarketStatus,
    Order,
    Outcome,
    TradeRecord,
    TraderKind,
    close_market,
    lmsr_cost,
    lmsr_price_yes,
    price,
    settle,
    step_iteration,
)


class MarketSession:
    """One market plus everything needed to step it to completion."""

    def __init__(
        self,
        market_id: str,
        features: np.ndarray,
        evaluator: PoolEvaluator,
        *,
        b: float,
        max_iterations: int,
        sampling_rate: float,
        agent_rng: np.random.Generator,
        record_trades: bool = True,
        record_history: bool = False,
    ):
        if not 0.0 < sampling_rate <= 1.0:
            raise ValueError("sampling rate must lie in (0,1]")
        self.state = MarketState(market_id=market_id, b=b, max_iterations=max_iterations)
        self.ledger = Ledger()
        self.evaluator = evaluator
        self.features = np.asarray(features, dtype=float)
        self.sampling_rate = sampling_rate
        self.agent_rng = agent_rng
        self.decision: PoolDecision = evaluator.evaluate(self.features)
        for g in evaluator.genomes:
            self.ledger.open_account(g.agent_id, g.endowment)

        self.human_queue: list[Order] = []
        self.next_sequence = 0
        self.records: list[TradeRecord] | None = [] if record_trades else None
        self.history: list[tuple[int, float]] | None = None
        if record_history:
            self.history = [(0, self.price_yes())]
        self.accepted_counts: dict[str, int] = {}
        self.agent_trades = 0
        self.human_trades = 0

    # -- read side -------------------------------------------------------

    def price_yes(self) -> float:
        return price(self.state, AssetSide.WILL_REPLICATE)

    # -- human orders ----------------------------------------------------

    def register_human(self, trader_id: str, cash: float) -> None:
        self.ledger.open_account(trader_id, cash)

    def enqueue_human(self, trader_id: str, side: AssetSide, direction: Direction) -> Order:
        """Queue a human order for the next iteration; returns the stamped order."""
        if self.state.status is not MarketStatus.OPEN:
            raise MarketClosedError(
                f"market {self.state.market_id} is {self.state.status.value}"
            )
        if trader_id not in self.ledger.accounts:
            raise KeyError(f"no account for trader {trader_id!r}")
        order = Order(
            trader_id=trader_id,
            kind=TraderKind.HUMAN,
            side=side,
            direction=direction,
            sequence=self.next_sequence,
        )
        self.next_sequence += 1
        self.human_queue.append(order)
        return order

    # -- stepping --------------------------------------------------------

    def step(self) -> list[TradeRecord]:
        """Advance one iteration: sample agents, decide at the standing
        price, then execute agents first and queued humans FIFO."""
        draws = self.agent_rng.random(len(self.evaluator))
        p_start = self.price_yes()
        stances = self.evaluator.order_sides(self.decision, p_start)
        agent_orders = []
        for i in np.flatnonzero((draws < self.sampling_rate) & (stances != 0)):
            stance = stances[i]
            genome = self.evaluator.genomes[i]
            agent_orders.append(
                Order(
                    trader_id=genome.agent_id,
                    kind=TraderKind.AGENT,
                    side=AssetSide.WILL_REPLICATE if stance > 0 else AssetSide.WILL_NOT_REPLICATE,
                    direction=Direction.BUY,
                )
            )
        drained, self.human_queue = self.human_queue, []
        records = step_iteration(self.state, self.ledger, agent_orders, drained)

        any_accepted = False
        for r in records:
            if r.accepted:
                any_accepted = True
                tid = r.order.trader_id
                self.accepted_counts[tid] = self.accepted_counts.get(tid, 0) + 1
                if r.order.kind is TraderKind.AGENT:
                    self.agent_trades += 1
                else:
                    self.human_trades += 1
        if self.records is not None:
            self.records.extend(records)
        if self.history is not None and any_accepted:
            self.history.append((self.state.iteration, self.price_yes()))
        return records

    # -- bot-only fast-forward ---------------------------------------------

    def absorbed(self) -> bool:
        """True when no agent could place an accepted order at the standing
        price.  Only meaningful while the human queue is empty: with no
        acceptable agent order and no humans, the market state can never
        change again."""
        p = self.price_yes()
        stances = self.evaluator.order_sides(self.decision, p)
        idx = np.flatnonzero(stances)
        if idx.size == 0:
            return True
        base = lmsr_cost(self.state.q_yes, self.state.q_no, self.state.b)
        cost_yes = lmsr_cost(self.state.q_yes + 1.0, self.state.q_no, self.state.b) - base
        cost_no = lmsr_cost(self.state.q_yes, self.state.q_no + 1.0, self.state.b) - base
        for i in idx:
            need = cost_yes if stances[i] > 0 else cost_no
            if self.ledger.accounts[self.evaluator.genomes[i].agent_id].cash >= need:
                return False
        return True

    def run_to_close(self, fast_forward: bool = False) -> float:
        """Step until max iterations (skipping absorbed bot-only stretches
        when allowed), then close.  Returns the final WillReplicate price."""
        need_check = True
        while self.state.iteration < self.state.max_iterations:
            if fast_forward and not self.human_queue and need_check:
                if self.absorbed():
                    self.state.iteration = self.state.max_iterations
                    break
                need_check = False
            records = self.step()
            if any(r.accepted for r in records):
                need_check = True
        final = close_market(self.state)
        if self.history is not None:
            self.history.append((self.state.iteration, final))
        return final

    def settle(self, outcome: Outcome) -> dict[str, float]:
        return settle(self.state, self.ledger, outcome)


def run_bot_market(
    market_id: str,
    features: np.ndarray,
    evaluator: PoolEvaluator,
    *,
    b: float,
    max_iterations: int,
    sampling_rate: float,
    agent_rng: np.random.Generator,
    record_trades: bool = False,
    record_history: bool = False,
) -> MarketSession:
    """Run an agents-only market to close; returns the closed session."""
    session = MarketSession(
        market_id,
        features,
        evaluator,
        b=b,
        max_iterations=max_iterations,
        sampling_rate=sampling_rate,
        agent_rng=agent_rng,
        record_trades=record_trades,
        record_history=record_history,
    )
    session.run_to_close(fast_forward=True)
    return session


@dataclass(frozen=True)
class CompactBotRun:
    """Closing aggregates of a bot-only market, indexed in pool order."""

    final_price_yes: float
    cash: list[float]
    holdings_yes: list[float]
    holdings_no: list[float]
    trade_counts: list[int]
    agent_trades: int

    def payouts(self, outcome: Outcome) -> list[float]:
        """Settlement wealth per agent: cash plus 1 per winning-side share."""
        winning = (
            self.holdings_yes
            if outcome.winning_side is AssetSide.WILL_REPLICATE
            else self.holdings_no
        )
        return [c + 1.0 * h for c, h in zip(self.cash, winning)]


def run_bot_market_compact(
    features: np.ndarray,
    evaluator: PoolEvaluator,
    *,
    b: float,
    max_iterations: int,
    sampling_rate: float,
    agent_rng: np.random.Generator,
) -> CompactBotRun:
    """Run an agents-only market to close without per-trade records.

    Follows :class:`MarketSession` exactly — one participation draw per
    executed iteration, stances at the start-of-iteration price, buys
    executed sequentially in pool order at quoted cost, rejections on
    insufficient cash, and the absorbed fast-forward — but keeps cash
    and holdings in flat lists.  Final prices, wealth, and trade counts
    are bit-identical to running the session; only the TradeRecord and
    Order objects are never built.
    """
    if not 0.0 < sampling_rate <= 1.0:
        raise ValueError("sampling rate must lie in (0,1]")
    decision = evaluator.evaluate(features)
    n = len(evaluator)
    cash = evaluator.endowments.tolist()
    holdings_yes = [0.0] * n
    holdings_no = [0.0] * n
    trade_counts = [0] * n
    agent_trades = 0
    q_yes = 0.0
    q_no = 0.0
    iteration = 0
    need_check = True
    stances = evaluator.order_sides(decision, lmsr_price_yes(q_yes, q_no, b))
    # The loop below inlines lmsr_cost/lmsr_price_yes verbatim; the
    # expressions must stay identical so quotes match the session's bit
    # for bit.
    exp = math.exp
    log = math.log
    # Participation draws are batched in chunks; C-order rows reproduce
    # the exact per-iteration sequence the session draws (the generator
    # may end up advanced past an early close, which nothing reads).
    draw_rows = np.empty((0, n))
    draw_next = 0
    while iteration < max_iterations:
        if need_check:
            # Absorbed check: can any willing agent afford one share?
            idx = stances.nonzero()[0]
            m = max(q_yes, q_no) / b
            base = b * (m + log(exp(q_yes / b - m) + exp(q_no / b - m)))
            m = max(q_yes + 1.0, q_no) / b
            cost_yes = b * (m + log(exp((q_yes + 1.0) / b - m) + exp(q_no / b - m))) - base
            m = max(q_yes, q_no + 1.0) / b
            cost_no = b * (m + log(exp(q_yes / b - m) + exp((q_no + 1.0) / b - m))) - base
            for i in idx.tolist():
                need = cost_yes if stances[i] > 0 else cost_no
                if cash[i] >= need:
                    break
            else:
                iteration = max_iterations
                break
            need_check = False
        if draw_next == len(draw_rows):
            draw_rows = agent_rng.random((min(max_iterations - iteration, 256), n))
            draw_next = 0
        draws = draw_rows[draw_next]
        draw_next += 1
        iteration += 1
        selected = ((draws < sampling_rate) & (stances != 0)).nonzero()[0]
        accepted_any = False
        for i in selected.tolist():
            m = max(q_yes, q_no) / b
            base = b * (m + log(exp(q_yes / b - m) + exp(q_no / b - m)))
            if stances[i] > 0:
                m = max(q_yes + 1.0, q_no) / b
                trade_cost = (
                    b * (m + log(exp((q_yes + 1.0) / b - m) + exp(q_no / b - m))) - base
                )
                if trade_cost > cash[i]:
                    continue
                q_yes += 1.0
                holdings_yes[i] += 1
            else:
                m = max(q_yes, q_no + 1.0) / b
                trade_cost = (
                    b * (m + log(exp(q_yes / b - m) + exp((q_no + 1.0) / b - m))) - base
                )
                if trade_cost > cash[i]:
                    continue
                q_no += 1.0
                holdings_no[i] += 1
            cash[i] += -trade_cost
            trade_counts[i] += 1
            agent_trades += 1
            accepted_any = True
        if accepted_any:
            need_check = True
            stances = evaluator.order_sides(decision, lmsr_price_yes(q_yes, q_no, b))
    return CompactBotRun(
        final_price_yes=lmsr_price_yes(q_yes, q_no, b),
        cash=cash,
        holdings_yes=holdings_yes,
        holdings_no=holdings_no,
        trade_counts=trade_counts,
        agent_trades=agent_trades,
    )
