"""Deterministic core of a live trading event.

An event hosts several markets over one agent pool, with every human
participant drawing on a single cash balance shared across the event's
markets.  The engine owns all state and is stepped synchronously — tick
ordering across markets follows per-market iteration deadlines
(``iteration * iterationPeriod``, ties broken by iteration then market
position), so a wall-clock driver and a virtual replay produce the same
global tick sequence.  Human orders are appended to an arrival log with
their assigned iteration; replaying that log through a fresh engine
reproduces prices, ledgers, and stats bit for bit.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..agents import AgentGenome, PoolEvaluator
from ..errors import (
    AlreadyRunningError,
    DimensionMismatchError,
    InvalidTokenError,
    MarketsStillOpenError,
    MissingOutcomeError,
    PoolSchemaMismatchError,
    UnknownMarketError,
)
from ..market import AssetSide, Direction, MarketStatus, Outcome, TradeRecord, close_market
from ..runner import MarketSession

MARKET_STREAM = 0
TOKEN_STREAM = 1


@dataclass
class MarketSpec:
    market_id: str
    features: np.ndarray
    b: float = 10.0
    max_iterations: int = 7200
    iteration_period: float = 1.0
    title: str = ""

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.b <= 0:
            raise ValueError("b must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.iteration_period < 0:
            raise ValueError("iteration_period must be nonnegative")


@dataclass
class EventConfig:
    event_id: str
    markets: list[MarketSpec]
    participants: list[str]
    participant_endowment: float = 25.0
    sampling_rate: float = 0.05
    minimal_activity_requirement: int = 1

    def __post_init__(self):
        if not self.markets:
            raise ValueError("an event needs at least one market")
        ids = [m.market_id for m in self.markets]
        if len(ids) != len(set(ids)):
            raise ValueError("market ids must be unique")
        if len(self.participants) != len(set(self.participants)):
            raise ValueError("participant ids must be unique")
        if self.participant_endowment <= 0:
            raise ValueError("participant endowment must be positive")
        if self.minimal_activity_requirement < 0:
            raise ValueError("minimal activity requirement must be nonnegative")


@dataclass
class OrderLogEntry:
    market_id: str
    participant_id: str
    side: AssetSide
    direction: Direction
    sequence: int
    queued_at_iteration: int

    def to_dict(self) -> dict:
        return {
            "marketId": self.market_id,
            "participantId": self.participant_id,
            "side": self.side.value,
            "direction": self.direction.value,
            "sequence": self.sequence,
            "queuedAtIteration": self.queued_at_iteration,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OrderLogEntry":
        return cls(
            market_id=d["marketId"],
            participant_id=d["participantId"],
            side=AssetSide(d["side"]),
            direction=Direction(d["direction"]),
            sequence=int(d["sequence"]),
            queued_at_iteration=int(d["queuedAtIteration"]),
        )


@dataclass
class OrderAck:
    market_id: str
    sequence: int
    queued_at_iteration: int


@dataclass
class PayoutLine:
    participant_id: str
    payout: float
    activity_satisfied: bool
    accepted_trades: int


@dataclass
class PayoutReport:
    selected_market_id: str
    lines: list[PayoutLine] = field(default_factory=list)


class EventEngine:
    """All state and stepping for one event.  Strictly synchronous; the
    HTTP layer supplies the clock and never interleaves two calls."""

    def __init__(self, config: EventConfig, pool: list[AgentGenome], seed: int):
        dim = config.markets[0].features.shape[0]
        for m in config.markets:
            if m.features.shape != (dim,):
                raise DimensionMismatchError("all event markets must share one feature dimension")
        evaluator = PoolEvaluator(pool)
        if evaluator.weights.shape[1] != dim:
            raise PoolSchemaMismatchError(
                f"pool expects {evaluator.weights.shape[1]} features, event supplies {dim}"
            )
        self.config = config
        self.seed = seed
        self.sessions: dict[str, MarketSession] = {}
        for idx, spec in enumerate(config.markets):
            session = MarketSession(
                spec.market_id,
                spec.features,
                evaluator,
                b=spec.b,
                max_iterations=spec.max_iterations,
                sampling_rate=config.sampling_rate,
                agent_rng=np.random.default_rng([seed, MARKET_STREAM, idx]),
                record_trades=True,
                record_history=True,
            )
            for pid in config.participants:
                session.register_human(pid, config.participant_endowment)
            self.sessions[spec.market_id] = session

        # Shared per-event human cash; session ledgers are synced to it
        # around every tick.
        self.cash: dict[str, float] = {
            pid: config.participant_endowment for pid in config.participants
        }
        token_rng = np.random.default_rng([seed, TOKEN_STREAM])
        self.tokens: dict[str, str] = {
            pid: token_rng.bytes(16).hex() for pid in config.participants
        }
        self._by_token = {tok: pid for pid, tok in self.tokens.items()}
        self.order_log: list[OrderLogEntry] = []
        self.started = False
        self.payout_report: PayoutReport | None = None
        # Tick schedule: (deadline seconds, iteration, market position).
        self._heap: list[tuple[float, int, int]] = [
            (spec.iteration_period, 1, idx) for idx, spec in enumerate(self.config.markets)
        ]
        heapq.heapify(self._heap)

    # -- lookups ---------------------------------------------------------

    def _session(self, market_id: str) -> MarketSession:
        try:
            return self.sessions[market_id]
        except KeyError:
            raise UnknownMarketError(f"no market {market_id!r} in event {self.config.event_id!r}")

    def participant_for(self, token: str) -> str:
        try:
            return self._by_token[token]
        except KeyError:
            raise InvalidTokenError("unrecognized session token")

    def any_open(self) -> bool:
        return any(s.state.status is MarketStatus.OPEN for s in self.sessions.values())

    # -- clock -----------------------------------------------------------

    def start(self) -> None:
        if self.started:
            raise AlreadyRunningError(f"event {self.config.event_id!r} is already running")
        self.started = True

    def peek_deadline(self) -> float | None:
        """Seconds-from-open of the next due tick, or None when all closed."""
        return self._heap[0][0] if self._heap else None

    def tick_next(self) -> list[TradeRecord]:
        """Advance the next-due market by one iteration."""
        if not self._heap:
            return []
        _, iteration, idx = heapq.heappop(self._heap)
        spec = self.config.markets[idx]
        records = self._tick(spec.market_id)
        session = self.sessions[spec.market_id]
        if session.state.status is MarketStatus.OPEN:
            heapq.heappush(
                self._heap, (spec.iteration_period * (iteration + 1), iteration + 1, idx)
            )
        return records

    def _tick(self, market_id: str) -> list[TradeRecord]:
        session = self._session(market_id)
        for pid in self.config.participants:
            session.ledger.accounts[pid].cash = self.cash[pid]
        records = session.step()
        for pid in self.config.participants:
            self.cash[pid] = session.ledger.accounts[pid].cash
        if session.state.iteration >= session.state.max_iterations:
            final = close_market(session.state)
            if session.history is not None:
                session.history.append((session.state.iteration, final))
        return records

    # -- orders ------------------------------------------------------------

    def submit_order(
        self, market_id: str, token: str, side: AssetSide, direction: Direction
    ) -> OrderAck:
        pid = self.participant_for(token)
        session = self._session(market_id)
        order = session.enqueue_human(pid, side, direction)
        entry = OrderLogEntry(
            market_id=market_id,
            participant_id=pid,
            side=side,
            direction=direction,
            sequence=order.sequence,
            queued_at_iteration=session.state.iteration + 1,
        )
        self.order_log.append(entry)
        return OrderAck(
            market_id=market_id,
            sequence=order.sequence,
            queued_at_iteration=entry.queued_at_iteration,
        )

    # -- reads -------------------------------------------------------------

    def quote(self, market_id: str) -> dict:
        session = self._session(market_id)
        if session.state.status is MarketStatus.OPEN:
            price_yes = session.price_yes()
        else:
            price_yes = session.state.final_price_yes
        return {
            "priceYes": price_yes,
            "priceNo": 1.0 - price_yes,
            "iteration": session.state.iteration,
            "status": session.state.status.value,
        }

    def history(self, market_id: str) -> list[tuple[int, float]]:
        return list(self._session(market_id).history or [])

    def portfolio(self, token: str) -> dict:
        pid = self.participant_for(token)
        holdings = {}
        accepted = 0
        for market_id, session in self.sessions.items():
            acct = session.ledger.accounts[pid]
            holdings[market_id] = {
                AssetSide.WILL_REPLICATE.value: acct.holdings[AssetSide.WILL_REPLICATE],
                AssetSide.WILL_NOT_REPLICATE.value: acct.holdings[AssetSide.WILL_NOT_REPLICATE],
            }
            accepted += session.accepted_counts.get(pid, 0)
        return {
            "participantId": pid,
            "cash": self.cash[pid],
            "holdings": holdings,
            "acceptedTrades": accepted,
        }

    # -- close ---------------------------------------------------------------

    def close_event(self, outcomes: dict[str, Outcome], payout_seed: int) -> PayoutReport:
        if self.payout_report is not None:
            return self.payout_report
        open_markets = [
            mid for mid, s in self.sessions.items() if s.state.status is MarketStatus.OPEN
        ]
        if open_markets:
            raise MarketsStillOpenError(f"markets still open: {sorted(open_markets)}")
        missing = set(self.sessions) - set(outcomes)
        if missing:
            raise MissingOutcomeError(f"no outcome supplied for markets: {sorted(missing)}")

        # Sync the shared cash into every ledger so settlement statements
        # are coherent, then settle each market against its outcome.
        settled: dict[str, dict[str, float]] = {}
        for market_id, session in self.sessions.items():
            for pid in self.config.participants:
                session.ledger.accounts[pid].cash = self.cash[pid]
            settled[market_id] = session.settle(outcomes[market_id])

        order = [m.market_id for m in self.config.markets]
        selected = order[int(np.random.default_rng(payout_seed).integers(0, len(order)))]
        winning = outcomes[selected].winning_side
        lines = []
        for pid in self.config.participants:
            accepted = sum(s.accepted_counts.get(pid, 0) for s in self.sessions.values())
            satisfied = accepted >= self.config.minimal_activity_requirement
            holdings_value = float(
                self.sessions[selected].ledger.accounts[pid].holdings[winning]
            )
            payout = self.cash[pid] + holdings_value if satisfied else 0.0
            lines.append(
                PayoutLine(
                    participant_id=pid,
                    payout=payout,
                    activity_satisfied=satisfied,
                    accepted_trades=accepted,
                )
            )
        self.payout_report = PayoutReport(selected_market_id=selected, lines=lines)
        return self.payout_report

    # -- stats export -----------------------------------------------------------

    def export_prices_csv(self) -> str:
        lines = ["marketId,iteration,priceYes"]
        for spec in self.config.markets:
            for iteration, price_yes in self.sessions[spec.market_id].history or []:
                lines.append(f"{spec.market_id},{iteration},{price_yes!r}")
        return "\n".join(lines) + "\n"

    def export_trades_csv(self) -> str:
        lines = ["marketId," + TradeRecord.CSV_HEADER]
        for spec in self.config.markets:
            for record in self.sessions[spec.market_id].records or []:
                lines.append(f"{spec.market_id},{record.to_csv_row()}")
        return "\n".join(lines) + "\n"

    def export_payouts_csv(self) -> str:
        if self.payout_report is None:
            raise MarketsStillOpenError("payouts are available after close-event")
        lines = ["participantId,payout,activitySatisfied,acceptedTrades,selectedMarketId"]
        for line in self.payout_report.lines:
            lines.append(
                f"{line.participant_id},{line.payout!r},"
                f"{int(line.activity_satisfied)},{line.accepted_trades},"
                f"{self.payout_report.selected_market_id}"
            )
        return "\n".join(lines) + "\n"

    def export_order_log(self) -> str:
        return "".join(
            json.dumps(e.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"
            for e in self.order_log
        )


def load_order_log(text: str) -> list[OrderLogEntry]:
    return [
        OrderLogEntry.from_dict(json.loads(line))
        for line in text.splitlines()
        if line.strip()
    ]


def replay_event(
    config: EventConfig,
    pool: list[AgentGenome],
    seed: int,
    order_log: list[OrderLogEntry],
) -> EventEngine:
    """Re-run an event from its recorded order arrivals, virtual-time.

    Ticks follow the same deadline order as the live clock; each logged
    order is injected just before its market reaches the assigned
    iteration, reproducing sequences, trades, prices, and ledgers.
    """
    engine = EventEngine(config, pool, seed)
    engine.start()
    pending: dict[tuple[str, int], list[OrderLogEntry]] = {}
    for entry in order_log:
        pending.setdefault((entry.market_id, entry.queued_at_iteration), []).append(entry)
    for entries in pending.values():
        entries.sort(key=lambda e: e.sequence)
    while engine._heap:
        _, iteration, idx = engine._heap[0]
        market_id = engine.config.markets[idx].market_id
        for entry in pending.pop((market_id, iteration), []):
            token = engine.tokens[entry.participant_id]
            engine.submit_order(entry.market_id, token, entry.side, entry.direction)
        engine.tick_next()
    return engine


def save_order_log(path: str | Path, engine: EventEngine) -> None:
    Path(path).write_text(engine.export_order_log(), encoding="utf-8")
