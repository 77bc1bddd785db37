"""HTTP layer over the event engine.

One FastAPI app hosts many events.  Every handler runs on the single
asyncio loop and engine calls never await mid-mutation, so reads always
observe a consistent snapshot.  Each opened event gets one clock task
that advances whichever market's iteration deadline is next due,
sleeping the remaining wall time (iteration period 0 yields instead of
sleeping, which keeps order submission responsive in test mode).
"""

from __future__ import annotations

import asyncio
import logging
from pathlib import Path

from fastapi import FastAPI, Header, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from ..agents import AgentGenome, load_pool
from ..dataset import FeatureSchema, default_schema
from ..errors import (
    AlreadyRunningError,
    DuplicateEventIdError,
    InvalidTokenError,
    MarketClosedError,
    MarketsStillOpenError,
    MissingOutcomeError,
    PoolSchemaMismatchError,
    ReplimarketError,
    UnknownEventError,
    UnknownMarketError,
)
from ..market import AssetSide, Direction, Outcome
from .engine import EventConfig, EventEngine, MarketSpec
from .schemas import (
    CloseEventRequest,
    CloseEventResponse,
    CreateEventRequest,
    CreateEventResponse,
    HistoryResponse,
    OrderAckResponse,
    OrderRequest,
    PayoutLineModel,
    PortfolioResponse,
    QuoteResponse,
)

logger = logging.getLogger(__name__)

TOKEN_HEADER = "x-session-token"

_STATUS_CODES: list[tuple[type[Exception], int]] = [
    (DuplicateEventIdError, 409),
    (AlreadyRunningError, 409),
    (MarketsStillOpenError, 409),
    (MarketClosedError, 409),
    (UnknownEventError, 404),
    (UnknownMarketError, 404),
    (InvalidTokenError, 401),
    (PoolSchemaMismatchError, 400),
    (MissingOutcomeError, 400),
]


class _HostedEvent:
    def __init__(self, engine: EventEngine):
        self.engine = engine
        self.clock_task: asyncio.Task | None = None


async def _run_clock(engine: EventEngine) -> None:
    loop = asyncio.get_running_loop()
    base = loop.time()
    while True:
        deadline = engine.peek_deadline()
        if deadline is None:
            return
        delay = base + deadline - loop.time()
        if delay > 0:
            await asyncio.sleep(delay)
        else:
            await asyncio.sleep(0)  # yield so queued requests interleave
        engine.tick_next()


def create_app(
    pool_path: str | Path | None = None,
    schema: FeatureSchema | None = None,
    seed: int = 0,
    default_pool: list[AgentGenome] | None = None,
) -> FastAPI:
    """Build the service app.

    `pool_path` names the default trained pool used when a create-event
    request doesn't carry its own; `default_pool` injects one directly
    (tests).  `seed` feeds token minting and per-market agent sampling
    for events that don't override it.
    """
    schema = schema or default_schema()
    app = FastAPI(title="replimarket service")
    events: dict[str, _HostedEvent] = {}

    def load_event_pool(request_pool_path: str | None) -> list[AgentGenome]:
        if request_pool_path:
            return load_pool(request_pool_path, schema.feature_names)
        if default_pool is not None:
            return default_pool
        if pool_path:
            return load_pool(pool_path, schema.feature_names)
        raise PoolSchemaMismatchError("no agent pool configured; supply poolPath")

    def get_event(event_id: str) -> _HostedEvent:
        try:
            return events[event_id]
        except KeyError:
            raise UnknownEventError(f"no event {event_id!r}")

    @app.exception_handler(ReplimarketError)
    async def on_domain_error(request: Request, exc: ReplimarketError):
        status = 400
        for klass, code in _STATUS_CODES:
            if isinstance(exc, klass):
                status = code
                break
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.post("/events", response_model=CreateEventResponse)
    async def create_event(body: CreateEventRequest):
        if body.eventId in events:
            raise DuplicateEventIdError(f"event {body.eventId!r} already exists")
        pool = load_event_pool(body.poolPath)
        config = EventConfig(
            event_id=body.eventId,
            markets=[
                MarketSpec(
                    market_id=m.marketId,
                    features=m.features,
                    b=m.b,
                    max_iterations=m.maxIterations,
                    iteration_period=m.iterationPeriod,
                    title=m.title,
                )
                for m in body.markets
            ],
            participants=body.participants,
            participant_endowment=body.participantEndowment,
            sampling_rate=body.samplingRate,
            minimal_activity_requirement=body.minimalActivityRequirement,
        )
        engine = EventEngine(config, pool, seed if body.seed is None else body.seed)
        events[body.eventId] = _HostedEvent(engine)
        logger.info("created event %s with %d markets", body.eventId, len(config.markets))
        return CreateEventResponse(eventId=body.eventId, tokens=engine.tokens)

    @app.post("/events/{event_id}/open")
    async def open_event(event_id: str):
        hosted = get_event(event_id)
        hosted.engine.start()
        hosted.clock_task = asyncio.create_task(_run_clock(hosted.engine))
        return {"eventId": event_id, "status": "running"}

    @app.get("/events/{event_id}/markets/{market_id}/quote", response_model=QuoteResponse)
    async def quote(event_id: str, market_id: str):
        return QuoteResponse(**get_event(event_id).engine.quote(market_id))

    @app.get("/events/{event_id}/markets/{market_id}/history", response_model=HistoryResponse)
    async def history(event_id: str, market_id: str):
        points = get_event(event_id).engine.history(market_id)
        return HistoryResponse(marketId=market_id, points=points)

    @app.get("/events/{event_id}/portfolio", response_model=PortfolioResponse)
    async def portfolio(
        event_id: str, x_session_token: str = Header(default="", alias=TOKEN_HEADER)
    ):
        return PortfolioResponse(**get_event(event_id).engine.portfolio(x_session_token))

    @app.post(
        "/events/{event_id}/markets/{market_id}/orders", response_model=OrderAckResponse
    )
    async def submit_order(
        event_id: str,
        market_id: str,
        body: OrderRequest,
        x_session_token: str = Header(default="", alias=TOKEN_HEADER),
    ):
        try:
            side = AssetSide(body.side)
            direction = Direction(body.direction)
        except ValueError as exc:
            return JSONResponse(
                status_code=422, content={"error": "ValidationError", "detail": str(exc)}
            )
        ack = get_event(event_id).engine.submit_order(
            market_id, x_session_token, side, direction
        )
        return OrderAckResponse(
            marketId=ack.market_id,
            sequence=ack.sequence,
            queuedAtIteration=ack.queued_at_iteration,
        )

    @app.post("/events/{event_id}/close", response_model=CloseEventResponse)
    async def close_event(event_id: str, body: CloseEventRequest):
        hosted = get_event(event_id)
        try:
            outcomes = {mid: Outcome(v) for mid, v in body.outcomes.items()}
        except ValueError as exc:
            return JSONResponse(
                status_code=422, content={"error": "ValidationError", "detail": str(exc)}
            )
        report = hosted.engine.close_event(outcomes, body.payoutSeed)
        if hosted.clock_task is not None:
            hosted.clock_task.cancel()
        return CloseEventResponse(
            selectedMarketId=report.selected_market_id,
            payouts=[
                PayoutLineModel(
                    participantId=line.participant_id,
                    payout=line.payout,
                    activitySatisfied=line.activity_satisfied,
                    acceptedTrades=line.accepted_trades,
                )
                for line in report.lines
            ],
        )

    @app.get("/events/{event_id}/stats-export", response_class=PlainTextResponse)
    async def stats_export(event_id: str, kind: str = "prices"):
        engine = get_event(event_id).engine
        if kind == "prices":
            return PlainTextResponse(engine.export_prices_csv(), media_type="text/csv")
        if kind == "trades":
            return PlainTextResponse(engine.export_trades_csv(), media_type="text/csv")
        if kind == "payouts":
            return PlainTextResponse(engine.export_payouts_csv(), media_type="text/csv")
        if kind == "orders":
            return PlainTextResponse(
                engine.export_order_log(), media_type="application/jsonl"
            )
        return JSONResponse(
            status_code=422,
            content={"error": "ValidationError", "detail": f"unknown export kind {kind!r}"},
        )

    return app
