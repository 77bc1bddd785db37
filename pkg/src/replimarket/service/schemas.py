"""Request/response bodies for the market service wire protocol."""

from __future__ import annotations

from pydantic import BaseModel, Field


class MarketSpecModel(BaseModel):
    marketId: str
    features: list[float]
    b: float = 10.0
    maxIterations: int = Field(default=7200, ge=1)
    iterationPeriod: float = Field(default=1.0, ge=0.0)
    title: str = ""


class CreateEventRequest(BaseModel):
    eventId: str
    markets: list[MarketSpecModel]
    participants: list[str]
    participantEndowment: float = Field(default=25.0, gt=0.0)
    samplingRate: float = Field(default=0.05, gt=0.0, le=1.0)
    minimalActivityRequirement: int = Field(default=1, ge=0)
    poolPath: str | None = None
    seed: int | None = None


class CreateEventResponse(BaseModel):
    eventId: str
    tokens: dict[str, str]


class QuoteResponse(BaseModel):
    priceYes: float
    priceNo: float
    iteration: int
    status: str


class HistoryResponse(BaseModel):
    marketId: str
    points: list[tuple[int, float]]


class PortfolioResponse(BaseModel):
    participantId: str
    cash: float
    holdings: dict[str, dict[str, int]]
    acceptedTrades: int


class OrderRequest(BaseModel):
    side: str  # WillReplicate | WillNotReplicate
    direction: str  # Buy | Sell


class OrderAckResponse(BaseModel):
    marketId: str
    sequence: int
    queuedAtIteration: int


class CloseEventRequest(BaseModel):
    outcomes: dict[str, str]  # marketId -> Replicated | NotReplicated
    payoutSeed: int = 0


class PayoutLineModel(BaseModel):
    participantId: str
    payout: float
    activitySatisfied: bool
    acceptedTrades: int


class CloseEventResponse(BaseModel):
    selectedMarketId: str
    payouts: list[PayoutLineModel]


class ErrorResponse(BaseModel):
    error: str
    detail: str
