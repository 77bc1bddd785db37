/** Wire types for the market-service HTTP protocol, plus the view models
 * the UI renders.  Every numeric field here is server-sourced; the client
 * never computes a price, only display rounding. */

export type Side = "WillReplicate" | "WillNotReplicate";
export type OrderDirection = "Buy" | "Sell";
export type MarketStatus = "Open" | "Closed";

// -- requests ---------------------------------------------------------------

export interface MarketSpecBody {
  marketId: string;
  features: number[];
  b?: number;
  maxIterations?: number;
  iterationPeriod?: number;
  title?: string;
}

export interface CreateEventBody {
  eventId: string;
  markets: MarketSpecBody[];
  participants: string[];
  participantEndowment?: number;
  samplingRate?: number;
  minimalActivityRequirement?: number;
  poolPath?: string;
  seed?: number;
}

// -- responses ----------------------------------------------------------------

export interface CreateEventResponse {
  eventId: string;
  tokens: Record<string, string>;
}

export interface QuoteResponse {
  priceYes: number;
  priceNo: number;
  iteration: number;
  status: MarketStatus;
}

export interface HistoryResponse {
  marketId: string;
  points: Array<[number, number]>; // (iteration, priceYes)
}

export interface PortfolioResponse {
  participantId: string;
  cash: number;
  holdings: Record<string, Record<Side, number>>;
  acceptedTrades: number;
}

export interface OrderAckResponse {
  marketId: string;
  sequence: number;
  queuedAtIteration: number;
}

export interface PayoutLine {
  participantId: string;
  payout: number;
  activitySatisfied: boolean;
  acceptedTrades: number;
}

export interface CloseEventResponse {
  selectedMarketId: string;
  payouts: PayoutLine[];
}

/** One row of the trade-log CSV export (kind=trades). */
export interface TradeRow {
  marketId: string;
  traderId: string;
  traderKind: "Agent" | "Human";
  side: Side;
  direction: OrderDirection;
  sequence: number;
  executedAtIteration: number;
  priceYesAfter: number;
  cashDelta: number;
  accepted: boolean;
  rejectReason: string | null;
}

// -- view models ----------------------------------------------------------------

/** Static per-market setup the operator supplies alongside the event
 * (the service's quote reports iteration/status; the total length and
 * clock period come from the event configuration). */
export interface MarketSetup {
  marketId: string;
  title: string;
  summary: string;
  paperUrl?: string;
  maxIterations: number;
  iterationPeriod: number;
}

export type PendingState = "pending" | "confirmed" | "rejected";

export interface PendingOrder {
  marketId: string;
  side: Side;
  direction: OrderDirection;
  sequence: number;
  queuedAtIteration: number;
  state: PendingState;
  /** Displayed YES price at the moment the user confirmed the order. */
  quotedPriceYes?: number;
  /** Server-reported execution price (priceYesAfter of the trade record). */
  executedPriceYes?: number;
  rejectReason?: string;
}

export interface MarketView {
  marketId: string;
  title: string;
  summary: string;
  paperUrl?: string;
  priceYes: number;
  priceNo: number;
  priceHistory: Array<[number, number]>;
  iteration: number;
  iterationsRemaining: number;
  secondsRemaining: number;
  status: MarketStatus;
}

export interface PortfolioView {
  participantId: string;
  cash: number;
  holdings: Record<string, Record<Side, number>>;
  pending: PendingOrder[];
  acceptedTrades: number;
}

export interface SessionState {
  markets: MarketView[];
  portfolio: PortfolioView | null;
  /** Set while the service is unreachable: timestamp of the last good poll. */
  staleSince: number | null;
  lastError: string | null;
  /** Bumps only when a refresh actually changed something renderable. */
  revision: number;
}
