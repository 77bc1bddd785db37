/** Session state and the poll loop.

 * One TradeSession owns everything the UI renders: market views built
 * from quote/history responses, the portfolio, and the pending-order
 * list reconciled against the server's trade log.  Polling is capped at
 * 1 Hz (the service clock ticks at most once per second in live mode)
 * and backs off exponentially while the service is unreachable, keeping
 * a stale marker instead of failing silently.  The client performs no
 * price arithmetic; every number shown comes from a server response. */

import { ServiceClient, ServiceError } from "./client.js";
import type {
  MarketSetup,
  MarketView,
  OrderDirection,
  PendingOrder,
  PortfolioView,
  SessionState,
  Side,
} from "./types.js";

const MIN_POLL_MS = 1000;
const MAX_BACKOFF_MS = 8000;

export interface TradeSessionOptions {
  client: ServiceClient;
  eventId: string;
  token: string;
  markets: MarketSetup[];
  now?: () => number;
}

export class TradeSession {
  readonly client: ServiceClient;
  readonly eventId: string;
  readonly token: string;
  readonly setup: MarketSetup[];

  private readonly now: () => number;
  private state: SessionState;
  private snapshot = "";
  private pending: PendingOrder[] = [];
  private participantId: string | null = null;
  private ordersInFlight = new Set<string>();
  private listeners: Array<(state: SessionState) => void> = [];
  private pollTimer: ReturnType<typeof setTimeout> | null = null;
  private pollBaseMs = MIN_POLL_MS;
  private consecutiveFailures = 0;

  constructor(options: TradeSessionOptions) {
    this.client = options.client;
    this.eventId = options.eventId;
    this.token = options.token;
    this.setup = options.markets;
    this.now = options.now ?? Date.now;
    this.state = {
      markets: [],
      portfolio: null,
      staleSince: null,
      lastError: null,
      revision: 0,
    };
  }

  getState(): SessionState {
    return this.state;
  }

  onChange(listener: (state: SessionState) => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((entry) => entry !== listener);
    };
  }

  /** Fetch quotes, histories, and the portfolio; reconcile pending orders
   * against the trade log when any are unresolved.  Bumps the revision
   * only when something renderable actually changed. */
  async refresh(): Promise<void> {
    try {
      const markets: MarketView[] = [];
      for (const setup of this.setup) {
        const quote = await this.client.getQuote(this.eventId, setup.marketId);
        const history = await this.client.getHistory(this.eventId, setup.marketId);
        const iterationsRemaining = Math.max(0, setup.maxIterations - quote.iteration);
        markets.push({
          marketId: setup.marketId,
          title: setup.title,
          summary: setup.summary,
          paperUrl: setup.paperUrl,
          priceYes: quote.priceYes,
          priceNo: quote.priceNo,
          priceHistory: history.points,
          iteration: quote.iteration,
          iterationsRemaining,
          secondsRemaining: iterationsRemaining * setup.iterationPeriod,
          status: quote.status,
        });
      }
      const portfolioBody = await this.client.getPortfolio(this.eventId, this.token);
      this.participantId = portfolioBody.participantId;

      if (this.pending.some((order) => order.state === "pending")) {
        await this.reconcilePending();
      }

      const portfolio: PortfolioView = {
        participantId: portfolioBody.participantId,
        cash: portfolioBody.cash,
        holdings: portfolioBody.holdings,
        pending: this.pending.map((order) => ({ ...order })),
        acceptedTrades: portfolioBody.acceptedTrades,
      };
      this.commit({
        markets,
        portfolio,
        staleSince: null,
        lastError: null,
        revision: this.state.revision,
      });
      this.consecutiveFailures = 0;
    } catch (error) {
      this.consecutiveFailures += 1;
      this.commit({
        ...this.state,
        staleSince: this.state.staleSince ?? this.now(),
        lastError: error instanceof Error ? error.message : String(error),
      });
      throw error;
    }
  }

  private async reconcilePending(): Promise<void> {
    const rows = await this.client.getTradeLog(this.eventId);
    for (const order of this.pending) {
      if (order.state !== "pending") continue;
      const row = rows.find(
        (candidate) =>
          candidate.traderKind === "Human" &&
          candidate.traderId === this.participantId &&
          candidate.marketId === order.marketId &&
          candidate.sequence === order.sequence,
      );
      if (!row) continue;
      if (row.accepted) {
        order.state = "confirmed";
        order.executedPriceYes = row.priceYesAfter;
      } else {
        order.state = "rejected";
        order.rejectReason = row.rejectReason ?? "Rejected";
      }
    }
  }

  /** Submit one share order.  Returns the acknowledged pending row, or
   * null when an order for this market is already awaiting its ack (the
   * one-in-flight-per-market rule).  Submit-time failures (e.g. a closed
   * market) throw ServiceError for the UI to render verbatim. */
  async placeOrder(
    marketId: string,
    side: Side,
    direction: OrderDirection,
    quotedPriceYes?: number,
  ): Promise<PendingOrder | null> {
    if (this.ordersInFlight.has(marketId)) return null;
    this.ordersInFlight.add(marketId);
    try {
      const ack = await this.client.submitOrder(
        this.eventId,
        marketId,
        this.token,
        side,
        direction,
      );
      const order: PendingOrder = {
        marketId,
        side,
        direction,
        sequence: ack.sequence,
        queuedAtIteration: ack.queuedAtIteration,
        state: "pending",
        quotedPriceYes,
      };
      this.pending.push(order);
      this.commit({
        ...this.state,
        portfolio: this.state.portfolio
          ? { ...this.state.portfolio, pending: this.pending.map((entry) => ({ ...entry })) }
          : null,
      });
      return order;
    } finally {
      this.ordersInFlight.delete(marketId);
    }
  }

  /** Start polling at `intervalMs`, clamped to at least one second.
   * While refreshes fail the delay doubles (capped at 8 s); the first
   * success restores the base cadence. */
  startPolling(intervalMs: number = MIN_POLL_MS): void {
    this.pollBaseMs = Math.max(MIN_POLL_MS, intervalMs);
    if (this.pollTimer !== null) return;
    const tick = async () => {
      try {
        await this.refresh();
      } catch {
        // surfaced via staleSince/lastError; the loop keeps going
      }
      const backoff = Math.min(
        this.pollBaseMs * 2 ** Math.min(this.consecutiveFailures, 3),
        MAX_BACKOFF_MS,
      );
      this.pollTimer = setTimeout(tick, Math.max(this.pollBaseMs, backoff));
    };
    this.pollTimer = setTimeout(tick, this.pollBaseMs);
  }

  stopPolling(): void {
    if (this.pollTimer !== null) {
      clearTimeout(this.pollTimer);
      this.pollTimer = null;
    }
  }

  get pollIntervalMs(): number {
    return this.pollBaseMs;
  }

  private commit(next: SessionState): void {
    const snapshot = JSON.stringify({
      markets: next.markets,
      portfolio: next.portfolio,
      stale: next.staleSince !== null,
      lastError: next.lastError,
    });
    if (snapshot === this.snapshot) return;
    this.snapshot = snapshot;
    this.state = { ...next, revision: this.state.revision + 1 };
    for (const listener of this.listeners) listener(this.state);
  }
}

export { ServiceError };
