/** Typed HTTP client for the market service.  Thin by design: one method
 * per endpoint, JSON in/out, the session token in the x-session-token
 * header, and CSV parsing for the trade-log export.  No retries here —
 * the polling layer owns backoff. */

import type {
  CloseEventResponse,
  CreateEventBody,
  CreateEventResponse,
  HistoryResponse,
  OrderAckResponse,
  OrderDirection,
  PortfolioResponse,
  QuoteResponse,
  Side,
  TradeRow,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly errorKind: string,
    detail: string,
  ) {
    super(`${errorKind}: ${detail}`);
    this.name = "ServiceError";
  }
}

export class ServiceClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let kind = `HTTP ${response.status}`;
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { error?: string; detail?: string };
        kind = body.error ?? kind;
        detail = body.detail ?? detail;
      } catch {
        // non-JSON error body: keep the status line
      }
      throw new ServiceError(response.status, kind, detail);
    }
    return response;
  }

  private async getJson<T>(path: string, token?: string): Promise<T> {
    const headers: Record<string, string> = {};
    if (token) headers["x-session-token"] = token;
    const response = await this.request(path, { headers });
    return (await response.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown, token?: string): Promise<T> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (token) headers["x-session-token"] = token;
    const response = await this.request(path, {
      method: "POST",
      headers,
      body: JSON.stringify(body),
    });
    return (await response.json()) as T;
  }

  createEvent(body: CreateEventBody): Promise<CreateEventResponse> {
    return this.postJson("/events", body);
  }

  openEvent(eventId: string): Promise<{ eventId: string; status: string }> {
    return this.postJson(`/events/${eventId}/open`, {});
  }

  getQuote(eventId: string, marketId: string): Promise<QuoteResponse> {
    return this.getJson(`/events/${eventId}/markets/${marketId}/quote`);
  }

  getHistory(eventId: string, marketId: string): Promise<HistoryResponse> {
    return this.getJson(`/events/${eventId}/markets/${marketId}/history`);
  }

  getPortfolio(eventId: string, token: string): Promise<PortfolioResponse> {
    return this.getJson(`/events/${eventId}/portfolio`, token);
  }

  submitOrder(
    eventId: string,
    marketId: string,
    token: string,
    side: Side,
    direction: OrderDirection,
  ): Promise<OrderAckResponse> {
    return this.postJson(
      `/events/${eventId}/markets/${marketId}/orders`,
      { side, direction },
      token,
    );
  }

  closeEvent(
    eventId: string,
    outcomes: Record<string, "Replicated" | "NotReplicated">,
    payoutSeed = 0,
  ): Promise<CloseEventResponse> {
    return this.postJson(`/events/${eventId}/close`, { outcomes, payoutSeed });
  }

  async getTradeLog(eventId: string): Promise<TradeRow[]> {
    const response = await this.request(`/events/${eventId}/stats-export?kind=trades`);
    return parseTradeCsv(await response.text());
  }
}

/** Parse the trade-log CSV export.  Fields never contain commas (ids are
 * operator-chosen slugs, numbers use repr formatting), so a plain split
 * is exact. */
export function parseTradeCsv(text: string): TradeRow[] {
  const lines = text.split("\n").filter((line) => line.length > 0);
  const rows: TradeRow[] = [];
  for (const line of lines.slice(1)) {
    const parts = line.split(",");
    if (parts.length !== 11) {
      throw new Error(`malformed trade row (${parts.length} fields): ${line}`);
    }
    rows.push({
      marketId: parts[0]!,
      traderId: parts[1]!,
      traderKind: parts[2] as TradeRow["traderKind"],
      side: parts[3] as TradeRow["side"],
      direction: parts[4] as TradeRow["direction"],
      sequence: Number(parts[5]),
      executedAtIteration: Number(parts[6]),
      priceYesAfter: Number(parts[7]),
      cashDelta: Number(parts[8]),
      accepted: parts[9] === "1",
      rejectReason: parts[10] === "" ? null : parts[10]!,
    });
  }
  return rows;
}
