/** DOM rendering: four-market dashboard, portfolio panel, pending orders,
 * confirm-before-submit flow, and the stale-data banner.

 * Rendering rules enforced here (and pinned by the jsdom tests):
 * prices show two decimals with NO derived from the rounded YES so the
 * pair always sums to 1.00; the countdown comes only from the
 * server-reported iteration count; every control that would produce a
 * known-invalid order (closed market, zero cash, selling without
 * holdings) is disabled; server rejections render their reason verbatim;
 * executed prices come from the trade record, with a "price moved" note
 * when they differ from the quoted display price. */

import { ServiceError } from "./client.js";
import { formatCash, formatCountdown, formatPricePair, roundPrice } from "./format.js";
import type { TradeSession } from "./state.js";
import type { MarketView, OrderDirection, PendingOrder, Side } from "./types.js";

interface ConfirmRequest {
  side: Side;
  direction: OrderDirection;
}

export class TradeUi {
  private confirm = new Map<string, ConfirmRequest>();
  private orderErrors = new Map<string, string>();
  private unsubscribe: (() => void) | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly session: TradeSession,
  ) {}

  mount(): void {
    this.unsubscribe = this.session.onChange(() => this.render());
    this.render();
  }

  unmount(): void {
    this.unsubscribe?.();
    this.unsubscribe = null;
  }

  render(): void {
    const state = this.session.getState();
    this.root.textContent = "";

    if (state.staleSince !== null) {
      const banner = el("div", "stale-banner");
      const stamp = new Date(state.staleSince).toLocaleTimeString();
      banner.textContent =
        `Service unreachable — showing data last updated at ${stamp}` +
        (state.lastError ? ` (${state.lastError})` : "");
      this.root.appendChild(banner);
    }

    const dashboard = el("div", "markets");
    for (const market of state.markets) {
      dashboard.appendChild(this.marketCard(market));
    }
    this.root.appendChild(dashboard);
    this.root.appendChild(this.portfolioPanel());
  }

  private marketCard(market: MarketView): HTMLElement {
    const card = el("section", "market-card");
    card.dataset.market = market.marketId;
    card.dataset.status = market.status;

    const title = el("h2", "title");
    title.textContent = market.title || market.marketId;
    card.appendChild(title);

    if (market.summary) {
      const summary = el("p", "summary");
      summary.textContent = market.summary;
      card.appendChild(summary);
    }
    if (market.paperUrl) {
      const link = el("a", "paper-link") as HTMLAnchorElement;
      link.href = market.paperUrl;
      link.textContent = "Full paper";
      card.appendChild(link);
    }

    const pair = formatPricePair(market.priceYes);
    const prices = el("div", "prices");
    const yes = el("span", "price-yes");
    yes.textContent = pair.yes;
    const no = el("span", "price-no");
    no.textContent = pair.no;
    prices.append("Will replicate ", yes, " / will not ", no);
    card.appendChild(prices);

    card.appendChild(this.sparkline(market.priceHistory));

    const status = el("div", "status");
    status.textContent =
      market.status === "Closed"
        ? `Closed — final price ${pair.yes}`
        : `Open — ${formatCountdown(market.secondsRemaining)} remaining`;
    card.appendChild(status);

    card.appendChild(this.controls(market));

    const confirming = this.confirm.get(market.marketId);
    if (confirming && market.status === "Open") {
      card.appendChild(this.confirmRow(market, confirming));
    }

    const error = this.orderErrors.get(market.marketId);
    if (error) {
      const note = el("div", "order-error");
      note.textContent = error;
      card.appendChild(note);
    }
    return card;
  }

  private controls(market: MarketView): HTMLElement {
    const portfolio = this.session.getState().portfolio;
    const holdings = portfolio?.holdings[market.marketId];
    const cash = portfolio?.cash ?? 0;
    const closed = market.status === "Closed";

    const controls = el("div", "controls");
    const buttons: Array<[string, Side, OrderDirection, boolean]> = [
      ["buy-yes", "WillReplicate", "Buy", closed || cash <= 0],
      ["sell-yes", "WillReplicate", "Sell", closed || (holdings?.WillReplicate ?? 0) < 1],
      ["buy-no", "WillNotReplicate", "Buy", closed || cash <= 0],
      ["sell-no", "WillNotReplicate", "Sell", closed || (holdings?.WillNotReplicate ?? 0) < 1],
    ];
    for (const [cls, side, direction, disabled] of buttons) {
      const button = el("button", cls) as HTMLButtonElement;
      button.textContent = `${direction} ${side === "WillReplicate" ? "YES" : "NO"}`;
      button.disabled = disabled;
      button.addEventListener("click", () => {
        this.orderErrors.delete(market.marketId);
        this.confirm.set(market.marketId, { side, direction });
        this.render();
      });
      controls.appendChild(button);
    }
    return controls;
  }

  private confirmRow(market: MarketView, request: ConfirmRequest): HTMLElement {
    const row = el("div", "confirm");
    const pair = formatPricePair(market.priceYes);
    const quoted = request.side === "WillReplicate" ? pair.yes : pair.no;
    const text = el("span", "confirm-text");
    text.textContent =
      `${request.direction} one ${request.side} share at the current price ` +
      `${quoted}? Orders are limited to one share each.`;
    row.appendChild(text);

    const accept = el("button", "confirm-accept") as HTMLButtonElement;
    accept.textContent = "Confirm";
    accept.addEventListener("click", () => {
      this.confirm.delete(market.marketId);
      void this.submit(market, request);
    });
    row.appendChild(accept);

    const cancel = el("button", "confirm-cancel") as HTMLButtonElement;
    cancel.textContent = "Cancel";
    cancel.addEventListener("click", () => {
      this.confirm.delete(market.marketId);
      this.render();
    });
    row.appendChild(cancel);
    return row;
  }

  private async submit(market: MarketView, request: ConfirmRequest): Promise<void> {
    try {
      await this.session.placeOrder(
        market.marketId,
        request.side,
        request.direction,
        roundPrice(market.priceYes),
      );
    } catch (error) {
      this.orderErrors.set(
        market.marketId,
        error instanceof ServiceError ? error.message : String(error),
      );
    }
    this.render();
  }

  private portfolioPanel(): HTMLElement {
    const state = this.session.getState();
    const panel = el("section", "portfolio");
    const heading = el("h2");
    heading.textContent = "Portfolio";
    panel.appendChild(heading);

    if (!state.portfolio) {
      const empty = el("p", "portfolio-empty");
      empty.textContent = "Waiting for the first update…";
      panel.appendChild(empty);
      return panel;
    }

    const cash = el("div", "cash");
    cash.textContent = `Cash ${formatCash(state.portfolio.cash)}`;
    panel.appendChild(cash);

    const held = el("ul", "holdings");
    for (const [marketId, sides] of Object.entries(state.portfolio.holdings)) {
      const item = el("li", "holdings-row");
      item.dataset.market = marketId;
      item.textContent =
        `${marketId}: ${Math.max(0, sides.WillReplicate)} will-replicate, ` +
        `${Math.max(0, sides.WillNotReplicate)} will-not-replicate`;
      held.appendChild(item);
    }
    panel.appendChild(held);

    const trades = el("div", "accepted-trades");
    trades.textContent = `Accepted trades: ${state.portfolio.acceptedTrades}`;
    panel.appendChild(trades);

    const pending = el("ul", "pending-orders");
    for (const order of state.portfolio.pending) {
      pending.appendChild(this.pendingRow(order));
    }
    panel.appendChild(pending);
    return panel;
  }

  private pendingRow(order: PendingOrder): HTMLElement {
    const item = el("li", "pending-row");
    item.dataset.state = order.state;
    const name = `${order.marketId} ${order.direction} ${order.side}`;
    if (order.state === "pending") {
      item.textContent = `${name} — queued for iteration ${order.queuedAtIteration}`;
    } else if (order.state === "confirmed") {
      const executed = formatPricePair(order.executedPriceYes ?? 0).yes;
      let text = `${name} — executed at ${executed}`;
      if (
        order.quotedPriceYes !== undefined &&
        executed !== formatPricePair(order.quotedPriceYes).yes
      ) {
        text += ` (price moved from ${formatPricePair(order.quotedPriceYes).yes})`;
      }
      item.textContent = text;
    } else {
      item.textContent = `${name} — rejected: ${order.rejectReason}`;
    }
    return item;
  }

  private sparkline(history: Array<[number, number]>): SVGSVGElement {
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("class", "history");
    svg.setAttribute("viewBox", "0 0 100 40");
    const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
    const last = history[history.length - 1];
    const span = Math.max(1, last ? last[0] : 1);
    line.setAttribute(
      "points",
      history.map(([i, p]) => `${(i / span) * 100},${40 - p * 40}`).join(" "),
    );
    line.setAttribute("fill", "none");
    line.setAttribute("stroke", "currentColor");
    svg.appendChild(line);
    return svg;
  }
}

function el(tag: string, className?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  return node;
}
