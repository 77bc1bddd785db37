// @vitest-environment jsdom
import { describe, expect, it } from "vitest";

import type { ServiceClient } from "../src/client.js";
import { TradeSession } from "../src/state.js";
import { TradeUi } from "../src/ui.js";
import type {
  MarketSetup,
  PortfolioResponse,
  QuoteResponse,
} from "../src/types.js";

const SETUP: MarketSetup[] = ["m1", "m2", "m3", "m4"].map((marketId, index) => ({
  marketId,
  title: `Study ${index + 1}`,
  summary: "Replication of a published effect.",
  paperUrl: "https://example.org/paper.pdf",
  maxIterations: 7200,
  iterationPeriod: 1.0,
}));

interface Fixture {
  quotes: Record<string, QuoteResponse>;
  portfolio: PortfolioResponse;
  session: TradeSession;
  ui: TradeUi;
  root: HTMLElement;
  submitted: Array<{ marketId: string; side: string; direction: string }>;
  failSubmit: { error?: Error };
}

function makeFixture(marketIds: string[] = ["m1", "m2", "m3", "m4"]): Fixture {
  const quotes: Record<string, QuoteResponse> = {};
  for (const id of marketIds) {
    quotes[id] = { priceYes: 0.5, priceNo: 0.5, iteration: 0, status: "Open" };
  }
  const holdings: PortfolioResponse["holdings"] = {};
  for (const id of marketIds) {
    holdings[id] = { WillReplicate: 0, WillNotReplicate: 0 };
  }
  const fixture: Partial<Fixture> = {
    quotes,
    portfolio: { participantId: "h1", cash: 25.0, holdings, acceptedTrades: 0 },
    submitted: [],
    failSubmit: {},
  };
  const client = {
    getQuote: async (_event: string, marketId: string) => fixture.quotes![marketId],
    getHistory: async (_event: string, marketId: string) => ({ marketId, points: [] }),
    getPortfolio: async () => fixture.portfolio,
    getTradeLog: async () => [],
    submitOrder: async (_e: string, marketId: string, _t: string, side: string, direction: string) => {
      if (fixture.failSubmit!.error) throw fixture.failSubmit!.error;
      fixture.submitted!.push({ marketId, side, direction });
      return { marketId, sequence: fixture.submitted!.length - 1, queuedAtIteration: 1 };
    },
  } as unknown as ServiceClient;

  const session = new TradeSession({
    client,
    eventId: "e1",
    token: "tok",
    markets: SETUP.filter((entry) => marketIds.includes(entry.marketId)),
  });
  const root = document.createElement("div");
  document.body.replaceChildren(root);
  const ui = new TradeUi(root, session);
  ui.mount();
  return { ...(fixture as Fixture), session, ui, root, quotes, submitted: fixture.submitted! };
}

function card(root: HTMLElement, marketId: string): HTMLElement {
  const node = root.querySelector<HTMLElement>(`[data-market="${marketId}"]`);
  if (!node) throw new Error(`no card for ${marketId}`);
  return node;
}

/** Let the submit → placeOrder → render promise chain settle. */
function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

describe("market dashboard", () => {
  it("renders one card per market, all at 0.50 / 0.50 on a fresh event", async () => {
    const fixture = makeFixture();
    await fixture.session.refresh();
    const cards = fixture.root.querySelectorAll(".market-card");
    expect(cards).toHaveLength(4);
    for (const node of cards) {
      expect(node.querySelector(".price-yes")?.textContent).toBe("0.50");
      expect(node.querySelector(".price-no")?.textContent).toBe("0.50");
    }
  });

  it("shows two-decimal prices that sum to 1.00 after rounding", async () => {
    const fixture = makeFixture(["m1"]);
    fixture.quotes.m1 = { priceYes: 0.731058, priceNo: 0.268942, iteration: 9, status: "Open" };
    await fixture.session.refresh();
    const node = card(fixture.root, "m1");
    expect(node.querySelector(".price-yes")?.textContent).toBe("0.73");
    expect(node.querySelector(".price-no")?.textContent).toBe("0.27");
  });

  it("derives the countdown from server iterations, not wall clock", async () => {
    const fixture = makeFixture(["m1"]);
    fixture.quotes.m1 = { priceYes: 0.5, priceNo: 0.5, iteration: 7080, status: "Open" };
    await fixture.session.refresh();
    // 120 iterations remaining at 1 s each
    expect(card(fixture.root, "m1").querySelector(".status")?.textContent).toContain("2:00");
  });

  it("disables every control and shows the final price once closed", async () => {
    const fixture = makeFixture(["m1"]);
    fixture.quotes.m1 = { priceYes: 0.81, priceNo: 0.19, iteration: 7200, status: "Closed" };
    await fixture.session.refresh();
    const node = card(fixture.root, "m1");
    expect(node.dataset.status).toBe("Closed");
    expect(node.querySelector(".status")?.textContent).toContain("final price 0.81");
    const buttons = node.querySelectorAll<HTMLButtonElement>(".controls button");
    expect(buttons).toHaveLength(4);
    for (const button of buttons) expect(button.disabled).toBe(true);
  });

  it("disables selling a side with no holdings while buys stay live", async () => {
    const fixture = makeFixture(["m1"]);
    fixture.portfolio.holdings.m1 = { WillReplicate: 1, WillNotReplicate: 0 };
    await fixture.session.refresh();
    const node = card(fixture.root, "m1");
    expect(node.querySelector<HTMLButtonElement>(".sell-yes")?.disabled).toBe(false);
    expect(node.querySelector<HTMLButtonElement>(".sell-no")?.disabled).toBe(true);
    expect(node.querySelector<HTMLButtonElement>(".buy-yes")?.disabled).toBe(false);
  });

  it("disables buys when the participant is out of cash", async () => {
    const fixture = makeFixture(["m1"]);
    fixture.portfolio.cash = 0;
    fixture.portfolio.holdings.m1 = { WillReplicate: 1, WillNotReplicate: 0 };
    await fixture.session.refresh();
    const node = card(fixture.root, "m1");
    expect(node.querySelector<HTMLButtonElement>(".buy-yes")?.disabled).toBe(true);
    expect(node.querySelector<HTMLButtonElement>(".buy-no")?.disabled).toBe(true);
    expect(node.querySelector<HTMLButtonElement>(".sell-yes")?.disabled).toBe(false);
  });

  it("shows the stale banner with a last-updated stamp when polls fail", async () => {
    const fixture = makeFixture(["m1"]);
    await fixture.session.refresh();
    fixture.quotes.m1 = undefined as unknown as QuoteResponse; // next poll throws
    await fixture.session.refresh().catch(() => {});
    const banner = fixture.root.querySelector(".stale-banner");
    expect(banner?.textContent).toContain("Service unreachable");
    // the cards are still rendered from the last good data
    expect(fixture.root.querySelectorAll(".market-card")).toHaveLength(1);
  });
});

describe("order confirm flow", () => {
  it("submits only after the confirm dialog, quoting price and share limit", async () => {
    const fixture = makeFixture(["m1"]);
    await fixture.session.refresh();
    const node = card(fixture.root, "m1");
    node.querySelector<HTMLButtonElement>(".buy-yes")!.click();

    const confirmText = card(fixture.root, "m1").querySelector(".confirm-text");
    expect(confirmText?.textContent).toContain("0.50");
    expect(confirmText?.textContent).toContain("one share");
    expect(fixture.submitted).toHaveLength(0);

    card(fixture.root, "m1").querySelector<HTMLButtonElement>(".confirm-accept")!.click();
    await flush();
    expect(fixture.submitted).toEqual([
      { marketId: "m1", side: "WillReplicate", direction: "Buy" },
    ]);
  });

  it("cancelling the dialog submits nothing", async () => {
    const fixture = makeFixture(["m1"]);
    await fixture.session.refresh();
    card(fixture.root, "m1").querySelector<HTMLButtonElement>(".buy-no")!.click();
    card(fixture.root, "m1").querySelector<HTMLButtonElement>(".confirm-cancel")!.click();
    expect(fixture.submitted).toHaveLength(0);
    expect(card(fixture.root, "m1").querySelector(".confirm")).toBeNull();
  });

  it("renders a submit-time rejection verbatim", async () => {
    const fixture = makeFixture(["m1"]);
    await fixture.session.refresh();
    fixture.failSubmit.error = new Error("MarketClosedError: market m1 is closed");
    card(fixture.root, "m1").querySelector<HTMLButtonElement>(".buy-yes")!.click();
    card(fixture.root, "m1").querySelector<HTMLButtonElement>(".confirm-accept")!.click();
    await flush();
    expect(card(fixture.root, "m1").querySelector(".order-error")?.textContent).toContain(
      "market m1 is closed",
    );
  });
});

describe("portfolio panel", () => {
  it("shows cash, holdings, and accepted trades", async () => {
    const fixture = makeFixture(["m1"]);
    fixture.portfolio.cash = 23.95;
    fixture.portfolio.holdings.m1 = { WillReplicate: 2, WillNotReplicate: 0 };
    fixture.portfolio.acceptedTrades = 2;
    await fixture.session.refresh();
    const panel = fixture.root.querySelector(".portfolio")!;
    expect(panel.querySelector(".cash")?.textContent).toBe("Cash $23.95");
    expect(panel.querySelector(".holdings-row")?.textContent).toContain("2 will-replicate");
    expect(panel.querySelector(".accepted-trades")?.textContent).toContain("2");
  });

  it("marks an executed pending order with the server price and a price-moved note", async () => {
    const fixture = makeFixture(["m1"]);
    await fixture.session.refresh();
    await fixture.session.placeOrder("m1", "WillReplicate", "Buy", 0.5);

    const client = fixture.session.client as unknown as {
      getTradeLog: () => Promise<unknown>;
    };
    client.getTradeLog = async () => [
      {
        marketId: "m1", traderId: "h1", traderKind: "Human",
        side: "WillReplicate", direction: "Buy", sequence: 0,
        executedAtIteration: 1, priceYesAfter: 0.52, cashDelta: -0.51,
        accepted: true, rejectReason: null,
      },
    ];
    await fixture.session.refresh();
    const row = fixture.root.querySelector<HTMLElement>(".pending-row")!;
    expect(row.dataset.state).toBe("confirmed");
    expect(row.textContent).toContain("executed at 0.52");
    expect(row.textContent).toContain("price moved from 0.50");
  });
});
