/** Browser entry point.  Reads the session coordinates from the query
 * string (?base=…&event=…&token=…&setup=markets.json), loads the
 * operator-supplied market setup file (titles, summaries, clock config),
 * and mounts the dashboard with the 1 Hz poll loop. */

import { ServiceClient } from "./client.js";
import { TradeSession } from "./state.js";
import { TradeUi } from "./ui.js";
import type { MarketSetup } from "./types.js";

async function main(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");

  const params = new URLSearchParams(window.location.search);
  const base = params.get("base") ?? window.location.origin;
  const eventId = params.get("event");
  const token = params.get("token");
  const setupUrl = params.get("setup");
  if (!eventId || !token || !setupUrl) {
    root.textContent =
      "Missing session parameters: expected ?event=…&token=…&setup=markets.json";
    return;
  }

  const response = await fetch(setupUrl);
  if (!response.ok) {
    root.textContent = `Could not load market setup from ${setupUrl}`;
    return;
  }
  const markets = (await response.json()) as MarketSetup[];

  const session = new TradeSession({
    client: new ServiceClient(base),
    eventId,
    token,
    markets,
  });
  const ui = new TradeUi(root, session);
  ui.mount();
  await session.refresh().catch(() => {
    // the stale banner is already showing; polling will retry
  });
  session.startPolling(1000);
}

void main();
