/** Display formatting.  The one arithmetic rule: round the YES price to
 * two decimals and derive NO from the rounded value, so the two displayed
 * probabilities always sum to exactly 1.00. */

export function roundPrice(value: number): number {
  return Math.round(value * 100) / 100;
}

export interface PricePair {
  yes: string;
  no: string;
}

export function formatPricePair(priceYes: number): PricePair {
  const yesCents = Math.round(priceYes * 100);
  return {
    yes: (yesCents / 100).toFixed(2),
    no: ((100 - yesCents) / 100).toFixed(2),
  };
}

export function formatCash(value: number): string {
  // Ledger cash is never negative; clamp display so float dust like
  // -1e-16 can't render as "-0.00".
  return `$${Math.max(0, value).toFixed(2)}`;
}

export function formatCountdown(secondsRemaining: number): string {
  const total = Math.max(0, Math.ceil(secondsRemaining));
  const minutes = Math.floor(total / 60);
  const seconds = total % 60;
  return `${minutes}:${String(seconds).padStart(2, "0")}`;
}
