"""Thin HTTP client for the market service.

Wraps the wire protocol one method per endpoint; raises
:class:`ServiceClientError` carrying the server's error payload on any
non-2xx response.  Used by the CLI's ``client`` subcommands and by test
drivers; batch training/evaluation work with the library directly.
"""

from __future__ import annotations

import httpx

TOKEN_HEADER = "x-session-token"


class ServiceClientError(RuntimeError):
    def __init__(self, status_code: int, error: str, detail: str):
        super().__init__(f"{status_code} {error}: {detail}")
        self.status_code = status_code
        self.error = error
        self.detail = detail


class ServiceClient:
    def __init__(self, base_url: str, client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        self._client = client or httpx.Client(base_url=self.base_url, timeout=30.0)

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _check(self, response: httpx.Response) -> dict | str:
        if response.status_code >= 400:
            try:
                payload = response.json()
                raise ServiceClientError(
                    response.status_code,
                    payload.get("error", "Error"),
                    payload.get("detail", response.text),
                )
            except ValueError:
                raise ServiceClientError(response.status_code, "Error", response.text)
        content_type = response.headers.get("content-type", "")
        if "json" in content_type:
            return response.json()
        return response.text

    def create_event(self, body: dict) -> dict:
        return self._check(self._client.post("/events", json=body))

    def open_event(self, event_id: str) -> dict:
        return self._check(self._client.post(f"/events/{event_id}/open"))

    def quote(self, event_id: str, market_id: str) -> dict:
        return self._check(self._client.get(f"/events/{event_id}/markets/{market_id}/quote"))

    def history(self, event_id: str, market_id: str) -> dict:
        return self._check(self._client.get(f"/events/{event_id}/markets/{market_id}/history"))

    def portfolio(self, event_id: str, token: str) -> dict:
        return self._check(
            self._client.get(f"/events/{event_id}/portfolio", headers={TOKEN_HEADER: token})
        )

    def submit_order(
        self, event_id: str, market_id: str, token: str, side: str, direction: str
    ) -> dict:
        return self._check(
            self._client.post(
                f"/events/{event_id}/markets/{market_id}/orders",
                json={"side": side, "direction": direction},
                headers={TOKEN_HEADER: token},
            )
        )

    def close_event(self, event_id: str, outcomes: dict[str, str], payout_seed: int = 0) -> dict:
        return self._check(
            self._client.post(
                f"/events/{event_id}/close",
                json={"outcomes": outcomes, "payoutSeed": payout_seed},
            )
        )

    def stats_export(self, event_id: str, kind: str) -> str:
        return self._check(
            self._client.get(f"/events/{event_id}/stats-export", params={"kind": kind})
        )
