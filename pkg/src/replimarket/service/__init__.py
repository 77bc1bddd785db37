"""Live market service: deterministic event engine plus HTTP wiring."""

from .app import create_app
from .engine import (
    EventConfig,
    EventEngine,
    MarketSpec,
    OrderAck,
    OrderLogEntry,
    PayoutLine,
    PayoutReport,
    load_order_log,
    replay_event,
    save_order_log,
)

__all__ = [
    "EventConfig",
    "EventEngine",
    "MarketSpec",
    "OrderAck",
    "OrderLogEntry",
    "PayoutLine",
    "PayoutReport",
    "create_app",
    "load_order_log",
    "replay_event",
    "save_order_log",
]
