"""Shared fixtures: the published benchmark table and small reusable pools.

REFERENCE_ROWS holds the twelve resolved replication markets (three events
of four markets each) that every scoring test checks against: final
will-replicate prices for the hybrid and agents-only runs of the same
study, the revealed outcome, and the published prediction labels and
absolute errors.  The five agents-only markets in which no agent ever
traded closed at the no-trade default of 0.5 and carry no prediction.

Also hosts the long-hand Wilcoxon oracles shared by the statistics and
acceptance suites (ranking by explicit sort, exact tails by enumerating
all 2^n sign assignments) and a terminal-summary hook that prints one
pass/fail line per acceptance criterion.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np
import pytest

from replimarket import (
    AgentGenome,
    Outcome,
    PredictionLabel,
    default_schema,
    fit_normalization,
    generate_synthetic,
    normalize,
)


@dataclass(frozen=True)
class ReferenceRow:
    market_id: str
    outcome: Outcome
    hybrid_price: float
    hybrid_prediction: PredictionLabel
    hybrid_ae: float
    artificial_price: float
    artificial_prediction: PredictionLabel | None  # None: no agent traded
    artificial_ae: float


_R = Outcome.REPLICATED
_NR = Outcome.NOT_REPLICATED
_C = PredictionLabel.CORRECT
_NC = PredictionLabel.NOT_CORRECT

REFERENCE_ROWS = [
    ReferenceRow("E1M1", _R, 0.66, _C, 0.34, 0.41, _NC, 0.59),
    ReferenceRow("E1M2", _R, 0.36, _NC, 0.64, 0.50, None, 0.50),
    ReferenceRow("E1M3", _R, 0.64, _C, 0.36, 0.52, _C, 0.48),
    ReferenceRow("E1M4", _NR, 0.72, _NC, 0.72, 0.50, None, 0.50),
    ReferenceRow("E2M1", _R, 0.38, _NC, 0.62, 0.41, _NC, 0.59),
    ReferenceRow("E2M2", _R, 0.58, _C, 0.42, 0.50, None, 0.50),
    ReferenceRow("E2M3", _R, 0.80, _C, 0.20, 0.52, _C, 0.48),
    ReferenceRow("E2M4", _NR, 0.47, _C, 0.47, 0.50, None, 0.50),
    ReferenceRow("E3M1", _R, 0.61, _C, 0.39, 0.50, None, 0.50),
    ReferenceRow("E3M2", _R, 0.47, _NC, 0.53, 0.46, _NC, 0.54),
    ReferenceRow("E3M3", _NR, 0.76, _NC, 0.76, 0.86, _NC, 0.86),
    ReferenceRow("E3M4", _R, 0.49, _NC, 0.51, 0.42, _NC, 0.58),
]


@pytest.fixture(scope="session")
def reference_rows() -> list[ReferenceRow]:
    return REFERENCE_ROWS


def make_genome(
    agent_id: str,
    weights,
    bias: float = 0.0,
    mask=None,
    exemplars=None,
    similarity_threshold: float = 0.0,
    margin: float = 0.05,
    endowment: float = 25.0,
) -> AgentGenome:
    """Hand-built genome with every gate wide open unless overridden."""
    weights = np.asarray(weights, dtype=float)
    if mask is None:
        mask = np.ones(weights.shape[0], dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)
    if exemplars is None:
        exemplars = [np.ones(weights.shape[0], dtype=float)]
    return AgentGenome(
        agent_id=agent_id,
        weights=weights,
        bias=bias,
        mask=mask,
        exemplars=[np.asarray(e, dtype=float) for e in exemplars],
        similarity_threshold=similarity_threshold,
        margin=margin,
        endowment=endowment,
    )


@pytest.fixture(scope="session")
def small_training_set():
    """Thirty easy synthetic studies, normalized, all with outcomes."""
    schema = default_schema()
    records = generate_synthetic(30, difficulty=0.1, rng=np.random.default_rng(901))
    fitted = fit_normalization(records, schema)
    return [normalize(r, fitted) for r in records], fitted


def average_ranks(values: list[float]) -> list[float]:
    """Average ranks (1-based), computed by sorting long-hand."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        shared = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = shared
        i = j + 1
    return ranks


def enumerated_tail(ranks: list[float], w_observed: float, lower: bool) -> float:
    """Exact null tail of W+ by enumerating every sign assignment."""
    total = 2 ** len(ranks)
    hits = 0
    for signs in product((False, True), repeat=len(ranks)):
        w = sum(r for r, positive in zip(ranks, signs) if positive)
        if (w <= w_observed) if lower else (w >= w_observed):
            hits += 1
    return hits / total


# -- acceptance reporting ----------------------------------------------------

_acceptance_outcomes: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if report.failed:
        _acceptance_outcomes[name] = "FAILED"
    elif report.when == "call" and report.passed:
        _acceptance_outcomes[name] = "PASSED"
    elif report.skipped:
        _acceptance_outcomes[name] = "SKIPPED"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance_outcomes.items():
        terminalreporter.write_line(f"{name}: {outcome}")
