"""Batch market evaluation: run test markets, score predictions, compare runs.

A closed market's final WillReplicate price is the prediction for its
study.  Scoring follows the price-versus-half rule (price above 0.5
predicts replication), with a market that never traded and sits at
exactly 0.5 counted as making no prediction.  Absolute error is the
distance between the final price and the outcome indicator.

Paired run comparisons use the Wilcoxon signed-rank test under the
normal approximation (average ranks for ties, zero differences dropped,
no continuity correction).  Differences are rounded to 12 decimals
before ranking so that ties between decimally-equal errors survive
floating-point noise; see :func:`wilcoxon_signed_rank`.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from math import sqrt
from pathlib import Path

import numpy as np
from scipy.stats import norm, rankdata

from .agents import AgentGenome, PoolEvaluator
from .dataset import PaperRecord
from .errors import TooFewPairsError, UnpairedResultsError
from .market import Direction, Outcome, TradeRecord
from .runner import MarketSession, run_bot_market
from .scripted import ScriptedTrader

AGENT_STREAM = 0
SCRIPTED_STREAM = 1


class PredictionLabel(Enum):
    CORRECT = "Correct"
    NOT_CORRECT = "NotCorrect"
    NO_PREDICTION = "NoPrediction"


@dataclass
class MarketResult:
    market_id: str
    final_price_yes: float
    outcome: Outcome | None
    prediction: PredictionLabel | None
    absolute_error: float | None
    agent_trades: int
    human_trades: int

    CSV_HEADER = "marketId,finalPriceYes,outcome,prediction,absoluteError,agentTrades,humanTrades"


@dataclass
class EvalRun:
    """A scored market run plus its raw trade log and price history."""

    result: MarketResult
    records: list[TradeRecord] = field(default_factory=list)
    history: list[tuple[int, float]] = field(default_factory=list)


@dataclass
class RunConfig:
    """Knobs for batch test-market runs (training has its own config)."""

    b: float = 10.0
    max_iterations: int = 7200
    sampling_rate: float = 0.05
    human_endowment: float = 25.0

    def __post_init__(self):
        if self.b <= 0.0:
            raise ValueError("b must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not 0.0 < self.sampling_rate <= 1.0:
            raise ValueError("sampling_rate must lie in (0,1]")
        if self.human_endowment <= 0.0:
            raise ValueError("human_endowment must be positive")


# -- scoring -------------------------------------------------------------------

def classify(final_price_yes: float, outcome: Outcome, trade_count: int) -> PredictionLabel:
    """Score a final price against the revealed outcome.

    Above 0.5 predicts replication, below predicts non-replication; a
    price of exactly 0.5 with zero trades is no prediction at all, and
    with trades it counts against the market (tie rule).
    """
    if not 0.0 <= final_price_yes <= 1.0:
        raise ValueError("final price must lie in [0,1]")
    if final_price_yes == 0.5:
        return PredictionLabel.NO_PREDICTION if trade_count == 0 else PredictionLabel.NOT_CORRECT
    predicted_replication = final_price_yes > 0.5
    actual = outcome is Outcome.REPLICATED
    return PredictionLabel.CORRECT if predicted_replication == actual else PredictionLabel.NOT_CORRECT


def absolute_error(final_price_yes: float, outcome: Outcome) -> float:
    return abs(final_price_yes - outcome.indicator)


def score_market(
    market_id: str,
    final_price_yes: float,
    outcome: Outcome | None,
    agent_trades: int,
    human_trades: int,
) -> MarketResult:
    if outcome is None:
        return MarketResult(market_id, final_price_yes, None, None, None, agent_trades, human_trades)
    return MarketResult(
        market_id=market_id,
        final_price_yes=final_price_yes,
        outcome=outcome,
        prediction=classify(final_price_yes, outcome, agent_trades + human_trades),
        absolute_error=absolute_error(final_price_yes, outcome),
        agent_trades=agent_trades,
        human_trades=human_trades,
    )


# -- batch runs ----------------------------------------------------------------

def _session_result(session: MarketSession, outcome: Outcome | None) -> EvalRun:
    result = score_market(
        session.state.market_id,
        session.state.final_price_yes,
        outcome,
        session.agent_trades,
        session.human_trades,
    )
    return EvalRun(
        result=result,
        records=list(session.records or []),
        history=list(session.history or []),
    )


def run_artificial_market(
    paper: PaperRecord,
    pool: list[AgentGenome],
    config: RunConfig,
    seed: int,
    record_trades: bool = True,
    record_history: bool = False,
) -> EvalRun:
    """Run an agents-only market over one study and score its final price."""
    evaluator = PoolEvaluator(pool)
    session = run_bot_market(
        paper.claim_id,
        paper.features,
        evaluator,
        b=config.b,
        max_iterations=config.max_iterations,
        sampling_rate=config.sampling_rate,
        agent_rng=np.random.default_rng([seed, AGENT_STREAM]),
        record_trades=record_trades,
        record_history=record_history,
    )
    return _session_result(session, paper.outcome)


def run_scripted_hybrid(
    paper: PaperRecord,
    pool: list[AgentGenome],
    scripted: list[ScriptedTrader],
    config: RunConfig,
    seed: int,
    record_trades: bool = True,
    record_history: bool = False,
) -> EvalRun:
    """Run a market with scripted traders in the human queue.

    Agent-side randomness comes from the same stream as
    :func:`run_artificial_market`, and each scripted trader draws from
    its own stream, so a run with no scripted traders reproduces the
    artificial run bit for bit.
    """
    evaluator = PoolEvaluator(pool)
    session = MarketSession(
        paper.claim_id,
        paper.features,
        evaluator,
        b=config.b,
        max_iterations=config.max_iterations,
        sampling_rate=config.sampling_rate,
        agent_rng=np.random.default_rng([seed, AGENT_STREAM]),
        record_trades=record_trades,
        record_history=record_history,
    )
    if not scripted:
        session.run_to_close(fast_forward=True)
        return _session_result(session, paper.outcome)

    trader_rngs = [
        np.random.default_rng([seed, SCRIPTED_STREAM, i]) for i in range(len(scripted))
    ]
    for trader in scripted:
        session.register_human(trader.trader_id, config.human_endowment)

    previous_price: float | None = None
    while session.state.iteration < session.state.max_iterations:
        price_now = session.price_yes()
        for trader, rng in zip(scripted, trader_rngs):
            u = rng.random()  # drawn every iteration to keep streams aligned
            if u >= trader.arrival_probability:
                continue
            side = trader.decide_side(price_now, previous_price)
            if side is not None:
                session.enqueue_human(trader.trader_id, side, Direction.BUY)
        session.step()
        previous_price = price_now
    session.run_to_close()
    return _session_result(session, paper.outcome)


# -- comparison ----------------------------------------------------------------

@dataclass
class PairedRow:
    market_id: str
    ae_a: float
    ae_b: float
    prediction_a: PredictionLabel
    prediction_b: PredictionLabel


@dataclass
class Summary:
    mean_ae_a: float
    mean_ae_b: float
    rows: list[PairedRow]
    count_correct_a: int
    count_correct_b: int
    count_a_lower: int
    count_flipped: int  # markets correct in A but not correct in B


def summarize(results_a: list[MarketResult], results_b: list[MarketResult]) -> Summary:
    """Pair two result sets by market id and compare their errors."""
    by_id_b = {r.market_id: r for r in results_b}
    ids_a = {r.market_id for r in results_a}
    if ids_a != set(by_id_b) or len(ids_a) != len(results_a):
        raise UnpairedResultsError("result sets must cover identical market ids exactly once")
    rows = []
    for a in results_a:
        b = by_id_b[a.market_id]
        if a.absolute_error is None or b.absolute_error is None:
            raise UnpairedResultsError(f"market {a.market_id} is unscored (no outcome)")
        rows.append(PairedRow(a.market_id, a.absolute_error, b.absolute_error, a.prediction, b.prediction))
    return Summary(
        mean_ae_a=float(np.mean([r.ae_a for r in rows])),
        mean_ae_b=float(np.mean([r.ae_b for r in rows])),
        rows=rows,
        count_correct_a=sum(r.prediction_a is PredictionLabel.CORRECT for r in rows),
        count_correct_b=sum(r.prediction_b is PredictionLabel.CORRECT for r in rows),
        count_a_lower=sum(r.ae_a < r.ae_b for r in rows),
        count_flipped=sum(
            r.prediction_a is PredictionLabel.CORRECT
            and r.prediction_b is PredictionLabel.NOT_CORRECT
            for r in rows
        ),
    )


@dataclass
class WilcoxonResult:
    z: float
    p_two_sided: float
    w_plus: float
    n: int


DIFF_DECIMALS = 12


def wilcoxon_signed_rank(errors_a: list[float], errors_b: list[float]) -> WilcoxonResult:
    """Paired signed-rank test under the normal approximation.

    Differences are rounded to 12 decimals (the price tolerance used
    throughout) before zero-dropping and ranking, so ties between
    decimally-equal values are ranked as ties rather than split by
    floating-point noise.  Ties take average ranks; no continuity
    correction is applied.  Needs at least five nonzero differences.
    """
    if len(errors_a) != len(errors_b):
        raise UnpairedResultsError("paired samples must have equal length")
    diffs = [round(a - b, DIFF_DECIMALS) for a, b in zip(errors_a, errors_b)]
    nonzero = [d for d in diffs if d != 0.0]
    n = len(nonzero)
    if n < 5:
        raise TooFewPairsError(f"need at least 5 nonzero differences, found {n}")
    ranks = rankdata([abs(d) for d in nonzero])
    w_plus = float(sum(r for d, r in zip(nonzero, ranks) if d > 0))
    mean = n * (n + 1) / 4.0
    sd = sqrt(n * (n + 1) * (2 * n + 1) / 24.0)
    z = (w_plus - mean) / sd
    return WilcoxonResult(z=z, p_two_sided=float(2.0 * norm.sf(abs(z))), w_plus=w_plus, n=n)


# -- result CSV ------------------------------------------------------------------

def save_results(path: str | Path, results: list[MarketResult]) -> None:
    """Write results as CSV; floats use shortest round-trip repr so a
    load reproduces every field bit-exactly."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MarketResult.CSV_HEADER.split(","))
    for r in results:
        writer.writerow(
            [
                r.market_id,
                repr(r.final_price_yes),
                r.outcome.value if r.outcome else "",
                r.prediction.value if r.prediction else "",
                repr(r.absolute_error) if r.absolute_error is not None else "",
                r.agent_trades,
                r.human_trades,
            ]
        )
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def load_results(path: str | Path) -> list[MarketResult]:
    rows = list(csv.reader(io.StringIO(Path(path).read_text(encoding="utf-8"))))
    if not rows or rows[0] != MarketResult.CSV_HEADER.split(","):
        raise UnpairedResultsError(f"{path}: unrecognized result CSV header")
    results = []
    for row in rows[1:]:
        if not row:
            continue
        market_id, price_s, outcome_s, pred_s, ae_s, agent_s, human_s = row
        results.append(
            MarketResult(
                market_id=market_id,
                final_price_yes=float(price_s),
                outcome=Outcome(outcome_s) if outcome_s else None,
                prediction=PredictionLabel(pred_s) if pred_s else None,
                absolute_error=float(ae_s) if ae_s else None,
                agent_trades=int(agent_s),
                human_trades=int(human_s),
            )
        )
    return results


def save_trade_log(path: str | Path, records: list[TradeRecord]) -> None:
    lines = [TradeRecord.CSV_HEADER] + [r.to_csv_row() for r in records]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
