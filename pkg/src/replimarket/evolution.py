"""Genetic training: run markets over resolved studies, keep profitable agents.

One training cycle runs a bot-only market over a study with a known
replication outcome, settles agent wealth against it, then evolves the
pool: agents whose settled wealth beat their starting endowment by more
than the profit threshold survive unchanged and produce mutated
offspring in proportion to their profit; everyone else is culled.  If
nobody profits the pool restarts from fresh random genomes.  Offspring
adopt the just-traded study as an exemplar (keeping the nearest 16), so
lineages accumulate a memory of the market types they profit in.

Training iterates study markets in a seed-shuffled order each epoch and
reports per-epoch mean absolute error, survivor counts, and wealth.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agents import (
    MAX_EXEMPLARS,
    MAX_MARGIN,
    AgentGenome,
    PoolEvaluator,
    random_genome,
)
from .dataset import PaperRecord
from .errors import DimensionMismatchError, EmptyTrainingSetError, MissingOutcomeError
from .runner import run_bot_market_compact

logger = logging.getLogger(__name__)


@dataclass
class TrainingConfig:
    population_size: int = 200
    epochs: int = 30
    iterations_per_training_market: int = 500
    sampling_rate: float = 0.05
    mutation_sigma: float = 0.1
    mask_flip_probability: float = 0.05
    profit_threshold: float = 0.0
    rng_seed: int = 0
    b: float = 10.0
    endowment: float = 25.0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        if self.iterations_per_training_market < 1:
            raise ValueError("iterations_per_training_market must be positive")
        if not 0.0 < self.sampling_rate <= 1.0:
            raise ValueError("sampling_rate must lie in (0,1]")
        if self.mutation_sigma <= 0.0:
            raise ValueError("mutation_sigma must be positive")
        if not 0.0 <= self.mask_flip_probability <= 1.0:
            raise ValueError("mask_flip_probability must lie in [0,1]")
        if self.b <= 0.0:
            raise ValueError("b must be positive")
        if self.endowment <= 0.0:
            raise ValueError("endowment must be positive")


@dataclass(slots=True)
class AgentWealth:
    final_wealth: float
    participated: bool


WealthReport = dict[str, AgentWealth]


@dataclass
class TrainingMarketResult:
    report: WealthReport
    final_price_yes: float
    agent_trades: int


@dataclass
class EpochMetrics:
    epoch: int
    mean_training_ae: float
    survivors: float  # mean survivor count per evolve step this epoch
    mean_wealth: float

    CSV_HEADER = "epoch,meanTrainingAE,survivors,meanWealth"

    def to_csv_row(self) -> str:
        return (
            f"{self.epoch},{self.mean_training_ae!r},{self.survivors!r},{self.mean_wealth!r}"
        )


@dataclass
class TrainingRun:
    pool: list[AgentGenome]
    metrics: list[EpochMetrics] = field(default_factory=list)


class IdAllocator:
    """Hands out unique ascending agent ids across a whole training run."""

    def __init__(self, start: int = 0):
        self.n = start

    def next(self) -> str:
        agent_id = f"a{self.n:08d}"
        self.n += 1
        return agent_id


def init_population(
    config: TrainingConfig,
    training_features: np.ndarray,
    rng: np.random.Generator,
    alloc: IdAllocator | None = None,
) -> list[AgentGenome]:
    """Draw a fresh population seeded with exemplars from the training set."""
    training_features = np.asarray(training_features, dtype=float)
    if training_features.ndim != 2 or training_features.shape[0] == 0:
        raise EmptyTrainingSetError("training set must be a nonempty (n, dim) feature matrix")
    if alloc is None:
        alloc = IdAllocator()
    dim = training_features.shape[1]
    return [
        random_genome(alloc.next(), dim, rng, training_features, endowment=config.endowment)
        for _ in range(config.population_size)
    ]


def mutate(
    genome: AgentGenome,
    config: TrainingConfig,
    rng: np.random.Generator,
    new_id: str,
    new_exemplar: np.ndarray | None = None,
) -> AgentGenome:
    """Perturb a parent genome into an offspring with a fresh id.

    Weights and bias take Normal(0, sigma) noise; each mask bit flips
    with the configured probability (keeping the parent mask if every
    bit would flip off); threshold and margin take Normal(0, sigma/10)
    noise, clamped to their ranges.  When `new_exemplar` is given it is
    added to the inherited exemplars; if that exceeds capacity, the ones
    most similar to the new exemplar are retained.
    """
    dim = genome.dim
    # One batched draw covers weights, bias, threshold, and margin noise
    # (scaled here; Generator.normal applies the same loc+scale*z mapping).
    z = rng.standard_normal(dim + 3)
    u = rng.random(dim)
    if new_exemplar is not None:
        new_exemplar = np.asarray(new_exemplar, dtype=float).copy()
    return _mutate_with_noise(genome, config, new_id, z, u, new_exemplar)


def _mutate_with_noise(
    genome: AgentGenome,
    config: TrainingConfig,
    new_id: str,
    z: np.ndarray,
    u: np.ndarray,
    new_exemplar: np.ndarray | None,
) -> AgentGenome:
    """Mutation body with noise supplied by the caller.

    `z` holds dim+3 standard normals (weights, bias, threshold, margin),
    `u` dim uniforms (mask flips).  The evolve step draws noise for a
    whole brood in two Generator calls and feeds rows through here.
    `new_exemplar` must already be a float64 vector; it is stored by
    reference (exemplar rows are shared and never written in place).
    """
    dim = genome.dim
    sigma = config.mutation_sigma
    weights = genome.weights + sigma * z[:dim]
    bias = genome.bias + sigma * float(z[dim])
    threshold = min(max(genome.similarity_threshold + sigma / 10 * float(z[dim + 1]), 0.0), 1.0)
    margin = min(max(genome.margin + sigma / 10 * float(z[dim + 2]), 0.0), MAX_MARGIN)
    flips = u < config.mask_flip_probability
    if flips.any():
        mask = np.where(flips, 1.0 - genome.mask, genome.mask)
        if not (mask != 0.0).any():
            mask = genome.mask
    else:
        # No flips: share the parent's mask (mask arrays are never written
        # in place).
        mask = genome.mask
    # Exemplar arrays are never written after creation, so offspring share
    # the parent's rows rather than copying them.
    exemplars = list(genome.exemplars)
    if new_exemplar is not None:
        new_arr = new_exemplar
        if new_arr.shape != genome.weights.shape:
            raise DimensionMismatchError(
                f"exemplar dim {new_arr.shape} != weights dim {genome.weights.shape}"
            )
        exemplars.append(new_arr)
        if len(exemplars) > MAX_EXEMPLARS:
            # Evict the exemplar least similar to the newcomer (ties: keep
            # earlier ones), ranking by the same mapped similarities as
            # mapped_similarity.  Mask bits are 0/1, so (a*m).(b*m) =
            # a.(b*m) and |a*m|^2 = (a*a).m; with the parent's packed rows
            # and their squares cached this is two matrix-vector products.
            new_m = new_arr * mask
            nm_sq = float(new_m @ new_m)
            packed = getattr(genome, "_packed_exemplars", None)
            if packed is not None and packed[0].shape[1] == dim:
                block = packed[0]  # eviction implies the parent was full
                sq = getattr(genome, "_sq_exemplars", None)
                if sq is None:
                    sq = block * block
                    genome._sq_exemplars = sq
                dots = np.empty(MAX_EXEMPLARS + 1)
                dots[:MAX_EXEMPLARS] = block @ new_m
                dots[MAX_EXEMPLARS] = nm_sq
                norms_sq = np.empty(MAX_EXEMPLARS + 1)
                norms_sq[:MAX_EXEMPLARS] = sq @ mask
                norms_sq[MAX_EXEMPLARS] = nm_sq
            else:
                stacked = np.asarray(exemplars)
                dots = stacked @ new_m
                norms_sq = (stacked * stacked) @ mask
            denom = np.sqrt(norms_sq * nm_sq)
            if denom.all():
                sims = (dots / denom + 1.0) / 2.0
            else:
                sims = np.divide(dots, denom, out=np.zeros_like(dots), where=denom > 0.0)
                sims = np.where(denom > 0.0, (sims + 1.0) / 2.0, 0.0)
            drop = len(sims) - 1 - int(sims[::-1].argmin())
            del exemplars[drop]
    return AgentGenome.from_validated_parts(
        agent_id=new_id,
        weights=weights,
        bias=bias,
        mask=mask,
        exemplars=exemplars,
        similarity_threshold=threshold,
        margin=margin,
        endowment=genome.endowment,
    )


def run_training_market(
    paper: PaperRecord,
    pool: list[AgentGenome],
    config: TrainingConfig,
    rng: np.random.Generator,
    evaluator: PoolEvaluator | None = None,
) -> TrainingMarketResult:
    """Run one bot-only market over a resolved study and settle wealth.

    `evaluator` may supply an already-packed evaluator for `pool` (the
    training loop reuses survivor rows between markets); when omitted one
    is built here.
    """
    if paper.outcome is None:
        raise MissingOutcomeError(f"study {paper.claim_id} has no replication outcome")
    if evaluator is None:
        evaluator = PoolEvaluator(pool)
    run = run_bot_market_compact(
        paper.features,
        evaluator,
        b=config.b,
        max_iterations=config.iterations_per_training_market,
        sampling_rate=config.sampling_rate,
        agent_rng=rng,
    )
    payouts = run.payouts(paper.outcome)
    report = {
        g.agent_id: AgentWealth(
            final_wealth=payouts[i],
            participated=run.trade_counts[i] > 0,
        )
        for i, g in enumerate(evaluator.genomes)
    }
    return TrainingMarketResult(
        report=report,
        final_price_yes=run.final_price_yes,
        agent_trades=run.agent_trades,
    )


def evolve(
    pool: list[AgentGenome],
    report: WealthReport,
    config: TrainingConfig,
    rng: np.random.Generator,
    *,
    alloc: IdAllocator,
    exemplar_source: np.ndarray,
    market_features: np.ndarray | None = None,
) -> list[AgentGenome]:
    """Produce the next generation from settled wealth.

    Survivors (wealth above endowment + profit threshold) stay unmutated;
    the rest of the population is refilled with offspring whose parents
    are drawn with probability proportional to profit.  With no survivors
    the pool restarts from fresh random genomes drawn like the initial
    population (`exemplar_source` supplies their exemplars).
    """
    missing = [g.agent_id for g in pool if g.agent_id not in report]
    if missing:
        raise KeyError(f"wealth report missing agents: {missing[:3]}...")
    survivors = [
        g
        for g in pool
        if report[g.agent_id].final_wealth > g.endowment + config.profit_threshold
    ]
    if not survivors:
        exemplar_source = np.asarray(exemplar_source, dtype=float)
        dim = pool[0].dim if pool else exemplar_source.shape[1]
        return [
            random_genome(alloc.next(), dim, rng, exemplar_source, endowment=config.endowment)
            for _ in range(config.population_size)
        ]
    offspring_count = config.population_size - len(survivors)
    profits = np.array(
        [
            report[g.agent_id].final_wealth - g.endowment - config.profit_threshold
            for g in survivors
        ]
    )
    next_pool = list(survivors)
    if offspring_count > 0:
        dims = {g.dim for g in survivors}
        if len(dims) != 1:
            raise DimensionMismatchError(f"pool mixes feature dimensions: {sorted(dims)}")
        dim = dims.pop()
        new_ex = None
        if market_features is not None:
            # One shared copy serves the whole brood; exemplar rows are
            # never written, so sharing is safe.
            new_ex = np.asarray(market_features, dtype=float).copy()
        # Fitness-proportional draw via CDF inversion (profits are strictly
        # positive here, so the CDF is strictly increasing and u < cdf[-1]).
        cdf = np.cumsum(profits)
        u = rng.random(offspring_count) * cdf[-1]
        parents = np.searchsorted(cdf, u, side="right")
        # Mutation noise for the whole brood in two draws; row j is
        # offspring j's noise, in the same order a per-offspring draw
        # would consume it.
        z_rows = rng.standard_normal((offspring_count, dim + 3))
        u_rows = rng.random((offspring_count, dim))
        for j, parent_idx in enumerate(parents):
            next_pool.append(
                _mutate_with_noise(
                    survivors[int(parent_idx)],
                    config,
                    alloc.next(),
                    z_rows[j],
                    u_rows[j],
                    new_ex,
                )
            )
    return next_pool


def train_pool(training_set: list[PaperRecord], config: TrainingConfig) -> TrainingRun:
    """Full training loop: epochs of seed-shuffled study markets, evolving
    the pool after each market."""
    if not training_set:
        raise EmptyTrainingSetError("training set is empty")
    for r in training_set:
        if r.outcome is None:
            raise MissingOutcomeError(f"study {r.claim_id} has no replication outcome")
    rng = np.random.default_rng(config.rng_seed)
    features = np.stack([r.features for r in training_set])
    alloc = IdAllocator()
    pool = init_population(config, features, rng, alloc)
    evaluator: PoolEvaluator | None = None
    metrics: list[EpochMetrics] = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(training_set))
        abs_errors, survivor_counts, wealth_means = [], [], []
        for idx in order:
            paper = training_set[int(idx)]
            evaluator = (
                PoolEvaluator.from_previous(evaluator, pool)
                if evaluator is not None
                else PoolEvaluator(pool)
            )
            result = run_training_market(paper, pool, config, rng, evaluator=evaluator)
            abs_errors.append(abs(result.final_price_yes - paper.outcome.indicator))
            survivors_n = 0
            wealth_total = 0.0
            for g in pool:
                w = result.report[g.agent_id].final_wealth
                wealth_total += w
                if w > g.endowment + config.profit_threshold:
                    survivors_n += 1
            wealth_means.append(wealth_total / len(pool))
            survivor_counts.append(survivors_n)
            pool = evolve(
                pool,
                result.report,
                config,
                rng,
                alloc=alloc,
                exemplar_source=features,
                market_features=paper.features,
            )
        metrics.append(
            EpochMetrics(
                epoch=epoch,
                mean_training_ae=float(np.mean(abs_errors)),
                survivors=float(np.mean(survivor_counts)),
                mean_wealth=float(np.mean(wealth_means)),
            )
        )
        logger.info(
            "epoch %d: mean AE %.4f, survivors %.1f, mean wealth %.3f",
            epoch,
            metrics[-1].mean_training_ae,
            metrics[-1].survivors,
            metrics[-1].mean_wealth,
        )
    return TrainingRun(pool=pool, metrics=metrics)


def save_metrics(path: str | Path, metrics: list[EpochMetrics]) -> None:
    lines = [EpochMetrics.CSV_HEADER] + [m.to_csv_row() for m in metrics]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
