"""Trading agents: genome representation, activation gating, and decisions.

An agent genome scores a study's feature vector with a masked logistic
model and only participates in markets whose features resemble at least
one of its stored exemplars (masked cosine similarity).  Participating
agents compare their replication estimate against the current market
price and submit a single-share buy of whichever side looks cheap, when
the edge exceeds their trading margin.

:class:`PoolEvaluator` precomputes gate and estimate for a whole genome
pool against a fixed feature vector so per-iteration work reduces to a
vectorized Bernoulli draw plus price comparisons.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, PoolFormatError, PoolSchemaMismatchError
from .market import AssetSide, Direction, Order, TraderKind

MAX_EXEMPLARS = 16
MAX_MARGIN = 0.5

PROB_FLOOR = 1e-12
PROB_CEIL = 1.0 - 1e-12

DEFAULT_ENDOWMENT = 25.0


def stable_logistic(x: float) -> float:
    """Numerically stable logistic, clamped to [1e-12, 1 - 1e-12]."""
    if x >= 0:
        p = 1.0 / (1.0 + math.exp(-x))
    else:
        e = math.exp(x)
        p = e / (1.0 + e)
    return min(max(p, PROB_FLOOR), PROB_CEIL)


def masked_cosine(a: np.ndarray, b: np.ndarray, mask: np.ndarray) -> float:
    """Cosine similarity of two vectors restricted to masked-in coordinates.

    Returns NaN when either masked vector is all zeros (the angle is
    undefined); :func:`mapped_similarity` turns that case into 0.0,
    i.e. no resemblance.
    """
    am = a * mask
    bm = b * mask
    na = float(np.linalg.norm(am))
    nb = float(np.linalg.norm(bm))
    if na == 0.0 or nb == 0.0:
        return float("nan")
    return float(np.dot(am, bm) / (na * nb))


def mapped_similarity(a: np.ndarray, b: np.ndarray, mask: np.ndarray) -> float:
    """Masked cosine mapped from [-1,1] to [0,1]; zero masked vectors give 0.0."""
    s = masked_cosine(a, b, mask)
    if math.isnan(s):
        return 0.0
    return (s + 1.0) / 2.0


@dataclass
class AgentGenome:
    """Heritable trader parameters.

    weights/bias: masked logistic replication scorer.
    mask: which feature coordinates the agent attends to (at least one).
    exemplars: feature vectors of studies the agent "knows" (at most 16);
        the agent only trades markets similar to one of them.
    similarity_threshold: minimum mapped similarity to participate.
    margin: minimum |estimate - price| edge required to trade, at most 0.5.
    endowment: cash the agent starts each market with.
    """

    agent_id: str
    weights: np.ndarray
    bias: float
    mask: np.ndarray
    exemplars: list[np.ndarray]
    similarity_threshold: float
    margin: float
    endowment: float = DEFAULT_ENDOWMENT

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.mask = np.asarray(self.mask, dtype=float)
        self.exemplars = [np.asarray(e, dtype=float) for e in self.exemplars]
        if self.weights.shape != self.mask.shape:
            raise DimensionMismatchError(
                f"weights dim {self.weights.shape} != mask dim {self.mask.shape}"
            )
        if not (self.mask != 0.0).any():
            raise ValueError("mask must select at least one feature")
        for e in self.exemplars:
            if e.shape != self.weights.shape:
                raise DimensionMismatchError(
                    f"exemplar dim {e.shape} != weights dim {self.weights.shape}"
                )
        if len(self.exemplars) > MAX_EXEMPLARS:
            raise ValueError(f"at most {MAX_EXEMPLARS} exemplars allowed")
        if not 0.0 <= self.similarity_threshold <= 1.0:
            raise ValueError("similarity_threshold must lie in [0,1]")
        if not 0.0 <= self.margin <= MAX_MARGIN:
            raise ValueError(f"margin must lie in [0,{MAX_MARGIN}]")
        if self.endowment <= 0.0:
            raise ValueError("endowment must be positive")

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0])

    @classmethod
    def from_validated_parts(
        cls,
        agent_id: str,
        weights: np.ndarray,
        bias: float,
        mask: np.ndarray,
        exemplars: list[np.ndarray],
        similarity_threshold: float,
        margin: float,
        endowment: float,
    ) -> AgentGenome:
        """Assemble a genome without re-running field validation.

        Mutation builds offspring from an already-validated parent and
        preserves every invariant by construction, so the hot training
        path skips the conversion and range checks; a property test pins
        that mutated genomes still pass full validation.  All arrays must
        already be float64 of matching shape.
        """
        g = object.__new__(cls)
        g.agent_id = agent_id
        g.weights = weights
        g.bias = bias
        g.mask = mask
        g.exemplars = exemplars
        g.similarity_threshold = similarity_threshold
        g.margin = margin
        g.endowment = endowment
        return g

    def estimate(self, features: np.ndarray) -> float:
        """Replication probability estimate for a feature vector."""
        features = np.asarray(features, dtype=float)
        if features.shape != self.weights.shape:
            raise DimensionMismatchError(
                f"features dim {features.shape} != weights dim {self.weights.shape}"
            )
        z = self.bias + float(np.dot(self.weights * self.mask, features))
        return stable_logistic(z)

    def similarity(self, features: np.ndarray) -> float:
        """Best mapped similarity over this genome's exemplars (0.0 if none)."""
        features = np.asarray(features, dtype=float)
        if features.shape != self.weights.shape:
            raise DimensionMismatchError(
                f"features dim {features.shape} != weights dim {self.weights.shape}"
            )
        if not self.exemplars:
            return 0.0
        return max(mapped_similarity(features, e, self.mask) for e in self.exemplars)

    def should_participate(self, features: np.ndarray) -> bool:
        return self.similarity(features) >= self.similarity_threshold

    def decide_order(self, features: np.ndarray, price_yes: float) -> Order | None:
        """Margin-gated single-share decision at the given price, or None.

        Estimate above price by more than the margin buys WillReplicate;
        price above estimate by more than the margin buys WillNotReplicate.
        Agents only ever buy.
        """
        if not self.should_participate(features):
            return None
        p_hat = self.estimate(features)
        if p_hat - price_yes > self.margin:
            side = AssetSide.WILL_REPLICATE
        elif price_yes - p_hat > self.margin:
            side = AssetSide.WILL_NOT_REPLICATE
        else:
            return None
        return Order(
            trader_id=self.agent_id,
            kind=TraderKind.AGENT,
            side=side,
            direction=Direction.BUY,
        )

    # -- serialization --------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "agentId": self.agent_id,
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "mask": self.mask.astype(int).tolist(),
            "exemplars": [e.tolist() for e in self.exemplars],
            "similarityThreshold": self.similarity_threshold,
            "margin": self.margin,
            "endowment": self.endowment,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AgentGenome":
        return cls(
            agent_id=d["agentId"],
            weights=np.asarray(d["weights"], dtype=float),
            bias=float(d["bias"]),
            mask=np.asarray(d["mask"], dtype=float),
            exemplars=[np.asarray(e, dtype=float) for e in d["exemplars"]],
            similarity_threshold=float(d["similarityThreshold"]),
            margin=float(d["margin"]),
            endowment=float(d["endowment"]),
        )


def random_genome(
    agent_id: str,
    dim: int,
    rng: np.random.Generator,
    exemplar_source: np.ndarray,
    endowment: float = DEFAULT_ENDOWMENT,
) -> AgentGenome:
    """Draw a fresh random genome.

    Weights and bias ~ N(0,1); the mask selects 1-8 random features;
    1-16 exemplars are sampled without replacement from the rows of
    `exemplar_source`; similarity threshold ~ U(0.6, 0.95) and margin
    ~ U(0.02, 0.15).
    """
    exemplar_source = np.asarray(exemplar_source, dtype=float)
    if exemplar_source.ndim != 2 or exemplar_source.shape[0] == 0:
        raise ValueError("exemplar_source must be a nonempty (n, dim) array")
    mask_count = int(rng.integers(1, min(8, dim) + 1))
    mask_dims = rng.choice(dim, size=mask_count, replace=False)
    mask = np.zeros(dim)
    mask[mask_dims] = 1.0
    weights = rng.normal(0.0, 1.0, size=dim)
    bias = float(rng.normal(0.0, 1.0))
    count = min(int(rng.integers(1, MAX_EXEMPLARS + 1)), len(exemplar_source))
    idx = rng.choice(len(exemplar_source), size=count, replace=False)
    exemplars = [np.array(exemplar_source[i], dtype=float) for i in idx]
    return AgentGenome(
        agent_id=agent_id,
        weights=weights,
        bias=bias,
        mask=mask,
        exemplars=exemplars,
        similarity_threshold=float(rng.uniform(0.6, 0.95)),
        margin=float(rng.uniform(0.02, 0.15)),
        endowment=endowment,
    )


# -- pool files --------------------------------------------------------------

POOL_SCHEMA_VERSION = 1


def feature_schema_hash(feature_names: list[str]) -> str:
    joined = "\n".join(feature_names)
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()[:16]


def save_pool(path: str | Path, genomes: list[AgentGenome], feature_names: list[str]) -> None:
    """Write a genome pool as line-delimited JSON with a schema header.

    Serialization is canonical (sorted keys, fixed separators) so the
    same pool always produces bit-identical bytes.
    """
    path = Path(path)
    header = {
        "schemaVersion": POOL_SCHEMA_VERSION,
        "featureSchemaHash": feature_schema_hash(feature_names),
        "featureCount": len(feature_names),
        "genomeCount": len(genomes),
    }
    with path.open("w", encoding="utf-8") as f:
        f.write(json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
        for g in genomes:
            f.write(json.dumps(g.to_dict(), sort_keys=True, separators=(",", ":")) + "\n")


def load_pool(path: str | Path, feature_names: list[str]) -> list[AgentGenome]:
    """Load a genome pool, checking schema version and feature-schema hash."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as f:
        lines = [line for line in f.read().splitlines() if line.strip()]
    if not lines:
        raise PoolFormatError(f"{path}: empty pool file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise PoolFormatError(f"{path}: malformed header line: {exc}") from exc
    if not isinstance(header, dict) or "schemaVersion" not in header:
        raise PoolFormatError(f"{path}: first line is not a pool header")
    if header["schemaVersion"] != POOL_SCHEMA_VERSION:
        raise PoolSchemaMismatchError(
            f"{path}: pool schema version {header['schemaVersion']} != {POOL_SCHEMA_VERSION}"
        )
    expected_hash = feature_schema_hash(feature_names)
    if header.get("featureSchemaHash") != expected_hash:
        raise PoolSchemaMismatchError(
            f"{path}: pool was built for a different feature schema "
            f"({header.get('featureSchemaHash')} != {expected_hash})"
        )
    genomes = []
    for i, line in enumerate(lines[1:], start=2):
        try:
            genomes.append(AgentGenome.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise PoolFormatError(f"{path}: malformed genome on line {i}: {exc}") from exc
    return genomes


# -- sampling ----------------------------------------------------------------

def sample_agents(
    pool: list[AgentGenome], rate: float, rng: np.random.Generator
) -> list[AgentGenome]:
    """Select each agent independently with probability `rate`.

    The result is ordered by ascending agent id regardless of pool order;
    one uniform draw is consumed per pool member, in ascending-id order,
    so selections are reproducible under a fixed seed.
    """
    if not 0.0 < rate <= 1.0:
        raise ValueError("sampling rate must lie in (0,1]")
    ordered = sorted(pool, key=lambda g: g.agent_id)
    draws = rng.random(len(ordered))
    return [g for g, u in zip(ordered, draws) if u < rate]


# -- vectorized pool evaluation ----------------------------------------------

@dataclass
class PoolDecision:
    """Precomputed per-agent stance toward one market's feature vector."""

    active: np.ndarray  # bool (P,)
    estimate: np.ndarray  # float (P,)


class PoolEvaluator:
    """Evaluates a whole genome pool against feature vectors in bulk.

    Packs the pool's weights/masks/exemplars into dense arrays once
    (pool sorted by ascending agent id); :meth:`evaluate` then computes
    every agent's activation gate and replication estimate for a market
    in a handful of vector ops, identically to the per-genome methods.
    """

    def __init__(self, genomes: list[AgentGenome]):
        if not genomes:
            raise ValueError("empty genome pool")
        dims = {g.dim for g in genomes}
        if len(dims) != 1:
            raise DimensionMismatchError(f"pool mixes feature dimensions: {sorted(dims)}")
        self.genomes = sorted(genomes, key=lambda g: g.agent_id)
        dim = dims.pop()
        P = len(self.genomes)
        self.weights = np.stack([g.weights for g in self.genomes])  # (P, D)
        self.bias = np.array([g.bias for g in self.genomes])  # (P,)
        self.mask = np.stack([g.mask for g in self.genomes])  # (P, D)
        self.thresholds = np.array([g.similarity_threshold for g in self.genomes])
        self.margins = np.array([g.margin for g in self.genomes])
        self.endowments = np.array([g.endowment for g in self.genomes])
        # Zero-padded exemplar tensor; padding rows are excluded via validity.
        # Each genome's padded block is cached on the genome itself (its
        # exemplars never change after construction), so genomes carried
        # over between pools pack for free.
        self.exemplars = np.empty((P, MAX_EXEMPLARS, dim))
        self.exemplar_valid = np.empty((P, MAX_EXEMPLARS), dtype=bool)
        for i, g in enumerate(self.genomes):
            packed = getattr(g, "_packed_exemplars", None)
            if packed is None or packed[0].shape[1] != dim:
                block = np.zeros((MAX_EXEMPLARS, dim))
                valid = np.zeros(MAX_EXEMPLARS, dtype=bool)
                k = len(g.exemplars)
                if k:
                    block[:k] = g.exemplars
                    valid[:k] = True
                packed = (block, valid)
                g._packed_exemplars = packed
            self.exemplars[i] = packed[0]
            self.exemplar_valid[i] = packed[1]
        # Masked exemplar rows and their norms feed every evaluate() call;
        # computed once per pool so evaluation stays two einsums plus
        # elementwise work.
        self.masked_exemplars = self.exemplars * self.mask[:, None, :]
        self.exemplar_norms = np.linalg.norm(self.masked_exemplars, axis=2)

    @classmethod
    def from_previous(cls, prev: "PoolEvaluator", genomes: list[AgentGenome]) -> "PoolEvaluator":
        """Evaluator for a pool that shares members with an already-packed one.

        Rows for genomes present in `prev` (matched by object identity;
        genomes are never modified after construction) are copied from its
        arrays, so only new members pay the packing cost.  The result is
        bit-identical to building ``PoolEvaluator(genomes)`` from scratch,
        which a property test pins.
        """
        if not genomes:
            raise ValueError("empty genome pool")
        new = object.__new__(cls)
        new.genomes = sorted(genomes, key=lambda g: g.agent_id)
        P = len(new.genomes)
        dim = int(prev.weights.shape[1])
        prev_row = {id(g): i for i, g in enumerate(prev.genomes)}
        rows = np.fromiter(
            (prev_row.get(id(g), -1) for g in new.genomes), dtype=np.int64, count=P
        )
        hit = np.flatnonzero(rows >= 0)
        fresh = np.flatnonzero(rows < 0)
        bad = {new.genomes[int(j)].dim for j in fresh} - {dim}
        if bad:
            raise DimensionMismatchError(
                f"pool mixes feature dimensions: {sorted(bad | {dim})}"
            )
        new.weights = np.empty((P, dim))
        new.bias = np.empty(P)
        new.mask = np.empty((P, dim))
        new.thresholds = np.empty(P)
        new.margins = np.empty(P)
        new.endowments = np.empty(P)
        new.exemplars = np.empty((P, MAX_EXEMPLARS, dim))
        new.exemplar_valid = np.empty((P, MAX_EXEMPLARS), dtype=bool)
        new.masked_exemplars = np.empty((P, MAX_EXEMPLARS, dim))
        new.exemplar_norms = np.empty((P, MAX_EXEMPLARS))
        if hit.size:
            src = rows[hit]
            new.weights[hit] = prev.weights[src]
            new.bias[hit] = prev.bias[src]
            new.mask[hit] = prev.mask[src]
            new.thresholds[hit] = prev.thresholds[src]
            new.margins[hit] = prev.margins[src]
            new.endowments[hit] = prev.endowments[src]
            new.exemplars[hit] = prev.exemplars[src]
            new.exemplar_valid[hit] = prev.exemplar_valid[src]
            new.masked_exemplars[hit] = prev.masked_exemplars[src]
            new.exemplar_norms[hit] = prev.exemplar_norms[src]
        if fresh.size:
            fresh_genomes = [new.genomes[int(j)] for j in fresh]
            # One shared allocation backs the fresh genomes' packed blocks;
            # each genome caches a view of its own rows.
            blocks = np.zeros((len(fresh_genomes), MAX_EXEMPLARS, dim))
            valids = np.zeros((len(fresh_genomes), MAX_EXEMPLARS), dtype=bool)
            for t, g in enumerate(fresh_genomes):
                packed = getattr(g, "_packed_exemplars", None)
                if packed is not None and packed[0].shape[1] == dim:
                    blocks[t] = packed[0]
                    valids[t] = packed[1]
                else:
                    k = len(g.exemplars)
                    if k:
                        blocks[t, :k] = g.exemplars
                        valids[t, :k] = True
                    g._packed_exemplars = (blocks[t], valids[t])
            new.weights[fresh] = [g.weights for g in fresh_genomes]
            new.bias[fresh] = [g.bias for g in fresh_genomes]
            new.mask[fresh] = [g.mask for g in fresh_genomes]
            new.thresholds[fresh] = [g.similarity_threshold for g in fresh_genomes]
            new.margins[fresh] = [g.margin for g in fresh_genomes]
            new.endowments[fresh] = [g.endowment for g in fresh_genomes]
            new.exemplars[fresh] = blocks
            new.exemplar_valid[fresh] = valids
            masked = new.exemplars[fresh] * new.mask[fresh][:, None, :]
            new.masked_exemplars[fresh] = masked
            new.exemplar_norms[fresh] = np.linalg.norm(masked, axis=2)
        return new

    def __len__(self) -> int:
        return len(self.genomes)

    def evaluate(self, features: np.ndarray) -> PoolDecision:
        features = np.asarray(features, dtype=float)
        if features.shape != (self.weights.shape[1],):
            raise DimensionMismatchError(
                f"features dim {features.shape} != pool dim ({self.weights.shape[1]},)"
            )
        masked_f = self.mask * features  # (P, D)
        z = self.bias + np.einsum("pd,pd->p", self.weights, masked_f)
        est = 1.0 / (1.0 + np.exp(-np.clip(z, -700, 700)))
        np.clip(est, PROB_FLOOR, PROB_CEIL, out=est)

        dots = np.einsum("ped,pd->pe", self.masked_exemplars, masked_f)
        norm_f = np.linalg.norm(masked_f, axis=1)  # (P,)
        denom = self.exemplar_norms * norm_f[:, None]
        valid = self.exemplar_valid & (denom > 0.0)
        sim = np.where(valid, (np.divide(dots, denom, where=denom > 0.0) + 1.0) / 2.0, 0.0)
        best = sim.max(axis=1, initial=0.0)
        return PoolDecision(active=best >= self.thresholds, estimate=est)

    def order_sides(self, decision: PoolDecision, price_yes: float) -> np.ndarray:
        """Per-agent stance at a price: +1 buy WillReplicate, -1 buy
        WillNotReplicate, 0 no order.  Inactive agents never order."""
        buy_yes = decision.active & (decision.estimate - price_yes > self.margins)
        buy_no = decision.active & (price_yes - decision.estimate > self.margins)
        return buy_yes.astype(np.int8) - buy_no.astype(np.int8)
