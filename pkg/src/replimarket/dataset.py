"""Study datasets: schema, CSV ingestion, normalization, synthetic generation.

A dataset is a list of study records, each carrying a claim id, a fixed-width
numeric feature vector, and an optional replication outcome.  Files are CSV
(UTF-8, claim id first column, outcome last with values 1/0/empty) with a
leading ``#schema-v1`` comment line; the companion schema file lists feature
names and kinds one per line under the same version comment.

Normalization is two-phase: fit per-feature mean/standard deviation on a
training split, then apply ``(x - mean) / sd`` to numeric features.  Binary
and constant features pass through unchanged.  Records carry a ``normalized``
flag so the transform cannot be applied twice.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    EmptyDatasetError,
    MalformedRowError,
    SchemaMismatchError,
    UnfittedSchemaError,
)
from .market import Outcome

SCHEMA_VERSION_COMMENT = "#schema-v1"

DEFAULT_FEATURE_COUNT = 41

# The five named study features; the remainder of the default schema is
# filled with numbered placeholders until a canonical list exists.
_NAMED_FEATURES = ["p_value", "author_names_hash", "author_count", "venue_hash", "funding_flag"]


class FeatureKind(Enum):
    NUMERIC = "Numeric"
    BINARY = "Binary"


@dataclass
class FeatureSchema:
    """Ordered feature names/kinds plus (after fitting) normalization stats."""

    feature_names: list[str]
    kinds: list[FeatureKind]
    means: np.ndarray | None = None
    stds: np.ndarray | None = None
    constant: np.ndarray | None = None  # bool per feature, set when fitted

    def __post_init__(self):
        if len(self.feature_names) != len(set(self.feature_names)):
            raise SchemaMismatchError("feature names must be unique")
        if len(self.feature_names) != len(self.kinds):
            raise SchemaMismatchError("one kind required per feature name")

    @property
    def dim(self) -> int:
        return len(self.feature_names)

    @property
    def fitted(self) -> bool:
        return self.means is not None


def default_schema(feature_count: int = DEFAULT_FEATURE_COUNT) -> FeatureSchema:
    names = _NAMED_FEATURES[:feature_count]
    kinds = [
        FeatureKind.NUMERIC,
        FeatureKind.NUMERIC,
        FeatureKind.NUMERIC,
        FeatureKind.NUMERIC,
        FeatureKind.BINARY,
    ][: len(names)]
    for i in range(len(names) + 1, feature_count + 1):
        names.append(f"feature_{i:02d}")
        kinds.append(FeatureKind.NUMERIC)
    return FeatureSchema(feature_names=names, kinds=kinds)


@dataclass
class PaperRecord:
    """One study: claim id, feature vector, optional replication outcome."""

    claim_id: str
    features: np.ndarray
    outcome: Outcome | None = None
    meta: dict | None = None
    imputed: list[str] = field(default_factory=list)
    normalized: bool = False

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)


# -- schema files -------------------------------------------------------------

def save_schema(path: str | Path, schema: FeatureSchema) -> None:
    lines = [SCHEMA_VERSION_COMMENT]
    lines += [f"{n},{k.value}" for n, k in zip(schema.feature_names, schema.kinds)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_schema(path: str | Path) -> FeatureSchema:
    text = Path(path).read_text(encoding="utf-8")
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or lines[0].strip() != SCHEMA_VERSION_COMMENT:
        raise SchemaMismatchError(f"{path}: missing {SCHEMA_VERSION_COMMENT} header comment")
    names, kinds = [], []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 2:
            raise SchemaMismatchError(f"{path}: line {i} is not 'name,kind'")
        name, kind = parts[0].strip(), parts[1].strip()
        try:
            kinds.append(FeatureKind(kind))
        except ValueError as exc:
            raise SchemaMismatchError(f"{path}: line {i}: unknown feature kind {kind!r}") from exc
        names.append(name)
    return FeatureSchema(feature_names=names, kinds=kinds)


# -- dataset CSV files ---------------------------------------------------------

def save_dataset(path: str | Path, records: list[PaperRecord], schema: FeatureSchema) -> None:
    """Write records as versioned CSV.  Floats use shortest round-trip repr,
    so load(save(records)) reproduces every field bit-exactly."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["claimId", *schema.feature_names, "outcome"])
    for r in records:
        if r.features.shape != (schema.dim,):
            raise SchemaMismatchError(
                f"record {r.claim_id}: {r.features.shape[0]} features, schema has {schema.dim}"
            )
        if r.outcome is Outcome.REPLICATED:
            out = "1"
        elif r.outcome is Outcome.NOT_REPLICATED:
            out = "0"
        else:
            out = ""
        writer.writerow([r.claim_id, *[repr(float(x)) for x in r.features], out])
    Path(path).write_text(SCHEMA_VERSION_COMMENT + "\n" + buf.getvalue(), encoding="utf-8")


def load_dataset(path: str | Path, schema: FeatureSchema) -> list[PaperRecord]:
    """Load a versioned CSV against a schema (feature columns matched by name).

    Blank numeric cells are imputed with the schema's fitted mean when
    available, otherwise with the column mean over this file's non-blank
    values, and the record is flagged.  A blank outcome cell means the
    study is unresolved.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0].strip() != SCHEMA_VERSION_COMMENT:
        raise SchemaMismatchError(f"{path}: missing {SCHEMA_VERSION_COMMENT} header comment")
    rows = list(csv.reader(io.StringIO("\n".join(lines[1:]))))
    if not rows:
        raise SchemaMismatchError(f"{path}: missing header row")
    header = rows[0]
    if not header or header[0] != "claimId":
        raise SchemaMismatchError(f"{path}: first column must be claimId")
    has_outcome = "outcome" in header
    feature_cols = [c for c in header[1:] if c != "outcome"]
    if sorted(feature_cols) != sorted(schema.feature_names):
        missing = set(schema.feature_names) - set(feature_cols)
        unknown = set(feature_cols) - set(schema.feature_names)
        raise SchemaMismatchError(
            f"{path}: feature columns do not match schema"
            f" (missing: {sorted(missing)}, unknown: {sorted(unknown)})"
        )
    col_index = {c: i for i, c in enumerate(header)}
    out_idx = col_index.get("outcome")

    # First pass: parse cells, remembering blanks for imputation.
    parsed: list[tuple[str, list[float | None], Outcome | None]] = []
    for row_number, row in enumerate(rows[1:], start=3):  # line 1 = comment, 2 = header
        if not row:
            continue
        if len(row) != len(header):
            raise MalformedRowError(
                row_number, f"{path}: expected {len(header)} cells, found {len(row)}"
            )
        values: list[float | None] = []
        for name in schema.feature_names:
            cell = row[col_index[name]].strip()
            if cell == "":
                values.append(None)
                continue
            try:
                values.append(float(cell))
            except ValueError as exc:
                raise MalformedRowError(
                    row_number, f"{path}: non-numeric cell {cell!r} in column {name!r}"
                ) from exc
        outcome: Outcome | None = None
        if has_outcome:
            cell = row[out_idx].strip()
            if cell == "1":
                outcome = Outcome.REPLICATED
            elif cell == "0":
                outcome = Outcome.NOT_REPLICATED
            elif cell != "":
                raise MalformedRowError(
                    row_number, f"{path}: outcome must be 1, 0, or empty, found {cell!r}"
                )
        parsed.append((row[0], values, outcome))

    # Column means for imputation when the schema carries no fitted stats.
    fallback_means = np.zeros(schema.dim)
    for j in range(schema.dim):
        present = [v[1][j] for v in parsed if v[1][j] is not None]
        fallback_means[j] = float(np.mean(present)) if present else 0.0

    records = []
    for claim_id, values, outcome in parsed:
        imputed = []
        feats = np.empty(schema.dim)
        for j, v in enumerate(values):
            if v is None:
                feats[j] = schema.means[j] if schema.fitted else fallback_means[j]
                imputed.append(schema.feature_names[j])
            else:
                feats[j] = v
        records.append(
            PaperRecord(claim_id=claim_id, features=feats, outcome=outcome, imputed=imputed)
        )
    return records


# -- normalization -------------------------------------------------------------

def fit_normalization(records: list[PaperRecord], schema: FeatureSchema) -> FeatureSchema:
    """Fit per-feature mean and population standard deviation on `records`.

    Features with zero spread (including every feature when only one
    record is given) are flagged constant and later pass through
    normalization unchanged.
    """
    if not records:
        raise EmptyDatasetError("cannot fit normalization on an empty dataset")
    matrix = np.stack([r.features for r in records])
    means = matrix.mean(axis=0)
    stds = matrix.std(axis=0)  # population convention
    constant = stds == 0.0
    return replace(schema, means=means, stds=stds, constant=constant)


def normalize(record: PaperRecord, schema: FeatureSchema) -> PaperRecord:
    """Return a copy with numeric features standardized to fitted stats."""
    if not schema.fitted:
        raise UnfittedSchemaError("normalization requires a fitted schema")
    if record.normalized:
        raise ValueError(f"record {record.claim_id} is already normalized")
    feats = record.features.copy()
    for j, kind in enumerate(schema.kinds):
        if kind is FeatureKind.NUMERIC and not schema.constant[j]:
            feats[j] = (feats[j] - schema.means[j]) / schema.stds[j]
    return replace(record, features=feats, normalized=True)


def denormalize(record: PaperRecord, schema: FeatureSchema) -> PaperRecord:
    """Inverse of :func:`normalize`; round trips within 1e-12 per feature."""
    if not schema.fitted:
        raise UnfittedSchemaError("denormalization requires a fitted schema")
    if not record.normalized:
        raise ValueError(f"record {record.claim_id} is not normalized")
    feats = record.features.copy()
    for j, kind in enumerate(schema.kinds):
        if kind is FeatureKind.NUMERIC and not schema.constant[j]:
            feats[j] = feats[j] * schema.stds[j] + schema.means[j]
    return replace(record, features=feats, normalized=False)


# -- synthetic data -------------------------------------------------------------

PLANTED_DIMS = (0, 1, 2)
SECONDARY_WEIGHTS = (0.6, 0.4)


def generate_synthetic(
    n: int, difficulty: float, rng: np.random.Generator, dim: int = DEFAULT_FEATURE_COUNT
) -> list[PaperRecord]:
    """Generate labeled records with a planted linear signal.

    Features are iid standard normal.  Labels follow
    ``Bernoulli(logistic(k * w.x))`` where ``w`` puts weight 1 on a dominant
    feature and difficulty-scaled weight on two secondary features, and the
    sharpness ``k = (1 - difficulty) / difficulty``.  Difficulty 0 yields
    deterministic labels from the dominant feature alone; difficulty 1
    yields labels independent of the features.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= difficulty <= 1.0:
        raise ValueError("difficulty must lie in [0,1]")
    if dim <= max(PLANTED_DIMS):
        raise ValueError(f"dim must exceed {max(PLANTED_DIMS)}")

    weights = np.zeros(dim)
    weights[PLANTED_DIMS[0]] = 1.0
    for d, w in zip(PLANTED_DIMS[1:], SECONDARY_WEIGHTS):
        weights[d] = w * difficulty

    records = []
    for i in range(n):
        x = rng.normal(0.0, 1.0, size=dim)
        z = float(np.dot(weights, x))
        u = rng.random()  # always drawn, keeping the stream aligned across branches
        if difficulty == 0.0:
            replicated = z > 0.0
        else:
            k = (1.0 - difficulty) / difficulty
            p = 1.0 / (1.0 + math.exp(-min(max(k * z, -700.0), 700.0)))
            replicated = u < p
        records.append(
            PaperRecord(
                claim_id=f"syn-{i:05d}",
                features=x,
                outcome=Outcome.REPLICATED if replicated else Outcome.NOT_REPLICATED,
            )
        )
    return records
