"""Flat key=value config files for training and batch-run parameters.

Files hold one ``key = value`` pair per line; blank lines and ``#``
comments are ignored.  Keys are the camelCase spellings of the config
dataclass fields (``populationSize``, ``mutationSigma``, ...); values
are parsed to the field's type.  Unknown keys are rejected so typos
fail loudly.
"""

from __future__ import annotations

from dataclasses import fields
from pathlib import Path

from .evaluation import RunConfig
from .evolution import TrainingConfig


def _camel(name: str) -> str:
    head, *tail = name.split("_")
    return head + "".join(part.title() for part in tail)


def parse_flat_config(text: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if key in pairs:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value.strip()
    return pairs


def _build(cls, pairs: dict[str, str]):
    by_key = {_camel(f.name): f for f in fields(cls)}
    unknown = set(pairs) - set(by_key)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for key, raw in pairs.items():
        f = by_key[key]
        caster = type(getattr(cls(), f.name))
        kwargs[f.name] = caster(raw)
    return cls(**kwargs)


def load_training_config(path: str | Path) -> TrainingConfig:
    return _build(TrainingConfig, parse_flat_config(Path(path).read_text(encoding="utf-8")))


def load_run_config(path: str | Path) -> RunConfig:
    return _build(RunConfig, parse_flat_config(Path(path).read_text(encoding="utf-8")))
