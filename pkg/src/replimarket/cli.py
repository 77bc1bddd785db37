"""Command-line entry points.

Batch subcommands (train, run-artificial, run-hybrid-scripted, evaluate,
gen-synthetic) drive the library directly; `serve` launches the HTTP
service; the `client` group talks to a running service over HTTP.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from .agents import load_pool, save_pool
from .client import ServiceClient, ServiceClientError
from .configfile import load_run_config, load_training_config
from .dataset import default_schema, generate_synthetic, load_dataset, load_schema, save_dataset
from .evaluation import (
    RunConfig,
    run_artificial_market,
    run_scripted_hybrid,
    load_results,
    save_results,
    save_trade_log,
    summarize,
    wilcoxon_signed_rank,
)
from .evolution import TrainingConfig, save_metrics, train_pool
from .scripted import ScriptedTrader, Strategy


@click.group()
@click.option("--verbose", is_flag=True, help="Enable info-level logging.")
def main(verbose: bool):
    """Replication-market training, evaluation, and service tools."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


def _load_schema_opt(schema_path: str | None):
    return load_schema(schema_path) if schema_path else default_schema()


def _load_scripted(path: str) -> list[ScriptedTrader]:
    entries = json.loads(Path(path).read_text(encoding="utf-8"))
    return [
        ScriptedTrader(
            trader_id=e["traderId"],
            prior_probability=float(e["priorProbability"]),
            aggressiveness=float(e["aggressiveness"]),
            strategy=Strategy(e["strategy"]),
            margin=float(e.get("margin", 0.05)),
        )
        for e in entries
    ]


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seed", type=int, default=None, help="Overrides the config's rngSeed.")
@click.option("--schema", "schema_path", type=click.Path(exists=True))
@click.option("--metrics", "metrics_path", type=click.Path())
def train(dataset_path, config_path, out_path, seed, schema_path, metrics_path):
    """Train an agent pool on a dataset of resolved studies."""
    schema = _load_schema_opt(schema_path)
    records = load_dataset(dataset_path, schema)
    config = load_training_config(config_path) if config_path else TrainingConfig()
    if seed is not None:
        config.rng_seed = seed
    run = train_pool(records, config)
    save_pool(out_path, run.pool, schema.feature_names)
    if metrics_path:
        save_metrics(metrics_path, run.metrics)
    if run.metrics:
        final = run.metrics[-1]
        click.echo(
            f"trained {config.epochs} epochs over {len(records)} studies; "
            f"final mean AE {final.mean_training_ae:.4f}"
        )
    click.echo(f"pool written to {out_path}")


def _run_batch(dataset_path, pool_path, out_path, seed, config_path, schema_path,
               trade_log_path, scripted):
    schema = _load_schema_opt(schema_path)
    records = load_dataset(dataset_path, schema)
    pool = load_pool(pool_path, schema.feature_names)
    config = load_run_config(config_path) if config_path else RunConfig()
    results, all_records = [], []
    for record in records:
        if scripted is None:
            run = run_artificial_market(record, pool, config, seed)
        else:
            run = run_scripted_hybrid(record, pool, scripted, config, seed)
        results.append(run.result)
        all_records.extend(run.records)
    save_results(out_path, results)
    if trade_log_path:
        save_trade_log(trade_log_path, all_records)
    scored = [r for r in results if r.absolute_error is not None]
    if scored:
        mean_ae = float(np.mean([r.absolute_error for r in scored]))
        click.echo(f"{len(results)} markets run; mean AE {mean_ae:.4f}")
    click.echo(f"results written to {out_path}")


@main.command("run-artificial")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--pool", "pool_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seed", type=int, default=0)
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--schema", "schema_path", type=click.Path(exists=True))
@click.option("--trade-log", "trade_log_path", type=click.Path())
def run_artificial(dataset_path, pool_path, out_path, seed, config_path, schema_path,
                   trade_log_path):
    """Run agents-only markets over every study in a dataset."""
    _run_batch(dataset_path, pool_path, out_path, seed, config_path, schema_path,
               trade_log_path, scripted=None)


@main.command("run-hybrid-scripted")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--pool", "pool_path", required=True, type=click.Path(exists=True))
@click.option("--scripted", "scripted_path", required=True, type=click.Path(exists=True),
              help="JSON list of scripted trader definitions.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--seed", type=int, default=0)
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--schema", "schema_path", type=click.Path(exists=True))
@click.option("--trade-log", "trade_log_path", type=click.Path())
def run_hybrid_scripted(dataset_path, pool_path, scripted_path, out_path, seed, config_path,
                        schema_path, trade_log_path):
    """Run markets with scripted human-like traders alongside the agents."""
    _run_batch(dataset_path, pool_path, out_path, seed, config_path, schema_path,
               trade_log_path, scripted=_load_scripted(scripted_path))


@main.command()
@click.option("--a", "path_a", required=True, type=click.Path(exists=True),
              help="Result CSV for the first condition (e.g. hybrid).")
@click.option("--b", "path_b", required=True, type=click.Path(exists=True),
              help="Result CSV for the second condition (e.g. artificial).")
@click.option("--out", "out_path", type=click.Path())
def evaluate(path_a, path_b, out_path):
    """Compare two result CSVs: paired table, means, and signed-rank test."""
    results_a = load_results(path_a)
    results_b = load_results(path_b)
    summary = summarize(results_a, results_b)
    click.echo(f"mean AE: A={summary.mean_ae_a:.4f}  B={summary.mean_ae_b:.4f}")
    click.echo(
        f"A lower in {summary.count_a_lower} of {len(summary.rows)} markets; "
        f"correct: A={summary.count_correct_a} B={summary.count_correct_b}; "
        f"flipped to correct: {summary.count_flipped}"
    )
    try:
        w = wilcoxon_signed_rank(
            [r.ae_a for r in summary.rows], [r.ae_b for r in summary.rows]
        )
        click.echo(f"Wilcoxon signed-rank: z={w.z:.4f}, two-sided p={w.p_two_sided:.4f} (n={w.n})")
    except Exception as exc:  # TooFewPairs stays informative, not fatal
        click.echo(f"Wilcoxon signed-rank: not computed ({exc})")
    if out_path:
        lines = ["marketId,absoluteErrorA,predictionA,absoluteErrorB,predictionB"]
        for r in summary.rows:
            lines.append(
                f"{r.market_id},{r.ae_a!r},{r.prediction_a.value},"
                f"{r.ae_b!r},{r.prediction_b.value}"
            )
        Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
        click.echo(f"paired table written to {out_path}")


@main.command("gen-synthetic")
@click.option("--n", type=int, required=True)
@click.option("--difficulty", type=float, required=True)
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", required=True, type=click.Path())
def gen_synthetic(n, difficulty, seed, out_path):
    """Generate a labeled synthetic dataset with a planted signal."""
    schema = default_schema()
    records = generate_synthetic(n, difficulty, np.random.default_rng(seed))
    save_dataset(out_path, records, schema)
    click.echo(f"{n} synthetic studies written to {out_path}")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--pool", "pool_path", type=click.Path(exists=True),
              help="Default trained pool for events that don't name one.")
@click.option("--schema", "schema_path", type=click.Path(exists=True))
@click.option("--seed", type=int, default=0)
def serve(host, port, pool_path, schema_path, seed):
    """Launch the market service."""
    import uvicorn

    from .service.app import create_app

    app = create_app(pool_path=pool_path, schema=_load_schema_opt(schema_path), seed=seed)
    uvicorn.run(app, host=host, port=port, log_level="info")


@main.group()
@click.option("--base-url", default="http://127.0.0.1:8000", show_default=True)
@click.pass_context
def client(ctx, base_url):
    """Talk to a running market service."""
    ctx.obj = base_url


def _client_call(base_url, fn):
    try:
        with ServiceClient(base_url) as c:
            result = fn(c)
    except ServiceClientError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    if isinstance(result, str):
        click.echo(result, nl=False)
    else:
        click.echo(json.dumps(result, indent=2))


@client.command("create-event")
@click.argument("config_json", type=click.Path(exists=True))
@click.pass_obj
def client_create_event(base_url, config_json):
    """Create an event from a JSON request file."""
    body = json.loads(Path(config_json).read_text(encoding="utf-8"))
    _client_call(base_url, lambda c: c.create_event(body))


@client.command("open")
@click.argument("event_id")
@click.pass_obj
def client_open(base_url, event_id):
    _client_call(base_url, lambda c: c.open_event(event_id))


@client.command("quote")
@click.argument("event_id")
@click.argument("market_id")
@click.pass_obj
def client_quote(base_url, event_id, market_id):
    _client_call(base_url, lambda c: c.quote(event_id, market_id))


@client.command("order")
@click.argument("event_id")
@click.argument("market_id")
@click.option("--token", required=True)
@click.option("--side", type=click.Choice(["WillReplicate", "WillNotReplicate"]), required=True)
@click.option("--direction", type=click.Choice(["Buy", "Sell"]), default="Buy")
@click.pass_obj
def client_order(base_url, event_id, market_id, token, side, direction):
    _client_call(base_url, lambda c: c.submit_order(event_id, market_id, token, side, direction))


@client.command("portfolio")
@click.argument("event_id")
@click.option("--token", required=True)
@click.pass_obj
def client_portfolio(base_url, event_id, token):
    _client_call(base_url, lambda c: c.portfolio(event_id, token))


@client.command("close-event")
@click.argument("event_id")
@click.option("--outcome", "outcomes", multiple=True,
              help="marketId=Replicated|NotReplicated (repeatable).")
@click.option("--payout-seed", type=int, default=0)
@click.pass_obj
def client_close_event(base_url, event_id, outcomes, payout_seed):
    mapping = {}
    for item in outcomes:
        market_id, _, value = item.partition("=")
        mapping[market_id] = value
    _client_call(base_url, lambda c: c.close_event(event_id, mapping, payout_seed))


@client.command("stats")
@click.argument("event_id")
@click.option("--kind", type=click.Choice(["prices", "trades", "payouts", "orders"]),
              default="prices")
@click.pass_obj
def client_stats(base_url, event_id, kind):
    _client_call(base_url, lambda c: c.stats_export(event_id, kind))


if __name__ == "__main__":
    main()
