"""Operator command line: ingest, batch scoring, simulation, benchmarking,
serving, and per-transaction explanation."""

from __future__ import annotations

import dataclasses
import json
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import click

from .benchmark import (
    BenchmarkDescriptor,
    render_report,
    report_json,
    run_benchmark,
    simulate_population,
)
from .ensemble import KdaConfig, kda_evaluate, kda_evaluate_offline
from .repository import Repository, ResultsRow
from .service import ServiceConfig, serve
from .simgen import FRAUD_KINDS, FraudSpec, compute_detection_metrics
from .txmodel import RowError, filter_eligible, preprocess, read_ingest_file
from .verdicts import KdaVerdict

DEFAULT_STORAGE = "kda.db"


def _load_config(path: str | None, seed: int | None) -> KdaConfig:
    if path is None:
        config = KdaConfig()
    else:
        with open(path, encoding="utf-8") as fh:
            config = KdaConfig.from_dict(json.load(fh))
    if seed is not None:
        config = dataclasses.replace(config, seed=seed)
    return config


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON file with engine configuration.")
@click.option("--storage", default=DEFAULT_STORAGE, show_default=True,
              help="Path of the embedded store.")
@click.option("--seed", type=int, default=None, help="Override the configured master seed.")
@click.pass_context
def cli(ctx, config_path, storage, seed):
    """Clustering-ensemble fraud detection over per-customer windows."""
    ctx.ensure_object(dict)
    try:
        ctx.obj["config"] = _load_config(config_path, seed)
    except (ValueError, OSError) as exc:
        raise click.ClickException(f"cannot load config: {exc}")
    ctx.obj["storage"] = storage
    ctx.obj["seed"] = seed


@cli.command()
@click.option("--file", "path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Ingestion file (CSV with the standard header).")
@click.pass_context
def ingest(ctx, path):
    """Bulk-load transactions; malformed rows are reported and skipped."""
    accepted = rejected = filtered = 0
    with Repository(ctx.obj["storage"]) as repo:
        next_id = repo.max_transaction_id() + 1
        try:
            for line_no, item in read_ingest_file(path):
                if isinstance(item, RowError):
                    rejected += 1
                    click.echo(f"line {item.line_no}: {item.message}", err=True)
                    continue
                if not filter_eligible(item):
                    filtered += 1
                    continue
                repo.append_transaction(preprocess(item, next_id))
                next_id += 1
                accepted += 1
        except ValueError as exc:
            raise click.ClickException(str(exc))
    click.echo(f"{accepted} accepted, {rejected} rejected, {filtered} ineligible")


@cli.command("process-historical")
@click.option("--pan", default=None, help="Limit to one customer; default is every customer.")
@click.pass_context
def process_historical(ctx, pan):
    """Score each customer's stored window offline and persist the results."""
    config: KdaConfig = ctx.obj["config"]
    with Repository(ctx.obj["storage"]) as repo:
        pans = [pan] if pan else repo.list_pans()
        if pan and repo.count_transactions(pan) == 0:
            raise click.ClickException(f"no transactions for pan {pan}")
        if not pans:
            raise click.ClickException("repository is empty")
        all_verdicts: list[KdaVerdict] = []
        run_at = datetime.now(timezone.utc)
        for p in pans:
            newest = repo.newest_transaction(p)
            window = repo.fetch_window(p, config, as_of=newest.trx_date)
            verdicts = kda_evaluate_offline(window, config)
            for v in verdicts:
                repo.store_results(
                    [
                        ResultsRow(algorithm=name, transaction_id=v.transaction_id,
                                   run_at=run_at, flag=av.flag, evidence=av.evidence)
                        for name, av in v.verdicts.items()
                    ]
                )
                repo.store_verdict(p, v, run_at)
            all_verdicts.extend(verdicts)
    report = compute_detection_metrics(set(), all_verdicts)
    click.echo(report.render_text())
    flagged = report.models["kda"]["flagged_ids"]
    click.echo(f"suspicious transactions: {flagged if flagged else 'none'}")


@cli.command()
@click.option("--customers", default=10, show_default=True, type=click.IntRange(min=1))
@click.option("--tx", default=100, show_default=True, type=click.IntRange(min=1),
              help="Transactions per customer.")
@click.option("--fraud", "fraud_kind", type=click.Choice(FRAUD_KINDS), default=None,
              help="Inject this kind of anomaly.")
@click.option("--fraud-count", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--fraud-magnitude", default=3.0, show_default=True)
@click.pass_context
def simulate(ctx, customers, tx, fraud_kind, fraud_count, fraud_magnitude):
    """Populate the store with a seeded synthetic population."""
    config: KdaConfig = ctx.obj["config"]
    fraud = (
        FraudSpec(kind=fraud_kind, count=fraud_count, magnitude=fraud_magnitude)
        if fraud_kind
        else None
    )
    desc = BenchmarkDescriptor(
        customers=customers, transactions_per_customer=tx, fraud=fraud,
        seed=config.seed, config=config,
    )
    with Repository(ctx.obj["storage"]) as repo:
        histories, fraud_ids, _ = simulate_population(desc, id_base=repo.max_transaction_id())
        total = 0
        for history in histories:
            total += repo.append_many(history)
    click.echo(f"stored {total} transactions for {customers} customers")
    if fraud_ids:
        click.echo(f"injected anomalies: {sorted(fraud_ids)}")


@cli.command()
@click.option("--descriptor", "descriptor_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Benchmark descriptor JSON; defaults to the packaged one.")
@click.option("--mode", type=click.Choice(["offline", "online"]), default=None,
              help="Override the descriptor's mode.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Also write report.json and report.txt here.")
@click.pass_context
def benchmark(ctx, descriptor_path, mode, out_dir):
    """Run the seeded synthetic benchmark and print the report."""
    try:
        if descriptor_path is None:
            data = json.loads(
                resources.files("kda").joinpath("defaults/descriptor.default.json").read_text()
            )
        else:
            with open(descriptor_path, encoding="utf-8") as fh:
                data = json.load(fh)
        desc = BenchmarkDescriptor.from_dict(data)
    except (ValueError, OSError) as exc:
        raise click.ClickException(f"bad descriptor: {exc}")
    if mode is not None:
        desc = dataclasses.replace(desc, mode=mode)
    if ctx.obj["seed"] is not None:
        desc = dataclasses.replace(desc, seed=ctx.obj["seed"])
    report = run_benchmark(desc)
    click.echo(render_report(report), nl=False)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report_json(report), encoding="utf-8")
        (out / "report.txt").write_text(render_report(report), encoding="utf-8")
        click.echo(f"wrote {out / 'report.json'} and {out / 'report.txt'}")


@cli.command("serve")
@click.option("--listen", default="127.0.0.1:8000", show_default=True,
              help="host:port to bind.")
@click.option("--token", default=None, help="Static bearer token; unauthenticated when omitted.")
@click.pass_context
def serve_cmd(ctx, listen, token):
    """Run the scoring service until interrupted."""
    host, _, port_s = listen.rpartition(":")
    if not host or not port_s.isdigit():
        raise click.ClickException(f"--listen must be host:port, got {listen!r}")
    serve(
        ServiceConfig(
            host=host, port=int(port_s), storage=ctx.obj["storage"],
            config=ctx.obj["config"], token=token,
        )
    )


@cli.command()
@click.option("--tx", "tx_id", required=True, type=int, help="Transaction id to explain.")
@click.option("--recompute", is_flag=True, default=False,
              help="Re-evaluate the window instead of reading the stored verdict.")
@click.pass_context
def explain(ctx, tx_id, recompute):
    """Show one transaction's three detector verdicts and the vote."""
    config: KdaConfig = ctx.obj["config"]
    with Repository(ctx.obj["storage"]) as repo:
        tx = repo.get_transaction(tx_id)
        if tx is None:
            raise click.ClickException(f"no transaction {tx_id}")
        verdict = None if recompute else repo.latest_verdict(tx_id)
        source = "stored"
        if verdict is None:
            window = repo.fetch_window(tx.pan, config, as_of=tx.trx_date, up_to_id=tx.id)
            verdict = kda_evaluate(window, config)
            source = "recomputed"
    click.echo(
        f"transaction {tx.id} (pan {tx.pan}, {tx.trx_date} {tx.trx_time:02d}h, "
        f"amount {tx.affective_amount:.2f}, merchant {tx.merchant_id}) [{source}]"
    )
    for name in ("kmeans", "dbscan", "agglomerative"):
        v = verdict.verdicts[name]
        evidence = " ".join(f"{k}={v.evidence[k]}" for k in sorted(v.evidence))
        click.echo(f"  {name:<14} flag={int(v.flag)}  {evidence}")
    click.echo(
        f"  vote: nK={int(verdict.nk)} nD={int(verdict.nd)} nA={int(verdict.na)}"
        f" -> nF={int(verdict.nf)} (2-of-3), action={verdict.action}"
        f"{' [warm-up]' if verdict.warm_up else ''}"
    )


def main():
    cli(prog_name="kda")


if __name__ == "__main__":
    main()
