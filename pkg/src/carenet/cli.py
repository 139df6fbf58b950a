"""Command line front end for the capture-to-likelihood pipeline."""

from __future__ import annotations

import json
import sys
from datetime import date
from pathlib import Path

import click

from . import ingest as ingest_mod
from . import pipeline, synth, timebase
from .identity import mappings_from_doc, profiles_from_doc
from .storage import Store


def _store(data_dir: str | None) -> Store:
    return Store(data_dir) if data_dir else Store()


@click.group()
def main() -> None:
    """Turn header-level packet captures into daily behavioral likelihoods."""


@main.command("ingest")
@click.argument("captures", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--dataset", required=True, help="Name for this capture set.")
@click.option("--delta", default=timebase.DEFAULT_DELTA_SECONDS, show_default=True,
              help="Window length in seconds; must divide 24 h.")
@click.option("--tz", default="UTC", show_default=True, help="Local timezone of the household.")
@click.option("--data-dir", default=None, help="Data directory (defaults to CARENET_DATA_DIR).")
def ingest_cmd(captures: tuple[str, ...], dataset: str, delta: int, tz: str, data_dir: str | None) -> None:
    """Partition captures into windows and summarize per user."""
    store = _store(data_dir)
    resolver = store.resolver()
    part = ingest_mod.partition(store, dataset, list(captures), delta, tz, resolver)
    click.echo(
        f"partitioned {part.packets_written}/{part.packets_read} packets into "
        f"{part.windows} windows ({part.rejected_timestamp} bad timestamps, "
        f"{part.capture.malformed} malformed, {part.capture.non_ip} non-ip)"
    )
    summ = ingest_mod.summarize(store, dataset, resolver)
    click.echo(
        f"summarized {summ.windows} windows over {summ.days} days into {summ.lines} rows; "
        f"users: {', '.join(summ.users) or 'none'}"
    )
    if summ.dns_unregistrable:
        click.echo(f"dropped {summ.dns_unregistrable} DNS queries without a registrable domain")
    store.write_run_log("ingest", {"dataset": dataset, "windows": part.windows})


@main.command("features")
@click.option("--dataset", required=True)
@click.option("--data-dir", default=None)
def features_cmd(dataset: str, data_dir: str | None) -> None:
    """Extract daily features for every user in a dataset."""
    store = _store(data_dir)
    report = pipeline.compute_features(store, dataset)
    click.echo(
        f"wrote {report.files} feature files over {report.days} days; "
        f"users: {', '.join(report.users) or 'none'}"
    )
    store.write_run_log("features", {"dataset": dataset, "files": report.files})


@main.command("score")
@click.option("--dataset", required=True)
@click.option("--data-dir", default=None)
def score_cmd(dataset: str, data_dir: str | None) -> None:
    """Score every user-day under the stored calibration."""
    store = _store(data_dir)
    pset = store.load_parameters()
    for w in pset.warnings:
        click.echo(f"note: {w}")
    report = pipeline.compute_scores(store, dataset, pset)
    click.echo(f"wrote {report.files} score files (config {report.config_hash})")
    store.write_run_log(
        "score", {"dataset": dataset, "config_hash": report.config_hash, "files": report.files}
    )


@main.command("gate")
@click.option("--dataset", required=True)
@click.option("--user", "user_id", required=True)
@click.option("--as-of", "as_of", required=True, help="Decision date, YYYY-MM-DD.")
@click.option("--data-dir", default=None)
def gate_cmd(dataset: str, user_id: str, as_of: str, data_dir: str | None) -> None:
    """Show the persistence-gate decision for one user on one date."""
    store = _store(data_dir)
    pset = store.load_parameters()
    view = pipeline.gate_view(store, dataset, user_id, date.fromisoformat(as_of), pset)
    click.echo(
        f"{user_id} @ {as_of}: window {view['window_days']}d, "
        f"needs {view['required_days']} days at likelihood >= {view['threshold']}"
    )
    for key, crit in view["criteria"].items():
        mark = "PRESENT" if crit["present"] else "absent"
        click.echo(f"  {key} {crit['label']}: {crit['positive_days']} positive days -> {mark}")
    click.echo(f"  episode: {'yes' if view['episode'] else 'no'}")


@main.command("simulate")
@click.argument("scenario", type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path(), help="Output directory.")
@click.option("--install-identity", is_flag=True,
              help="Also write the scenario's profiles and address mappings into the data directory.")
@click.option("--data-dir", default=None)
def simulate_cmd(scenario: str, out: str, install_identity: bool, data_dir: str | None) -> None:
    """Generate a synthetic capture plus its expectation ledger."""
    sc = synth.load_scenario(scenario)
    pcap_path, ledger_path = synth.write_outputs(sc, out)
    click.echo(f"wrote {pcap_path} and {ledger_path}")
    if install_identity:
        store = _store(data_dir)
        ledger = json.loads(ledger_path.read_text("utf-8"))
        store.save_profiles(profiles_from_doc(ledger["profiles"]))
        store.save_mappings(mappings_from_doc(ledger["mappings"]))
        click.echo(f"installed identity documents into {store.root}")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8787, show_default=True)
@click.option("--data-dir", default=None)
def serve_cmd(host: str, port: int, data_dir: str | None) -> None:
    """Run the HTTP service over the data directory."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(_store(data_dir)), host=host, port=port)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
