"""Shared builders for the test suite."""

from __future__ import annotations

import json
from pathlib import Path
from zoneinfo import ZoneInfo

from carenet import ingest, pipeline, synth
from carenet.identity import (
    AddressMapping,
    IdentityResolver,
    UserProfile,
    mappings_from_doc,
    profiles_from_doc,
)
from carenet.records import WindowSummary
from carenet.storage import Store

UTC = ZoneInfo("UTC")

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def make_summary(
    window_start: int,
    user_id: str = "u1",
    packet_count: int = 1,
    up: int = 100,
    down: int = 100,
    dns_events=(),
    gaps=(),
) -> WindowSummary:
    return WindowSummary(
        window_start=window_start,
        user_id=user_id,
        packet_count=packet_count,
        byte_count_up=up,
        byte_count_down=down,
        share_tcp=1.0,
        share_udp=0.0,
        share_other=0.0,
        dns_events=[(int(t), d) for t, d in dns_events],
        small_upstream_gaps=list(gaps),
    )


def one_user_resolver(ip: str = "192.168.1.10", user: str = "u1") -> IdentityResolver:
    return IdentityResolver(
        [UserProfile(user_id=user, display_name=user)],
        [AddressMapping(address=ip, user_id=user)],
    )


def run_scenario(tmp_path: Path, scenario_path: Path):
    """Simulate, ingest and score one scenario inside a throwaway store.

    Returns (store, dataset_name, ledger_doc).
    """
    sc = synth.load_scenario(scenario_path)
    pcap_path, ledger_path = synth.write_outputs(sc, tmp_path / "sim")
    ledger = json.loads(ledger_path.read_text("utf-8"))

    store = Store(tmp_path / "data")
    store.save_profiles(profiles_from_doc(ledger["profiles"]))
    store.save_mappings(mappings_from_doc(ledger["mappings"]))
    resolver = store.resolver()
    ingest.partition(store, sc.name, [pcap_path], sc.delta_seconds, sc.tz, resolver)
    ingest.summarize(store, sc.name, resolver)
    pipeline.compute_features(store, sc.name)
    pipeline.compute_scores(store, sc.name, store.load_parameters())
    return store, sc.name, ledger


def tree_digest(root: Path, skip_dirs=("runs",)) -> dict[str, str]:
    """Relative path -> sha256 for every file under root, skipping named dirs."""
    import hashlib

    out: dict[str, str] = {}
    for p in sorted(root.rglob("*")):
        if not p.is_file():
            continue
        rel = p.relative_to(root)
        if rel.parts and rel.parts[0] in skip_dirs:
            continue
        out[str(rel)] = hashlib.sha256(p.read_bytes()).hexdigest()
    return out
