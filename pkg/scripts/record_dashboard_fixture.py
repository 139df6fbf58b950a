#!/usr/bin/env python3
"""Record HTTP fixtures for the dashboard test suite.

Runs one synthetic household (late nights plus heavy DNS churn, so both
shipped criteria go present with no episode) through the full pipeline,
then captures the API responses the dashboard tests replay offline:

    config.json            GET /api/config (theta 0.6)
    gate_before.json       GET /api/gate   (C4 and C8 present)
    episode.json           GET /api/episode
    likelihood_c4.json     GET /api/criteria/C4/likelihood (14-day span)
    config_put.json        PUT /api/config with theta 0.9 (If-Match CAS)
    recompute.json         POST /api/recompute
    gate_after.json        GET /api/gate after the recompute (nothing present)

Usage: python scripts/record_dashboard_fixture.py [--out frontend/tests/fixtures]
"""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from carenet import ingest, pipeline, synth
from carenet.identity import mappings_from_doc, profiles_from_doc
from carenet.service import create_app
from carenet.storage import Store

SCENARIO = {
    "name": "fixture",
    "start_date": "2026-03-01",
    "days": 10,
    "tz": "UTC",
    "delta_seconds": 300,
    "seed": 5,
    "devices": [
        {
            "user_id": "subject",
            "ip": "192.168.1.10",
            "blocks": [
                {"start": "00:00", "end": "10:30", "density": 1.0},
                {"start": "22:05", "end": "24:00", "density": 1.0},
            ],
            "dns": {
                "bursts": {
                    "per_day": 535,
                    "domains_per_burst": 4,
                    "start": "00:05",
                    "burst_spacing_seconds": 70,
                    "query_spacing_seconds": 2,
                    "suffix": "net",
                },
                "repeats": {
                    "per_day": 60,
                    "start": "22:10",
                    "spacing_seconds": 55,
                    "domain": "studyhelp.net",
                },
            },
            "typing": {"start": "23:10:05", "keystrokes": 40, "gap_seconds": 0.17},
        }
    ],
}

GATE_PARAMS = {"user": "subject", "as_of": "2026-03-10"}
SERIES_PARAMS = {"user": "subject", "from": "2026-02-25", "to": "2026-03-10"}


def build_store(root: Path) -> tuple[Store, str]:
    sc = synth.load_scenario(SCENARIO)
    pcap_path, ledger_path = synth.write_outputs(sc, root / "sim")
    ledger = json.loads(ledger_path.read_text("utf-8"))
    store = Store(root / "data")
    store.save_profiles(profiles_from_doc(ledger["profiles"]))
    store.save_mappings(mappings_from_doc(ledger["mappings"]))
    resolver = store.resolver()
    ingest.partition(store, sc.name, [pcap_path], sc.delta_seconds, sc.tz, resolver)
    ingest.summarize(store, sc.name, resolver)
    pipeline.compute_features(store, sc.name)
    pipeline.compute_scores(store, sc.name, store.load_parameters())
    return store, sc.name


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--out",
        default=str(Path(__file__).resolve().parents[1] / "frontend" / "tests" / "fixtures"),
    )
    args = parser.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    recorded: dict[str, dict] = {}
    with tempfile.TemporaryDirectory() as tmp:
        store, _ = build_store(Path(tmp))
        with TestClient(create_app(store)) as client:
            config = client.get("/api/config")
            recorded["config"] = config.json()
            etag = config.headers["ETag"]

            gate_before = client.get("/api/gate", params=GATE_PARAMS).json()
            recorded["gate_before"] = gate_before
            recorded["episode"] = client.get("/api/episode", params=GATE_PARAMS).json()
            recorded["likelihood_c4"] = client.get(
                "/api/criteria/C4/likelihood", params=SERIES_PARAMS
            ).json()

            draft = recorded["config"]["config"]
            draft["gate"]["theta"] = 0.9
            put = client.put("/api/config", json=draft, headers={"If-Match": etag})
            put.raise_for_status()
            recorded["config_put"] = put.json()
            recorded["recompute"] = client.post("/api/recompute").json()
            gate_after = client.get("/api/gate", params=GATE_PARAMS).json()
            recorded["gate_after"] = gate_after

    present = [k for k, c in gate_before["criteria"].items() if c["present"]]
    if present != ["C4", "C8"] or gate_before["episode"]:
        raise SystemExit(f"fixture drifted: present={present} episode={gate_before['episode']}")
    still_positive = sum(c["positive_days"] for c in gate_after["criteria"].values())
    if still_positive or gate_after["present_count"]:
        raise SystemExit("fixture drifted: positives survived the 0.9 threshold")
    if recorded["config_put"]["config_hash"] != gate_after["config_hash"]:
        raise SystemExit("fixture drifted: config hash mismatch after recompute")

    for name, doc in recorded.items():
        path = out / f"{name}.json"
        path.write_text(json.dumps(doc, indent=2) + "\n", "utf-8")
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
