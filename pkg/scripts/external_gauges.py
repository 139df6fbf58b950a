#!/usr/bin/env python3
"""Recompute per-criterion mean likelihoods for an externally captured dataset.

The calibration that ships with this package was fitted on a 40-day
residential capture that cannot be redistributed, so the headline gauges
from that study (mean C4 likelihood 0.655, mean C8 likelihood 0.622) are
reference points, not regression targets: nothing bundled here can or
should reproduce them. If you hold a comparable capture, ingest and score
it with the carenet CLI, then point this script at the resulting store to
compute the same gauges over your own data.

Example:
    carenet ingest --data-dir /data --dataset home --tz Europe/Berlin *.pcap
    carenet features --data-dir /data --dataset home
    carenet score --data-dir /data --dataset home
    python scripts/external_gauges.py --data-dir /data --dataset home \
        --user resident --from 2025-01-01 --to 2025-02-09
"""

from __future__ import annotations

import argparse
import sys
from datetime import date
from statistics import fmean

from carenet.pipeline import load_score_doc
from carenet.storage import Store
from carenet.timebase import date_range

REFERENCE_MEANS = {"C4": 0.655, "C8": 0.622}
REFERENCE_NOTE = (
    "reference capture: 40 days, single household, not distributable"
)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        description=__doc__.splitlines()[0],
        epilog="Without arguments this explains why no numbers are printed.",
    )
    parser.add_argument("--data-dir", help="store root written by the carenet CLI")
    parser.add_argument("--dataset", help="dataset name inside the store")
    parser.add_argument("--user", help="user id the scores belong to")
    parser.add_argument("--from", dest="first", help="first day, YYYY-MM-DD")
    parser.add_argument("--to", dest="last", help="last day, YYYY-MM-DD")
    args = parser.parse_args(argv)

    required = [args.data_dir, args.dataset, args.user, args.first, args.last]
    if not all(required):
        print(
            "external_gauges: no dataset supplied, nothing to compute.\n"
            "\n"
            "The shipped calibration was fitted on a 40-day residential capture\n"
            "that is not bundled and cannot be redistributed. Its headline means\n"
            f"(C4 {REFERENCE_MEANS['C4']}, C8 {REFERENCE_MEANS['C8']}) are quoted"
            " for orientation only and are\n"
            "not reproducible from the synthetic traces in this repository.\n"
            "\n"
            "To compute the same gauges over a capture you hold, pass\n"
            "--data-dir/--dataset/--user/--from/--to (see --help).",
            file=sys.stderr,
        )
        return 2

    store = Store(args.data_dir)
    first, last = date.fromisoformat(args.first), date.fromisoformat(args.last)
    series: dict[str, list[float]] = {}
    days = 0
    for day in date_range(first, last):
        doc = load_score_doc(store, args.dataset, args.user, day)
        if doc is None:
            continue
        days += 1
        for key, value in doc["likelihoods"].items():
            if value is not None:
                series.setdefault(key, []).append(value)

    if not days:
        print(
            f"external_gauges: no scored days for {args.user!r} in "
            f"{args.dataset!r} between {first} and {last}",
            file=sys.stderr,
        )
        return 1

    print(f"dataset={args.dataset} user={args.user} days_scored={days}")
    print(f"({REFERENCE_NOTE})")
    for key in sorted(set(series) | set(REFERENCE_MEANS)):
        values = series.get(key, [])
        mean = f"{fmean(values):.3f}" if values else "n/a"
        ref = REFERENCE_MEANS.get(key)
        ref_text = f"reference {ref:.3f}" if ref is not None else "no reference"
        print(f"  {key}: mean likelihood {mean} over {len(values)} days ({ref_text})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
