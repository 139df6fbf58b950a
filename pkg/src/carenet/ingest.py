"""Capture ingestion: partition packets into window files, then summarize.

Partitioning reads capture files, keeps header facts only, and writes one
JSONL file per local-clock window under processed/<dataset>/. Records with
timestamps outside a sane range (1990..2100) are rejected and counted, not
silently dropped. A fresh partition wipes the dataset's derived artifacts
first so the directory always reflects exactly the given captures.

Summarizing replays those window files and reduces them to per-user
aggregates (one JSONL line per user per window) grouped into daily files
under summaries/<dataset>/. Identity resolution happens here, not at
partition time, so remapping an address only requires re-summarizing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from . import pcapio, timebase
from .identity import IdentityResolver
from .psl import SuffixIndex, bundled_index
from .records import (
    DOWN,
    EXTERNAL,
    INTERNAL,
    SMALL_PAYLOAD_BYTES,
    UP,
    PacketRecord,
    WindowSummary,
)
from .storage import DatasetMeta, Store, atomic_write_text


@dataclass
class PartitionReport:
    dataset: str
    packets_read: int = 0
    packets_written: int = 0
    rejected_timestamp: int = 0
    windows: int = 0
    capture: pcapio.CaptureStats = field(default_factory=pcapio.CaptureStats)


@dataclass
class SummarizeReport:
    dataset: str
    windows: int = 0
    days: int = 0
    lines: int = 0
    dns_queries: int = 0
    dns_unregistrable: int = 0
    users: list[str] = field(default_factory=list)


def partition(
    store: Store,
    dataset: str,
    capture_paths: list[str | Path],
    delta_seconds: int,
    tz_name: str,
    resolver: IdentityResolver,
) -> PartitionReport:
    """Split captures into per-window packet record files."""
    timebase.validate_delta(delta_seconds)
    tz = timebase.get_zone(tz_name)
    report = PartitionReport(dataset=dataset)

    packets: list[pcapio.ParsedPacket] = []
    for path in capture_paths:
        parsed, stats = pcapio.read_capture(str(path))
        packets.extend(parsed)
        report.capture.merge(stats)
    packets.sort(key=lambda p: p.timestamp)
    report.packets_read = len(packets)

    store.wipe_dataset(dataset)
    by_window: dict[int, list[PacketRecord]] = {}
    for p in packets:
        if not (timebase.MIN_TIMESTAMP_US <= p.timestamp < timebase.MAX_TIMESTAMP_US):
            report.rejected_timestamp += 1
            continue
        small = (
            p.transport == "TCP"
            and 0 < p.payload_bytes < SMALL_PAYLOAD_BYTES
            and resolver.direction(p.src_addr, p.dst_addr) == UP
        )
        rec = PacketRecord(
            timestamp=p.timestamp,
            src_addr=p.src_addr,
            dst_addr=p.dst_addr,
            src_port=p.src_port,
            dst_port=p.dst_port,
            transport=p.transport,
            payload_bytes=p.payload_bytes,
            dns_qname=p.dns_qname,
            tcp_small_upstream=small,
        )
        win = timebase.window_start_us(p.timestamp, delta_seconds, tz)
        by_window.setdefault(win, []).append(rec)
        report.packets_written += 1

    for win_start in sorted(by_window):
        label = timebase.window_name(win_start, tz)
        lines = "".join(rec.to_json() + "\n" for rec in by_window[win_start])
        atomic_write_text(store.window_file(dataset, label), lines)
    report.windows = len(by_window)

    store.save_dataset_meta(
        DatasetMeta(
            name=dataset,
            delta_seconds=delta_seconds,
            tz_name=tz_name,
            source_files=[Path(p).name for p in capture_paths],
        )
    )
    return report


def _window_start_of(records: list[PacketRecord], delta_seconds: int, tz) -> int:
    return timebase.window_start_us(records[0].timestamp, delta_seconds, tz)


def summarize(
    store: Store,
    dataset: str,
    resolver: IdentityResolver,
    suffixes: SuffixIndex | None = None,
) -> SummarizeReport:
    """Reduce window packet files to per-user window summary lines by day."""
    meta = store.load_dataset_meta(dataset)
    tz = timebase.get_zone(meta.tz_name)
    suffixes = suffixes or bundled_index()
    report = SummarizeReport(dataset=dataset)

    days: dict[date, list[WindowSummary]] = {}
    users_seen: set[str] = set()
    proc_dir = store.processed_dir(dataset)
    files = sorted(proc_dir.glob("*.jsonl")) if proc_dir.is_dir() else []
    for path in files:
        records = [
            PacketRecord.from_json(line)
            for line in path.read_text("utf-8").splitlines()
            if line
        ]
        if not records:
            continue
        report.windows += 1
        win_start = _window_start_of(records, meta.delta_seconds, tz)
        day = timebase.local_date(win_start, tz)
        summaries = _summarize_window(win_start, records, resolver, suffixes, report)
        users_seen.update(s.user_id for s in summaries)
        days.setdefault(day, []).extend(summaries)

    for day in sorted(days):
        rows = sorted(days[day], key=lambda s: (s.window_start, s.user_id))
        atomic_write_text(
            store.summary_file(dataset, day), "".join(r.to_json() + "\n" for r in rows)
        )
        report.lines += len(rows)
    report.days = len(days)
    report.users = sorted(users_seen)
    return report


def _summarize_window(
    win_start: int,
    records: list[PacketRecord],
    resolver: IdentityResolver,
    suffixes: SuffixIndex,
    report: SummarizeReport,
) -> list[WindowSummary]:
    per_user: dict[str, dict] = {}
    for rec in records:
        direction, user = resolver.attribute(rec.src_addr, rec.dst_addr, rec.timestamp)
        agg = per_user.setdefault(
            user,
            {
                "packets": 0,
                "up": 0,
                "down": 0,
                "tcp": 0,
                "udp": 0,
                "other": 0,
                "dns": [],
                "small_ts": [],
            },
        )
        agg["packets"] += 1
        if direction in (UP, INTERNAL):
            agg["up"] += rec.payload_bytes
        else:
            agg["down"] += rec.payload_bytes
        key = rec.transport.lower() if rec.transport in ("TCP", "UDP") else "other"
        agg[key] += 1
        if rec.dns_qname is not None:
            report.dns_queries += 1
            domain = suffixes.registrable_domain(rec.dns_qname)
            if domain is None:
                report.dns_unregistrable += 1
            else:
                agg["dns"].append((rec.timestamp, domain))
        if rec.tcp_small_upstream:
            agg["small_ts"].append(rec.timestamp)

    out: list[WindowSummary] = []
    for user in sorted(per_user):
        agg = per_user[user]
        n = agg["packets"]
        gaps = [
            (t2 - t1) / 1_000_000
            for t1, t2 in zip(agg["small_ts"], agg["small_ts"][1:])
        ]
        out.append(
            WindowSummary(
                window_start=win_start,
                user_id=user,
                packet_count=n,
                byte_count_up=agg["up"],
                byte_count_down=agg["down"],
                share_tcp=agg["tcp"] / n,
                share_udp=agg["udp"] / n,
                share_other=agg["other"] / n,
                dns_events=agg["dns"],
                small_upstream_gaps=gaps,
            )
        )
    return out


def load_day_summaries(store: Store, dataset: str, day: date) -> list[WindowSummary]:
    path = store.summary_file(dataset, day)
    if not path.exists():
        return []
    return [
        WindowSummary.from_json(line)
        for line in path.read_text("utf-8").splitlines()
        if line
    ]
