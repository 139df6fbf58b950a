"""Synthetic household traffic with a paired expectation ledger.

A scenario file describes devices, their daily activity blocks, and optional
DNS and typing habits. Generation produces two tightly coupled artifacts:

  * a pcap of the resulting packets, byte-deterministic for a given scenario
    (one RNG seeded from the scenario drives every random draw), and
  * a ledger recording, for every mapped user and day, the feature values the
    pipeline is expected to produce.

The ledger is computed straight from the generated packet plan using its own
small implementations of the documented feature definitions. It deliberately
does not call the ingestion or feature modules, so a bug there cannot cancel
against itself when captures are replayed through the pipeline and compared.
"""

from __future__ import annotations

import bisect
import json
import random
import re
import statistics
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

from . import pcapio, timebase

SERVICE_IP = "198.51.100.7"
RESOLVER_IP = "198.51.100.53"
ACTIVITY_PORT = 9999
TYPING_PORT = 443

# Mirrors of the documented feature defaults. The ledger restates them on
# purpose: if the engine's defaults drift, replay comparisons fail loudly.
_SESSION_GAP_S = 900
_WAKE_ANCHOR_S = 4 * 3600
_NIGHT_REST_BANDS = ((0, 10 * 3600), (20 * 3600, 24 * 3600))
_DAYTIME_BAND = (8 * 3600, 18 * 3600)
_NIGHT_TRAFFIC_BANDS = ((22 * 3600, 24 * 3600), (0, 6 * 3600))
_DAY_TRAFFIC_BAND = (6 * 3600, 22 * 3600)
_BURST_MIN_DOMAINS = 3
_BURST_SPAN_S = 60
_REPEAT_SPAN_S = 3600
_REPEAT_MIN_QUERIES = 5
_TYPING_LO_S = 0.03
_TYPING_HI_S = 2.0
_TYPING_MIN_GAPS = 20
_Z_HISTORY_DAYS = 30
_Z_MIN_HISTORY = 7

_DOMAIN_RE = re.compile(r"^[a-z0-9]([a-z0-9-]*[a-z0-9])?\.(com|net|org|io)$")

_FEATURES = (
    "C4_F2_WakeAfter0400Min",
    "C4_F4_SleepDurationZAbs30d",
    "C4_F7_DaytimeIdleRatio0818",
    "C4_F8_NightDayTrafficRatioBytes",
    "C8_F2_DNSBurstRatePerHour",
    "C8_F4_RepeatedQueryRatio60m",
    "C8_F8_MedianIKSsec",
)


class ScenarioError(ValueError):
    pass


@dataclass
class Block:
    start_s: int
    end_s: int
    density: float = 1.0
    days: str = "all"  # all | odd | even
    start_jitter_windows: int = 0

    def applies(self, day_index: int) -> bool:
        if self.days == "odd":
            return day_index % 2 == 1
        if self.days == "even":
            return day_index % 2 == 0
        return True


@dataclass
class DnsBursts:
    per_day: int
    domains_per_burst: int
    start_s: int
    burst_spacing_s: int
    query_spacing_s: int
    suffix: str = "net"


@dataclass
class DnsRepeats:
    per_day: int
    start_s: int
    spacing_s: int
    domain: str = "studyhelp.net"


@dataclass
class TypingProfile:
    start_s: float
    keystrokes: int
    gap_s: float
    gap_jitter_s: float = 0.0
    payload_bytes: int = 20


@dataclass
class DeviceSpec:
    ip: str
    user_id: str | None
    blocks: list[Block] = field(default_factory=list)
    upstream_bytes: int = 100
    downstream_bytes: int = 800
    random_windows_per_day: int = 0
    bursts: DnsBursts | None = None
    repeats: DnsRepeats | None = None
    typing: TypingProfile | None = None


@dataclass
class Scenario:
    name: str
    start_date: date
    days: int
    tz: str
    delta_seconds: int
    seed: int
    devices: list[DeviceSpec]


def _clock_s(text: str, where: str) -> int:
    try:
        return timebase.parse_clock_seconds(text)
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def load_scenario(source: dict | str | Path) -> Scenario:
    if not isinstance(source, dict):
        source = json.loads(Path(source).read_text("utf-8"))
    doc = source
    try:
        name = str(doc["name"])
        start = date.fromisoformat(doc["start_date"])
        days = int(doc["days"])
        tz = str(doc.get("tz", "UTC"))
        delta = int(doc.get("delta_seconds", timebase.DEFAULT_DELTA_SECONDS))
        seed = int(doc.get("seed", 1))
        dev_docs = doc["devices"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"scenario is missing required fields: {exc}") from exc
    if days < 1:
        raise ScenarioError("days must be at least 1")
    try:
        timebase.validate_delta(delta)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc

    devices = []
    for i, dd in enumerate(dev_docs):
        where = f"devices[{i}]"
        ip = dd.get("ip")
        if not ip:
            raise ScenarioError(f"{where}: missing ip")
        blocks = []
        for j, bd in enumerate(dd.get("blocks", [])):
            bw = f"{where}.blocks[{j}]"
            blk = Block(
                start_s=_clock_s(bd["start"], bw),
                end_s=_clock_s(bd["end"], bw),
                density=float(bd.get("density", 1.0)),
                days=str(bd.get("days", "all")),
                start_jitter_windows=int(bd.get("start_jitter_windows", 0)),
            )
            _check_block(blk, delta, bw)
            blocks.append(blk)
        _check_block_overlap(blocks, delta, where)
        bursts = repeats = typing = None
        dns = dd.get("dns") or {}
        if dns.get("bursts"):
            b = dns["bursts"]
            bursts = DnsBursts(
                per_day=int(b["per_day"]),
                domains_per_burst=int(b["domains_per_burst"]),
                start_s=_clock_s(b["start"], f"{where}.dns.bursts"),
                burst_spacing_s=int(b["burst_spacing_seconds"]),
                query_spacing_s=int(b["query_spacing_seconds"]),
                suffix=str(b.get("suffix", "net")),
            )
            _check_bursts(bursts, f"{where}.dns.bursts")
        if dns.get("repeats"):
            r = dns["repeats"]
            repeats = DnsRepeats(
                per_day=int(r["per_day"]),
                start_s=_clock_s(r["start"], f"{where}.dns.repeats"),
                spacing_s=int(r["spacing_seconds"]),
                domain=str(r.get("domain", "studyhelp.net")),
            )
            _check_repeats(repeats, f"{where}.dns.repeats")
        if dd.get("typing"):
            t = dd["typing"]
            typing = TypingProfile(
                start_s=float(_clock_s(t["start"], f"{where}.typing")),
                keystrokes=int(t["keystrokes"]),
                gap_s=float(t["gap_seconds"]),
                gap_jitter_s=float(t.get("gap_jitter_seconds", 0.0)),
                payload_bytes=int(t.get("payload_bytes", 20)),
            )
            _check_typing(typing, delta, f"{where}.typing")
        devices.append(
            DeviceSpec(
                ip=str(ip),
                user_id=dd.get("user_id"),
                blocks=blocks,
                upstream_bytes=int(dd.get("upstream_bytes", 100)),
                downstream_bytes=int(dd.get("downstream_bytes", 800)),
                random_windows_per_day=int(dd.get("random_windows_per_day", 0)),
                bursts=bursts,
                repeats=repeats,
                typing=typing,
            )
        )

    sc = Scenario(name, start, days, tz, delta, seed, devices)
    _check_devices(sc)
    return sc


def _check_block(blk: Block, delta: int, where: str) -> None:
    if blk.start_s % delta or blk.end_s % delta:
        raise ScenarioError(f"{where}: block edges must align with {delta}s windows")
    if blk.days not in ("all", "odd", "even"):
        raise ScenarioError(f"{where}: days must be all, odd or even")
    if not (0.0 < blk.density <= 1.0):
        raise ScenarioError(f"{where}: density must lie in (0, 1]")
    if blk.start_jitter_windows < 0:
        raise ScenarioError(f"{where}: jitter cannot be negative")
    j = blk.start_jitter_windows * delta
    if blk.start_s - j < 0 or blk.start_s + j >= blk.end_s:
        raise ScenarioError(f"{where}: jitter can push the block outside its span")


def _check_block_overlap(blocks: list[Block], delta: int, where: str) -> None:
    # odd-day and even-day blocks can never coincide, so check each parity
    for parity in ("odd", "even"):
        spans = sorted(
            (b.start_s - b.start_jitter_windows * delta, b.end_s)
            for b in blocks
            if b.days in ("all", parity)
        )
        for (_s1, e1), (s2, _e2) in zip(spans, spans[1:]):
            if s2 < e1:
                raise ScenarioError(f"{where}: activity blocks may not overlap (with jitter)")


def _check_bursts(b: DnsBursts, where: str) -> None:
    if b.per_day < 0 or b.domains_per_burst < 1 or b.burst_spacing_s < 1 or b.query_spacing_s < 0:
        raise ScenarioError(f"{where}: counts and spacings must be positive")
    if not _DOMAIN_RE.match(f"x.{b.suffix}"):
        raise ScenarioError(f"{where}: suffix must be one of com/net/org/io")
    last = (
        b.start_s
        + max(b.per_day - 1, 0) * b.burst_spacing_s
        + max(b.domains_per_burst - 1, 0) * b.query_spacing_s
    )
    if last >= timebase.SECONDS_PER_DAY:
        raise ScenarioError(f"{where}: bursts run past midnight")


def _check_repeats(r: DnsRepeats, where: str) -> None:
    if r.per_day < 0 or r.spacing_s < 1:
        raise ScenarioError(f"{where}: counts and spacings must be positive")
    if not _DOMAIN_RE.match(r.domain):
        raise ScenarioError(
            f"{where}: domain must be a bare registrable name like example.net"
        )
    if r.start_s + max(r.per_day - 1, 0) * r.spacing_s >= timebase.SECONDS_PER_DAY:
        raise ScenarioError(f"{where}: repeats run past midnight")


def _check_typing(t: TypingProfile, delta: int, where: str) -> None:
    if t.keystrokes < 2 or t.gap_s <= 0 or t.gap_jitter_s < 0 or t.payload_bytes < 1:
        raise ScenarioError(f"{where}: needs at least two keystrokes and positive gaps")
    if t.gap_jitter_s >= t.gap_s:
        raise ScenarioError(f"{where}: gap jitter must stay below the gap itself")
    span = (t.keystrokes - 1) * (t.gap_s + t.gap_jitter_s)
    if (t.start_s % delta) + span >= delta:
        raise ScenarioError(f"{where}: the typing run must fit inside one window")


def _check_devices(sc: Scenario) -> None:
    ips = [d.ip for d in sc.devices]
    if len(set(ips)) != len(ips):
        raise ScenarioError("device ips must be distinct")
    users = [d.user_id for d in sc.devices if d.user_id]
    unmapped = sum(1 for d in sc.devices if not d.user_id)
    if unmapped > 1:
        raise ScenarioError("at most one device may be unmapped (background traffic)")
    if not users:
        raise ScenarioError("at least one device must belong to a named user")


# ---------------------------------------------------------------------------
# Generation


@dataclass
class _Pkt:
    ts: int
    up: bool
    payload: int
    domain: str | None = None
    small_tcp: bool = False


@dataclass
class SynthOutput:
    frames: list[tuple[int, bytes]]
    ledger: dict


def generate(sc: Scenario) -> SynthOutput:
    tz = timebase.get_zone(sc.tz)
    rng = random.Random(sc.seed)
    frames: list[tuple[int, bytes]] = []
    plans: dict[str, dict[date, list[_Pkt]]] = {}
    txid = 0

    for day_index in range(1, sc.days + 1):
        day = sc.start_date + timedelta(days=day_index - 1)
        day_us = timebase.day_start_us(day, tz)
        day_len_s = int(
            (timebase.day_start_us(day + timedelta(days=1), tz) - day_us) // 1_000_000
        )
        total = day_len_s // sc.delta_seconds
        for dev_i, dev in enumerate(sc.devices):
            pkts: list[_Pkt] = []
            occupied: set[int] = set()
            for blk in dev.blocks:
                if not blk.applies(day_index):
                    continue
                jitter = (
                    rng.randint(-blk.start_jitter_windows, blk.start_jitter_windows)
                    if blk.start_jitter_windows
                    else 0
                )
                lo = blk.start_s // sc.delta_seconds + jitter
                hi = min(blk.end_s // sc.delta_seconds, total)
                for idx in range(lo, hi):
                    if blk.density >= 1.0 or rng.random() < blk.density:
                        occupied.add(idx)
            for _ in range(dev.random_windows_per_day):
                occupied.add(rng.randrange(total))

            for idx in sorted(occupied):
                t0 = day_us + idx * sc.delta_seconds * 1_000_000
                up_ts = t0 + 250_000 + dev_i * 1000
                down_ts = t0 + 750_000 + dev_i * 1000
                pkts.append(_Pkt(up_ts, True, dev.upstream_bytes))
                frames.append(
                    (
                        up_ts,
                        pcapio.udp_frame(
                            dev.ip,
                            SERVICE_IP,
                            40000 + dev_i,
                            ACTIVITY_PORT,
                            bytes(dev.upstream_bytes),
                        ),
                    )
                )
                pkts.append(_Pkt(down_ts, False, dev.downstream_bytes))
                frames.append(
                    (
                        down_ts,
                        pcapio.udp_frame(
                            SERVICE_IP,
                            dev.ip,
                            ACTIVITY_PORT,
                            40000 + dev_i,
                            bytes(dev.downstream_bytes),
                        ),
                    )
                )

            if dev.bursts:
                b = dev.bursts
                for bi in range(b.per_day):
                    t_b = day_us + (b.start_s + bi * b.burst_spacing_s) * 1_000_000
                    for j in range(b.domains_per_burst):
                        qname = f"d{day_index:03d}b{bi:04d}n{j}.{b.suffix}"
                        ts = t_b + j * b.query_spacing_s * 1_000_000
                        txid += 1
                        pkts.append(
                            _Pkt(ts, True, len(qname) + 18, domain=qname)
                        )
                        frames.append(
                            (
                                ts,
                                pcapio.dns_query_frame(
                                    dev.ip, RESOLVER_IP, 41000 + dev_i, qname, txid
                                ),
                            )
                        )
            if dev.repeats:
                r = dev.repeats
                for qi in range(r.per_day):
                    ts = day_us + (r.start_s + qi * r.spacing_s) * 1_000_000
                    txid += 1
                    pkts.append(_Pkt(ts, True, len(r.domain) + 18, domain=r.domain))
                    frames.append(
                        (
                            ts,
                            pcapio.dns_query_frame(
                                dev.ip, RESOLVER_IP, 41000 + dev_i, r.domain, txid
                            ),
                        )
                    )
            if dev.typing:
                t = dev.typing
                ts = day_us + int(t.start_s) * 1_000_000
                for k in range(t.keystrokes):
                    if k:
                        gap = t.gap_s
                        if t.gap_jitter_s:
                            gap += rng.uniform(-t.gap_jitter_s, t.gap_jitter_s)
                        ts += int(round(gap * 1_000_000))
                    pkts.append(_Pkt(ts, True, t.payload_bytes, small_tcp=True))
                    frames.append(
                        (
                            ts,
                            pcapio.tcp_frame(
                                dev.ip,
                                SERVICE_IP,
                                42000 + dev_i,
                                TYPING_PORT,
                                bytes(t.payload_bytes),
                                seq=k * t.payload_bytes,
                            ),
                        )
                    )

            if dev.user_id:
                plans.setdefault(dev.user_id, {}).setdefault(day, []).extend(pkts)

    frames.sort(key=lambda f: f[0])
    ledger = _build_ledger(sc, plans)
    ledger["frame_count"] = len(frames)
    return SynthOutput(frames=frames, ledger=ledger)


def write_outputs(sc: Scenario, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = generate(sc)
    pcap_path = out / f"{sc.name}.pcap"
    ledger_path = out / f"{sc.name}.ledger.json"
    pcapio.write_pcap(str(pcap_path), result.frames)
    ledger_path.write_text(json.dumps(result.ledger, indent=2) + "\n", "utf-8")
    return pcap_path, ledger_path


# ---------------------------------------------------------------------------
# Expectation ledger: independent restatements of the feature definitions


def _build_ledger(sc: Scenario, plans: dict[str, dict[date, list[_Pkt]]]) -> dict:
    tz = timebase.get_zone(sc.tz)
    users = sorted(plans)
    expectations = []
    for user in users:
        durations: dict[date, float | None] = {}
        for day_index in range(1, sc.days + 1):
            day = sc.start_date + timedelta(days=day_index - 1)
            day_us = timebase.day_start_us(day, tz)
            day_len_s = int(
                (timebase.day_start_us(day + timedelta(days=1), tz) - day_us)
                // 1_000_000
            )
            total = day_len_s // sc.delta_seconds
            pkts = sorted(plans[user].get(day, []), key=lambda p: p.ts)
            row = _expected_day(pkts, day_us, sc.delta_seconds, total, day_len_s)
            prior = [
                durations.get(day - timedelta(days=k))
                for k in range(_Z_HISTORY_DAYS, 0, -1)
            ]
            row["features"]["C4_F4_SleepDurationZAbs30d"] = _led_z(
                row["sleep_duration_min"], prior
            )
            durations[day] = row["sleep_duration_min"]
            row["features"] = {k: row["features"][k] for k in _FEATURES}
            expectations.append({"user_id": user, "date": day.isoformat(), **row})

    mapped = [d for d in sc.devices if d.user_id]
    return {
        "scenario": sc.name,
        "start_date": sc.start_date.isoformat(),
        "days": sc.days,
        "tz": sc.tz,
        "delta_seconds": sc.delta_seconds,
        "seed": sc.seed,
        "profiles": {
            "users": [
                {"user_id": u, "display_name": u, "notes": ""}
                for u in sorted({d.user_id for d in mapped})
            ]
        },
        "mappings": {
            "mappings": [
                {
                    "address": d.ip,
                    "user_id": d.user_id,
                    "valid_from": None,
                    "valid_to": None,
                }
                for d in sorted(mapped, key=lambda d: d.ip)
            ]
        },
        "expectations": expectations,
    }


def _expected_day(
    pkts: list[_Pkt], day_us: int, delta_s: int, total: int, day_len_s: int
) -> dict:
    delta_us = delta_s * 1_000_000
    occupied = sorted({int((p.ts - day_us) // delta_us) for p in pkts})
    occ_set = set(occupied)
    coverage = len(occupied) / total if total else 0.0

    feats: dict[str, float | None] = {}
    offsets = [i * delta_s for i in occupied]
    feats["C4_F2_WakeAfter0400Min"] = _led_wake(offsets)
    sleep_min = _led_night_rest(occ_set, total, delta_s, day_len_s)
    feats["C4_F7_DaytimeIdleRatio0818"] = _led_idle_ratio(occ_set, total, delta_s)
    feats["C4_F8_NightDayTrafficRatioBytes"] = _led_bytes_ratio(
        pkts, day_us, delta_us, day_len_s
    )
    events = sorted(
        ((p.ts, p.domain) for p in pkts if p.domain), key=lambda e: (e[0], e[1])
    )
    hours = {off // 3600 for off in offsets}
    feats["C8_F2_DNSBurstRatePerHour"] = (
        _led_bursts(events) / len(hours) if hours else None
    )
    feats["C8_F4_RepeatedQueryRatio60m"] = _led_repeat(events)
    feats["C8_F8_MedianIKSsec"] = _led_typing(pkts, day_us, delta_us)
    return {
        "total_windows": total,
        "occupied_windows": len(occupied),
        "coverage": coverage,
        "sleep_duration_min": sleep_min,
        "features": feats,
    }


def _led_wake(offsets: list[int]) -> float | None:
    prev = None
    for off in offsets:
        if (prev is None or off - prev > _SESSION_GAP_S) and off >= _WAKE_ANCHOR_S:
            return (off - _WAKE_ANCHOR_S) / 60.0
        prev = off
    return None


def _led_night_rest(
    occ: set[int], total: int, delta_s: int, day_len_s: int
) -> float | None:
    if not occ:
        return None
    bands = [(lo, min(hi, day_len_s)) for lo, hi in _NIGHT_REST_BANDS]
    best = None
    run = 0
    for i in range(total + 1):
        if i < total and i not in occ:
            run += 1
            continue
        if run:
            lo_s = (i - run) * delta_s
            hi_s = i * delta_s
            if any(lo_s < bh and bl < hi_s for bl, bh in bands):
                if best is None or run > best:
                    best = run
        run = 0
    return best * delta_s / 60.0 if best is not None else None


def _led_idle_ratio(occ: set[int], total: int, delta_s: int) -> float | None:
    lo, hi = _DAYTIME_BAND
    band = [i for i in range(total) if lo <= i * delta_s < hi]
    if not band:
        return None
    return sum(1 for i in band if i not in occ) / len(band)


def _led_bytes_ratio(
    pkts: list[_Pkt], day_us: int, delta_us: int, day_len_s: int
) -> float | None:
    night_bands = [(lo, min(hi, day_len_s)) for lo, hi in _NIGHT_TRAFFIC_BANDS]
    night = day_total = 0
    for p in pkts:
        off = int(((p.ts - day_us) // delta_us) * (delta_us // 1_000_000))
        if any(bl <= off < bh for bl, bh in night_bands):
            night += p.payload
        elif _DAY_TRAFFIC_BAND[0] <= off < _DAY_TRAFFIC_BAND[1]:
            day_total += p.payload
    if day_total == 0:
        return None
    return night / day_total


def _led_bursts(events: list[tuple[int, str]]) -> int:
    span_us = _BURST_SPAN_S * 1_000_000
    count = 0
    i = 0
    while i < len(events):
        j = i
        seen: set[str] = set()
        while j < len(events) and events[j][0] - events[i][0] <= span_us:
            seen.add(events[j][1])
            j += 1
        if len(seen) >= _BURST_MIN_DOMAINS:
            count += 1
            i = j
        else:
            i += 1
    return count


def _led_repeat(events: list[tuple[int, str]]) -> float | None:
    span_us = _REPEAT_SPAN_S * 1_000_000
    times = [t for t, _ in events]
    best = None
    for a in range(len(events)):
        end = bisect.bisect_left(times, times[a] + span_us, a)
        count = end - a
        if count >= _REPEAT_MIN_QUERIES:
            frac = (count - len({d for _, d in events[a:end]})) / count
            if best is None or frac > best:
                best = frac
    return best


def _led_typing(pkts: list[_Pkt], day_us: int, delta_us: int) -> float | None:
    by_window: dict[int, list[int]] = {}
    for p in pkts:
        if p.small_tcp:
            by_window.setdefault(int((p.ts - day_us) // delta_us), []).append(p.ts)
    gaps = []
    for ts_list in by_window.values():
        ts_list.sort()
        for t1, t2 in zip(ts_list, ts_list[1:]):
            g = (t2 - t1) / 1_000_000
            if _TYPING_LO_S < g < _TYPING_HI_S:
                gaps.append(g)
    if len(gaps) < _TYPING_MIN_GAPS:
        return None
    return float(statistics.median(gaps))


def _led_z(today: float | None, prior: list[float | None]) -> float | None:
    if today is None:
        return None
    known = [v for v in prior if v is not None]
    if len(known) < _Z_MIN_HISTORY:
        return None
    mean = statistics.fmean(known)
    spread = statistics.pstdev(known)
    if spread == 0.0:
        return 0.0
    return abs((today - mean) / spread)
