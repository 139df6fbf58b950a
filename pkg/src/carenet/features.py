"""Daily behavioral features from per-window traffic summaries.

Each feature reduces one local calendar day of a user's windows to a single
number, or None when the day holds too little signal to say anything. Time
bands are fixed wall-clock ranges; a window belongs to a band when its start
offset from local midnight falls inside the band.

Sleep-adjacent features lean on idle structure (runs of windows without
packets), activity features on DNS query timing, and the typing feature on
gaps between small upstream packets.
"""

from __future__ import annotations

import statistics
from collections import Counter
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Sequence
from zoneinfo import ZoneInfo

from . import timebase
from .records import WindowSummary

WAKE_ANCHOR_S = 4 * 3600  # wake timing is measured from 04:00 local
NIGHT_REST_BANDS = ((0, 10 * 3600), (20 * 3600, 24 * 3600))  # where a sleep gap may lie
DAYTIME_BAND = (8 * 3600, 18 * 3600)
NIGHT_TRAFFIC_BANDS = ((22 * 3600, 24 * 3600), (0, 6 * 3600))
DAY_TRAFFIC_BAND = (6 * 3600, 22 * 3600)

WAKE_FEATURE = "C4_F2_WakeAfter0400Min"
SLEEP_Z_FEATURE = "C4_F4_SleepDurationZAbs30d"
IDLE_FEATURE = "C4_F7_DaytimeIdleRatio0818"
TRAFFIC_FEATURE = "C4_F8_NightDayTrafficRatioBytes"
BURST_FEATURE = "C8_F2_DNSBurstRatePerHour"
REPEAT_FEATURE = "C8_F4_RepeatedQueryRatio60m"
TYPING_FEATURE = "C8_F8_MedianIKSsec"

FEATURE_NAMES = (
    WAKE_FEATURE,
    SLEEP_Z_FEATURE,
    IDLE_FEATURE,
    TRAFFIC_FEATURE,
    BURST_FEATURE,
    REPEAT_FEATURE,
    TYPING_FEATURE,
)


@dataclass(frozen=True)
class FeatureConfig:
    session_gap_seconds: int = 900  # occupied windows further apart start a new session
    typing_gap_lo_s: float = 0.03  # gaps at or under this are machine chatter
    typing_gap_hi_s: float = 2.0  # gaps at or over this are pauses, not keystrokes
    typing_min_gaps: int = 20
    burst_min_domains: int = 3
    burst_span_seconds: int = 60
    repeat_span_seconds: int = 3600
    repeat_min_queries: int = 5
    z_history_days: int = 30
    z_min_history: int = 7


@dataclass
class DayExtract:
    """One user-day of base features plus the inputs the z-score needs later."""

    day: date
    user_id: str
    total_windows: int
    occupied_windows: int
    coverage: float
    sleep_duration_min: float | None
    values: dict[str, float | None]  # base features, SLEEP_Z_FEATURE filled in later


def extract_day(
    day: date,
    user_id: str,
    summaries: Sequence[WindowSummary],
    delta_seconds: int,
    tz: ZoneInfo,
    cfg: FeatureConfig = FeatureConfig(),
) -> DayExtract:
    """Reduce one user's windows on one local day to base feature values."""
    day_us = timebase.day_start_us(day, tz)
    next_us = timebase.day_start_us(day + timedelta(days=1), tz)
    day_len_s = int((next_us - day_us) // 1_000_000)
    total = day_len_s // delta_seconds
    delta_us = delta_seconds * 1_000_000

    occupied_idx: set[int] = set()
    for s in summaries:
        if s.packet_count > 0:
            occupied_idx.add(int((s.window_start - day_us) // delta_us))
    occupied_offsets = sorted(i * delta_seconds for i in occupied_idx)
    coverage = len(occupied_idx) / total if total else 0.0

    values: dict[str, float | None] = {}
    values[WAKE_FEATURE] = _wake_after_anchor(occupied_offsets, cfg.session_gap_seconds)
    sleep_min = _night_rest_minutes(occupied_idx, total, delta_seconds, day_len_s)
    values[IDLE_FEATURE] = _daytime_idle_ratio(occupied_idx, total, delta_seconds)
    values[TRAFFIC_FEATURE] = _night_day_bytes_ratio(summaries, day_us, delta_us, day_len_s)

    events = sorted(
        ((ts, dom) for s in summaries for ts, dom in s.dns_events), key=lambda e: (e[0], e[1])
    )
    active_hours = len({off // 3600 for off in occupied_offsets})
    if active_hours:
        bursts = count_dns_bursts(events, cfg.burst_min_domains, cfg.burst_span_seconds)
        values[BURST_FEATURE] = bursts / active_hours
    else:
        values[BURST_FEATURE] = None
    values[REPEAT_FEATURE] = repeated_query_ratio(
        events, cfg.repeat_span_seconds, cfg.repeat_min_queries
    )
    values[TYPING_FEATURE] = _median_typing_gap(summaries, cfg)

    return DayExtract(
        day=day,
        user_id=user_id,
        total_windows=total,
        occupied_windows=len(occupied_idx),
        coverage=coverage,
        sleep_duration_min=sleep_min,
        values=values,
    )


def _wake_after_anchor(occupied_offsets: list[int], gap_s: int) -> float | None:
    """Minutes from 04:00 to the first activity session starting at or after it."""
    prev = None
    for off in occupied_offsets:
        starts_session = prev is None or off - prev > gap_s
        if starts_session and off >= WAKE_ANCHOR_S:
            return (off - WAKE_ANCHOR_S) / 60.0
        prev = off
    return None


def _idle_runs(occupied_idx: set[int], total: int) -> list[tuple[int, int]]:
    """Maximal runs of idle windows as (start_index, length), day edges included."""
    runs: list[tuple[int, int]] = []
    i = 0
    while i < total:
        if i in occupied_idx:
            i += 1
            continue
        j = i
        while j < total and j not in occupied_idx:
            j += 1
        runs.append((i, j - i))
        i = j
    return runs


def _night_rest_minutes(
    occupied_idx: set[int], total: int, delta_s: int, day_len_s: int
) -> float | None:
    """Length of the longest idle run that touches the night-rest bands.

    A day with no activity at all has nothing to rest *from*, so it carries
    no measurement rather than a day-long one.
    """
    if not occupied_idx:
        return None
    bands = [(lo, min(hi, day_len_s)) for lo, hi in NIGHT_REST_BANDS]
    best = None
    for start_idx, length in _idle_runs(occupied_idx, total):
        lo_s = start_idx * delta_s
        hi_s = (start_idx + length) * delta_s
        if any(lo_s < b_hi and b_lo < hi_s for b_lo, b_hi in bands):
            if best is None or length > best:
                best = length
    return best * delta_s / 60.0 if best is not None else None


def _daytime_idle_ratio(occupied_idx: set[int], total: int, delta_s: int) -> float | None:
    lo, hi = DAYTIME_BAND
    in_band = [i for i in range(total) if lo <= i * delta_s < hi]
    if not in_band:
        return None
    idle = sum(1 for i in in_band if i not in occupied_idx)
    return idle / len(in_band)


def _night_day_bytes_ratio(
    summaries: Sequence[WindowSummary], day_us: int, delta_us: int, day_len_s: int
) -> float | None:
    night_bands = [(lo, min(hi, day_len_s)) for lo, hi in NIGHT_TRAFFIC_BANDS]
    night = 0
    day_total = 0
    for s in summaries:
        off = int((s.window_start - day_us) // 1_000_000)
        size = s.byte_count_up + s.byte_count_down
        if any(lo <= off < hi for lo, hi in night_bands):
            night += size
        elif DAY_TRAFFIC_BAND[0] <= off < DAY_TRAFFIC_BAND[1]:
            day_total += size
    if day_total == 0:
        return None
    return night / day_total


def count_dns_bursts(
    events: Sequence[tuple[int, str]], min_domains: int, span_seconds: int
) -> int:
    """Greedy left-to-right count of non-overlapping query bursts.

    A burst anchors at some query and collects every query within the next
    `span_seconds` (inclusive); it counts when the collected queries name at
    least `min_domains` distinct domains, and its queries are then consumed.
    """
    span_us = span_seconds * 1_000_000
    n = len(events)
    i = 0
    bursts = 0
    while i < n:
        j = i
        domains: set[str] = set()
        while j < n and events[j][0] - events[i][0] <= span_us:
            domains.add(events[j][1])
            j += 1
        if len(domains) >= min_domains:
            bursts += 1
            i = j
        else:
            i += 1
    return bursts


def repeated_query_ratio(
    events: Sequence[tuple[int, str]], span_seconds: int, min_queries: int
) -> float | None:
    """Highest repeat fraction over query-anchored spans of `span_seconds`.

    For each span [t, t + span) holding at least `min_queries` queries the
    repeat fraction is 1 - distinct/total. None when no span qualifies.
    Runs as a two-pointer sweep so dense days stay linear.
    """
    span_us = span_seconds * 1_000_000
    n = len(events)
    best: float | None = None
    in_span: Counter[str] = Counter()
    j = 0
    for a in range(n):
        while j < n and events[j][0] < events[a][0] + span_us:
            in_span[events[j][1]] += 1
            j += 1
        count = j - a
        if count >= min_queries:
            frac = (count - len(in_span)) / count
            if best is None or frac > best:
                best = frac
        dom = events[a][1]
        in_span[dom] -= 1
        if in_span[dom] == 0:
            del in_span[dom]
    return best


def _median_typing_gap(summaries: Sequence[WindowSummary], cfg: FeatureConfig) -> float | None:
    gaps = [
        g
        for s in summaries
        for g in s.small_upstream_gaps
        if cfg.typing_gap_lo_s < g < cfg.typing_gap_hi_s
    ]
    if len(gaps) < cfg.typing_min_gaps:
        return None
    return float(statistics.median(gaps))


def sleep_duration_z_abs(
    today: float | None, prior: Sequence[float | None], cfg: FeatureConfig = FeatureConfig()
) -> float | None:
    """|z| of today's rest duration against the trailing history.

    `prior` holds the durations of the preceding `z_history_days` calendar
    days (oldest first, None where that day had no measurement); fewer than
    `z_min_history` measured days means no score. A flat history pins z at 0.
    """
    if today is None:
        return None
    window = list(prior)[-cfg.z_history_days :]
    known = [v for v in window if v is not None]
    if len(known) < cfg.z_min_history:
        return None
    mean = statistics.fmean(known)
    spread = statistics.pstdev(known)
    if spread == 0.0:
        return 0.0
    return abs((today - mean) / spread)
