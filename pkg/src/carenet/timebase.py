"""Local-clock time arithmetic shared by every pipeline stage.

All record timestamps are integer microseconds since the Unix epoch (UTC).
Window and day boundaries are defined on the *local wall clock* of a
configured timezone (default UTC), so a window always starts at an exact
multiple of the window length past local midnight.

Arithmetic is kept in integers end to end; floats never touch timestamps.
"""

from __future__ import annotations

from datetime import date, datetime, time, timedelta, timezone
from zoneinfo import ZoneInfo

US_PER_SECOND = 1_000_000
SECONDS_PER_DAY = 86_400
DEFAULT_DELTA_SECONDS = 300

# Sanity bounds for record timestamps (partition rejects outside).
MIN_TIMESTAMP_US = int(datetime(1990, 1, 1, tzinfo=timezone.utc).timestamp()) * US_PER_SECOND
MAX_TIMESTAMP_US = int(datetime(2100, 1, 1, tzinfo=timezone.utc).timestamp()) * US_PER_SECOND


def get_zone(tz_name: str | None) -> ZoneInfo:
    return ZoneInfo(tz_name or "UTC")


def to_local(ts_us: int, tz: ZoneInfo) -> datetime:
    """Convert epoch microseconds to an aware local datetime, exactly."""
    secs, us = divmod(ts_us, US_PER_SECOND)
    return datetime.fromtimestamp(secs, tz).replace(microsecond=us)


def from_local(dt: datetime) -> int:
    """Aware local datetime back to epoch microseconds."""
    return int(dt.timestamp()) * US_PER_SECOND + dt.microsecond


def local_midnight_us(ts_us: int, tz: ZoneInfo) -> int:
    dt = to_local(ts_us, tz)
    return from_local(dt.replace(hour=0, minute=0, second=0, microsecond=0))


def local_date(ts_us: int, tz: ZoneInfo) -> date:
    return to_local(ts_us, tz).date()


def day_start_us(day: date, tz: ZoneInfo) -> int:
    return from_local(datetime.combine(day, time(0, 0), tzinfo=tz))


def validate_delta(delta_seconds: int) -> None:
    """Window length must tile the day and keep HHMM file names unambiguous."""
    if delta_seconds <= 0 or SECONDS_PER_DAY % delta_seconds != 0:
        raise ValueError(f"delta_seconds={delta_seconds} does not divide 24 h evenly")
    if delta_seconds < 60:
        raise ValueError("delta_seconds below 60 would collide minute-resolution window names")


def windows_per_day(delta_seconds: int) -> int:
    return SECONDS_PER_DAY // delta_seconds


def seconds_into_day(ts_us: int, tz: ZoneInfo) -> float:
    return (ts_us - local_midnight_us(ts_us, tz)) / US_PER_SECOND


def window_start_us(ts_us: int, delta_seconds: int, tz: ZoneInfo) -> int:
    """Start (epoch us) of the half-open window [start, start + delta) holding ts."""
    midnight = local_midnight_us(ts_us, tz)
    offset = ts_us - midnight
    return midnight + (offset // (delta_seconds * US_PER_SECOND)) * delta_seconds * US_PER_SECOND


def window_name(win_start_us: int, tz: ZoneInfo) -> str:
    """Local-clock `YYYYMMDD_HHMM` label for a window start."""
    dt = to_local(win_start_us, tz)
    return dt.strftime("%Y%m%d_%H%M")


def clock_us(day: date, clock: str, tz: ZoneInfo) -> int:
    """Epoch microseconds of a `HH:MM[:SS]` wall-clock instant on `day`.

    Accepts "24:00:00" as the exclusive end of the day.
    """
    secs = parse_clock_seconds(clock)
    return day_start_us(day, tz) + secs * US_PER_SECOND


def parse_clock_seconds(clock: str) -> int:
    parts = clock.split(":")
    if len(parts) not in (2, 3):
        raise ValueError(f"bad clock time {clock!r}")
    h, m = int(parts[0]), int(parts[1])
    s = int(parts[2]) if len(parts) == 3 else 0
    if not (0 <= m < 60 and 0 <= s < 60) or not (0 <= h <= 24):
        raise ValueError(f"bad clock time {clock!r}")
    total = h * 3600 + m * 60 + s
    if total > SECONDS_PER_DAY:
        raise ValueError(f"clock time {clock!r} past 24:00")
    return total


def date_range(first: date, last: date) -> list[date]:
    """Inclusive list of calendar dates; empty when last < first."""
    out = []
    d = first
    while d <= last:
        out.append(d)
        d += timedelta(days=1)
    return out
