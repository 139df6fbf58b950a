from datetime import date, datetime, timezone
from zoneinfo import ZoneInfo

import pytest
from hypothesis import given, strategies as st

from carenet import timebase

UTC = ZoneInfo("UTC")


def test_validate_delta_accepts_divisors_of_a_day():
    for delta in (60, 150, 300, 600, 3600, 86400):
        timebase.validate_delta(delta)


def test_validate_delta_rejects_non_divisors():
    for delta in (0, -300, 7, 100000, 86401):
        with pytest.raises(ValueError):
            timebase.validate_delta(delta)


def test_validate_delta_rejects_sub_minute_windows():
    # 30 divides a day but collides the minute-resolution window names
    with pytest.raises(ValueError):
        timebase.validate_delta(30)


def test_windows_per_day():
    assert timebase.windows_per_day(300) == 288
    assert timebase.windows_per_day(150) == 576
    assert timebase.windows_per_day(86400) == 1


def test_window_start_alignment_known_value():
    ts = int(datetime(2026, 3, 1, 10, 7, 3, tzinfo=timezone.utc).timestamp()) * 1_000_000
    start = timebase.window_start_us(ts, 300, UTC)
    assert timebase.to_local(start, UTC).strftime("%H:%M:%S") == "10:05:00"
    assert timebase.window_name(start, UTC) == "20260301_1005"


@given(st.integers(min_value=timebase.MIN_TIMESTAMP_US, max_value=timebase.MAX_TIMESTAMP_US - 1))
def test_window_contains_its_timestamp(ts):
    start = timebase.window_start_us(ts, 300, UTC)
    assert start <= ts < start + 300 * 1_000_000
    # window starts sit on an exact multiple of delta past local midnight
    assert (start - timebase.local_midnight_us(ts, UTC)) % (300 * 1_000_000) == 0


@given(st.integers(min_value=timebase.MIN_TIMESTAMP_US, max_value=timebase.MAX_TIMESTAMP_US - 1))
def test_local_round_trip_preserves_microseconds(ts):
    assert timebase.from_local(timebase.to_local(ts, UTC)) == ts


def test_day_start_and_clock():
    day = date(2026, 3, 1)
    start = timebase.day_start_us(day, UTC)
    assert timebase.to_local(start, UTC) == datetime(2026, 3, 1, tzinfo=timezone.utc)
    assert timebase.clock_us(day, "10:30", UTC) - start == 10 * 3600_000_000 + 1800_000_000
    assert timebase.clock_us(day, "24:00:00", UTC) == timebase.day_start_us(date(2026, 3, 2), UTC)


def test_parse_clock_seconds():
    assert timebase.parse_clock_seconds("00:00") == 0
    assert timebase.parse_clock_seconds("14:02:30") == 14 * 3600 + 150
    assert timebase.parse_clock_seconds("24:00:00") == 86400
    for bad in ("25:00", "10:60", "10:00:61", "10", "ten:30", "24:00:01"):
        with pytest.raises(ValueError):
            timebase.parse_clock_seconds(bad)


def test_date_range_inclusive():
    days = timebase.date_range(date(2026, 2, 27), date(2026, 3, 2))
    assert days == [date(2026, 2, 27), date(2026, 2, 28), date(2026, 3, 1), date(2026, 3, 2)]
    assert timebase.date_range(date(2026, 3, 2), date(2026, 3, 1)) == []


def test_dst_transition_shortens_the_day():
    ny = ZoneInfo("America/New_York")
    short = date(2026, 3, 8)  # spring-forward day, 23 hours long
    day_us = timebase.day_start_us(short, ny)
    next_us = timebase.day_start_us(date(2026, 3, 9), ny)
    assert next_us - day_us == 23 * 3600 * 1_000_000


def test_timestamp_bounds_are_sane():
    assert timebase.MIN_TIMESTAMP_US < timebase.MAX_TIMESTAMP_US
    assert timebase.local_date(timebase.MIN_TIMESTAMP_US, UTC).year == 1990
    assert timebase.local_date(timebase.MAX_TIMESTAMP_US, UTC).year == 2100
