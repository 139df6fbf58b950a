import json
from datetime import date

from carenet import ingest, timebase
from carenet.identity import AddressMapping, IdentityResolver, UserProfile
from carenet.pcapio import dns_query_frame, tcp_frame, udp_frame, write_pcap
from carenet.records import ALL_OTHER, PacketRecord
from carenet.storage import Store
from support import UTC, tree_digest

DAY = date(2026, 3, 2)
DAY_US = timebase.day_start_us(DAY, UTC)
US = 1_000_000

ALICE_IP = "192.168.1.10"
BOB_IP = "192.168.1.20"
SERVICE = "198.51.100.7"


def resolver():
    return IdentityResolver(
        [UserProfile("alice", "Alice"), UserProfile("bob", "Bob")],
        [AddressMapping(ALICE_IP, "alice"), AddressMapping(BOB_IP, "bob")],
    )


def ts(offset_s: float) -> int:
    return DAY_US + int(round(offset_s * US))


def build_frames():
    base = 10 * 3600  # 10:00:00
    return [
        (ts(base + 1), udp_frame(ALICE_IP, SERVICE, 4000, 9999, b"u" * 100)),
        (ts(base + 2), udp_frame(SERVICE, ALICE_IP, 9999, 4000, b"d" * 400)),
        (ts(base + 3), dns_query_frame(ALICE_IP, "198.51.100.53", 5353, "a.example.com", 1)),
        (ts(base + 4), dns_query_frame(ALICE_IP, "198.51.100.53", 5353, "com", 2)),
        (ts(base + 5), udp_frame(BOB_IP, ALICE_IP, 4001, 4002, b"i" * 50)),
        (ts(base + 6), udp_frame("8.8.8.8", "9.9.9.9", 1, 2, b"x" * 77)),
        (ts(base + 7.0), tcp_frame(ALICE_IP, SERVICE, 4003, 443, b"k" * 10, seq=1)),
        (ts(base + 7.2), tcp_frame(ALICE_IP, SERVICE, 4003, 443, b"k" * 10, seq=2)),
        (ts(base + 7.5), tcp_frame(ALICE_IP, SERVICE, 4003, 443, b"k" * 10, seq=3)),
        (ts(base + 360), udp_frame(BOB_IP, "8.8.8.8", 4004, 9999, b"b" * 200)),
        # timestamp before the sanity floor: partition must reject it
        (315_532_800 * US, udp_frame(ALICE_IP, SERVICE, 4000, 9999, b"old")),
    ]


def run_ingest(tmp_path, name="ds"):
    pcap = tmp_path / "cap.pcap"
    write_pcap(str(pcap), build_frames())
    store = Store(tmp_path / "data")
    r = resolver()
    prep = ingest.partition(store, name, [pcap], 300, "UTC", r)
    summ = ingest.summarize(store, name, r)
    return store, prep, summ


def test_partition_counts_and_files(tmp_path):
    store, prep, _ = run_ingest(tmp_path)
    assert prep.packets_read == 11
    assert prep.packets_written == 10
    assert prep.rejected_timestamp == 1
    assert prep.windows == 2
    assert prep.capture.malformed == 0
    assert store.window_file("ds", "20260302_1000").exists()
    assert store.window_file("ds", "20260302_1005").exists()
    meta = store.load_dataset_meta("ds")
    assert meta.delta_seconds == 300
    assert meta.tz_name == "UTC"
    assert meta.source_files == ["cap.pcap"]


def test_partition_marks_small_upstream_tcp(tmp_path):
    store, _, _ = run_ingest(tmp_path)
    lines = store.window_file("ds", "20260302_1000").read_text().splitlines()
    records = [PacketRecord.from_json(l) for l in lines]
    small = [r for r in records if r.tcp_small_upstream]
    assert len(small) == 3
    assert all(r.transport == "TCP" and r.src_addr == ALICE_IP for r in small)
    # the downstream 400-byte UDP packet is not small upstream
    assert not any(r.tcp_small_upstream for r in records if r.src_addr == SERVICE)


def test_summarize_attribution_and_aggregates(tmp_path):
    store, _, summ = run_ingest(tmp_path)
    assert summ.windows == 2
    assert summ.days == 1
    assert summ.lines == 4  # alice, bob, ALL_OTHER in window one; bob in window two
    assert summ.users == [ALL_OTHER, "alice", "bob"]
    assert summ.dns_queries == 2
    assert summ.dns_unregistrable == 1

    rows = ingest.load_day_summaries(store, "ds", DAY)
    assert [(r.user_id, r.window_start) for r in rows] == [
        (ALL_OTHER, ts(36000)),
        ("alice", ts(36000)),
        ("bob", ts(36000)),
        ("bob", ts(36300)),
    ]
    other, alice, bob_a, bob_b = rows

    assert alice.packet_count == 7
    dns_payload = 13 + 18  # a.example.com
    bad_payload = 3 + 18  # com
    assert alice.byte_count_up == 100 + dns_payload + bad_payload + 30
    assert alice.byte_count_down == 400
    assert alice.share_tcp == 3 / 7
    assert alice.share_udp == 4 / 7
    assert alice.share_other == 0.0
    assert alice.dns_events == [(ts(36003), "example.com")]
    assert alice.small_upstream_gaps == [0.2, 0.3]

    # internal traffic belongs to the sender
    assert bob_a.packet_count == 1
    assert bob_a.byte_count_up == 50
    assert bob_b.byte_count_up == 200

    # external chatter lands in the fallback bucket as received bytes
    assert other.user_id == ALL_OTHER
    assert other.byte_count_down == 77


def test_reingest_is_byte_identical(tmp_path):
    store, _, _ = run_ingest(tmp_path)
    first = tree_digest(store.root)
    pcap = tmp_path / "cap.pcap"
    r = resolver()
    ingest.partition(store, "ds", [pcap], 300, "UTC", r)
    ingest.summarize(store, "ds", r)
    assert tree_digest(store.root) == first


def test_reingest_wipes_stale_windows(tmp_path):
    store, _, _ = run_ingest(tmp_path)
    # a second capture with only the late packet: the 10:00 window must vanish
    pcap2 = tmp_path / "cap2.pcap"
    write_pcap(str(pcap2), [build_frames()[9]])
    r = resolver()
    ingest.partition(store, "ds", [pcap2], 300, "UTC", r)
    assert not store.window_file("ds", "20260302_1000").exists()
    assert store.window_file("ds", "20260302_1005").exists()


def test_partition_merges_and_sorts_captures(tmp_path):
    frames = build_frames()
    p1 = tmp_path / "one.pcap"
    p2 = tmp_path / "two.pcap"
    write_pcap(str(p1), [frames[9]])  # the late packet first
    write_pcap(str(p2), [frames[0]])
    store = Store(tmp_path / "data")
    r = resolver()
    prep = ingest.partition(store, "ds", [p1, p2], 300, "UTC", r)
    assert prep.packets_written == 2
    assert prep.windows == 2
    records = [
        PacketRecord.from_json(l)
        for l in store.window_file("ds", "20260302_1000").read_text().splitlines()
    ]
    assert records[0].timestamp == ts(36001)


def test_summary_lines_round_trip(tmp_path):
    store, _, _ = run_ingest(tmp_path)
    text = store.summary_file("ds", DAY).read_text()
    for line in text.splitlines():
        doc = json.loads(line)
        assert list(doc)[:2] == ["window_start", "user_id"]
