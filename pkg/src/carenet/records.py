"""Wire records produced by ingestion.

Two levels: per-packet records (one JSONL line per captured packet, grouped
into per-window files) and per-window traffic summaries (one JSONL line per
user per window). Field order inside each JSON object is fixed so repeated
runs serialize byte-identically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

# Direction of a packet relative to the home network.
UP = "UP"
DOWN = "DOWN"
INTERNAL = "INTERNAL"
EXTERNAL = "EXTERNAL"

# Fallback identity for traffic no profile claims.
ALL_OTHER = "ALL_OTHER"

# Transport payloads strictly below this many bytes count as "small"
# when looking for keystroke-sized upstream packets.
SMALL_PAYLOAD_BYTES = 200


@dataclass(frozen=True)
class PacketRecord:
    """Header-derived facts about one captured packet. No payload content."""

    timestamp: int  # epoch microseconds
    src_addr: str
    dst_addr: str
    src_port: int | None
    dst_port: int | None
    transport: str  # "TCP" | "UDP" | "OTHER"
    payload_bytes: int  # transport-layer payload length
    dns_qname: str | None  # question name when the packet is a DNS query
    tcp_small_upstream: bool  # upstream TCP with payload < SMALL_PAYLOAD_BYTES

    def to_json(self) -> str:
        return json.dumps(
            {
                "timestamp": self.timestamp,
                "src_addr": self.src_addr,
                "dst_addr": self.dst_addr,
                "src_port": self.src_port,
                "dst_port": self.dst_port,
                "transport": self.transport,
                "payload_bytes": self.payload_bytes,
                "dns_qname": self.dns_qname,
                "tcp_small_upstream": self.tcp_small_upstream,
            },
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "PacketRecord":
        doc = json.loads(line)
        return cls(
            timestamp=doc["timestamp"],
            src_addr=doc["src_addr"],
            dst_addr=doc["dst_addr"],
            src_port=doc["src_port"],
            dst_port=doc["dst_port"],
            transport=doc["transport"],
            payload_bytes=doc["payload_bytes"],
            dns_qname=doc["dns_qname"],
            tcp_small_upstream=doc["tcp_small_upstream"],
        )


@dataclass
class WindowSummary:
    """Per-user traffic aggregate over one local-clock window."""

    window_start: int  # epoch microseconds of the window start
    user_id: str
    packet_count: int
    byte_count_up: int
    byte_count_down: int
    share_tcp: float
    share_udp: float
    share_other: float
    dns_events: list[tuple[int, str]]  # (timestamp us, registrable domain)
    small_upstream_gaps: list[float]  # seconds between consecutive small upstream packets

    def to_json(self) -> str:
        return json.dumps(
            {
                "window_start": self.window_start,
                "user_id": self.user_id,
                "packet_count": self.packet_count,
                "byte_count_up": self.byte_count_up,
                "byte_count_down": self.byte_count_down,
                "share_tcp": self.share_tcp,
                "share_udp": self.share_udp,
                "share_other": self.share_other,
                "dns_events": [[t, d] for t, d in self.dns_events],
                "small_upstream_gaps": self.small_upstream_gaps,
            },
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "WindowSummary":
        doc = json.loads(line)
        return cls(
            window_start=doc["window_start"],
            user_id=doc["user_id"],
            packet_count=doc["packet_count"],
            byte_count_up=doc["byte_count_up"],
            byte_count_down=doc["byte_count_down"],
            share_tcp=doc["share_tcp"],
            share_udp=doc["share_udp"],
            share_other=doc["share_other"],
            dns_events=[(t, d) for t, d in doc["dns_events"]],
            small_upstream_gaps=doc["small_upstream_gaps"],
        )
