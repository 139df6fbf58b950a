"""Capture file I/O: a header-only packet parser and a deterministic writer.

Reading supports classic pcap (either byte order, microsecond or nanosecond
stamps) and pcapng (section/interface/enhanced-packet blocks), link types
Ethernet and raw IP. Only headers are interpreted: addressing, transport,
payload *lengths*, and the question name of DNS queries. Payload content is
never retained.

Writing emits little-endian microsecond pcap with Ethernet framing and real
IP/TCP/UDP checksums so generated traces survive strict parsers.
"""

from __future__ import annotations

import ipaddress
import struct
from dataclasses import dataclass, field
from typing import Iterable, Iterator

LINKTYPE_ETHERNET = 1
LINKTYPE_RAW_IP = 101

_PCAP_MAGIC_US = 0xA1B2C3D4
_PCAP_MAGIC_NS = 0xA1B23C4D
_PCAPNG_SHB = 0x0A0D0D0A
_PCAPNG_IDB = 0x00000001
_PCAPNG_EPB = 0x00000006
_PCAPNG_BYTE_ORDER = 0x1A2B3C4D


@dataclass(frozen=True)
class ParsedPacket:
    """One packet reduced to header facts."""

    timestamp: int  # epoch microseconds
    src_addr: str
    dst_addr: str
    src_port: int | None
    dst_port: int | None
    transport: str  # "TCP" | "UDP" | "OTHER"
    payload_bytes: int
    dns_qname: str | None


@dataclass
class CaptureStats:
    """Counters for what the reader saw and what it had to drop."""

    packets_total: int = 0
    packets_parsed: int = 0
    non_ip: int = 0
    malformed: int = 0
    unsupported_linktype: int = 0

    def merge(self, other: "CaptureStats") -> None:
        self.packets_total += other.packets_total
        self.packets_parsed += other.packets_parsed
        self.non_ip += other.non_ip
        self.malformed += other.malformed
        self.unsupported_linktype += other.unsupported_linktype


# ---------------------------------------------------------------------------
# Reading


def read_capture(path: str) -> tuple[list[ParsedPacket], CaptureStats]:
    """Parse a pcap or pcapng file into header records plus drop counters."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 4:
        raise ValueError(f"{path}: not a capture file")
    magic = struct.unpack("<I", data[:4])[0]
    if magic == _PCAPNG_SHB:
        return _read_pcapng(data)
    return _read_pcap(data, path)


def _read_pcap(data: bytes, path: str) -> tuple[list[ParsedPacket], CaptureStats]:
    stats = CaptureStats()
    magic_le = struct.unpack("<I", data[:4])[0]
    magic_be = struct.unpack(">I", data[:4])[0]
    if magic_le in (_PCAP_MAGIC_US, _PCAP_MAGIC_NS):
        endian, magic = "<", magic_le
    elif magic_be in (_PCAP_MAGIC_US, _PCAP_MAGIC_NS):
        endian, magic = ">", magic_be
    else:
        raise ValueError(f"{path}: unrecognized capture magic {data[:4]!r}")
    nanos = magic == _PCAP_MAGIC_NS
    if len(data) < 24:
        raise ValueError(f"{path}: truncated pcap header")
    linktype = struct.unpack(endian + "I", data[20:24])[0] & 0x0FFFFFFF
    packets: list[ParsedPacket] = []
    pos = 24
    while pos + 16 <= len(data):
        ts_a, ts_b, incl_len, _orig = struct.unpack(endian + "IIII", data[pos : pos + 16])
        pos += 16
        if pos + incl_len > len(data):
            break  # truncated trailing record
        frame = data[pos : pos + incl_len]
        pos += incl_len
        ts_us = ts_a * 1_000_000 + (ts_b // 1000 if nanos else ts_b)
        _ingest_frame(ts_us, frame, linktype, packets, stats)
    return packets, stats


def _read_pcapng(data: bytes) -> tuple[list[ParsedPacket], CaptureStats]:
    stats = CaptureStats()
    packets: list[ParsedPacket] = []
    pos = 0
    endian = "<"
    interfaces: list[tuple[int, int, bool]] = []  # (linktype, tsresol value, base2?)
    while pos + 12 <= len(data):
        btype = struct.unpack(endian + "I", data[pos : pos + 4])[0]
        if btype == _PCAPNG_SHB:
            bo = struct.unpack("<I", data[pos + 8 : pos + 12])[0]
            endian = "<" if bo == _PCAPNG_BYTE_ORDER else ">"
            interfaces = []  # a new section starts a fresh interface list
            btype = struct.unpack(endian + "I", data[pos : pos + 4])[0]
        total_len = struct.unpack(endian + "I", data[pos + 4 : pos + 8])[0]
        if total_len < 12 or pos + total_len > len(data):
            break
        body = data[pos + 8 : pos + total_len - 4]
        if btype == _PCAPNG_IDB:
            interfaces.append(_parse_idb(body, endian))
        elif btype == _PCAPNG_EPB:
            _parse_epb(body, endian, interfaces, packets, stats)
        pos += (total_len + 3) & ~3
    return packets, stats


def _parse_idb(body: bytes, endian: str) -> tuple[int, int, bool]:
    linktype = struct.unpack(endian + "H", body[0:2])[0]
    tsresol, base2 = 6, False  # default: microseconds
    opt = 8
    while opt + 4 <= len(body):
        code, olen = struct.unpack(endian + "HH", body[opt : opt + 4])
        if code == 0:
            break
        val = body[opt + 4 : opt + 4 + olen]
        if code == 9 and olen >= 1:
            raw = val[0]
            base2 = bool(raw & 0x80)
            tsresol = raw & 0x7F
        opt += 4 + ((olen + 3) & ~3)
    return linktype, tsresol, base2


def _parse_epb(
    body: bytes,
    endian: str,
    interfaces: list[tuple[int, int, bool]],
    packets: list[ParsedPacket],
    stats: CaptureStats,
) -> None:
    if len(body) < 20:
        stats.packets_total += 1
        stats.malformed += 1
        return
    iface_id, ts_hi, ts_lo, cap_len, _orig = struct.unpack(endian + "IIIII", body[:20])
    frame = body[20 : 20 + cap_len]
    if iface_id >= len(interfaces):
        stats.packets_total += 1
        stats.malformed += 1
        return
    linktype, tsresol, base2 = interfaces[iface_id]
    ticks = (ts_hi << 32) | ts_lo
    if base2:
        ts_us = ticks * 1_000_000 >> tsresol
    elif tsresol <= 6:
        ts_us = ticks * 10 ** (6 - tsresol)
    else:
        ts_us = ticks // 10 ** (tsresol - 6)
    _ingest_frame(ts_us, frame, linktype, packets, stats)


def _ingest_frame(
    ts_us: int,
    frame: bytes,
    linktype: int,
    packets: list[ParsedPacket],
    stats: CaptureStats,
) -> None:
    stats.packets_total += 1
    if linktype == LINKTYPE_ETHERNET:
        ip = _strip_ethernet(frame)
        if ip is None:
            stats.non_ip += 1
            return
    elif linktype == LINKTYPE_RAW_IP:
        ip = frame
    else:
        stats.unsupported_linktype += 1
        return
    parsed = _parse_ip(ts_us, ip)
    if parsed is None:
        stats.malformed += 1
        return
    stats.packets_parsed += 1
    packets.append(parsed)


def _strip_ethernet(frame: bytes) -> bytes | None:
    if len(frame) < 14:
        return None
    ethertype = struct.unpack(">H", frame[12:14])[0]
    off = 14
    while ethertype in (0x8100, 0x88A8):  # VLAN tags
        if len(frame) < off + 4:
            return None
        ethertype = struct.unpack(">H", frame[off + 2 : off + 4])[0]
        off += 4
    if ethertype == 0x0800 or ethertype == 0x86DD:
        return frame[off:]
    return None


def _parse_ip(ts_us: int, b: bytes) -> ParsedPacket | None:
    if len(b) < 1:
        return None
    version = b[0] >> 4
    if version == 4:
        return _parse_ipv4(ts_us, b)
    if version == 6:
        return _parse_ipv6(ts_us, b)
    return None


def _parse_ipv4(ts_us: int, b: bytes) -> ParsedPacket | None:
    if len(b) < 20:
        return None
    ihl = (b[0] & 0x0F) * 4
    if ihl < 20 or len(b) < ihl:
        return None
    total_len = struct.unpack(">H", b[2:4])[0]
    if total_len < ihl:
        return None
    proto = b[9]
    src = str(ipaddress.IPv4Address(b[12:16]))
    dst = str(ipaddress.IPv4Address(b[16:20]))
    frag_offset = struct.unpack(">H", b[6:8])[0] & 0x1FFF
    ip_payload_len = total_len - ihl
    if frag_offset > 0:  # non-first fragment: no transport header present
        return ParsedPacket(ts_us, src, dst, None, None, "OTHER", ip_payload_len, None)
    return _parse_transport(ts_us, src, dst, proto, b[ihl:], ip_payload_len)


def _parse_ipv6(ts_us: int, b: bytes) -> ParsedPacket | None:
    if len(b) < 40:
        return None
    payload_len = struct.unpack(">H", b[4:6])[0]
    nh = b[6]
    src = str(ipaddress.IPv6Address(b[8:24]))
    dst = str(ipaddress.IPv6Address(b[24:40]))
    off = 40
    left = payload_len
    fragmented = False
    while nh in (0, 43, 44, 60):  # hop-by-hop, routing, fragment, dest options
        if nh == 44:
            if len(b) < off + 8:
                return None
            if struct.unpack(">H", b[off + 2 : off + 4])[0] >> 3 > 0:
                fragmented = True
            nh = b[off]
            off += 8
            left -= 8
        else:
            if len(b) < off + 2:
                return None
            ext_len = (b[off + 1] + 1) * 8
            nh = b[off]
            off += ext_len
            left -= ext_len
    if left < 0:
        return None
    if fragmented:
        return ParsedPacket(ts_us, src, dst, None, None, "OTHER", left, None)
    return _parse_transport(ts_us, src, dst, nh, b[off:], left)


def _parse_transport(
    ts_us: int, src: str, dst: str, proto: int, t: bytes, t_len: int
) -> ParsedPacket | None:
    if proto == 6:  # TCP
        if len(t) < 14:
            return None
        sport, dport = struct.unpack(">HH", t[0:4])
        doff = (t[12] >> 4) * 4
        if doff < 20:
            return None
        payload = t_len - doff
        if payload < 0:
            return None
        qname = None
        if dport == 53 and len(t) > doff + 2:
            qname = parse_dns_qname(t[doff + 2 :])  # skip the 2-byte length prefix
        return ParsedPacket(ts_us, src, dst, sport, dport, "TCP", payload, qname)
    if proto == 17:  # UDP
        if len(t) < 8:
            return None
        sport, dport, udp_len = struct.unpack(">HHH", t[0:6])
        if udp_len < 8:
            return None
        payload = udp_len - 8
        qname = None
        if dport == 53 and len(t) > 8:
            qname = parse_dns_qname(t[8:])
        return ParsedPacket(ts_us, src, dst, sport, dport, "UDP", payload, qname)
    return ParsedPacket(ts_us, src, dst, None, None, "OTHER", t_len, None)


def parse_dns_qname(msg: bytes) -> str | None:
    """First question name of a DNS query message, lowercased; None otherwise.

    Responses (QR=1), empty question sections, and malformed label chains all
    yield None. Compression pointers are followed with a loop guard.
    """
    if len(msg) < 12:
        return None
    flags = struct.unpack(">H", msg[2:4])[0]
    if flags & 0x8000:  # response
        return None
    qdcount = struct.unpack(">H", msg[4:6])[0]
    if qdcount < 1:
        return None
    labels: list[str] = []
    pos = 12
    jumps = 0
    while True:
        if pos >= len(msg):
            return None
        length = msg[pos]
        if length == 0:
            break
        if length & 0xC0 == 0xC0:
            if pos + 1 >= len(msg):
                return None
            pos = ((length & 0x3F) << 8) | msg[pos + 1]
            jumps += 1
            if jumps > 8:
                return None
            continue
        if length > 63:
            return None
        start, end = pos + 1, pos + 1 + length
        if end > len(msg):
            return None
        try:
            labels.append(msg[start:end].decode("ascii"))
        except UnicodeDecodeError:
            return None
        pos = end
    if not labels:
        return None
    return ".".join(labels).lower()


# ---------------------------------------------------------------------------
# Writing


def write_pcap(path: str, frames: Iterable[tuple[int, bytes]]) -> int:
    """Write (timestamp_us, ethernet_frame) pairs as classic pcap. Returns count."""
    count = 0
    with open(path, "wb") as f:
        f.write(struct.pack("<IHHiIII", _PCAP_MAGIC_US, 2, 4, 0, 0, 65535, LINKTYPE_ETHERNET))
        for ts_us, frame in frames:
            sec, us = divmod(ts_us, 1_000_000)
            f.write(struct.pack("<IIII", sec, us, len(frame), len(frame)))
            f.write(frame)
            count += 1
    return count


def checksum16(data: bytes) -> int:
    """RFC 1071 ones'-complement checksum."""
    if len(data) % 2:
        data += b"\x00"
    total = 0
    for i in range(0, len(data), 2):
        total += (data[i] << 8) | data[i + 1]
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def _mac_for(ip_packed: bytes) -> bytes:
    # Locally administered MAC derived from the IPv4 address, for determinism.
    return bytes([0x02, 0x00]) + ip_packed


def _ipv4_header(src: bytes, dst: bytes, proto: int, payload_len: int, ident: int) -> bytes:
    total = 20 + payload_len
    head = struct.pack(">BBHHHBBH", 0x45, 0, total, ident & 0xFFFF, 0x4000, 64, proto, 0)
    ck = checksum16(head + src + dst)
    return head[:10] + struct.pack(">H", ck) + head[12:] + src + dst


def udp_frame(
    src_ip: str, dst_ip: str, sport: int, dport: int, payload: bytes, ident: int = 0
) -> bytes:
    src = ipaddress.IPv4Address(src_ip).packed
    dst = ipaddress.IPv4Address(dst_ip).packed
    length = 8 + len(payload)
    pseudo = src + dst + struct.pack(">BBH", 0, 17, length)
    head0 = struct.pack(">HHHH", sport, dport, length, 0)
    ck = checksum16(pseudo + head0 + payload)
    if ck == 0:
        ck = 0xFFFF
    udp = struct.pack(">HHHH", sport, dport, length, ck) + payload
    ip = _ipv4_header(src, dst, 17, len(udp), ident) + udp
    return _mac_for(dst) + _mac_for(src) + struct.pack(">H", 0x0800) + ip


def tcp_frame(
    src_ip: str,
    dst_ip: str,
    sport: int,
    dport: int,
    payload: bytes,
    seq: int = 0,
    ident: int = 0,
) -> bytes:
    src = ipaddress.IPv4Address(src_ip).packed
    dst = ipaddress.IPv4Address(dst_ip).packed
    head0 = struct.pack(">HHIIBBHHH", sport, dport, seq & 0xFFFFFFFF, 0, 5 << 4, 0x18, 65535, 0, 0)
    pseudo = src + dst + struct.pack(">BBH", 0, 6, 20 + len(payload))
    ck = checksum16(pseudo + head0 + payload)
    tcp = head0[:16] + struct.pack(">H", ck) + head0[18:] + payload
    ip = _ipv4_header(src, dst, 6, len(tcp), ident) + tcp
    return _mac_for(dst) + _mac_for(src) + struct.pack(">H", 0x0800) + ip


def dns_query_payload(qname: str, txid: int) -> bytes:
    """Standard-query DNS message asking for an A record of `qname`."""
    out = bytearray(struct.pack(">HHHHHH", txid & 0xFFFF, 0x0100, 1, 0, 0, 0))
    for label in qname.split("."):
        enc = label.encode("ascii")
        out.append(len(enc))
        out.extend(enc)
    out.append(0)
    out.extend(struct.pack(">HH", 1, 1))
    return bytes(out)


def dns_query_frame(
    src_ip: str, dst_ip: str, sport: int, qname: str, txid: int, ident: int = 0
) -> bytes:
    return udp_frame(src_ip, dst_ip, sport, 53, dns_query_payload(qname, txid), ident)
