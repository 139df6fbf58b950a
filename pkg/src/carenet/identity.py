"""Who-is-this-address resolution and traffic direction.

A household capture sees many devices. Profiles name the users; address
mappings tie an IP to a user over a validity interval, so a reassigned
DHCP lease can move between users without rewriting history. Unmapped or
off-network traffic falls through to the ALL_OTHER bucket, which keeps
totals conserved without inventing identities.
"""

from __future__ import annotations

import ipaddress
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .records import ALL_OTHER, DOWN, EXTERNAL, INTERNAL, UP

DEFAULT_LOCAL_PREFIXES = (
    "10.0.0.0/8",
    "172.16.0.0/12",
    "192.168.0.0/16",
    "fc00::/7",
    "fe80::/10",
)


@dataclass
class UserProfile:
    user_id: str
    display_name: str
    notes: str = ""


@dataclass
class AddressMapping:
    address: str
    user_id: str
    valid_from: int | None = None  # epoch microseconds, None = open start
    valid_to: int | None = None  # epoch microseconds (exclusive), None = open end

    def covers(self, ts_us: int) -> bool:
        if self.valid_from is not None and ts_us < self.valid_from:
            return False
        if self.valid_to is not None and ts_us >= self.valid_to:
            return False
        return True


class IdentityError(ValueError):
    pass


class IdentityResolver:
    """Answers direction and attribution questions for packet addresses."""

    def __init__(
        self,
        profiles: list[UserProfile],
        mappings: list[AddressMapping],
        local_prefixes: tuple[str, ...] = DEFAULT_LOCAL_PREFIXES,
    ):
        self.profiles = profiles
        self.mappings = mappings
        self._networks = [ipaddress.ip_network(p) for p in local_prefixes]
        self._by_address: dict[str, list[AddressMapping]] = {}
        for m in mappings:
            self._by_address.setdefault(m.address, []).append(m)
        self._validate()

    def _validate(self) -> None:
        known = {p.user_id for p in self.profiles}
        if len(known) != len(self.profiles):
            raise IdentityError("duplicate user_id in profiles")
        for m in self.mappings:
            if m.user_id not in known:
                raise IdentityError(f"mapping for {m.address} names unknown user {m.user_id!r}")
            if m.valid_from is not None and m.valid_to is not None and m.valid_to <= m.valid_from:
                raise IdentityError(f"mapping for {m.address} has an empty validity interval")
            ipaddress.ip_address(m.address)  # raises on junk
        for address, group in self._by_address.items():
            spans = sorted(
                ((m.valid_from, m.valid_to) for m in group),
                key=lambda s: (s[0] is not None, s[0] or 0),
            )
            for (f1, t1), (f2, t2) in zip(spans, spans[1:]):
                # half-open intervals overlap unless one ends before the next starts
                if t1 is None or f2 is None or f2 < t1:
                    raise IdentityError(f"overlapping validity intervals for {address}")

    def is_local(self, addr: str) -> bool:
        try:
            ip = ipaddress.ip_address(addr)
        except ValueError:
            return False
        return any(ip in net for net in self._networks)

    def direction(self, src: str, dst: str) -> str:
        s, d = self.is_local(src), self.is_local(dst)
        if s and d:
            return INTERNAL
        if s:
            return UP
        if d:
            return DOWN
        return EXTERNAL

    def user_for(self, addr: str, ts_us: int) -> str:
        for m in self._by_address.get(addr, ()):
            if m.covers(ts_us):
                return m.user_id
        return ALL_OTHER

    def attribute(self, src: str, dst: str, ts_us: int) -> tuple[str, str]:
        """(direction, user) for a packet: upstream and internal traffic belongs
        to the sender, downstream to the receiver, off-network to ALL_OTHER."""
        direction = self.direction(src, dst)
        if direction == UP or direction == INTERNAL:
            return direction, self.user_for(src, ts_us)
        if direction == DOWN:
            return direction, self.user_for(dst, ts_us)
        return direction, ALL_OTHER

    def user_ids(self) -> list[str]:
        return sorted(p.user_id for p in self.profiles)


# ---------------------------------------------------------------------------
# File formats: profiles.json and ip_mappings.json


def _ts_to_iso(ts_us: int | None) -> str | None:
    if ts_us is None:
        return None
    secs, us = divmod(ts_us, 1_000_000)
    return datetime.fromtimestamp(secs, timezone.utc).replace(microsecond=us).isoformat()


def _iso_to_ts(text: str | None, where: str) -> int | None:
    if text is None:
        return None
    try:
        dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as exc:
        raise IdentityError(f"{where}: bad timestamp {text!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp()) * 1_000_000 + dt.microsecond


def profiles_to_doc(profiles: list[UserProfile]) -> dict:
    return {
        "users": [
            {"user_id": p.user_id, "display_name": p.display_name, "notes": p.notes}
            for p in sorted(profiles, key=lambda p: p.user_id)
        ]
    }


def profiles_from_doc(doc: dict) -> list[UserProfile]:
    if not isinstance(doc, dict) or not isinstance(doc.get("users"), list):
        raise IdentityError("profiles document must be {'users': [...]}")
    out = []
    for i, entry in enumerate(doc["users"]):
        if not isinstance(entry, dict) or not entry.get("user_id"):
            raise IdentityError(f"users[{i}]: missing user_id")
        out.append(
            UserProfile(
                user_id=str(entry["user_id"]),
                display_name=str(entry.get("display_name", entry["user_id"])),
                notes=str(entry.get("notes", "")),
            )
        )
    return out


def mappings_to_doc(mappings: list[AddressMapping]) -> dict:
    ordered = sorted(mappings, key=lambda m: (m.address, m.valid_from or 0))
    return {
        "mappings": [
            {
                "address": m.address,
                "user_id": m.user_id,
                "valid_from": _ts_to_iso(m.valid_from),
                "valid_to": _ts_to_iso(m.valid_to),
            }
            for m in ordered
        ]
    }


def mappings_from_doc(doc: dict) -> list[AddressMapping]:
    if not isinstance(doc, dict) or not isinstance(doc.get("mappings"), list):
        raise IdentityError("mappings document must be {'mappings': [...]}")
    out = []
    for i, entry in enumerate(doc["mappings"]):
        where = f"mappings[{i}]"
        if not isinstance(entry, dict) or not entry.get("address") or not entry.get("user_id"):
            raise IdentityError(f"{where}: needs address and user_id")
        out.append(
            AddressMapping(
                address=str(entry["address"]),
                user_id=str(entry["user_id"]),
                valid_from=_iso_to_ts(entry.get("valid_from"), where),
                valid_to=_iso_to_ts(entry.get("valid_to"), where),
            )
        )
    return out


def load_profiles(path: Path) -> list[UserProfile]:
    return profiles_from_doc(json.loads(path.read_text("utf-8")))


def save_profiles(path: Path, profiles: list[UserProfile]) -> None:
    path.write_text(json.dumps(profiles_to_doc(profiles), indent=2) + "\n", "utf-8")


def load_mappings(path: Path) -> list[AddressMapping]:
    return mappings_from_doc(json.loads(path.read_text("utf-8")))


def save_mappings(path: Path, mappings: list[AddressMapping]) -> None:
    path.write_text(json.dumps(mappings_to_doc(mappings), indent=2) + "\n", "utf-8")
