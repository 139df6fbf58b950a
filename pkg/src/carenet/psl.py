"""Registrable-domain grouping over public suffix rules.

DNS question names are collapsed to their registrable domain (one label
below the public suffix) before burst or repetition analysis, so
`cdn1.example.co.uk` and `api.example.co.uk` count as one destination.

Rules follow the standard public suffix semantics: right-to-left label
match, `*` wildcard labels, `!` exception rules, longest match wins,
exceptions beat everything, and an implicit `*` default. A trimmed rule
snapshot ships with the package; `SuffixIndex.from_text` accepts a full
upstream list when one is available.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from typing import Iterable

_SNAPSHOT_RESOURCE = "public_suffix_snapshot.dat"


class SuffixIndex:
    """Compiled suffix rules answering registrable-domain queries."""

    def __init__(self, rules: Iterable[str]):
        self._rules: set[tuple[str, ...]] = set()
        self._exceptions: set[tuple[str, ...]] = set()
        for raw in rules:
            rule = raw.strip().lower()
            if not rule or rule.startswith("//"):
                continue
            if rule.startswith("!"):
                self._exceptions.add(tuple(reversed(rule[1:].split("."))))
            else:
                self._rules.add(tuple(reversed(rule.split("."))))
        if not self._rules:
            raise ValueError("suffix rule set is empty")

    @classmethod
    def from_text(cls, text: str) -> "SuffixIndex":
        return cls(text.splitlines())

    def public_suffix_labels(self, labels: list[str]) -> int:
        """Number of trailing labels forming the public suffix."""
        rev = labels[::-1]
        best = 1  # implicit default rule "*"
        for i in range(1, len(rev) + 1):
            prefix = tuple(rev[:i])
            if prefix in self._exceptions:
                return i - 1  # exception rule prevails, minus its leftmost label
            if prefix in self._rules or prefix[:-1] + ("*",) in self._rules:
                best = max(best, i)
        return best

    def public_suffix(self, domain: str) -> str | None:
        labels = _split(domain)
        if labels is None:
            return None
        n = self.public_suffix_labels(labels)
        if n > len(labels) or n == 0:
            return None
        return ".".join(labels[-n:])

    def registrable_domain(self, domain: str) -> str | None:
        """Public suffix plus one label; None when the name has no registrable part."""
        labels = _split(domain)
        if labels is None:
            return None
        n = self.public_suffix_labels(labels)
        if n >= len(labels):
            return None
        return ".".join(labels[-(n + 1) :])


def _split(domain: str) -> list[str] | None:
    name = domain.strip().lower().rstrip(".")
    if not name:
        return None
    labels = name.split(".")
    if any(not lab or len(lab) > 63 for lab in labels):
        return None
    if all(lab.isdigit() for lab in labels):
        return None  # dotted-quad style names are not domains
    return labels


@lru_cache(maxsize=1)
def bundled_index() -> SuffixIndex:
    text = resources.files("carenet.data").joinpath(_SNAPSHOT_RESOURCE).read_text("utf-8")
    return SuffixIndex.from_text(text)
