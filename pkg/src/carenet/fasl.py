"""Fuzzy additive scoring: memberships, criterion likelihoods, gate, episode.

Each behavioral criterion owns a handful of daily features. A triangular
membership turns a raw feature value into an "evidence for the symptom"
level in [0, 1]; a weighted additive blend turns those levels into a daily
criterion likelihood. A persistence gate then asks for enough positive days
inside a trailing window before a criterion counts as present, and the
episode rule asks for enough present criteria including a core one.

Missing values stay missing: a feature without data is dropped and the
remaining weights are renormalized, a day with too few features scores
None, and the gate treats None days as not positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Mapping, Sequence

DIRECT = "direct"
SIGNED = "signed"

POSITIVE = "positive"
NEGATIVE = "negative"
MISSING = "missing"


def clip01(x: float) -> float:
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else x


def clip_pm1(x: float) -> float:
    return -1.0 if x < -1.0 else 1.0 if x > 1.0 else x


@dataclass(frozen=True)
class TriangularMF:
    """Triangle over the feature axis. lo=mid or mid=hi make a shoulder."""

    lo: float
    mid: float
    hi: float
    inverted: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.mid) and math.isfinite(self.hi)):
            raise ValueError("membership breakpoints must be finite")
        if not (self.lo <= self.mid <= self.hi):
            raise ValueError(f"membership breakpoints out of order: {self.lo}, {self.mid}, {self.hi}")
        if self.lo == self.hi:
            raise ValueError("membership has zero width")


def membership(x: float | None, mf: TriangularMF) -> float | None:
    """Graded evidence in [0, 1]; None passes through as missing.

    The peak takes precedence: x == mid is full membership even on a
    shoulder where mid coincides with lo or hi. Values at or beyond the
    outer breakpoints contribute nothing.
    """
    if x is None or not math.isfinite(x):
        return None
    if x == mf.mid:
        grade = 1.0
    elif x <= mf.lo or x >= mf.hi:
        grade = 0.0
    elif x < mf.mid:
        grade = (x - mf.lo) / (mf.mid - mf.lo)
    else:
        grade = (mf.hi - x) / (mf.hi - mf.mid)
    return 1.0 - grade if mf.inverted else grade


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    weight: float
    mf: TriangularMF
    polarity: int = 1  # -1 lets a feature push a signed component downward


@dataclass(frozen=True)
class ComponentSpec:
    name: str
    weight: float
    features: tuple[FeatureSpec, ...]


@dataclass(frozen=True)
class CriterionSpec:
    key: str
    label: str
    core: bool
    aggregation: str  # DIRECT or SIGNED
    components: tuple[ComponentSpec, ...]
    min_features: int = 1  # days with fewer non-missing features score None

    def feature_specs(self) -> list[FeatureSpec]:
        return [f for c in self.components for f in c.features]


def component_evidence(
    comp: ComponentSpec, values: Mapping[str, float | None]
) -> float | None:
    """Signed evidence in [-1, 1] from one component's features.

    Weights are renormalized over the features that actually have data;
    a component with no data at all is missing.
    """
    grades: list[tuple[float, int, float]] = []  # (weight, polarity, membership)
    for f in comp.features:
        g = membership(values.get(f.name), f.mf)
        if g is not None:
            grades.append((f.weight, f.polarity, g))
    if not grades:
        return None
    total_w = math.fsum(w for w, _, _ in grades)
    if total_w <= 0:
        return None
    return clip_pm1(math.fsum(w * s * g for w, s, g in grades) / total_w)


def criterion_likelihood(
    spec: CriterionSpec, values: Mapping[str, float | None]
) -> float | None:
    """Daily likelihood in [0, 1] for one criterion, or None.

    direct: weighted mean of memberships across all the criterion's
    features, weights renormalized over the non-missing ones.
    signed: per-component evidence mapped from [-1, 1] onto [0, 1], then
    blended with component weights renormalized over non-missing components.
    """
    available = sum(
        1
        for f in spec.feature_specs()
        if membership(values.get(f.name), f.mf) is not None
    )
    if available < max(spec.min_features, 1):
        return None
    if spec.aggregation == DIRECT:
        grades: list[tuple[float, float]] = []
        for f in spec.feature_specs():
            g = membership(values.get(f.name), f.mf)
            if g is not None:
                grades.append((f.weight, g))
        total_w = math.fsum(w for w, _ in grades)
        if total_w <= 0:
            return None
        return clip01(math.fsum(w * g for w, g in grades) / total_w)
    if spec.aggregation == SIGNED:
        parts: list[tuple[float, float]] = []
        for comp in spec.components:
            s = component_evidence(comp, values)
            if s is not None:
                parts.append((comp.weight, (s + 1.0) / 2.0))
        if not parts:
            return None
        total_v = math.fsum(v for v, _ in parts)
        if total_v <= 0:
            return None
        return clip01(math.fsum(v * u for v, u in parts) / total_v)
    raise ValueError(f"unknown aggregation {spec.aggregation!r}")


# ---------------------------------------------------------------------------
# Persistence gate and episode rule


@dataclass(frozen=True)
class GateConfig:
    window_days: int = 14  # trailing window length
    required_days: int = 6  # positive days needed inside the window
    threshold: float = 0.6  # likelihood at or above this marks a day positive

    def __post_init__(self):
        if self.window_days < 1 or self.required_days < 1:
            raise ValueError("gate window and required day counts must be positive")
        if self.required_days > self.window_days:
            raise ValueError("gate cannot require more positive days than the window holds")
        if not (0.0 <= self.threshold <= 1.0):
            raise ValueError("gate threshold must lie in [0, 1]")


@dataclass
class GateDay:
    day: date
    likelihood: float | None
    status: str  # POSITIVE, NEGATIVE or MISSING


@dataclass
class GateResult:
    present: bool
    positive_days: int
    window_start: date
    window_end: date
    days: list[GateDay]


def criterion_gate(
    series: Mapping[date, float | None], cfg: GateConfig, as_of: date
) -> GateResult:
    """Presence decision over the trailing window ending at `as_of` inclusive."""
    start = as_of - timedelta(days=cfg.window_days - 1)
    days: list[GateDay] = []
    positive = 0
    for k in range(cfg.window_days):
        d = start + timedelta(days=k)
        lik = series.get(d)
        if lik is None:
            status = MISSING
        elif lik >= cfg.threshold:
            status = POSITIVE
            positive += 1
        else:
            status = NEGATIVE
        days.append(GateDay(d, lik, status))
    return GateResult(positive >= cfg.required_days, positive, start, as_of, days)


@dataclass(frozen=True)
class EpisodeConfig:
    min_criteria: int = 5
    core_keys: tuple[str, ...] = ("C1", "C2")


def episode_rule(present: Mapping[str, bool], cfg: EpisodeConfig = EpisodeConfig()) -> bool:
    """True when enough criteria are present and at least one is a core one."""
    count = sum(1 for v in present.values() if v)
    has_core = any(present.get(k, False) for k in cfg.core_keys)
    return count >= cfg.min_criteria and has_core
