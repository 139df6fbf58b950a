"""Parameter registry: the calibration document and its lifecycle.

Everything tunable lives in one JSON document: criterion definitions with
feature weights and membership breakpoints, the persistence gate, the
episode rule, and the day-validity threshold. Loading validates the
document (structured errors carry a JSON path so editors can point at the
offending field), normalizes weights to sum to one with a logged warning
when they do not already, and stamps the result with a content hash so
downstream artifacts can say exactly which calibration produced them.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .fasl import (
    DIRECT,
    SIGNED,
    ComponentSpec,
    CriterionSpec,
    EpisodeConfig,
    FeatureSpec,
    GateConfig,
    TriangularMF,
)

log = logging.getLogger(__name__)

_WEIGHT_TOLERANCE = 1e-9

_TOP_KEYS = {"version", "gate", "tau", "validity_threshold", "episode", "criteria", "comment"}
_GATE_KEYS = {"M", "N", "theta"}
_EPISODE_KEYS = {"min_criteria", "core"}
_CRITERION_KEYS = {"key", "label", "core", "aggregation", "tau", "comment", "components"}
_COMPONENT_KEYS = {"name", "weight", "comment", "features"}
_FEATURE_KEYS = {"name", "weight", "membership", "polarity", "comment"}
_MEMBERSHIP_KEYS = {"lo", "mid", "hi", "inverted"}


class ParameterError(ValueError):
    """Validation failure; `errors` lists {path, message} entries."""

    def __init__(self, errors: list[dict[str, str]]):
        super().__init__("; ".join(f"{e['path']}: {e['message']}" for e in errors))
        self.errors = errors


@dataclass
class ParameterSet:
    criteria: list[CriterionSpec]
    gate: GateConfig
    episode: EpisodeConfig
    validity_threshold: float
    version: int
    warnings: list[str]
    doc: dict  # normalized wire document
    config_hash: str

    def criterion(self, key: str) -> CriterionSpec:
        for c in self.criteria:
            if c.key == key:
                return c
        raise KeyError(key)

    def criterion_keys(self) -> list[str]:
        return [c.key for c in self.criteria]

    def feature_names(self) -> list[str]:
        return [f.name for c in self.criteria for f in c.feature_specs()]


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)


def document_hash(doc: dict) -> str:
    return hashlib.sha256(canonical_json(doc).encode("utf-8")).hexdigest()[:16]


class _Checker:
    def __init__(self):
        self.errors: list[dict[str, str]] = []

    def fail(self, path: str, message: str) -> None:
        self.errors.append({"path": path, "message": message})

    def number(self, doc: dict, key: str, path: str, default=None) -> float | None:
        if key not in doc:
            if default is not None:
                return default
            self.fail(f"{path}.{key}", "missing")
            return None
        v = doc[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.fail(f"{path}.{key}", "must be a finite number")
            return None
        return float(v)

    def integer(self, doc: dict, key: str, path: str, default=None) -> int | None:
        if key not in doc:
            if default is not None:
                return default
            self.fail(f"{path}.{key}", "missing")
            return None
        v = doc[key]
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(f"{path}.{key}", "must be an integer")
            return None
        return v

    def text(self, doc: dict, key: str, path: str, default=None) -> str | None:
        if key not in doc:
            if default is not None:
                return default
            self.fail(f"{path}.{key}", "missing")
            return None
        v = doc[key]
        if not isinstance(v, str) or not v:
            self.fail(f"{path}.{key}", "must be a non-empty string")
            return None
        return v

    def keys(self, doc: dict, allowed: set[str], path: str) -> None:
        for k in doc:
            if k not in allowed:
                self.fail(f"{path}.{k}", "unknown field")


def parse_document(doc: Any) -> ParameterSet:
    """Validate and normalize a calibration document."""
    ck = _Checker()
    if not isinstance(doc, dict):
        raise ParameterError([{"path": "$", "message": "document must be an object"}])
    ck.keys(doc, _TOP_KEYS, "$")

    version = ck.integer(doc, "version", "$", default=1) or 1
    default_tau = ck.integer(doc, "tau", "$", default=1)
    if default_tau is not None and default_tau < 1:
        ck.fail("$.tau", "must be at least 1")
    validity = ck.number(doc, "validity_threshold", "$", default=0.5)
    if validity is not None and not (0.0 <= validity <= 1.0):
        ck.fail("$.validity_threshold", "must lie in [0, 1]")

    gate_doc = doc.get("gate", {})
    gate = None
    if not isinstance(gate_doc, dict):
        ck.fail("$.gate", "must be an object")
    else:
        ck.keys(gate_doc, _GATE_KEYS, "$.gate")
        m = ck.integer(gate_doc, "M", "$.gate", default=14)
        n = ck.integer(gate_doc, "N", "$.gate", default=6)
        theta = ck.number(gate_doc, "theta", "$.gate", default=0.6)
        if m is not None and n is not None and theta is not None:
            try:
                gate = GateConfig(window_days=m, required_days=n, threshold=theta)
            except ValueError as exc:
                ck.fail("$.gate", str(exc))

    ep_doc = doc.get("episode", {})
    episode = None
    if not isinstance(ep_doc, dict):
        ck.fail("$.episode", "must be an object")
    else:
        ck.keys(ep_doc, _EPISODE_KEYS, "$.episode")
        min_c = ck.integer(ep_doc, "min_criteria", "$.episode", default=5)
        core = ep_doc.get("core", ["C1", "C2"])
        if not isinstance(core, list) or not all(isinstance(k, str) and k for k in core):
            ck.fail("$.episode.core", "must be a list of criterion keys")
            core = []
        if min_c is not None and min_c < 1:
            ck.fail("$.episode.min_criteria", "must be at least 1")
        if min_c is not None:
            episode = EpisodeConfig(min_criteria=min_c, core_keys=tuple(core))

    raw_criteria = doc.get("criteria")
    if not isinstance(raw_criteria, list) or not raw_criteria:
        ck.fail("$.criteria", "must be a non-empty list")
        raise ParameterError(ck.errors)

    warnings: list[str] = []
    criteria: list[CriterionSpec] = []
    norm_criteria: list[dict] = []
    seen_keys: set[str] = set()
    seen_features: set[str] = set()
    for i, c_doc in enumerate(raw_criteria):
        path = f"$.criteria[{i}]"
        if not isinstance(c_doc, dict):
            ck.fail(path, "must be an object")
            continue
        ck.keys(c_doc, _CRITERION_KEYS, path)
        key = ck.text(c_doc, "key", path)
        label = ck.text(c_doc, "label", path, default=key or "")
        agg = ck.text(c_doc, "aggregation", path, default=DIRECT)
        core_flag = c_doc.get("core", False)
        if not isinstance(core_flag, bool):
            ck.fail(f"{path}.core", "must be true or false")
            core_flag = False
        tau = ck.integer(c_doc, "tau", path, default=default_tau or 1)
        if tau is not None and tau < 1:
            ck.fail(f"{path}.tau", "must be at least 1")
        if agg not in (DIRECT, SIGNED):
            ck.fail(f"{path}.aggregation", f"must be '{DIRECT}' or '{SIGNED}'")
        if key:
            if key in seen_keys:
                ck.fail(f"{path}.key", f"duplicate criterion key {key!r}")
            seen_keys.add(key)

        comp_docs = c_doc.get("components")
        if not isinstance(comp_docs, list) or not comp_docs:
            ck.fail(f"{path}.components", "must be a non-empty list")
            continue
        components: list[ComponentSpec] = []
        norm_components: list[dict] = []
        comp_weights: list[float] = []
        for j, comp_doc in enumerate(comp_docs):
            cpath = f"{path}.components[{j}]"
            if not isinstance(comp_doc, dict):
                ck.fail(cpath, "must be an object")
                continue
            ck.keys(comp_doc, _COMPONENT_KEYS, cpath)
            cname = ck.text(comp_doc, "name", cpath, default=f"component{j}")
            cweight = ck.number(comp_doc, "weight", cpath, default=1.0)
            if cweight is not None and cweight <= 0:
                ck.fail(f"{cpath}.weight", "must be positive")
            f_docs = comp_doc.get("features")
            if not isinstance(f_docs, list) or not f_docs:
                ck.fail(f"{cpath}.features", "must be a non-empty list")
                continue
            feats: list[FeatureSpec] = []
            norm_feats: list[dict] = []
            for k, f_doc in enumerate(f_docs):
                fpath = f"{cpath}.features[{k}]"
                if not isinstance(f_doc, dict):
                    ck.fail(fpath, "must be an object")
                    continue
                ck.keys(f_doc, _FEATURE_KEYS, fpath)
                fname = ck.text(f_doc, "name", fpath)
                fweight = ck.number(f_doc, "weight", fpath)
                polarity = ck.integer(f_doc, "polarity", fpath, default=1)
                if polarity not in (1, -1):
                    ck.fail(f"{fpath}.polarity", "must be 1 or -1")
                    polarity = 1
                if fweight is not None and fweight <= 0:
                    ck.fail(f"{fpath}.weight", "must be positive")
                if fname:
                    if fname in seen_features:
                        ck.fail(f"{fpath}.name", f"duplicate feature name {fname!r}")
                    seen_features.add(fname)
                m_doc = f_doc.get("membership")
                mf = None
                if not isinstance(m_doc, dict):
                    ck.fail(f"{fpath}.membership", "missing or not an object")
                else:
                    ck.keys(m_doc, _MEMBERSHIP_KEYS, f"{fpath}.membership")
                    lo = ck.number(m_doc, "lo", f"{fpath}.membership")
                    mid = ck.number(m_doc, "mid", f"{fpath}.membership")
                    hi = ck.number(m_doc, "hi", f"{fpath}.membership")
                    inverted = m_doc.get("inverted", False)
                    if not isinstance(inverted, bool):
                        ck.fail(f"{fpath}.membership.inverted", "must be true or false")
                        inverted = False
                    if lo is not None and mid is not None and hi is not None:
                        try:
                            mf = TriangularMF(lo, mid, hi, inverted)
                        except ValueError as exc:
                            ck.fail(f"{fpath}.membership", str(exc))
                if fname and fweight is not None and mf is not None:
                    feats.append(FeatureSpec(fname, fweight, mf, polarity))
                    norm_feats.append(
                        {
                            "name": fname,
                            "weight": fweight,
                            "membership": {"lo": mf.lo, "mid": mf.mid, "hi": mf.hi},
                            "polarity": polarity,
                            "comment": str(f_doc.get("comment", "")),
                        }
                    )
                    if mf.inverted:
                        norm_feats[-1]["membership"]["inverted"] = True
            if len(feats) != len(f_docs):
                continue  # feature-level errors already recorded
            # normalize feature weights inside the component
            total = math.fsum(f.weight for f in feats)
            if total <= 0:
                ck.fail(f"{cpath}.features", "weights must sum to a positive value")
                continue
            if abs(total - 1.0) > _WEIGHT_TOLERANCE:
                msg = (
                    f"criterion {key or '?'} component {cname}: feature weights sum to "
                    f"{total:.6g}; normalized to 1"
                )
                warnings.append(msg)
                log.warning(msg)
                feats = [
                    FeatureSpec(f.name, f.weight / total, f.mf, f.polarity) for f in feats
                ]
                for nf, f in zip(norm_feats, feats):
                    nf["weight"] = f.weight
            components.append(ComponentSpec(cname or f"component{j}", cweight or 1.0, tuple(feats)))
            norm_components.append(
                {
                    "name": cname or f"component{j}",
                    "weight": cweight or 1.0,
                    "comment": str(comp_doc.get("comment", "")),
                    "features": norm_feats,
                }
            )
        if len(components) != len(comp_docs):
            continue
        ctotal = math.fsum(c.weight for c in components)
        if ctotal <= 0:
            ck.fail(f"{path}.components", "weights must sum to a positive value")
            continue
        if abs(ctotal - 1.0) > _WEIGHT_TOLERANCE:
            msg = f"criterion {key or '?'}: component weights sum to {ctotal:.6g}; normalized to 1"
            warnings.append(msg)
            log.warning(msg)
            components = [ComponentSpec(c.name, c.weight / ctotal, c.features) for c in components]
            for nc, c in zip(norm_components, components):
                nc["weight"] = c.weight
        if key and agg in (DIRECT, SIGNED) and tau is not None:
            criteria.append(
                CriterionSpec(
                    key=key,
                    label=label or key,
                    core=core_flag,
                    aggregation=agg,
                    components=tuple(components),
                    min_features=tau,
                )
            )
            norm_criteria.append(
                {
                    "key": key,
                    "label": label or key,
                    "core": core_flag,
                    "aggregation": agg,
                    "tau": tau,
                    "comment": str(c_doc.get("comment", "")),
                    "components": norm_components,
                }
            )

    if ck.errors:
        raise ParameterError(ck.errors)
    assert gate is not None and episode is not None and validity is not None

    norm_doc = {
        "version": version,
        "gate": {"M": gate.window_days, "N": gate.required_days, "theta": gate.threshold},
        "tau": default_tau or 1,
        "validity_threshold": validity,
        "episode": {"min_criteria": episode.min_criteria, "core": list(episode.core_keys)},
        "comment": str(doc.get("comment", "")),
        "criteria": norm_criteria,
    }
    return ParameterSet(
        criteria=criteria,
        gate=gate,
        episode=episode,
        validity_threshold=validity,
        version=version,
        warnings=warnings,
        doc=norm_doc,
        config_hash=document_hash(norm_doc),
    )


def load_parameters(path: Path) -> ParameterSet:
    return parse_document(json.loads(path.read_text("utf-8")))


def save_parameters(path: Path, pset: ParameterSet) -> None:
    path.write_text(json.dumps(pset.doc, indent=2, sort_keys=True) + "\n", "utf-8")


def default_document() -> dict:
    """Shipped calibration: sleep disruption (C4) and concentration (C8)."""
    return {
        "version": 1,
        "gate": {"M": 14, "N": 6, "theta": 0.6},
        "tau": 1,
        "validity_threshold": 0.5,
        "episode": {"min_criteria": 5, "core": ["C1", "C2"]},
        "comment": "Default household calibration for the two network-observable criteria.",
        "criteria": [
            {
                "key": "C4",
                "label": "Sleep disturbance",
                "core": False,
                "aggregation": "direct",
                "comment": "Insomnia or hypersomnia patterns visible as idle/traffic structure.",
                "components": [
                    {
                        "name": "sleep",
                        "weight": 1.0,
                        "features": [
                            {
                                "name": "C4_F2_WakeAfter0400Min",
                                "weight": 0.65,
                                "membership": {"lo": 120, "mid": 1085, "hi": 1085},
                                "comment": "Minutes from 04:00 to the first activity session; late starts grade up past 2 h and saturate at 1085 min.",
                            },
                            {
                                "name": "C4_F4_SleepDurationZAbs30d",
                                "weight": 0.20,
                                "membership": {"lo": 0.25, "mid": 0.80, "hi": 0.80},
                                "comment": "Absolute z-score of nightly rest length against the trailing month.",
                            },
                            {
                                "name": "C4_F7_DaytimeIdleRatio0818",
                                "weight": 0.05,
                                "membership": {"lo": 0.00, "mid": 0.08, "hi": 0.16},
                                "comment": "Share of idle windows between 08:00 and 18:00.",
                            },
                            {
                                "name": "C4_F8_NightDayTrafficRatioBytes",
                                "weight": 0.15,
                                "membership": {"lo": 0.20, "mid": 1.00, "hi": 1.00},
                                "comment": "Bytes moved at night (22:00-06:00) relative to daytime bytes.",
                            },
                        ],
                    }
                ],
            },
            {
                "key": "C8",
                "label": "Diminished concentration",
                "core": False,
                "aggregation": "direct",
                "comment": "Scattered querying and slowed typing as concentration proxies.",
                "components": [
                    {
                        "name": "focus",
                        "weight": 1.0,
                        "features": [
                            {
                                "name": "C8_F2_DNSBurstRatePerHour",
                                "weight": 0.40,
                                "membership": {"lo": 25, "mid": 61, "hi": 61},
                                "comment": "Multi-domain query bursts per active hour.",
                            },
                            {
                                "name": "C8_F4_RepeatedQueryRatio60m",
                                "weight": 0.40,
                                "membership": {"lo": 0.80, "mid": 1.00, "hi": 1.00},
                                "comment": "Highest within-hour share of repeated queries.",
                            },
                            {
                                "name": "C8_F8_MedianIKSsec",
                                "weight": 0.20,
                                "membership": {"lo": 0.12, "mid": 0.22, "hi": 0.22},
                                "comment": "Median gap between keystroke-sized upstream packets.",
                            },
                        ],
                    }
                ],
            },
        ],
    }


def default_parameters() -> ParameterSet:
    return parse_document(default_document())
