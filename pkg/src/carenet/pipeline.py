"""Pipeline orchestration: summaries to features to daily score documents.

Features are recomputed from the earliest summarized day forward so rolling
baselines (the sleep z-score) always see the same history regardless of when
the run happens; score documents then fold in the calibration (memberships,
weights, gate, episode) and are the only artifacts that change when the
calibration changes. Both layers write deterministic JSON: same inputs,
same bytes.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

from . import timebase
from .features import (
    FEATURE_NAMES,
    SLEEP_Z_FEATURE,
    DayExtract,
    FeatureConfig,
    extract_day,
    sleep_duration_z_abs,
)
from .fasl import (
    MISSING,
    NEGATIVE,
    POSITIVE,
    criterion_gate,
    criterion_likelihood,
    episode_rule,
)
from .ingest import load_day_summaries
from .params import ParameterSet
from .records import WindowSummary
from .storage import Store, atomic_write_text


@dataclass
class FeatureReport:
    dataset: str
    users: list[str] = field(default_factory=list)
    days: int = 0
    files: int = 0


@dataclass
class ScoreReport:
    dataset: str
    config_hash: str = ""
    users: list[str] = field(default_factory=list)
    days: int = 0
    files: int = 0


def compute_features(
    store: Store, dataset: str, fcfg: FeatureConfig = FeatureConfig()
) -> FeatureReport:
    """Extract daily features for every user over the dataset's full day span."""
    meta = store.load_dataset_meta(dataset)
    tz = timebase.get_zone(meta.tz_name)
    report = FeatureReport(dataset=dataset)

    dates = store.summary_dates(dataset)
    if not dates:
        return report
    all_days = timebase.date_range(dates[0], dates[-1])

    by_day: dict[date, dict[str, list[WindowSummary]]] = {}
    users: set[str] = set()
    for day in all_days:
        grouped: dict[str, list[WindowSummary]] = {}
        for row in load_day_summaries(store, dataset, day):
            grouped.setdefault(row.user_id, []).append(row)
        by_day[day] = grouped
        users.update(grouped)

    for user in sorted(users):
        history: dict[date, float | None] = {}
        for day in all_days:
            ex = extract_day(
                day, user, by_day[day].get(user, []), meta.delta_seconds, tz, fcfg
            )
            prior = [
                history.get(day - timedelta(days=k))
                for k in range(fcfg.z_history_days, 0, -1)
            ]
            z = sleep_duration_z_abs(ex.sleep_duration_min, prior, fcfg)
            history[day] = ex.sleep_duration_min
            _write_feature_doc(store, dataset, ex, z)
            report.files += 1
    report.users = sorted(users)
    report.days = len(all_days)
    return report


def _write_feature_doc(store: Store, dataset: str, ex: DayExtract, z: float | None) -> None:
    values = dict(ex.values)
    values[SLEEP_Z_FEATURE] = z
    doc = {
        "date": ex.day.isoformat(),
        "user_id": ex.user_id,
        "coverage": ex.coverage,
        "total_windows": ex.total_windows,
        "occupied_windows": ex.occupied_windows,
        "sleep_duration_min": ex.sleep_duration_min,
        "features": {name: values[name] for name in FEATURE_NAMES},
    }
    atomic_write_text(
        store.feature_file(dataset, ex.user_id, ex.day), json.dumps(doc, indent=2) + "\n"
    )


def load_feature_doc(store: Store, dataset: str, user_id: str, day: date) -> dict | None:
    path = store.feature_file(dataset, user_id, day)
    if not path.exists():
        return None
    return json.loads(path.read_text("utf-8"))


def compute_scores(store: Store, dataset: str, pset: ParameterSet) -> ScoreReport:
    """Score every user-day from its feature file under the given calibration."""
    report = ScoreReport(dataset=dataset, config_hash=pset.config_hash)
    features_root = store.root / "features" / dataset
    if not features_root.is_dir():
        return report
    users = sorted(p.name for p in features_root.iterdir() if p.is_dir())

    for user in users:
        days = sorted(
            date.fromisoformat(p.stem)
            for p in store.features_dir(dataset, user).glob("*.json")
        )
        series: dict[str, dict[date, float | None]] = {c.key: {} for c in pset.criteria}
        for day in days:
            fdoc = load_feature_doc(store, dataset, user, day)
            if fdoc is None:
                continue
            valid = fdoc["coverage"] >= pset.validity_threshold
            likelihoods: dict[str, float | None] = {}
            for crit in pset.criteria:
                lik = criterion_likelihood(crit, fdoc["features"]) if valid else None
                likelihoods[crit.key] = lik
                series[crit.key][day] = lik
            positives = {
                k: (None if lik is None else lik >= pset.gate.threshold)
                for k, lik in likelihoods.items()
            }
            present = {
                k: criterion_gate(series[k], pset.gate, day).present
                for k in series
            }
            known = [v for v in likelihoods.values() if v is not None]
            doc = {
                "date": day.isoformat(),
                "user_id": user,
                "config_hash": pset.config_hash,
                "valid": valid,
                "coverage": fdoc["coverage"],
                "likelihoods": likelihoods,
                "positives": positives,
                "present": present,
                "episode": episode_rule(present, pset.episode),
                "mean_likelihood": statistics.fmean(known) if known else None,
            }
            atomic_write_text(
                store.score_file(dataset, user, day), json.dumps(doc, indent=2) + "\n"
            )
            report.files += 1
        report.days = max(report.days, len(days))
    report.users = users
    return report


def load_score_doc(store: Store, dataset: str, user_id: str, day: date) -> dict | None:
    path = store.score_file(dataset, user_id, day)
    if not path.exists():
        return None
    return json.loads(path.read_text("utf-8"))


def recompute_scores(store: Store, dataset: str) -> ScoreReport:
    """Re-run the scoring layer only, under the currently stored calibration."""
    return compute_scores(store, dataset, store.load_parameters())


# ---------------------------------------------------------------------------
# Query views used by the CLI and the HTTP service


def likelihood_view(
    store: Store, dataset: str, user_id: str, key: str, first: date, last: date
) -> list[dict]:
    """Day-by-day likelihood rows for one criterion over [first, last]."""
    rows = []
    for day in timebase.date_range(first, last):
        doc = load_score_doc(store, dataset, user_id, day)
        if doc is None:
            rows.append(
                {"date": day.isoformat(), "likelihood": None, "valid": False, "positive": None}
            )
        else:
            lik = doc["likelihoods"].get(key)
            rows.append(
                {
                    "date": day.isoformat(),
                    "likelihood": lik,
                    "valid": doc["valid"],
                    "positive": doc["positives"].get(key),
                }
            )
    return rows


def gate_view(
    store: Store, dataset: str, user_id: str, as_of: date, pset: ParameterSet
) -> dict:
    """Gate decision per criterion over the trailing window ending at as_of."""
    window = [
        as_of - timedelta(days=k) for k in range(pset.gate.window_days - 1, -1, -1)
    ]
    docs = {day: load_score_doc(store, dataset, user_id, day) for day in window}
    criteria = {}
    present_map = {}
    for crit in pset.criteria:
        series = {
            day: (doc["likelihoods"].get(crit.key) if doc else None)
            for day, doc in docs.items()
        }
        res = criterion_gate(series, pset.gate, as_of)
        present_map[crit.key] = res.present
        criteria[crit.key] = {
            "label": crit.label,
            "present": res.present,
            "positive_days": res.positive_days,
            "days": [
                {
                    "date": d.day.isoformat(),
                    "likelihood": d.likelihood,
                    "status": d.status,
                }
                for d in res.days
            ],
        }
    return {
        "as_of": as_of.isoformat(),
        "user_id": user_id,
        "window_days": pset.gate.window_days,
        "required_days": pset.gate.required_days,
        "threshold": pset.gate.threshold,
        "config_hash": pset.config_hash,
        "criteria": criteria,
        "present_count": sum(1 for v in present_map.values() if v),
        "episode": episode_rule(present_map, pset.episode),
    }


def episode_view(
    store: Store, dataset: str, user_id: str, as_of: date, pset: ParameterSet
) -> dict:
    gv = gate_view(store, dataset, user_id, as_of, pset)
    present = {k: c["present"] for k, c in gv["criteria"].items()}
    core_present = [k for k in pset.episode.core_keys if present.get(k, False)]
    return {
        "as_of": as_of.isoformat(),
        "user_id": user_id,
        "config_hash": pset.config_hash,
        "min_criteria": pset.episode.min_criteria,
        "core_criteria": list(pset.episode.core_keys),
        "present": present,
        "present_count": gv["present_count"],
        "core_present": core_present,
        "episode": gv["episode"],
    }
