"""Data directory layout and deterministic file IO.

Everything the pipeline produces or edits lives under one root (the
CARENET_DATA_DIR environment variable, or ./carenet_data):

    datasets/<dataset>.json                         dataset metadata
    processed/<dataset>/<dataset>__YYYYMMDD_HHMM.jsonl   per-window packet records
    summaries/<dataset>/<YYYY-MM-DD>.jsonl          per-window per-user aggregates
    features/<dataset>/<user>/<YYYY-MM-DD>.json     daily feature values
    scores/<dataset>/<user>/<YYYY-MM-DD>.json       daily likelihoods and decisions
    parameters.json                                 calibration document
    profiles.json                                   user profiles
    ip_mappings.json                                address-to-user mappings
    runs/<run_id>.json                              run logs (timestamps; not data)

Writes go through a temp file and rename so a crash never leaves a torn
artifact, and all serialization is key-stable so identical inputs produce
identical bytes.
"""

from __future__ import annotations

import json
import os
import shutil
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path

from . import params as params_mod
from .identity import (
    AddressMapping,
    IdentityResolver,
    UserProfile,
    load_mappings,
    load_profiles,
    mappings_to_doc,
    profiles_to_doc,
)

ENV_DATA_DIR = "CARENET_DATA_DIR"
ENV_TZ = "CARENET_TZ"
DEFAULT_ROOT = "carenet_data"


def default_root() -> Path:
    return Path(os.environ.get(ENV_DATA_DIR, DEFAULT_ROOT))


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, "utf-8")
    tmp.replace(path)


@dataclass
class DatasetMeta:
    name: str
    delta_seconds: int
    tz_name: str
    source_files: list[str]

    def to_doc(self) -> dict:
        return {
            "name": self.name,
            "delta_seconds": self.delta_seconds,
            "tz": self.tz_name,
            "source_files": self.source_files,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "DatasetMeta":
        return cls(
            name=doc["name"],
            delta_seconds=doc["delta_seconds"],
            tz_name=doc["tz"],
            source_files=list(doc.get("source_files", [])),
        )


class Store:
    """Path arithmetic plus load/save for every artifact kind."""

    def __init__(self, root: Path | str | None = None):
        self.root = Path(root) if root is not None else default_root()

    # -- paths ------------------------------------------------------------

    def dataset_meta_path(self, dataset: str) -> Path:
        return self.root / "datasets" / f"{dataset}.json"

    def processed_dir(self, dataset: str) -> Path:
        return self.root / "processed" / dataset

    def window_file(self, dataset: str, window_label: str) -> Path:
        return self.processed_dir(dataset) / f"{dataset}__{window_label}.jsonl"

    def summaries_dir(self, dataset: str) -> Path:
        return self.root / "summaries" / dataset

    def summary_file(self, dataset: str, day: date) -> Path:
        return self.summaries_dir(dataset) / f"{day.isoformat()}.jsonl"

    def features_dir(self, dataset: str, user_id: str) -> Path:
        return self.root / "features" / dataset / user_id

    def feature_file(self, dataset: str, user_id: str, day: date) -> Path:
        return self.features_dir(dataset, user_id) / f"{day.isoformat()}.json"

    def scores_dir(self, dataset: str, user_id: str) -> Path:
        return self.root / "scores" / dataset / user_id

    def score_file(self, dataset: str, user_id: str, day: date) -> Path:
        return self.scores_dir(dataset, user_id) / f"{day.isoformat()}.json"

    def parameters_path(self) -> Path:
        return self.root / "parameters.json"

    def profiles_path(self) -> Path:
        return self.root / "profiles.json"

    def mappings_path(self) -> Path:
        return self.root / "ip_mappings.json"

    def runs_dir(self) -> Path:
        return self.root / "runs"

    # -- datasets ----------------------------------------------------------

    def save_dataset_meta(self, meta: DatasetMeta) -> None:
        atomic_write_text(
            self.dataset_meta_path(meta.name),
            json.dumps(meta.to_doc(), indent=2, sort_keys=True) + "\n",
        )

    def load_dataset_meta(self, dataset: str) -> DatasetMeta:
        path = self.dataset_meta_path(dataset)
        if not path.exists():
            raise FileNotFoundError(f"dataset {dataset!r} not found under {self.root}")
        return DatasetMeta.from_doc(json.loads(path.read_text("utf-8")))

    def list_datasets(self) -> list[str]:
        d = self.root / "datasets"
        if not d.is_dir():
            return []
        return sorted(p.stem for p in d.glob("*.json"))

    def wipe_dataset(self, dataset: str) -> None:
        """Remove derived artifacts for a dataset before a fresh ingest."""
        for path in (
            self.processed_dir(dataset),
            self.summaries_dir(dataset),
            self.root / "features" / dataset,
            self.root / "scores" / dataset,
        ):
            if path.is_dir():
                shutil.rmtree(path)

    def wipe_scores(self, dataset: str) -> None:
        """Remove feature and score artifacts only (keeps ingested windows)."""
        for path in (self.root / "features" / dataset, self.root / "scores" / dataset):
            if path.is_dir():
                shutil.rmtree(path)

    def summary_dates(self, dataset: str) -> list[date]:
        d = self.summaries_dir(dataset)
        if not d.is_dir():
            return []
        return sorted(date.fromisoformat(p.stem) for p in d.glob("*.jsonl"))

    def score_dates(self, dataset: str, user_id: str) -> list[date]:
        d = self.scores_dir(dataset, user_id)
        if not d.is_dir():
            return []
        return sorted(date.fromisoformat(p.stem) for p in d.glob("*.json"))

    def score_users(self, dataset: str) -> list[str]:
        d = self.root / "scores" / dataset
        if not d.is_dir():
            return []
        return sorted(p.name for p in d.iterdir() if p.is_dir())

    # -- documents with defaults -------------------------------------------

    def load_parameters(self) -> params_mod.ParameterSet:
        path = self.parameters_path()
        if not path.exists():
            atomic_write_text(
                path,
                json.dumps(params_mod.default_document(), indent=2, sort_keys=True) + "\n",
            )
        return params_mod.load_parameters(path)

    def save_parameters(self, pset: params_mod.ParameterSet) -> None:
        atomic_write_text(
            self.parameters_path(), json.dumps(pset.doc, indent=2, sort_keys=True) + "\n"
        )

    def load_profiles(self) -> list[UserProfile]:
        path = self.profiles_path()
        if not path.exists():
            return []
        return load_profiles(path)

    def save_profiles(self, profiles: list[UserProfile]) -> None:
        atomic_write_text(
            self.profiles_path(), json.dumps(profiles_to_doc(profiles), indent=2) + "\n"
        )

    def load_mappings(self) -> list[AddressMapping]:
        path = self.mappings_path()
        if not path.exists():
            return []
        return load_mappings(path)

    def save_mappings(self, mappings: list[AddressMapping]) -> None:
        atomic_write_text(
            self.mappings_path(), json.dumps(mappings_to_doc(mappings), indent=2) + "\n"
        )

    def resolver(self) -> IdentityResolver:
        return IdentityResolver(self.load_profiles(), self.load_mappings())

    # -- run log -------------------------------------------------------------

    def write_run_log(self, kind: str, detail: dict) -> str:
        now = datetime.now(timezone.utc)
        run_id = now.strftime("%Y%m%dT%H%M%S%f") + "_" + kind
        doc = {"run_id": run_id, "kind": kind, "at": now.isoformat(), **detail}
        atomic_write_text(self.runs_dir() / f"{run_id}.json", json.dumps(doc, indent=2) + "\n")
        return run_id
