"""Durable dataset storage under one root directory.

Layout: blobs/<sha256>.csv holds raw uploads (content-addressed, shared by
identical files) and entries/<uuid>.json holds one metadata record per
registered dataset. Everything is rebuilt from disk on startup, so restarts
lose nothing. Writes go through a lock plus temp-file rename, keeping
entries readable at every instant.
"""
from __future__ import annotations

import hashlib
import json
import os
import threading
import uuid
from datetime import datetime, timezone

from .dataprofile import Dataset, ingest_csv, table_name_from_filename
from .errors import PipelineError


class UnknownDataset(PipelineError):
    code = "UNKNOWN_DATASET"


class DatasetRegistry:
    def __init__(self, root: str):
        self.root = root
        self.blob_dir = os.path.join(root, "blobs")
        self.entry_dir = os.path.join(root, "entries")
        os.makedirs(self.blob_dir, exist_ok=True)
        os.makedirs(self.entry_dir, exist_ok=True)
        self._lock = threading.Lock()
        self._datasets: dict[str, Dataset] = {}

    # -- storage helpers ----------------------------------------------------

    def _entry_path(self, dataset_id: str) -> str:
        return os.path.join(self.entry_dir, f"{dataset_id}.json")

    def _blob_path(self, digest: str) -> str:
        return os.path.join(self.blob_dir, f"{digest}.csv")

    @staticmethod
    def _write_atomic(path: str, data: bytes) -> None:
        tmp = f"{path}.tmp.{os.getpid()}.{threading.get_ident()}"
        with open(tmp, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)

    # -- public API ----------------------------------------------------------

    def add(self, filename: str, raw: bytes) -> dict:
        """Validate, persist, and register one uploaded CSV."""
        dataset = ingest_csv(raw, filename)  # raises ProfileError on bad input
        digest = hashlib.sha256(raw).hexdigest()
        entry = {
            "id": str(uuid.uuid4()),
            "filename": filename,
            "table_name": table_name_from_filename(filename),
            "sha256": digest,
            "created_at": datetime.now(timezone.utc).isoformat(),
            "row_count": dataset.profile.row_count,
            "column_count": dataset.profile.column_count,
        }
        with self._lock:
            self._write_atomic(self._blob_path(digest), raw)
            self._write_atomic(
                self._entry_path(entry["id"]),
                json.dumps(entry, sort_keys=True).encode("utf-8"))
            self._datasets[entry["id"]] = dataset
        return entry

    def entries(self) -> list[dict]:
        """All registered datasets, oldest first."""
        records = []
        for name in os.listdir(self.entry_dir):
            if not name.endswith(".json"):
                continue
            with open(os.path.join(self.entry_dir, name), "r",
                      encoding="utf-8") as handle:
                records.append(json.load(handle))
        records.sort(key=lambda e: (e.get("created_at", ""), e.get("id", "")))
        return records

    def entry(self, dataset_id: str) -> dict:
        path = self._entry_path(dataset_id)
        if not os.path.exists(path):
            raise UnknownDataset(f"no dataset with id {dataset_id!r}")
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)

    def dataset(self, dataset_id: str) -> Dataset:
        """Load (or reuse) the parsed dataset for an id."""
        with self._lock:
            cached = self._datasets.get(dataset_id)
        if cached is not None:
            return cached
        record = self.entry(dataset_id)
        blob = self._blob_path(record["sha256"])
        if not os.path.exists(blob):
            raise UnknownDataset(
                f"dataset {dataset_id!r} is missing its stored file")
        with open(blob, "rb") as handle:
            raw = handle.read()
        dataset = ingest_csv(raw, record["filename"])
        with self._lock:
            self._datasets[dataset_id] = dataset
        return dataset
