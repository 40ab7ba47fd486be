"""Append-only CSV caches keyed by (label, tolerance set, D), each with a JSON sidecar."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from modules.newforms import load_coeffs_file, write_coeffs_file
from semver import Version

if TYPE_CHECKING:
    from collections.abc import Iterable
    from pathlib import Path

    import numpy as np
    from modules.newforms import Newform

logger = logging.getLogger(__name__)

CACHE_VERSION = Version(1, 0, 0)


def tolerance_key(**tolerances) -> str:
    return "-".join(f"{name}{value:g}" for name, value in sorted(tolerances.items()))


@dataclass
class RowCache:
    """Rows `D,<columns...>` for one (kind, label, key); reopened runs skip cached D and append the rest."""

    directory: Path
    kind: str
    label: str
    key: str
    columns: tuple[str, ...]
    rows: dict[int, list[str]] = field(default_factory=dict)

    @property
    def path(self) -> Path:
        return self.directory / self.kind / f"{self.label}_{self.key}.csv"

    @property
    def sidecar(self) -> Path:
        return self.path.with_suffix(".json")

    def __contains__(self, d: int) -> bool:
        return d in self.rows

    def __len__(self):
        return len(self.rows)

    def to_dict(self):
        return {
            "file_version": str(CACHE_VERSION),
            "kind": self.kind,
            "label": self.label,
            "key": self.key,
            "columns": list(self.columns),
        }

    def _compatible(self, meta: dict) -> bool:
        try:
            version = Version.parse(meta["file_version"])
        except (KeyError, ValueError):
            return False
        if version.major != CACHE_VERSION.major:
            logger.warning(f"Discarding {self.path}: cache version {version}, expected {CACHE_VERSION}")
            return False
        return meta.get("key") == self.key and meta.get("columns") == list(self.columns)

    def load(self) -> RowCache:
        self.rows.clear()
        if not (self.path.is_file() and self.sidecar.is_file()):
            return self
        with self.sidecar.open(encoding="utf-8") as f:
            meta = json.load(f)
        if not self._compatible(meta):
            self.path.unlink()
            self.sidecar.unlink()
            return self

        with self.path.open(encoding="utf-8", newline="") as f:
            reader = csv.reader(f)
            next(reader, None)
            for row in reader:
                # a run killed mid-write can leave a short last line
                if len(row) != len(self.columns) + 1:
                    continue
                self.rows[int(row[0])] = row[1:]
        logger.debug(f"Loaded {len(self.rows)} cached rows from {self.path}")
        return self

    def append(self, new_rows: Iterable[tuple[int, list[str]]]):
        new_rows = [(d, row) for d, row in new_rows if d not in self.rows]
        if not new_rows:
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fresh = not self.path.is_file()
        with self.path.open("a", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            if fresh:
                writer.writerow(["D", *self.columns])
            for d, row in new_rows:
                writer.writerow([d, *row])
                self.rows[d] = row
        with self.sidecar.open("w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f)


def open_cache(directory: Path, kind: str, label: str, key: str, columns: Iterable[str]) -> RowCache:
    return RowCache(directory, kind, label, key, tuple(columns)).load()


def coefficient_cache_path(directory: Path, label: str) -> Path:
    return directory / "coefficients" / f"{label}.csv"


def cached_coefficients(form: Newform, n_max: int, directory: Path) -> np.ndarray:
    """Seed `form` with a_0..a_n_max from the coefficient cache, generating and storing them when short."""
    path = coefficient_cache_path(directory, form.label)
    if path.is_file():
        coeffs = load_coeffs_file(path)
        if len(coeffs) > n_max:
            form.seed_coefficients(coeffs)
            return coeffs[: n_max + 1]
        logger.debug(f"{path} holds {len(coeffs) - 1} coefficients, {n_max} needed")

    coeffs = form.coefficients(n_max)
    write_coeffs_file(path, coeffs)
    with path.with_suffix(".json").open("w", encoding="utf-8") as f:
        json.dump({"file_version": str(CACHE_VERSION), "label": form.label, "n_max": n_max}, f)
    logger.info(f"Cached {n_max} coefficients of {form.label} in {path}")
    return coeffs
