"""Deterministic CSV/JSON output and the run manifest."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

MANIFEST = "manifest.json"


def fmt(v) -> str:
    """17 significant digits: exact round trip for doubles."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        # JSON has no inf/nan; keep them readable as strings
        return f if math.isfinite(f) else repr(f)
    return obj


class OutputTree:
    """Writes files under one directory and records each in the manifest."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: dict[str, str] = {}
        existing = self.root / MANIFEST
        if existing.exists():
            try:
                self.files = dict(json.loads(existing.read_text())["files"])
            except (ValueError, KeyError):
                self.files = {}

    def _record(self, name: str) -> Path:
        path = self.root / name
        self.files[name] = sha256(path)
        return path

    def write_csv(self, name: str, header, rows) -> Path:
        path = self.root / name
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
        return self._record(name)

    def write_json(self, name: str, data) -> Path:
        path = self.root / name
        # floats go through repr(): shortest exact round trip
        path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
        return self._record(name)

    def add(self, name: str) -> Path:
        """Record a file written by someone else (e.g. a plot)."""
        return self._record(name)

    def write_manifest(self) -> Path:
        path = self.root / MANIFEST
        body = {"files": {k: self.files[k] for k in sorted(self.files)}}
        path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
        return path


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def read_csv(path):
    """(header, float array of rows); an empty body gives shape (0, ncols)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return [], np.empty((0, 0))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body], dtype=float)
    return header, data.reshape(len(body), len(header))


def read_manifest(root) -> dict:
    return json.loads((Path(root) / MANIFEST).read_text())["files"]
