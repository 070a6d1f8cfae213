"""Artifact writers: CSV series, JSON reports and a binary path cache.

Every writer is deterministic: floats are printed with %.17g (round-trip
exact), JSON keys are sorted, and nothing time- or host-dependent is stored.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ExperimentFailure, InvalidParameter
from .paths import SamplePath, TimeGrid

__all__ = [
    "write_csv",
    "read_csv",
    "write_json",
    "sha256_file",
    "to_jsonable",
    "save_path",
    "iter_files",
    "load_path",
    "CACHE_MAGIC",
]

CACHE_MAGIC = b"FSYNC1\n"


def write_csv(path: Path, header: Sequence[str], rows) -> Path:
    """Write a numeric table; every entry must be finite."""
    arr = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if arr.size and arr.shape[1] != len(header):
        raise InvalidParameter(f"{len(header)} columns in header, {arr.shape[1]} in rows")
    if not np.all(np.isfinite(arr)):
        bad = int(np.argwhere(~np.isfinite(arr))[0, 0])
        raise ExperimentFailure(f"non-finite value in row {bad} of {Path(path).name}")
    lines = [",".join(header)]
    lines += [",".join("%.17g" % v for v in row) for row in arr]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    header = text[0].split(",")
    data = np.array([[float(x) for x in line.split(",")] for line in text[1:]])
    return header, data.reshape(-1, len(header))


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and tuples to JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def save_path(path: Path, sample: SamplePath) -> Path:
    """Binary cache: magic, (t0, t1) as float64, n and trailing dims as uint64,
    then the values, all little-endian."""
    vals = np.ascontiguousarray(sample.values, dtype="<f8")
    shape = vals.shape[1:]
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<ddQQ", sample.grid.t0, sample.grid.t1, sample.grid.n, len(shape)))
        fh.write(struct.pack(f"<{len(shape)}Q", *shape))
        fh.write(vals.tobytes())
    return Path(path)


def load_path(path: Path) -> SamplePath:
    with open(path, "rb") as fh:
        if fh.read(len(CACHE_MAGIC)) != CACHE_MAGIC:
            raise InvalidParameter(f"{path} is not a fracsync path cache")
        t0, t1, n, nd = struct.unpack("<ddQQ", fh.read(32))
        shape = struct.unpack(f"<{nd}Q", fh.read(8 * nd))
        vals = np.frombuffer(fh.read(), dtype="<f8").reshape((n + 1,) + tuple(shape))
    return SamplePath(TimeGrid(t0, t1, n), vals.astype(np.float64), {"source": str(path)})


def iter_files(paths: Iterable[Path]) -> list[dict]:
    """Manifest entries {file, sha256}, sorted by file name, duplicates removed."""
    return [{"file": Path(p).name, "sha256": sha256_file(p)} for p in sorted(set(map(Path, paths)), key=lambda p: p.name)]
