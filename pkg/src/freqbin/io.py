"""CSV, JSON and binary event-record serialization."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .detection import EventStream

# node u8, channel u8, timestamp i64 picoseconds, little-endian, packed
EVENT_DTYPE = np.dtype([("node", "u1"), ("channel", "u1"), ("timestamp", "<i8")])
NUM_FMT = "{:.17e}"


def _num(v) -> str:
    return NUM_FMT.format(float(v))


def write_columns(path, headers, columns):
    """CSV with one header row; numbers in full-precision scientific notation."""
    cols = [np.asarray(c) for c in columns]
    n = len(cols[0])
    if any(len(c) != n for c in cols):
        raise ValueError("columns differ in length")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(headers)
        for row in zip(*cols):
            w.writerow([v if isinstance(v, (str, np.str_)) else (str(int(v)) if isinstance(v, (int, np.integer)) else _num(v)) for v in row])


def write_matrix(path, matrix, axis_a, axis_b, corner="nu_a_hz\\nu_b_hz"):
    """Matrix CSV: first row holds the column axis, first column the row axis."""
    m = np.asarray(matrix, dtype=float)
    with open(path, "w", newline="") as fh:
        fh.write(corner + "," + ",".join(_num(v) for v in axis_b) + "\n")
        for a, row in zip(axis_a, m):
            fh.write(_num(a) + "," + ",".join(_num(v) for v in row) + "\n")


def read_matrix(path):
    with open(path) as fh:
        head = fh.readline().rstrip("\n").split(",")
        axis_b = np.array([float(v) for v in head[1:]])
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return data[:, 1:], data[:, 0], axis_b


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def events_to_records(stream: EventStream) -> np.ndarray:
    if np.any(stream.timestamps < 0):
        raise ValueError("timestamps must be non-negative")
    rec = np.empty(len(stream), dtype=EVENT_DTYPE)
    rec["node"] = stream.node
    rec["channel"] = stream.channel
    rec["timestamp"] = np.round(stream.timestamps * 1e12).astype(np.int64)
    return rec


def write_events(path, stream: EventStream):
    events_to_records(stream).tofile(path)


def read_events(path) -> EventStream:
    rec = np.fromfile(path, dtype=EVENT_DTYPE)
    return EventStream(rec["timestamp"] * 1e-12, rec["node"], rec["channel"])


def write_events_csv(path, stream: EventStream):
    rec = events_to_records(stream)
    with open(path, "w", newline="") as fh:
        fh.write("node,channel,timestamp_ps\n")
        for r in rec:
            fh.write(f"{r['node']},{r['channel']},{r['timestamp']}\n")


def read_events_csv(path) -> EventStream:
    with open(path) as fh:
        fh.readline()
        body = fh.read()
    if not body.strip():
        return EventStream.empty()
    data = np.loadtxt(body.splitlines(), delimiter=",", dtype=np.int64, ndmin=2)
    return EventStream(data[:, 2] * 1e-12, data[:, 0], data[:, 1])


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
