"""CSV and manifest emission, plus the matching readers.

All files use '.' decimals, LF line endings, and mandatory headers; floats
are written with shortest-round-trip repr so identical runs produce
byte-identical files.  Every writer here has a reader that inverts it.
"""

from __future__ import annotations

import csv
import json
import time
from pathlib import Path

import numpy as np

from .audit import InvariantRecord
from .environment import EpochMark, RegretTrace

__all__ = [
    "TRACE_HEADER",
    "EPOCH_HEADER",
    "AGGREGATE_HEADER",
    "INVARIANT_HEADER",
    "write_trace_csv",
    "read_trace_csv",
    "write_epoch_csv",
    "read_epoch_csv",
    "write_aggregate_csv",
    "read_aggregate_csv",
    "write_invariant_csv",
    "read_invariant_csv",
    "write_manifest",
]

TRACE_HEADER = ["algorithm", "trial", "seed", "t", "action", "y", "c", "instant_regret", "cum_regret"]
EPOCH_HEADER = ["algorithm", "trial", "h", "t_start", "active_size", "support_size", "epoch_len"]
AGGREGATE_HEADER = ["t", "mean_cum_regret", "std_cum_regret"]
INVARIANT_HEADER = ["h", "invariant", "lhs", "rhs", "pass"]


def _fmt(x) -> str:
    return repr(float(x))


def _open_writer(path):
    fh = open(path, "w", newline="\n")
    return fh, csv.writer(fh, lineterminator="\n")


def write_trace_csv(path, trace: RegretTrace) -> None:
    fh, w = _open_writer(path)
    with fh:
        w.writerow(TRACE_HEADER)
        for i in range(len(trace)):
            w.writerow(
                [
                    trace.algorithm,
                    trace.trial,
                    trace.seed,
                    i + 1,
                    int(trace.action[i]),
                    _fmt(trace.y[i]),
                    _fmt(trace.c[i]),
                    _fmt(trace.instant_regret[i]),
                    _fmt(trace.cum_regret[i]),
                ]
            )


def read_trace_csv(path) -> RegretTrace:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != TRACE_HEADER:
        raise ValueError(f"{path}: missing or wrong trace header")
    body = rows[1:]
    if not body:
        raise ValueError(f"{path}: empty trace")
    return RegretTrace(
        algorithm=body[0][0],
        trial=int(body[0][1]),
        seed=int(body[0][2]),
        action=np.array([int(r[4]) for r in body], dtype=np.int64),
        y=np.array([float(r[5]) for r in body]),
        c=np.array([float(r[6]) for r in body]),
        instant_regret=np.array([float(r[7]) for r in body]),
        cum_regret=np.array([float(r[8]) for r in body]),
    )


def write_epoch_csv(path, traces: list[RegretTrace]) -> None:
    fh, w = _open_writer(path)
    with fh:
        w.writerow(EPOCH_HEADER)
        for trace in traces:
            for mark in trace.epoch_marks:
                w.writerow(
                    [
                        trace.algorithm,
                        trace.trial,
                        mark.h,
                        mark.t_start,
                        mark.active_size,
                        mark.support_size,
                        mark.epoch_len,
                    ]
                )


def read_epoch_csv(path) -> list[tuple[str, int, EpochMark]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != EPOCH_HEADER:
        raise ValueError(f"{path}: missing or wrong epoch header")
    return [
        (r[0], int(r[1]), EpochMark(int(r[2]), int(r[3]), int(r[4]), int(r[5]), int(r[6])))
        for r in rows[1:]
    ]


def write_aggregate_csv(path, mean: np.ndarray, std: np.ndarray) -> None:
    fh, w = _open_writer(path)
    with fh:
        w.writerow(AGGREGATE_HEADER)
        for i in range(len(mean)):
            w.writerow([i + 1, _fmt(mean[i]), _fmt(std[i])])


def read_aggregate_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != AGGREGATE_HEADER:
        raise ValueError(f"{path}: missing or wrong aggregate header")
    body = rows[1:]
    if not body:
        raise ValueError(f"{path}: empty aggregate")
    t = np.array([int(r[0]) for r in body], dtype=np.int64)
    mean = np.array([float(r[1]) for r in body])
    std = np.array([float(r[2]) for r in body])
    return t, mean, std


def write_invariant_csv(path, records: list[InvariantRecord]) -> None:
    fh, w = _open_writer(path)
    with fh:
        w.writerow(INVARIANT_HEADER)
        for r in records:
            w.writerow([r.h, r.invariant, _fmt(r.lhs), _fmt(r.rhs), int(r.passed)])


def read_invariant_csv(path) -> list[InvariantRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != INVARIANT_HEADER:
        raise ValueError(f"{path}: missing or wrong invariant header")
    return [InvariantRecord(int(r[0]), r[1], float(r[2]), float(r[3])) for r in rows[1:]]


def write_manifest(path, cfg_dict: dict, seeds: list[int], version: str) -> None:
    """Resolved config + per-trial seeds + library version (+ timestamp).

    The timestamp is the one field excluded from byte-identity guarantees.
    """
    payload = {
        "config": {k: cfg_dict[k] for k in sorted(cfg_dict)},
        "seeds": seeds,
        "version": version,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
