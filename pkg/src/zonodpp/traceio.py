"""Trace files.

CSV: header ``step,basis,accepted,elapsed_ns`` then one row per step::

    1,0 3,1,0

``step`` counts from 1 (the initial state is not a step), ``basis`` is the
ascending 0-based column indices joined by single spaces, ``accepted`` is
0/1 and ``elapsed_ns`` is nanoseconds since the chain started (0 when
timing is off). Lines end with ``\\n``.

JSONL: one object per step with the same keys, ``basis`` as an integer
list, written with ``separators=(",", ":")``.
"""

from __future__ import annotations

import json
from typing import Optional

import numpy as np

from .samplers import ChainTrace

CSV_HEADER = "step,basis,accepted,elapsed_ns"


def write_csv(trace: ChainTrace, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for i, (row, acc, ns) in enumerate(zip(trace.bases.tolist(), trace.accepted.tolist(),
                                               trace.elapsed_ns.tolist()), start=1):
            fh.write(f"{i},{' '.join(map(str, row))},{int(acc)},{ns}\n")


def write_jsonl(trace: ChainTrace, path) -> None:
    with open(path, "w", newline="\n") as fh:
        for i, (row, acc, ns) in enumerate(zip(trace.bases.tolist(), trace.accepted.tolist(),
                                               trace.elapsed_ns.tolist()), start=1):
            fh.write(json.dumps({"step": i, "basis": row, "accepted": int(acc), "elapsed_ns": ns},
                                separators=(",", ":")) + "\n")


def _assemble(kind, n, steps, bases, accepted, elapsed, path) -> ChainTrace:
    if not bases:
        raise ValueError(f"{path}: empty trace")
    if steps != list(range(1, len(steps) + 1)):
        raise ValueError(f"{path}: steps are not consecutive from 1")
    r = len(bases[0])
    B = np.array(bases, dtype=np.int32)
    if B.ndim != 2:
        raise ValueError(f"{path}: bases of unequal size")
    n = int(B.max()) + 1 if n is None else n
    acc = np.array(accepted, dtype=bool)
    # per-proposal flags are not stored; treat every step as a proposal
    return ChainTrace(kind, r, n, (), B, acc, np.ones_like(acc),
                      np.array(elapsed, dtype=np.int64))


def read_csv(path, kind: str = "", n: Optional[int] = None) -> ChainTrace:
    steps, bases, accepted, elapsed = [], [], [], []
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(",")
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 fields")
            steps.append(int(parts[0]))
            bases.append([int(v) for v in parts[1].split()])
            accepted.append(int(parts[2]))
            elapsed.append(int(parts[3]))
    return _assemble(kind, n, steps, bases, accepted, elapsed, path)


def read_jsonl(path, kind: str = "", n: Optional[int] = None) -> ChainTrace:
    steps, bases, accepted, elapsed = [], [], [], []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                steps.append(rec["step"])
                bases.append(rec["basis"])
                accepted.append(rec["accepted"])
                elapsed.append(rec["elapsed_ns"])
    return _assemble(kind, n, steps, bases, accepted, elapsed, path)


def read_trace(path, kind: str = "", n: Optional[int] = None) -> ChainTrace:
    reader = read_jsonl if str(path).endswith(".jsonl") else read_csv
    return reader(path, kind, n)
