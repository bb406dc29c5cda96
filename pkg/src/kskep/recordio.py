"""Reading and writing state records and trajectory streams.

Formats: CSV (with header) and JSON lines, selected by ``--format`` or
sniffed from the first byte.  Quaternions serialize scalar-first as JSON
arrays [w, x, y, z] and as four CSV columns.  Floats are printed as their
shortest round-trip decimal, so outputs are byte-deterministic for identical
inputs and configuration.

Record kinds:

- cartesian: ``{"x": [...], "X": [...], "mu": ...}`` / CSV columns
  ``x1,x2,x3,X1,X2,X3[,mu]``
- ks: ``{"v": [...], "V": [...], "v_star": ..., "V_star": ...}`` / CSV
  columns ``v0,v1,v2,v3,V0,V1,V2,V3,vstar,Vstar``
"""

from __future__ import annotations

import csv
import io
import json
from typing import Iterable, Sequence, TextIO

import numpy as np

from .canon import CartesianState, KSPhase
from .propagator import TrajectorySample

CARTESIAN_FIELDS = ("x1", "x2", "x3", "X1", "X2", "X3")
KS_FIELDS = ("v0", "v1", "v2", "v3", "V0", "V1", "V2", "V3", "vstar", "Vstar")
TRAJECTORY_FIELDS = (
    "tau", "t",
    "v0", "v1", "v2", "v3", "V0", "V1", "V2", "V3", "vstar", "Vstar",
    "x1", "x2", "x3", "X1", "X2", "X3", "Jc", "K0",
)


class RecordError(ValueError):
    """Malformed input record; carries the offending record index."""

    def __init__(self, index: int, message: str):
        super().__init__(f"record {index}: {message}")
        self.index = index


def fmt(x: float) -> str:
    """Shortest decimal that round-trips to the same float."""
    return repr(float(x))


def sniff_format(text: str) -> str:
    for ch in text:
        if ch.isspace():
            continue
        return "jsonl" if ch in "{[" else "csv"
    return "csv"


def _float(value, index: int, what: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise RecordError(index, f"{what} is not a number: {value!r}") from None


def _vec(value, index: int, what: str, n: int) -> np.ndarray:
    try:
        arr = np.asarray([float(a) for a in value], dtype=float)
    except (TypeError, ValueError):
        raise RecordError(index, f"{what} is not a numeric array: {value!r}") from None
    if arr.shape != (n,):
        raise RecordError(index, f"{what} must have {n} components, got {arr.shape}")
    return arr


def parse_records(text: str, fmt_hint: str | None = None) -> tuple[str, list[dict]]:
    """Parse input text into (kind, records); kind is "cartesian" or "ks".

    JSONL records are detected by their keys, CSV by the header columns.
    Empty input yields an empty record list with kind "empty".
    """
    form = fmt_hint or sniff_format(text)
    if form == "jsonl":
        return _parse_jsonl(text)
    return _parse_csv(text)


def _detect_kind(keys: set[str], index: int) -> str:
    if {"x", "X"} <= keys:
        return "cartesian"
    if {"v", "V"} <= keys:
        return "ks"
    raise RecordError(index, f"cannot tell record kind from keys {sorted(keys)}")


def _parse_jsonl(text: str) -> tuple[str, list[dict]]:
    records: list[dict] = []
    kind = "empty"
    for i, line in enumerate(s for s in text.splitlines() if s.strip()):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RecordError(i, f"bad JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise RecordError(i, "each line must be a JSON object")
        this_kind = _detect_kind(set(obj), i)
        if kind == "empty":
            kind = this_kind
        elif kind != this_kind:
            raise RecordError(i, f"mixed record kinds: {kind} then {this_kind}")
        if this_kind == "cartesian":
            rec = {
                "x": _vec(obj["x"], i, "x", 3),
                "X": _vec(obj["X"], i, "X", 3),
            }
            if "mu" in obj:
                rec["mu"] = _float(obj["mu"], i, "mu")
        else:
            rec = {
                "v": _vec(obj["v"], i, "v", 4),
                "V": _vec(obj["V"], i, "V", 4),
                "v_star": _float(obj.get("v_star", 0.0), i, "v_star"),
                "V_star": _float(obj.get("V_star", 0.0), i, "V_star"),
            }
        records.append(rec)
    return kind, records


def _parse_csv(text: str) -> tuple[str, list[dict]]:
    rows = [row for row in csv.reader(io.StringIO(text)) if row and any(s.strip() for s in row)]
    if not rows:
        return "empty", []
    header = [h.strip() for h in rows[0]]
    cols = set(header)
    if set(CARTESIAN_FIELDS) <= cols:
        kind = "cartesian"
    elif set(KS_FIELDS) <= cols:
        kind = "ks"
    else:
        raise RecordError(0, f"unrecognized CSV header: {header}")
    idx = {name: header.index(name) for name in header}
    records = []
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise RecordError(i, f"expected {len(header)} columns, got {len(row)}")
        get = lambda name: _float(row[idx[name]], i, name)  # noqa: E731
        if kind == "cartesian":
            rec = {
                "x": np.array([get("x1"), get("x2"), get("x3")]),
                "X": np.array([get("X1"), get("X2"), get("X3")]),
            }
            if "mu" in idx:
                rec["mu"] = get("mu")
        else:
            rec = {
                "v": np.array([get("v0"), get("v1"), get("v2"), get("v3")]),
                "V": np.array([get("V0"), get("V1"), get("V2"), get("V3")]),
                "v_star": get("vstar"),
                "V_star": get("Vstar"),
            }
        records.append(rec)
    return kind, records


def state_from_record(rec: dict, index: int, default_mu: float) -> CartesianState:
    mu = rec.get("mu", default_mu)
    if not mu > 0.0:
        raise RecordError(index, f"mu must be positive, got {mu!r}")
    return CartesianState(rec["x"], rec["X"], mu)


def phase_from_record(rec: dict) -> KSPhase:
    return KSPhase(rec["v"], rec["V"], rec["v_star"], rec["V_star"])


def write_ks_records(rows: Iterable[dict], form: str, out: TextIO) -> None:
    """Write KS records (+ per-record constraint value Jc) in csv or jsonl."""
    rows = list(rows)
    if form == "jsonl":
        for row in rows:
            out.write(json.dumps({
                "v": [float(a) for a in row["v"]],
                "V": [float(a) for a in row["V"]],
                "v_star": float(row["v_star"]),
                "V_star": float(row["V_star"]),
                "Jc": float(row["Jc"]),
            }) + "\n")
        return
    out.write(",".join(KS_FIELDS + ("Jc",)) + "\n")
    for row in rows:
        cells = (
            [fmt(a) for a in row["v"]]
            + [fmt(a) for a in row["V"]]
            + [fmt(row["v_star"]), fmt(row["V_star"]), fmt(row["Jc"])]
        )
        out.write(",".join(cells) + "\n")


def write_cartesian_records(rows: Iterable[dict], form: str, out: TextIO) -> None:
    """Write Cartesian records (+ mu and source constraint value) in csv or jsonl."""
    rows = list(rows)
    if form == "jsonl":
        for row in rows:
            out.write(json.dumps({
                "x": [float(a) for a in row["x"]],
                "X": [float(a) for a in row["X"]],
                "mu": float(row["mu"]),
                "Jc": float(row["Jc"]),
            }) + "\n")
        return
    out.write(",".join(CARTESIAN_FIELDS + ("mu", "Jc")) + "\n")
    for row in rows:
        cells = (
            [fmt(a) for a in row["x"]]
            + [fmt(a) for a in row["X"]]
            + [fmt(row["mu"]), fmt(row["Jc"])]
        )
        out.write(",".join(cells) + "\n")


def trajectory_row(sample: TrajectorySample) -> list[float]:
    p, s = sample.phase, sample.state
    return (
        [sample.tau, sample.t]
        + [float(a) for a in p.v]
        + [float(a) for a in p.V]
        + [p.v_star, p.V_star]
        + [float(a) for a in s.x]
        + [float(a) for a in s.X]
        + [sample.report.jc, sample.report.k0]
    )


def parse_trajectory(text: str, fmt_hint: str | None = None) -> dict[str, np.ndarray]:
    """Parse a trajectory file back into named column arrays."""
    form = fmt_hint or sniff_format(text)
    if form == "jsonl":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not rows:
            return {}
        return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}
    rows = [row for row in csv.reader(io.StringIO(text)) if row]
    if not rows:
        return {}
    header = [h.strip() for h in rows[0]]
    data = np.array([[float(cell) for cell in row] for row in rows[1:]], dtype=float)
    if data.size == 0:
        return {name: np.array([]) for name in header}
    return {name: data[:, j] for j, name in enumerate(header)}


def write_trajectory(
    samples: Sequence[TrajectorySample],
    form: str,
    out: TextIO,
    extra: dict[str, Sequence[float]] | None = None,
) -> None:
    """Write a trajectory stream; ``extra`` appends named per-sample columns."""
    extra = extra or {}
    names = TRAJECTORY_FIELDS + tuple(extra)
    if form == "jsonl":
        for i, s in enumerate(samples):
            values = trajectory_row(s) + [extra[k][i] for k in extra]
            out.write(json.dumps(dict(zip(names, values))) + "\n")
        return
    out.write(",".join(names) + "\n")
    for i, s in enumerate(samples):
        values = trajectory_row(s) + [extra[k][i] for k in extra]
        out.write(",".join(fmt(v) for v in values) + "\n")
