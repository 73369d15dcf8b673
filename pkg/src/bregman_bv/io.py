"""Delimited-text formats for logit dumps, labels and result tables.

Every file may start with ``#`` comment lines (written outputs record the
invocation there). Numbers are written with 17 significant digits so that
doubles survive a round trip; undefined metrics are written as ``NA``.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from typing import Iterable, Sequence

import numpy as np

from .errors import BregmanError
from .estimators import LogitEnsembleSet

NA = "NA"
LOGIT_ID_COLUMNS = ("instance_id", "member_id")
LABEL_HEADER = ("instance_id", "label")
CURVE_HEADER = ("quantile", "kept_fraction", "accuracy", "mean_nll")


class DumpFormatError(BregmanError):
    """Malformed input file. ``kind`` names the problem category."""

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return NA
    return format(x, ".17g")


def _rows(path) -> Iterable[tuple[int, list[str]]]:
    """(line number, fields) for every non-comment, non-blank line."""
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield lineno, next(csv.reader([line]))


def _int_id(value: str, what: str, lineno: int) -> int:
    try:
        out = int(value)
    except ValueError:
        raise DumpFormatError("parse", f"line {lineno}: {what} {value!r} is not an integer") from None
    if out < 0:
        raise DumpFormatError("parse", f"line {lineno}: {what} {out} is negative")
    return out


def _float(value: str, lineno: int, column: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise DumpFormatError("parse", f"line {lineno}: column {column} value {value!r} is not a number") from None


def read_dump_array(path, min_classes: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """(instance ids, values) of a dump; values are (instances, members, columns).

    Instances are sorted by id and members by member id. Raises
    ``DumpFormatError`` on ragged member counts, inconsistent column
    counts, non-finite values or duplicate (instance, member) pairs.
    """
    rows = _rows(path)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise DumpFormatError("parse", f"{path}: empty file") from None
    header = [h.strip() for h in header]
    if tuple(header[:2]) != LOGIT_ID_COLUMNS or header[2:] != [f"z{j}" for j in range(len(header) - 2)]:
        raise DumpFormatError("parse", f"line {lineno}: header must be instance_id,member_id,z0,...,z{{k-1}}")
    k = len(header) - 2
    if k < min_classes:
        raise DumpFormatError("inconsistent-k", f"line {lineno}: need at least {min_classes} logit columns")
    by_instance: dict[int, dict[int, list[float]]] = defaultdict(dict)
    for lineno, fields in rows:
        if len(fields) != k + 2:
            raise DumpFormatError(
                "inconsistent-k", f"line {lineno}: expected {k} logits, found {len(fields) - 2}")
        inst = _int_id(fields[0], "instance_id", lineno)
        member = _int_id(fields[1], "member_id", lineno)
        z = [_float(v, lineno, header[j + 2]) for j, v in enumerate(fields[2:])]
        if not all(math.isfinite(v) for v in z):
            raise DumpFormatError("non-finite", f"line {lineno}: non-finite logit for instance {inst}")
        if member in by_instance[inst]:
            raise DumpFormatError(
                "duplicate", f"line {lineno}: duplicate row for instance {inst}, member {member}")
        by_instance[inst][member] = z
    if not by_instance:
        raise DumpFormatError("parse", f"{path}: no data rows")
    counts = {i: len(m) for i, m in by_instance.items()}
    expected = max(counts.values())
    short = sorted(i for i, c in counts.items() if c != expected)
    if short:
        raise DumpFormatError(
            "ragged",
            f"instance_id {short[0]} has {counts[short[0]]} members, expected {expected}",
        )
    ids = sorted(by_instance)
    values = np.array([[by_instance[i][m] for m in sorted(by_instance[i])] for i in ids])
    return np.array(ids, dtype=int), values


def load_logit_dump(path) -> LogitEnsembleSet:
    """Read ``instance_id,member_id,z0,...,z{k-1}`` (k >= 2) into an ensemble set."""
    ids, values = read_dump_array(path, min_classes=2)
    return LogitEnsembleSet(values, ids)


def write_logit_dump(path, ens: LogitEnsembleSet, comment: str | None = None) -> None:
    k = ens.n_classes
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*LOGIT_ID_COLUMNS, *(f"z{j}" for j in range(k))])
        for i, inst in enumerate(ens.instance_ids):
            for m in range(ens.n_members):
                w.writerow([fmt(int(inst)), str(m), *(fmt(v) for v in ens.values[i, m])])


def load_labels(path, instance_ids: Sequence[int] | None = None, dtype=int) -> np.ndarray:
    """Labels aligned to ``instance_ids`` (or sorted by id when omitted)."""
    rows = _rows(path)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise DumpFormatError("parse", f"{path}: empty file") from None
    if tuple(h.strip() for h in header) != LABEL_HEADER:
        raise DumpFormatError("parse", f"line {lineno}: header must be instance_id,label")
    labels: dict[int, float] = {}
    for lineno, fields in rows:
        if len(fields) != 2:
            raise DumpFormatError("parse", f"line {lineno}: expected 2 fields")
        inst = _int_id(fields[0], "instance_id", lineno)
        if inst in labels:
            raise DumpFormatError("duplicate", f"line {lineno}: duplicate label for instance {inst}")
        if dtype is int:
            labels[inst] = _int_id(fields[1], "label", lineno)
        else:
            labels[inst] = _float(fields[1], lineno, "label")
            if not math.isfinite(labels[inst]):
                raise DumpFormatError("non-finite", f"line {lineno}: non-finite label")
    ids = sorted(labels) if instance_ids is None else [int(i) for i in instance_ids]
    missing = [i for i in ids if i not in labels]
    if missing:
        raise DumpFormatError("parse", f"no label for instance_id {missing[0]}")
    if instance_ids is not None and len(labels) != len(ids):
        extra = sorted(set(labels) - set(ids))
        raise DumpFormatError("parse", f"label for unknown instance_id {extra[0]}")
    return np.array([labels[i] for i in ids], dtype=dtype)


def write_labels(path, instance_ids, labels, comment: str | None = None) -> None:
    write_table(path, LABEL_HEADER, zip(instance_ids, labels), comment)


def write_table(path, header: Sequence[str], rows: Iterable[Sequence], comment: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def read_table(path) -> tuple[list[str], list[list[str]]]:
    rows = list(_rows(path))
    if not rows:
        raise DumpFormatError("parse", f"{path}: empty file")
    return [h.strip() for h in rows[0][1]], [r for _, r in rows[1:]]


def read_value_column(path) -> tuple[np.ndarray, np.ndarray]:
    """(ids, values) from a two-column ``instance_id,<value>`` table."""
    header, rows = read_table(path)
    if len(header) != 2 or header[0] != "instance_id":
        raise DumpFormatError("parse", f"{path}: expected header instance_id,<value>")
    ids, vals = [], []
    for n, r in enumerate(rows, start=2):
        if len(r) != 2:
            raise DumpFormatError("parse", f"{path}: row {n} has {len(r)} fields")
        ids.append(_int_id(r[0], "instance_id", n))
        v = _float(r[1], n, header[1])
        if not math.isfinite(v):
            raise DumpFormatError("non-finite", f"{path}: row {n} is not finite")
        vals.append(v)
    return np.array(ids, dtype=int), np.array(vals)


def write_curve(path, rows, comment: str | None = None) -> None:
    qs = [r[0] for r in rows]
    if any(b <= a for a, b in zip(qs, qs[1:])):
        raise ValueError("curve quantiles must be strictly increasing")
    write_table(path, CURVE_HEADER, rows, comment)


def read_curve(path) -> list[tuple[float, float, float, float]]:
    header, rows = read_table(path)
    if tuple(header) != CURVE_HEADER:
        raise DumpFormatError("parse", f"{path}: not a curve file")
    return [tuple(math.nan if v == NA else float(v) for v in r) for r in rows]
