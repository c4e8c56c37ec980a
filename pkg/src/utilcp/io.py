"""Readers and writers for the CSV file formats.

scores
    header ``id,label,p_0,...,p_{K-1}``; one row per instance.
hierarchy
    ``child,parent`` edge rows, a blank line, then ``label_id,leaf_name`` rows.
costs
    ``label_id,cost`` with every label listed once and cost > 0.
categories
    ``category_name,label_id``; a category spans several rows, and a label
    may appear in several categories.

All files are UTF-8 with LF or CRLF line endings. Outputs are written to a
temporary file and renamed into place.
"""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .core import REJECT_TOL, ScoreMatrix, as_prob_matrix
from .errors import (
    CycleDetected,
    DataError,
    DimensionMismatch,
    LabelOutOfRange,
    NonPositiveCost,
    OrphanLabel,
    ParseError,
    UnknownLabel,
)
from .hierarchy import Hierarchy


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_rows(path):
    with open(path, encoding="utf-8-sig", newline="") as fh:
        return list(csv.reader(fh))


def _int(value, row, column):
    try:
        return int(value.strip())
    except ValueError:
        raise ParseError(f"expected an integer, got {value!r}", row, column) from None


def _float(value, row, column):
    try:
        x = float(value.strip())
    except ValueError:
        raise ParseError(f"expected a number, got {value!r}", row, column) from None
    if not math.isfinite(x):
        raise ParseError(f"expected a finite number, got {value!r}", row, column)
    return x


# scores ----------------------------------------------------------------------


def load_scores(path) -> ScoreMatrix:
    rows = _read_rows(path)
    if not rows:
        raise ParseError("empty score file", 1)
    header = [h.strip() for h in rows[0]]
    if len(header) < 4 or header[:2] != ["id", "label"]:
        raise ParseError("header must be id,label,p_0,...,p_{K-1}", 1)
    K = len(header) - 2
    expected = [f"p_{k}" for k in range(K)]
    if header[2:] != expected:
        raise ParseError(f"probability columns must be named {','.join(expected)}", 1)
    ids, labels, probs = [], [], []
    for i, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != K + 2:
            raise DimensionMismatch(f"expected {K + 2} fields, got {len(row)}", i)
        label = _int(row[1], i, "label")
        if not 0 <= label < K:
            raise LabelOutOfRange(f"label {label} not in [0, {K})", i, "label")
        p = [_float(v, i, header[j + 2]) for j, v in enumerate(row[2:])]
        if any(x < 0 or x > 1 for x in p):
            raise ParseError("probabilities must lie in [0, 1]", i)
        total = math.fsum(p)
        if abs(total - 1.0) > REJECT_TOL:
            raise ParseError(f"probabilities sum to {total:.6g}, expected 1", i)
        ids.append(row[0].strip())
        labels.append(label)
        probs.append(p)
    if not ids:
        raise ParseError("score file has no instances", 2)
    if len(set(ids)) != len(ids):
        seen = set()
        for j, v in enumerate(ids):
            if v in seen:
                raise ParseError(f"duplicate instance id {v!r}", j + 2, "id")
            seen.add(v)
    return ScoreMatrix.from_arrays(as_prob_matrix(np.array(probs)), labels, ids)


def format_scores(matrix: ScoreMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "label", *(f"p_{k}" for k in range(matrix.K))])
    for i in range(len(matrix)):
        w.writerow([matrix.ids[i], int(matrix.labels[i]), *(repr(float(x)) for x in matrix.probs[i])])
    return buf.getvalue()


def write_scores(path, matrix: ScoreMatrix) -> None:
    atomic_write(path, format_scores(matrix))


# hierarchy -------------------------------------------------------------------


def load_hierarchy(path) -> Hierarchy:
    rows = _read_rows(path)
    try:
        blank = next(i for i, r in enumerate(rows) if not r or all(not c.strip() for c in r))
    except StopIteration:
        raise ParseError("hierarchy file needs a blank line before the label section") from None
    edges, mapping = rows[:blank], rows[blank + 1 :]
    while mapping and (not mapping[0] or all(not c.strip() for c in mapping[0])):
        mapping = mapping[1:]
        blank += 1
    parent = {}
    start = 1
    if edges and [c.strip() for c in edges[0]] == ["child", "parent"]:
        edges, start = edges[1:], 2
    for i, row in enumerate(edges, start=start):
        if len(row) != 2:
            raise ParseError("edge rows need exactly child,parent", i)
        child, par = row[0].strip(), row[1].strip()
        if not child or not par:
            raise ParseError("empty node name", i)
        if child == par:
            raise CycleDetected(f"node {child!r} is its own parent (row {i})")
        if child in parent and parent[child] != par:
            raise ParseError(f"node {child!r} has two parents", i)
        parent[child] = par
    leaf_of_label = {}
    start = blank + 2
    if mapping and [c.strip() for c in mapping[0]] == ["label_id", "leaf_name"]:
        mapping, start = mapping[1:], start + 1
    for i, row in enumerate(mapping, start=start):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise ParseError("label rows need exactly label_id,leaf_name", i)
        label = _int(row[0], i, "label_id")
        if label in leaf_of_label:
            raise ParseError(f"label {label} mapped twice", i)
        leaf = row[1].strip()
        if leaf not in parent:
            raise OrphanLabel(f"label {label} maps to unknown node {leaf!r} (row {i})")
        leaf_of_label[label] = leaf
    return Hierarchy(parent, leaf_of_label)


def format_hierarchy(h: Hierarchy) -> str:
    lines = ["child,parent"]
    for child, par in sorted(h.parent.items(), key=lambda kv: (h.depth[kv[0]], str(kv[0]))):
        if child != par:
            lines.append(f"{child},{par}")
    lines += ["", "label_id,leaf_name"]
    lines += [f"{k},{leaf}" for k, leaf in enumerate(h.leaves)]
    return "\n".join(lines) + "\n"


# costs and categories ----------------------------------------------------------


def load_costs(path, K: int | None = None) -> np.ndarray:
    rows = _read_rows(path)
    start = 1
    if rows and [c.strip() for c in rows[0]] == ["label_id", "cost"]:
        rows, start = rows[1:], 2
    costs = {}
    for i, row in enumerate(rows, start=start):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise ParseError("cost rows need exactly label_id,cost", i)
        label = _int(row[0], i, "label_id")
        cost = _float(row[1], i, "cost")
        if cost <= 0:
            raise NonPositiveCost(f"label {label} has cost {cost}; costs must be > 0 (row {i})")
        if label in costs:
            raise ParseError(f"label {label} listed twice", i)
        if label < 0 or (K is not None and label >= K):
            raise UnknownLabel(f"cost row {i}: label {label} outside the label space")
        costs[label] = cost
    size = K if K is not None else (max(costs) + 1 if costs else 0)
    missing = [k for k in range(size) if k not in costs]
    if missing or not costs:
        raise DataError(f"cost file is missing labels {missing}")
    return np.array([costs[k] for k in range(size)])


def format_costs(penalties) -> str:
    return "label_id,cost\n" + "".join(f"{k},{float(c)!r}\n" for k, c in enumerate(penalties))


def load_categories(path, K: int | None = None) -> list[frozenset[int]]:
    """Categories in order of first appearance."""
    rows = _read_rows(path)
    start = 1
    if rows and [c.strip() for c in rows[0]] == ["category_name", "label_id"]:
        rows, start = rows[1:], 2
    cats: dict[str, set] = {}
    for i, row in enumerate(rows, start=start):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise ParseError("category rows need exactly category_name,label_id", i)
        label = _int(row[1], i, "label_id")
        if label < 0 or (K is not None and label >= K):
            raise UnknownLabel(f"category row {i}: label {label} outside the label space")
        cats.setdefault(row[0].strip(), set()).add(label)
    if not cats:
        raise DataError("category file defines no categories")
    return [frozenset(v) for v in cats.values()]


def format_categories(categories, names=None) -> str:
    lines = ["category_name,label_id"]
    for j, c in enumerate(categories):
        name = names[j] if names else f"c{j}"
        lines += [f"{name},{y}" for y in sorted(c)]
    return "\n".join(lines) + "\n"
