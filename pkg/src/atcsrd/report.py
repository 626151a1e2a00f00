"""Aggregation of evaluation runs into summary tables and confusion matrices.

A run is one (train dataset, test dataset, architecture, ASR model, seed)
evaluation, stored as one JSON file. Confusion matrices put training datasets
on rows and test datasets on columns; pairs without runs stay empty instead of
being filled with zeros.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .metrics import MetricsReport

__all__ = [
    "METRICS",
    "RunRecord",
    "GroupStat",
    "ConfusionMatrix",
    "aggregate",
    "confusion_matrix",
    "read_records",
    "write_record",
    "emit",
    "matrix_to_csv",
    "matrix_to_json",
    "matrix_from_json",
]

METRICS = ("wer", "wder", "per")
_FIELDS = ("train_dataset", "test_dataset", "architecture", "asr_model", "seed")


@dataclass(frozen=True)
class RunRecord:
    train_dataset: str
    test_dataset: str
    architecture: str
    asr_model: str
    seed: int
    metrics: MetricsReport

    def __post_init__(self):
        for name in ("train_dataset", "test_dataset", "architecture", "asr_model"):
            if not getattr(self, name):
                raise ValueError(f"RunRecord.{name} must be non-empty")

    @property
    def intra(self) -> bool:
        return self.train_dataset == self.test_dataset

    def value(self, metric: str) -> float:
        return self.metrics.value(metric)

    def to_json(self) -> dict:
        d = {k: getattr(self, k) for k in _FIELDS}
        d["metrics"] = self.metrics.to_json()
        return d

    @classmethod
    def from_json(cls, d: dict) -> "RunRecord":
        return cls(
            str(d["train_dataset"]),
            str(d["test_dataset"]),
            str(d["architecture"]),
            str(d["asr_model"]),
            int(d["seed"]),
            MetricsReport.from_json(d["metrics"]),
        )


def write_record(r: RunRecord, path) -> None:
    Path(path).write_text(json.dumps(r.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_records(directory) -> list[RunRecord]:
    """All ``*.json`` run records in a directory, in file-name order."""
    paths = sorted(Path(directory).glob("*.json"))
    return [RunRecord.from_json(json.loads(p.read_text(encoding="utf-8"))) for p in paths]


@dataclass(frozen=True)
class GroupStat:
    group: tuple
    mean: float
    std: float
    n: int

    @property
    def single(self) -> bool:
        # std is reported as 0 for a single run
        return self.n == 1


def _check_metric(metric: str) -> None:
    if metric not in METRICS:
        raise KeyError(f"unknown metric {metric!r}; expected one of {METRICS}")


def aggregate(
    records: Iterable[RunRecord],
    metric: str,
    group_by: Sequence[str] = ("architecture", "asr_model", "test_dataset"),
    scenario: str | None = None,
) -> list[GroupStat]:
    """Mean and sample standard deviation (n - 1) of a metric per group.

    ``scenario`` restricts to ``"intra"`` (train == test) or ``"inter"``
    runs. Groups come back sorted. Means and deviations are computed in
    exact rational arithmetic, so the result does not depend on record order.
    """
    _check_metric(metric)
    for g in group_by:
        if g not in _FIELDS:
            raise KeyError(f"cannot group by {g!r}")
    if scenario not in (None, "intra", "inter"):
        raise ValueError("scenario must be 'intra', 'inter' or None")
    groups: dict[tuple, list[float]] = {}
    for r in records:
        if scenario == "intra" and not r.intra or scenario == "inter" and r.intra:
            continue
        key = tuple(getattr(r, g) for g in group_by)
        groups.setdefault(key, []).append(r.value(metric))
    out = []
    for key in sorted(groups):
        vals = groups[key]
        n = len(vals)
        # statistics works in exact rationals, so identical runs give std 0
        std = statistics.stdev(vals) if n > 1 else 0.0
        out.append(GroupStat(key, statistics.mean(vals), std, n))
    return out


@dataclass(frozen=True)
class ConfusionMatrix:
    metric_name: str
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    cells: tuple[tuple[float | None, ...], ...]
    counts: tuple[tuple[int, ...], ...] = field(default=())

    def __post_init__(self):
        if len(set(self.row_labels)) != len(self.row_labels) or len(set(self.col_labels)) != len(
            self.col_labels
        ):
            raise ValueError("labels must be unique")
        if len(self.cells) != len(self.row_labels) or any(
            len(row) != len(self.col_labels) for row in self.cells
        ):
            raise ValueError("cells shape does not match the labels")

    def cell(self, train: str, test: str) -> float | None:
        return self.cells[self.row_labels.index(train)][self.col_labels.index(test)]


def confusion_matrix(
    records: Iterable[RunRecord],
    metric_name: str,
    architecture: str | None = None,
    asr_model: str | None = None,
    labels: Sequence[str] | None = None,
) -> ConfusionMatrix:
    """Mean metric per (train, test) pair; rows train, columns test.

    Without ``labels`` rows and columns both cover every dataset seen, in
    sorted order. Cells without runs are ``None``.
    """
    _check_metric(metric_name)
    records = [
        r
        for r in records
        if (architecture is None or r.architecture == architecture)
        and (asr_model is None or r.asr_model == asr_model)
    ]
    if labels is None:
        labels = sorted({r.train_dataset for r in records} | {r.test_dataset for r in records})
    labels = tuple(labels)
    vals: dict[tuple[str, str], list[float]] = {}
    for r in records:
        vals.setdefault((r.train_dataset, r.test_dataset), []).append(r.value(metric_name))
    cells = []
    counts = []
    for a in labels:
        row = []
        crow = []
        for b in labels:
            v = vals.get((a, b), [])
            row.append(statistics.mean(v) if v else None)
            crow.append(len(v))
        cells.append(tuple(row))
        counts.append(tuple(crow))
    return ConfusionMatrix(metric_name, labels, labels, tuple(cells), tuple(counts))


def _fmt(v: float | None) -> str:
    return "" if v is None else f"{v:.6f}"


def matrix_to_csv(m: ConfusionMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"train\\test ({m.metric_name})", *m.col_labels])
    for label, row in zip(m.row_labels, m.cells):
        w.writerow([label, *(_fmt(v) for v in row)])
    return buf.getvalue()


def matrix_to_json(m: ConfusionMatrix) -> str:
    d = {
        "metric_name": m.metric_name,
        "row_labels": list(m.row_labels),
        "col_labels": list(m.col_labels),
        "cells": [list(r) for r in m.cells],
        "counts": [list(r) for r in m.counts],
    }
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def matrix_from_json(text: str) -> ConfusionMatrix:
    d = json.loads(text)
    return ConfusionMatrix(
        d["metric_name"],
        tuple(d["row_labels"]),
        tuple(d["col_labels"]),
        tuple(tuple(r) for r in d["cells"]),
        tuple(tuple(r) for r in d.get("counts", ())),
    )


def _table_to_csv(stats: Sequence[GroupStat], group_by: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*group_by, "mean", "std", "n"])
    for s in stats:
        w.writerow([*s.group, _fmt(s.mean), _fmt(s.std), s.n])
    return buf.getvalue()


def _table_to_json(stats: Sequence[GroupStat], group_by: Sequence[str]) -> str:
    rows = [
        {**dict(zip(group_by, s.group)), "mean": s.mean, "std": s.std, "n": s.n}
        for s in stats
    ]
    return json.dumps({"group_by": list(group_by), "rows": rows}, indent=2, sort_keys=True) + "\n"


def emit(obj, fmt: str = "csv", path=None, group_by: Sequence[str] | None = None) -> str:
    """Serialise a confusion matrix or an aggregate table as CSV or JSON.

    Returns the text and writes it to ``path`` when given.
    """
    if fmt not in ("csv", "json"):
        raise ValueError("format must be 'csv' or 'json'")
    if isinstance(obj, ConfusionMatrix):
        text = matrix_to_csv(obj) if fmt == "csv" else matrix_to_json(obj)
    else:
        stats = list(obj)
        if group_by is None:
            raise ValueError("group_by is required for aggregate tables")
        text = _table_to_csv(stats, group_by) if fmt == "csv" else _table_to_json(stats, group_by)
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    return text
