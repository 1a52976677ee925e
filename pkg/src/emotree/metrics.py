"""Confusion counts, accuracy / precision / recall / F-measure, and report tables.

Multiclass scores are macro averages over the three polarities with the
0/0 -> 0 convention. Values are computed exactly with ``Fraction`` and
converted to float unless ``exact=True``.
"""
from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .corpus import POLARITIES, Polarity

METRIC_ROWS = (("accuracy", "Accuracy"), ("precision", "Precision"), ("recall", "Recall"),
               ("f_measure", "F-measure"))


class EmptyEval(ValueError):
    pass


class UndefinedMetric(UserWarning):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts indexed (gold, predicted) in ``labels`` order."""

    counts: np.ndarray
    labels: tuple = POLARITIES

    @classmethod
    def from_labels(cls, gold: Sequence, predicted: Sequence, labels: Sequence = POLARITIES) -> "ConfusionMatrix":
        if len(gold) != len(predicted):
            raise ValueError("gold and predicted differ in length")
        index = {lab: i for i, lab in enumerate(labels)}
        counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
        for g, p in zip(gold, predicted):
            counts[index[g], index[p]] += 1
        return cls(counts, tuple(labels))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def _i(self, cls):
        return self.labels.index(cls)

    def tp(self, cls) -> int:
        i = self._i(cls)
        return int(self.counts[i, i])

    def fp(self, cls) -> int:
        i = self._i(cls)
        return int(self.counts[:, i].sum() - self.counts[i, i])

    def fn(self, cls) -> int:
        i = self._i(cls)
        return int(self.counts[i, :].sum() - self.counts[i, i])

    def tn(self, cls) -> int:
        return self.total - self.tp(cls) - self.fp(cls) - self.fn(cls)

    def binary(self, positive) -> dict:
        """One-vs-rest counts for ``positive``."""
        return {"TP": self.tp(positive), "FP": self.fp(positive), "FN": self.fn(positive), "TN": self.tn(positive)}

    def to_list(self) -> list:
        return self.counts.tolist()


def _ratio(num: int, den: int, what: str) -> Fraction:
    if den == 0:
        warnings.warn(f"{what} undefined (0/0); scored as 0", UndefinedMetric, stacklevel=3)
        return Fraction(0)
    return Fraction(num, den)


def _out(value: Fraction, exact: bool):
    return value if exact else float(value)


def accuracy(cm: ConfusionMatrix, exact: bool = False):
    if cm.total == 0:
        raise EmptyEval("no evaluated messages")
    return _out(Fraction(int(np.trace(cm.counts)), cm.total), exact)


def binary_accuracy(tp: int, tn: int, fp: int, fn: int, exact: bool = False):
    total = tp + tn + fp + fn
    if total == 0:
        raise EmptyEval("no evaluated messages")
    return _out(Fraction(tp + tn, total), exact)


def precision(cm: ConfusionMatrix, cls=None, exact: bool = False):
    """Precision of one class, or the macro average when ``cls`` is None."""
    if cls is None:
        return _out(sum((precision(cm, c, True) for c in cm.labels), Fraction(0)) / len(cm.labels), exact)
    return _out(_ratio(cm.tp(cls), cm.tp(cls) + cm.fp(cls), f"precision of {cls!r}"), exact)


def recall(cm: ConfusionMatrix, cls=None, exact: bool = False):
    if cls is None:
        return _out(sum((recall(cm, c, True) for c in cm.labels), Fraction(0)) / len(cm.labels), exact)
    return _out(_ratio(cm.tp(cls), cm.tp(cls) + cm.fn(cls), f"recall of {cls!r}"), exact)


def f_measure(p, r):
    """Harmonic mean 2pr/(p+r); 0 when p + r = 0. Keeps Fractions exact."""
    if p < 0 or r < 0:
        raise ValueError("precision and recall must be >= 0")
    if p + r == 0:
        return type(p + r)(0)
    return 2 * p * r / (p + r)


def macro_f1(cm: ConfusionMatrix, exact: bool = False):
    """Unweighted mean of per-class F1 (differs from F of macro precision/recall)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UndefinedMetric)
        per = [f_measure(precision(cm, c, True), recall(cm, c, True)) for c in cm.labels]
    return _out(sum(per, Fraction(0)) / len(per), exact)


def undefined_metrics(cm: ConfusionMatrix) -> list[str]:
    flags = []
    for c in cm.labels:
        name = c.title if isinstance(c, Polarity) else str(c)
        if cm.tp(c) + cm.fp(c) == 0:
            flags.append(f"precision[{name}]")
        if cm.tp(c) + cm.fn(c) == 0:
            flags.append(f"recall[{name}]")
    return flags


def summarize(cm: ConfusionMatrix) -> dict:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UndefinedMetric)
        p, r = precision(cm, exact=True), recall(cm, exact=True)
        return {
            "accuracy": float(accuracy(cm, exact=True)),
            "precision": float(p),
            "recall": float(r),
            "f_measure": float(f_measure(p, r)),
            "macro_f1": macro_f1(cm),
            "n": cm.total,
            "undefined": undefined_metrics(cm),
            "confusion": cm.to_list(),
        }


def evaluate(gold: Sequence, predicted: Sequence) -> dict:
    return summarize(ConfusionMatrix.from_labels(gold, predicted))


@dataclass
class Report:
    """Metric rows x configuration columns, with deltas against a baseline column."""

    results: dict = field(default_factory=dict)
    baseline: Optional[str] = None
    notes: list = field(default_factory=list)

    @property
    def configurations(self) -> list:
        return list(self.results)

    def deltas(self) -> dict:
        if self.baseline is None or self.baseline not in self.results:
            return {}
        base = self.results[self.baseline]
        return {
            name: {key: res[key] - base[key] for key, _ in METRIC_ROWS}
            for name, res in self.results.items()
        }

    def to_dict(self) -> dict:
        return {
            "configurations": self.configurations,
            "baseline": self.baseline,
            "metrics": self.results,
            "delta": self.deltas(),
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: Mapping) -> "Report":
        order = d.get("configurations") or list(d["metrics"])
        return cls({name: d["metrics"][name] for name in order}, d.get("baseline"), list(d.get("notes", [])))

    def to_text(self) -> str:
        parts = [render_metric_table(self.results, self.deltas() if self.baseline else None, self.baseline)]
        parts.append(render_config_table(self.results))
        if self.notes:
            parts.append("\n".join(f"note: {n}" for n in self.notes) + "\n")
        return "\n".join(parts)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["configuration"] + [label for _, label in METRIC_ROWS])
        for name, res in self.results.items():
            w.writerow([name] + [f"{res[key]:.6f}" for key, _ in METRIC_ROWS])
        return buf.getvalue()

    def write(self, directory) -> dict:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {"json": directory / "report.json", "txt": directory / "report.txt", "csv": directory / "metrics.csv"}
        paths["json"].write_text(self.to_json(), encoding="utf-8")
        paths["txt"].write_text(self.to_text(), encoding="utf-8")
        paths["csv"].write_text(self.to_csv(), encoding="utf-8")
        return paths


def _fmt(v: float) -> str:
    return f"{v:.4f}"


def _grid(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    rows = [list(header)] + [list(r) for r in rows]
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = []
    for k, r in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[i]) if i == 0 else cell.rjust(widths[i]) for i, cell in enumerate(r)).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def render_metric_table(results: Mapping[str, Mapping], deltas: Optional[Mapping] = None,
                        baseline: Optional[str] = None) -> str:
    """Metric rows x configuration columns, optional delta rows underneath."""
    names = list(results)
    rows = [[label] + [_fmt(results[n][key]) for n in names] for key, label in METRIC_ROWS]
    if deltas:
        rows += [[f"Delta {label} vs {baseline}"] + [f"{deltas[n][key]:+.4f}" for n in names]
                 for key, label in METRIC_ROWS]
    return _grid([""] + names, rows)


def render_config_table(results: Mapping[str, Mapping]) -> str:
    """Configuration rows x metric columns."""
    rows = [[name] + [_fmt(res[key]) for key, _ in METRIC_ROWS] for name, res in results.items()]
    return _grid([""] + [label for _, label in METRIC_ROWS], rows)


def report(results: Mapping[str, Mapping], baseline: Optional[str] = None, notes: Sequence[str] = ()) -> Report:
    if not results:
        raise ValueError("report needs at least one configuration")
    return Report(dict(results), baseline, list(notes))


def merge_reports(reports: Sequence[Report], baseline: Optional[str] = None) -> Report:
    merged: dict = {}
    notes: list = []
    for r in reports:
        for name, res in r.results.items():
            key, i = name, 2
            while key in merged:
                key, i = f"{name}#{i}", i + 1
            merged[key] = res
        notes.extend(n for n in r.notes if n not in notes)
    base = baseline or next((r.baseline for r in reports if r.baseline in merged), None)
    return Report(merged, base, notes)
