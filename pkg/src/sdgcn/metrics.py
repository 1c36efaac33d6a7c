"""Link-sign prediction metrics: AUC, the F1 family and multi-seed aggregation."""
from __future__ import annotations

import json
import statistics
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

METRICS = ("auc", "macro_f1", "micro_f1", "binary_f1")


class UndefinedMetricError(ValueError):
    pass


def auc(scores, labels) -> float:
    """Probability that a random positive outranks a random negative (ties count 1/2)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both classes")
    ranks = rankdata(scores)  # average ranks for ties
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def confusion(predictions, labels) -> dict:
    p = np.asarray(predictions).astype(bool)
    t = np.asarray(labels).astype(bool)
    if p.shape != t.shape:
        raise ValueError("predictions and labels differ in length")
    return {"tp": int(np.sum(p & t)), "fp": int(np.sum(p & ~t)),
            "tn": int(np.sum(~p & ~t)), "fn": int(np.sum(~p & t))}


def _f1(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def f1_from_counts(tp: int, fp: int, tn: int, fn: int) -> dict:
    pos = _f1(tp, fp, fn)
    neg = _f1(tn, fn, fp)
    # pooled counts over both classes: micro precision = micro recall = accuracy
    total = tp + fp + tn + fn
    micro = (tp + tn) / total if total else 0.0
    return {"macro": (pos + neg) / 2.0, "micro": micro, "binary": pos}


def f1_suite(predictions, labels) -> dict:
    """Binary F1 of the positive class, macro F1 over both classes and micro F1."""
    if len(labels) == 0:
        raise ValueError("empty input")
    return f1_from_counts(**confusion(predictions, labels))


@dataclass
class EvalReport:
    auc: float
    macro_f1: float
    micro_f1: float
    binary_f1: float
    tp: int
    fp: int
    tn: int
    fn: int
    n_edges: int
    seed: int | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def csv_row(self, dataset: str) -> list:
        return [dataset, self.seed, repr(self.auc), repr(self.macro_f1),
                repr(self.micro_f1), repr(self.binary_f1)]


CSV_HEADER = ["dataset", "seed", "auc", "macro_f1", "micro_f1", "binary_f1"]


def evaluate(pos_prob, labels, seed: int | None = None) -> EvalReport:
    """Metrics from positive-class probabilities; predictions use the 0.5 argmax threshold."""
    pos_prob = np.asarray(pos_prob, dtype=np.float64)
    labels = np.asarray(labels).astype(np.int64)
    counts = confusion(pos_prob > 0.5, labels)
    f1 = f1_from_counts(**counts)
    return EvalReport(auc(pos_prob, labels), f1["macro"], f1["micro"], f1["binary"],
                      n_edges=len(labels), seed=seed, **counts)


def aggregate_runs(reports) -> dict:
    """Mean and sample standard deviation (n - 1) of every metric."""
    reports = list(reports)
    if len(reports) < 2:
        raise ValueError("aggregation needs at least two runs")
    out = {}
    for name in METRICS:
        vals = [float(getattr(r, name)) for r in reports]
        # statistics works in exact rationals: identical runs give std exactly 0
        out[name] = {"mean": statistics.fmean(vals), "std": statistics.stdev(vals)}
    return out


def format_table(dataset: str, agg: dict) -> str:
    """Per-dataset block: one metric per row as ``mean(std)``."""
    names = {"auc": "AUC", "macro_f1": "Macro-F1", "micro_f1": "Micro-F1", "binary_f1": "Binary-F1"}
    lines = [f"{dataset}"]
    for key, label in names.items():
        lines.append(f"  {label:<10} {agg[key]['mean']:.3f}({agg[key]['std']:.4f})")
    return "\n".join(lines) + "\n"
