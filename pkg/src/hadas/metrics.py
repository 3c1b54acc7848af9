"""Quality metrics and run reporting: ROUGE-L, learning curves, tables.

Metric values are kept on the [0, 1] scale everywhere inside the engine
and multiplied by 100 only when written by the report layer.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .loop import RunLog

_PUNCT = re.compile(r"([^\w\s])")

#: per-round series aggregated from run logs
CURVE_METRICS = ("val_metric", "test_sf", "test_disc", "test_cv", "test_rouge_l", "test_mean")


def tokenize(text: str) -> list[str]:
    """Lowercase, split punctuation into standalone tokens, split on whitespace."""
    return _PUNCT.sub(r" \1 ", text.lower()).split()


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Longest common subsequence length via the classic two-row DP."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                curr.append(prev[j - 1] + 1)
            else:
                curr.append(max(prev[j], curr[j - 1]))
        prev = curr
    return prev[-1]


def rouge_l(
    candidate: str | Sequence[str], reference: str | Sequence[str], beta: float = 1.0
) -> float:
    """LCS-based F-measure between candidate and reference token sequences.

    Strings are tokenized first; ``beta`` weights recall against precision
    (the default harmonic mean both ways).
    """
    cand = tokenize(candidate) if isinstance(candidate, str) else list(candidate)
    ref = tokenize(reference) if isinstance(reference, str) else list(reference)
    lcs = lcs_length(cand, ref)
    precision = lcs / len(cand) if cand else 0.0
    recall = lcs / len(ref) if ref else 0.0
    if precision + recall == 0.0:
        return 0.0
    b2 = beta * beta
    return (1.0 + b2) * precision * recall / (recall + b2 * precision)


def aulc(values: Sequence[float], upto: int | None = None) -> float:
    """Area under a per-round series by the trapezoid rule over round index."""
    series = list(values if upto is None else values[:upto])
    if len(series) < 2:
        return 0.0
    return float(sum((a + b) / 2.0 for a, b in zip(series, series[1:])))


def _metric_series(log: RunLog, metric: str) -> list[float]:
    if metric == "val_metric":
        return [rec.val_metric for rec in log.records]
    if metric == "test_mean":
        return [
            (rec.test_metrics["sf"] + rec.test_metrics["disc"] + rec.test_metrics["cv"]) / 3.0
            for rec in log.records
        ]
    if metric.startswith("test_"):
        return [rec.test_metrics[metric[len("test_"):]] for rec in log.records]
    raise ValueError(f"unknown curve metric {metric!r}")


def mean_halu_series(log: RunLog) -> list[float]:
    """Per-round mean of the three test hallucination scores."""
    return _metric_series(log, "test_mean")


@dataclass(frozen=True)
class CurveStats:
    mean: tuple[float, ...]
    stddev: tuple[float, ...]
    aulc: float


@dataclass(frozen=True)
class CurveSummary:
    """Cross-seed aggregation of a strategy's runs."""

    budget: int
    n_runs: int
    metrics: dict[str, CurveStats]

    def rounds_to_threshold(self, metric: str, threshold: float) -> int | None:
        """First round where the seed-mean meets the threshold; None if never."""
        for i, v in enumerate(self.metrics[metric].mean):
            if v >= threshold:
                return i
        return None


def aggregate_runs(logs: Sequence[RunLog]) -> CurveSummary:
    """Per-round mean/stddev per metric across runs, plus per-metric AULC.

    All logs must share the same budget (and therefore metric set).
    """
    if not logs:
        raise ValueError("no run logs to aggregate")
    lengths = {len(log.records) for log in logs}
    if len(lengths) != 1:
        raise ValueError(f"mismatched run lengths {sorted(lengths)}")
    budgets = {log.budget for log in logs}
    if len(budgets) != 1:
        raise ValueError(f"mismatched budgets {sorted(budgets)}")
    metrics: dict[str, CurveStats] = {}
    for metric in CURVE_METRICS:
        rows = np.asarray([_metric_series(log, metric) for log in logs])
        mean = rows.mean(axis=0)
        metrics[metric] = CurveStats(
            mean=tuple(float(x) for x in mean),
            stddev=tuple(float(x) for x in rows.std(axis=0)),
            aulc=aulc(mean),
        )
    return CurveSummary(budget=budgets.pop(), n_runs=len(logs), metrics=metrics)


def checkpoint_round(fraction: float, budget: int) -> int:
    """Number of annotations at the reporting checkpoint."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"checkpoint fraction must be in (0, 1], got {fraction!r}")
    return math.ceil(fraction * budget)


def report(
    summaries: Mapping[str, CurveSummary],
    checkpoint_fraction: float,
    output_dir: str | Path,
) -> dict:
    """Write the comparison table, per-metric curve CSVs and summary JSON.

    The table reports every strategy's metrics at the checkpoint round
    (``ceil(fraction * budget)`` annotations) with best/second-best marks;
    values are scaled to 0-100 here and only here.
    """
    if not summaries:
        raise ValueError("no strategies to report")
    budgets = {s.budget for s in summaries.values()}
    if len(budgets) != 1:
        raise ValueError(f"strategies have mismatched budgets {sorted(budgets)}")
    budget = budgets.pop()
    n_annotations = checkpoint_round(checkpoint_fraction, budget)
    index = n_annotations - 1

    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)

    for name, summary in summaries.items():
        for metric, stats in summary.metrics.items():
            path = out / f"curves_{name}_{metric}.csv"
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write("round,mean,stddev\n")
                for i, (m, s) in enumerate(zip(stats.mean, stats.stddev)):
                    fh.write(f"{i},{100.0 * m!r},{100.0 * s!r}\n")

    table: dict[str, dict[str, float]] = {
        name: {
            metric: 100.0 * s.metrics[metric].mean[index] for metric in CURVE_METRICS
        }
        for name, s in summaries.items()
    }
    marks: dict[str, dict[str, str]] = {name: {} for name in summaries}
    for metric in CURVE_METRICS:
        ranked = sorted(table, key=lambda n: -table[n][metric])
        marks[ranked[0]][metric] = "best"
        if len(ranked) > 1:
            marks[ranked[1]][metric] = "second"

    table_path = out / f"table_{checkpoint_fraction:g}.csv"
    with open(table_path, "w", encoding="utf-8", newline="\n") as fh:
        header = ["strategy"]
        for metric in CURVE_METRICS:
            header += [metric, f"{metric}_mark"]
        fh.write(",".join(header) + "\n")
        for name in summaries:
            row = [name]
            for metric in CURVE_METRICS:
                row += [repr(table[name][metric]), marks[name].get(metric, "")]
            fh.write(",".join(row) + "\n")

    payload = {
        "budget": budget,
        "checkpoint_fraction": checkpoint_fraction,
        "checkpoint_round": n_annotations,
        "strategies": {
            name: {
                "n_runs": s.n_runs,
                "at_checkpoint": table[name],
                "marks": marks[name],
                "aulc": {m: 100.0 * s.metrics[m].aulc for m in CURVE_METRICS},
            }
            for name, s in summaries.items()
        },
    }
    with open(out / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return payload
