"""Game outcome metrics, significance testing and report assembly.

Consistency counts any answer flip; Drop counts only flips away from a
correct answer. Accuracy summaries come in two flavors over repeated trials:
average (mean per-trial accuracy) and maximal (accuracy of the strongest
single trial from the adversary's point of view, i.e. the lowest).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import betainc

from .game import RoundRecord


@dataclass(frozen=True)
class GameMetrics:
    rounds: int
    valid_rounds: int
    consistency: float   # changed / rounds
    drop: float          # correct answers flipped / rounds
    invalid_rate: float
    accuracy_before: float
    accuracy_after: float  # unchanged-invalid rounds keep the old answer


def consistency_and_drop(records: Sequence[RoundRecord]) -> GameMetrics:
    n = len(records)
    if n == 0:
        raise ValueError("no round records")
    changed = sum(r.changed for r in records)
    dropped = sum(r.dropped for r in records)
    invalid = sum(not r.valid for r in records)
    correct_before = sum(r.old_answer == r.gt_answer for r in records)
    correct_after = 0
    for r in records:
        final = r.new_answer if r.valid else r.old_answer
        correct_after += final == r.gt_answer
    return GameMetrics(
        rounds=n,
        valid_rounds=n - invalid,
        consistency=changed / n,
        drop=dropped / n,
        invalid_rate=invalid / n,
        accuracy_before=correct_before / n,
        accuracy_after=correct_after / n,
    )


def relative_drop(before: float, after: float) -> float:
    """Relative accuracy fall 100*(before - after)/before as a percentage,
    truncated (not rounded) to one decimal to match tabulated convention.

    Positive when accuracy fell. Undefined (nan) for a zero baseline.
    """
    if before == 0:
        return float("nan")
    value = 100.0 * (before - after) / before
    return math.trunc(value * 10.0) / 10.0


# ---------------------------------------------------------------------------
# One-sample t-test (upper tail): is the mean of the sample > 0?
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TTestResult:
    mean: float
    std: float           # sample standard deviation (ddof=1)
    t_statistic: float
    p_value: float       # P(T >= t) under H0: mean 0
    n: int


def one_sample_t_test(sample: Sequence[float]) -> TTestResult:
    """t = mean / (s / sqrt(n)); upper-tail p from the regularized incomplete
    beta function. A zero-variance sample short-circuits: p = 0 when its mean
    is positive (every draw agrees), else p = 1.
    """
    x = np.asarray(sample, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("t-test needs at least two observations")
    mean = float(x.mean())
    s = float(x.std(ddof=1))
    if s == 0.0:
        return TTestResult(mean, 0.0, math.inf if mean > 0 else -math.inf if mean < 0 else 0.0,
                           0.0 if mean > 0 else 1.0, n)
    t = mean / (s / math.sqrt(n))
    df = n - 1
    # P(T >= t) = 0.5 * I_{df/(df+t^2)}(df/2, 1/2) for t >= 0, symmetric below
    tail = 0.5 * float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    p = tail if t >= 0 else 1.0 - tail
    return TTestResult(mean, s, t, p, n)


# ---------------------------------------------------------------------------
# Multi-trial aggregation and reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialAggregate:
    trials: int
    average_accuracy_before: float
    average_accuracy_after: float
    maximal_accuracy_after: float   # most damaging trial: minimum accuracy
    average_consistency: float
    average_drop: float
    relative_drop_average: float    # percent, one decimal
    relative_drop_maximal: float
    p_value_drop: float             # H0: per-trial drop is zero


def aggregate(trial_metrics: Sequence[GameMetrics]) -> TrialAggregate:
    if not trial_metrics:
        raise ValueError("no trials")
    before = [m.accuracy_before for m in trial_metrics]
    after = [m.accuracy_after for m in trial_metrics]
    drops = [m.drop for m in trial_metrics]
    avg_before = float(np.mean(before))
    avg_after = float(np.mean(after))
    max_after = float(np.min(after))
    if len(trial_metrics) >= 2:
        p = one_sample_t_test(drops).p_value
    else:
        p = 0.0 if drops[0] > 0 else 1.0
    return TrialAggregate(
        trials=len(trial_metrics),
        average_accuracy_before=avg_before,
        average_accuracy_after=avg_after,
        maximal_accuracy_after=max_after,
        average_consistency=float(np.mean([m.consistency for m in trial_metrics])),
        average_drop=float(np.mean(drops)),
        relative_drop_average=relative_drop(avg_before, avg_after),
        relative_drop_maximal=relative_drop(avg_before, max_after),
        p_value_drop=p,
    )


def histogram(values: Sequence[float], bins: int = 10) -> tuple[list[int], list[float]]:
    """Counts over ``bins`` equal-width cells partitioning [0, 1]; the final
    cell is closed on the right so 1.0 is counted."""
    if bins < 1:
        raise ValueError("need at least one bin")
    edges = [i / bins for i in range(bins + 1)]
    counts = [0] * bins
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"value {v} outside [0, 1]")
        idx = min(int(v * bins), bins - 1)
        counts[idx] += 1
    return counts, edges


def metrics_to_row(name: str, m: GameMetrics) -> dict:
    row = {"name": name}
    row.update(asdict(m))
    return row


def write_report_csv(rows: Sequence[dict], path: str | Path | None = None) -> str:
    """Serialize metric rows to CSV; returns the text, optionally writing it."""
    if not rows:
        raise ValueError("no rows")
    fields: list[str] = []
    for row in rows:
        for key in row:
            if key not in fields:
                fields.append(key)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def write_report_json(payload: dict, path: str | Path | None = None) -> str:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path is not None:
        Path(path).write_text(text)
    return text
