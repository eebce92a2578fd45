"""Streaming classification loop and evaluation metrics."""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import StreamOrderError
from .labels import CLASSES, NUM_CLASSES, CompoundLabel
from .net_core import NetworkParams, forward
from .sensing import Normalizer, SensorFrame, normalize


@dataclass(frozen=True)
class Decision:
    label: CompoundLabel
    scores: tuple[float, float, float]
    timestamp_ms: int

    def to_line(self) -> str:
        """``timestamp_ms,label,score0,score1,score2`` with 9 significant digits."""
        s = ",".join(f"{v:.9g}" for v in self.scores)
        return f"{self.timestamp_ms},{self.label.name},{s}"


def decide(scores, threshold: float = 0.0) -> CompoundLabel:
    """Argmax over the three scores, or Unknown below ``threshold``.

    ``np.argmax`` returns the first maximum, so ties go to the lowest index.
    """
    if not 0.0 <= threshold < 1.0:
        raise ValueError("threshold must lie in [0, 1)")
    best = int(np.argmax(scores))
    if scores[best] < threshold:
        return CompoundLabel.Unknown
    return CompoundLabel.from_index(best)


def classify_frame(
    params: NetworkParams, norm: Normalizer, frame: SensorFrame, threshold: float = 0.0
) -> Decision:
    scores = forward(params, normalize(norm, frame)).output_out
    return Decision(decide(scores, threshold), tuple(float(s) for s in scores), frame.timestamp_ms)


@dataclass
class StreamSummary:
    frames: int = 0
    label_counts: Counter = field(default_factory=Counter)


def run_stream(
    params: NetworkParams,
    norm: Normalizer,
    source: Iterable[SensorFrame],
    sink: Callable[[Decision], None],
    sample_period_ms: int = 500,
    threshold: float = 0.0,
    realtime: bool = False,
    clock: Callable[[], float] = time.monotonic,
    sleep: Callable[[float], None] = time.sleep,
) -> StreamSummary:
    """Classify every frame in order and hand each decision to ``sink``.

    In the default simulated-time mode frames are processed as fast as
    possible. With ``realtime=True`` the n-th decision is released no earlier
    than ``n * sample_period_ms`` after the first one.
    """
    if sample_period_ms < 1:
        raise ValueError("sample_period_ms must be >= 1")
    summary = StreamSummary()
    last_ts: Optional[int] = None
    start = clock()
    for n, frame in enumerate(source):
        if last_ts is not None and frame.timestamp_ms < last_ts:
            raise StreamOrderError(
                f"frame {n} at {frame.timestamp_ms} ms arrives after {last_ts} ms"
            )
        last_ts = frame.timestamp_ms
        if realtime:
            wait = start + n * sample_period_ms / 1000.0 - clock()
            if wait > 0:
                sleep(wait)
        decision = classify_frame(params, norm, frame, threshold)
        sink(decision)
        summary.frames += 1
        summary.label_counts[decision.label] += 1
    return summary


@dataclass
class ConfusionMatrix:
    """Rows are true compounds, columns predictions; rejects kept aside."""

    counts: np.ndarray = field(default_factory=lambda: np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=int))
    unknown: np.ndarray = field(default_factory=lambda: np.zeros(NUM_CLASSES, dtype=int))

    @property
    def total(self) -> int:
        return int(self.counts.sum() + self.unknown.sum())


def confusion_matrix(
    decisions: Sequence[Decision], truths: Sequence[CompoundLabel]
) -> ConfusionMatrix:
    if len(decisions) != len(truths):
        raise ValueError(f"{len(decisions)} decisions but {len(truths)} truth labels")
    cm = ConfusionMatrix()
    for d, t in zip(decisions, truths):
        if d.label is CompoundLabel.Unknown:
            cm.unknown[t.index] += 1
        else:
            cm.counts[t.index, d.label.index] += 1
    return cm


@dataclass(frozen=True)
class Metrics:
    """Per-class precision and recall; ``None`` marks an undefined 0/0."""

    precision: tuple[Optional[float], ...]
    recall: tuple[Optional[float], ...]
    accuracy: Optional[float]


def precision_metrics(cm: ConfusionMatrix) -> Metrics:
    diag = np.diag(cm.counts)
    col = cm.counts.sum(axis=0)
    row = cm.counts.sum(axis=1)
    precision = tuple(float(diag[c] / col[c]) if col[c] else None for c in range(NUM_CLASSES))
    recall = tuple(float(diag[c] / row[c]) if row[c] else None for c in range(NUM_CLASSES))
    accuracy = float(diag.sum() / cm.total) if cm.total else None
    return Metrics(precision, recall, accuracy)


def format_report(cm: ConfusionMatrix) -> str:
    """Plain-text confusion matrix followed by a per-class metrics table."""
    m = precision_metrics(cm)
    names = [c.name for c in CLASSES]

    def fmt(v: Optional[float]) -> str:
        return "undefined" if v is None else f"{v:.6f}"

    lines = ["confusion matrix (rows = truth, columns = prediction)"]
    lines.append(f"{'':>8} " + " ".join(f"{n:>8}" for n in names) + f" {'Unknown':>8}")
    for c, name in enumerate(names):
        cells = " ".join(f"{int(v):>8d}" for v in cm.counts[c])
        lines.append(f"{name:>8} {cells} {int(cm.unknown[c]):>8d}")
    lines.append("")
    lines.append(f"{'class':>8} {'precision':>10} {'recall':>10}")
    for c, name in enumerate(names):
        lines.append(f"{name:>8} {fmt(m.precision[c]):>10} {fmt(m.recall[c]):>10}")
    lines.append(f"accuracy {fmt(m.accuracy)}")
    return "\n".join(lines)
