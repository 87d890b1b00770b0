"""Segment-level F1 scoring, multi-seed summaries, and training-entropy
tracking with CSV export.

Segments are labeled spans.  When the label inventory carries BIO prefixes
("B-x"/"I-x") the standard CoNLL convention applies; otherwise a segment is a
maximal run of identical non-null labels.  The convention in force is recorded
on the report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

NULL_LABELS = {"O", "-", ""}


def _is_bio(labels_seen) -> bool:
    return any(l.startswith(("B-", "I-")) for l in labels_seen)


def _segments_plain(labels, sent_idx):
    segs = set()
    i, T = 0, len(labels)
    while i < T:
        lab = labels[i]
        if lab in NULL_LABELS:
            i += 1
            continue
        j = i
        while j < T and labels[j] == lab:
            j += 1
        segs.add((sent_idx, i, j, lab))
        i = j
    return segs


def _segments_bio(labels, sent_idx):
    segs = set()
    start, kind = None, None

    def close(end):
        nonlocal start, kind
        if start is not None:
            segs.add((sent_idx, start, end, kind))
        start, kind = None, None

    for i, lab in enumerate(labels):
        if lab in NULL_LABELS:
            close(i)
            continue
        prefix, _, body = lab.partition("-")
        if prefix == "B" or start is None or body != kind:
            close(i)
            start, kind = i, body
    close(len(labels))
    return segs


def extract_segments(sentences, convention: str):
    segs = set()
    for si, labels in enumerate(sentences):
        if convention == "bio":
            segs |= _segments_bio(list(labels), si)
        else:
            segs |= _segments_plain(list(labels), si)
    return segs


@dataclass
class F1Report:
    precision: float           # percent
    recall: float
    f1: float
    gold_count: int
    pred_count: int
    correct_count: int
    convention: str
    per_label: dict = field(default_factory=dict)

    def summary(self) -> str:
        return (f"segments ({self.convention} convention): gold={self.gold_count} "
                f"predicted={self.pred_count} correct={self.correct_count}\n"
                f"precision={self.precision:.2f} recall={self.recall:.2f} "
                f"F1={self.f1:.2f}")


def _prf(correct, pred, gold):
    p = 100.0 * correct / pred if pred else 0.0
    r = 100.0 * correct / gold if gold else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


def score_f1(gold, predicted) -> F1Report:
    """gold and predicted are aligned lists of label-string sequences."""
    if len(gold) != len(predicted):
        raise ValueError(f"{len(gold)} gold vs {len(predicted)} predicted sentences")
    for si, (g, p) in enumerate(zip(gold, predicted)):
        if len(g) != len(p):
            raise ValueError(f"sentence {si}: {len(g)} gold vs {len(p)} predicted labels")

    seen = {l for sent in gold for l in sent} | {l for sent in predicted for l in sent}
    convention = "bio" if _is_bio(seen) else "plain"
    gold_segs = extract_segments(gold, convention)
    pred_segs = extract_segments(predicted, convention)
    correct = gold_segs & pred_segs

    p, r, f = _prf(len(correct), len(pred_segs), len(gold_segs))
    per_label = {}
    for lab in sorted({s[3] for s in gold_segs} | {s[3] for s in pred_segs}):
        g = sum(1 for s in gold_segs if s[3] == lab)
        pr = sum(1 for s in pred_segs if s[3] == lab)
        c = sum(1 for s in correct if s[3] == lab)
        lp, lr, lf = _prf(c, pr, g)
        per_label[lab] = {"gold": g, "pred": pr, "correct": c,
                          "precision": lp, "recall": lr, "f1": lf}
    return F1Report(p, r, f, len(gold_segs), len(pred_segs), len(correct),
                    convention, per_label)


def accuracy(gold, predicted) -> float:
    """Per-word accuracy in percent."""
    total = correct = 0
    for g, p in zip(gold, predicted):
        total += len(g)
        correct += sum(1 for a, b in zip(g, p) if a == b)
    return 100.0 * correct / total if total else 0.0


@dataclass
class RunSummary:
    values: list
    max: float
    min: float
    mean: float


def summarize_runs(f1s) -> RunSummary:
    vals = [float(v) for v in f1s]
    if not vals:
        raise ValueError("summarize_runs: empty list")
    return RunSummary(vals, max(vals), min(vals), sum(vals) / len(vals))


class EntropyTracker:
    """Per-epoch mean per-word NLL (nats), with its log10, exportable as CSV."""

    def __init__(self):
        self.rows: list[tuple[int, float]] = []

    def append(self, epoch: int, per_word_nll: float):
        self.rows.append((int(epoch), float(per_word_nll)))

    def series(self):
        return [(e, v, math.log10(v) if v > 0 else float("-inf"))
                for e, v in self.rows]

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("epoch,nll,log10_nll\n")
            for e, v, lg in self.series():
                fh.write(f"{e},{v:.17g},{lg:.17g}\n")

    @classmethod
    def from_csv(cls, path):
        tracker = cls()
        with open(path, encoding="utf-8") as fh:
            next(fh)  # header
            for line in fh:
                if line.strip():
                    e, v, _ = line.split(",")
                    tracker.append(int(e), float(v))
        return tracker


def write_f1_csv(path, rows, header=("run", "f1")):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" if isinstance(v, float) else str(v)
                              for v in row) + "\n")
