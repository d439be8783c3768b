"""Confusion-matrix bookkeeping and the three evaluation scores.

fpn is the mean of the positive and negative sentiment F1 scores (neutral
enters only through misclassifications), fsar the F1 of the sarcastic
class alone, wfs the support-weighted mean F1 over the five dialects. The
0/0 precision/recall/F1 convention is 0. Predictions are argmax with ties
broken toward the lowest class index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import DIALECT_CLASSES, SARCASM_CLASSES, SENTIMENT_CLASSES, Dataset
from .model import MultiTaskModel, forward


@dataclass
class ConfusionMatrix:
    classes: tuple[str, ...]
    counts: np.ndarray  # rows = gold, columns = predicted

    @classmethod
    def empty(cls, classes: tuple[str, ...]) -> "ConfusionMatrix":
        n = len(classes)
        return cls(classes=classes, counts=np.zeros((n, n), dtype=np.int64))

    def add(self, gold: int, predicted: int) -> None:
        self.counts[gold, predicted] += 1

    def total(self) -> int:
        return int(self.counts.sum())

    def class_counts(self, index: int) -> tuple[int, int, int]:
        """(tp, fp, fn) for one class."""
        tp = int(self.counts[index, index])
        fp = int(self.counts[:, index].sum()) - tp
        fn = int(self.counts[index, :].sum()) - tp
        return tp, fp, fn


def precision(tp: int, fp: int) -> float:
    return tp / (tp + fp) if tp + fp > 0 else 0.0


def recall(tp: int, fn: int) -> float:
    return tp / (tp + fn) if tp + fn > 0 else 0.0


def f1(tp: int, fp: int, fn: int) -> float:
    p = precision(tp, fp)
    r = recall(tp, fn)
    return 2.0 * p * r / (p + r) if p + r > 0.0 else 0.0


def _class_f1(cm: ConfusionMatrix, label: str) -> float:
    return f1(*cm.class_counts(cm.classes.index(label)))


def fpn(cm: ConfusionMatrix) -> float:
    if cm.classes != SENTIMENT_CLASSES:
        raise ValueError(f"fpn expects classes {SENTIMENT_CLASSES}, got {cm.classes}")
    return (_class_f1(cm, "POS") + _class_f1(cm, "NEG")) / 2.0


def fsar(cm: ConfusionMatrix) -> float:
    if cm.classes != SARCASM_CLASSES:
        raise ValueError(f"fsar expects classes {SARCASM_CLASSES}, got {cm.classes}")
    return _class_f1(cm, "sarcastic")


def wfs(cm: ConfusionMatrix) -> float:
    if cm.classes != DIALECT_CLASSES:
        raise ValueError(f"wfs expects classes {DIALECT_CLASSES}, got {cm.classes}")
    supports = cm.counts.sum(axis=1)
    total = int(supports.sum())
    if total == 0:
        raise ValueError("wfs is undefined on zero total support")
    weighted = sum(
        int(supports[i]) * f1(*cm.class_counts(i)) for i in range(len(cm.classes))
    )
    return weighted / total


@dataclass
class PRF:
    precision: float
    recall: float
    f1: float


@dataclass
class EvalReport:
    fpn: float
    fsar: float | None
    wfs: float | None
    sentiment_cm: ConfusionMatrix
    sarcasm_cm: ConfusionMatrix | None
    dialect_cm: ConfusionMatrix | None
    per_class: dict[str, dict[str, PRF]]

    def to_text(self) -> str:
        lines = [f"fpn = {self.fpn:.6f}"]
        if self.fsar is not None:
            lines.append(f"fsar = {self.fsar:.6f}")
        if self.wfs is not None:
            lines.append(f"wfs = {self.wfs:.6f}")
        for task in ("sentiment", "sarcasm", "dialect"):
            for label, prf in self.per_class.get(task, {}).items():
                lines.append(f"{task}.{label}.precision = {prf.precision:.6f}")
                lines.append(f"{task}.{label}.recall = {prf.recall:.6f}")
                lines.append(f"{task}.{label}.f1 = {prf.f1:.6f}")
        return "\n".join(lines) + "\n"


def _per_class(cm: ConfusionMatrix) -> dict[str, PRF]:
    out = {}
    for i, label in enumerate(cm.classes):
        tp, fp, fn = cm.class_counts(i)
        out[label] = PRF(precision(tp, fp), recall(tp, fn), f1(tp, fp, fn))
    return out


def tally(classes: tuple[str, ...], pairs) -> ConfusionMatrix:
    """Build a confusion matrix from (gold_index, predicted_index) pairs."""
    cm = ConfusionMatrix.empty(classes)
    for gold, predicted in pairs:
        cm.add(gold, predicted)
    return cm


def report_from_matrices(
    sentiment_cm: ConfusionMatrix,
    sarcasm_cm: ConfusionMatrix | None,
    dialect_cm: ConfusionMatrix | None,
) -> EvalReport:
    per_class = {"sentiment": _per_class(sentiment_cm)}
    if sarcasm_cm is not None:
        per_class["sarcasm"] = _per_class(sarcasm_cm)
    if dialect_cm is not None:
        per_class["dialect"] = _per_class(dialect_cm)
    return EvalReport(
        fpn=fpn(sentiment_cm),
        fsar=fsar(sarcasm_cm) if sarcasm_cm is not None else None,
        wfs=wfs(dialect_cm) if dialect_cm is not None else None,
        sentiment_cm=sentiment_cm,
        sarcasm_cm=sarcasm_cm,
        dialect_cm=dialect_cm,
        per_class=per_class,
    )


def predictions(model: MultiTaskModel, provider, data: Dataset) -> list[tuple[int, int | None, int | None]]:
    """Per-example (sentiment, sarcasm, dialect) predicted class indices;
    np.argmax breaks ties toward the lowest index."""
    out = []
    for ex in data.examples:
        fo = forward(model, provider.vector(ex))
        out.append(
            (
                int(np.argmax(fo.sentiment_probs)),
                int(np.argmax(fo.sarcasm_probs)) if fo.sarcasm_probs is not None else None,
                int(np.argmax(fo.dialect_probs)) if fo.dialect_probs is not None else None,
            )
        )
    return out


def evaluate(model: MultiTaskModel, provider, data: Dataset) -> EvalReport:
    preds = predictions(model, provider, data)
    sent_cm = tally(
        SENTIMENT_CLASSES,
        ((ex.sentiment_index(), p[0]) for ex, p in zip(data.examples, preds)),
    )
    sarc_cm = None
    if model.sarcasm_head is not None:
        sarc_cm = tally(
            SARCASM_CLASSES,
            ((ex.sarcasm_index(), p[1]) for ex, p in zip(data.examples, preds)),
        )
    dial_cm = None
    if model.dialect_head is not None:
        dial_cm = tally(
            DIALECT_CLASSES,
            ((ex.dialect_index(), p[2]) for ex, p in zip(data.examples, preds)),
        )
    return report_from_matrices(sent_cm, sarc_cm, dial_cm)
