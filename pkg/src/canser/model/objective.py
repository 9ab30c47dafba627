"""Prediction heads, the composite loss, score fusion and WA/UA metrics."""

from dataclasses import dataclass

import numpy as np

from ..autodiff import LOG_FLOOR, Tensor, add, concat, cross_entropy, matmul, mean, scale, softmax
from ..errors import DimensionError, InvalidInputError


def _linear_init(rng, fan_in, n_out):
    bound = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, (fan_in, n_out)), True), Tensor(np.zeros(n_out), True)


class PredictionHeads:
    """Fused head over all contexts plus one head per own-modality context."""

    def __init__(self, context_dim, n_classes, rng, n_fused_contexts=4):
        self.n_classes = n_classes
        self.w, self.b = _linear_init(rng, n_fused_contexts * context_dim, n_classes)
        self.w_text, self.b_text = _linear_init(rng, context_dim, n_classes)
        self.w_audio, self.b_audio = _linear_init(rng, context_dim, n_classes)

    def named_parameters(self):
        return [
            ("w", self.w), ("b", self.b),
            ("w_text", self.w_text), ("b_text", self.b_text),
            ("w_audio", self.w_audio), ("b_audio", self.b_audio),
        ]


@dataclass(eq=False)
class Predictions:
    """Class distributions ``(B, C)``: fused, text-only, audio-only."""

    fused: Tensor
    text: Tensor
    audio: Tensor


def _affine(x, w, b):
    if x.shape[-1] != w.shape[0]:
        raise DimensionError(f"context width {x.shape[-1]} vs head input {w.shape[0]}")
    return add(matmul(x, w), b)


def predict(bundle, heads):
    parts = [c for c in (bundle.c_tt, bundle.c_ta, bundle.c_aa, bundle.c_at) if c is not None]
    fused = softmax(_affine(concat(parts, axis=-1), heads.w, heads.b))
    text = softmax(_affine(bundle.c_tt, heads.w_text, heads.b_text))
    audio = softmax(_affine(bundle.c_aa, heads.w_audio, heads.b_audio))
    return Predictions(fused, text, audio)


@dataclass(frozen=True)
class LossReport:
    total: float
    main: float
    align: float
    alpha: float


def compute_loss(predictions, labels, alpha):
    """Batch-mean ``CE(fused) + alpha * (CE(text) + CE(audio))``.

    Returns the differentiable total and a float :class:`LossReport`.
    """
    if alpha < 0:
        raise InvalidInputError(f"alpha must be non-negative, got {alpha}")
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    main = mean(cross_entropy(predictions.fused, labels))
    align = mean(add(cross_entropy(predictions.text, labels),
                     cross_entropy(predictions.audio, labels)))
    total = add(main, scale(align, alpha))
    report = LossReport(total.item(), main.item(), align.item(), float(alpha))
    return total, report


def final_prediction(fused, text, audio, alpha):
    """Fuse ``fused * text**alpha * audio**alpha`` and pick the argmax.

    Accepts ``(C,)`` or ``(B, C)`` arrays. Probabilities are floored at
    ``LOG_FLOOR`` first. Returns ``(classes, scores, normalized)``; ties go to
    the lowest class index.
    """
    fused, text, audio = (
        np.maximum(np.asarray(getattr(p, "data", p), dtype=np.float64), LOG_FLOOR)
        for p in (fused, text, audio)
    )
    scores = fused * text**alpha * audio**alpha
    classes = np.argmax(scores, axis=-1)
    normalized = scores / scores.sum(axis=-1, keepdims=True)
    return classes, scores, normalized


@dataclass(frozen=True, eq=False)
class MetricReport:
    wa: float
    ua: float
    confusion: np.ndarray

    @classmethod
    def from_confusion(cls, confusion):
        """WA = trace / total; UA = mean recall over classes with support."""
        confusion = np.asarray(confusion, dtype=np.int64)
        total = int(confusion.sum())
        if total == 0:
            raise InvalidInputError("no predictions to score")
        support = confusion.sum(axis=1)
        present = support > 0
        recalls = np.diag(confusion)[present] / support[present]
        return cls(float(np.trace(confusion)) / total, float(recalls.mean()), confusion)

    @property
    def support(self):
        return self.confusion.sum(axis=1)

    def merge(self, other):
        return MetricReport.from_confusion(self.confusion + other.confusion)

    def __eq__(self, other):
        return (
            isinstance(other, MetricReport)
            and self.wa == other.wa
            and self.ua == other.ua
            and np.array_equal(self.confusion, other.confusion)
        )

    def to_record(self):
        return {"wa": self.wa, "ua": self.ua, "confusion": self.confusion.tolist()}


def metrics(predicted, truth, n_classes=None):
    predicted = np.asarray(predicted, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if predicted.shape != truth.shape or predicted.ndim != 1:
        raise InvalidInputError("predicted and true labels must be equal-length vectors")
    if truth.size == 0:
        raise InvalidInputError("metrics need at least one prediction")
    if n_classes is None:
        n_classes = int(max(predicted.max(), truth.max())) + 1
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (truth, predicted), 1)
    return MetricReport.from_confusion(confusion)
