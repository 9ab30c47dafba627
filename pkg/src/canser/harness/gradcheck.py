"""End-to-end gradient verification on a miniature network.

Every parameter element is compared against a central finite difference
of the total loss. The stop-gradient weights are held at their base-point
values while perturbing, so the numeric derivative is of the same function
the backward pass differentiates.
"""

from dataclasses import dataclass, replace

import numpy as np

from ..config import ModelConfig
from ..features import TokenSequence, build_segment_tensor
from ..model import CrossAttentionNetwork, collate

STEP = 1e-6
REL_FLOOR = 1e-6
TOLERANCE = 1e-3

MINI_CONFIG = ModelConfig(
    classes=("c0", "c1", "c2"),
    embed_dim=3,
    hidden_size=4,
    heads=2,
    dropout=0.0,
    alpha=0.1,
    n_mfcc=3,
    n_mels=8,
)
MINI_VOCAB = 6


def relative_error(analytic, numeric):
    """``|a - n| / max(|a|, |n|, REL_FLOOR)`` elementwise."""
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), REL_FLOOR)
    return np.abs(analytic - numeric) / scale


def probe_batch(config, vocab_size, seed=0, lengths=(3, 2), max_frames=4):
    """Random labelled batch with ``len(lengths)`` utterances."""
    rng = np.random.default_rng(seed)
    tokens, segments = [], []
    for n in lengths:
        tokens.append(TokenSequence(rng.integers(0, vocab_size, n), vocab_size))
        segments.append(build_segment_tensor(
            [rng.normal(size=(int(rng.integers(1, max_frames + 1)), config.n_mfcc))
             for _ in range(n)]
        ))
    labels = rng.integers(0, config.n_classes, len(lengths))
    return collate(tokens, segments, labels)


@dataclass
class GradcheckReport:
    worst: dict  # parameter name -> worst relative error
    worst_abs: dict
    n_elements: int
    sg_text: float
    sg_audio: float

    @property
    def worst_relative_error(self):
        return max(self.worst.values())

    @property
    def passed(self):
        return self.worst_relative_error < TOLERANCE and max(self.sg_text, self.sg_audio) < 1e-10

    def records(self):
        out = [{"kind": "param", "name": n, "rel_error": self.worst[n],
                "abs_error": self.worst_abs[n]} for n in sorted(self.worst)]
        out.append({"kind": "summary", "elements": self.n_elements,
                    "worst_rel_error": self.worst_relative_error,
                    "sg_diff_text": self.sg_text, "sg_diff_audio": self.sg_audio,
                    "passed": self.passed})
        return out


def _query_grads(model, batch, **kwargs):
    model.zero_grad()
    total, _ = model.loss(batch, **kwargs)
    total.backward()
    q = model.queries
    return q.text.grad.copy(), q.audio.grad.copy()


def stop_gradient_probe(model, batch):
    """Max abs difference of query gradients with the crossed weights live
    versus replaced by constants. Zero when the stop-gradient is in effect."""
    live_t, live_a = _query_grads(model, batch)
    frozen_t, frozen_a = _query_grads(model, batch, freeze_cross=True)
    return float(np.abs(live_t - frozen_t).max()), float(np.abs(live_a - frozen_a).max())


def finite_difference(model, batch, step=STEP):
    """Numeric gradient of the total loss for every parameter."""
    bundle, _ = model.forward(batch)
    override = (bundle.alpha_text.data.copy(), bundle.alpha_audio.data.copy())

    def loss():
        total, _ = model.loss(batch, cross_override=override)
        return float(total.data)

    out = {}
    for name, p in model.named_parameters():
        grad = np.zeros_like(p.data)
        flat, gflat = p.data.reshape(-1), grad.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + step
            up = loss()
            flat[i] = keep - step
            down = loss()
            flat[i] = keep
            gflat[i] = (up - down) / (2 * step)
        out[name] = grad
    return out


def gradcheck(config=None, seed=0, vocab_size=MINI_VOCAB):
    config = config or MINI_CONFIG
    config = replace(config, dropout=0.0)
    model = CrossAttentionNetwork(config, vocab_size, seed=seed)
    batch = probe_batch(config, vocab_size, seed)
    model.zero_grad()
    total, _ = model.loss(batch)
    total.backward()
    analytic = {n: p.grad.copy() for n, p in model.named_parameters()}
    numeric = finite_difference(model, batch)
    worst, worst_abs, count = {}, {}, 0
    for name, a in analytic.items():
        worst[name] = float(relative_error(a, numeric[name]).max())
        worst_abs[name] = float(np.abs(a - numeric[name]).max())
        count += a.size
    sg_text, sg_audio = stop_gradient_probe(model, batch)
    return GradcheckReport(worst, worst_abs, count, sg_text, sg_audio)
