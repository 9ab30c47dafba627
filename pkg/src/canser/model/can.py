"""The full cross attention network over collated batches."""

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError
from .attention import GlobalQueries, cross_aggregate
from .encoders import AudioEncoder, TextEncoder
from .objective import PredictionHeads, compute_loss, final_prediction, predict


@dataclass(eq=False)
class Batch:
    """Padded batch of aligned utterances.

    Segments are stored flat in utterance-major order, so ``seg_features``
    only holds real segments; ``seg_positions`` maps each to ``b * L_max + l``.
    """

    token_ids: np.ndarray
    lengths: np.ndarray
    seg_features: np.ndarray
    seg_frames: np.ndarray
    seg_positions: np.ndarray
    labels: np.ndarray = None

    def __len__(self):
        return self.lengths.size


def collate(token_seqs, segment_sets, labels=None):
    """Pad token sequences and flatten segment stacks into one :class:`Batch`."""
    if not token_seqs or len(token_seqs) != len(segment_sets):
        raise InvalidInputError("need matching, non-empty token and segment lists")
    lengths = np.array([len(t) for t in token_seqs], dtype=np.int64)
    for t, s in zip(token_seqs, segment_sets):
        if len(t) != s.n_segments:
            raise InvalidInputError(
                f"utterance has {len(t)} words but {s.n_segments} audio segments"
            )
    steps = int(lengths.max())
    ids = np.zeros((lengths.size, steps), dtype=np.int64)
    for b, t in enumerate(token_seqs):
        ids[b, : len(t)] = t.ids
    max_frames = max(s.max_frames for s in segment_sets)
    dims = {s.n_coefficients for s in segment_sets}
    if len(dims) != 1:
        raise InvalidInputError(f"utterances disagree on coefficient count: {sorted(dims)}")
    feats = np.zeros((int(lengths.sum()), max_frames, dims.pop()))
    frames = np.zeros(int(lengths.sum()), dtype=np.int64)
    positions = np.zeros(int(lengths.sum()), dtype=np.int64)
    m = 0
    for b, s in enumerate(segment_sets):
        n = s.n_segments
        feats[m : m + n, : s.max_frames] = s.features
        frames[m : m + n] = s.valid_frames
        positions[m : m + n] = b * steps + np.arange(n)
        m += n
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64)
    return Batch(ids, lengths, feats, frames, positions, labels)


class CrossAttentionNetwork:
    """Text/audio encoders, global queries and the three prediction heads."""

    def __init__(self, config, vocab_size, n_features=None, seed=0):
        self.config = config
        rng = np.random.default_rng(seed)
        n_features = n_features or config.n_mfcc
        self.text_encoder = TextEncoder(vocab_size, config.embed_dim, config.hidden_size, rng)
        self.audio_encoder = AudioEncoder(n_features, config.hidden_size, rng)
        self.queries = GlobalQueries(config.heads, config.head_dim, rng)
        n_fused = 4 if config.use_cross_attention else 2
        self.heads = PredictionHeads(config.context_dim, config.n_classes, rng, n_fused)

    def named_parameters(self):
        out = []
        for prefix, part in (
            ("text", self.text_encoder),
            ("audio", self.audio_encoder),
            ("query", self.queries),
            ("head", self.heads),
        ):
            out.extend((f"{prefix}.{name}", t) for name, t in part.named_parameters())
        return out

    def parameters(self):
        return dict(self.named_parameters())

    def zero_grad(self):
        for _, p in self.named_parameters():
            p.zero_grad()

    def forward(self, batch, training=False, rng=None, freeze_cross=False, cross_override=None):
        """Returns ``(ContextBundle, Predictions)``."""
        cfg = self.config
        p = cfg.dropout if training else 0.0
        text = self.text_encoder(batch.token_ids, batch.lengths, training, p, rng)
        audio = self.audio_encoder(
            batch.seg_features, batch.seg_frames, batch.seg_positions, batch.lengths,
            training, p, rng,
        )
        bundle = cross_aggregate(
            text, audio, self.queries,
            stop_grad=cfg.stop_gradient_active,
            cross=cfg.use_cross_attention,
            freeze_cross=freeze_cross,
            cross_override=cross_override,
        )
        return bundle, predict(bundle, self.heads)

    def loss(self, batch, training=False, rng=None, freeze_cross=False, cross_override=None):
        """Differentiable total loss and its :class:`LossReport`."""
        if batch.labels is None:
            raise InvalidInputError("batch has no labels")
        _, preds = self.forward(batch, training, rng, freeze_cross, cross_override)
        return compute_loss(preds, batch.labels, self.config.effective_alpha)

    def classify(self, batch):
        """Evaluation-mode fused prediction: ``(classes, normalized scores, bundle)``."""
        bundle, preds = self.forward(batch, training=False)
        classes, _, normalized = final_prediction(
            preds.fused, preds.text, preds.audio, self.config.effective_alpha
        )
        return classes, normalized, bundle
