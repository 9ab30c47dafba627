"""Text and audio encoders producing step-aligned hidden sequences."""

from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor, dropout, masked_mean_pool, mul, scatter_rows, take
from ..errors import DimensionError, InvalidInputError
from .lstm import BLSTM


@dataclass(eq=False)
class EncoderOutputs:
    """``hidden`` is ``(B, L, 2*D_h)``; rows where ``mask`` is false are zero."""

    hidden: Tensor
    mask: np.ndarray

    @property
    def lengths(self):
        return self.mask.sum(axis=1)


def sequence_mask(lengths, steps):
    return np.arange(steps)[None, :] < np.asarray(lengths)[:, None]


def _apply_mask(hidden, mask):
    return mul(hidden, Tensor(mask[:, :, None].astype(np.float64)))


def embed_text(token_ids, table):
    """Look up embedding rows; differentiable into ``table``."""
    ids = getattr(token_ids, "ids", token_ids)
    return take(table, ids)


class TextEncoder:
    def __init__(self, vocab_size, embed_dim, hidden_size, rng):
        self.embedding = Tensor(rng.normal(0.0, 0.1, (vocab_size, embed_dim)), True)
        self.blstm = BLSTM(embed_dim, hidden_size, rng)

    def __call__(self, token_ids, lengths, training=False, p=0.0, rng=None):
        """``token_ids`` is ``(B, L)``; padded positions may hold any valid id."""
        token_ids = np.asarray(token_ids, dtype=np.int64)
        lengths = np.asarray(lengths, dtype=np.int64)
        embedded = embed_text(token_ids, self.embedding)
        hidden = self.blstm(embedded, lengths)
        hidden = dropout(hidden, p, training, rng)
        mask = sequence_mask(lengths, token_ids.shape[1])
        return EncoderOutputs(_apply_mask(hidden, mask), mask)

    def named_parameters(self):
        return [("embedding", self.embedding)] + [
            ("blstm." + k, v) for k, v in self.blstm.named_parameters()
        ]


class AudioEncoder:
    """Shared lower BLSTM per segment, mean pool, then an upper BLSTM over segments."""

    def __init__(self, n_features, hidden_size, rng):
        self.lower = BLSTM(n_features, hidden_size, rng)
        self.upper = BLSTM(2 * hidden_size, hidden_size, rng)

    def pool_segments(self, features, frames, training=False, p=0.0, rng=None):
        """One pooled ``2*D_h`` vector per segment; ``features`` is ``(M, T', D_f)``."""
        frames = np.asarray(frames, dtype=np.int64)
        if (frames < 1).any():
            raise InvalidInputError("every audio segment needs at least one valid frame")
        lower = self.lower(Tensor(features), frames)
        lower = dropout(lower, p, training, rng)
        return masked_mean_pool(lower, frames)

    def __call__(self, features, frames, positions, lengths, training=False, p=0.0, rng=None):
        """Encode a batch whose real segments are flattened into ``features``.

        ``positions[m] = b * L_max + l`` places segment ``m`` at step ``l`` of
        utterance ``b``; ``lengths[b]`` counts utterance ``b``'s segments.
        """
        lengths = np.asarray(lengths, dtype=np.int64)
        batch, steps = lengths.size, int(lengths.max())
        if len(positions) != len(frames) or len(frames) != int(lengths.sum()):
            raise DimensionError("segment count does not match utterance lengths")
        pooled = self.pool_segments(features, frames, training, p, rng)
        grid = scatter_rows(pooled, positions, batch * steps)
        grid = grid.reshape(batch, steps, pooled.shape[1])
        hidden = self.upper(grid, lengths)
        hidden = dropout(hidden, p, training, rng)
        mask = sequence_mask(lengths, steps)
        return EncoderOutputs(_apply_mask(hidden, mask), mask)

    def named_parameters(self):
        return [("lower." + k, v) for k, v in self.lower.named_parameters()] + [
            ("upper." + k, v) for k, v in self.upper.named_parameters()
        ]


def encode_audio(encoder, segments, training=False, p=0.0, rng=None):
    """Single-utterance convenience wrapper around :class:`AudioEncoder`."""
    n = segments.n_segments
    if n < 1:
        raise InvalidInputError("need at least one segment")
    return encoder(
        segments.features, segments.valid_frames, np.arange(n), np.array([n]),
        training, p, rng,
    )


def encode_text(encoder, tokens, training=False, p=0.0, rng=None):
    """Single-utterance convenience wrapper around :class:`TextEncoder`."""
    return encoder(tokens.ids[None, :], np.array([len(tokens)]), training, p, rng)
