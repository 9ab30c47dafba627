"""Aligned per-utterance inputs: token ids and the padded MFCC segment stack."""

import os
import struct
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError, ValidationError
from .alignment import absorb_special_tokens, apply_overlap, equal_segmentation, normalize_word
from .audio import segment_audio
from .mfcc import mfcc

SEGMENTATION_MODES = ("aligned", "equal")
UNKNOWN = "<unk>"

CACHE_MAGIC = b"CANF"
CACHE_VERSION = 1
_CACHE_HEADER = struct.Struct("<4sIIII")


@dataclass(eq=False)
class SegmentedAudioFeatures:
    """``features[i, :valid_frames[i]]`` holds segment ``i``; the rest is zero."""

    features: np.ndarray
    valid_frames: np.ndarray

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.valid_frames = np.asarray(self.valid_frames, dtype=np.int64)
        if self.features.ndim != 3 or self.valid_frames.shape != (self.features.shape[0],):
            raise ValidationError(
                f"features {self.features.shape} inconsistent with valid frames "
                f"{self.valid_frames.shape}"
            )

    @property
    def n_segments(self):
        return self.features.shape[0]

    @property
    def max_frames(self):
        return self.features.shape[1]

    @property
    def n_coefficients(self):
        return self.features.shape[2]

    def unpad(self):
        return [self.features[i, :n].copy() for i, n in enumerate(self.valid_frames)]

    def __eq__(self, other):
        return (
            isinstance(other, SegmentedAudioFeatures)
            and np.array_equal(self.valid_frames, other.valid_frames)
            and np.array_equal(self.features, other.features)
        )


def build_segment_tensor(segments):
    """Stack ``(frames_i, D)`` arrays into ``(L, max frames, D)`` with tail zero-padding."""
    if not segments:
        raise InvalidInputError("need at least one segment")
    dims = {np.shape(s)[1] for s in segments}
    if len(dims) != 1:
        raise InvalidInputError(f"segments disagree on coefficient count: {sorted(dims)}")
    counts = np.array([len(s) for s in segments], dtype=np.int64)
    out = np.zeros((len(segments), counts.max(), dims.pop()))
    for i, seg in enumerate(segments):
        out[i, : len(seg)] = seg
    return SegmentedAudioFeatures(out, counts)


@dataclass(frozen=True, eq=False)
class TokenSequence:
    ids: np.ndarray
    vocab_size: int

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64)
        if ids.ndim != 1 or ids.size < 1:
            raise InvalidInputError("token sequence must be non-empty")
        if (ids < 0).any() or (ids >= self.vocab_size).any():
            raise InvalidInputError(f"token ids must lie in [0, {self.vocab_size})")
        object.__setattr__(self, "ids", ids)

    def __len__(self):
        return self.ids.size

    def one_hot(self):
        return np.eye(self.vocab_size)[self.ids]


class Vocabulary:
    """Word to index map; index 0 is reserved for unseen words."""

    def __init__(self, tokens):
        tokens = list(tokens)
        if not tokens or tokens[0] != UNKNOWN:
            tokens = [UNKNOWN] + [t for t in tokens if t != UNKNOWN]
        self.tokens = tokens
        self.index = {t: i for i, t in enumerate(tokens)}
        if len(self.index) != len(tokens):
            raise InvalidInputError("vocabulary has duplicate entries")

    @classmethod
    def build(cls, word_lists):
        words = sorted({normalize_word(w) for ws in word_lists for w in ws})
        return cls([UNKNOWN] + [w for w in words if w != UNKNOWN])

    def __len__(self):
        return len(self.tokens)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def encode(self, words):
        return TokenSequence(
            [self.index.get(normalize_word(w), 0) for w in words], len(self.tokens)
        )


def segment_table(table, overlap=0.1, segmentation="aligned"):
    """Alignment spans actually used for slicing: absorb specials, optionally
    re-split into equal pieces, then widen boundaries by ``overlap``."""
    if segmentation not in SEGMENTATION_MODES:
        raise InvalidInputError(f"unknown segmentation mode {segmentation!r}")
    words = absorb_special_tokens(table)
    if segmentation == "equal":
        words = equal_segmentation(words)
    return apply_overlap(words, overlap)


def extract_features(signal, table, mfcc_config, overlap=0.1, segmentation="aligned"):
    """Return ``(words, SegmentedAudioFeatures)`` for one utterance; both have length L."""
    spans = segment_table(table, overlap, segmentation)
    slices = segment_audio(signal, spans)
    segments = [mfcc(s, mfcc_config, signal.sample_rate) for s in slices]
    return spans.words, build_segment_tensor(segments)


def write_feature_cache(path, feats):
    """Header ``<4sIIII`` (magic, version, L, T', D_f), float64 LE features, uint32 LE counts."""
    n, t, d = feats.features.shape
    with open(os.fspath(path), "wb") as fh:
        fh.write(_CACHE_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, n, t, d))
        fh.write(feats.features.astype("<f8").tobytes())
        fh.write(feats.valid_frames.astype("<u4").tobytes())


def read_feature_cache(path):
    with open(os.fspath(path), "rb") as fh:
        blob = fh.read()
    if len(blob) < _CACHE_HEADER.size:
        raise ValidationError(f"{path}: truncated feature cache")
    magic, version, n, t, d = _CACHE_HEADER.unpack_from(blob)
    if magic != CACHE_MAGIC or version != CACHE_VERSION:
        raise ValidationError(f"{path}: not a version-{CACHE_VERSION} feature cache")
    body = _CACHE_HEADER.size
    n_values = n * t * d
    expected = body + 8 * n_values + 4 * n
    if len(blob) != expected:
        raise ValidationError(f"{path}: expected {expected} bytes, found {len(blob)}")
    feats = np.frombuffer(blob, dtype="<f8", count=n_values, offset=body).reshape(n, t, d)
    counts = np.frombuffer(blob, dtype="<u4", count=n, offset=body + 8 * n_values)
    return SegmentedAudioFeatures(feats.astype(np.float64), counts.astype(np.int64))
