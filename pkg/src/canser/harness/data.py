"""Loading manifests into model-ready utterances, with an optional feature cache."""

import os
from dataclasses import dataclass

import numpy as np

from ..config import read_key_values
from ..errors import ConfigError
from ..features import (
    Vocabulary,
    extract_features,
    load_audio,
    read_alignment,
    read_feature_cache,
    segment_table,
    write_feature_cache,
)
from ..model import collate

CACHE_CONFIG = "preprocess.cfg"


@dataclass(eq=False)
class Utterance:
    utt_id: str
    words: list
    features: object
    label: str


def load_utterance(entry, model_config):
    signal = load_audio(entry.audio, sample_rate=model_config.sample_rate)
    table = read_alignment(entry.alignment)
    words, feats = extract_features(
        signal,
        table,
        model_config.mfcc_config(),
        overlap=model_config.overlap,
        segmentation=model_config.segmentation,
    )
    return Utterance(entry.utt_id, words, feats, entry.label)


def _cache_signature(model_config):
    return "".join(f"{k}={v}\n" for k, v in model_config.preprocessing_key().items())


def write_cache(cache_dir, utterances, model_config):
    """One ``<id>.feat`` binary and ``<id>.words`` list per utterance, plus the
    preprocessing settings they were computed with."""
    os.makedirs(cache_dir, exist_ok=True)
    with open(os.path.join(cache_dir, CACHE_CONFIG), "w", encoding="utf-8") as fh:
        fh.write(_cache_signature(model_config))
    for utt in utterances:
        write_feature_cache(os.path.join(cache_dir, utt.utt_id + ".feat"), utt.features)
        with open(os.path.join(cache_dir, utt.utt_id + ".words"), "w", encoding="utf-8") as fh:
            fh.write("".join(w + "\n" for w in utt.words))


def _check_cache(cache_dir, model_config):
    path = os.path.join(cache_dir, CACHE_CONFIG)
    if not os.path.exists(path):
        raise ConfigError(f"{cache_dir}: no {CACHE_CONFIG}; run preprocess first")
    with open(path, encoding="utf-8") as fh:
        stored = read_key_values(fh.read())
    expected = read_key_values(_cache_signature(model_config))
    if stored != expected:
        diff = sorted(k for k in expected if stored.get(k) != expected[k])
        raise ConfigError(f"{cache_dir}: cached features differ in {', '.join(diff)}")


def load_corpus(entries, model_config, cache_dir=None):
    """Utterances for ``entries``; cached features are used when present."""
    if cache_dir is not None:
        _check_cache(cache_dir, model_config)
    out = []
    for entry in entries:
        feat_path = os.path.join(cache_dir, entry.utt_id + ".feat") if cache_dir else None
        if feat_path and os.path.exists(feat_path):
            feats = read_feature_cache(feat_path)
            with open(feat_path[: -len(".feat")] + ".words", encoding="utf-8") as fh:
                words = [w for w in fh.read().split("\n") if w]
            out.append(Utterance(entry.utt_id, words, feats, entry.label))
        else:
            out.append(load_utterance(entry, model_config))
    return out


def build_vocabulary(utterances):
    return Vocabulary.build(u.words for u in utterances)


def check_compatible(utterances, model_config, vocab, require_known_words=True):
    """Raise :class:`ConfigError` if labels, feature width or vocabulary do not fit.

    Held-out splits of a small corpus may legitimately contain only unseen
    words; pass ``require_known_words=False`` for those.
    """
    unknown = sorted({u.label for u in utterances} - set(model_config.classes))
    if unknown:
        raise ConfigError(f"labels not in the configured classes: {', '.join(unknown)}")
    for u in utterances:
        if u.features.n_coefficients != model_config.n_mfcc:
            raise ConfigError(
                f"{u.utt_id}: {u.features.n_coefficients} coefficients, model expects "
                f"{model_config.n_mfcc}"
            )
    known = sum(int((vocab.encode(u.words).ids > 0).sum()) for u in utterances)
    if require_known_words and utterances and known == 0:
        raise ConfigError("no word of the data is in the model vocabulary")


class Encoded:
    """Token ids and label indices computed once per utterance."""

    def __init__(self, utterances, vocab, classes):
        index = {c: i for i, c in enumerate(classes)}
        self.utterances = list(utterances)
        self.tokens = [vocab.encode(u.words) for u in self.utterances]
        self.labels = np.array([index[u.label] for u in self.utterances], dtype=np.int64)

    def __len__(self):
        return len(self.utterances)

    def batch(self, indices):
        indices = list(indices)
        return collate(
            [self.tokens[i] for i in indices],
            [self.utterances[i].features for i in indices],
            self.labels[indices],
        )
