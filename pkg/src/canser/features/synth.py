"""Synthetic emotion corpus with the same file layout as a real one.

Each utterance carries its class twice: one or two class keywords in the
text, and a class-specific tone (pitch and tremolo rate) under every word
in the audio. Special-token spans hold low-level noise only.
"""

import os
from dataclasses import dataclass, fields

import numpy as np

from ..errors import ConfigError
from .alignment import SENTENCE_END, SENTENCE_START, SILENCE, AlignmentTable, Span, write_alignment
from .audio import AudioSignal, write_wav
from .manifest import ManifestEntry, write_manifest

DEFAULT_CLASSES = ("angry", "happy", "sad", "neutral", "frustrated", "excited", "surprised")
DEFAULT_KEYWORDS = {
    "angry": ("furious", "hate", "stop"),
    "happy": ("great", "love", "wonderful"),
    "sad": ("miss", "lonely", "cry"),
    "neutral": ("okay", "maybe", "fine"),
    "frustrated": ("ugh", "again", "annoying"),
    "excited": ("wow", "amazing", "finally"),
    "surprised": ("what", "suddenly", "unexpected"),
}
DEFAULT_FILLERS = (
    "the", "a", "we", "you", "it", "was", "is", "that",
    "so", "and", "to", "just", "then", "there", "now", "i",
)


@dataclass(frozen=True)
class SynthConfig:
    n_classes: int = 4
    per_class: int = 50
    classes: tuple = ()
    fillers: tuple = DEFAULT_FILLERS
    keywords_per_class: int = 3
    words_per_utterance: tuple = (3, 6)
    word_units: tuple = (15, 40)
    silence_units: tuple = (5, 20)
    silence_prob: float = 0.3
    boundary_units: tuple = (5, 15)
    sample_rate: int = 16000
    noise: float = 0.01

    def __post_init__(self):
        if self.n_classes < 1 or self.per_class < 1:
            raise ConfigError("need at least one class and one utterance per class")
        if self.classes and len(self.classes) != self.n_classes:
            raise ConfigError(f"{len(self.classes)} class names for {self.n_classes} classes")
        for name in ("words_per_utterance", "word_units", "silence_units", "boundary_units"):
            lo, hi = getattr(self, name)
            if not 1 <= lo <= hi:
                raise ConfigError(f"{name} must be an increasing positive range")

    def class_names(self):
        if self.classes:
            return tuple(self.classes)
        if self.n_classes <= len(DEFAULT_CLASSES):
            return DEFAULT_CLASSES[: self.n_classes]
        return tuple(f"class{c}" for c in range(self.n_classes))

    def keywords(self):
        out = {}
        for name in self.class_names():
            base = DEFAULT_KEYWORDS.get(name, ())
            extra = tuple(f"{name}_kw{j}" for j in range(self.keywords_per_class))
            out[name] = (base + extra)[: self.keywords_per_class]
        return out

    @classmethod
    def from_mapping(cls, mapping):
        """Build from string values (``key=value`` files); ranges are ``lo,hi``."""
        kinds = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, value in mapping.items():
            key = key.replace("-", "_")
            if key not in kinds:
                raise ConfigError(f"unknown generator key {key!r}")
            default = getattr(cls, key)
            if isinstance(default, tuple):
                items = [v.strip() for v in str(value).split(",") if v.strip()]
                if key in ("classes", "fillers"):
                    kwargs[key] = tuple(items)
                else:
                    kwargs[key] = tuple(int(v) for v in items)
            else:
                kwargs[key] = type(default)(value)
        return cls(**kwargs)


def _class_tone(c):
    """Pitch (Hz) and tremolo rate (Hz) for class ``c``."""
    return 160.0 * 2.0 ** (c * 5.0 / 12.0), 3.0 + 2.5 * c


def _render(table, label_index, config, rng):
    rate = config.sample_rate
    n = (table.end + 1) * rate // 100
    samples = config.noise * rng.standard_normal(n)
    pitch, tremolo = _class_tone(label_index)
    for span in table:
        if span.word in (SENTENCE_START, SENTENCE_END, SILENCE):
            continue
        lo, hi = span.start * rate // 100, (span.end + 1) * rate // 100
        t = np.arange(hi - lo) / rate
        envelope = np.sin(np.pi * np.arange(hi - lo) / (hi - lo)) ** 0.5
        detune = 1.0 + 0.03 * rng.standard_normal()
        phase = rng.uniform(0.0, 2.0 * np.pi)
        tone = np.sin(2.0 * np.pi * pitch * detune * t + phase)
        tone += 0.4 * np.sin(4.0 * np.pi * pitch * detune * t + phase)
        tone *= 1.0 + 0.6 * np.sin(2.0 * np.pi * tremolo * t)
        samples[lo:hi] += rng.uniform(0.2, 0.4) * envelope * tone
    return AudioSignal(np.clip(samples, -1.0, 1.0), rate)


def _draw_words(label, config, keywords, rng):
    lo, hi = config.words_per_utterance
    n_words = int(rng.integers(lo, hi + 1))
    n_keys = 1 if n_words < 4 else int(rng.integers(1, 3))
    slots = set(rng.choice(n_words, size=n_keys, replace=False).tolist())
    words = []
    for i in range(n_words):
        if i in slots:
            words.append(str(rng.choice(keywords[label])))
        else:
            words.append(str(rng.choice(config.fillers)))
    return words


def _draw_table(words, config, rng):
    def dur(bounds):
        return int(rng.integers(bounds[0], bounds[1] + 1))

    spans = []
    t = 0

    def put(word, length):
        nonlocal t
        spans.append(Span(t, t + length - 1, word))
        t += length

    put(SENTENCE_START, dur(config.boundary_units))
    for i, word in enumerate(words):
        if i > 0 and rng.random() < config.silence_prob:
            put(SILENCE, dur(config.silence_units))
        put(word, dur(config.word_units))
    put(SENTENCE_END, dur(config.boundary_units))
    return AlignmentTable(tuple(spans))


def synthesize_dataset(out_dir, config=None, seed=0):
    """Write ``manifest.tsv``, ``wav/*.wav`` and ``align/*.txt`` under ``out_dir``.

    Output bytes depend only on ``config`` and ``seed``. Returns the entries.
    """
    config = config or SynthConfig()
    rng = np.random.default_rng(seed)
    names = config.class_names()
    keywords = config.keywords()
    os.makedirs(os.path.join(out_dir, "wav"), exist_ok=True)
    os.makedirs(os.path.join(out_dir, "align"), exist_ok=True)

    labels = [c for c in range(len(names)) for _ in range(config.per_class)]
    order = rng.permutation(len(labels))
    entries = []
    for k, idx in enumerate(order):
        label = labels[idx]
        utt_id = f"utt{k:05d}"
        words = _draw_words(names[label], config, keywords, rng)
        table = _draw_table(words, config, rng)
        signal = _render(table, label, config, rng)
        audio_path = os.path.join(out_dir, "wav", f"{utt_id}.wav")
        align_path = os.path.join(out_dir, "align", f"{utt_id}.txt")
        write_wav(audio_path, signal)
        write_alignment(align_path, table)
        entries.append(ManifestEntry(utt_id, audio_path, align_path, names[label]))
    write_manifest(os.path.join(out_dir, "manifest.tsv"), entries)
    return entries
