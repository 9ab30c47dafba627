"""Audio loading/saving and alignment-driven slicing."""

import os
import wave
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError, ValidationError
from .alignment import UNITS_PER_SECOND

DEFAULT_SAMPLE_RATE = 16000
RAW_EXTENSIONS = (".f64", ".raw")


@dataclass(frozen=True, eq=False)
class AudioSignal:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size < 1:
            raise InvalidInputError("audio must be a non-empty 1-D array")
        if self.sample_rate <= 0:
            raise InvalidInputError(f"sample rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.size

    @property
    def duration_units(self):
        return (self.samples.size * UNITS_PER_SECOND) // self.sample_rate


def load_audio(path, sample_rate=None):
    """Read mono 16-bit PCM WAV, or raw little-endian float64 samples.

    Raw files (``.f64``/``.raw``) take their rate from a ``<path>.rate``
    sidecar holding one integer, else from ``sample_rate``.
    """
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    if ext == ".wav":
        return _read_wav(path)
    if ext in RAW_EXTENSIONS:
        samples = np.fromfile(path, dtype="<f8")
        sidecar = path + ".rate"
        if os.path.exists(sidecar):
            with open(sidecar, encoding="utf-8") as fh:
                sample_rate = int(fh.read().strip())
        if sample_rate is None:
            raise ValidationError(f"{path}: raw audio needs a .rate sidecar or a sample rate")
        return AudioSignal(samples, sample_rate)
    raise ValidationError(f"{path}: unsupported audio extension {ext!r}")


def _read_wav(path):
    with wave.open(path, "rb") as wf:
        if wf.getnchannels() != 1 or wf.getsampwidth() != 2:
            raise ValidationError(
                f"{path}: need mono 16-bit PCM, got {wf.getnchannels()} channel(s), "
                f"{8 * wf.getsampwidth()}-bit"
            )
        rate = wf.getframerate()
        frames = wf.readframes(wf.getnframes())
    samples = np.frombuffer(frames, dtype="<i2").astype(np.float64) / 32768.0
    return AudioSignal(samples, rate)


def write_wav(path, signal):
    pcm = np.clip(np.round(signal.samples * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(os.fspath(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(signal.sample_rate)
        wf.writeframes(pcm.tobytes())


def write_raw(path, signal):
    path = os.fspath(path)
    signal.samples.astype("<f8").tofile(path)
    with open(path + ".rate", "w", encoding="utf-8") as fh:
        fh.write(f"{signal.sample_rate}\n")


def span_to_samples(span, sample_rate):
    """Half-open sample range ``[start, end + 1)`` of a span in 10 ms units."""
    return (
        span.start * sample_rate // UNITS_PER_SECOND,
        (span.end + 1) * sample_rate // UNITS_PER_SECOND,
    )


def segment_audio(signal, table):
    """One sample slice (a view) per span of ``table``."""
    pieces = []
    for span in table:
        lo, hi = span_to_samples(span, signal.sample_rate)
        if lo < 0 or hi > len(signal):
            raise ValidationError(
                f"span {tuple(span)} maps to samples [{lo}, {hi}) beyond "
                f"signal length {len(signal)}"
            )
        pieces.append(signal.samples[lo:hi])
    return pieces
