"""MFCC extraction: pre-emphasis, framing, window, |FFT|, mel bank, log, DCT-II."""

import functools
from dataclasses import dataclass

import numpy as np
from scipy.fft import dct

from ..errors import InvalidInputError

_WINDOWS = {
    "hamming": np.hamming,
    "hann": np.hanning,
    "rectangular": np.ones,
}
# log floor for empty mel bands (silence)
MEL_FLOOR = 1e-10


@dataclass(frozen=True)
class MfccConfig:
    n_mfcc: int = 40
    frame_ms: float = 25.0
    hop_ms: float = 10.0
    window: str = "hamming"
    n_mels: int = 40
    n_fft: int = 512
    preemphasis: float = 0.97

    def __post_init__(self):
        if not self.frame_ms > self.hop_ms > 0:
            raise InvalidInputError(
                f"need frame length > hop > 0, got {self.frame_ms} / {self.hop_ms} ms"
            )
        if not 1 <= self.n_mfcc <= self.n_mels:
            raise InvalidInputError(
                f"coefficient count {self.n_mfcc} must lie in [1, n_mels={self.n_mels}]"
            )
        if self.window not in _WINDOWS:
            raise InvalidInputError(f"unknown window {self.window!r}")

    def frame_samples(self, sample_rate):
        return int(round(self.frame_ms * sample_rate / 1000.0))

    def hop_samples(self, sample_rate):
        return int(round(self.hop_ms * sample_rate / 1000.0))

    def fft_size(self, sample_rate):
        """``n_fft``, grown to the next power of two if a frame would not fit."""
        size = self.n_fft
        frame = self.frame_samples(sample_rate)
        while size < frame:
            size *= 2
        return size


def frame_count(n_samples, config, sample_rate):
    """``max(1, floor((len - frame) / hop) + 1)`` in samples."""
    frame = config.frame_samples(sample_rate)
    if n_samples < frame:
        return 1
    return (n_samples - frame) // config.hop_samples(sample_rate) + 1


def hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel) / 2595.0) - 1.0)


@functools.lru_cache(maxsize=16)
def mel_filterbank(sample_rate, n_fft, n_mels):
    """Triangular filters on a linear FFT-bin axis, edges evenly spaced in mel."""
    freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_mels + 2))
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs[None, :] - lo) / (mid - lo)
    falling = (hi - freqs[None, :]) / (hi - mid)
    bank = np.maximum(0.0, np.minimum(rising, falling))
    bank.setflags(write=False)
    return bank


def mfcc(samples, config, sample_rate):
    """MFCC matrix of shape ``(frames, config.n_mfcc)`` for one slice.

    Slices shorter than one frame are zero-padded to exactly one frame;
    trailing samples that do not fill a whole frame are dropped.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1 or samples.size == 0:
        raise InvalidInputError("mfcc needs a non-empty 1-D slice")
    frame = config.frame_samples(sample_rate)
    hop = config.hop_samples(sample_rate)
    n_frames = frame_count(samples.size, config, sample_rate)

    emphasized = np.empty_like(samples)
    emphasized[0] = samples[0]
    emphasized[1:] = samples[1:] - config.preemphasis * samples[:-1]
    needed = (n_frames - 1) * hop + frame
    if emphasized.size < needed:
        emphasized = np.pad(emphasized, (0, needed - emphasized.size))
    starts = np.arange(n_frames)[:, None] * hop
    frames = emphasized[starts + np.arange(frame)[None, :]]
    frames = frames * _WINDOWS[config.window](frame)

    n_fft = config.fft_size(sample_rate)
    magnitude = np.abs(np.fft.rfft(frames, n=n_fft, axis=1))
    bands = magnitude @ mel_filterbank(sample_rate, n_fft, config.n_mels).T
    log_bands = np.log(np.maximum(bands, MEL_FLOOR))
    return dct(log_bands, type=2, axis=1, norm="ortho")[:, : config.n_mfcc]
