"""Audio front-end: resampling, Mel spectrograms, padding, band splitting.

Clips are encoded as 128-bin Mel spectrograms computed from 2048-sample
frames with 50% overlap under a Hann window, then log(1+x) compressed
before they reach any network. The Mel filterbank uses the HTK scale with
triangular filters from 0 Hz to Nyquist.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import CorruptFileError, InputTooShortError, ShapeError, VersionError

TARGET_RATE = 44100
FRAME_SIZE = 2048
HOP_SIZE = 1024
N_MELS = 128

_CACHE_MAGIC = b"RAMF"
_CACHE_VERSION = 1
_CACHE_HEADER = struct.Struct("<4sIII d")


@dataclass
class AudioClip:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.size == 0:
            raise ValueError("audio clip has no samples")
        if self.sample_rate <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")


@dataclass
class MelSpectrogram:
    """Non-negative [bins x T] matrix plus the frame hop in seconds."""

    values: np.ndarray
    frame_hop_seconds: float

    @property
    def bins(self) -> int:
        return self.values.shape[0]

    @property
    def frames(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class BandSplit:
    """Contiguous low/mid/high bin counts, taken from bin 0 upward."""

    low: int = 20
    mid: int = 40
    high: int = 40

    def __post_init__(self):
        if min(self.low, self.mid, self.high) < 1:
            raise ValueError("every band needs at least one bin")

    @property
    def total(self) -> int:
        return self.low + self.mid + self.high


# Covers all 128 bins instead of dropping the top 28.
FULL_COVERAGE_SPLIT = BandSplit(20, 40, 68)


def read_wav(path: str | Path) -> AudioClip:
    """Read a PCM WAV file (16-bit int or 32-bit float) into [-1, 1] floats."""
    rate, data = wavfile.read(path)
    if data.ndim > 1:
        data = data.mean(axis=1)
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32 or data.dtype == np.float64:
        samples = data.astype(np.float64)
    elif data.dtype == np.int32:
        samples = data.astype(np.float64) / 2147483648.0
    else:
        raise ValueError(f"unsupported WAV sample format {data.dtype}")
    return AudioClip(samples, int(rate))


def resample(clip: AudioClip, target_rate: int = TARGET_RATE) -> AudioClip:
    """Polyphase windowed-sinc resampling; identity when already at the target rate."""
    if clip.sample_rate == target_rate:
        return clip
    g = np.gcd(clip.sample_rate, target_rate)
    out = resample_poly(clip.samples, target_rate // g, clip.sample_rate // g)
    return AudioClip(out, target_rate)


def hann_window(n: int = FRAME_SIZE) -> np.ndarray:
    # periodic Hann, the STFT convention
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, sample_rate: int, n_fft: int) -> np.ndarray:
    """Triangular HTK-scale filters, [n_mels x (n_fft//2 + 1)]."""
    nyquist = sample_rate / 2.0
    mel_points = np.linspace(0.0, _hz_to_mel(nyquist), n_mels + 2)
    hz_points = _mel_to_hz(mel_points)
    fft_freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    bank = np.zeros((n_mels, fft_freqs.size))
    for i in range(n_mels):
        left, center, right = hz_points[i], hz_points[i + 1], hz_points[i + 2]
        rising = (fft_freqs - left) / (center - left)
        falling = (right - fft_freqs) / (right - center)
        bank[i] = np.maximum(0.0, np.minimum(rising, falling))
    return bank


def frame_count(n_samples: int, frame: int = FRAME_SIZE, hop: int = HOP_SIZE) -> int:
    return (n_samples - frame) // hop + 1


def power_spectrogram(samples: np.ndarray, frame: int = FRAME_SIZE,
                      hop: int = HOP_SIZE) -> np.ndarray:
    """Magnitude-squared STFT, no padding: [(frame//2 + 1) x T]."""
    if samples.size < frame:
        raise InputTooShortError(
            f"clip has {samples.size} samples, needs at least {frame} for one frame")
    t = frame_count(samples.size, frame, hop)
    window = hann_window(frame)
    frames = np.lib.stride_tricks.sliding_window_view(samples, frame)[::hop][:t]
    spectrum = np.fft.rfft(frames * window, axis=1)
    return (spectrum.real ** 2 + spectrum.imag ** 2).T


def mel_spectrogram(clip: AudioClip, n_mels: int = N_MELS, frame: int = FRAME_SIZE,
                    hop: int = HOP_SIZE) -> MelSpectrogram:
    """Project the power spectrogram through the Mel filterbank.

    The clip is expected to already be at the 44.1 kHz processing rate;
    call resample() first otherwise.
    """
    power = power_spectrogram(clip.samples, frame, hop)
    bank = mel_filterbank(n_mels, clip.sample_rate, frame)
    values = bank @ power
    return MelSpectrogram(values, hop / clip.sample_rate)


def log_compress(spec: MelSpectrogram) -> MelSpectrogram:
    """log(1 + x) compression applied before any network input."""
    return MelSpectrogram(np.log1p(spec.values), spec.frame_hop_seconds)


def pad_center(spec: MelSpectrogram, t: int) -> MelSpectrogram:
    """Zero-pad symmetrically in time to exactly t frames; left side gets the floor."""
    frames = spec.frames
    if frames > t:
        raise ValueError(f"clip has {frames} frames, cannot pad down to {t}")
    if frames == t:
        return spec
    left = (t - frames) // 2
    right = t - frames - left
    values = np.pad(spec.values, ((0, 0), (left, right)))
    return MelSpectrogram(values, spec.frame_hop_seconds)


def segment_bands(spec: MelSpectrogram, split: BandSplit = BandSplit()
                  ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Slice contiguous low/mid/high bands from bin 0 upward.

    Bins above split.total are discarded (the default split covers 100 of
    128 bins; use FULL_COVERAGE_SPLIT to keep them all).
    """
    if split.total > spec.bins:
        raise ShapeError(
            f"band split covers {split.total} bins but spectrogram has {spec.bins}")
    v = spec.values
    low = v[:split.low]
    mid = v[split.low:split.low + split.mid]
    high = v[split.low + split.mid:split.total]
    return low, mid, high


def save_features(spec: MelSpectrogram, path: str | Path) -> None:
    """Write one clip's features: header + little-endian float32, row-major."""
    header = _CACHE_HEADER.pack(_CACHE_MAGIC, _CACHE_VERSION, spec.bins, spec.frames,
                                spec.frame_hop_seconds)
    payload = np.ascontiguousarray(spec.values, dtype="<f4").tobytes()
    Path(path).write_bytes(header + payload)


def load_features(path: str | Path) -> MelSpectrogram:
    raw = Path(path).read_bytes()
    if len(raw) < _CACHE_HEADER.size:
        raise CorruptFileError(f"feature file {path} is truncated")
    magic, version, bins, frames, hop = _CACHE_HEADER.unpack_from(raw)
    if magic != _CACHE_MAGIC:
        raise CorruptFileError(f"{path} is not a feature cache file")
    if version != _CACHE_VERSION:
        raise VersionError(
            f"feature file {path} has version {version}, this build reads {_CACHE_VERSION}")
    expected = _CACHE_HEADER.size + 4 * bins * frames
    if len(raw) != expected:
        raise CorruptFileError(
            f"feature file {path} has {len(raw)} bytes, expected {expected}")
    values = np.frombuffer(raw, dtype="<f4", offset=_CACHE_HEADER.size)
    return MelSpectrogram(values.reshape(bins, frames).astype(np.float32), hop)
