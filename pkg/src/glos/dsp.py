"""Audio loading and acoustic feature extraction.

The front end is deliberately fixed: 16 kHz mono PCM in, 25 ms Hamming
windows every 10 ms, 512-point FFT, 26 mel filters up to 8 kHz, 13
cepstra with the zeroth coefficient replaced by log frame energy, plus
delta and delta-delta appended (39 dims), then per-utterance cepstral
mean and variance normalization.  All knobs live in
:class:`FeatureConfig` and are folded into a fingerprint string so that
models can refuse features produced with different settings.
"""

from __future__ import annotations

import struct
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.fft import dct

from .errors import CorruptFile, TooShort, UnsupportedFormat

_FEAT_MAGIC = b"GLOSFEAT"


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio at a known sample rate, samples in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def load_wav(path: str | Path) -> AudioBuffer:
    """Read a RIFF/WAVE file.

    Only 16-bit PCM at 16 kHz is accepted; stereo is downmixed by
    averaging.  Anything else raises UnsupportedFormat with the header
    fields spelled out, and files that do not parse raise CorruptFile.
    """
    try:
        wf = wave.open(str(path), "rb")
    except (wave.Error, EOFError) as exc:
        raise CorruptFile(f"{path}: {exc}") from exc
    with wf:
        channels = wf.getnchannels()
        width = wf.getsampwidth()
        rate = wf.getframerate()
        if wf.getcomptype() != "NONE":
            raise UnsupportedFormat(
                f"{path}: compression {wf.getcomptype()!r}, expected plain PCM")
        if width != 2:
            raise UnsupportedFormat(
                f"{path}: {8 * width}-bit samples, expected 16-bit PCM")
        if rate != 16000:
            raise UnsupportedFormat(
                f"{path}: sample rate {rate} Hz, expected 16000 Hz")
        if channels not in (1, 2):
            raise UnsupportedFormat(
                f"{path}: {channels} channels, expected mono or stereo")
        raw = wf.readframes(wf.getnframes())
    data = np.frombuffer(raw, dtype="<i2").astype(np.float64)
    if channels == 2:
        data = data.reshape(-1, 2).mean(axis=1)
    return AudioBuffer(data / 32768.0, rate)


def write_wav(path: str | Path, samples: np.ndarray, sample_rate: int = 16000) -> None:
    """Write mono 16-bit PCM; values are clipped to [-1, 1]."""
    ints = np.clip(np.round(np.clip(samples, -1.0, 1.0) * 32768.0),
                   -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate)
        wf.writeframes(ints.tobytes())


@dataclass(frozen=True)
class FeatureConfig:
    sample_rate: int = 16000
    window: float = 0.025       # seconds
    hop: float = 0.010          # seconds
    n_fft: int = 512
    n_mels: int = 26
    n_ceps: int = 13
    preemphasis: float = 0.97
    energy_floor: float = 1e-10  # floor under frame energy and mel energies
    delta_window: int = 2
    cmvn: bool = True

    @property
    def window_samples(self) -> int:
        return round(self.window * self.sample_rate)

    @property
    def hop_samples(self) -> int:
        return round(self.hop * self.sample_rate)

    def fingerprint(self, kind: str) -> str:
        return (f"{kind}|sr={self.sample_rate}|win={self.window_samples}"
                f"|hop={self.hop_samples}|nfft={self.n_fft}|nmel={self.n_mels}"
                f"|nceps={self.n_ceps}|pre={self.preemphasis}"
                f"|dw={self.delta_window}|cmvn={int(self.cmvn)}")


@dataclass
class FeatureMatrix:
    """T x D feature array plus the metadata consumers must check."""

    data: np.ndarray
    fingerprint: str
    hop: float            # seconds between frames
    n_samples: int        # length of the source audio
    sample_rate: int

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate


def frame_count(n_samples: int, cfg: FeatureConfig) -> int:
    win, hop = cfg.window_samples, cfg.hop_samples
    if n_samples < win:
        return 0
    return (n_samples - win) // hop + 1


def _frames(signal: np.ndarray, cfg: FeatureConfig) -> np.ndarray:
    win, hop = cfg.window_samples, cfg.hop_samples
    n = frame_count(len(signal), cfg)
    if n == 0:
        raise TooShort(
            f"{len(signal)} samples < one {win}-sample analysis window")
    idx = np.arange(win)[None, :] + hop * np.arange(n)[:, None]
    return signal[idx]


def _hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz) / 700.0)


def _mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel) / 2595.0) - 1.0)


def mel_filterbank(cfg: FeatureConfig) -> np.ndarray:
    """Triangular filters (n_mels x n_fft//2+1), 0 Hz to Nyquist."""
    low, high = 0.0, cfg.sample_rate / 2.0
    points = np.linspace(_hz_to_mel(low), _hz_to_mel(high), cfg.n_mels + 2)
    bins = np.floor((cfg.n_fft + 1) * _mel_to_hz(points) / cfg.sample_rate).astype(int)
    fbank = np.zeros((cfg.n_mels, cfg.n_fft // 2 + 1))
    for m in range(cfg.n_mels):
        left, center, right = bins[m], bins[m + 1], bins[m + 2]
        for k in range(left, center):
            fbank[m, k] = (k - left) / max(center - left, 1)
        for k in range(center, right):
            fbank[m, k] = (right - k) / max(right - center, 1)
    return fbank


def _preemphasize(signal: np.ndarray, coeff: float) -> np.ndarray:
    return np.concatenate(([signal[0]], signal[1:] - coeff * signal[:-1]))


def _static_features(audio: AudioBuffer, cfg: FeatureConfig
                     ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Log energy, cepstra and power spectrum for every frame."""
    if audio.sample_rate != cfg.sample_rate:
        raise UnsupportedFormat(
            f"audio at {audio.sample_rate} Hz, features need {cfg.sample_rate} Hz")
    emphasized = _preemphasize(audio.samples, cfg.preemphasis)
    frames = _frames(emphasized, cfg)
    log_energy = np.log(np.maximum((frames ** 2).sum(axis=1), cfg.energy_floor))
    windowed = frames * np.hamming(cfg.window_samples)
    power = (np.abs(np.fft.rfft(windowed, cfg.n_fft)) ** 2) / cfg.n_fft
    mel = power @ mel_filterbank(cfg).T
    logmel = np.log(np.maximum(mel, cfg.energy_floor))
    ceps = dct(logmel, type=2, axis=1, norm="ortho")[:, :cfg.n_ceps]
    return log_energy, ceps, power


def _deltas(x: np.ndarray, half_window: int) -> np.ndarray:
    pad = np.concatenate([x[:1].repeat(half_window, axis=0), x,
                          x[-1:].repeat(half_window, axis=0)])
    num = sum(n * (pad[half_window + n:len(x) + half_window + n]
                   - pad[half_window - n:len(x) + half_window - n])
              for n in range(1, half_window + 1))
    return num / (2.0 * sum(n * n for n in range(1, half_window + 1)))


def apply_cmvn(data: np.ndarray) -> np.ndarray:
    """Zero-mean, unit-variance per dimension over the utterance."""
    mean = data.mean(axis=0)
    std = data.std(axis=0)
    std = np.where(std < 1e-8, 1.0, std)
    return (data - mean) / std


def mfcc(audio: AudioBuffer, cfg: FeatureConfig | None = None) -> FeatureMatrix:
    """39-dimensional MFCCs: 13 static (c0 = log energy), deltas, delta-deltas."""
    cfg = cfg or FeatureConfig()
    log_energy, ceps, _ = _static_features(audio, cfg)
    static = ceps.copy()
    static[:, 0] = log_energy
    d1 = _deltas(static, cfg.delta_window)
    d2 = _deltas(d1, cfg.delta_window)
    data = np.hstack([static, d1, d2])
    if cfg.cmvn:
        data = apply_cmvn(data)
    return FeatureMatrix(data, cfg.fingerprint(f"mfcc{data.shape[1]}"),
                         cfg.hop, len(audio.samples), audio.sample_rate)


def vad_features(audio: AudioBuffer, cfg: FeatureConfig | None = None) -> FeatureMatrix:
    """16-dimensional frame features for voice activity detection.

    Per frame: log energy, zero-crossing rate, normalized spectral
    entropy, and the 13 plain cepstra.  No CMVN here: the classifier
    standardizes with statistics saved at training time, otherwise the
    decision threshold would drift per utterance.
    """
    cfg = cfg or FeatureConfig()
    log_energy, ceps, power = _static_features(audio, cfg)
    raw_frames = _frames(audio.samples, cfg)
    signs = np.sign(raw_frames)
    signs[signs == 0] = 1
    zcr = 0.5 * np.abs(np.diff(signs, axis=1)).mean(axis=1)
    total = power.sum(axis=1, keepdims=True)
    nbins = power.shape[1]
    prob = np.where(total > 0, power / np.maximum(total, 1e-300), 1.0 / nbins)
    entropy = -(prob * np.log(np.maximum(prob, 1e-300))).sum(axis=1) / np.log(nbins)
    data = np.hstack([log_energy[:, None], zcr[:, None], entropy[:, None], ceps])
    return FeatureMatrix(data, cfg.fingerprint(f"vad{data.shape[1]}"),
                         cfg.hop, len(audio.samples), audio.sample_rate)


def write_features(path: str | Path, features: FeatureMatrix | np.ndarray) -> None:
    """Binary export: magic, frame count, dimension, row-major float32."""
    data = features.data if isinstance(features, FeatureMatrix) else features
    data = np.ascontiguousarray(data, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_FEAT_MAGIC)
        fh.write(struct.pack("<II", data.shape[0], data.shape[1]))
        fh.write(data.tobytes())


def read_features(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(len(_FEAT_MAGIC))
        if magic != _FEAT_MAGIC:
            raise CorruptFile(f"{path}: bad magic {magic!r}")
        header = fh.read(8)
        if len(header) != 8:
            raise CorruptFile(f"{path}: truncated header")
        n_frames, dim = struct.unpack("<II", header)
        payload = fh.read()
    expected = n_frames * dim * 4
    if len(payload) != expected:
        raise CorruptFile(
            f"{path}: expected {expected} payload bytes, found {len(payload)}")
    return np.frombuffer(payload, dtype="<f4").reshape(n_frames, dim).astype(np.float64)


__all__ = [
    "AudioBuffer", "FeatureConfig", "FeatureMatrix", "load_wav", "write_wav",
    "mfcc", "vad_features", "mel_filterbank", "apply_cmvn", "frame_count",
    "write_features", "read_features",
]
