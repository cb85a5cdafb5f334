"""Spectral analysis/synthesis: STFT/ISTFT, mel filterbanks, the log-mel frontend,
Griffin-Lim phase reconstruction, phase-vocoder time stretching, Butterworth filters."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import signal as sps

from .audio_io import AudioClip


class InsufficientInputError(ValueError):
    """Input shorter than one analysis window."""


@dataclass(frozen=True)
class StftConfig:
    window_length: int
    hop_length: int
    fft_length: int

    def __post_init__(self):
        if not (0 < self.hop_length <= self.window_length <= self.fft_length):
            raise ValueError("need 0 < hop_length <= window_length <= fft_length")

    @property
    def num_bins(self) -> int:
        return self.fft_length // 2 + 1

    @property
    def is_cola(self) -> bool:
        """Hop divides the window evenly (constant-overlap-add for Hann)."""
        return self.window_length % self.hop_length == 0


# Analysis/synthesis config used by the spectrogram-domain distortions:
# 64 ms window, 4x overlap at 16 kHz.
DISTORTION_STFT = StftConfig(window_length=1024, hop_length=256, fft_length=1024)


@dataclass
class Spectrogram:
    """One-sided complex STFT: frames is (num_frames, fft_length//2 + 1)."""

    frames: np.ndarray
    config: StftConfig
    sample_rate: int

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.complex128)
        if self.frames.ndim != 2 or self.frames.shape[1] != self.config.num_bins:
            raise ValueError("frames shape inconsistent with config")
        if self.frames.size and not np.all(np.isfinite(self.frames)):
            raise ValueError("spectrogram entries must be finite")

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.frames)


def hann_periodic(length: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(length) / length)


def frame_count(num_samples: int, config: StftConfig) -> int:
    if num_samples < config.window_length:
        raise InsufficientInputError(
            f"need at least {config.window_length} samples, got {num_samples}"
        )
    return (num_samples - config.window_length) // config.hop_length + 1


def _stft_array(x: np.ndarray, config: StftConfig) -> np.ndarray:
    n_frames = frame_count(x.size, config)
    frames = np.lib.stride_tricks.sliding_window_view(x, config.window_length)
    frames = frames[:: config.hop_length][:n_frames]
    windowed = frames * hann_periodic(config.window_length)
    return np.fft.rfft(windowed, n=config.fft_length, axis=1)


def stft(clip: AudioClip, config: StftConfig) -> Spectrogram:
    """Hann-windowed one-sided STFT; frame t covers samples [t*hop, t*hop + window)."""
    return Spectrogram(_stft_array(clip.samples, config), config, clip.sample_rate)


def _istft_array(frames: np.ndarray, config: StftConfig) -> np.ndarray:
    n_frames = frames.shape[0]
    window = hann_periodic(config.window_length)
    out_len = (n_frames - 1) * config.hop_length + config.window_length
    acc = np.zeros(out_len)
    envelope = np.zeros(out_len)
    time_frames = np.fft.irfft(frames, n=config.fft_length, axis=1)[:, : config.window_length]
    weighted = time_frames * window
    for t in range(n_frames):
        start = t * config.hop_length
        acc[start : start + config.window_length] += weighted[t]
        envelope[start : start + config.window_length] += window**2
    # Clamp the divisor at 5% of full overlap: partial-coverage edge samples are
    # attenuated rather than amplified, which keeps inconsistent spectrograms
    # (Griffin-Lim, phase vocoder) from blowing up at the clip boundaries while
    # leaving the fully-overlapped interior exact.
    floor = 0.05 * envelope.max() if envelope.size else 0.0
    return np.divide(acc, np.maximum(envelope, floor), out=np.zeros_like(acc), where=envelope > 0)


def istft(spec: Spectrogram) -> AudioClip:
    """Weighted overlap-add inverse; exact on STFT-consistent input wherever the
    window-square envelope is nonzero (the COLA-valid interior in particular)."""
    return AudioClip(_istft_array(spec.frames, spec.config), spec.sample_rate)


def hz_to_mel(freq_hz):
    return 2595.0 * np.log10(1.0 + np.asarray(freq_hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


@dataclass
class MelFilterbank:
    """Triangular mel filters sampled on the FFT bin grid, rows ordered by center frequency."""

    weights: np.ndarray  # (n_mels, num_bins)
    f_min: float
    f_max: float
    n_mels: int

    def apply(self, magnitude: np.ndarray) -> np.ndarray:
        """Project a (frames, bins) magnitude array onto the mel bands."""
        return magnitude @ self.weights.T


def mel_filterbank(
    n_mels: int, f_min: float, f_max: float, config: StftConfig, sample_rate: int
) -> MelFilterbank:
    """Build triangular filters with centers uniform on the HTK mel scale."""
    if not (0 <= f_min < f_max <= sample_rate / 2):
        raise ValueError("need 0 <= f_min < f_max <= sample_rate/2")
    if n_mels < 1:
        raise ValueError("n_mels must be >= 1")
    bin_freqs = np.arange(config.num_bins) * sample_rate / config.fft_length
    bin_mels = hz_to_mel(bin_freqs)
    edges = np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2)
    lower, center, upper = edges[:-2], edges[1:-1], edges[2:]
    up_slope = (bin_mels[None, :] - lower[:, None]) / (center - lower)[:, None]
    down_slope = (upper[:, None] - bin_mels[None, :]) / (upper - center)[:, None]
    weights = np.maximum(0.0, np.minimum(up_slope, down_slope))
    # Very narrow triangles can miss every bin center; keep each filter alive by
    # assigning the bin nearest its center so the row sum stays positive.
    empty = weights.sum(axis=1) == 0.0
    if np.any(empty):
        nearest = np.argmin(np.abs(bin_freqs[None, :] - mel_to_hz(center)[:, None]), axis=1)
        weights[empty, nearest[empty]] = 1.0
    return MelFilterbank(weights, float(f_min), float(f_max), int(n_mels))


@dataclass(frozen=True)
class FrontendConfig:
    """Log-mel frontend parameters (the canonical 25 ms / 10 ms / 64-band setup)."""

    window_seconds: float = 0.025
    hop_seconds: float = 0.010
    n_mels: int = 64
    f_min: float = 125.0
    f_max: float = 7500.0
    log_offset: float = 0.01

    def stft_config(self, sample_rate: int) -> StftConfig:
        window = int(round(self.window_seconds * sample_rate))
        hop = int(round(self.hop_seconds * sample_rate))
        fft = 1 << max(0, int(np.ceil(np.log2(window))))
        return StftConfig(window, hop, fft)


DEFAULT_FRONTEND = FrontendConfig()


def load_frontend_config(path) -> FrontendConfig:
    """Parse `key=value` lines into a FrontendConfig; unknown keys are rejected."""
    config = FrontendConfig()
    int_fields = {"n_mels"}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            if not sep or not hasattr(config, key):
                raise ValueError(f"bad frontend config line: {line!r}")
            parsed = int(value) if key in int_fields else float(value)
            config = replace(config, **{key: parsed})
    return config


def log_mel_frontend(clip: AudioClip, config: FrontendConfig = DEFAULT_FRONTEND) -> np.ndarray:
    """Per-frame log-mel features: |STFT| -> mel projection -> log(mel + offset).

    Returns a (frames, n_mels) array. Raises InsufficientInputError for clips
    shorter than one analysis window.
    """
    stft_config = config.stft_config(clip.sample_rate)
    magnitude = np.abs(_stft_array(clip.samples, stft_config))
    bank = mel_filterbank(config.n_mels, config.f_min, config.f_max, stft_config, clip.sample_rate)
    return np.log(bank.apply(magnitude) + config.log_offset)


def spectral_convergence(reconstructed: np.ndarray, target_magnitude: np.ndarray) -> float:
    """||  |STFT(x)| - M ||_F / || M ||_F for a reconstruction against its target."""
    denom = np.linalg.norm(target_magnitude)
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(np.abs(reconstructed) - target_magnitude) / denom)


def griffin_lim(
    magnitude: np.ndarray,
    config: StftConfig,
    sample_rate: int,
    iterations: int,
    init: str = "random",
    seed: int = 0,
) -> AudioClip:
    """Iterative phase reconstruction from a magnitude spectrogram.

    init="zero" starts from zero phase; init="random" from seeded uniform phase.
    iterations=0 returns the plain inverse of the phase-initialized spectrogram.
    """
    magnitude = np.asarray(magnitude, dtype=np.float64)
    if magnitude.ndim != 2 or magnitude.shape[1] != config.num_bins:
        raise ValueError("magnitude shape inconsistent with config")
    if np.any(magnitude < 0):
        raise ValueError("magnitude entries must be nonnegative")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    if init == "zero":
        phase = np.zeros_like(magnitude)
    elif init == "random":
        rng = np.random.Generator(np.random.Philox(seed))
        phase = rng.uniform(-np.pi, np.pi, size=magnitude.shape)
    else:
        raise ValueError(f"unknown init {init!r}")

    x = _istft_array(magnitude * np.exp(1j * phase), config)
    for _ in range(iterations):
        phase = np.angle(_stft_array(x, config))
        x = _istft_array(magnitude * np.exp(1j * phase), config)
    return AudioClip(x, sample_rate)


def phase_vocoder_stretch(
    clip: AudioClip, factor: float, config: StftConfig = DISTORTION_STFT
) -> AudioClip:
    """Time-stretch by `factor` (output duration = factor * input duration)
    with classic per-bin phase propagation, preserving pitch."""
    if factor <= 0:
        raise ValueError("factor must be positive")
    spec = _stft_array(clip.samples, config)
    n_frames = spec.shape[0]
    out_len = int(round(len(clip) * factor))
    n_out = max(1, int(round((out_len - config.window_length) / config.hop_length)) + 1)

    padded = np.vstack([spec, np.zeros((1, spec.shape[1]), dtype=spec.dtype)])
    magnitudes = np.abs(padded)
    phases = np.angle(padded)
    omega = 2.0 * np.pi * config.hop_length * np.arange(config.num_bins) / config.fft_length

    steps = np.arange(n_out) / factor
    idx = np.minimum(np.floor(steps).astype(np.int64), n_frames - 1)
    frac = np.clip(steps - idx, 0.0, 1.0)[:, None]
    mags = (1.0 - frac) * magnitudes[idx] + frac * magnitudes[idx + 1]
    # Instantaneous frequency per bin: nominal advance plus the wrapped deviation
    # observed between the bracketing analysis frames.
    deviation = phases[idx + 1] - phases[idx] - omega
    deviation -= 2.0 * np.pi * np.round(deviation / (2.0 * np.pi))
    advance = omega + deviation
    accumulated = phases[0] + np.vstack([np.zeros(config.num_bins), np.cumsum(advance[:-1], axis=0)])
    samples = _istft_array(mags * np.exp(1j * accumulated), config)
    if samples.size >= out_len:
        samples = samples[:out_len]
    else:
        samples = np.pad(samples, (0, out_len - samples.size))
    return AudioClip(samples, clip.sample_rate)


def butterworth_filter(clip: AudioClip, kind: str, cutoff: float, order: int = 5) -> AudioClip:
    """Causal Butterworth low/high-pass (forward-only second-order sections)."""
    if kind not in ("lowpass", "highpass"):
        raise ValueError(f"kind must be 'lowpass' or 'highpass', got {kind!r}")
    if not (0 < cutoff < clip.sample_rate / 2):
        raise ValueError("cutoff must lie in (0, sample_rate/2)")
    sos = sps.butter(order, cutoff, btype=kind, fs=clip.sample_rate, output="sos")
    return AudioClip(sps.sosfilt(sos, clip.samples), clip.sample_rate)
