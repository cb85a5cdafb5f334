"""Seeded synthetic music-like clips and corpora for demos and tests."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .audio_io import AudioClip, CorpusManifest, ManifestEntry, normalize_peak, save_wav
from .dsp import butterworth_filter

CANONICAL_RATE = 16000


def synthetic_music_clip(seed: int, seconds: float = 5.0, sample_rate: int = CANONICAL_RATE) -> AudioClip:
    """A deterministic music-like clip: a few harmonic tone stacks with slow
    amplitude movement over band-limited noise."""
    rng = np.random.default_rng(seed)
    n = int(round(seconds * sample_rate))
    t = np.arange(n) / sample_rate
    mix = np.zeros(n)

    for _ in range(rng.integers(3, 6)):
        fundamental = np.exp(rng.uniform(np.log(80.0), np.log(600.0)))
        level = rng.uniform(0.3, 1.0)
        lfo_rate = rng.uniform(0.1, 1.0)
        lfo_phase = rng.uniform(0, 2 * np.pi)
        envelope = 0.55 + 0.45 * np.sin(2 * np.pi * lfo_rate * t + lfo_phase)
        for harmonic in range(1, 6):
            freq = fundamental * harmonic
            if freq >= sample_rate / 2:
                break
            amp = level / harmonic**1.2
            mix += amp * envelope * np.sin(2 * np.pi * freq * t + rng.uniform(0, 2 * np.pi))

    noise = rng.normal(0.0, 1.0, n)
    noise = butterworth_filter(AudioClip(noise / 6.0, sample_rate), "lowpass", 4000.0).samples
    mix += 0.12 * np.max(np.abs(mix)) * noise / max(np.max(np.abs(noise)), 1e-12)
    return normalize_peak(AudioClip(mix, sample_rate))


def build_synthetic_corpus(
    directory,
    n_background: int,
    n_evaluation: int,
    seconds: float = 5.0,
    seed: int = 0,
    sample_rate: int = CANONICAL_RATE,
) -> CorpusManifest:
    """Write a synthetic corpus (WAVs plus manifest.csv) and return its manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(n_background):
        name = f"bg_{i:04d}.wav"
        save_wav(synthetic_music_clip(seed + i, seconds, sample_rate), directory / name)
        entries.append(ManifestEntry(f"bg_{i:04d}", str(directory / name), "background"))
    for i in range(n_evaluation):
        name = f"ev_{i:04d}.wav"
        save_wav(
            synthetic_music_clip(seed + 100000 + i, seconds, sample_rate), directory / name
        )
        entries.append(ManifestEntry(f"ev_{i:04d}", str(directory / name), "evaluation"))
    manifest = CorpusManifest(entries, clip_seconds=seconds)
    manifest.save(directory / "manifest.csv")
    return manifest
