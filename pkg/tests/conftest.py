import numpy as np
import pytest

from fadtk.audio_io import AudioClip


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_clip(rng):
    return AudioClip(rng.uniform(-1.0, 1.0, 16000), 16000)


def sine_clip(freq_hz: float, seconds: float, sample_rate: int = 16000, amp: float = 0.9) -> AudioClip:
    t = np.arange(int(round(seconds * sample_rate))) / sample_rate
    return AudioClip(amp * np.sin(2 * np.pi * freq_hz * t), sample_rate)
