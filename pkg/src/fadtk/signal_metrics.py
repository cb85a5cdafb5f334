"""Full-reference signal metrics: filter-invariant SDR, scale-invariant SDR,
cosine distance, and STFT magnitude L2 distance."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz
from scipy.signal import fftconvolve

from . import dsp
from .audio_io import AudioClip

# Residual-to-target energy ratio below which the SDR is reported as infinite.
_RESIDUAL_FLOOR = 1e-20
# Numeric stand-in for +inf dB in CSV output.
INF_DB_SENTINEL = 300.0


class UndefinedMetricError(ValueError):
    """Metric undefined for this input (zero reference or zero norm)."""


def encode_db(value: float) -> float:
    """Map +inf dB to the CSV sentinel so reports stay numeric."""
    return INF_DB_SENTINEL if math.isinf(value) else value


def _aligned(reference: AudioClip, estimate: AudioClip) -> tuple[np.ndarray, np.ndarray]:
    """Tail-truncate or zero-pad the estimate to the reference length."""
    if reference.sample_rate != estimate.sample_rate:
        raise ValueError("sample rates must match")
    ref = reference.samples
    est = estimate.samples
    if est.size > ref.size:
        est = est[: ref.size]
    elif est.size < ref.size:
        est = np.pad(est, (0, ref.size - est.size))
    return ref, est


def _ratio_db(target_energy: float, residual_energy: float) -> float:
    if residual_energy < _RESIDUAL_FLOOR * target_energy:
        return math.inf
    return 10.0 * math.log10(target_energy / residual_energy)


def _project_delayed(ref: np.ndarray, est: np.ndarray, taps: int) -> np.ndarray:
    """Least-squares projection of est onto span{ref delayed by 0..taps-1},
    restricted to the reference's support (the first len(ref) samples)."""
    n = ref.size
    taps = min(taps, n)
    nfft = 1 << int(np.ceil(np.log2(n + taps)))
    ref_f = np.fft.rfft(ref, nfft)
    est_f = np.fft.rfft(est, nfft)
    auto = np.fft.irfft(ref_f * np.conj(ref_f), nfft)[:taps]
    cross = np.fft.irfft(np.conj(ref_f) * est_f, nfft)[:taps]

    gram = toeplitz(auto)
    if taps > 1:
        # The Toeplitz form counts overlap beyond sample n-1; subtract that
        # boundary contribution so the projection lives on [0, n).
        ii = np.arange(taps)[:, None]
        tt = np.arange(taps - 1)[None, :]
        idx = n + tt - ii
        valid = (idx >= 0) & (idx < n)
        tail = np.where(valid, ref[np.clip(idx, 0, n - 1)], 0.0)
        gram -= tail @ tail.T

    try:
        coeffs = np.linalg.solve(gram, cross)
        if not np.all(np.isfinite(coeffs)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        coeffs = np.linalg.lstsq(gram, cross, rcond=None)[0]
    return fftconvolve(ref, coeffs)[:n]


def sdr(reference: AudioClip, estimate: AudioClip, filter_taps: int = 512) -> float:
    """Signal-to-distortion ratio in dB, allowing a time-invariant filter of up
    to filter_taps samples on the reference. Returns +inf for a zero residual."""
    if filter_taps < 1:
        raise ValueError("filter_taps must be >= 1")
    ref, est = _aligned(reference, estimate)
    if not np.any(ref):
        raise UndefinedMetricError("SDR undefined for an all-zero reference")
    target = _project_delayed(ref, est, filter_taps)
    residual = est - target
    return _ratio_db(float(target @ target), float(residual @ residual))


def si_sdr(reference: AudioClip, estimate: AudioClip) -> float:
    """Scale-invariant SDR in dB: projection onto the scaled reference only."""
    ref, est = _aligned(reference, estimate)
    ref_energy = float(ref @ ref)
    if ref_energy == 0.0:
        raise UndefinedMetricError("SI-SDR undefined for an all-zero reference")
    target = (float(est @ ref) / ref_energy) * ref
    residual = est - target
    return _ratio_db(float(target @ target), float(residual @ residual))


def cosine_distance(reference: AudioClip, estimate: AudioClip) -> float:
    """1 - cosine similarity; 0 for identical direction, 2 for opposite."""
    ref, est = _aligned(reference, estimate)
    ref_norm = np.linalg.norm(ref)
    est_norm = np.linalg.norm(est)
    if ref_norm == 0.0 or est_norm == 0.0:
        raise UndefinedMetricError("cosine distance undefined for a zero-norm signal")
    return float(1.0 - (ref @ est) / (ref_norm * est_norm))


def magnitude_l2(
    reference: AudioClip, estimate: AudioClip, config: dsp.StftConfig = dsp.DISTORTION_STFT
) -> float:
    """Frobenius distance between STFT magnitudes, normalized by the reference's."""
    ref, est = _aligned(reference, estimate)
    ref_mag = np.abs(dsp._stft_array(ref, config))
    est_mag = np.abs(dsp._stft_array(est, config))
    ref_norm = np.linalg.norm(ref_mag)
    if ref_norm == 0.0:
        raise UndefinedMetricError("magnitude L2 undefined for an all-zero reference")
    return float(np.linalg.norm(est_mag - ref_mag) / ref_norm)


@dataclass(frozen=True)
class MetricReport:
    clip_id: str
    sdr_db: float
    si_sdr_db: float
    cosine_distance: float
    magnitude_l2: float


def measure_pair(
    clip_id: str,
    reference: AudioClip,
    estimate: AudioClip,
    filter_taps: int = 512,
    config: dsp.StftConfig = dsp.DISTORTION_STFT,
) -> MetricReport:
    """All four metrics for one (clean, distorted) pair."""
    return MetricReport(
        clip_id=clip_id,
        sdr_db=sdr(reference, estimate, filter_taps),
        si_sdr_db=si_sdr(reference, estimate),
        cosine_distance=cosine_distance(reference, estimate),
        magnitude_l2=magnitude_l2(reference, estimate, config),
    )
