"""Embedding extraction over sliding windows, Gaussian statistics, and the
Frechet distance between them, plus binary embedding/stats file formats."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dsp
from .audio_io import AudioClip, CorpusManifest, ingest

PATCH_FRAMES = 96

EMBEDDINGS_MAGIC = b"FADEMB01"
STATS_MAGIC = b"FADSTAT1"


class EmbeddingsFormatError(ValueError):
    """Malformed or truncated embeddings/stats file."""


class IncompatibleStatsError(ValueError):
    """Stats produced by different embedding backends."""


class InvalidStatsError(ValueError):
    """Covariance fails the positive-semidefinite tolerance."""


@dataclass(frozen=True)
class WindowingPolicy:
    """Sliding analysis windows: window_seconds long, one every step_seconds."""

    window_seconds: float = 1.0
    step_seconds: float = 0.5

    def __post_init__(self):
        if not 0 < self.step_seconds <= self.window_seconds:
            raise ValueError("need 0 < step_seconds <= window_seconds")


@dataclass
class LogMelPatch:
    """A fixed 96-frame block of log-mel features plus its start time in the clip."""

    values: np.ndarray
    start_time: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] != PATCH_FRAMES:
            raise ValueError(f"patch must have {PATCH_FRAMES} frames")


@dataclass(frozen=True)
class Embedding:
    values: np.ndarray
    clip_id: str
    window_start: float


def extract_windows(
    clip: AudioClip,
    policy: WindowingPolicy = WindowingPolicy(),
    frontend: dsp.FrontendConfig = dsp.DEFAULT_FRONTEND,
) -> list[LogMelPatch]:
    """Log-mel patches for every full window at 0, step, 2*step, ... seconds."""
    sr = clip.sample_rate
    window = int(round(policy.window_seconds * sr))
    step = max(1, int(round(policy.step_seconds * sr)))
    if len(clip) < window:
        raise dsp.InsufficientInputError(
            f"need at least {policy.window_seconds} s of audio, got {clip.duration_seconds:.3f} s"
        )
    count = (len(clip) - window) // step + 1
    hop = frontend.stft_config(sr).hop_length

    patches = []
    if step % hop == 0:
        # Window starts land on frame boundaries: compute the frontend once and slice.
        features = dsp.log_mel_frontend(clip, frontend)
        for n in range(count):
            first = n * step // hop
            patches.append(LogMelPatch(features[first : first + PATCH_FRAMES], n * step / sr))
    else:
        for n in range(count):
            start = n * step
            piece = AudioClip(clip.samples[start : start + window], sr)
            features = dsp.log_mel_frontend(piece, frontend)
            patches.append(LogMelPatch(features[:PATCH_FRAMES], start / sr))
    return patches


class PatchStatsBackend:
    """Deterministic embedding backend: per-band mean and per-band standard
    deviation across the patch frames, concatenated."""

    def __init__(self, n_bands: int = 64):
        self.id = "patch-stats"
        self.dimension = 2 * n_bands

    def embed(self, patch: LogMelPatch) -> np.ndarray:
        means = patch.values.mean(axis=0)
        stds = patch.values.std(axis=0)
        return np.concatenate([means, stds])


def patch_stats_backend(n_bands: int = 64) -> PatchStatsBackend:
    return PatchStatsBackend(n_bands)


@dataclass
class CorpusEmbeddings:
    """embed_corpus result: embeddings in deterministic order plus skip records."""

    embeddings: list[Embedding] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def matrix(self) -> np.ndarray:
        return np.stack([e.values for e in self.embeddings])

    def summary(self) -> str:
        msg = f"{len(self.embeddings)} embeddings"
        if self.skipped:
            ids = ", ".join(clip_id for clip_id, _ in self.skipped)
            msg += f"; skipped {len(self.skipped)} clip(s): {ids}"
        return msg


def embed_corpus(
    manifest: CorpusManifest,
    backend,
    policy: WindowingPolicy = WindowingPolicy(),
    role: str | None = None,
    frontend: dsp.FrontendConfig = dsp.DEFAULT_FRONTEND,
) -> CorpusEmbeddings:
    """Embed every window of every manifest clip (optionally one role only).

    Unreadable or too-short clips are recorded in .skipped and do not abort.
    Embeddings come back ordered by (clip_id, window_start).
    """
    entries = manifest.entries if role is None else manifest.with_role(role)
    result = CorpusEmbeddings()
    for entry in sorted(entries, key=lambda e: e.clip_id):
        if isinstance(backend, FileBackend):
            try:
                result.embeddings.extend(backend.for_clip(entry.clip_id))
            except LookupError as exc:
                result.skipped.append((entry.clip_id, str(exc)))
            continue
        try:
            clip = ingest(entry.path)
            patches = extract_windows(clip, policy, frontend)
        except Exception as exc:
            result.skipped.append((entry.clip_id, str(exc)))
            continue
        for patch in patches:
            result.embeddings.append(
                Embedding(backend.embed(patch), entry.clip_id, patch.start_time)
            )
    return result


@dataclass
class GaussianStats:
    """Sample mean/covariance summary of an embedding set."""

    mean: np.ndarray
    covariance: np.ndarray
    count: int
    backend_id: str

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.covariance = np.asarray(self.covariance, dtype=np.float64)
        d = self.mean.size
        if self.covariance.shape != (d, d):
            raise ValueError("covariance shape must match mean dimension")
        if self.count < 2:
            raise ValueError("need count >= 2")
        if np.max(np.abs(self.covariance - self.covariance.T), initial=0.0) > 1e-12:
            raise ValueError("covariance must be symmetric")

    @property
    def dimension(self) -> int:
        return self.mean.size


def estimate_gaussian(embeddings, backend_id: str = "unspecified") -> GaussianStats:
    """Fit (mean, unbiased covariance) to an embedding set (>= 2 vectors)."""
    if hasattr(embeddings, "matrix"):
        data = embeddings.matrix() if embeddings.embeddings else np.empty((0, 0))
    elif len(embeddings) and isinstance(embeddings[0], Embedding):
        data = np.stack([e.values for e in embeddings])
    else:
        data = np.asarray(embeddings, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 2:
        raise ValueError("need at least 2 embeddings of uniform dimension")
    mean = data.mean(axis=0)
    centered = data - mean
    cov = centered.T @ centered / (data.shape[0] - 1)
    cov = (cov + cov.T) / 2.0
    return GaussianStats(mean, cov, data.shape[0], backend_id)


def _check_psd(stats: GaussianStats, tolerance: float = 1e-6) -> np.ndarray:
    eigvals, eigvecs = np.linalg.eigh(stats.covariance)
    if eigvals.min(initial=0.0) < -tolerance:
        raise InvalidStatsError(
            f"covariance has eigenvalue {eigvals.min():.3e} below -{tolerance:g}"
        )
    return np.clip(eigvals, 0.0, None), eigvecs


def frechet_distance(a: GaussianStats, b: GaussianStats) -> float:
    """Frechet distance between two Gaussians:
    ||mu_a - mu_b||^2 + tr(Sigma_a) + tr(Sigma_b) - 2 tr((Sigma_a^1/2 Sigma_b Sigma_a^1/2)^1/2).
    """
    if a.dimension != b.dimension:
        raise ValueError(f"dimension mismatch: {a.dimension} vs {b.dimension}")
    eig_a, vec_a = _check_psd(a)
    _check_psd(b)
    sqrt_a = (vec_a * np.sqrt(eig_a)) @ vec_a.T
    inner = sqrt_a @ b.covariance @ sqrt_a
    inner = (inner + inner.T) / 2.0
    inner_eigs = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    mean_diff = a.mean - b.mean
    value = (
        float(mean_diff @ mean_diff)
        + float(np.trace(a.covariance))
        + float(np.trace(b.covariance))
        - 2.0 * float(np.sum(np.sqrt(inner_eigs)))
    )
    return max(value, 0.0)


def fad_score(background: GaussianStats, evaluation: GaussianStats) -> float:
    """Frechet distance between background and evaluation stats (same backend)."""
    if background.backend_id != evaluation.backend_id:
        raise IncompatibleStatsError(
            f"backend mismatch: {background.backend_id!r} vs {evaluation.backend_id!r}"
        )
    return frechet_distance(background, evaluation)


# ---------------------------------------------------------------------------
# Binary file formats

def write_embeddings(path, embeddings: list[Embedding], dimension: int | None = None):
    """Write the embeddings binary format (f32 values, f64 window starts)."""
    if dimension is None:
        if not embeddings:
            raise ValueError("dimension required for an empty embedding set")
        dimension = embeddings[0].values.size
    chunks = [EMBEDDINGS_MAGIC, struct.pack("<II", dimension, len(embeddings))]
    for emb in embeddings:
        if emb.values.size != dimension:
            raise ValueError("inconsistent embedding dimension")
        clip_id = emb.clip_id.encode("utf-8")
        chunks.append(struct.pack("<H", len(clip_id)))
        chunks.append(clip_id)
        chunks.append(struct.pack("<d", emb.window_start))
        chunks.append(np.asarray(emb.values, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks))


class _Cursor:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.blob):
            raise EmbeddingsFormatError("truncated file")
        piece = self.blob[self.pos : self.pos + count]
        self.pos += count
        return piece


def read_embeddings(path) -> list[Embedding]:
    """Read the embeddings binary format; raises EmbeddingsFormatError on damage."""
    cur = _Cursor(Path(path).read_bytes())
    if cur.take(8) != EMBEDDINGS_MAGIC:
        raise EmbeddingsFormatError("bad embeddings magic")
    dimension, count = struct.unpack("<II", cur.take(8))
    embeddings = []
    for _ in range(count):
        (id_len,) = struct.unpack("<H", cur.take(2))
        clip_id = cur.take(id_len).decode("utf-8")
        (window_start,) = struct.unpack("<d", cur.take(8))
        values = np.frombuffer(cur.take(4 * dimension), dtype="<f4").astype(np.float64)
        embeddings.append(Embedding(values, clip_id, window_start))
    return embeddings


class FileBackend:
    """Embeddings loaded from disk, keyed by (clip_id, window_start); stands in
    for a live embedding backend when features were computed elsewhere."""

    def __init__(self, embeddings: list[Embedding], dimension: int, backend_id: str = "file"):
        self.id = backend_id
        self.dimension = dimension
        self._by_key = {(e.clip_id, e.window_start): e for e in embeddings}
        self._by_clip: dict[str, list[Embedding]] = {}
        for emb in sorted(embeddings, key=lambda e: (e.clip_id, e.window_start)):
            self._by_clip.setdefault(emb.clip_id, []).append(emb)

    def lookup(self, clip_id: str, window_start: float) -> np.ndarray:
        key = (clip_id, window_start)
        if key not in self._by_key:
            raise LookupError(f"no stored embedding for {key}")
        return self._by_key[key].values

    def for_clip(self, clip_id: str) -> list[Embedding]:
        if clip_id not in self._by_clip:
            raise LookupError(f"no stored embeddings for clip {clip_id!r}")
        return list(self._by_clip[clip_id])

    def all_embeddings(self) -> list[Embedding]:
        return [e for clip in sorted(self._by_clip) for e in self._by_clip[clip]]


def file_backend(path, backend_id: str = "file") -> FileBackend:
    """Open an embeddings file as a lookup backend (dimension from the header)."""
    cur = _Cursor(Path(path).read_bytes())
    if cur.take(8) != EMBEDDINGS_MAGIC:
        raise EmbeddingsFormatError("bad embeddings magic")
    (dimension,) = struct.unpack("<I", cur.take(4))
    cur.pos = 0
    embeddings = read_embeddings(path)
    for emb in embeddings:
        if emb.values.size != dimension:
            raise EmbeddingsFormatError("embedding dimension mismatch vs header")
    return FileBackend(embeddings, dimension, backend_id)


def write_stats(path, stats: GaussianStats):
    """Write the stats binary format (f64 mean and covariance)."""
    backend_id = stats.backend_id.encode("utf-8")
    chunks = [
        STATS_MAGIC,
        struct.pack("<IQ", stats.dimension, stats.count),
        struct.pack("<H", len(backend_id)),
        backend_id,
        np.asarray(stats.mean, dtype="<f8").tobytes(),
        np.ascontiguousarray(stats.covariance, dtype="<f8").tobytes(),
    ]
    Path(path).write_bytes(b"".join(chunks))


def read_stats(path) -> GaussianStats:
    cur = _Cursor(Path(path).read_bytes())
    if cur.take(8) != STATS_MAGIC:
        raise EmbeddingsFormatError("bad stats magic")
    dimension, count = struct.unpack("<IQ", cur.take(12))
    (id_len,) = struct.unpack("<H", cur.take(2))
    backend_id = cur.take(id_len).decode("utf-8")
    mean = np.frombuffer(cur.take(8 * dimension), dtype="<f8").copy()
    cov = np.frombuffer(cur.take(8 * dimension * dimension), dtype="<f8").copy()
    return GaussianStats(mean, cov.reshape(dimension, dimension), count, backend_id)
