"""WAV loading/saving, resampling, peak normalization, segmentation, corpus manifests.

Everything downstream operates on 16 kHz mono clips; `ingest` is the one-stop
loader that downmixes, resamples and peak-normalizes.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CANONICAL_RATE = 16000

# WAVE format tags we understand.
_TAG_PCM = 0x0001
_TAG_IEEE_FLOAT = 0x0003
_TAG_EXTENSIBLE = 0xFFFE


class WavFormatError(ValueError):
    """Malformed or truncated WAV data."""


class UnsupportedCodecError(WavFormatError):
    """WAV container holds a compressed/non-PCM codec we do not decode."""


@dataclass
class AudioClip:
    """Mono PCM audio: float64 samples nominally in [-1, 1] plus a sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("AudioClip samples must be 1-D (mono)")
        if self.samples.size and not np.all(np.isfinite(self.samples)):
            raise ValueError("AudioClip samples must be finite")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample_rate must be positive")
        self.sample_rate = int(self.sample_rate)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_seconds(self) -> float:
        return self.samples.size / self.sample_rate


def _require(cond: bool, message: str):
    if not cond:
        raise WavFormatError(message)


def _decode_pcm(data: bytes, bits: int) -> np.ndarray:
    if bits == 8:
        # 8-bit WAV is unsigned with a 128 offset.
        raw = np.frombuffer(data, dtype=np.uint8).astype(np.float64)
        return (raw - 128.0) / 128.0
    if bits == 16:
        return np.frombuffer(data, dtype="<i2").astype(np.float64) / 32768.0
    if bits == 24:
        raw = np.frombuffer(data, dtype=np.uint8).reshape(-1, 3).astype(np.int64)
        vals = raw[:, 0] | (raw[:, 1] << 8) | (raw[:, 2] << 16)
        vals = (vals ^ 0x800000) - 0x800000  # sign-extend 24 bits
        return vals.astype(np.float64) / float(1 << 23)
    if bits == 32:
        return np.frombuffer(data, dtype="<i4").astype(np.float64) / float(1 << 31)
    raise WavFormatError(f"unsupported PCM bit depth: {bits}")


def load_wav(path) -> AudioClip:
    """Read a RIFF/WAVE file into a mono AudioClip.

    Accepts integer PCM at 8/16/24/32 bits and 32-bit IEEE float; multichannel
    input is averaged to mono. Raises WavFormatError on malformed containers
    and UnsupportedCodecError for compressed codecs.
    """
    blob = Path(path).read_bytes()
    _require(len(blob) >= 12, "file too short for a RIFF header")
    _require(blob[0:4] == b"RIFF" and blob[8:12] == b"WAVE", "not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(blob):
        chunk_id = blob[pos : pos + 4]
        (size,) = struct.unpack_from("<I", blob, pos + 4)
        body_start = pos + 8
        _require(body_start + size <= len(blob), f"truncated chunk {chunk_id!r}")
        if chunk_id == b"fmt ":
            _require(size >= 16, "fmt chunk too short")
            tag, channels, rate, _, block_align, bits = struct.unpack_from(
                "<HHIIHH", blob, body_start
            )
            if tag == _TAG_EXTENSIBLE:
                _require(size >= 40, "extensible fmt chunk too short")
                (tag,) = struct.unpack_from("<H", blob, body_start + 24)
            fmt = (tag, channels, rate, block_align, bits)
        elif chunk_id == b"data":
            data = blob[body_start : body_start + size]
        pos = body_start + size + (size & 1)  # chunks are word-aligned

    _require(fmt is not None, "missing fmt chunk")
    _require(data is not None, "missing data chunk")
    tag, channels, rate, block_align, bits = fmt
    _require(channels >= 1 and rate >= 1, "bad fmt parameters")

    if tag == _TAG_PCM:
        if bits not in (8, 16, 24, 32):
            raise WavFormatError(f"unsupported PCM bit depth: {bits}")
        decode = lambda b: _decode_pcm(b, bits)
    elif tag == _TAG_IEEE_FLOAT:
        if bits != 32:
            raise WavFormatError(f"unsupported float bit depth: {bits}")
        decode = lambda b: np.frombuffer(b, dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedCodecError(f"unsupported codec (format tag 0x{tag:04x})")

    bytes_per_frame = channels * (bits // 8)
    _require(bytes_per_frame == block_align or block_align == 0, "block alignment mismatch")
    _require(len(data) % bytes_per_frame == 0, "data chunk not frame-aligned")

    samples = decode(data)
    if channels > 1:
        samples = samples.reshape(-1, channels).mean(axis=1)
    samples = np.clip(samples, -1.0, 1.0)
    return AudioClip(samples, rate)


def save_wav(clip: AudioClip, path, bit_depth: int = 16):
    """Write a clip as 16-bit PCM little-endian WAV."""
    if bit_depth != 16:
        raise ValueError("only 16-bit PCM output is supported")
    quantized = np.clip(np.rint(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    data = quantized.tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH", 16, _TAG_PCM, 1, clip.sample_rate, clip.sample_rate * 2, 2, 16
    )
    header += b"data" + struct.pack("<I", len(data))
    Path(path).write_bytes(header + data)


# Windowed-sinc interpolation kernel: 48 zero crossings, Kaiser beta=12
# (~115 dB stopband). The kernel is tabulated at 512 samples per zero crossing
# and linearly interpolated; the table hits the integer zero crossings exactly,
# so same-rate resampling is the identity.
_SINC_ZEROS = 48
_KAISER_BETA = 12.0
_TABLE_PER_CROSSING = 512


def _build_sinc_table() -> np.ndarray:
    u = np.arange(_SINC_ZEROS * _TABLE_PER_CROSSING + 2) / _TABLE_PER_CROSSING
    window = np.zeros_like(u)
    inside = u < _SINC_ZEROS
    window[inside] = np.i0(_KAISER_BETA * np.sqrt(1.0 - (u[inside] / _SINC_ZEROS) ** 2))
    window /= np.i0(_KAISER_BETA)
    return np.sinc(u) * window


_SINC_TABLE = _build_sinc_table()


def _kernel_lookup(u: np.ndarray) -> np.ndarray:
    """Windowed sinc at |u| (in zero-crossing units) via table interpolation."""
    pos = np.abs(u) * _TABLE_PER_CROSSING
    idx = np.minimum(pos.astype(np.int64), _SINC_TABLE.size - 2)
    frac = pos - idx
    return np.where(
        np.abs(u) < _SINC_ZEROS,
        _SINC_TABLE[idx] * (1.0 - frac) + _SINC_TABLE[idx + 1] * frac,
        0.0,
    )


def _sinc_resample(x: np.ndarray, ratio: float, out_len: int) -> np.ndarray:
    """Band-limited interpolation: out[n] ~= x(n / ratio), anti-aliased."""
    if out_len == 0 or x.size == 0:
        return np.zeros(out_len)
    cutoff = min(1.0, ratio)
    half = _SINC_ZEROS / cutoff
    width = int(2 * half) + 2
    pad = width + 2
    padded = np.pad(x, (pad, pad))
    out = np.empty(out_len)
    block = max(1, (1 << 21) // width)
    offsets = np.arange(width)
    for start in range(0, out_len, block):
        stop = min(start + block, out_len)
        t = np.arange(start, stop) / ratio
        k0 = np.ceil(t - half).astype(np.int64)
        idx = k0[:, None] + offsets[None, :]
        kernel = cutoff * _kernel_lookup(cutoff * (idx - t[:, None]))
        out[start:stop] = np.einsum("ij,ij->i", padded[idx + pad], kernel)
    return out


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Resample with a windowed-sinc kernel; output length round(n * target/input)."""
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == clip.sample_rate:
        return AudioClip(clip.samples.copy(), clip.sample_rate)
    ratio = target_rate / clip.sample_rate
    out_len = int(round(len(clip) * ratio))
    return AudioClip(_sinc_resample(clip.samples, ratio, out_len), target_rate)


def normalize_peak(clip: AudioClip) -> AudioClip:
    """Scale so max |sample| == 1; all-zero clips pass through unchanged."""
    peak = np.max(np.abs(clip.samples)) if len(clip) else 0.0
    if peak == 0.0:
        return AudioClip(clip.samples.copy(), clip.sample_rate)
    return AudioClip(clip.samples / peak, clip.sample_rate)


def segment(clip: AudioClip, segment_seconds: float) -> list[AudioClip]:
    """Split into consecutive non-overlapping segments; a short tail is dropped."""
    if segment_seconds <= 0:
        raise ValueError("segment_seconds must be positive")
    seg_len = max(1, int(round(segment_seconds * clip.sample_rate)))
    count = len(clip) // seg_len
    return [
        AudioClip(clip.samples[i * seg_len : (i + 1) * seg_len].copy(), clip.sample_rate)
        for i in range(count)
    ]


def ingest(path, target_rate: int = CANONICAL_RATE, normalize: bool = True) -> AudioClip:
    """Load a WAV and put it in canonical form: mono, target rate, peak-normalized."""
    clip = load_wav(path)
    if clip.sample_rate != target_rate:
        clip = resample(clip, target_rate)
    return normalize_peak(clip) if normalize else clip


MANIFEST_ROLES = ("background", "evaluation")


@dataclass(frozen=True)
class ManifestEntry:
    clip_id: str
    path: str
    role: str


@dataclass
class CorpusManifest:
    """Corpus description: unique clip ids, file paths, background/evaluation roles."""

    entries: list[ManifestEntry] = field(default_factory=list)
    clip_seconds: float | None = None

    def __post_init__(self):
        seen = set()
        for entry in self.entries:
            if entry.role not in MANIFEST_ROLES:
                raise ValueError(f"bad role {entry.role!r} for clip {entry.clip_id!r}")
            if entry.clip_id in seen:
                raise ValueError(f"duplicate clip_id {entry.clip_id!r}")
            seen.add(entry.clip_id)

    def with_role(self, role: str) -> list[ManifestEntry]:
        if role not in MANIFEST_ROLES:
            raise ValueError(f"bad role {role!r}")
        return [e for e in self.entries if e.role == role]

    @classmethod
    def load(cls, path) -> "CorpusManifest":
        """Read a `clip_id,path,role` CSV; relative paths resolve against the CSV's directory."""
        base = Path(path).parent
        entries = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            required = {"clip_id", "path", "role"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise ValueError(f"manifest needs columns {sorted(required)}, got {reader.fieldnames}")
            for row in reader:
                file_path = Path(row["path"])
                if not file_path.is_absolute():
                    file_path = base / file_path
                entries.append(ManifestEntry(row["clip_id"], str(file_path), row["role"]))
        return cls(entries)

    def save(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["clip_id", "path", "role"])
            for entry in self.entries:
                writer.writerow([entry.clip_id, entry.path, entry.role])
