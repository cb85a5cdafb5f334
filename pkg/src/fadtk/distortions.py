"""Parametric audio distortions: seeded, pure clip-to-clip transforms plus the
built-in parameter sweep grid and batch sweep runner."""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType

import numpy as np

from . import dsp
from .audio_io import AudioClip, CorpusManifest, ingest, normalize_peak, save_wav, _sinc_resample


class DistortionSpecError(ValueError):
    """Unknown family or wrong parameter set for a distortion spec."""


# family -> required parameter names, in canonical emission order
REQUIRED_PARAMS = MappingProxyType(
    {
        "gaussian_noise": ("stddev",),
        "pops": ("percentage",),
        "lowpass": ("critical_freq",),
        "highpass": ("critical_freq",),
        "quantization": ("bits",),
        "griffin_lim": ("iterations",),
        "griffin_lim_zero": ("iterations",),
        "mel_wide": ("num_bands",),
        "mel_narrow": ("num_bands",),
        "speed": ("factor",),
        "speed_pp": ("factor",),
        "pitch": ("semitones",),
        "reverb": ("dampening", "delay", "echos"),
    }
)

_INT_PARAMS = frozenset({"bits", "iterations", "num_bands", "echos"})

FAMILIES = tuple(REQUIRED_PARAMS)


def _format_value(name: str, value) -> str:
    if name in _INT_PARAMS:
        return str(int(value))
    return f"{float(value):.12g}"


@dataclass(frozen=True)
class DistortionSpec:
    """A distortion family plus its parameter configuration and RNG seed."""

    family: str
    params: dict
    seed: int = 0

    def __post_init__(self):
        if self.family not in REQUIRED_PARAMS:
            raise DistortionSpecError(f"unknown distortion family {self.family!r}")
        required = set(REQUIRED_PARAMS[self.family])
        given = set(self.params)
        if given != required:
            raise DistortionSpecError(
                f"{self.family} needs params {sorted(required)}, got {sorted(given)}"
            )
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))

    def params_string(self) -> str:
        """Canonical `name=value;...` form, keys in family order."""
        return ";".join(
            f"{name}={_format_value(name, self.params[name])}"
            for name in REQUIRED_PARAMS[self.family]
        )

    def label(self) -> str:
        return f"{self.family}({self.params_string()})"


def _parse_param_value(name: str, text: str):
    return int(text) if name in _INT_PARAMS else float(text)


def parse_params(text: str) -> dict:
    """Parse `name=value;name=value` into a typed parameter dict."""
    params = {}
    if text:
        for item in text.split(";"):
            name, sep, value = item.partition("=")
            if not sep:
                raise DistortionSpecError(f"bad parameter item {item!r}")
            params[name.strip()] = _parse_param_value(name.strip(), value.strip())
    return params


def _rng(seed: int) -> np.random.Generator:
    # Counter-based generator: per-call streams depend only on the seed, so
    # results are identical under any parallel execution order.
    return np.random.Generator(np.random.Philox(seed))


def _gaussian_noise(x: np.ndarray, sr: int, stddev: float, seed: int) -> np.ndarray:
    if stddev < 0:
        raise DistortionSpecError("stddev must be >= 0")
    if stddev == 0:
        return x.copy()
    return x + _rng(seed).normal(0.0, stddev, size=x.size)


def _pops(x: np.ndarray, sr: int, percentage: float, seed: int) -> np.ndarray:
    if not 0 <= percentage <= 100:
        raise DistortionSpecError("percentage must be in [0, 100]")
    count = int(round(percentage / 100.0 * x.size))
    out = x.copy()
    if count == 0:
        return out
    idx = _rng(seed).choice(x.size, size=count, replace=False)
    n_pos = (count + 1) // 2  # odd count: the extra pop goes to +1
    out[idx[:n_pos]] = 1.0
    out[idx[n_pos:]] = -1.0
    return out


def _quantize(x: np.ndarray, bits: int) -> np.ndarray:
    if bits < 1:
        raise DistortionSpecError("bits must be >= 1")
    scale = float(1 << (bits - 1))
    return np.clip(np.rint(x * scale) / scale, -1.0, 1.0 - 1.0 / scale)


def _griffin_lim(clip: AudioClip, iterations: int, zero_init: bool, seed: int) -> AudioClip:
    spec = dsp.stft(clip, dsp.DISTORTION_STFT)
    return dsp.griffin_lim(
        spec.magnitude,
        dsp.DISTORTION_STFT,
        clip.sample_rate,
        iterations=int(iterations),
        init="zero" if zero_init else "random",
        seed=seed,
    )


def _mel_roundtrip(clip: AudioClip, num_bands: int, narrow: bool) -> AudioClip:
    config = dsp.DISTORTION_STFT
    if narrow:
        f_min, f_max = 60.0, 6000.0
    else:
        f_min, f_max = 0.0, clip.sample_rate / 2.0
    bank = dsp.mel_filterbank(int(num_bands), f_min, f_max, config, clip.sample_rate)
    spec = dsp.stft(clip, config)
    mel = bank.apply(spec.magnitude)
    back = np.maximum(mel @ np.linalg.pinv(bank.weights).T, 0.0)
    # Recombine the band-limited magnitude with the original phase.
    phase = np.angle(spec.frames)
    return dsp.istft(dsp.Spectrogram(back * np.exp(1j * phase), config, clip.sample_rate))


def _speed(clip: AudioClip, factor: float) -> AudioClip:
    if factor <= 0:
        raise DistortionSpecError("factor must be positive")
    out_len = int(round(len(clip) * factor))
    resampled = _sinc_resample(clip.samples, factor, out_len)
    return AudioClip(resampled, clip.sample_rate)  # played back at the original rate


def _pitch(clip: AudioClip, semitones: float) -> AudioClip:
    ratio = 2.0 ** (semitones / 12.0)
    shifted_len = max(1, int(round(len(clip) / ratio)))
    shifted = AudioClip(_sinc_resample(clip.samples, 1.0 / ratio, shifted_len), clip.sample_rate)
    return dsp.phase_vocoder_stretch(shifted, len(clip) / shifted_len)


def _reverb(x: np.ndarray, sr: int, dampening: float, delay: float, echos: int) -> np.ndarray:
    if not 0 <= dampening <= 1:
        raise DistortionSpecError("dampening must be in [0, 1]")
    if delay <= 0 or echos < 0:
        raise DistortionSpecError("delay must be > 0 and echos >= 0")
    out = x.copy()
    step = int(round(delay * sr))
    for k in range(1, int(echos) + 1):
        shift = k * step
        if shift >= x.size or dampening == 0.0:
            break
        out[shift:] += dampening**k * x[: x.size - shift]
    return out


def apply_distortion(clip: AudioClip, spec: DistortionSpec) -> AudioClip:
    """Apply a distortion to a clip; input and output are peak-normalized.

    Deterministic given (clip, spec): all randomness comes from spec.seed.
    """
    clip = normalize_peak(clip)
    x = clip.samples
    sr = clip.sample_rate
    p = spec.params
    family = spec.family

    if family == "gaussian_noise":
        out = AudioClip(_gaussian_noise(x, sr, p["stddev"], spec.seed), sr)
    elif family == "pops":
        out = AudioClip(_pops(x, sr, p["percentage"], spec.seed), sr)
    elif family in ("lowpass", "highpass"):
        out = dsp.butterworth_filter(clip, family, p["critical_freq"])
    elif family == "quantization":
        out = AudioClip(_quantize(x, int(p["bits"])), sr)
    elif family in ("griffin_lim", "griffin_lim_zero"):
        out = _griffin_lim(clip, p["iterations"], family == "griffin_lim_zero", spec.seed)
    elif family in ("mel_wide", "mel_narrow"):
        out = _mel_roundtrip(clip, p["num_bands"], family == "mel_narrow")
    elif family == "speed":
        out = _speed(clip, p["factor"])
    elif family == "speed_pp":
        out = dsp.phase_vocoder_stretch(clip, p["factor"])
    elif family == "pitch":
        out = _pitch(clip, p["semitones"])
    elif family == "reverb":
        out = AudioClip(_reverb(x, sr, p["dampening"], p["delay"], int(p["echos"])), sr)
    else:  # unreachable: spec construction validates the family
        raise DistortionSpecError(f"unknown distortion family {family!r}")

    return normalize_peak(out)


@dataclass
class SweepGrid:
    """An ordered list of distortion specs to sweep over."""

    entries: list[DistortionSpec]
    source: str = "user"

    def __post_init__(self):
        if not self.entries:
            raise ValueError("sweep grid must be nonempty")


_SLOW_FACTORS = (1.01, 1.02, 1.05, 1.1, 1.2, 1.3, 1.5, 1.7, 2.0, 2.5, 3.0, 4.0, 5.0)
_FAST_FACTORS = (0.99, 0.98, 0.95, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.2, 0.1)
_SEMITONES = (0.05, 0.1, 0.15, 0.2, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0)
_DAMPENINGS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
_REVERB_VARIANTS = ((1.0, 3), (0.5, 3), (0.25, 3), (0.25, 5))  # (delay seconds, echos)
_NOISE_LEVELS = (0.0001, 0.00031, 0.001, 0.0031, 0.01, 0.031, 0.1, 0.31)
_POP_PERCENTAGES = _NOISE_LEVELS
# Sweep cutoffs plus the listening-study lowpass at 5000 Hz.
_LOWPASS_CUTOFFS = (5000.0, 4000.0, 3000.0, 2000.0, 1500.0, 1000.0, 750.0, 500.0, 400.0, 300.0)
_HIGHPASS_CUTOFFS = (200.0, 300.0, 400.0, 500.0, 750.0, 1000.0, 1500.0, 2000.0, 3000.0, 4000.0)
_QUANTIZATION_BITS = (9, 8, 7, 6, 5, 4, 3, 2)
_GRIFFIN_ITERATIONS = (500, 200, 100, 50, 20, 10, 5, 1)
_MEL_WIDE_BANDS = (264, 128, 64, 32)
_MEL_NARROW_BANDS = (264, 128, 64, 32, 16, 8)


def builtin_grid(base_seed: int = 0) -> SweepGrid:
    """The built-in sweep: every examined (family, parameter value) combination.

    Per-entry seeds are base_seed + position, so the grid is fully deterministic
    given base_seed.
    """
    raw: list[tuple[str, dict]] = []
    raw += [("speed", {"factor": f}) for f in _SLOW_FACTORS + _FAST_FACTORS]
    raw += [("speed_pp", {"factor": f}) for f in _SLOW_FACTORS + _FAST_FACTORS]
    raw += [("pitch", {"semitones": s}) for s in _SEMITONES]
    raw += [("pitch", {"semitones": -s}) for s in _SEMITONES]
    raw += [
        ("reverb", {"dampening": d, "delay": delay, "echos": echos})
        for delay, echos in _REVERB_VARIANTS
        for d in _DAMPENINGS
    ]
    raw += [("gaussian_noise", {"stddev": s}) for s in _NOISE_LEVELS]
    raw += [("pops", {"percentage": p}) for p in _POP_PERCENTAGES]
    raw += [("lowpass", {"critical_freq": f}) for f in _LOWPASS_CUTOFFS]
    raw += [("highpass", {"critical_freq": f}) for f in _HIGHPASS_CUTOFFS]
    raw += [("quantization", {"bits": b}) for b in _QUANTIZATION_BITS]
    raw += [("griffin_lim", {"iterations": i}) for i in _GRIFFIN_ITERATIONS]
    raw += [("griffin_lim_zero", {"iterations": i}) for i in _GRIFFIN_ITERATIONS]
    raw += [("mel_wide", {"num_bands": b}) for b in _MEL_WIDE_BANDS]
    raw += [("mel_narrow", {"num_bands": b}) for b in _MEL_NARROW_BANDS]
    entries = [
        DistortionSpec(family, params, seed=base_seed + i)
        for i, (family, params) in enumerate(raw)
    ]
    return SweepGrid(entries, source="builtin")


def load_grid_entries(path) -> list[DistortionSpec]:
    """Read a `family,params,seed` CSV into a spec list (possibly empty)."""
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if rows and rows[0][:3] == ["family", "params", "seed"]:
        rows = rows[1:]
    for row in rows:
        if len(row) != 3:
            raise DistortionSpecError(f"bad grid row: {row!r}")
        family, params_text, seed_text = row
        entries.append(DistortionSpec(family.strip(), parse_params(params_text), int(seed_text)))
    return entries


def load_grid(path) -> SweepGrid:
    """Read a `family,params,seed` CSV sweep grid."""
    return SweepGrid(load_grid_entries(path), source=str(path))


def save_grid(grid: SweepGrid, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["family", "params", "seed"])
        for spec in grid.entries:
            writer.writerow([spec.family, spec.params_string(), spec.seed])


@dataclass(frozen=True)
class SweepRow:
    clip_id: str
    family: str
    params: str
    seed: int
    output_path: str
    status: str


def _sweep_filename(clip_id: str, spec: DistortionSpec) -> str:
    slug = spec.params_string().replace(";", "+")
    return f"{clip_id}__{spec.family}__{slug}__s{spec.seed}.wav"


def run_sweep(manifest: CorpusManifest, grid, output_dir, threads: int = 0) -> list[SweepRow]:
    """Distort every evaluation clip with every grid spec, writing WAVs plus report.csv.

    `grid` is a SweepGrid or a plain spec list. Per-clip failures are recorded
    in the report (status column) without aborting the sweep. Rows are sorted
    by (clip_id, family, params).
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    specs = list(getattr(grid, "entries", grid))
    tasks = [(entry, spec) for entry in manifest.with_role("evaluation") for spec in specs]

    def run_one(task) -> SweepRow:
        entry, spec = task
        out_path = output_dir / _sweep_filename(entry.clip_id, spec)
        try:
            clip = ingest(entry.path)
            save_wav(apply_distortion(clip, spec), out_path)
            status = "ok"
        except Exception as exc:  # recorded, not raised: the sweep continues
            status = f"error:{exc}"
        return SweepRow(
            entry.clip_id, spec.family, spec.params_string(), spec.seed, str(out_path), status
        )

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run_one, tasks))
    else:
        rows = [run_one(task) for task in tasks]
    rows.sort(key=lambda r: (r.clip_id, r.family, r.params))

    with open(output_dir / "report.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["clip_id", "family", "params", "seed", "output_path", "status"])
        for row in rows:
            writer.writerow([row.clip_id, row.family, row.params, row.seed, row.output_path, row.status])
    return rows
