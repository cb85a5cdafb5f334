"""Stability studies: FAD variance vs evaluation-set size (index of dispersion)
and sensitivity to the embedding window step length."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dsp
from .audio_io import CorpusManifest, ingest
from .distortions import DistortionSpec, apply_distortion
from .fad import WindowingPolicy, embed_corpus, estimate_gaussian, extract_windows, fad_score


def _grid_entries(grid) -> list[DistortionSpec]:
    return list(getattr(grid, "entries", grid))


def _distorted_embeddings_by_clip(
    manifest: CorpusManifest,
    spec: DistortionSpec,
    backend,
    policy: WindowingPolicy,
    frontend: dsp.FrontendConfig,
) -> dict[str, np.ndarray]:
    """Per-clip embedding matrices for the distorted evaluation set."""
    per_clip = {}
    for entry in sorted(manifest.with_role("evaluation"), key=lambda e: e.clip_id):
        distorted = apply_distortion(ingest(entry.path), spec)
        patches = extract_windows(distorted, policy, frontend)
        per_clip[entry.clip_id] = np.stack([backend.embed(p) for p in patches])
    return per_clip


def _background_stats(manifest, backend, policy, frontend):
    result = embed_corpus(manifest, backend, policy, role="background", frontend=frontend)
    return estimate_gaussian(result, backend_id=backend.id)


@dataclass(frozen=True)
class DispersionRow:
    eval_set_size: int
    config: str
    mean_fad: float
    variance: float
    dispersion: float  # variance / mean


@dataclass
class DispersionReport:
    rows: list[DispersionRow]
    size_averages: dict[int, float]  # cross-config average dispersion per size


def dispersion_study(
    manifest: CorpusManifest,
    grid,
    backend,
    sizes: list[int],
    repeats: int,
    seed: int,
    policy: WindowingPolicy = WindowingPolicy(),
    frontend: dsp.FrontendConfig = dsp.DEFAULT_FRONTEND,
) -> DispersionReport:
    """FAD mean/variance/index-of-dispersion over random evaluation subsets.

    For each (config, size): `repeats` seeded subsets of that many clips are
    drawn without replacement, FAD is computed per subset against fixed
    background stats, and D = variance/mean summarizes the spread.
    """
    specs = _grid_entries(grid)
    eval_ids = sorted(e.clip_id for e in manifest.with_role("evaluation"))
    if sizes and max(sizes) > len(eval_ids):
        raise ValueError(f"corpus has {len(eval_ids)} evaluation clips, need {max(sizes)}")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    background = _background_stats(manifest, backend, policy, frontend)

    rows = []
    per_size_dispersions: dict[int, list[float]] = {size: [] for size in sizes}
    for spec in specs:
        per_clip = _distorted_embeddings_by_clip(manifest, spec, backend, policy, frontend)
        for size in sizes:
            fads = []
            for repeat in range(repeats):
                rng = np.random.default_rng([seed, size, repeat])
                chosen = rng.choice(len(eval_ids), size=size, replace=False)
                pooled = np.vstack([per_clip[eval_ids[i]] for i in sorted(chosen)])
                stats = estimate_gaussian(pooled, backend_id=backend.id)
                fads.append(fad_score(background, stats))
            mean = float(np.mean(fads))
            variance = float(np.var(fads))
            dispersion = variance / mean if mean > 0 else 0.0
            rows.append(DispersionRow(size, spec.label(), mean, variance, dispersion))
            per_size_dispersions[size].append(dispersion)

    averages = {
        size: float(np.mean(values)) if values else 0.0
        for size, values in per_size_dispersions.items()
    }
    return DispersionReport(rows, averages)


@dataclass(frozen=True)
class StepStudyRow:
    step_seconds: float
    config: str
    fad: float


def step_length_study(
    manifest: CorpusManifest,
    grid,
    backend,
    steps: list[float],
    frontend: dsp.FrontendConfig = dsp.DEFAULT_FRONTEND,
) -> list[StepStudyRow]:
    """FAD per (window step length, distortion config); background statistics
    are recomputed at each step so both sides use the same windowing."""
    for step in steps:
        if not 0 < step <= 1.0:
            raise ValueError(f"step must be in (0, 1], got {step}")
    specs = _grid_entries(grid)
    rows = []
    for step in steps:
        policy = WindowingPolicy(window_seconds=1.0, step_seconds=step)
        background = _background_stats(manifest, backend, policy, frontend)
        for spec in specs:
            per_clip = _distorted_embeddings_by_clip(manifest, spec, backend, policy, frontend)
            pooled = np.vstack(list(per_clip.values()))
            stats = estimate_gaussian(pooled, backend_id=backend.id)
            rows.append(StepStudyRow(step, spec.label(), fad_score(background, stats)))
    return rows
