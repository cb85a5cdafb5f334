"""Command-line entry point: reproducible metric pipelines with CSV output.

Subcommands: distort, sweep, embed, stats, fad, signal-metrics, pipeline,
rank, correlate, dispersion, step-study.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .audio_io import CorpusManifest, ingest, save_wav
from .distortions import (
    DistortionSpec,
    apply_distortion,
    builtin_grid,
    load_grid_entries,
    parse_params,
    run_sweep,
)
from .fad import (
    WindowingPolicy,
    embed_corpus,
    estimate_gaussian,
    extract_windows,
    fad_score,
    file_backend,
    patch_stats_backend,
    read_embeddings,
    read_stats,
    write_embeddings,
    write_stats,
)
from .ranking import fit_plackett_luce, load_comparisons, pearson, spearman
from .signal_metrics import encode_db, measure_pair
from .studies import dispersion_study, step_length_study


def _fmt(value) -> str:
    """Floats with 9 significant digits; everything else as-is."""
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def _write_csv(path, header: list[str], rows: list[list]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _print_csv(header: list[str], rows: list[list]):
    writer = csv.writer(sys.stdout)
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])


def _echo_config(args: argparse.Namespace):
    shown = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    line = " ".join(f"{k}={v}" for k, v in shown.items())
    print(f"# config: {line}", file=sys.stderr)


def _default_threads() -> int:
    try:
        return int(os.environ.get("FADTK_THREADS", "0"))
    except ValueError:
        return 0


def _make_backend(text: str):
    if text == "patch-stats":
        return patch_stats_backend()
    if text.startswith("file:"):
        return file_backend(text[len("file:") :])
    raise ValueError(f"unknown backend {text!r} (use patch-stats or file:<path>)")


def _make_grid(text: str, seed: int) -> list[DistortionSpec]:
    if text == "builtin":
        return builtin_grid(base_seed=seed).entries
    return load_grid_entries(text)


def cmd_distort(args) -> int:
    spec = DistortionSpec(args.family, parse_params(";".join(args.param)), seed=args.seed)
    clip = ingest(getattr(args, "in"))
    save_wav(apply_distortion(clip, spec), args.out)
    return 0


def cmd_sweep(args) -> int:
    manifest = CorpusManifest.load(args.manifest)
    grid = _make_grid(args.grid, args.seed)
    rows = run_sweep(manifest, grid, args.out_dir, threads=args.threads)
    failures = sum(1 for r in rows if r.status != "ok")
    print(f"sweep: {len(rows)} outputs, {failures} failures", file=sys.stderr)
    return 0


def cmd_embed(args) -> int:
    manifest = CorpusManifest.load(args.manifest)
    backend = _make_backend(args.backend)
    policy = WindowingPolicy(window_seconds=1.0, step_seconds=args.step)
    role = None if args.role == "all" else args.role
    result = embed_corpus(manifest, backend, policy, role=role)
    print(f"embed: {result.summary()}", file=sys.stderr)
    write_embeddings(args.out, result.embeddings, dimension=backend.dimension)
    return 0


def cmd_stats(args) -> int:
    embeddings = read_embeddings(args.embeddings)
    stats = estimate_gaussian(embeddings, backend_id=args.backend_id)
    write_stats(args.out, stats)
    return 0


def cmd_fad(args) -> int:
    background = read_stats(args.background)
    evaluation = read_stats(getattr(args, "eval"))
    score = fad_score(background, evaluation)
    print(f"FAD score: {_fmt(score)}", file=sys.stderr)
    _print_csv(["background", "evaluation", "fad"], [[args.background, getattr(args, "eval"), score]])
    return 0


_METRIC_HEADER = ["clip_id", "sdr_db", "si_sdr_db", "cosine_distance", "magnitude_l2"]


def _metric_row(report) -> list:
    return [
        report.clip_id,
        encode_db(report.sdr_db),
        encode_db(report.si_sdr_db),
        report.cosine_distance,
        report.magnitude_l2,
    ]


def cmd_signal_metrics(args) -> int:
    rows = []
    if args.pairs:
        with open(args.pairs, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            required = {"clip_id", "reference", "estimate"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise ValueError(f"pairs CSV needs columns {sorted(required)}")
            base = Path(args.pairs).parent
            for record in reader:
                ref_path = Path(record["reference"])
                est_path = Path(record["estimate"])
                reference = ingest(ref_path if ref_path.is_absolute() else base / ref_path)
                estimate = ingest(est_path if est_path.is_absolute() else base / est_path)
                rows.append(
                    _metric_row(
                        measure_pair(record["clip_id"], reference, estimate, args.filter_taps)
                    )
                )
    else:
        if not (args.reference and args.estimate):
            raise ValueError("need --reference and --estimate (or --pairs)")
        reference = ingest(args.reference)
        estimate = ingest(args.estimate)
        rows.append(
            _metric_row(measure_pair(Path(args.estimate).stem, reference, estimate, args.filter_taps))
        )
    _print_csv(_METRIC_HEADER, rows)
    return 0


def cmd_pipeline(args) -> int:
    header = ["family", "params", "seed", "fad", "sdr_db", "si_sdr_db", "cosine_distance", "magnitude_l2"]
    manifest = CorpusManifest.load(args.manifest)
    grid = _make_grid(args.grid, args.seed)
    if not grid:
        _write_csv(args.out, header, [])
        return 0
    backend = patch_stats_backend()
    policy = WindowingPolicy(window_seconds=1.0, step_seconds=args.step)

    background_result = embed_corpus(manifest, backend, policy, role="background")
    background = estimate_gaussian(background_result, backend_id=backend.id)
    clips = [
        (entry.clip_id, ingest(entry.path))
        for entry in sorted(manifest.with_role("evaluation"), key=lambda e: e.clip_id)
    ]

    rows = []
    for spec in grid:
        embeddings = []
        metrics = []
        for clip_id, clip in clips:
            distorted = apply_distortion(clip, spec)
            for patch in extract_windows(distorted, policy):
                embeddings.append(backend.embed(patch))
            metrics.append(measure_pair(clip_id, clip, distorted, args.filter_taps))
        stats = estimate_gaussian(np.stack(embeddings), backend_id=backend.id)
        score = fad_score(background, stats)
        rows.append(
            [
                spec.family,
                spec.params_string(),
                spec.seed,
                score,
                float(np.mean([encode_db(m.sdr_db) for m in metrics])),
                float(np.mean([encode_db(m.si_sdr_db) for m in metrics])),
                float(np.mean([m.cosine_distance for m in metrics])),
                float(np.mean([m.magnitude_l2 for m in metrics])),
            ]
        )
        print(f"pipeline: {spec.label()} fad={_fmt(score)}", file=sys.stderr)
    _write_csv(args.out, header, rows)
    return 0


def cmd_rank(args) -> int:
    comparisons = load_comparisons(args.comparisons)
    worths = fit_plackett_luce(comparisons)
    rows = [[item, worths.worths[item]] for item in worths.ordering()]
    _print_csv(["item", "log_worth"], rows)
    return 0


def cmd_correlate(args) -> int:
    with open(args.csv, newline="", encoding="utf-8") as fh:
        records = list(csv.DictReader(fh))
    if not records or args.x not in records[0] or args.y not in records[0]:
        raise ValueError(f"CSV must contain columns {args.x!r} and {args.y!r}")
    x = [float(r[args.x]) for r in records]
    y = [float(r[args.y]) for r in records]
    value = pearson(x, y) if args.method == "pearson" else spearman(x, y)
    _print_csv(["method", "x", "y", "value"], [[args.method, args.x, args.y, value]])
    return 0


def cmd_dispersion(args) -> int:
    manifest = CorpusManifest.load(args.manifest)
    grid = _make_grid(args.grid, args.seed)
    backend = patch_stats_backend()
    sizes = [int(s) for s in args.sizes.split(",") if s]
    policy = WindowingPolicy(window_seconds=1.0, step_seconds=args.step)
    report = dispersion_study(
        manifest, grid, backend, sizes, args.repeats, args.seed, policy=policy
    )
    rows = [
        [row.eval_set_size, row.config, row.mean_fad, row.variance, row.dispersion]
        for row in report.rows
    ]
    rows += [[size, "average", "", "", report.size_averages[size]] for size in sizes]
    _write_csv(args.out, ["eval_set_size", "config", "mean_fad", "variance", "dispersion"], rows)
    return 0


def cmd_step_study(args) -> int:
    manifest = CorpusManifest.load(args.manifest)
    grid = _make_grid(args.grid, args.seed)
    backend = patch_stats_backend()
    steps = [float(s) for s in args.steps.split(",") if s]
    rows = step_length_study(manifest, grid, backend, steps)
    _write_csv(
        args.out,
        ["step_seconds", "config", "fad"],
        [[row.step_seconds, row.config, row.fad] for row in rows],
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fadtk",
        description="Frechet Audio Distance toolkit: metrics, distortions, and stability studies.",
    )
    parser.add_argument("--version", action="version", version=f"fadtk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distort", help="apply one distortion to one WAV")
    p.add_argument("--in", required=True, help="input WAV")
    p.add_argument("--family", required=True)
    p.add_argument("--param", action="append", default=[], metavar="K=V")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_distort)

    p = sub.add_parser("sweep", help="distort a corpus with a full parameter grid")
    p.add_argument("--manifest", required=True)
    p.add_argument("--grid", default="builtin", help="'builtin' or a grid CSV path")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("embed", help="extract windowed embeddings for a corpus")
    p.add_argument("--manifest", required=True)
    p.add_argument("--backend", default="patch-stats", help="patch-stats or file:<path>")
    p.add_argument("--step", type=float, default=0.5)
    p.add_argument("--role", choices=["all", "background", "evaluation"], default="all")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("stats", help="fit Gaussian statistics to an embeddings file")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--backend-id", default="unspecified")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("fad", help="Frechet audio distance between two stats files")
    p.add_argument("--background", required=True)
    p.add_argument("--eval", required=True)
    p.set_defaults(func=cmd_fad)

    p = sub.add_parser("signal-metrics", help="SDR / SI-SDR / cosine / magnitude-L2 for pairs")
    p.add_argument("--reference")
    p.add_argument("--estimate")
    p.add_argument("--pairs", help="batch CSV with clip_id,reference,estimate columns")
    p.add_argument("--filter-taps", type=int, default=512)
    p.set_defaults(func=cmd_signal_metrics)

    p = sub.add_parser("pipeline", help="distort -> embed -> stats -> fad + signal metrics")
    p.add_argument("--manifest", required=True)
    p.add_argument("--grid", default="builtin")
    p.add_argument("--out", required=True)
    p.add_argument("--step", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--filter-taps", type=int, default=512)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("rank", help="fit worths from pairwise comparisons")
    p.add_argument("--comparisons", required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("correlate", help="correlation between two CSV columns")
    p.add_argument("--csv", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--method", choices=["pearson", "spearman"], default="pearson")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("dispersion", help="FAD stability vs evaluation-set size")
    p.add_argument("--manifest", required=True)
    p.add_argument("--grid", default="builtin")
    p.add_argument("--sizes", required=True, help="comma-separated clip counts")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("step-study", help="FAD sensitivity to embedding window step")
    p.add_argument("--manifest", required=True)
    p.add_argument("--grid", default="builtin")
    p.add_argument("--steps", required=True, help="comma-separated step lengths in seconds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.set_defaults(func=cmd_step_study)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _echo_config(args)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
