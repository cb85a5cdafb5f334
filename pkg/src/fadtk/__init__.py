"""fadtk: Frechet Audio Distance toolkit.

A numpy/scipy library (plus a `fadtk` CLI) for reference-free audio quality
evaluation: windowed log-mel embeddings, Gaussian statistics and the Frechet
distance between them, a suite of parametric audio distortions, full-reference
signal metrics, and ranking/stability analyses.
"""

__version__ = "0.1.0"

from .audio_io import (
    AudioClip,
    CorpusManifest,
    ManifestEntry,
    UnsupportedCodecError,
    WavFormatError,
    ingest,
    load_wav,
    normalize_peak,
    resample,
    save_wav,
    segment,
)
from .dsp import (
    DEFAULT_FRONTEND,
    DISTORTION_STFT,
    FrontendConfig,
    InsufficientInputError,
    MelFilterbank,
    Spectrogram,
    StftConfig,
    butterworth_filter,
    griffin_lim,
    istft,
    log_mel_frontend,
    mel_filterbank,
    phase_vocoder_stretch,
    spectral_convergence,
    stft,
)
from .distortions import (
    DistortionSpec,
    DistortionSpecError,
    SweepGrid,
    apply_distortion,
    builtin_grid,
    load_grid,
    run_sweep,
    save_grid,
)
from .fad import (
    Embedding,
    FileBackend,
    GaussianStats,
    IncompatibleStatsError,
    InvalidStatsError,
    LogMelPatch,
    PatchStatsBackend,
    WindowingPolicy,
    embed_corpus,
    estimate_gaussian,
    extract_windows,
    fad_score,
    file_backend,
    frechet_distance,
    patch_stats_backend,
    read_embeddings,
    read_stats,
    write_embeddings,
    write_stats,
)
from .ranking import (
    PairwiseComparison,
    WorthVector,
    fit_plackett_luce,
    listening_study_table,
    pearson,
    spearman,
)
from .signal_metrics import (
    MetricReport,
    UndefinedMetricError,
    cosine_distance,
    magnitude_l2,
    measure_pair,
    sdr,
    si_sdr,
)
from .studies import DispersionReport, dispersion_study, step_length_study
from .synth import build_synthetic_corpus, synthetic_music_clip
