import numpy as np
import pytest

from fadtk.audio_io import CorpusManifest, ManifestEntry, save_wav
from fadtk.distortions import DistortionSpec
from fadtk.fad import WindowingPolicy, embed_corpus, estimate_gaussian, fad_score, patch_stats_backend
from fadtk.studies import dispersion_study, step_length_study
from fadtk.synth import build_synthetic_corpus, synthetic_music_clip


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    directory = tmp_path_factory.mktemp("study_corpus")
    return build_synthetic_corpus(directory, n_background=4, n_evaluation=8, seconds=2.0, seed=50)


@pytest.fixture(scope="module")
def backend():
    return patch_stats_backend()


NOISE = DistortionSpec("gaussian_noise", {"stddev": 0.05}, seed=9)


class TestDispersionStudy:
    def test_single_repeat_zero_dispersion(self, corpus, backend):
        report = dispersion_study(corpus, [NOISE], backend, sizes=[4], repeats=1, seed=3)
        assert len(report.rows) == 1
        assert report.rows[0].variance == 0.0
        assert report.rows[0].dispersion == 0.0
        assert report.size_averages == {4: 0.0}

    def test_identical_clip_corpus_zero_dispersion(self, tmp_path, backend):
        clip = synthetic_music_clip(7, 2.0)
        entries = []
        for i in range(5):
            path = tmp_path / f"same{i}.wav"
            save_wav(clip, path)
            role = "background" if i == 0 else "evaluation"
            entries.append(ManifestEntry(f"same{i}", str(path), role))
        manifest = CorpusManifest(entries)
        report = dispersion_study(manifest, [NOISE], backend, sizes=[2], repeats=4, seed=5)
        assert report.rows[0].variance == pytest.approx(0.0, abs=1e-12)
        assert report.rows[0].dispersion == pytest.approx(0.0, abs=1e-12)

    def test_row_structure_and_averages(self, corpus, backend):
        quant = DistortionSpec("quantization", {"bits": 5}, seed=2)
        report = dispersion_study(corpus, [NOISE, quant], backend, sizes=[3, 6], repeats=3, seed=1)
        assert len(report.rows) == 4  # 2 configs x 2 sizes
        for size in (3, 6):
            values = [r.dispersion for r in report.rows if r.eval_set_size == size]
            assert report.size_averages[size] == pytest.approx(float(np.mean(values)))

    def test_deterministic(self, corpus, backend):
        a = dispersion_study(corpus, [NOISE], backend, sizes=[4], repeats=3, seed=8)
        b = dispersion_study(corpus, [NOISE], backend, sizes=[4], repeats=3, seed=8)
        assert a.rows == b.rows

    def test_insufficient_clips(self, corpus, backend):
        with pytest.raises(ValueError):
            dispersion_study(corpus, [NOISE], backend, sizes=[100], repeats=2, seed=1)

    def test_bad_repeats(self, corpus, backend):
        with pytest.raises(ValueError):
            dispersion_study(corpus, [NOISE], backend, sizes=[2], repeats=0, seed=1)


class TestStepLengthStudy:
    def test_matches_direct_pipeline_at_full_step(self, corpus, backend):
        rows = step_length_study(corpus, [NOISE], backend, steps=[1.0])
        assert len(rows) == 1
        policy = WindowingPolicy(1.0, 1.0)
        background = estimate_gaussian(
            embed_corpus(corpus, backend, policy, role="background"), backend.id
        )
        from fadtk.audio_io import ingest
        from fadtk.distortions import apply_distortion
        from fadtk.fad import extract_windows

        embeddings = []
        for entry in sorted(corpus.with_role("evaluation"), key=lambda e: e.clip_id):
            distorted = apply_distortion(ingest(entry.path), NOISE)
            embeddings.extend(backend.embed(p) for p in extract_windows(distorted, policy))
        expected = fad_score(background, estimate_gaussian(np.stack(embeddings), backend.id))
        assert rows[0].fad == pytest.approx(expected, rel=1e-12)
        assert rows[0].step_seconds == 1.0

    def test_empty_grid(self, corpus, backend):
        assert step_length_study(corpus, [], backend, steps=[0.5]) == []

    def test_bad_step(self, corpus, backend):
        with pytest.raises(ValueError):
            step_length_study(corpus, [NOISE], backend, steps=[1.5])
        with pytest.raises(ValueError):
            step_length_study(corpus, [NOISE], backend, steps=[0.0])

    def test_rows_per_step_and_config(self, corpus, backend):
        quant = DistortionSpec("quantization", {"bits": 5}, seed=2)
        rows = step_length_study(corpus, [NOISE, quant], backend, steps=[1.0, 0.5])
        assert [(r.step_seconds, r.config) for r in rows] == [
            (1.0, NOISE.label()),
            (1.0, quant.label()),
            (0.5, NOISE.label()),
            (0.5, quant.label()),
        ]
        assert all(r.fad >= 0 for r in rows)
