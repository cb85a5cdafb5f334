"""Distortion gallery
=====================

Apply one representative configuration of every distortion family to the same
clip, write the results as WAVs next to this script, and print the
full-reference signal metrics for each. Note how the time-displacing families
(speed, pitch) wreck SDR while staying close in spectrogram-magnitude terms.
"""

from pathlib import Path

from fadtk import DistortionSpec, apply_distortion, measure_pair, normalize_peak, save_wav, synthetic_music_clip
from fadtk.signal_metrics import encode_db

GALLERY = [
    DistortionSpec("gaussian_noise", {"stddev": 0.031}, seed=1),
    DistortionSpec("pops", {"percentage": 0.1}, seed=2),
    DistortionSpec("lowpass", {"critical_freq": 1500.0}),
    DistortionSpec("highpass", {"critical_freq": 500.0}),
    DistortionSpec("quantization", {"bits": 4}),
    DistortionSpec("griffin_lim", {"iterations": 5}, seed=3),
    DistortionSpec("griffin_lim_zero", {"iterations": 5}),
    DistortionSpec("mel_wide", {"num_bands": 64}),
    DistortionSpec("mel_narrow", {"num_bands": 64}),
    DistortionSpec("speed", {"factor": 0.95}),
    DistortionSpec("speed_pp", {"factor": 1.2}),
    DistortionSpec("pitch", {"semitones": -0.25}),
    DistortionSpec("reverb", {"dampening": 0.4, "delay": 0.25, "echos": 3}),
]

out_dir = Path(__file__).parent / "gallery_output"
out_dir.mkdir(exist_ok=True)

clip = normalize_peak(synthetic_music_clip(7, seconds=5.0))
save_wav(clip, out_dir / "clean.wav")

print(f"{'distortion':<42} {'SDR dB':>8} {'SI-SDR':>8} {'cosdist':>8} {'magL2':>8}")
for spec in GALLERY:
    distorted = apply_distortion(clip, spec)
    save_wav(distorted, out_dir / f"{spec.family}.wav")
    m = measure_pair(spec.label(), clip, distorted)
    print(
        f"{spec.label():<42} {encode_db(m.sdr_db):>8.1f} {encode_db(m.si_sdr_db):>8.1f} "
        f"{m.cosine_distance:>8.3f} {m.magnitude_l2:>8.3f}"
    )
print(f"\nWAVs written to {out_dir}/")
