import numpy as np
import pytest

from noisylab.audio import AudioClip, write_wav


def speech_like(rng, n_samples, rate=16000, f0=120.0):
    """Voiced harmonic signal with a slow syllabic envelope; never fully silent."""
    t = np.arange(n_samples) / rate
    sig = np.zeros(n_samples)
    for k in range(1, 9):
        sig += np.sin(2 * np.pi * k * f0 * t + rng.uniform(0, 2 * np.pi)) / k
    env = 0.15 + 0.85 * 0.5 * (1 + np.sin(2 * np.pi * 3.0 * t + rng.uniform(0, 2 * np.pi)))
    sig = sig * env
    return 0.3 * sig / np.max(np.abs(sig))


def noise_like(rng, n_samples, color=0):
    """White noise shaped by a one-pole filter whose pole depends on `color`."""
    x = rng.normal(0, 1, n_samples)
    a = (color % 9) / 10.0
    y = np.empty_like(x)
    acc = 0.0
    for i in range(n_samples):
        acc = a * acc + (1 - a) * x[i]
        y[i] = acc
    return 0.3 * y / np.max(np.abs(y))


def build_source_dirs(
    root,
    n_speakers=2,
    utts_per_speaker=3,
    utt_len_s=0.5,
    n_noise_types=3,
    recs_per_type=2,
    rec_len_s=1.2,
    rate=16000,
    seed=0,
):
    """Write a synthetic clean/noise source tree and return (clean_dir, noise_dir)."""
    rng = np.random.default_rng(seed)
    clean_dir = root / "clean"
    noise_dir = root / "noise"
    for s in range(n_speakers):
        spk = f"spk{s:02d}"
        d = clean_dir / spk
        d.mkdir(parents=True)
        for u in range(utts_per_speaker):
            x = speech_like(rng, int(utt_len_s * rate), rate, f0=110 + 25 * s)
            write_wav(AudioClip(x, rate), d / f"utt{u:02d}.wav")
    for t in range(n_noise_types):
        nt = f"ntype{t:02d}"
        d = noise_dir / nt
        d.mkdir(parents=True)
        for r in range(recs_per_type):
            x = noise_like(rng, int(rec_len_s * rate), color=t)
            write_wav(AudioClip(x, rate), d / f"rec{r:02d}.wav")
    return clean_dir, noise_dir


@pytest.fixture
def source_dirs(tmp_path):
    return build_source_dirs(tmp_path)
