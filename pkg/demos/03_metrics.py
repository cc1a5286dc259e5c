"""Walkthrough: objective metrics and how well they track subjective scores.

Synthesizes mixtures across a range of SNRs, computes the reference-based SNR
metric for each, fabricates a plausible "listener MOS" (monotone in true
quality plus judge noise), and reports the Pearson correlation between the
metric and the MOS - the workflow used to decide whether an objective metric
can stand in for a listening test.

Usage: python3 demos/03_metrics.py [workdir]
"""
import sys
from pathlib import Path

import numpy as np

from noisylab.audio import AudioClip
from noisylab.corpus import mix_at_snr
from noisylab.metrics import (
    correlate_with_mos,
    global_snr_db,
    ingest_external_scores,
)

RATE = 16000


def speech(rng, seconds, f0):
    t = np.arange(int(seconds * RATE)) / RATE
    sig = sum(
        np.sin(2 * np.pi * k * f0 * t + rng.uniform(0, 2 * np.pi)) / k
        for k in range(1, 7)
    )
    env = 0.2 + 0.8 * 0.5 * (1 + np.sin(2 * np.pi * 2.0 * t))
    sig = sig * env
    return AudioClip(0.3 * sig / np.max(np.abs(sig)), RATE)


def main(workdir: Path) -> None:
    workdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(17)

    rows = []
    mos = {}
    for i in range(40):
        true_snr = float(rng.uniform(-5, 25))
        clean = speech(rng, 2.0, f0=rng.uniform(100, 220))
        noise = AudioClip(rng.normal(0, 0.05, len(clean.samples)), RATE)
        noisy, clean_out, _, _ = mix_at_snr(clean, noise, snr_db=true_snr)
        measured = global_snr_db(clean_out, noisy)
        clip_id = f"clip{i:03d}"
        rows.append(f"{clip_id},snr,{measured!r}")
        # pretend listeners: quality saturates at both ends, plus rating noise
        subjective = 1.0 + 4.0 / (1.0 + np.exp(-(true_snr - 10.0) / 5.0))
        mos[clip_id] = float(np.clip(subjective + rng.normal(0, 0.15), 1, 5))

    scores_path = workdir / "objective_scores.csv"
    scores_path.write_text("clip_id,metric,score\n" + "\n".join(rows) + "\n")
    print(f"wrote {len(rows)} objective scores to {scores_path}")

    table = ingest_external_scores(scores_path)
    report = correlate_with_mos(mos, table)
    for entry in report.entries:
        print(f"metric {entry.metric_name!r}: pearson r = {entry.pearson_r:.3f} "
              f"over {entry.n} clips")
    print("(a strong metric tracks MOS closely; near zero means the metric "
          "is useless as a listening-test stand-in)")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_output/03"))
