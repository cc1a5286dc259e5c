"""Objective quality measures and their correlation against listener scores.

SNR is the one measure computed here from first principles (it needs only
the reference signal). Scores from external tools such as PESQ, POLQA, or
ViSQOL are ingested from a small CSV/TSV table and correlated per metric
against per-clip MOS with the sample Pearson coefficient.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .audio import AudioClip, SampleRateMismatchError, SilentClipError

SNR_CAP_DB = 100.0  # stands in for +inf so reports stay finite and sortable

HEADER = ("clip_id", "metric", "score")


class MetricsError(Exception):
    pass


class LengthMismatchError(MetricsError):
    pass


class ConstantInputError(MetricsError):
    pass


class ScoreTableError(MetricsError):
    pass


@dataclass(frozen=True)
class MetricScore:
    clip_id: str
    metric_name: str
    score: float


@dataclass(frozen=True)
class MetricScoreTable:
    rows: tuple[MetricScore, ...]

    def __post_init__(self):
        seen = set()
        for row in self.rows:
            key = (row.clip_id, row.metric_name)
            if key in seen:
                raise ScoreTableError(
                    f"duplicate score for clip {row.clip_id!r}, metric {row.metric_name!r}"
                )
            seen.add(key)
            if not math.isfinite(row.score):
                raise ScoreTableError(
                    f"non-finite score for clip {row.clip_id!r}, metric {row.metric_name!r}"
                )

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def metric_names(self) -> tuple[str, ...]:
        return tuple(sorted({r.metric_name for r in self.rows}))

    def scores_for(self, metric_name: str) -> dict[str, float]:
        return {r.clip_id: r.score for r in self.rows if r.metric_name == metric_name}


@dataclass(frozen=True)
class MetricCorrelation:
    metric_name: str
    pearson_r: float
    n: int


@dataclass(frozen=True)
class CorrelationReport:
    entries: tuple[MetricCorrelation, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def for_metric(self, metric_name: str) -> MetricCorrelation:
        for e in self.entries:
            if e.metric_name == metric_name:
                return e
        raise KeyError(metric_name)


def global_snr_db(reference: AudioClip, degraded: AudioClip) -> float:
    """Residual SNR of degraded against the known reference, capped at 100 dB."""
    if reference.sample_rate_hz != degraded.sample_rate_hz:
        raise SampleRateMismatchError(
            f"{reference.sample_rate_hz} Hz reference vs {degraded.sample_rate_hz} Hz degraded"
        )
    if len(reference) != len(degraded):
        raise LengthMismatchError(
            f"reference has {len(reference)} samples, degraded has {len(degraded)}"
        )
    ref_energy = float(np.sum(reference.samples ** 2))
    if ref_energy == 0.0:
        raise SilentClipError("reference signal is all zeros")
    err_energy = float(np.sum((degraded.samples - reference.samples) ** 2))
    if err_energy == 0.0:
        return SNR_CAP_DB
    return min(10.0 * math.log10(ref_energy / err_energy), SNR_CAP_DB)


def ingest_external_scores(path: str | Path) -> MetricScoreTable:
    """Read a (clip_id, metric, score) table; the delimiter is sniffed from the header."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise ScoreTableError(f"{path}: empty file, expected a header row")
    delimiter = "\t" if "\t" in lines[0] else ","
    reader = csv.reader(lines, delimiter=delimiter)
    header = tuple(cell.strip() for cell in next(reader))
    if header != HEADER:
        raise ScoreTableError(
            f"{path}: expected header {','.join(HEADER)}, got {','.join(header)}"
        )
    rows = []
    for lineno, cells in enumerate(reader, start=2):
        if not cells or all(not c.strip() for c in cells):
            continue
        if len(cells) != 3:
            raise ScoreTableError(f"{path}:{lineno}: expected 3 fields, got {len(cells)}")
        clip_id, metric_name, raw = (c.strip() for c in cells)
        if not clip_id or not metric_name:
            raise ScoreTableError(f"{path}:{lineno}: empty clip_id or metric")
        try:
            score = float(raw)
        except ValueError:
            raise ScoreTableError(f"{path}:{lineno}: non-numeric score {raw!r}") from None
        rows.append(MetricScore(clip_id, metric_name, score))
    return MetricScoreTable(tuple(rows))


def pearson_correlation(x, y) -> float:
    """Sample Pearson r; needs n >= 3 and variation in both sequences."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.ndim != 1 or ya.ndim != 1:
        raise MetricsError("inputs must be one-dimensional sequences")
    if len(xa) != len(ya):
        raise LengthMismatchError(f"{len(xa)} vs {len(ya)} points")
    if len(xa) < 3:
        raise MetricsError(f"need at least 3 points, got {len(xa)}")
    if np.ptp(xa) == 0 or np.ptp(ya) == 0:
        raise ConstantInputError("correlation is undefined for a constant sequence")
    r = float(np.corrcoef(xa, ya)[0, 1])
    return max(-1.0, min(1.0, r))


def correlate_with_mos(
    mos: Mapping[str, float],
    scores: MetricScoreTable,
) -> CorrelationReport:
    """Inner-join each metric's scores with per-clip MOS and correlate.

    Metrics sharing fewer than 3 clips with the MOS table, or whose joined
    values are constant, are omitted with a warning rather than failing the
    whole report.
    """
    entries = []
    for metric_name in scores.metric_names:
        per_clip = scores.scores_for(metric_name)
        shared = sorted(set(per_clip) & set(mos))
        if len(shared) < 3:
            warnings.warn(
                f"metric {metric_name!r}: only {len(shared)} clips shared with MOS, omitted",
                stacklevel=2,
            )
            continue
        xs = [per_clip[c] for c in shared]
        ys = [mos[c] for c in shared]
        try:
            r = pearson_correlation(xs, ys)
        except ConstantInputError:
            warnings.warn(
                f"metric {metric_name!r}: constant values over shared clips, omitted",
                stacklevel=2,
            )
            continue
        entries.append(MetricCorrelation(metric_name, r, len(shared)))
    return CorrelationReport(tuple(entries))
