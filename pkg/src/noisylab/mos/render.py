"""Deterministic report serialization.

JSON output is canonical (sorted keys, no whitespace) so that replaying an
event log and re-rendering yields byte-identical bytes. CSV tables are
plot-ready exports: condition summary, per-clip MOS, MOS histogram, MOS by
noise type, and optionally the anchor-normalized summary.
"""
from __future__ import annotations

import io
import json

from .model import (
    HISTOGRAM_BIN_WIDTH,
    MosReport,
    NormalizedConditionMos,
)


def report_to_dict(
    report: MosReport,
    normalized: tuple[NormalizedConditionMos, ...] | None = None,
) -> dict:
    data = {
        "study_id": report.study_id,
        "clips": [
            {
                "clip_id": c.clip_id,
                "condition": c.condition,
                "noise_type": c.noise_type,
                "mos": c.mos,
                "n_ratings": c.n_ratings,
                "below_target": c.below_target,
            }
            for c in report.clips
        ],
        "conditions": [
            {"condition": c.condition, "mos": c.mos, "ci95": c.ci95, "n_clips": c.n_clips}
            for c in report.conditions
        ],
        "histograms": [
            {
                "condition": name,
                "bin_width": HISTOGRAM_BIN_WIDTH,
                "bin_start": 1.0,
                "counts": list(counts),
            }
            for name, counts in report.histograms
        ],
        "by_noise_type": [
            {
                "condition": r.condition,
                "noise_type": r.noise_type,
                "mos": r.mos,
                "n_clips": r.n_clips,
            }
            for r in report.by_noise_type
        ],
    }
    if normalized is not None:
        data["normalized"] = [
            {"condition": n.condition, "mos": n.mos} for n in normalized
        ]
    return data


def report_json_bytes(
    report: MosReport,
    normalized: tuple[NormalizedConditionMos, ...] | None = None,
) -> bytes:
    return json.dumps(
        report_to_dict(report, normalized), sort_keys=True, separators=(",", ":")
    ).encode("utf-8")


def _csv(header: list[str], rows: list[list]) -> str:
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(_cell(v) for v in row) + "\n")
    return out.getvalue()


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def summary_csv(report: MosReport) -> str:
    return _csv(
        ["condition", "mos", "ci95", "n_clips"],
        [[c.condition, c.mos, c.ci95, c.n_clips] for c in report.conditions],
    )


def clips_csv(report: MosReport) -> str:
    return _csv(
        ["clip_id", "condition", "noise_type", "mos", "n_ratings", "below_target"],
        [
            [c.clip_id, c.condition, c.noise_type, c.mos, c.n_ratings, c.below_target]
            for c in report.clips
        ],
    )


def histogram_csv(report: MosReport) -> str:
    rows = []
    for condition, counts in report.histograms:
        for i, count in enumerate(counts):
            low = 1.0 + i * HISTOGRAM_BIN_WIDTH
            rows.append([condition, low, low + HISTOGRAM_BIN_WIDTH, count])
    return _csv(["condition", "bin_low", "bin_high", "count"], rows)


def by_noise_type_csv(report: MosReport) -> str:
    return _csv(
        ["condition", "noise_type", "mos", "n_clips"],
        [[r.condition, r.noise_type, r.mos, r.n_clips] for r in report.by_noise_type],
    )


def normalized_csv(normalized: tuple[NormalizedConditionMos, ...]) -> str:
    return _csv(
        ["condition", "mos_normalized"], [[n.condition, n.mos] for n in normalized]
    )


def flat_csv(
    report: MosReport,
    normalized: tuple[NormalizedConditionMos, ...] | None = None,
) -> str:
    """Single-file export with a scope column, one row per fact."""
    rows = []
    for c in report.conditions:
        rows.append(["condition", c.condition, "", "", c.mos, c.ci95, c.n_clips])
    for c in report.clips:
        rows.append(["clip", c.condition, c.noise_type, c.clip_id, c.mos, "", c.n_ratings])
    for r in report.by_noise_type:
        rows.append(["condition_noise", r.condition, r.noise_type, "", r.mos, "", r.n_clips])
    if normalized is not None:
        for n in normalized:
            rows.append(["normalized", n.condition, "", "", n.mos, "", ""])
    return _csv(["scope", "condition", "noise_type", "clip_id", "mos", "ci95", "n"], rows)
