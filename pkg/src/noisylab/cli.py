"""Command-line entry point.

Subcommands: synth (corpus synthesis), enhance wiener (noise suppression),
metrics snr / metrics correlate (objective measures), serve (listening-test
service), report (MOS report export as plot-ready CSV tables).

Exit codes: 0 success, 2 usage error, 3 input data error, 4 runtime or IO
failure. Every subcommand writes its outputs to a temporary location and
renames on success, so failed runs leave nothing partial behind.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import shutil
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .audio import AudioError, read_wav, resample, write_wav
from .corpus import (
    CorpusError,
    CorpusGenerationError,
    SynthesisConfig,
    scan_sources,
    synthesize_corpus,
    load_manifest,
)
from .metrics import (
    MetricsError,
    correlate_with_mos,
    global_snr_db,
    ingest_external_scores,
    pearson_correlation,
)
from .mos.model import StudyError, aggregate_mos, measured_anchors, normalize_to_reference
from .wiener import ClipTooShortError, StftConfig, WienerParams, enhance

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

ENHANCE_RATE_HZ = 16000

log = logging.getLogger("noisylab")


class CliDataError(Exception):
    """Bad or missing input data; maps to exit code 3."""


@contextmanager
def _staged_dir(final: Path):
    """Build outputs in a sibling temp directory, renamed into place on success."""
    final = Path(final)
    if final.exists() and any(final.iterdir()):
        raise CliDataError(f"output directory {final} already exists and is not empty")
    final.parent.mkdir(parents=True, exist_ok=True)
    tmp = final.parent / f".{final.name}.tmp{os.getpid()}"
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir(parents=True)
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if final.exists():
        final.rmdir()
    os.replace(tmp, final)


def _write_text_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.parent / f".{path.name}.tmp{os.getpid()}"
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


# -- synth --------------------------------------------------------------------


def _snr_list(text: str) -> tuple[float, ...]:
    try:
        levels = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad SNR list: {text!r}") from None
    if not levels:
        raise argparse.ArgumentTypeError("SNR list is empty")
    return levels


def _cmd_synth(args) -> int:
    config = SynthesisConfig(
        total_clips=args.clips,
        snr_levels_db=args.snrs,
        seed=args.seed,
        clip_length_s=args.length,
        sample_rate_hz=args.rate,
        target_level_dbfs=args.level,
    )
    inventory = scan_sources(args.clean_dir, args.noise_dir)
    for warning in inventory.warnings:
        log.warning("%s", warning)
    with _staged_dir(Path(args.out)) as tmp:
        records, manifest = synthesize_corpus(
            inventory, config, tmp, workers=args.workers
        )
    final_manifest = Path(args.out) / manifest.name
    print(f"wrote {len(records)} clips, manifest {final_manifest}")
    return EXIT_OK


# -- enhance ------------------------------------------------------------------


def _enhance_one(src: Path, dst: Path, params: WienerParams, cfg: StftConfig) -> None:
    clip = read_wav(src)
    if clip.sample_rate_hz != ENHANCE_RATE_HZ:
        clip = resample(clip, ENHANCE_RATE_HZ)
    dst.parent.mkdir(parents=True, exist_ok=True)
    write_wav(enhance(clip, params, cfg), dst)
    log.info("enhanced %s -> %s", src, dst)


def _cmd_enhance(args) -> int:
    params = WienerParams(
        lambda_noise=args.lambda_noise,
        vad_margin_db=args.vad_margin_db,
        gain_floor=10.0 ** (args.gain_floor_db / 20.0),
    )
    cfg = StftConfig()
    src = Path(args.input)
    if src.is_file():
        pairs = [(src, Path(src.name))]
    elif src.is_dir():
        pairs = [
            (p, p.relative_to(src))
            for p in sorted(src.rglob("*"))
            if p.is_file() and p.suffix.lower() == ".wav"
        ]
        if not pairs:
            raise CliDataError(f"no .wav files under {src}")
    else:
        raise CliDataError(f"input {src} does not exist")
    with _staged_dir(Path(args.out)) as tmp:
        for source, relative in pairs:
            _enhance_one(source, tmp / relative, params, cfg)
    print(f"enhanced {len(pairs)} file(s) into {args.out}")
    return EXIT_OK


# -- metrics ------------------------------------------------------------------


def _cmd_metrics_snr(args) -> int:
    if args.manifest:
        manifest = Path(args.manifest)
        records = load_manifest(manifest)
        rows = []
        for record in records:
            clean = read_wav(manifest.parent / record.clean_path)
            noise = read_wav(manifest.parent / record.noise_path)
            measured = 10.0 * float(
                np.log10(np.sum(clean.samples ** 2) / np.sum(noise.samples ** 2))
            )
            rows.append([record.clip_id, repr(record.snr_db), repr(measured)])
        text = "clip_id,snr_db_manifest,snr_db_measured\n" + "".join(
            ",".join(row) + "\n" for row in rows
        )
        if args.out:
            _write_text_atomic(Path(args.out), text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    if not (args.ref and args.deg):
        raise CliDataError("provide either --manifest or both --ref and --deg")
    value = global_snr_db(read_wav(args.ref), read_wav(args.deg))
    print(f"{value:.6f}")
    return EXIT_OK


def _read_mos_csv(path: Path) -> dict[str, float]:
    with open(path, newline="", encoding="utf-8") as f:
        sample = f.readline()
        delimiter = "\t" if "\t" in sample else ","
        f.seek(0)
        reader = csv.DictReader(f, delimiter=delimiter)
        if reader.fieldnames is None or not {"clip_id", "mos"} <= set(reader.fieldnames):
            raise CliDataError(f"{path}: need columns clip_id and mos")
        mos = {}
        for row in reader:
            if row["mos"] in (None, ""):
                continue  # clips without ratings export an empty MOS cell
            try:
                mos[row["clip_id"]] = float(row["mos"])
            except ValueError:
                raise CliDataError(
                    f"{path}: non-numeric mos for clip {row['clip_id']!r}"
                ) from None
    if not mos:
        raise CliDataError(f"{path}: no usable MOS rows")
    return mos


def _cmd_metrics_correlate(args) -> int:
    mos = _read_mos_csv(Path(args.mos))
    scores = ingest_external_scores(args.scores)
    report = correlate_with_mos(mos, scores)
    text = "metric,pearson_r,n\n" + "".join(
        f"{e.metric_name},{e.pearson_r!r},{e.n}\n" for e in report.entries
    )
    if args.out:
        _write_text_atomic(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- serve / report -----------------------------------------------------------


def _data_dir_or_fail(value: str | None) -> str:
    data_dir = value or os.environ.get("SNSD_DATA_DIR")
    if not data_dir:
        raise CliDataError("no data directory: pass --data-dir or set SNSD_DATA_DIR")
    return data_dir


def _cmd_serve(args) -> int:
    from .mos.server import run_server

    ui_dir = args.ui_dir
    if ui_dir is not None and not os.path.isdir(ui_dir):
        raise CliDataError(f"--ui-dir {ui_dir}: not a directory")
    run_server(
        _data_dir_or_fail(args.data_dir),
        host=args.host, port=args.port, ui_dir=ui_dir,
    )
    return EXIT_OK


def _cmd_report(args) -> int:
    from .mos.render import (
        by_noise_type_csv,
        clips_csv,
        histogram_csv,
        normalized_csv,
        report_json_bytes,
        summary_csv,
    )
    from .mos.store import StudyStore

    store = StudyStore(_data_dir_or_fail(args.data_dir))
    state = store.study(args.study)
    report = aggregate_mos(state)
    normalized = None
    if args.normalize:
        config = state.study.config
        measured = measured_anchors(report, config.anchor_conditions)
        normalized = normalize_to_reference(report, measured, config.reference_anchors)
    with _staged_dir(Path(args.out)) as tmp:
        (tmp / "summary.csv").write_text(summary_csv(report), encoding="utf-8")
        (tmp / "clips.csv").write_text(clips_csv(report), encoding="utf-8")
        (tmp / "histogram.csv").write_text(histogram_csv(report), encoding="utf-8")
        (tmp / "by_noise_type.csv").write_text(
            by_noise_type_csv(report), encoding="utf-8"
        )
        (tmp / "report.json").write_bytes(report_json_bytes(report, normalized))
        if normalized is not None:
            (tmp / "normalized.csv").write_text(
                normalized_csv(normalized), encoding="utf-8"
            )
    print(f"report for study {args.study} written to {args.out}")
    return EXIT_OK


# -- the parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisylab",
        description="Noisy-speech corpus synthesis, suppression, metrics, "
        "and a crowdsourced listening-test service.",
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0,
        help="increase log verbosity (-v info, -vv debug)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a noisy/clean/noise corpus")
    p.add_argument("--clean-dir", required=True, help="directory of clean speech WAVs")
    p.add_argument("--noise-dir", required=True, help="directory of noise WAVs")
    p.add_argument("--out", required=True, help="output corpus directory")
    p.add_argument("--clips", required=True, type=int, help="number of mixtures")
    p.add_argument("--snrs", type=_snr_list, default=(0.0, 5.0, 10.0, 15.0, 20.0),
                   help="comma-separated SNR levels in dB")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")
    p.add_argument("--length", type=float, default=10.0, help="clip length in seconds")
    p.add_argument("--rate", type=int, default=16000)
    p.add_argument("--level", type=float, default=-25.0,
                   help="clean speech RMS level in dBFS")
    p.add_argument("--workers", type=int, default=1, help="parallel workers")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("enhance", help="suppress noise in WAV files")
    p.add_argument("method", choices=["wiener"], help="enhancement method")
    p.add_argument("--in", dest="input", required=True,
                   help="input WAV file or directory (batch mirrors structure)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--gain-floor-db", type=float, default=-25.0)
    p.add_argument("--lambda", dest="lambda_noise", type=float, default=0.9)
    p.add_argument("--vad-margin-db", type=float, default=3.0)
    p.set_defaults(func=_cmd_enhance)

    p = sub.add_parser("metrics", help="objective quality measures")
    msub = p.add_subparsers(dest="metrics_command", required=True)

    ps = msub.add_parser("snr", help="reference-based SNR")
    ps.add_argument("--ref", help="reference (clean) WAV")
    ps.add_argument("--deg", help="degraded WAV")
    ps.add_argument("--manifest", help="corpus manifest: measure every triplet")
    ps.add_argument("--out", help="output CSV (manifest mode); stdout otherwise")
    ps.set_defaults(func=_cmd_metrics_snr)

    pc = msub.add_parser("correlate", help="Pearson correlation of metrics vs MOS")
    pc.add_argument("--mos", required=True, help="CSV with clip_id and mos columns")
    pc.add_argument("--scores", required=True,
                    help="CSV/TSV with clip_id, metric, score")
    pc.add_argument("--out", help="output CSV; stdout when omitted")
    pc.set_defaults(func=_cmd_metrics_correlate)

    p = sub.add_parser("serve", help="run the listening-test HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--data-dir", help="store root (default: $SNSD_DATA_DIR)")
    p.add_argument("--ui-dir",
                   help="directory of built rating-ui assets to serve at /ui")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("report", help="export MOS report tables from a study")
    p.add_argument("--data-dir", help="store root (default: $SNSD_DATA_DIR)")
    p.add_argument("--study", required=True, help="study id")
    p.add_argument("--out", required=True, help="output directory for CSV tables")
    p.add_argument("--normalize", action="store_true",
                   help="add anchor-normalized per-condition MOS")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CorpusGenerationError as exc:
        # mid-run failure: inputs already validated, treat as runtime
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (CliDataError, AudioError, CorpusError, MetricsError, StudyError,
            ClipTooShortError, FileNotFoundError, NotADirectoryError,
            IsADirectoryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
