"""Scalable noisy-speech corpus generation.

Clean utterances from one speaker are concatenated to the requested clip
length, a noise segment of the same length is cut from a recording of one
noise type, and the pair is mixed at a target SNR. Every clip is written as
a (noisy, clean, noise) triplet plus one manifest row.

Sampling is cell-balanced: the generator cycles through every
(speaker, noise_type, snr) combination before repeating any, so per-condition
slices come out equally sized. All randomness is derived from (seed, clip
index), which makes generation embarrassingly parallel with byte-identical
output for any worker count.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from math import ceil
from pathlib import Path

import numpy as np

from .audio import (
    AudioClip,
    AudioError,
    SilentClipError,
    concatenate,
    measure_rms_dbfs,
    normalize_to_dbfs,
    read_wav,
    resample,
    write_wav,
)

logger = logging.getLogger(__name__)

CLIP_GUARD_PEAK = 0.99  # rescale the whole triplet when any peak exceeds this

MANIFEST_NAME = "manifest.tsv"
MANIFEST_COLUMNS = (
    "clip_id", "noisy_path", "clean_path", "noise_path",
    "snr_db", "noise_type", "speaker_id", "duration_s", "post_mix_gain",
)

_MASK64 = (1 << 64) - 1
# sub-stream tags for per-purpose RNGs derived from (seed, tag, ...)
_STREAM_CYCLE = 0
_STREAM_SEGMENT = 1
_STREAM_NOISE = 2


class CorpusError(Exception):
    pass


class EmptySourceDirError(CorpusError):
    pass


class UnknownSpeakerError(CorpusError):
    pass


class UnknownNoiseTypeError(CorpusError):
    pass


class CorpusGenerationError(CorpusError):
    """Raised when clip generation aborts; carries the completed-clip count."""

    def __init__(self, message: str, completed: int):
        super().__init__(f"{message} ({completed} clips completed)")
        self.completed = completed


@dataclass(frozen=True)
class Utterance:
    speaker_id: str
    path: str
    duration_s: float


@dataclass(frozen=True)
class NoiseRecording:
    noise_type: str
    path: str
    duration_s: float


@dataclass(frozen=True)
class SourceInventory:
    clean_utterances: tuple[Utterance, ...]
    noise_recordings: tuple[NoiseRecording, ...]
    warnings: tuple[str, ...] = ()

    @property
    def speakers(self) -> list[str]:
        return sorted({u.speaker_id for u in self.clean_utterances})

    @property
    def noise_types(self) -> list[str]:
        return sorted({n.noise_type for n in self.noise_recordings})

    def utterances_of(self, speaker_id: str) -> list[Utterance]:
        return [u for u in self.clean_utterances if u.speaker_id == speaker_id]

    def recordings_of(self, noise_type: str) -> list[NoiseRecording]:
        return [n for n in self.noise_recordings if n.noise_type == noise_type]


@dataclass(frozen=True)
class SynthesisConfig:
    total_clips: int
    snr_levels_db: tuple[float, ...]
    seed: int
    clip_length_s: float = 10.0
    sample_rate_hz: int = 16000
    target_level_dbfs: float = -25.0

    def __post_init__(self):
        if self.total_clips < 0:
            raise ValueError("total_clips must be >= 0")
        if self.clip_length_s <= 0:
            raise ValueError("clip_length_s must be positive")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        snrs = tuple(float(s) for s in self.snr_levels_db)
        if not snrs:
            raise ValueError("snr_levels_db must be non-empty")
        if len(set(snrs)) != len(snrs):
            raise ValueError("snr_levels_db must be distinct")
        object.__setattr__(self, "snr_levels_db", snrs)


@dataclass(frozen=True)
class MixtureRecord:
    clip_id: str
    noisy_path: str
    clean_path: str
    noise_path: str
    snr_db: float
    noise_type: str
    speaker_id: str
    duration_s: float
    post_mix_gain: float


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & _MASK64, *key]))


def _label_for(path: Path, root: Path) -> str:
    """Group label: first subdirectory under root, else filename prefix."""
    rel = path.relative_to(root)
    if len(rel.parts) > 1:
        return rel.parts[0]
    stem = path.stem
    return stem.split("_", 1)[0] if "_" in stem else stem


def _scan_dir(root: Path) -> tuple[list[tuple[str, str, float]], list[str]]:
    if not root.is_dir():
        raise NotADirectoryError(f"{root} is not a directory")
    files = sorted(p for p in root.rglob("*") if p.is_file() and p.suffix.lower() == ".wav")
    entries = []
    warnings = []
    for p in files:
        try:
            clip = read_wav(p)
        except AudioError as exc:
            warnings.append(f"{p}: {exc}")
            logger.warning("skipping undecodable file %s: %s", p, exc)
            continue
        entries.append((_label_for(p, root), str(p), clip.duration_s))
    entries.sort(key=lambda e: (e[0], e[1]))
    return entries, warnings


def scan_sources(clean_dir: str | Path, noise_dir: str | Path) -> SourceInventory:
    """Index clean-speech and noise directories into a SourceInventory.

    Speaker ids come from the subdirectory name (or the filename prefix
    before the first underscore for flat layouts); noise types likewise.
    Undecodable files are skipped and reported in the inventory's warnings.
    """
    clean, warn_c = _scan_dir(Path(clean_dir))
    noise, warn_n = _scan_dir(Path(noise_dir))
    if not clean:
        raise EmptySourceDirError(f"no decodable .wav files under {clean_dir}")
    if not noise:
        raise EmptySourceDirError(f"no decodable .wav files under {noise_dir}")
    return SourceInventory(
        clean_utterances=tuple(Utterance(*e) for e in clean),
        noise_recordings=tuple(NoiseRecording(*e) for e in noise),
        warnings=tuple(warn_c + warn_n),
    )


@lru_cache(maxsize=512)
def _load_resampled(path: str, rate: int) -> AudioClip:
    return resample(read_wav(path), rate)


def assemble_clean_segment(
    inventory: SourceInventory,
    speaker_id: str,
    clip_length_s: float,
    sample_rate_hz: int,
    rng: np.random.Generator,
) -> AudioClip:
    """Concatenate randomly chosen utterances of one speaker to the target length.

    Utterances are drawn without replacement (a single shuffle) until the pool
    is exhausted, then with replacement; the result is trimmed to exactly
    round(clip_length_s * sample_rate_hz) samples.
    """
    utts = inventory.utterances_of(speaker_id)
    if not utts:
        raise UnknownSpeakerError(f"no utterances for speaker {speaker_id!r}")
    target = int(round(clip_length_s * sample_rate_hz))
    order = rng.permutation(len(utts))
    parts: list[AudioClip] = []
    total = 0
    draws = 0
    while total < target:
        if draws < len(utts):
            idx = order[draws]
        else:
            idx = rng.integers(len(utts))
        clip = _load_resampled(utts[idx].path, sample_rate_hz)
        parts.append(clip)
        total += len(clip)
        draws += 1
    whole = concatenate(parts)
    return AudioClip(whole.samples[:target], sample_rate_hz)


def assemble_noise_segment(
    inventory: SourceInventory,
    noise_type: str,
    length_samples: int,
    sample_rate_hz: int,
    rng: np.random.Generator,
) -> AudioClip:
    """Cut a random contiguous segment from a random recording of one type.

    A recording shorter than the requested length is wrapped end-to-start.
    """
    recs = inventory.recordings_of(noise_type)
    if not recs:
        raise UnknownNoiseTypeError(f"no recordings for noise type {noise_type!r}")
    rec = _load_resampled(recs[rng.integers(len(recs))].path, sample_rate_hz)
    n = len(rec)
    if n >= length_samples:
        offset = int(rng.integers(n - length_samples + 1))
        samples = rec.samples[offset:offset + length_samples]
    else:
        offset = int(rng.integers(n))
        idx = (offset + np.arange(length_samples)) % n
        samples = rec.samples[idx]
    return AudioClip(samples, sample_rate_hz)


def mix_at_snr(
    speech: AudioClip,
    noise: AudioClip,
    snr_db: float,
    target_level_dbfs: float = -25.0,
) -> tuple[AudioClip, AudioClip, AudioClip, float]:
    """Mix speech and noise at an exact RMS SNR; returns (noisy, clean, noise, gain).

    The speech is normalized to target_level_dbfs and the noise scaled to hit
    the SNR. If any peak of the triplet would exceed CLIP_GUARD_PEAK, all
    three signals are rescaled by a common post-mix gain, which leaves the
    SNR and the additivity noisy == clean + noise intact.
    """
    if len(speech) != len(noise):
        raise ValueError(f"length mismatch: speech {len(speech)} vs noise {len(noise)}")
    if speech.sample_rate_hz != noise.sample_rate_hz:
        raise ValueError("speech and noise sample rates differ")
    clean_ref, _ = normalize_to_dbfs(speech, target_level_dbfs)
    noise_rms = float(np.sqrt(np.mean(noise.samples ** 2)))
    if noise_rms == 0.0:
        raise SilentClipError("cannot mix with an all-zero noise segment")
    clean_rms = float(np.sqrt(np.mean(clean_ref.samples ** 2)))
    noise_gain = clean_rms / (noise_rms * 10.0 ** (snr_db / 20.0))
    noise_scaled = noise.samples * noise_gain

    # guard peaks of all three written signals, not just the mixture
    peak = max(
        float(np.max(np.abs(clean_ref.samples + noise_scaled))),
        float(np.max(np.abs(clean_ref.samples))),
        float(np.max(np.abs(noise_scaled))),
    )
    post_mix_gain = CLIP_GUARD_PEAK / peak if peak > CLIP_GUARD_PEAK else 1.0

    clean_out = clean_ref.samples * post_mix_gain
    noise_out = noise_scaled * post_mix_gain
    noisy = clean_out + noise_out  # additive by construction
    rate = speech.sample_rate_hz
    return (
        AudioClip(noisy, rate),
        AudioClip(clean_out, rate),
        AudioClip(noise_out, rate),
        post_mix_gain,
    )


def _cells(inventory: SourceInventory, config: SynthesisConfig) -> list[tuple[str, str, float]]:
    return [
        (spk, nt, snr)
        for spk in inventory.speakers
        for nt in inventory.noise_types
        for snr in config.snr_levels_db
    ]


# Worker-process state, set once per worker by _init_worker.
_W: dict = {}


def _init_worker(inventory: SourceInventory, config: SynthesisConfig, out_dir: str) -> None:
    cells = _cells(inventory, config)
    _W.update(
        inv=inventory,
        cfg=config,
        out=Path(out_dir),
        cells=cells,
        speaker_index={s: i for i, s in enumerate(inventory.speakers)},
        perms={},       # cycle -> permutation of cell indices
        segments={},    # (speaker, cycle) -> AudioClip
    )


def _cell_for(index: int) -> tuple[tuple[str, str, float], int]:
    cells, cfg = _W["cells"], _W["cfg"]
    cycle, pos = divmod(index, len(cells))
    if cycle not in _W["perms"]:
        _W["perms"][cycle] = _rng(cfg.seed, _STREAM_CYCLE, cycle).permutation(len(cells))
    return cells[_W["perms"][cycle][pos]], cycle


def _segment_for(speaker: str, cycle: int) -> AudioClip:
    key = (speaker, cycle)
    if key not in _W["segments"]:
        cfg = _W["cfg"]
        rng = _rng(cfg.seed, _STREAM_SEGMENT, _W["speaker_index"][speaker], cycle)
        _W["segments"][key] = assemble_clean_segment(
            _W["inv"], speaker, cfg.clip_length_s, cfg.sample_rate_hz, rng
        )
    return _W["segments"][key]


def _generate_clip(index: int) -> MixtureRecord:
    cfg = _W["cfg"]
    (speaker, noise_type, snr), cycle = _cell_for(index)
    clean_seg = _segment_for(speaker, cycle)
    noise_rng = _rng(cfg.seed, _STREAM_NOISE, index)
    noise_seg = assemble_noise_segment(
        _W["inv"], noise_type, len(clean_seg), cfg.sample_rate_hz, noise_rng
    )
    noisy, clean, noise, gain = mix_at_snr(clean_seg, noise_seg, snr, cfg.target_level_dbfs)

    clip_id = f"clip{index:06d}"
    paths = {}
    for kind, clip in (("noisy", noisy), ("clean", clean), ("noise", noise)):
        rel = f"{kind}/{clip_id}.wav"
        write_wav(clip, _W["out"] / rel)
        paths[kind] = rel
    return MixtureRecord(
        clip_id=clip_id,
        noisy_path=paths["noisy"],
        clean_path=paths["clean"],
        noise_path=paths["noise"],
        snr_db=snr,
        noise_type=noise_type,
        speaker_id=speaker,
        duration_s=len(clean_seg) / cfg.sample_rate_hz,
        post_mix_gain=gain,
    )


def write_manifest(records: list[MixtureRecord], path: str | Path) -> None:
    lines = ["\t".join(MANIFEST_COLUMNS)]
    for r in records:
        lines.append("\t".join([
            r.clip_id, r.noisy_path, r.clean_path, r.noise_path,
            repr(r.snr_db), r.noise_type, r.speaker_id,
            repr(r.duration_s), repr(r.post_mix_gain),
        ]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_manifest(path: str | Path) -> list[MixtureRecord]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or tuple(lines[0].split("\t")) != MANIFEST_COLUMNS:
        raise CorpusError(f"{path}: not a corpus manifest")
    records = []
    for line in lines[1:]:
        f = line.split("\t")
        if len(f) != len(MANIFEST_COLUMNS):
            raise CorpusError(f"{path}: malformed manifest row: {line!r}")
        records.append(MixtureRecord(
            clip_id=f[0], noisy_path=f[1], clean_path=f[2], noise_path=f[3],
            snr_db=float(f[4]), noise_type=f[5], speaker_id=f[6],
            duration_s=float(f[7]), post_mix_gain=float(f[8]),
        ))
    return records


def synthesize_corpus(
    inventory: SourceInventory,
    config: SynthesisConfig,
    out_dir: str | Path,
    workers: int = 1,
) -> tuple[list[MixtureRecord], Path]:
    """Generate the corpus under out_dir; returns (records, manifest path).

    Output layout: noisy/, clean/, noise/ triplets plus manifest.tsv with
    paths relative to the manifest. Fully deterministic for a given
    (inventory, config), independent of the worker count.
    """
    out = Path(out_dir)
    for sub in ("noisy", "clean", "noise"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    records: list[MixtureRecord] = []
    if config.total_clips > 0:
        if workers <= 1:
            _init_worker(inventory, config, str(out))
            try:
                for i in range(config.total_clips):
                    records.append(_generate_clip(i))
            except (AudioError, CorpusError) as exc:
                raise CorpusGenerationError(str(exc), completed=len(records)) from exc
        else:
            with ProcessPoolExecutor(
                max_workers=workers,
                initializer=_init_worker,
                initargs=(inventory, config, str(out)),
            ) as pool:
                try:
                    for rec in pool.map(_generate_clip, range(config.total_clips), chunksize=16):
                        records.append(rec)
                except (AudioError, CorpusError) as exc:
                    raise CorpusGenerationError(str(exc), completed=len(records)) from exc

    manifest_path = out / MANIFEST_NAME
    write_manifest(records, manifest_path)
    return records, manifest_path
