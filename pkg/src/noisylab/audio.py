"""Mono audio I/O, resampling, level measurement and normalization.

Conventions used across the toolkit:
  - samples are float64 in [-1, 1], mono; 16 kHz is the canonical rate
  - dBFS is RMS-referenced with full scale amplitude 1.0, so a full-scale
    square wave sits at 0 dBFS and a full-scale sine at -3.01 dBFS
  - PCM16 maps to float by division by 32768
"""
from __future__ import annotations

import struct
import wave
from dataclasses import dataclass
from math import gcd
from pathlib import Path

import numpy as np
from scipy.signal import resample_poly

PCM16_SCALE = 32768.0

# WAVE fmt-chunk codec tags
_FMT_PCM = 0x0001
_FMT_IEEE_FLOAT = 0x0003
_FMT_EXTENSIBLE = 0xFFFE


class AudioError(Exception):
    pass


class WavFormatError(AudioError):
    """File is not a well-formed RIFF/WAVE container."""


class UnsupportedCodecError(AudioError):
    """Valid WAVE file, but not PCM16 or float32."""


class SilentClipError(AudioError):
    """Operation undefined on an all-zero signal."""


class SampleRateMismatchError(AudioError):
    """Clips with different sample rates cannot be combined."""


@dataclass
class AudioClip:
    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError(f"AudioClip must be mono 1-D, got shape {self.samples.shape}")
        if self.samples.size < 1:
            raise ValueError("AudioClip must contain at least one sample")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("AudioClip contains non-finite samples")
        if int(self.sample_rate_hz) <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate_hz}")
        self.sample_rate_hz = int(self.sample_rate_hz)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


def _parse_fmt_chunk(body: bytes) -> tuple[int, int, int, int]:
    if len(body) < 16:
        raise WavFormatError("fmt chunk too short")
    fmt_tag, n_channels, rate, _byte_rate, block_align, bits = struct.unpack("<HHIIHH", body[:16])
    if fmt_tag == _FMT_EXTENSIBLE:
        # actual codec is the first two bytes of the SubFormat GUID
        if len(body) < 40:
            raise WavFormatError("extensible fmt chunk too short")
        fmt_tag = struct.unpack("<H", body[24:26])[0]
    return fmt_tag, n_channels, rate, bits


def read_wav(path: str | Path) -> AudioClip:
    """Read a RIFF/WAVE file as a mono clip at its native rate.

    Accepts PCM16 and float32, any channel count; multichannel input is
    downmixed by per-sample channel mean. PCM16 maps to [-1, 1) via /32768.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        chunk_id = raw[pos:pos + 4]
        (size,) = struct.unpack("<I", raw[pos + 4:pos + 8])
        body = raw[pos + 8:pos + 8 + size]
        if chunk_id == b"fmt ":
            fmt = _parse_fmt_chunk(body)
        elif chunk_id == b"data":
            if len(body) < size:
                raise WavFormatError(f"{path}: data chunk truncated")
            data = body
            break
        pos += 8 + size + (size % 2)  # chunks are word-aligned

    if fmt is None or data is None:
        raise WavFormatError(f"{path}: missing fmt or data chunk")
    fmt_tag, n_channels, rate, bits = fmt
    if n_channels < 1 or rate <= 0:
        raise WavFormatError(f"{path}: invalid fmt chunk")

    if fmt_tag == _FMT_PCM and bits == 16:
        dtype, scale = np.dtype("<i2"), PCM16_SCALE
    elif fmt_tag == _FMT_IEEE_FLOAT and bits == 32:
        dtype, scale = np.dtype("<f4"), 1.0
    else:
        raise UnsupportedCodecError(
            f"{path}: unsupported codec (format tag {fmt_tag}, {bits}-bit); "
            "only PCM16 and float32 are accepted"
        )

    frame_bytes = dtype.itemsize * n_channels
    n_frames = len(data) // frame_bytes
    if n_frames < 1:
        raise WavFormatError(f"{path}: empty data chunk")
    x = np.frombuffer(data[:n_frames * frame_bytes], dtype=dtype).astype(np.float64) / scale
    if n_channels > 1:
        x = x.reshape(-1, n_channels).mean(axis=1)
    if not np.all(np.isfinite(x)):
        raise WavFormatError(f"{path}: non-finite samples in float data")
    return AudioClip(x, rate)


def write_wav(clip: AudioClip, path: str | Path) -> None:
    """Write a clip as PCM16 mono little-endian.

    Samples are clamped to [-1, 1] and quantized round-to-nearest, so a
    read-back differs from the original by at most 1/32768 per sample.
    """
    pcm = np.rint(np.clip(clip.samples, -1.0, 1.0) * PCM16_SCALE)
    pcm = np.clip(pcm, -32768, 32767).astype("<i2")
    with open(path, "wb") as f, wave.open(f, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(clip.sample_rate_hz)
        w.writeframes(pcm.tobytes())


# Kaiser beta for a >= 60 dB stopband (0.1102 * (60 - 8.7))
_KAISER_BETA_60DB = 5.65326


def resample(clip: AudioClip, target_hz: int) -> AudioClip:
    """Polyphase windowed-sinc resampling; identity when rates already match."""
    target_hz = int(target_hz)
    if target_hz <= 0:
        raise ValueError(f"target rate must be positive, got {target_hz}")
    if target_hz == clip.sample_rate_hz:
        return clip
    g = gcd(clip.sample_rate_hz, target_hz)
    up, down = target_hz // g, clip.sample_rate_hz // g
    y = resample_poly(clip.samples, up, down, window=("kaiser", _KAISER_BETA_60DB))
    return AudioClip(y, target_hz)


def measure_rms_dbfs(clip: AudioClip) -> float:
    """RMS level in dBFS: 20*log10(sqrt(mean(samples^2)))."""
    mean_sq = float(np.mean(clip.samples ** 2))
    if mean_sq == 0.0:
        raise SilentClipError("RMS level undefined for an all-zero clip")
    return 10.0 * np.log10(mean_sq)


def normalize_to_dbfs(clip: AudioClip, target_dbfs: float) -> tuple[AudioClip, float]:
    """Scale the clip so its RMS level equals target_dbfs; returns (clip, gain).

    No clipping protection: callers that mix must handle peaks themselves.
    """
    current = measure_rms_dbfs(clip)
    gain = 10.0 ** ((target_dbfs - current) / 20.0)
    return AudioClip(clip.samples * gain, clip.sample_rate_hz), gain


def concatenate(clips: list[AudioClip]) -> AudioClip:
    """Sample-exact concatenation of clips sharing one sample rate."""
    if not clips:
        raise ValueError("cannot concatenate an empty list of clips")
    rate = clips[0].sample_rate_hz
    for c in clips[1:]:
        if c.sample_rate_hz != rate:
            raise SampleRateMismatchError(
                f"mixed sample rates: {rate} vs {c.sample_rate_hz}"
            )
    return AudioClip(np.concatenate([c.samples for c in clips]), rate)
