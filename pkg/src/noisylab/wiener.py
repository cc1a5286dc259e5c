"""Wiener-filter noise suppressor.

Analysis runs on 20 ms frames with 50% overlap (Hann window, zero-padded
FFT). An energy-threshold VAD with an adaptive noise floor marks noise-only
frames; the noise power spectrum is tracked there by exponential smoothing.
Per bin, the speech power is estimated by spectral subtraction and the gain
Ps/(Ps+Pn) is applied to the noisy spectrum, keeping the noisy phase. The
signal is rebuilt by weighted overlap-add.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import get_window

from .audio import AudioClip

_ENERGY_EPS = 1e-12  # -120 dB floor for log energies


class ClipTooShortError(Exception):
    pass


@dataclass(frozen=True)
class StftConfig:
    frame_ms: float = 20.0
    overlap_fraction: float = 0.5
    window: str = "hann"
    fft_size: int | None = None  # default: next power of two >= frame length

    def __post_init__(self):
        if not 0.0 < self.overlap_fraction < 1.0:
            raise ValueError("overlap_fraction must be in (0, 1)")
        if self.frame_ms <= 0:
            raise ValueError("frame_ms must be positive")

    def frame_length(self, sample_rate_hz: int) -> int:
        exact = self.frame_ms * sample_rate_hz / 1000.0
        n = round(exact)
        if abs(exact - n) > 1e-9 or n < 2:
            raise ValueError(
                f"frame of {self.frame_ms} ms is not integral at {sample_rate_hz} Hz"
            )
        return n

    def hop_length(self, sample_rate_hz: int) -> int:
        hop = round(self.frame_length(sample_rate_hz) * (1.0 - self.overlap_fraction))
        return max(1, hop)

    def fft_length(self, sample_rate_hz: int) -> int:
        if self.fft_size is not None:
            return self.fft_size
        return 1 << (self.frame_length(sample_rate_hz) - 1).bit_length()


@dataclass(frozen=True)
class WienerParams:
    lambda_noise: float = 0.9            # noise-PSD smoothing, ~200 ms time constant
    vad_margin_db: float = 3.0           # noise-only when below floor + margin
    init_noise_frames: int = 5           # ~100 ms bootstrap treated as noise
    gain_floor: float = 10.0 ** (-25 / 20)  # amplitude floor (-25 dB)
    floor_rise: float = 0.9995           # upward smoothing of the noise-floor statistic

    def __post_init__(self):
        if not 0.0 < self.lambda_noise < 1.0:
            raise ValueError("lambda_noise must be in (0, 1)")
        if not 0.0 <= self.gain_floor < 1.0:
            raise ValueError("gain_floor must be in [0, 1)")


@dataclass
class NoiseTracker:
    noise_psd: np.ndarray
    speech_psd_estimate: np.ndarray
    noise_floor_db: float = np.inf
    frames_seen: int = 0

    @classmethod
    def fresh(cls, n_bins: int) -> "NoiseTracker":
        return cls(noise_psd=np.zeros(n_bins), speech_psd_estimate=np.zeros(n_bins))


def _frame_indices(n_samples: int, frame: int, hop: int) -> np.ndarray:
    n_frames = (n_samples - frame) // hop + 1
    return hop * np.arange(n_frames)[:, None] + np.arange(frame)[None, :]


def stft(clip: AudioClip, cfg: StftConfig = StftConfig()) -> np.ndarray:
    """Hann-windowed short-time spectra, shape (n_frames, fft/2 + 1)."""
    frame = cfg.frame_length(clip.sample_rate_hz)
    hop = cfg.hop_length(clip.sample_rate_hz)
    if len(clip) < frame:
        raise ClipTooShortError(f"clip of {len(clip)} samples is shorter than one frame ({frame})")
    w = get_window(cfg.window, frame)
    frames = clip.samples[_frame_indices(len(clip), frame, hop)]
    return np.fft.rfft(frames * w, n=cfg.fft_length(clip.sample_rate_hz), axis=1)


def istft(
    spectra: np.ndarray,
    cfg: StftConfig,
    length: int,
    sample_rate_hz: int,
) -> AudioClip:
    """Weighted overlap-add reconstruction, normalized by the window-square sum."""
    frame = cfg.frame_length(sample_rate_hz)
    hop = cfg.hop_length(sample_rate_hz)
    spectra = np.atleast_2d(np.asarray(spectra))
    n_bins = cfg.fft_length(sample_rate_hz) // 2 + 1
    if spectra.shape[1] != n_bins:
        raise ValueError(f"expected {n_bins} bins per spectrum, got {spectra.shape[1]}")
    w = get_window(cfg.window, frame)
    frames = np.fft.irfft(spectra, n=cfg.fft_length(sample_rate_hz), axis=1)[:, :frame]
    y = np.zeros(length)
    norm = np.zeros(length)
    for m in range(spectra.shape[0]):
        start = m * hop
        if start >= length:
            break
        stop = min(start + frame, length)
        y[start:stop] += w[:stop - start] * frames[m, :stop - start]
        norm[start:stop] += w[:stop - start] ** 2
    out = np.where(norm > 1e-10, y / np.where(norm > 1e-10, norm, 1.0), 0.0)
    return AudioClip(out, sample_rate_hz)


def vad_is_noise_only(frame_energy_db: float, tracker: NoiseTracker, params: WienerParams) -> bool:
    """Energy-threshold VAD against an exponentially-smoothed minimum statistic.

    The noise floor drops immediately when energy falls below it and creeps
    up slowly otherwise, so sustained speech cannot lift it quickly. The
    first init_noise_frames frames are always treated as noise (bootstrap).
    """
    bootstrap = tracker.frames_seen < params.init_noise_frames
    if frame_energy_db < tracker.noise_floor_db:
        tracker.noise_floor_db = frame_energy_db
    else:
        tracker.noise_floor_db = (
            params.floor_rise * tracker.noise_floor_db
            + (1.0 - params.floor_rise) * frame_energy_db
        )
    tracker.frames_seen += 1
    return bootstrap or frame_energy_db < tracker.noise_floor_db + params.vad_margin_db


def update_noise_psd(
    tracker: NoiseTracker,
    spectrum: np.ndarray,
    is_noise_only: bool,
    params: WienerParams,
) -> None:
    """During noise-only frames: Pn <- lambda*Pn + (1-lambda)*|X|^2."""
    if is_noise_only:
        power = np.abs(spectrum) ** 2
        tracker.noise_psd = (
            params.lambda_noise * tracker.noise_psd + (1.0 - params.lambda_noise) * power
        )


def wiener_gain_law(speech_psd: np.ndarray, noise_psd: np.ndarray) -> np.ndarray:
    """The bare suppression law Ps/(Ps+Pn); zero where both inputs are zero."""
    ps = np.asarray(speech_psd, dtype=np.float64)
    pn = np.asarray(noise_psd, dtype=np.float64)
    denom = ps + pn
    return np.divide(ps, denom, out=np.zeros_like(denom), where=denom > 0)


def wiener_gain(spectrum: np.ndarray, tracker: NoiseTracker, params: WienerParams) -> np.ndarray:
    """Per-bin gain from spectral-subtraction speech PSD, floored from below."""
    power = np.abs(spectrum) ** 2
    ps = np.maximum(power - tracker.noise_psd, 0.0)
    tracker.speech_psd_estimate = ps
    return np.maximum(wiener_gain_law(ps, tracker.noise_psd), params.gain_floor)


def frame_energies_db(samples: np.ndarray, frame: int, hop: int) -> np.ndarray:
    frames = samples[_frame_indices(len(samples), frame, hop)]
    return 10.0 * np.log10(np.mean(frames ** 2, axis=1) + _ENERGY_EPS)


def enhance(
    clip: AudioClip,
    params: WienerParams = WienerParams(),
    cfg: StftConfig = StftConfig(),
) -> AudioClip:
    """Full suppression pipeline; output has the input's length and rate.

    The magnitude of each bin is scaled by the Wiener gain while the noisy
    phase is kept. Input shorter than 0.5 s is rejected (the noise tracker
    needs a bootstrap period). The signal is reflect-padded by one frame on
    each side so edge frames reconstruct cleanly.
    """
    if clip.duration_s < 0.5:
        raise ClipTooShortError("enhancement needs at least 0.5 s of audio")
    rate = clip.sample_rate_hz
    frame = cfg.frame_length(rate)
    hop = cfg.hop_length(rate)

    x = np.pad(clip.samples, frame, mode="reflect")
    padded = AudioClip(x, rate)
    spectra = stft(padded, cfg)
    energies = frame_energies_db(x, frame, hop)

    tracker = NoiseTracker.fresh(spectra.shape[1])
    gains = np.empty((spectra.shape[0], spectra.shape[1]))
    for m in range(spectra.shape[0]):
        noise_only = vad_is_noise_only(float(energies[m]), tracker, params)
        update_noise_psd(tracker, spectra[m], noise_only, params)
        gains[m] = wiener_gain(spectra[m], tracker, params)

    out = istft(spectra * gains, cfg, len(x), rate)
    return AudioClip(out.samples[frame:frame + len(clip)], rate)
