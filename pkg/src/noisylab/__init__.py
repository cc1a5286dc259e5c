"""Noisy-speech corpus synthesis, Wiener-filter enhancement, objective
quality metrics, and a self-hosted crowdsourced MOS listening-test service."""

__version__ = "0.1.0"

from .audio import AudioClip, read_wav, write_wav  # noqa: F401
