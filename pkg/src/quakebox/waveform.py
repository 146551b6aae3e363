"""Seismogram traces and the preprocessing chain.

A trace enters as a :class:`WaveformRecord` and is detrended, demeaned,
band-pass filtered (zero phase), and decimated, in that order.  All
operations are pure functions: they never mutate their inputs and are safe
to run concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import signal

from .errors import DegenerateInput, InvalidBand, InvalidFactor

LABELS = ("event", "noise")


@dataclass(frozen=True, eq=False)
class WaveformRecord:
    """One seismogram trace with sampling metadata and provenance.

    ``event_id`` groups traces recorded by different stations for the same
    earthquake and is required exactly when ``label == "event"``; noise
    traces carry only their own ``trace_id``.  ``magnitude`` is the local
    magnitude from the catalog (at least 0.2 when present on an event).
    """

    trace_id: str
    station: str
    channel: str
    sample_rate: float
    samples: np.ndarray
    label: str
    event_id: Optional[str] = None
    magnitude: Optional[float] = None

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError(f"{self.trace_id}: samples must be a non-empty 1-D array")
        if not np.all(np.isfinite(samples)):
            raise ValueError(f"{self.trace_id}: samples contain NaN or infinity")
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        if not self.sample_rate > 0:
            raise ValueError(f"{self.trace_id}: sample_rate must be positive")
        if self.label not in LABELS:
            raise ValueError(f"{self.trace_id}: label must be one of {LABELS}")
        if self.label == "event" and not self.event_id:
            raise ValueError(f"{self.trace_id}: event records require an event_id")
        if self.label == "noise" and self.event_id is not None:
            raise ValueError(f"{self.trace_id}: noise records must not carry an event_id")
        if self.label == "event" and self.magnitude is not None and self.magnitude < 0.2:
            raise ValueError(
                f"{self.trace_id}: event magnitude {self.magnitude} below catalog floor 0.2"
            )

    def with_samples(self, samples: np.ndarray, sample_rate: float) -> "WaveformRecord":
        """Copy of this record with new samples, provenance preserved."""
        return replace(self, samples=samples, sample_rate=sample_rate)


@dataclass(frozen=True)
class PreprocessConfig:
    """Parameters of the preprocessing chain.

    ``window_len`` (optional) is the common post-decimation trace length in
    samples: longer traces are center-cropped to it and shorter ones are
    rejected, so every record in an experiment yields a comparable feature
    vector.
    """

    band_low_hz: float = 5.0
    band_high_hz: float = 25.0
    downsample_factor: int = 2
    filter_order: int = 4
    window_len: Optional[int] = None

    def __post_init__(self) -> None:
        if not (0 < self.band_low_hz < self.band_high_hz):
            raise InvalidBand(
                f"band must satisfy 0 < low < high, got [{self.band_low_hz}, {self.band_high_hz}]"
            )
        if not (isinstance(self.downsample_factor, int) and self.downsample_factor >= 1):
            raise InvalidFactor(f"downsample_factor must be a positive integer, got {self.downsample_factor!r}")
        if not (isinstance(self.filter_order, int) and self.filter_order >= 1):
            raise ValueError(f"filter_order must be a positive integer, got {self.filter_order!r}")
        if self.window_len is not None and self.window_len < 1:
            raise ValueError(f"window_len must be positive, got {self.window_len}")

    def validate_against(self, fs: float) -> None:
        """Check the band against the Nyquist frequency of a concrete trace."""
        if not self.band_high_hz < fs / 2:
            raise InvalidBand(
                f"band_high_hz {self.band_high_hz} must lie below Nyquist {fs / 2} (fs={fs})"
            )


def demean(samples: np.ndarray) -> np.ndarray:
    """Remove the arithmetic mean."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise DegenerateInput("cannot demean an empty sequence")
    return x - x.mean()


def detrend_linear(samples: np.ndarray) -> np.ndarray:
    """Remove the least-squares straight line."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise DegenerateInput("linear detrend needs at least 2 samples")
    t = np.arange(x.size, dtype=float)
    slope, intercept = np.polyfit(t, x, deg=1)
    return x - (slope * t + intercept)


def bandpass(samples: np.ndarray, fs: float, cfg: PreprocessConfig) -> np.ndarray:
    """Zero-phase Butterworth band-pass.

    The filter runs forward and backward (``sosfiltfilt``), which squares the
    magnitude response and cancels the phase, so arrival times survive for
    feature extraction.  Edges are mirror-padded by one settling length
    (three periods of the low corner) to keep transients out of short traces.
    """
    cfg.validate_against(fs)
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise DegenerateInput("bandpass needs at least 2 samples")
    sos = signal.butter(
        cfg.filter_order,
        [cfg.band_low_hz, cfg.band_high_hz],
        btype="bandpass",
        fs=fs,
        output="sos",
    )
    settle = int(round(3 * fs / cfg.band_low_hz))
    padlen = min(x.size - 1, settle)
    return signal.sosfiltfilt(sos, x, padtype="even", padlen=padlen)


def downsample(
    samples: np.ndarray, factor: int, *, assume_bandlimited: bool = False
) -> np.ndarray:
    """Keep every ``factor``-th sample; output length is ceil(n / factor).

    Unless the caller guarantees the signal is already band-limited below the
    new Nyquist (the preprocessing chain does, via its band-pass), a
    zero-phase order-8 Butterworth low-pass at 0.8x the new Nyquist is
    applied first to prevent aliasing.
    """
    if not (isinstance(factor, int) and factor >= 1):
        raise InvalidFactor(f"factor must be a positive integer, got {factor!r}")
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise DegenerateInput("cannot downsample an empty sequence")
    if factor == 1:
        return x.copy()
    if not assume_bandlimited:
        sos = signal.butter(8, 0.8 / factor, btype="lowpass", output="sos")
        padlen = min(x.size - 1, 30 * factor)
        x = signal.sosfiltfilt(sos, x, padtype="even", padlen=padlen)
    return x[::factor].copy()


def preprocess(record: WaveformRecord, cfg: PreprocessConfig) -> WaveformRecord:
    """Apply detrend, demean, band-pass, and decimation to one record.

    The output sample rate is ``record.sample_rate / cfg.downsample_factor``.
    Decimation skips its own anti-alias filter only when the band-pass has
    already confined the signal below the post-decimation Nyquist.  When the
    config fixes a window length, the result is center-cropped to it;
    too-short traces raise :class:`DegenerateInput`.
    """
    fs = record.sample_rate
    x = detrend_linear(record.samples)
    x = demean(x)
    x = bandpass(x, fs, cfg)
    factor = cfg.downsample_factor
    bandlimited = cfg.band_high_hz < fs / (2 * factor)
    x = downsample(x, factor, assume_bandlimited=bandlimited)
    if cfg.window_len is not None:
        if x.size < cfg.window_len:
            raise DegenerateInput(
                f"{record.trace_id}: {x.size} samples after preprocessing, "
                f"need {cfg.window_len}"
            )
        start = (x.size - cfg.window_len) // 2
        x = x[start : start + cfg.window_len]
    return record.with_samples(x, fs / factor)
