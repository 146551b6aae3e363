"""Stand-ins for the four waveform features of the prior detection model.

The original four statistics are not published, so the registry ships four
documented surrogates under the same W1..W4 codes: amplitude (RMS), two
spectral shape measures, and a transient-energy ratio.  Experiments
parameterize the feature set, so these can be swapped for the real ones
without touching the pipeline.

Unlike the canonical catalog these operate on raw (not standardized)
samples: amplitude and transient energy are exactly the information
standardization would destroy.
"""

from __future__ import annotations

import numpy as np


def root_mean_square(x: np.ndarray) -> float:
    """RMS amplitude of the trace."""
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(np.mean(x**2)))


def _power_spectrum_demeaned(x: np.ndarray) -> np.ndarray:
    return np.abs(np.fft.rfft(x - x.mean())) ** 2


def dominant_frequency(x: np.ndarray) -> float:
    """Frequency (cycles/sample) of the largest nonzero spectral peak."""
    x = np.asarray(x, dtype=float)
    power = _power_spectrum_demeaned(x)
    k = int(np.argmax(power[1:])) + 1
    return k / x.size


def spectral_centroid(x: np.ndarray) -> float:
    """Power-weighted mean frequency (cycles/sample), DC excluded."""
    x = np.asarray(x, dtype=float)
    power = _power_spectrum_demeaned(x)[1:]
    freqs = np.arange(1, power.size + 1) / x.size
    return float((freqs * power).sum() / power.sum())


def short_long_energy_ratio(x: np.ndarray) -> float:
    """Maximum short-window to long-window mean energy ratio (STA/LTA style).

    Both windows end at the same sample; the short window is n/20 samples
    (at least 2) and the long one n/5 (at least twice the short).  Positions
    whose long window carries no energy are skipped.
    """
    x = np.asarray(x, dtype=float)
    energy = x**2
    n = x.size
    short = max(2, n // 20)
    long = max(2 * short, n // 5)
    cum = np.concatenate(([0.0], np.cumsum(energy)))
    ends = np.arange(long, n + 1)
    sta = (cum[ends] - cum[ends - short]) / short
    lta = (cum[ends] - cum[ends - long]) / long
    valid = lta > 0
    return float((sta[valid] / lta[valid]).max())
