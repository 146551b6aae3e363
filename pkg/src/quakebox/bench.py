"""Benchmark harness: splits, noise-ratio datasets, sweeps, synthetic data.

Partitioning is by event, never by trace: all traces of one earthquake land
in the same split, which is what keeps test scores honest when several
stations record the same event.  Ratio datasets keep every positive and
draw noise without replacement from a pool; the draw is a seeded shuffle
prefix, so for a fixed seed the noise subsets are nested as the ratio
grows, isolating the imbalance effect from sampling noise.

External model predictions (e.g. a pre-trained deep detector) enter through
a file; the harness never runs the model itself.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from .errors import (
    DegenerateInput,
    FormatError,
    IngestError,
    InsufficientNoise,
    TooFewEvents,
)
from .features.vectors import FeatureVector
from .metrics import EvalReport, report
from .model import ModelArtifact
from .seeds import derive_rng
from .waveform import WaveformRecord


# ---------------------------------------------------------------------------
# event-wise partitioning


@dataclass(frozen=True)
class SplitSpec:
    """Train/validation/test fractions applied per event (and per noise trace)."""

    fractions: Tuple[float, float, float] = (0.6, 0.2, 0.2)
    seed: int = 0

    def __post_init__(self) -> None:
        if any(f <= 0 for f in self.fractions):
            raise ValueError(f"fractions must be positive, got {self.fractions}")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ValueError(f"fractions must sum to 1, got {self.fractions}")


@dataclass(frozen=True)
class Split:
    train: List
    validation: List
    test: List


def _three_way_counts(n: int, fractions: Tuple[float, float, float]) -> Tuple[int, int, int]:
    """floor(train), floor(validation), remainder to test."""
    n_train = math.floor(fractions[0] * n)
    n_val = math.floor(fractions[1] * n)
    return n_train, n_val, n - n_train - n_val


def partition_by_event(records: Sequence, spec: SplitSpec) -> Split:
    """Assign whole events to splits; noise traces split at the same fractions.

    Events are shuffled with the spec seed, then counted out as
    floor/floor/remainder.  No event id ever appears in two splits, which
    is the whole point.
    """
    event_ids: List[str] = []
    seen = set()
    noise_idx: List[int] = []
    for i, rec in enumerate(records):
        if rec.label == "event":
            if not rec.event_id:
                raise DegenerateInput(f"event record {rec.trace_id} lacks an event_id")
            if rec.event_id not in seen:
                seen.add(rec.event_id)
                event_ids.append(rec.event_id)
        else:
            noise_idx.append(i)

    n_events = len(event_ids)
    if n_events < 3:
        raise TooFewEvents(f"{n_events} event(s) cannot populate 3 splits")

    rng = derive_rng(spec.seed, "split-events")
    order = sorted(event_ids)
    shuffled = [order[i] for i in rng.permutation(n_events)]
    n_train, n_val, _ = _three_way_counts(n_events, spec.fractions)
    assignment = {}
    for rank, ev in enumerate(shuffled):
        if rank < n_train:
            assignment[ev] = 0
        elif rank < n_train + n_val:
            assignment[ev] = 1
        else:
            assignment[ev] = 2

    rng_noise = derive_rng(spec.seed, "split-noise")
    noise_order = rng_noise.permutation(len(noise_idx))
    k_train, k_val, _ = _three_way_counts(len(noise_idx), spec.fractions)
    noise_assignment = {}
    for rank, pos in enumerate(noise_order):
        if rank < k_train:
            noise_assignment[noise_idx[pos]] = 0
        elif rank < k_train + k_val:
            noise_assignment[noise_idx[pos]] = 1
        else:
            noise_assignment[noise_idx[pos]] = 2

    buckets: Tuple[List, List, List] = ([], [], [])
    for i, rec in enumerate(records):
        which = assignment[rec.event_id] if rec.label == "event" else noise_assignment[i]
        buckets[which].append(rec)
    return Split(train=buckets[0], validation=buckets[1], test=buckets[2])


# ---------------------------------------------------------------------------
# noise-ratio datasets and the sweep


@dataclass(frozen=True)
class RatioSpec:
    """Ladder of noise-to-signal ratios for the stress sweep."""

    ratios: Tuple[float, ...] = (1.73, 5.0, 10.0, 25.0, 50.0)
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.ratios or any(r <= 0 for r in self.ratios):
            raise ValueError(f"ratios must be positive, got {self.ratios}")


@dataclass(frozen=True)
class RatioDataset:
    items: List
    requested_ratio: float
    achieved_ratio: float


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5))


def build_ratio_dataset(
    positives: Sequence, noise_pool: Sequence, ratio: float, seed: int
) -> RatioDataset:
    """All positives plus round(ratio * n_pos) noise items, drawn seeded.

    Sampling without replacement is a shuffle prefix: the same seed yields
    nested noise subsets across increasing ratios.
    """
    if not positives:
        raise DegenerateInput("ratio dataset needs at least one positive")
    need = _round_half_away(ratio * len(positives))
    if need > len(noise_pool):
        raise InsufficientNoise(
            f"ratio {ratio} needs {need} noise items, pool has {len(noise_pool)} "
            f"(short {need - len(noise_pool)})"
        )
    rng = derive_rng(seed, "ratio-noise")
    order = rng.permutation(len(noise_pool))
    items = list(positives) + [noise_pool[i] for i in order[:need]]
    return RatioDataset(
        items=items,
        requested_ratio=float(ratio),
        achieved_ratio=need / len(positives),
    )


@dataclass(frozen=True)
class SweepTable:
    """Per-(source, ratio) evaluation grid, Table-style."""

    sources: Tuple[str, ...]
    ratios: Tuple[float, ...]
    reports: Mapping[Tuple[str, float], EvalReport]

    def mcc_row(self, source: str) -> List[float]:
        return [self.reports[(source, r)].mcc for r in self.ratios]

    def render_text(self) -> str:
        width = max(12, max((len(s) for s in self.sources), default=12) + 2)
        header = "source".ljust(width) + "".join(f"{r:>10g}" for r in self.ratios)
        lines = [header, "-" * len(header)]
        for s in self.sources:
            lines.append(s.ljust(width) + "".join(f"{m:>10.4f}" for m in self.mcc_row(s)))
        return "\n".join(lines) + "\n"


def sweep(
    models: Mapping[str, ModelArtifact],
    positives: Sequence[FeatureVector],
    noise_pool: Sequence[FeatureVector],
    spec: RatioSpec,
    external_preds: Mapping[str, Mapping[str, str]] | None = None,
) -> SweepTable:
    """Evaluate every model and prediction source at every ratio.

    Models were trained once at the baseline ratio and are reused as-is;
    only the evaluation set composition changes.  External sources must
    cover every trace id the ladder can draw.
    """
    if any(v.label != "event" for v in positives):
        raise DegenerateInput("positives must all carry the event label")
    if any(v.label != "noise" for v in noise_pool):
        raise DegenerateInput("noise pool must all carry the noise label")
    external_preds = external_preds or {}
    sources = tuple(models) + tuple(external_preds)
    reports: Dict[Tuple[str, float], EvalReport] = {}
    for ratio in spec.ratios:
        ds = build_ratio_dataset(positives, noise_pool, ratio, spec.seed)
        labels = [v.label for v in ds.items]
        for name, artifact in models.items():
            preds = [artifact.predict_label(v) for v in ds.items]
            reports[(name, ratio)] = report(labels, preds)
        for name, pred_map in external_preds.items():
            missing = [v.trace_id for v in ds.items if v.trace_id not in pred_map]
            if missing:
                raise IngestError(
                    f"prediction source {name!r} missing {len(missing)} trace id(s): "
                    + ", ".join(sorted(missing)[:10])
                )
            preds = [pred_map[v.trace_id] for v in ds.items]
            reports[(name, ratio)] = report(labels, preds)
    return SweepTable(sources=sources, ratios=tuple(spec.ratios), reports=reports)


SWEEP_FORMAT = "quakebox-sweep-v1"


def save_sweep(path: str | Path, table: SweepTable) -> None:
    payload = {
        "format": SWEEP_FORMAT,
        "sources": list(table.sources),
        "ratios": list(table.ratios),
        "cells": [
            {
                "source": s,
                "ratio": r,
                **table.reports[(s, r)].to_dict(),
            }
            for s in table.sources
            for r in table.ratios
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# synthetic corpus generation


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape of a synthetic waveform corpus.

    ``window_len`` is the raw trace length in samples at ``fs``; events are
    damped in-band wavelets embedded in colored noise at an SNR drawn
    log-uniformly from ``snr_range``.
    """

    n_events: int = 47
    traces_per_event: Tuple[int, int] = (30, 68)
    n_noise: int = 4000
    fs: float = 200.0
    window_len: int = 600
    snr_range: Tuple[float, float] = (1.5, 12.0)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_events < 1 or self.n_noise < 0:
            raise ValueError("n_events must be positive and n_noise nonnegative")
        lo, hi = self.traces_per_event
        if not (1 <= lo <= hi):
            raise ValueError(f"traces_per_event range invalid: {self.traces_per_event}")
        if self.fs <= 0 or self.window_len < 16:
            raise ValueError("fs must be positive and window_len at least 16")
        if not (0 < self.snr_range[0] <= self.snr_range[1]):
            raise ValueError(f"snr_range invalid: {self.snr_range}")


def _colored_noise(n: int, fs: float, rng: np.random.Generator) -> np.ndarray:
    """Unit-RMS noise with low-frequency emphasis (knee at 10 Hz)."""
    white = rng.standard_normal(n)
    spec = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, d=1.0 / fs)
    spec *= 1.0 / (1.0 + freqs / 10.0)
    x = np.fft.irfft(spec, n)
    return x / np.sqrt(np.mean(x**2))


def _event_wavelet(
    n: int, fs: float, rng: np.random.Generator, dominant_hz: float
) -> np.ndarray:
    """Damped sinusoid with a finite rise, arriving in the middle half."""
    t = np.arange(n) / fs
    arrival = rng.uniform(0.25, 0.55) * (n / fs)
    decay = rng.uniform(2.0, 6.0)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    dt = np.clip(t - arrival, 0.0, None)
    envelope = dt * np.exp(-decay * dt)
    w = envelope * np.sin(2.0 * np.pi * dominant_hz * dt + phase)
    rms = np.sqrt(np.mean(w**2))
    return w / rms if rms > 0 else w


def generate_synthetic(spec: SyntheticSpec) -> List[WaveformRecord]:
    """Synthetic labeled corpus: grouped event traces plus pure-noise traces.

    Every event spawns a random number of station traces sharing the event's
    dominant frequency, so event-wise splitting is exercised exactly as with
    real multi-station detections.  Fully reproducible from the spec seed.
    """
    records: List[WaveformRecord] = []
    log_lo, log_hi = np.log(spec.snr_range[0]), np.log(spec.snr_range[1])
    for e in range(spec.n_events):
        rng = derive_rng(spec.seed, "event", e)
        event_id = f"ev{e:04d}"
        dominant = rng.uniform(6.0, 24.0)
        event_snr = float(np.exp(rng.uniform(log_lo, log_hi)))
        magnitude = round(max(0.2, 0.2 + np.log10(1.0 + event_snr)), 2)
        n_traces = int(rng.integers(spec.traces_per_event[0], spec.traces_per_event[1] + 1))
        for s in range(n_traces):
            noise = _colored_noise(spec.window_len, spec.fs, rng)
            wavelet = _event_wavelet(spec.window_len, spec.fs, rng, dominant)
            snr = event_snr * rng.uniform(0.8, 1.25)
            records.append(
                WaveformRecord(
                    trace_id=f"{event_id}.st{s:03d}",
                    event_id=event_id,
                    station=f"st{s:03d}",
                    channel="GPZ",
                    sample_rate=spec.fs,
                    samples=noise + snr * wavelet,
                    label="event",
                    magnitude=magnitude,
                )
            )
    for i in range(spec.n_noise):
        rng = derive_rng(spec.seed, "noise", i)
        records.append(
            WaveformRecord(
                trace_id=f"noise{i:05d}",
                event_id=None,
                station=f"st{int(rng.integers(0, 100)):03d}",
                channel="GPZ",
                sample_rate=spec.fs,
                samples=_colored_noise(spec.window_len, spec.fs, rng),
                label="noise",
            )
        )
    return records


def generate_noise_pool(
    n_noise: int,
    fs: float = 200.0,
    window_len: int = 600,
    seed: int = 0,
    trace_prefix: str = "xnoise",
) -> List[WaveformRecord]:
    """Pure-noise records for the ratio sweep's enlarged negative pool.

    Mirrors drawing extra negatives from a separate collection period; ids
    get their own prefix so they cannot collide with a corpus' noise traces.
    """
    records = []
    for i in range(n_noise):
        rng = derive_rng(seed, "pool", i)
        records.append(
            WaveformRecord(
                trace_id=f"{trace_prefix}{i:06d}",
                event_id=None,
                station=f"st{int(rng.integers(0, 100)):03d}",
                channel="GPZ",
                sample_rate=fs,
                samples=_colored_noise(window_len, fs, rng),
                label="noise",
            )
        )
    return records


def generate_planted_features(
    n_samples: int,
    n_informative: int = 2,
    n_nuisance: int = 22,
    strength: float = 3.0,
    margin: float = 1.0,
    label_noise: float = 0.0,
    seed: int = 0,
) -> Tuple[List[FeatureVector], Tuple[str, ...]]:
    """Feature matrix with a known informative subset, for recovery tests.

    All columns are standard normal; the label is the sign of
    ``strength * sum(+/- x_informative)``.  Rows with |logit| below
    ``margin`` are resampled, so the classes are separated by a gap and a
    competent fit can score perfectly — which is what lets many differently
    regularized runs tie at the best validation score, as in real discovery
    campaigns.  ``label_noise`` flips that fraction of labels afterwards.
    Returns the vectors and the ground-truth informative codes (positions
    shuffled by the seed).
    """
    p = n_informative + n_nuisance
    rng = derive_rng(seed, "planted")
    positions = rng.permutation(p)[:n_informative]
    coef = np.zeros(p)
    for k, pos in enumerate(positions):
        coef[pos] = strength * (1.0 if k % 2 == 0 else -1.0)

    rows: List[np.ndarray] = []
    logits: List[float] = []
    while len(rows) < n_samples:
        batch = rng.standard_normal((n_samples, p))
        scores = batch @ coef
        keep = np.abs(scores) >= margin
        for row, s in zip(batch[keep], scores[keep]):
            rows.append(row)
            logits.append(float(s))
            if len(rows) == n_samples:
                break
    X = np.vstack(rows)
    y = np.asarray(logits) > 0
    if label_noise > 0:
        flips = rng.random(n_samples) < label_noise
        y = np.logical_xor(y, flips)

    codes = tuple(f"F{i+1:02d}" for i in range(p))
    vectors = [
        FeatureVector(
            trace_id=f"synth{i:05d}",
            values={c: float(X[i, j]) for j, c in enumerate(codes)},
            label="event" if y[i] else "noise",
        )
        for i in range(n_samples)
    ]
    informative = tuple(codes[pos] for pos in sorted(positions))
    return vectors, informative


# ---------------------------------------------------------------------------
# external prediction ingestion


def ingest_predictions(
    path: str | Path, expected_trace_ids: Iterable[str]
) -> Dict[str, str]:
    """Read a predictions file and return a complete trace_id -> label map.

    The TSV needs a ``trace_id`` column and either ``label`` or
    ``probability`` (optionally with a per-row ``threshold``, default 0.5).
    Duplicate or missing ids fail loudly with the ids listed; ids beyond the
    expected set are tolerated and dropped.
    """
    path = Path(path)
    expected = set(expected_trace_ids)
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if "trace_id" not in header:
            raise IngestError(f"{path}: header lacks a trace_id column")
        has_label = "label" in header
        has_prob = "probability" in header
        if not (has_label or has_prob):
            raise IngestError(f"{path}: need a label or probability column")
        idx = {name: header.index(name) for name in header}
        out: Dict[str, str] = {}
        duplicates: List[str] = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != len(header):
                raise FormatError(
                    f"expected {len(header)} columns, found {len(parts)}", line=lineno
                )
            tid = parts[idx["trace_id"]]
            if tid in out:
                duplicates.append(tid)
                continue
            if has_label:
                label = parts[idx["label"]]
                if label not in ("event", "noise"):
                    raise FormatError(f"bad label {label!r}", line=lineno)
            else:
                try:
                    prob = float(parts[idx["probability"]])
                except ValueError as exc:
                    raise FormatError(str(exc), line=lineno) from exc
                if not 0.0 <= prob <= 1.0:
                    raise FormatError(f"probability {prob} outside [0, 1]", line=lineno)
                threshold = 0.5
                if "threshold" in idx:
                    threshold = float(parts[idx["threshold"]])
                label = "event" if prob >= threshold else "noise"
            out[tid] = label
    if duplicates:
        raise IngestError(
            f"{path}: duplicate trace id(s): " + ", ".join(sorted(set(duplicates))[:10])
        )
    missing = expected - set(out)
    if missing:
        raise IngestError(
            f"{path}: missing {len(missing)} trace id(s): " + ", ".join(sorted(missing)[:10])
        )
    return {tid: out[tid] for tid in out if tid in expected}
