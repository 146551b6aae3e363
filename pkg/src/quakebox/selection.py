"""Ensemble feature discovery.

Train the penalized model many times under controlled variation (training
subsample, penalty scale, run seed), keep the runs tied at the best
validation MCC, summarize each feature's weight distribution over that
tie-set, and select features by an explicit two-threshold rule: kept in at
least ``min_fraction_nonzero`` of tied runs and with median absolute weight
of at least ``min_median_abs`` (on standardized inputs).

A deterministic convex solver returns the same fit for the same data, so
run-to-run variation must be injected deliberately; the ``vary`` flags make
the injected axes explicit configuration rather than solver accident.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from .errors import DegenerateInput, FormatError, QuakeboxError
from .features.vectors import (
    FeatureVector,
    standardize_apply,
    standardize_fit,
)
from .metrics import confusion, mcc
from .model import PenaltyConfig, TrainOptions, classify, lambda_max, train
from .seeds import derive_rng, derive_seed


@dataclass(frozen=True)
class VariationFlags:
    """Which axes differ between ensemble runs."""

    seed: bool = True
    lambda_grid: bool = True
    subsample: bool = True


@dataclass(frozen=True)
class EnsembleConfig:
    n_runs: int = 200
    alpha: float = 0.9
    vary: VariationFlags = field(default_factory=VariationFlags)
    lambda_grid: Tuple[float, ...] | None = None
    tie_tolerance: float = 0.0
    subsample_fraction: float = 0.8
    seed: int = 0
    max_iters: int = 500
    tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.n_runs < 1:
            raise ValueError("n_runs must be at least 1")
        if self.tie_tolerance < 0:
            raise ValueError("tie_tolerance must be nonnegative")
        if not 0 < self.subsample_fraction <= 1:
            raise ValueError("subsample_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class EnsembleRunResult:
    run_id: int
    weights: Mapping[str, float]
    val_mcc: float
    config_used: Mapping[str, object]


@dataclass(frozen=True)
class FeatureWeightStats:
    minimum: float
    maximum: float
    median: float
    median_abs: float
    mean_abs: float
    fraction_nonzero: float


@dataclass(frozen=True)
class WeightDistribution:
    """Per-feature weight summary over a tie-set of runs."""

    stats: Mapping[str, FeatureWeightStats]
    n_models: int

    def codes(self) -> tuple[str, ...]:
        return tuple(self.stats)

    def table(self) -> List[Tuple[str, float, float, float, float, float, float]]:
        """Plot-data rows: (code, min, max, median, median|w|, mean|w|, frac nonzero)."""
        return [
            (c, s.minimum, s.maximum, s.median, s.median_abs, s.mean_abs, s.fraction_nonzero)
            for c, s in self.stats.items()
        ]


@dataclass(frozen=True)
class SelectionRule:
    """Quantitative replacement for selecting features by eye."""

    min_fraction_nonzero: float = 0.9
    min_median_abs: float = 0.05


def default_lambda_grid(
    train_vectors: Sequence[FeatureVector], alpha: float, n_points: int = 10
) -> Tuple[float, ...]:
    """Log-spaced grid below the all-zero threshold ``lambda_max``.

    Spans half of lambda_max down two decades, which brackets the useful
    sparsity range for standardized inputs.
    """
    params = standardize_fit(train_vectors)
    standardized = standardize_apply(train_vectors, params)
    top = lambda_max(standardized, alpha)
    return tuple(float(v) for v in np.geomspace(0.5 * top, 0.005 * top, n_points))


def _stratified_subsample(
    vectors: Sequence[FeatureVector], fraction: float, rng: np.random.Generator
) -> List[FeatureVector]:
    """Per-class subsample without replacement; keeps at least one of each class."""
    by_label: Dict[str, List[int]] = {}
    for i, v in enumerate(vectors):
        by_label.setdefault(v.label, []).append(i)
    chosen: List[int] = []
    for label in sorted(by_label):
        idx = by_label[label]
        k = max(1, int(fraction * len(idx)))
        picks = rng.permutation(len(idx))[:k]
        chosen.extend(idx[i] for i in picks)
    chosen.sort()
    return [vectors[i] for i in chosen]


def run_ensemble(
    train_vectors: Sequence[FeatureVector],
    val_vectors: Sequence[FeatureVector],
    cfg: EnsembleConfig,
) -> List[EnsembleRunResult]:
    """Train ``cfg.n_runs`` models and score each on the validation set.

    Each run fits its own standardization on its own training subsample
    (validation data never leaks into the scaling).  Runs cycle through the
    penalty grid fastest, so ``n_runs = len(grid) * n_seeds`` covers every
    (grid point, subsample) pair.  A failed run aborts the ensemble with the
    run id attached.
    """
    if not train_vectors or not val_vectors:
        raise DegenerateInput("ensemble needs non-empty train and validation sets")
    if cfg.vary.lambda_grid:
        grid = cfg.lambda_grid or default_lambda_grid(train_vectors, cfg.alpha)
    else:
        grid = (cfg.lambda_grid or default_lambda_grid(train_vectors, cfg.alpha))[:1]

    val_labels = [v.label for v in val_vectors]
    results: List[EnsembleRunResult] = []
    for run_id in range(cfg.n_runs):
        lam_idx = run_id % len(grid)
        seed_idx = (run_id // len(grid)) if cfg.vary.seed else 0
        run_seed = derive_seed(cfg.seed, "ensemble-run", seed_idx)
        try:
            subset = list(train_vectors)
            if cfg.vary.subsample:
                rng = derive_rng(cfg.seed, "ensemble-subsample", seed_idx)
                subset = _stratified_subsample(subset, cfg.subsample_fraction, rng)
            params = standardize_fit(subset)
            strain = standardize_apply(subset, params)
            sval = standardize_apply(val_vectors, params)
            model = train(
                strain,
                PenaltyConfig(alpha=cfg.alpha, lam=grid[lam_idx]),
                TrainOptions(max_iters=cfg.max_iters, tol=cfg.tol, seed=run_seed),
            )
            preds = [classify(model, v) for v in sval]
            val_score = mcc(confusion(val_labels, preds))
        except QuakeboxError as exc:
            raise type(exc)(f"ensemble run {run_id}: {exc}") from exc
        results.append(
            EnsembleRunResult(
                run_id=run_id,
                weights=dict(model.weights),
                val_mcc=val_score,
                config_used={
                    "lambda": grid[lam_idx],
                    "seed": run_seed,
                    "subsample": cfg.vary.subsample,
                    "n_train": len(subset),
                },
            )
        )
    return results


def best_models(
    results: Sequence[EnsembleRunResult], tie_tolerance: float = 0.0
) -> List[EnsembleRunResult]:
    """Runs within ``tie_tolerance`` of the best validation MCC, by run id."""
    if not results:
        raise DegenerateInput("no ensemble results to rank")
    top = max(r.val_mcc for r in results)
    tied = [r for r in results if r.val_mcc >= top - tie_tolerance]
    return sorted(tied, key=lambda r: r.run_id)


def weight_distributions(tie_set: Sequence[EnsembleRunResult]) -> WeightDistribution:
    """Per-feature weight statistics over the tie-set."""
    if not tie_set:
        raise DegenerateInput("empty tie-set")
    codes = tuple(tie_set[0].weights)
    stats = {}
    for code in codes:
        w = np.array([r.weights[code] for r in tie_set])
        stats[code] = FeatureWeightStats(
            minimum=float(w.min()),
            maximum=float(w.max()),
            median=float(np.median(w)),
            median_abs=float(np.median(np.abs(w))),
            mean_abs=float(np.abs(w).mean()),
            fraction_nonzero=float(np.mean(w != 0.0)),
        )
    return WeightDistribution(stats=stats, n_models=len(tie_set))


def select_features(
    dist: WeightDistribution,
    rule: SelectionRule = SelectionRule(),
    base: Sequence[str] = (),
) -> Tuple[str, ...]:
    """Features passing both rule thresholds, unioned with the base set.

    The base set (the prior model's inputs, in the reproduction profile) is
    always kept; rule-selected features follow in distribution order.
    """
    picked = [
        c
        for c, s in dist.stats.items()
        if s.fraction_nonzero >= rule.min_fraction_nonzero
        and s.median_abs >= rule.min_median_abs
    ]
    out = list(base)
    out.extend(c for c in picked if c not in out)
    return tuple(out)


@dataclass(frozen=True)
class SelectionReport:
    """Everything the discovery workflow produced, for audit and plotting."""

    runs: List[EnsembleRunResult]
    tie_set_ids: List[int]
    distribution: WeightDistribution
    selected: Tuple[str, ...]
    rule: SelectionRule


def discover_features(
    train_vectors: Sequence[FeatureVector],
    val_vectors: Sequence[FeatureVector],
    cfg: EnsembleConfig,
    rule: SelectionRule = SelectionRule(),
    base: Sequence[str] = (),
) -> SelectionReport:
    """Run the full discovery workflow: ensemble, tie-set, distribution, rule."""
    results = run_ensemble(train_vectors, val_vectors, cfg)
    tie_set = best_models(results, cfg.tie_tolerance)
    dist = weight_distributions(tie_set)
    selected = select_features(dist, rule, base)
    return SelectionReport(
        runs=results,
        tie_set_ids=[r.run_id for r in tie_set],
        distribution=dist,
        selected=selected,
        rule=rule,
    )


# ---------------------------------------------------------------------------
# report file


REPORT_FORMAT = "quakebox-selection-v1"


def save_selection_report(path: str | Path, report: SelectionReport) -> None:
    payload = {
        "format": REPORT_FORMAT,
        "rule": {
            "min_fraction_nonzero": report.rule.min_fraction_nonzero,
            "min_median_abs": report.rule.min_median_abs,
        },
        "selected": list(report.selected),
        "tie_set_ids": report.tie_set_ids,
        "n_tie_models": report.distribution.n_models,
        "distribution": {
            c: {
                "min": s.minimum,
                "max": s.maximum,
                "median": s.median,
                "median_abs": s.median_abs,
                "mean_abs": s.mean_abs,
                "fraction_nonzero": s.fraction_nonzero,
            }
            for c, s in report.distribution.stats.items()
        },
        "runs": [
            {
                "run_id": r.run_id,
                "val_mcc": r.val_mcc,
                "config_used": dict(r.config_used),
                "weights": dict(r.weights),
            }
            for r in report.runs
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_selection_report(path: str | Path) -> SelectionReport:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    if payload.get("format") != REPORT_FORMAT:
        raise FormatError(f"{path}: not a {REPORT_FORMAT} file")
    runs = [
        EnsembleRunResult(
            run_id=int(r["run_id"]),
            weights={k: float(v) for k, v in r["weights"].items()},
            val_mcc=float(r["val_mcc"]),
            config_used=r["config_used"],
        )
        for r in payload["runs"]
    ]
    dist = WeightDistribution(
        stats={
            c: FeatureWeightStats(
                minimum=float(s["min"]),
                maximum=float(s["max"]),
                median=float(s["median"]),
                median_abs=float(s["median_abs"]),
                mean_abs=float(s["mean_abs"]),
                fraction_nonzero=float(s["fraction_nonzero"]),
            )
            for c, s in payload["distribution"].items()
        },
        n_models=int(payload["n_tie_models"]),
    )
    rule = SelectionRule(
        min_fraction_nonzero=float(payload["rule"]["min_fraction_nonzero"]),
        min_median_abs=float(payload["rule"]["min_median_abs"]),
    )
    return SelectionReport(
        runs=runs,
        tie_set_ids=[int(i) for i in payload["tie_set_ids"]],
        distribution=dist,
        selected=tuple(payload["selected"]),
        rule=rule,
    )
