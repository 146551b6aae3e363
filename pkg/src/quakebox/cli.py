"""Command-line front door.

Every subcommand reads one JSON config (field-qualified validation errors),
honors ``--seed`` as a master-seed override and ``--out-dir`` as an output
prefix, and writes byte-deterministic artifacts: the same config and seed
always reproduce the same files.  Training and selection refuse inputs
tagged with the test role; evaluation commands take anything.

    quakebox synth    -c synth.json        waveform corpus from a generator spec
    quakebox split    -c split.json        event-wise train/validation/test files
    quakebox extract  -c extract.json      preprocess + feature matrix
    quakebox train    -c train.json        penalized logistic regression model
    quakebox select   -c select.json       ensemble feature discovery report
    quakebox eval     -c eval.json         metrics + paired significance tests
    quakebox sweep    -c sweep.json        noise-ratio stress grid
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Mapping, Sequence

from . import bench, selection
from .errors import ConfigError, QuakeboxError
from .features import (
    canonical_registry,
    extract_matrix,
    read_matrix,
    reproduction_registry,
    selected_profile,
    standardize_apply,
    standardize_fit,
    write_matrix,
)
from .metrics import mcnemar_test, report
from .model import (
    LinearModel,
    ModelArtifact,
    PenaltyConfig,
    TrainOptions,
    load_model,
    save_model,
    train,
)
from .seeds import derive_seed
from .waveform import PreprocessConfig, preprocess
from .waveform_io import read_waveforms, write_waveforms

FEATURE_PROFILES = {
    "canonical22": lambda: canonical_registry().codes(),
    "discovery26": lambda: reproduction_registry().codes(),
    "selected8": selected_profile,
}


# ---------------------------------------------------------------------------
# config plumbing


def _load_config(path: str) -> dict:
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON in {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config", "top level must be a JSON object")
    return cfg


def _get(cfg: Mapping[str, Any], field: str, kind, required: bool = True, default=None):
    parts = field.split(".")
    node: Any = cfg
    for part in parts:
        if not isinstance(node, Mapping) or part not in node:
            if required:
                raise ConfigError(field, "missing required field")
            return default
        node = node[part]
    if kind is float and isinstance(node, int):
        node = float(node)
    if kind is not None and not isinstance(node, kind):
        raise ConfigError(field, f"expected {getattr(kind, '__name__', kind)}, got {type(node).__name__}")
    return node


def _positive(field: str, value, strict: bool = True):
    if (value <= 0) if strict else (value < 0):
        raise ConfigError(field, f"must be {'positive' if strict else 'nonnegative'}, got {value}")
    return value


def _resolve(out_dir: str | None, path: str) -> Path:
    p = Path(path)
    if out_dir and not p.is_absolute():
        return Path(out_dir) / p
    return p


def _master_seed(cfg: Mapping[str, Any], override: int | None) -> int:
    if override is not None:
        return override
    return _get(cfg, "master_seed", int, required=False, default=0)


def _preprocess_config(cfg: Mapping[str, Any]) -> PreprocessConfig:
    section = _get(cfg, "preprocess", dict, required=False, default={})
    try:
        return PreprocessConfig(
            band_low_hz=_positive("preprocess.band_low_hz", _get(section, "band_low_hz", float, False, 5.0)),
            band_high_hz=_positive("preprocess.band_high_hz", _get(section, "band_high_hz", float, False, 25.0)),
            downsample_factor=_get(section, "downsample_factor", int, False, 2),
            filter_order=_get(section, "filter_order", int, False, 4),
            window_len=_get(section, "window_len", int, False, None),
        )
    except QuakeboxError as exc:
        raise ConfigError("preprocess", str(exc)) from exc
    except ValueError as exc:
        raise ConfigError("preprocess", str(exc)) from exc


def _feature_codes(cfg: Mapping[str, Any]):
    features = cfg.get("features", "discovery26")
    if isinstance(features, str):
        if features not in FEATURE_PROFILES:
            raise ConfigError(
                "features",
                f"unknown profile {features!r}; choose from {sorted(FEATURE_PROFILES)} or list codes",
            )
        return tuple(FEATURE_PROFILES[features]())
    if isinstance(features, list) and all(isinstance(c, str) for c in features):
        return tuple(features)
    raise ConfigError("features", "must be a profile name or a list of feature codes")


def _forbid_test_role(field: str, role: str) -> None:
    if role == "test":
        raise ConfigError(field, "refuses test-partition data during training/selection")


def _pair_list(cfg: Mapping[str, Any], field: str) -> dict[str, str]:
    node = _get(cfg, field, dict, required=False, default={})
    out = {}
    for name, path in node.items():
        if not isinstance(path, str):
            raise ConfigError(f"{field}.{name}", "expected a file path string")
        out[str(name)] = path
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(cfg: dict, seed: int | None, out_dir: str | None) -> None:
    master = _master_seed(cfg, seed)
    section = _get(cfg, "synthetic", dict, required=False, default={})
    tpe = _get(section, "traces_per_event", list, False, [30, 68])
    snr = _get(section, "snr_range", list, False, [1.5, 12.0])
    try:
        spec = bench.SyntheticSpec(
            n_events=_get(section, "n_events", int, False, 47),
            traces_per_event=(int(tpe[0]), int(tpe[1])),
            n_noise=_get(section, "n_noise", int, False, 4000),
            fs=_get(section, "fs", float, False, 200.0),
            window_len=_get(section, "window_len", int, False, 600),
            snr_range=(float(snr[0]), float(snr[1])),
            seed=derive_seed(master, "synth"),
        )
    except ValueError as exc:
        raise ConfigError("synthetic", str(exc)) from exc
    records = bench.generate_synthetic(spec)
    out = _resolve(out_dir, _get(cfg, "output", str))
    write_waveforms(out, records, role="all")
    print(f"wrote {len(records)} records to {out}")


def cmd_split(cfg: dict, seed: int | None, out_dir: str | None) -> None:
    master = _master_seed(cfg, seed)
    records, _role = read_waveforms(_get(cfg, "input", str))
    fractions = _get(cfg, "fractions", list, required=False, default=[0.6, 0.2, 0.2])
    if len(fractions) != 3:
        raise ConfigError("fractions", f"expected three fractions, got {fractions}")
    try:
        spec = bench.SplitSpec(
            fractions=tuple(float(f) for f in fractions),
            seed=derive_seed(master, "split"),
        )
    except ValueError as exc:
        raise ConfigError("fractions", str(exc)) from exc
    split = bench.partition_by_event(records, spec)
    target = Path(_resolve(out_dir, _get(cfg, "output_dir", str)))
    target.mkdir(parents=True, exist_ok=True)
    for role, subset in (
        ("train", split.train),
        ("validation", split.validation),
        ("test", split.test),
    ):
        write_waveforms(target / f"{role}.jsonl", subset, role=role)
        print(f"wrote {len(subset)} records to {target / (role + '.jsonl')}")


def cmd_extract(cfg: dict, seed: int | None, out_dir: str | None) -> None:
    pcfg = _preprocess_config(cfg)
    codes = _feature_codes(cfg)
    records, role = read_waveforms(_get(cfg, "input", str))
    if not records:
        raise ConfigError("input", "waveform file contains no records")
    registry = reproduction_registry()
    processed = [preprocess(r, pcfg) for r in records]
    vectors = extract_matrix(processed, registry, codes)
    out = _resolve(out_dir, _get(cfg, "output", str))
    write_matrix(out, vectors, role=role)
    print(f"wrote {len(vectors)} x {len(codes)} matrix to {out}")


def cmd_train(cfg: dict, seed: int | None, out_dir: str | None) -> None:
    master = _master_seed(cfg, seed)
    vectors, role = read_matrix(_get(cfg, "input", str))
    _forbid_test_role("input", role)
    model_cfg = _get(cfg, "model", dict, required=False, default={})
    opt_cfg = _get(cfg, "optimizer", dict, required=False, default={})
    try:
        pen = PenaltyConfig(
            alpha=_get(model_cfg, "alpha", float, False, 0.9),
            lam=_get(model_cfg, "lambda", float, False, 0.01),
            penalize_bias=_get(model_cfg, "penalize_bias", bool, False, False),
        )
        opt = TrainOptions(
            max_iters=_positive("optimizer.max_iters", _get(opt_cfg, "max_iters", int, False, 10_000)),
            tol=_positive("optimizer.tol", _get(opt_cfg, "tol", float, False, 1e-8)),
            seed=derive_seed(master, "train"),
        )
    except ValueError as exc:
        raise ConfigError("model", str(exc)) from exc
    params = standardize_fit(vectors)
    standardized = standardize_apply(vectors, params)
    model = train(standardized, pen, opt)
    threshold = _get(cfg, "threshold", float, required=False, default=None)
    if threshold is not None:
        model = LinearModel(
            bias=model.bias,
            weights=model.weights,
            threshold=threshold,
            training_meta=model.training_meta,
        )
    out = _resolve(out_dir, _get(cfg, "output", str))
    save_model(out, ModelArtifact(model=model, standardization=params))
    nonzero = sum(1 for w in model.weights.values() if w != 0)
    print(
        f"wrote model to {out} "
        f"(converged={model.training_meta['converged']}, nonzero weights={nonzero})"
    )


def cmd_select(cfg: dict, seed: int | None, out_dir: str | None) -> None:
    master = _master_seed(cfg, seed)
    train_vecs, train_role = read_matrix(_get(cfg, "train_input", str))
    val_vecs, val_role = read_matrix(_get(cfg, "validation_input", str))
    _forbid_test_role("train_input", train_role)
    _forbid_test_role("validation_input", val_role)
    ens = _get(cfg, "ensemble", dict, required=False, default={})
    vary = _get(ens, "vary", dict, required=False, default={})
    grid = _get(ens, "lambda_grid", list, required=False, default=None)
    try:
        ecfg = selection.EnsembleConfig(
            n_runs=_get(ens, "n_runs", int, False, 200),
            alpha=_get(ens, "alpha", float, False, 0.9),
            vary=selection.VariationFlags(
                seed=_get(vary, "seed", bool, False, True),
                lambda_grid=_get(vary, "lambda_grid", bool, False, True),
                subsample=_get(vary, "subsample", bool, False, True),
            ),
            lambda_grid=tuple(float(v) for v in grid) if grid else None,
            tie_tolerance=_get(ens, "tie_tolerance", float, False, 0.0),
            subsample_fraction=_get(ens, "subsample_fraction", float, False, 0.8),
            seed=derive_seed(master, "select"),
            max_iters=_get(ens, "max_iters", int, False, 500),
            tol=_get(ens, "tol", float, False, 1e-6),
        )
        rule_cfg = _get(cfg, "rule", dict, required=False, default={})
        rule = selection.SelectionRule(
            min_fraction_nonzero=_get(rule_cfg, "min_fraction_nonzero", float, False, 0.9),
            min_median_abs=_get(rule_cfg, "min_median_abs", float, False, 0.05),
        )
    except ValueError as exc:
        raise ConfigError("ensemble", str(exc)) from exc
    base = _get(cfg, "base_features", list, required=False, default=list(selected_profile()[:4]))
    report_obj = selection.discover_features(
        train_vecs, val_vecs, ecfg, rule, base=tuple(str(c) for c in base)
    )
    out = _resolve(out_dir, _get(cfg, "output", str))
    selection.save_selection_report(out, report_obj)
    dist_out = _get(cfg, "distribution_output", str, required=False, default=None)
    if dist_out:
        _write_distribution_table(_resolve(out_dir, dist_out), report_obj)
    print(
        f"wrote selection report to {out} "
        f"(tie-set={len(report_obj.tie_set_ids)}, selected={','.join(report_obj.selected)})"
    )


def _write_distribution_table(path: Path, rep: selection.SelectionReport) -> None:
    lines = ["code\tmin\tmax\tmedian\tmedian_abs\tmean_abs\tfraction_nonzero"]
    for row in rep.distribution.table():
        lines.append("\t".join([row[0]] + [repr(v) for v in row[1:]]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _load_sources(cfg: dict, trace_ids: Sequence[str]):
    models = {
        name: load_model(path) for name, path in _pair_list(cfg, "models").items()
    }
    predictions = {
        name: bench.ingest_predictions(path, trace_ids)
        for name, path in _pair_list(cfg, "predictions").items()
    }
    if not models and not predictions:
        raise ConfigError("models", "need at least one model or prediction source")
    return models, predictions


def cmd_eval(cfg: dict, seed: int | None, out_dir: str | None) -> None:
    vectors, _role = read_matrix(_get(cfg, "input", str))
    trace_ids = [v.trace_id for v in vectors]
    labels = [v.label for v in vectors]
    models, predictions = _load_sources(cfg, trace_ids)
    level = _get(cfg, "significance_level", float, required=False, default=0.05)
    per_source_preds: dict[str, list[str]] = {}
    for name, artifact in models.items():
        per_source_preds[name] = [artifact.predict_label(v) for v in vectors]
    for name, pred_map in predictions.items():
        per_source_preds[name] = [pred_map[tid] for tid in trace_ids]
    results = {name: report(labels, preds).to_dict() for name, preds in per_source_preds.items()}
    names = list(per_source_preds)
    comparisons = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            test = mcnemar_test(labels, per_source_preds[names[i]], per_source_preds[names[j]], level)
            comparisons.append({"a": names[i], "b": names[j], **test})
    payload = {
        "format": "quakebox-eval-v1",
        "significance_level": level,
        "sources": results,
        "mcnemar": comparisons,
    }
    out = _resolve(out_dir, _get(cfg, "output", str))
    Path(out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    summary = ", ".join(f"{n}: mcc={results[n]['mcc']:.4f}" for n in names)
    print(f"wrote evaluation to {out} ({summary})")


def cmd_sweep(cfg: dict, seed: int | None, out_dir: str | None) -> None:
    master = _master_seed(cfg, seed)
    positives, _prole = read_matrix(_get(cfg, "positives_input", str))
    pool, _nrole = read_matrix(_get(cfg, "noise_pool_input", str))
    positives = [v for v in positives if v.label == "event"]
    pool = [v for v in pool if v.label == "noise"]
    ratios = _get(cfg, "ratios", list, required=False, default=[1.73, 5.0, 10.0, 25.0, 50.0])
    try:
        spec = bench.RatioSpec(
            ratios=tuple(float(r) for r in ratios),
            seed=derive_seed(master, "sweep"),
        )
    except ValueError as exc:
        raise ConfigError("ratios", str(exc)) from exc
    ladder_ids = [v.trace_id for v in positives] + [v.trace_id for v in pool]
    models, predictions = _load_sources(cfg, ladder_ids)
    table = bench.sweep(models, positives, pool, spec, external_preds=predictions)
    out = _resolve(out_dir, _get(cfg, "output", str))
    bench.save_sweep(out, table)
    text_out = _get(cfg, "text_output", str, required=False, default=None)
    if text_out:
        Path(_resolve(out_dir, text_out)).write_text(table.render_text(), encoding="utf-8")
    print(f"wrote sweep grid to {out}")
    print(table.render_text(), end="")


COMMANDS = {
    "synth": cmd_synth,
    "split": cmd_split,
    "extract": cmd_extract,
    "train": cmd_train,
    "select": cmd_select,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="quakebox",
        description="White-box earthquake detection pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in COMMANDS.items():
        p = sub.add_parser(name, help=func.__doc__)
        p.add_argument("-c", "--config", required=True, help="JSON config path")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out-dir", default=None, help="directory prefix for relative outputs")
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config)
        COMMANDS[args.command](cfg, args.seed, args.out_dir)
    except QuakeboxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
