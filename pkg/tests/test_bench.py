"""Benchmark harness: splits, ratio datasets, sweeps, generators, ingestion."""

import numpy as np
import pytest

from quakebox import bench
from quakebox.errors import (
    DegenerateInput,
    IngestError,
    InsufficientNoise,
    TooFewEvents,
)
from quakebox.features import standardize_apply, standardize_fit
from quakebox.model import LinearModel, ModelArtifact, PenaltyConfig, train

from conftest import make_record, make_vector


def grouped_records(n_events, traces_each, n_noise, seed=0):
    rng = np.random.default_rng(seed)
    records = []
    for e in range(n_events):
        for s in range(traces_each):
            records.append(
                make_record(
                    f"ev{e:03d}.st{s:02d}", label="event", event_id=f"ev{e:03d}",
                    samples=rng.standard_normal(64),
                )
            )
    for i in range(n_noise):
        records.append(
            make_record(f"noise{i:04d}", label="noise", samples=rng.standard_normal(64))
        )
    return records


class TestPartition:
    def test_47_events_split_28_9_10(self):
        records = grouped_records(47, 2, 100)
        split = bench.partition_by_event(records, bench.SplitSpec(seed=1))
        counts = [
            len({r.event_id for r in part if r.label == "event"})
            for part in (split.train, split.validation, split.test)
        ]
        assert counts == [28, 9, 10]

    def test_5_events_split_3_1_1(self):
        records = grouped_records(5, 3, 10)
        split = bench.partition_by_event(records, bench.SplitSpec(seed=2))
        counts = [
            len({r.event_id for r in part if r.label == "event"})
            for part in (split.train, split.validation, split.test)
        ]
        assert counts == [3, 1, 1]

    def test_no_event_overlap_over_100_seeds(self):
        records = grouped_records(11, 4, 30)
        for seed in range(100):
            split = bench.partition_by_event(records, bench.SplitSpec(seed=seed))
            parts = [
                {r.event_id for r in part if r.label == "event"}
                for part in (split.train, split.validation, split.test)
            ]
            assert not (parts[0] & parts[1])
            assert not (parts[0] & parts[2])
            assert not (parts[1] & parts[2])
            assert len(split.train) + len(split.validation) + len(split.test) == len(records)

    def test_noise_traces_follow_fractions(self):
        records = grouped_records(10, 1, 100)
        split = bench.partition_by_event(records, bench.SplitSpec(seed=3))
        noise_counts = [
            sum(1 for r in part if r.label == "noise")
            for part in (split.train, split.validation, split.test)
        ]
        assert noise_counts == [60, 20, 20]

    def test_too_few_events(self):
        with pytest.raises(TooFewEvents):
            bench.partition_by_event(grouped_records(2, 2, 5), bench.SplitSpec())

    def test_fraction_validation(self):
        with pytest.raises(ValueError):
            bench.SplitSpec(fractions=(0.5, 0.2, 0.2))
        with pytest.raises(ValueError):
            bench.SplitSpec(fractions=(0.6, 0.4, -0.0))


class TestRatioDataset:
    def pool(self, n):
        return [make_vector(f"n{i:05d}", "noise", f=float(i)) for i in range(n)]

    def positives(self, n):
        return [make_vector(f"p{i:05d}", "event", f=float(i)) for i in range(n)]

    def test_published_count_arithmetic(self):
        ds = bench.build_ratio_dataset(self.positives(763), self.pool(4000), 5.0, seed=1)
        assert sum(1 for v in ds.items if v.label == "noise") == 3815

    def test_ratio_one(self):
        ds = bench.build_ratio_dataset(self.positives(10), self.pool(50), 1.0, seed=1)
        assert sum(1 for v in ds.items if v.label == "noise") == 10
        assert sum(1 for v in ds.items if v.label == "event") == 10

    def test_insufficient_noise_reports_shortfall(self):
        with pytest.raises(InsufficientNoise, match="short 400"):
            bench.build_ratio_dataset(self.positives(10), self.pool(100), 50.0, seed=1)

    def test_all_positives_retained(self):
        pos = self.positives(7)
        ds = bench.build_ratio_dataset(pos, self.pool(100), 3.0, seed=2)
        kept = {v.trace_id for v in ds.items if v.label == "event"}
        assert kept == {p.trace_id for p in pos}

    def test_sampling_without_replacement(self):
        ds = bench.build_ratio_dataset(self.positives(10), self.pool(100), 8.0, seed=3)
        noise_ids = [v.trace_id for v in ds.items if v.label == "noise"]
        assert len(noise_ids) == len(set(noise_ids))

    def test_nested_subsets_for_fixed_seed(self):
        pos, pool = self.positives(10), self.pool(600)
        previous = set()
        for ratio in (1.73, 5.0, 10.0, 25.0, 50.0):
            ds = bench.build_ratio_dataset(pos, pool, ratio, seed=4)
            ids = {v.trace_id for v in ds.items if v.label == "noise"}
            assert previous <= ids
            previous = ids

    def test_achieved_ratio_accuracy(self, rng):
        pos = self.positives(17)
        pool = self.pool(2000)
        for ratio in (1.0, 1.73, 2.5, 7.3, 11.0):
            ds = bench.build_ratio_dataset(pos, pool, float(ratio), seed=5)
            assert abs(ds.achieved_ratio - ratio) <= 1.0 / len(pos) + 1e-12


class TestSweep:
    def setup_case(self):
        positives = [make_vector(f"p{i}", "event", f=1.0 + 0.1 * i) for i in range(10)]
        pool = [make_vector(f"n{i}", "noise", f=-1.0 - 0.01 * i) for i in range(600)]
        return positives, pool

    def test_row_per_ratio(self):
        positives, pool = self.setup_case()
        from quakebox.features import StandardizationParams

        model = LinearModel(bias=0.0, weights={"f": 5.0})
        artifact = ModelArtifact(
            model=model,
            standardization=StandardizationParams(means={"f": 0.0}, stds={"f": 1.0}),
        )
        table = bench.sweep({"lr": artifact}, positives, pool, bench.RatioSpec(seed=1))
        assert len(table.ratios) == 5
        assert table.mcc_row("lr") == [pytest.approx(1.0)] * 5

    def test_all_noise_predictor_scores_zero_everywhere(self):
        positives, pool = self.setup_case()
        preds = {v.trace_id: "noise" for v in positives + pool}
        table = bench.sweep({}, positives, pool, bench.RatioSpec(seed=2),
                            external_preds={"lazy": preds})
        assert table.mcc_row("lazy") == [0.0] * 5

    def test_oracle_predictor_scores_one_everywhere(self):
        positives, pool = self.setup_case()
        preds = {v.trace_id: v.label for v in positives + pool}
        table = bench.sweep({}, positives, pool, bench.RatioSpec(seed=3),
                            external_preds={"oracle": preds})
        assert table.mcc_row("oracle") == [pytest.approx(1.0)] * 5

    def test_fp_free_fixed_fn_predictor_non_decreasing(self):
        positives, pool = self.setup_case()
        preds = {v.trace_id: "noise" for v in pool}
        preds.update({v.trace_id: ("event" if i % 4 else "noise") for i, v in enumerate(positives)})
        table = bench.sweep({}, positives, pool, bench.RatioSpec(seed=4),
                            external_preds={"cnnish": preds})
        row = table.mcc_row("cnnish")
        assert all(b >= a - 1e-12 for a, b in zip(row, row[1:]))

    def test_missing_external_id_fails(self):
        positives, pool = self.setup_case()
        preds = {v.trace_id: "noise" for v in pool}
        with pytest.raises(IngestError, match="p0"):
            bench.sweep({}, positives, pool, bench.RatioSpec(seed=5),
                        external_preds={"partial": preds})

    def test_label_hygiene(self):
        positives, pool = self.setup_case()
        with pytest.raises(DegenerateInput):
            bench.sweep({}, pool[:3], pool, bench.RatioSpec(seed=6),
                        external_preds={"x": {}})

    def test_render_text_table(self):
        positives, pool = self.setup_case()
        preds = {v.trace_id: v.label for v in positives + pool}
        table = bench.sweep({}, positives, pool, bench.RatioSpec(ratios=(1.0, 2.0), seed=7),
                            external_preds={"oracle": preds})
        text = table.render_text()
        assert "oracle" in text and "1.0000" in text


class TestSyntheticGenerator:
    def test_bit_identical_reruns(self):
        spec = bench.SyntheticSpec(n_events=3, traces_per_event=(2, 3), n_noise=5,
                                   window_len=128, seed=9)
        a = bench.generate_synthetic(spec)
        b = bench.generate_synthetic(spec)
        assert len(a) == len(b)
        for ra, rb in zip(a, b):
            assert ra.trace_id == rb.trace_id
            assert np.array_equal(ra.samples, rb.samples)

    def test_corpus_shape_matches_spec(self):
        spec = bench.SyntheticSpec(n_events=47, traces_per_event=(30, 68), n_noise=100,
                                   window_len=64, seed=10)
        records = bench.generate_synthetic(spec)
        n_event_traces = sum(1 for r in records if r.label == "event")
        assert 47 * 30 <= n_event_traces <= 47 * 68
        assert abs(n_event_traces - 47 * 49) < 47 * 12  # mean ~49 traces/event
        assert sum(1 for r in records if r.label == "noise") == 100
        events = {r.event_id for r in records if r.label == "event"}
        assert len(events) == 47

    def test_event_records_carry_magnitudes(self):
        records = bench.generate_synthetic(
            bench.SyntheticSpec(n_events=4, traces_per_event=(2, 4), n_noise=2,
                                window_len=64, seed=11)
        )
        for r in records:
            if r.label == "event":
                assert r.magnitude is not None and r.magnitude >= 0.2
            else:
                assert r.event_id is None

    def test_noise_pool_ids_distinct_from_corpus(self):
        pool = bench.generate_noise_pool(10, window_len=64, seed=12)
        assert all(r.trace_id.startswith("xnoise") for r in pool)
        assert all(r.label == "noise" for r in pool)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            bench.SyntheticSpec(n_events=0)
        with pytest.raises(ValueError):
            bench.SyntheticSpec(traces_per_event=(5, 2))
        with pytest.raises(ValueError):
            bench.SyntheticSpec(snr_range=(0.0, 1.0))

    def test_high_snr_corpus_is_separable(self):
        # end-to-end sanity: an easy corpus must be nearly perfectly learnable
        from quakebox.features import extract_matrix, reproduction_registry, selected_profile
        from quakebox.metrics import confusion, mcc
        from quakebox.waveform import PreprocessConfig, preprocess

        spec = bench.SyntheticSpec(n_events=10, traces_per_event=(3, 4), n_noise=80,
                                   fs=200.0, window_len=400, snr_range=(15.0, 30.0), seed=13)
        records = [preprocess(r, PreprocessConfig(window_len=192))
                   for r in bench.generate_synthetic(spec)]
        split = bench.partition_by_event(records, bench.SplitSpec(seed=14))
        reg = reproduction_registry()
        train_vecs = extract_matrix(split.train, reg, selected_profile())
        test_vecs = extract_matrix(split.test, reg, selected_profile())
        params = standardize_fit(train_vecs)
        model = train(standardize_apply(train_vecs, params), PenaltyConfig(alpha=0.5, lam=0.001))
        artifact = ModelArtifact(model=model, standardization=params)
        preds = [artifact.predict_label(v) for v in test_vecs]
        labels = [v.label for v in test_vecs]
        assert mcc(confusion(labels, preds)) > 0.95


class TestPlantedFeatures:
    def test_deterministic(self):
        a, inf_a = bench.generate_planted_features(50, seed=20)
        b, inf_b = bench.generate_planted_features(50, seed=20)
        assert inf_a == inf_b
        for va, vb in zip(a, b):
            assert va.values == vb.values and va.label == vb.label

    def test_shape_and_ground_truth(self):
        vecs, informative = bench.generate_planted_features(100, n_informative=2, n_nuisance=22, seed=21)
        assert len(vecs) == 100
        assert len(vecs[0].values) == 24
        assert len(informative) == 2
        assert all(c in vecs[0].values for c in informative)

    def test_margin_makes_classes_separable(self):
        vecs, informative = bench.generate_planted_features(200, strength=4.0, margin=1.0, seed=22)
        labels = {v.label for v in vecs}
        assert labels == {"event", "noise"}


class TestIngestPredictions:
    def write(self, tmp_path, text):
        path = tmp_path / "preds.tsv"
        path.write_text(text)
        return path

    def test_label_file(self, tmp_path):
        path = self.write(tmp_path, "trace_id\tlabel\na\tevent\nb\tnoise\n")
        out = bench.ingest_predictions(path, ["a", "b"])
        assert out == {"a": "event", "b": "noise"}

    def test_probability_thresholded(self, tmp_path):
        path = self.write(tmp_path, "trace_id\tprobability\na\t0.7\nb\t0.4\nc\t0.5\n")
        out = bench.ingest_predictions(path, ["a", "b", "c"])
        assert out == {"a": "event", "b": "noise", "c": "event"}

    def test_per_row_threshold_column(self, tmp_path):
        path = self.write(tmp_path, "trace_id\tprobability\tthreshold\na\t0.7\t0.8\nb\t0.4\t0.3\n")
        out = bench.ingest_predictions(path, ["a", "b"])
        assert out == {"a": "noise", "b": "event"}

    def test_missing_id_named(self, tmp_path):
        path = self.write(tmp_path, "trace_id\tlabel\na\tevent\n")
        with pytest.raises(IngestError, match="b"):
            bench.ingest_predictions(path, ["a", "b"])

    def test_duplicate_id_rejected(self, tmp_path):
        path = self.write(tmp_path, "trace_id\tlabel\na\tevent\na\tnoise\n")
        with pytest.raises(IngestError, match="duplicate"):
            bench.ingest_predictions(path, ["a"])

    def test_extra_ids_tolerated(self, tmp_path):
        path = self.write(tmp_path, "trace_id\tlabel\na\tevent\nzz\tnoise\n")
        out = bench.ingest_predictions(path, ["a"])
        assert out == {"a": "event"}

    def test_bad_probability_rejected(self, tmp_path):
        path = self.write(tmp_path, "trace_id\tprobability\na\t1.4\n")
        with pytest.raises(Exception, match="outside"):
            bench.ingest_predictions(path, ["a"])
