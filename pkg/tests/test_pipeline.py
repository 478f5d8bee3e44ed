"""Feature fusion, corpus splitting, metrics, and scanning."""

import numpy as np
import pytest

from evmscan.corpus import LabeledContract
from evmscan.encoder import EncoderConfig, init_weights
from evmscan.errors import CorpusTooSmall, MalformedHex
from evmscan.features import fit_corpus_stats
from evmscan.fragments import VulnClass
from evmscan.gbdt import TrainConfig
from evmscan.pipeline import (
    _metrics_from_counts,
    analyze_contract,
    evaluate,
    featurize,
    scan,
    split_corpus,
    train_models,
)
from evmscan.synth import generate_synthetic_corpus
from evmscan.vocab import normalize_stream

ENC = EncoderConfig(d_model=16, n_layers=1, n_heads=2, max_len=128, seed=5)


def labeled(synths):
    return [LabeledContract(c.contract_id, c.bytecode_hex, c.labels) for c in synths]


def fit_stats(contracts):
    analyses = [analyze_contract(c.contract_id, c.bytecode_hex) for c in contracts]
    return analyses, fit_corpus_stats([normalize_stream(a.stream) for a in analyses])


class TestFeaturize:
    def test_empty_bytecode_all_zero(self):
        contracts = labeled(generate_synthetic_corpus(8, 0))
        _, stats = fit_stats(contracts)
        weights = init_weights(ENC)
        analysis = analyze_contract("empty", "0x")
        vec = featurize(analysis, stats, weights)
        assert not vec.tfidf.any()
        assert not vec.fused.any()
        assert vec.fused.shape == (80 + 4 * ENC.d_model,)

    def test_sd_fixture_embedding_nonzero_only_for_sd(self):
        contracts = labeled(generate_synthetic_corpus(8, 0))
        _, stats = fit_stats(contracts)
        weights = init_weights(ENC)
        analysis = analyze_contract("sd", "0x33ff")  # CALLER SELFDESTRUCT
        vec = featurize(analysis, stats, weights)
        assert np.linalg.norm(vec.embeddings[VulnClass.SD]) > 0
        for cls in (VulnClass.RV, VulnClass.AV, VulnClass.TDV):
            assert not vec.embeddings[cls].any()

    def test_deterministic(self):
        contracts = labeled(generate_synthetic_corpus(8, 0))
        _, stats = fit_stats(contracts)
        weights = init_weights(ENC)
        hex_text = contracts[0].bytecode_hex
        a = featurize(analyze_contract("x", hex_text), stats, weights).fused
        b = featurize(analyze_contract("x", hex_text), stats, weights).fused
        np.testing.assert_array_equal(a, b)

    def test_fused_dim_constant_across_corpus(self):
        contracts = labeled(generate_synthetic_corpus(16, 3))
        _, stats = fit_stats(contracts)
        weights = init_weights(ENC)
        dims = {
            featurize(analyze_contract(c.contract_id, c.bytecode_hex), stats, weights).fused.shape
            for c in contracts
        }
        assert dims == {(80 + 4 * ENC.d_model,)}

    def test_malformed_hex_propagates(self):
        with pytest.raises(MalformedHex):
            analyze_contract("bad", "0xqq")


class TestSplitCorpus:
    def test_80_20(self):
        corpus = labeled(generate_synthetic_corpus(10, 1))
        train, test = split_corpus(corpus, 0.8, seed=0)
        assert (len(train), len(test)) == (8, 2)
        assert {c.contract_id for c in train} | {c.contract_id for c in test} == {
            c.contract_id for c in corpus
        }

    def test_same_seed_identical(self):
        corpus = labeled(generate_synthetic_corpus(20, 2))
        a = split_corpus(corpus, 0.8, seed=9)
        b = split_corpus(corpus, 0.8, seed=9)
        assert [c.contract_id for c in a[0]] == [c.contract_id for c in b[0]]
        assert [c.contract_id for c in a[1]] == [c.contract_id for c in b[1]]

    def test_half_split_of_four(self):
        corpus = labeled(generate_synthetic_corpus(8, 3))[:4]
        train, test = split_corpus(corpus, 0.5, seed=1)
        assert (len(train), len(test)) == (2, 2)

    def test_too_small(self):
        corpus = labeled(generate_synthetic_corpus(8, 0))[:1]
        with pytest.raises(CorpusTooSmall):
            split_corpus(corpus, 0.8, seed=0)

    def test_bad_ratio(self):
        corpus = labeled(generate_synthetic_corpus(8, 0))
        with pytest.raises(ValueError):
            split_corpus(corpus, 1.0, seed=0)

    def test_stratification_keeps_signatures_balanced(self):
        corpus = labeled(generate_synthetic_corpus(64, 4))
        train, test = split_corpus(corpus, 0.75, seed=2)
        sig = lambda c: tuple(sorted(x.value for x in c.labels))
        for signature in {sig(c) for c in corpus}:
            total = sum(1 for c in corpus if sig(c) == signature)
            n_train = sum(1 for c in train if sig(c) == signature)
            if total >= 4:
                assert abs(n_train - 0.75 * total) <= 1.0


class TestMetrics:
    def test_precision_arithmetic(self):
        m = _metrics_from_counts(tp=9, fp=1, fn=0, tn=0)
        assert m.precision == pytest.approx(0.9)

    def test_f1_of_equal_precision_recall(self):
        m = _metrics_from_counts(tp=1, fp=1, fn=1, tn=0)
        assert m.precision == m.recall == 0.5
        assert m.f1 == pytest.approx(0.5)

    def test_zero_denominator_flagged(self):
        m = _metrics_from_counts(tp=0, fp=0, fn=2, tn=3)
        assert m.precision == 0.0
        assert "precision" in m.degenerate

    def test_f1_between_min_and_max(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            tp, fp, fn, tn = rng.integers(0, 20, size=4)
            m = _metrics_from_counts(int(tp), int(fp), int(fn), int(tn))
            assert 0.0 <= m.f1 <= 1.0
            if not m.degenerate:
                assert min(m.precision, m.recall) - 1e-12 <= m.f1 <= max(m.precision, m.recall) + 1e-12


@pytest.fixture(scope="module")
def small_bundle():
    corpus = labeled(generate_synthetic_corpus(32, 21))
    result = train_models(
        corpus, "full",
        encoder_config=ENC,
        gbdt_config=TrainConfig(n_trees=30, max_leaves=8),
    )
    return corpus, result.bundle


class TestTrainEvaluateScan:
    def test_eval_counts_sum_to_corpus(self, small_bundle):
        corpus, bundle = small_bundle
        report = evaluate(bundle, corpus)
        for metrics in report.per_class.values():
            assert metrics.tp + metrics.fp + metrics.fn + metrics.tn == len(corpus)
        assert report.mean_analysis_seconds >= 0

    def test_scan_reports_fragments_and_verdicts(self, small_bundle):
        corpus, bundle = small_bundle
        sd_contract = next(c for c in corpus if VulnClass.SD in c.labels)
        report = scan(bundle, sd_contract.bytecode_hex, source_id=sd_contract.contract_id)
        assert report["verdicts"]["SD"] is True
        assert report["fragments"]["SD"], "expected at least one SD fragment site"
        assert report["fragments"]["SD"][0]["seed_pc"] >= 0
        assert report["analysis_seconds"] >= 0
        assert report["schema_version"] == 1

    def test_scan_empty_bytecode_all_clean(self, small_bundle):
        _, bundle = small_bundle
        report = scan(bundle, "0x", source_id="empty")
        assert report["verdicts"] == {"RV": False, "AV": False, "SD": False, "TDV": False}

    def test_scan_dot_export(self, small_bundle):
        corpus, bundle = small_bundle
        report = scan(bundle, corpus[0].bytecode_hex, include_dot=True)
        assert report["dot"].startswith("digraph")

    def test_eval_metrics_deterministic(self, small_bundle):
        corpus, bundle = small_bundle
        a = evaluate(bundle, corpus)
        b = evaluate(bundle, corpus)
        assert {k: m.to_dict() for k, m in a.per_class.items()} == {
            k: m.to_dict() for k, m in b.per_class.items()
        }
        assert (a.macro_precision, a.macro_recall, a.macro_f1) == (
            b.macro_precision, b.macro_recall, b.macro_f1,
        )

    def test_eval_time_buckets(self, small_bundle):
        corpus, bundle = small_bundle
        report = evaluate(bundle, corpus)
        assert report.time_buckets
        assert sum(b.count for b in report.time_buckets) == len(corpus)
        assert all(b.mean_seconds >= 0 for b in report.time_buckets)

    def test_parallel_featurization_matches_sequential(self, small_bundle):
        from evmscan.pipeline import featurize_corpus

        corpus, bundle = small_bundle
        seq, _, seq_ops = featurize_corpus(corpus[:8], bundle.corpus_stats, bundle.encoder_weights)
        par, _, par_ops = featurize_corpus(
            corpus[:8], bundle.corpus_stats, bundle.encoder_weights, workers=2
        )
        assert seq_ops == par_ops
        for a, b in zip(seq, par):
            np.testing.assert_array_equal(a.fused, b.fused)

    def test_ablation_modes_have_expected_dims(self):
        corpus = labeled(generate_synthetic_corpus(16, 8))
        for mode, dim in (("tfidf", 80), ("cfg", 4 * ENC.d_model), ("full", 80 + 4 * ENC.d_model)):
            result = train_models(
                corpus, mode, encoder_config=ENC,
                gbdt_config=TrainConfig(n_trees=5, max_leaves=4),
            )
            assert result.bundle.feature_dim == dim
