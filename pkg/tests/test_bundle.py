"""Model bundle archive: round-trip, determinism, corruption handling."""

import io
import zipfile

import numpy as np
import pytest

from evmscan.bundle import load_bundle_bytes, save_bundle_bytes
from evmscan.corpus import LabeledContract
from evmscan.encoder import EncoderConfig
from evmscan.errors import BundleError
from evmscan.gbdt import TrainConfig
from evmscan.pipeline import train_models
from evmscan.synth import generate_synthetic_corpus


@pytest.fixture(scope="module")
def trained():
    corpus = [LabeledContract(c.contract_id, c.bytecode_hex, c.labels)
              for c in generate_synthetic_corpus(16, 31)]
    return train_models(
        corpus, "full",
        encoder_config=EncoderConfig(d_model=8, n_layers=1, n_heads=2, max_len=64, seed=4),
        gbdt_config=TrainConfig(n_trees=4, max_leaves=4),
    ).bundle


class TestBundleIo:
    def test_roundtrip(self, trained):
        blob = save_bundle_bytes(trained)
        loaded = load_bundle_bytes(blob)
        assert loaded.feature_mode == trained.feature_mode
        assert loaded.feature_dim == trained.feature_dim
        assert loaded.encoder_config == trained.encoder_config
        assert loaded.corpus_stats.doc_count == trained.corpus_stats.doc_count
        np.testing.assert_array_equal(loaded.corpus_stats.df, trained.corpus_stats.df)
        for cls, ensemble in trained.ensembles.items():
            assert loaded.ensembles[cls].to_dict() == ensemble.to_dict()

    def test_serialization_deterministic(self, trained):
        assert save_bundle_bytes(trained) == save_bundle_bytes(trained)

    def test_not_a_zip(self):
        with pytest.raises(BundleError):
            load_bundle_bytes(b"definitely not a zip")

    def test_missing_entry(self, trained):
        blob = save_bundle_bytes(trained)
        src = zipfile.ZipFile(io.BytesIO(blob))
        out = io.BytesIO()
        with zipfile.ZipFile(out, "w") as zf:
            for name in src.namelist():
                if name != "corpus_stats.json":
                    zf.writestr(name, src.read(name))
        with pytest.raises(BundleError):
            load_bundle_bytes(out.getvalue())

    def test_manifest_config_mismatch(self, trained):
        blob = save_bundle_bytes(trained)
        src = zipfile.ZipFile(io.BytesIO(blob))
        out = io.BytesIO()
        with zipfile.ZipFile(out, "w") as zf:
            for name in src.namelist():
                payload = src.read(name)
                if name == "manifest.json":
                    payload = payload.replace(b'"d_model":8', b'"d_model":16')
                zf.writestr(name, payload)
        with pytest.raises(BundleError):
            load_bundle_bytes(out.getvalue())
