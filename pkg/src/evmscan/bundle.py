"""Self-describing model bundle: one zip holding everything a scan needs.

Entries:
    manifest.json     feature mode, configs, feature dimension, vocab checksum
    vocabulary.txt    copy of the 80-symbol table the model was built with
    corpus_stats.json fitted document frequencies
    encoder.weights   encoder tensors in the interchange format
    model_<CLS>.json  one boosted ensemble per vulnerability class

Serialization is fully deterministic (stored entries, zeroed timestamps,
sorted JSON keys) so identical training runs produce byte-identical bundles.
"""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass
from importlib import resources

from .encoder import EncoderConfig, EncoderWeights, load_weights, save_weights
from .errors import BundleError
from .features import CorpusStats
from .fragments import VulnClass
from .gbdt import Ensemble, TrainConfig
from .vocab import vocabulary_sha256

FORMAT_VERSION = 1

FEATURE_MODES = ("tfidf", "cfg", "full")


@dataclass
class ModelBundle:
    feature_mode: str
    encoder_weights: EncoderWeights
    corpus_stats: CorpusStats
    ensembles: dict[VulnClass, Ensemble]
    gbdt_config: TrainConfig
    feature_dim: int

    @property
    def encoder_config(self) -> EncoderConfig:
        return self.encoder_weights.config


def _zinfo(name: str) -> zipfile.ZipInfo:
    info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
    info.compress_type = zipfile.ZIP_STORED
    info.external_attr = 0o644 << 16
    return info


def _dump_json(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("ascii")


def save_bundle(bundle: ModelBundle, path_or_file) -> None:
    manifest = {
        "format_version": FORMAT_VERSION,
        "feature_mode": bundle.feature_mode,
        "classes": [cls.value for cls in VulnClass],
        "encoder_config": bundle.encoder_config.to_dict(),
        "gbdt_config": bundle.gbdt_config.to_dict(),
        "feature_dim": bundle.feature_dim,
        "vocab_sha256": vocabulary_sha256(),
    }
    weights_blob = io.BytesIO()
    save_weights(bundle.encoder_weights, weights_blob)
    vocab_bytes = resources.files("evmscan").joinpath("data/vocabulary.txt").read_bytes()

    with zipfile.ZipFile(path_or_file, "w", compression=zipfile.ZIP_STORED) as zf:
        zf.writestr(_zinfo("manifest.json"), _dump_json(manifest))
        zf.writestr(_zinfo("vocabulary.txt"), vocab_bytes)
        zf.writestr(_zinfo("corpus_stats.json"), _dump_json(bundle.corpus_stats.to_dict()))
        zf.writestr(_zinfo("encoder.weights"), weights_blob.getvalue())
        for cls in VulnClass:
            zf.writestr(_zinfo(f"model_{cls.value}.json"), _dump_json(bundle.ensembles[cls].to_dict()))


def save_bundle_bytes(bundle: ModelBundle) -> bytes:
    buf = io.BytesIO()
    save_bundle(bundle, buf)
    return buf.getvalue()


def load_bundle(path_or_file) -> ModelBundle:
    try:
        with zipfile.ZipFile(path_or_file, "r") as zf:
            names = set(zf.namelist())
            required = {"manifest.json", "vocabulary.txt", "corpus_stats.json", "encoder.weights"}
            missing = required - names
            if missing:
                raise BundleError(f"bundle is missing entries: {sorted(missing)}")
            manifest = json.loads(zf.read("manifest.json"))
            if manifest.get("format_version") != FORMAT_VERSION:
                raise BundleError(f"unsupported bundle format_version {manifest.get('format_version')!r}")
            if manifest.get("vocab_sha256") != vocabulary_sha256():
                raise BundleError("bundle was built against a different vocabulary table")
            mode = manifest.get("feature_mode")
            if mode not in FEATURE_MODES:
                raise BundleError(f"unknown feature_mode {mode!r}")
            weights = load_weights(io.BytesIO(zf.read("encoder.weights")),
                                   seed=int(manifest["encoder_config"].get("seed", 0)))
            if weights.config.to_dict() != manifest["encoder_config"]:
                raise BundleError("manifest encoder_config disagrees with the weight file header")
            stats = CorpusStats.from_dict(json.loads(zf.read("corpus_stats.json")))
            ensembles: dict[VulnClass, Ensemble] = {}
            for cls in VulnClass:
                entry = f"model_{cls.value}.json"
                if entry not in names:
                    raise BundleError(f"bundle is missing entries: ['{entry}']")
                ensembles[cls] = Ensemble.from_dict(json.loads(zf.read(entry)))
            return ModelBundle(
                feature_mode=mode,
                encoder_weights=weights,
                corpus_stats=stats,
                ensembles=ensembles,
                gbdt_config=TrainConfig.from_dict(manifest["gbdt_config"]),
                feature_dim=int(manifest["feature_dim"]),
            )
    except zipfile.BadZipFile as exc:
        raise BundleError(f"not a bundle archive: {exc}") from None
    except (KeyError, json.JSONDecodeError) as exc:
        raise BundleError(f"malformed bundle: {exc}") from None


def load_bundle_bytes(blob: bytes) -> ModelBundle:
    return load_bundle(io.BytesIO(blob))
