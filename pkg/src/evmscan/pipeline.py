"""End-to-end orchestration: feature fusion, training, evaluation, scanning.

The fused feature vector of a contract is the 80-dim tf-idf block followed by
one pooled fragment embedding per vulnerability class (zero vector when the
class has no fragments), giving 80 + 4*d_model dims.  Ablation modes select
the tf-idf block only (``tfidf``), the embedding blocks only (``cfg``), or
everything (``full``); the mode is frozen into the model bundle.
"""

from __future__ import annotations

import io
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import encoder as enc
from .bundle import FEATURE_MODES, ModelBundle
from .cfg import Cfg, build_cfg, to_dot
from .corpus import LabeledContract
from .disasm import InstructionStream, disassemble, parse_hex
from .errors import CorpusTooSmall
from .features import CorpusStats, fit_corpus_stats, tfidf_vector
from .fragments import Fragment, FunctionSelector, VulnClass, extract_selectors, fragment_tokens, match_fragments
from .gbdt import Ensemble, TrainConfig
from .gbdt import train as gbdt_train
from .vocab import normalize_stream


@dataclass(frozen=True)
class ContractAnalysis:
    """Structural stage outputs: everything downstream of the raw bytes."""

    contract_id: str
    stream: InstructionStream
    cfg: Cfg
    selectors: list[FunctionSelector]
    fragments: dict[VulnClass, list[Fragment]]

    @property
    def opcode_count(self) -> int:
        return len(self.stream.instructions)


@dataclass(frozen=True)
class FeatureVector:
    tfidf: np.ndarray                        # (80,)
    embeddings: dict[VulnClass, np.ndarray]  # class -> (d_model,)

    @property
    def fused(self) -> np.ndarray:
        return np.concatenate([self.tfidf] + [self.embeddings[cls] for cls in VulnClass])

    def for_mode(self, mode: str) -> np.ndarray:
        if mode == "tfidf":
            return self.tfidf
        if mode == "cfg":
            return np.concatenate([self.embeddings[cls] for cls in VulnClass])
        if mode == "full":
            return self.fused
        raise ValueError(f"unknown feature mode {mode!r}")


def analyze_contract(contract_id: str, bytecode_hex: str) -> ContractAnalysis:
    """Disassemble, recover the CFG, and extract per-class fragments."""
    code = parse_hex(bytecode_hex)
    stream = disassemble(code.data, source_id=contract_id)
    cfg = build_cfg(stream)
    selectors = extract_selectors(cfg)
    fragments = {cls: match_fragments(cfg, cls, selectors) for cls in VulnClass}
    return ContractAnalysis(
        contract_id=contract_id, stream=stream, cfg=cfg, selectors=selectors, fragments=fragments
    )


def featurize(
    analysis: ContractAnalysis, stats: CorpusStats, weights: enc.EncoderWeights
) -> FeatureVector:
    """Fuse tf-idf statistics with pooled per-class fragment embeddings."""
    config = weights.config
    doc = normalize_stream(analysis.stream)
    tfidf = tfidf_vector(doc, stats)
    embeddings: dict[VulnClass, np.ndarray] = {}
    for cls in VulnClass:
        frags = analysis.fragments[cls]
        if not frags:
            embeddings[cls] = np.zeros(config.d_model, dtype=np.float64)
            continue
        pooled = np.zeros(config.d_model, dtype=np.float64)
        for frag in frags:
            pooled += enc.encode(fragment_tokens(frag, config.max_len), weights, config)
        embeddings[cls] = pooled / len(frags)
    return FeatureVector(tfidf=tfidf, embeddings=embeddings)


def featurize_contract(
    contract: LabeledContract, stats: CorpusStats, weights: enc.EncoderWeights
) -> FeatureVector:
    """Single-contract convenience: analysis plus featurization in one call."""
    return featurize(analyze_contract(contract.contract_id, contract.bytecode_hex), stats, weights)


def split_corpus(
    corpus: list[LabeledContract], ratio: float, seed: int
) -> tuple[list[LabeledContract], list[LabeledContract]]:
    """Deterministic stratified split by label signature.

    ``ratio`` is the training share.  Group quotas are apportioned by largest
    remainder so the global train size is exactly round(n * ratio), clamped so
    both sides stay non-empty.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError("split ratio must lie strictly between 0 and 1")
    n = len(corpus)
    if n < 2:
        raise CorpusTooSmall(f"cannot split a corpus of {n} contracts")
    target_train = min(max(int(round(n * ratio)), 1), n - 1)

    groups: dict[tuple[str, ...], list[LabeledContract]] = {}
    for contract in corpus:
        key = tuple(sorted(cls.value for cls in contract.labels))
        groups.setdefault(key, []).append(contract)

    rng = random.Random(seed)
    ordered = sorted(groups.items())
    quotas: list[float] = [len(members) * target_train / n for _, members in ordered]
    base = [int(q) for q in quotas]
    leftover = target_train - sum(base)
    by_remainder = sorted(range(len(ordered)), key=lambda i: (-(quotas[i] - base[i]), i))
    for i in by_remainder[:leftover]:
        base[i] += 1

    train: list[LabeledContract] = []
    test: list[LabeledContract] = []
    for (_, members), quota in zip(ordered, base):
        members = members[:]
        rng.shuffle(members)
        train.extend(members[:quota])
        test.extend(members[quota:])
    # clamp against per-group rounding leaving one side empty
    if not test:
        test.append(train.pop())
    if not train:
        train.append(test.pop())
    return train, test


@dataclass
class TrainResult:
    bundle: ModelBundle
    positives_per_class: dict[str, int]
    n_contracts: int


# Worker-process state for parallel featurization; contracts are pure inputs,
# so the only shared pieces are the frozen stats and weights sent once per
# worker through the pool initializer.
_POOL_STATE: dict = {}


def _pool_init(stats_payload: dict, weights_blob: bytes) -> None:
    from .encoder import load_weights

    _POOL_STATE["stats"] = CorpusStats.from_dict(stats_payload)
    _POOL_STATE["weights"] = load_weights(io.BytesIO(weights_blob))


def _pool_featurize(task: tuple[str, str]) -> tuple[np.ndarray, dict[VulnClass, np.ndarray], float]:
    contract_id, bytecode_hex = task
    t0 = time.perf_counter()
    analysis = analyze_contract(contract_id, bytecode_hex)
    vec = featurize(analysis, _POOL_STATE["stats"], _POOL_STATE["weights"])
    elapsed = time.perf_counter() - t0
    return vec.tfidf, vec.embeddings, elapsed


def featurize_corpus(
    contracts: list[LabeledContract],
    stats: CorpusStats,
    weights: enc.EncoderWeights,
    workers: int = 1,
) -> tuple[list[FeatureVector], list[float], list[int]]:
    """Feature vectors, per-contract wall-clock seconds, and opcode counts.

    Contracts are independent, so ``workers > 1`` fans featurization out over
    a process pool; results come back in corpus order either way.
    """
    opcode_counts = []
    if workers <= 1 or len(contracts) < 2:
        vectors, timings = [], []
        for c in contracts:
            t0 = time.perf_counter()
            analysis = analyze_contract(c.contract_id, c.bytecode_hex)
            vectors.append(featurize(analysis, stats, weights))
            timings.append(time.perf_counter() - t0)
            opcode_counts.append(analysis.opcode_count)
        return vectors, timings, opcode_counts

    from .encoder import save_weights

    blob = io.BytesIO()
    save_weights(weights, blob)
    tasks = [(c.contract_id, c.bytecode_hex) for c in contracts]
    with ProcessPoolExecutor(
        max_workers=workers, initializer=_pool_init, initargs=(stats.to_dict(), blob.getvalue())
    ) as pool:
        results = list(pool.map(_pool_featurize, tasks, chunksize=max(1, len(tasks) // (workers * 4))))
    vectors = [FeatureVector(tfidf=tfidf, embeddings=emb) for tfidf, emb, _ in results]
    timings = [elapsed for _, _, elapsed in results]
    # opcode counts are cheap; recover them without a second full analysis
    opcode_counts = [len(disassemble(parse_hex(c.bytecode_hex).data)) for c in contracts]
    return vectors, timings, opcode_counts


def train_models(
    contracts: list[LabeledContract],
    feature_mode: str = "full",
    encoder_weights: enc.EncoderWeights | None = None,
    encoder_config: enc.EncoderConfig | None = None,
    gbdt_config: TrainConfig | None = None,
    workers: int = 1,
) -> TrainResult:
    """Fit corpus statistics and one one-vs-rest ensemble per class.

    Encoder weights may be passed in (e.g. exported by an external trainer);
    otherwise they are seeded from ``encoder_config``.
    """
    if feature_mode not in FEATURE_MODES:
        raise ValueError(f"feature_mode must be one of {FEATURE_MODES}")
    if encoder_weights is None:
        encoder_weights = enc.init_weights(encoder_config or enc.EncoderConfig())
    gbdt_config = gbdt_config or TrainConfig()

    docs = [
        normalize_stream(disassemble(parse_hex(c.bytecode_hex).data, c.contract_id))
        for c in contracts
    ]
    stats = fit_corpus_stats(docs)
    vectors, _, _ = featurize_corpus(contracts, stats, encoder_weights, workers=workers)
    rows = [v.for_mode(feature_mode) for v in vectors]
    X = np.vstack(rows) if rows else np.zeros((0, 0))

    ensembles: dict[VulnClass, Ensemble] = {}
    positives: dict[str, int] = {}
    for cls in VulnClass:
        y = np.asarray([1.0 if cls in c.labels else 0.0 for c in contracts])
        positives[cls.value] = int(y.sum())
        ensembles[cls] = gbdt_train(X, y, gbdt_config)

    bundle = ModelBundle(
        feature_mode=feature_mode,
        encoder_weights=encoder_weights,
        corpus_stats=stats,
        ensembles=ensembles,
        gbdt_config=gbdt_config,
        feature_dim=X.shape[1],
    )
    return TrainResult(bundle=bundle, positives_per_class=positives, n_contracts=len(contracts))


@dataclass
class ClassMetrics:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    degenerate: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "degenerate": list(self.degenerate),
        }


#: opcode-count ranges for per-length timing report (seven complexity levels)
TIME_BUCKETS = ((0, 100), (100, 200), (200, 400), (400, 800), (800, 1600), (1600, 3200), (3200, None))


@dataclass
class TimeBucket:
    min_opcodes: int
    max_opcodes: int | None
    count: int
    mean_seconds: float

    def to_dict(self) -> dict:
        return {
            "min_opcodes": self.min_opcodes,
            "max_opcodes": self.max_opcodes,
            "count": self.count,
            "mean_seconds": self.mean_seconds,
        }


@dataclass
class EvalReport:
    per_class: dict[str, ClassMetrics]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    mean_analysis_seconds: float
    n_contracts: int
    time_buckets: list[TimeBucket] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "per_class": {cls: m.to_dict() for cls, m in self.per_class.items()},
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "mean_analysis_seconds": self.mean_analysis_seconds,
            "n_contracts": self.n_contracts,
            "time_buckets": [b.to_dict() for b in self.time_buckets],
        }


def _bucket_times(opcode_counts: list[int], timings: list[float]) -> list[TimeBucket]:
    buckets = []
    for lo, hi in TIME_BUCKETS:
        inside = [t for n, t in zip(opcode_counts, timings) if n >= lo and (hi is None or n < hi)]
        if inside:
            buckets.append(TimeBucket(lo, hi, len(inside), sum(inside) / len(inside)))
    return buckets


def _metrics_from_counts(tp: int, fp: int, fn: int, tn: int) -> ClassMetrics:
    m = ClassMetrics(tp=tp, fp=fp, fn=fn, tn=tn)
    if tp + fp > 0:
        m.precision = tp / (tp + fp)
    else:
        m.degenerate.append("precision")
    if tp + fn > 0:
        m.recall = tp / (tp + fn)
    else:
        m.degenerate.append("recall")
    if m.precision + m.recall > 0:
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall)
    else:
        m.degenerate.append("f1")
    return m


DECISION_THRESHOLD = 0.5


def predict_contract(bundle: ModelBundle, analysis: ContractAnalysis) -> dict[VulnClass, float]:
    features = featurize(analysis, bundle.corpus_stats, bundle.encoder_weights)
    x = features.for_mode(bundle.feature_mode)[None, :]
    return {cls: float(bundle.ensembles[cls].predict_proba(x)[0]) for cls in VulnClass}


def evaluate(bundle: ModelBundle, contracts: list[LabeledContract], workers: int = 1) -> EvalReport:
    """Confusion counts and Precision/Recall/F1 per class at threshold 0.5.

    Per-contract analysis time covers featurize + predict; batch prediction
    cost is apportioned evenly across contracts.
    """
    vectors, timings, opcode_counts = featurize_corpus(
        contracts, bundle.corpus_stats, bundle.encoder_weights, workers=workers
    )
    X = np.vstack([v.for_mode(bundle.feature_mode) for v in vectors]) if vectors else np.zeros((0, 0))

    counts = {cls: [0, 0, 0, 0] for cls in VulnClass}  # tp, fp, fn, tn
    t0 = time.perf_counter()
    probabilities = {cls: bundle.ensembles[cls].predict_proba(X) for cls in VulnClass} if contracts else {}
    predict_share = (time.perf_counter() - t0) / len(contracts) if contracts else 0.0
    timings = [t + predict_share for t in timings]

    for i, contract in enumerate(contracts):
        for cls in VulnClass:
            predicted = probabilities[cls][i] >= DECISION_THRESHOLD
            actual = cls in contract.labels
            if predicted and actual:
                counts[cls][0] += 1
            elif predicted:
                counts[cls][1] += 1
            elif actual:
                counts[cls][2] += 1
            else:
                counts[cls][3] += 1

    per_class = {cls.value: _metrics_from_counts(*counts[cls]) for cls in VulnClass}
    n_classes = len(per_class)
    return EvalReport(
        per_class=per_class,
        macro_precision=sum(m.precision for m in per_class.values()) / n_classes,
        macro_recall=sum(m.recall for m in per_class.values()) / n_classes,
        macro_f1=sum(m.f1 for m in per_class.values()) / n_classes,
        mean_analysis_seconds=sum(timings) / len(timings) if timings else 0.0,
        n_contracts=len(contracts),
        time_buckets=_bucket_times(opcode_counts, timings),
    )


SCAN_SCHEMA_VERSION = 1


def scan(bundle: ModelBundle, bytecode_hex: str, source_id: str = "<request>",
         include_dot: bool = False) -> dict:
    """Analyze one contract and report probabilities, verdicts, and fragment sites."""
    t0 = time.perf_counter()
    analysis = analyze_contract(source_id, bytecode_hex)
    probs = predict_contract(bundle, analysis)
    elapsed = time.perf_counter() - t0

    fragment_sites: dict[str, list[dict]] = {}
    for cls in VulnClass:
        sites = []
        for frag in analysis.fragments[cls]:
            sites.append({
                "seed_pc": analysis.cfg.blocks[frag.seed_block].start_pc,
                "block_pcs": [analysis.cfg.blocks[b].start_pc for b in frag.block_ids],
                "selector": frag.selector.hex() if frag.selector is not None else None,
            })
        fragment_sites[cls.value] = sites

    report = {
        "schema_version": SCAN_SCHEMA_VERSION,
        "source_id": source_id,
        "opcode_count": analysis.opcode_count,
        "block_count": len(analysis.cfg.blocks),
        "unresolved_jumps": len(analysis.cfg.unresolved_jumps),
        "probabilities": {cls.value: probs[cls] for cls in VulnClass},
        "verdicts": {cls.value: probs[cls] >= DECISION_THRESHOLD for cls in VulnClass},
        "fragments": fragment_sites,
        "analysis_seconds": elapsed,
    }
    if include_dot:
        report["dot"] = to_dot(analysis.cfg)
    return report


def dump_fragments(contracts: list[LabeledContract]) -> list[str]:
    """Line format consumed by external trainers: id class seed_block tokens..."""
    lines = []
    for contract in contracts:
        analysis = analyze_contract(contract.contract_id, contract.bytecode_hex)
        for cls in VulnClass:
            for frag in analysis.fragments[cls]:
                lines.append(
                    " ".join([contract.contract_id, cls.value, str(frag.seed_block), *frag.tokens])
                )
    return lines
