"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

FeatureMode = Literal["tfidf", "cfg", "full"]


class ContractIn(BaseModel):
    contract_id: str
    bytecode_hex: str
    labels: list[str] = Field(default_factory=list)


class HealthResponse(BaseModel):
    status: str
    version: str


class VocabResponse(BaseModel):
    symbols: list[str]
    sha256: str


class EncoderParams(BaseModel):
    d_model: int = 64
    n_layers: int = 2
    n_heads: int = 4
    max_len: int = 512
    seed: int = 0


class GbdtParams(BaseModel):
    n_trees: int = 200
    learning_rate: float = 0.1
    max_leaves: int = 31
    min_samples_leaf: int = 5
    leaf_penalty: float = 0.0
    l2_weight: float = 1.0
    seed: int = 0


class TrainRequest(BaseModel):
    contracts: list[ContractIn]
    features: FeatureMode = "full"
    encoder: EncoderParams = Field(default_factory=EncoderParams)
    gbdt: GbdtParams = Field(default_factory=GbdtParams)
    encoder_weights_b64: Optional[str] = None  # interchange file from an external trainer
    workers: int = Field(default=1, ge=1, le=64)


class TrainResponse(BaseModel):
    bundle_b64: str
    feature_dim: int
    n_contracts: int
    positives_per_class: dict[str, int]


class ScanRequest(BaseModel):
    bytecode_hex: str
    source_id: str = "request"
    bundle_b64: Optional[str] = None  # falls back to the model loaded on the server
    include_dot: bool = False


class FragmentSite(BaseModel):
    seed_pc: int
    block_pcs: list[int]
    selector: Optional[str] = None


class ScanResponse(BaseModel):
    schema_version: int
    source_id: str
    opcode_count: int
    block_count: int
    unresolved_jumps: int
    probabilities: dict[str, float]
    verdicts: dict[str, bool]
    fragments: dict[str, list[FragmentSite]]
    analysis_seconds: float
    dot: Optional[str] = None


class EvalRequest(BaseModel):
    contracts: list[ContractIn]
    bundle_b64: Optional[str] = None
    workers: int = Field(default=1, ge=1, le=64)


class ClassMetricsOut(BaseModel):
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float
    degenerate: list[str]


class TimeBucketOut(BaseModel):
    min_opcodes: int
    max_opcodes: Optional[int]
    count: int
    mean_seconds: float


class EvalResponse(BaseModel):
    per_class: dict[str, ClassMetricsOut]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    mean_analysis_seconds: float
    n_contracts: int
    time_buckets: list[TimeBucketOut] = Field(default_factory=list)


class SynthRequest(BaseModel):
    n: int = Field(ge=8)
    seed: int = 0


class SynthResponse(BaseModel):
    contracts: list[ContractIn]


class FragmentDumpRequest(BaseModel):
    contracts: list[ContractIn]


class FragmentDumpResponse(BaseModel):
    lines: list[str]
    n_records: int


class LoadModelRequest(BaseModel):
    bundle_b64: str


class ModelInfoResponse(BaseModel):
    loaded: bool
    feature_mode: Optional[str] = None
    feature_dim: Optional[int] = None
    encoder_config: Optional[dict] = None
    classes: list[str] = Field(default_factory=list)
