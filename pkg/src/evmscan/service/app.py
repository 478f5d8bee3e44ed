"""FastAPI service wrapping the scanner core.

The service is stateless except for one optional resident model bundle
(loaded at startup via ``create_app(model_path=...)`` or later through
``POST /model``); scan and eval requests may instead carry a bundle inline.
Input errors map to HTTP 400, malformed payloads to 422 (pydantic), and
anything unexpected to 500.
"""

from __future__ import annotations

import base64
import binascii
import io

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..bundle import ModelBundle, load_bundle, load_bundle_bytes, save_bundle_bytes
from ..corpus import LabeledContract
from ..encoder import EncoderConfig, load_weights
from ..errors import EvmScanError
from ..fragments import VulnClass
from ..gbdt import TrainConfig
from ..pipeline import dump_fragments, evaluate, scan, train_models
from ..synth import generate_synthetic_corpus
from ..vocab import VOCABULARY, vocabulary_sha256
from . import schemas


def _to_labeled(contracts: list[schemas.ContractIn]) -> list[LabeledContract]:
    out = []
    for c in contracts:
        try:
            labels = frozenset(VulnClass.from_name(name) for name in c.labels)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        out.append(LabeledContract(contract_id=c.contract_id, bytecode_hex=c.bytecode_hex, labels=labels))
    return out


def _decode_b64(payload: str, what: str) -> bytes:
    try:
        return base64.b64decode(payload, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise HTTPException(status_code=400, detail=f"invalid base64 in {what}: {exc}") from None


def create_app(model_path: str | None = None) -> FastAPI:
    app = FastAPI(title="evmscan", version=__version__)
    state: dict[str, ModelBundle | None] = {"model": None}
    if model_path is not None:
        state["model"] = load_bundle(model_path)

    def resolve_bundle(bundle_b64: str | None) -> ModelBundle:
        if bundle_b64 is not None:
            return load_bundle_bytes(_decode_b64(bundle_b64, "bundle_b64"))
        if state["model"] is None:
            raise HTTPException(status_code=400, detail="no model loaded and no bundle_b64 supplied")
        return state["model"]

    @app.exception_handler(EvmScanError)
    async def _domain_error(_, exc: EvmScanError):
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=400, content={"detail": f"{type(exc).__name__}: {exc}"})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.get("/vocab", response_model=schemas.VocabResponse)
    def vocab() -> schemas.VocabResponse:
        return schemas.VocabResponse(symbols=list(VOCABULARY), sha256=vocabulary_sha256())

    @app.get("/model", response_model=schemas.ModelInfoResponse)
    def model_info() -> schemas.ModelInfoResponse:
        bundle = state["model"]
        if bundle is None:
            return schemas.ModelInfoResponse(loaded=False)
        return schemas.ModelInfoResponse(
            loaded=True,
            feature_mode=bundle.feature_mode,
            feature_dim=bundle.feature_dim,
            encoder_config=bundle.encoder_config.to_dict(),
            classes=[cls.value for cls in VulnClass],
        )

    @app.post("/model", response_model=schemas.ModelInfoResponse)
    def model_load(req: schemas.LoadModelRequest) -> schemas.ModelInfoResponse:
        state["model"] = load_bundle_bytes(_decode_b64(req.bundle_b64, "bundle_b64"))
        return model_info()

    @app.post("/scan", response_model=schemas.ScanResponse)
    def scan_endpoint(req: schemas.ScanRequest) -> schemas.ScanResponse:
        bundle = resolve_bundle(req.bundle_b64)
        report = scan(bundle, req.bytecode_hex, source_id=req.source_id, include_dot=req.include_dot)
        return schemas.ScanResponse(**report)

    @app.post("/train", response_model=schemas.TrainResponse)
    def train_endpoint(req: schemas.TrainRequest) -> schemas.TrainResponse:
        if not req.contracts:
            raise HTTPException(status_code=400, detail="training corpus is empty")
        weights = None
        if req.encoder_weights_b64 is not None:
            weights = load_weights(io.BytesIO(_decode_b64(req.encoder_weights_b64, "encoder_weights_b64")),
                                   seed=req.encoder.seed)
        result = train_models(
            _to_labeled(req.contracts),
            feature_mode=req.features,
            encoder_weights=weights,
            encoder_config=EncoderConfig(
                d_model=req.encoder.d_model, n_layers=req.encoder.n_layers,
                n_heads=req.encoder.n_heads, max_len=req.encoder.max_len, seed=req.encoder.seed,
            ),
            gbdt_config=TrainConfig(**req.gbdt.model_dump()),
            workers=req.workers,
        )
        return schemas.TrainResponse(
            bundle_b64=base64.b64encode(save_bundle_bytes(result.bundle)).decode("ascii"),
            feature_dim=result.bundle.feature_dim,
            n_contracts=result.n_contracts,
            positives_per_class=result.positives_per_class,
        )

    @app.post("/eval", response_model=schemas.EvalResponse)
    def eval_endpoint(req: schemas.EvalRequest) -> schemas.EvalResponse:
        if not req.contracts:
            raise HTTPException(status_code=400, detail="evaluation corpus is empty")
        bundle = resolve_bundle(req.bundle_b64)
        report = evaluate(bundle, _to_labeled(req.contracts), workers=req.workers)
        return schemas.EvalResponse(**report.to_dict())

    @app.post("/synth", response_model=schemas.SynthResponse)
    def synth_endpoint(req: schemas.SynthRequest) -> schemas.SynthResponse:
        contracts = generate_synthetic_corpus(req.n, req.seed)
        return schemas.SynthResponse(
            contracts=[
                schemas.ContractIn(
                    contract_id=c.contract_id,
                    bytecode_hex=c.bytecode_hex,
                    labels=sorted(cls.value for cls in c.labels),
                )
                for c in contracts
            ]
        )

    @app.post("/fragments", response_model=schemas.FragmentDumpResponse)
    def fragments_endpoint(req: schemas.FragmentDumpRequest) -> schemas.FragmentDumpResponse:
        lines = dump_fragments(_to_labeled(req.contracts))
        return schemas.FragmentDumpResponse(lines=lines, n_records=len(lines))

    return app
