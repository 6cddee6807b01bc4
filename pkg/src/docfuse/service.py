"""Long-running HTTP search service over an immutable corpus + store.

The service never embeds anything: callers supply precomputed query
embeddings inline and get back a run-file-shaped ranking. Everything is
loaded once at startup and shared read-only across requests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .corpus import Corpus, Query, load_corpus
from .embeddings import EmbeddingStore, merge_embedding_files, record_from_json
from .errors import (
    ConfigError,
    DimMismatch,
    DocfuseError,
    DuplicateKey,
    MissingFile,
    MissingQueryEmbedding,
    ParseError,
    UnknownChannel,
    VerifierError,
    ZeroVector,
)
from .pipelines import PipelineConfig, _run_single
from .verification import VerifierClient, make_verifier


@dataclass(frozen=True)
class ServiceConfig:
    listen_addr: str
    corpus_dir: str
    embedding_files: tuple[str, ...]
    pipeline_config: str
    verifier_url: str | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        p = Path(path)
        if not p.is_file():
            raise MissingFile(f"missing service config: {p}")
        try:
            obj = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{p}: invalid JSON: {exc.msg}") from None
        try:
            cfg = cls(
                listen_addr=str(obj["listen_addr"]),
                corpus_dir=str(obj["corpus_dir"]),
                embedding_files=tuple(str(f) for f in obj["embedding_files"]),
                pipeline_config=str(obj["pipeline_config"]),
                verifier_url=obj.get("verifier_url"),
            )
        except (KeyError, TypeError):
            raise ParseError(f"{p}: service config needs listen_addr, corpus_dir, "
                             "embedding_files, pipeline_config") from None
        for required in (cfg.corpus_dir, cfg.pipeline_config, *cfg.embedding_files):
            if not Path(required).exists():
                raise MissingFile(f"service config references missing path: {required}")
        return cfg

    def host_port(self) -> tuple[str, int]:
        host, _, port = self.listen_addr.rpartition(":")
        if not host or not port.isdigit():
            raise ConfigError(f"listen_addr must be host:port, got {self.listen_addr!r}")
        return host, int(port)


class SearchRequest(BaseModel):
    query_id: str
    embeddings: list[dict]
    config_override: dict | None = None


def create_app(
    corpus: Corpus,
    store: EmbeddingStore,
    config: PipelineConfig,
    verifier: VerifierClient | None = None,
) -> FastAPI:
    app = FastAPI(title="docfuse search service")

    @app.exception_handler(RequestValidationError)
    def malformed_body(request: Request, exc: RequestValidationError) -> JSONResponse:
        # dim mismatches and channel problems get dedicated codes; anything the
        # body parser rejects is a plain 400
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "pages": len(corpus.pages)}

    @app.post("/search")
    def search(request: SearchRequest) -> dict:
        if not request.embeddings:
            raise HTTPException(status_code=400, detail="no query embeddings supplied")
        try:
            records = [
                record_from_json(obj, where=f"embeddings[{i}]")
                for i, obj in enumerate(request.embeddings)
            ]
            overlay = store.extended(records, normalize=True)
            effective = config.override(request.config_override or {})
        except DimMismatch as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        except (ParseError, DuplicateKey, ZeroVector, ConfigError, DocfuseError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None

        query = Query(id=request.query_id, text="")
        try:
            final, verdicts = _run_single(query, corpus, overlay, effective, verifier)
        except UnknownChannel as exc:
            raise HTTPException(status_code=404, detail=f"unknown channel: {exc}") from None
        except DimMismatch as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        except MissingQueryEmbedding as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        except VerifierError as exc:
            raise HTTPException(status_code=503, detail=str(exc)) from None
        except DocfuseError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None

        decision_by_item = {v.item_id: v.decision for v in verdicts}
        return {
            "query_id": request.query_id,
            "ranking": [
                {"item_id": item_id, "score": score, "verdict": decision_by_item.get(item_id)}
                for item_id, score in final.entries
            ],
            "error": None,
        }

    return app


def load_service(config_path: str | Path) -> tuple[FastAPI, str, int]:
    """Build the app from a service config file; returns (app, host, port)."""
    cfg = ServiceConfig.from_file(config_path)
    corpus = load_corpus(cfg.corpus_dir)
    store = merge_embedding_files(cfg.embedding_files, normalize=True)
    pipeline = PipelineConfig.from_file(cfg.pipeline_config)
    verifier = make_verifier(cfg.verifier_url) if cfg.verifier_url else None
    host, port = cfg.host_port()
    return create_app(corpus, store, pipeline, verifier), host, port
