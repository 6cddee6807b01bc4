"""Declarative retrieval pipelines: paths -> fusion -> verification -> top-k.

A pipeline is a JSON-configurable set of retrieval paths. Each path scores
one query channel against one candidate channel; region-granularity paths are
max-pool projected to pages (unless opted out) so every fused list shares one
id namespace. Layer-1 groups are reduced by weighted sum and merged by RRF;
an optional verification stage re-stratifies the fused list.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import Corpus, Query
from .embeddings import Channel, EmbeddingStore
from .errors import (
    ConfigError,
    DocfuseError,
    MissingFile,
    MissingQueryEmbedding,
    NotFound,
    ParseError,
    UnknownItem,
)
from .fusion import FusionConfig, fuse_paths
from .similarity import ScoredList, score_channel, top_k
from .verification import (
    Verdict,
    VerificationConfig,
    VerifierClient,
    reorder_with_verdicts,
    verify_candidates,
)

TASKS = ("m2kr", "mmdocir")


@dataclass(frozen=True)
class PathSpec:
    """One retrieval path: a query channel matched against a candidate channel."""

    label: str
    query_channel: Channel
    candidate_channel: Channel
    group: str
    project_to_page: bool = True

    def __post_init__(self) -> None:
        if not self.label:
            raise ConfigError("path label must be non-empty")
        if self.query_channel.granularity != "query":
            raise ConfigError(f"{self.label}: query_channel granularity must be 'query'")
        if self.query_channel.kind != self.candidate_channel.kind:
            raise ConfigError(
                f"{self.label}: query kind {self.query_channel.kind!r} must match "
                f"candidate kind {self.candidate_channel.kind!r}"
            )

    @classmethod
    def from_json(cls, obj: Mapping) -> "PathSpec":
        try:
            return cls(
                label=str(obj["label"]),
                query_channel=Channel.parse(obj["query_channel"]),
                candidate_channel=Channel.parse(obj["candidate_channel"]),
                group=str(obj["group"]),
                project_to_page=bool(obj.get("project_to_page", True)),
            )
        except KeyError as exc:
            raise ParseError(f"path spec missing key: {exc}") from None

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "query_channel": str(self.query_channel),
            "candidate_channel": str(self.candidate_channel),
            "group": self.group,
            "project_to_page": self.project_to_page,
        }


@dataclass(frozen=True)
class PipelineConfig:
    task: str
    paths: tuple[PathSpec, ...]
    fusion: FusionConfig = field(default_factory=FusionConfig)
    verification: VerificationConfig | None = None
    output_k: int = 5

    def __post_init__(self) -> None:
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        if not self.paths:
            raise ConfigError("pipeline needs at least one path")
        if self.output_k < 1:
            raise ConfigError(f"output_k must be positive, got {self.output_k}")

    @classmethod
    def from_json(cls, obj: Mapping) -> "PipelineConfig":
        try:
            paths = tuple(PathSpec.from_json(p) for p in obj["paths"])
        except KeyError:
            raise ParseError("pipeline config missing 'paths'") from None
        verification = obj.get("verification")
        return cls(
            task=str(obj.get("task", "mmdocir")),
            paths=paths,
            fusion=FusionConfig.from_json(obj.get("fusion") or {}),
            verification=None if verification is None else VerificationConfig.from_json(verification),
            output_k=int(obj.get("output_k", 5)),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        p = Path(path)
        if not p.is_file():
            raise MissingFile(f"missing pipeline config: {p}")
        try:
            obj = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{p}: invalid JSON: {exc.msg}") from None
        return cls.from_json(obj)

    def to_json(self) -> dict:
        return {
            "task": self.task,
            "paths": [p.to_json() for p in self.paths],
            "fusion": self.fusion.to_json(),
            "verification": None if self.verification is None else self.verification.to_json(),
            "output_k": self.output_k,
        }

    def override(self, partial: Mapping) -> "PipelineConfig":
        """New config with top-level keys replaced by the partial document."""
        merged = self.to_json()
        for key, value in partial.items():
            if key not in merged:
                raise ConfigError(f"unknown pipeline config key: {key!r}")
            merged[key] = value
        return PipelineConfig.from_json(merged)


def default_m2kr_config(**overrides) -> PipelineConfig:
    """Three single-vector strategies, each its own RRF group: region images
    vs the image query, region images vs the multimodal query, captions vs
    the text query."""
    cfg = {
        "task": "m2kr",
        "paths": [
            {
                "label": "image_region",
                "query_channel": "query/image/single",
                "candidate_channel": "region/image/single",
                "group": "image_region",
            },
            {
                "label": "multimodal_region",
                "query_channel": "query/multimodal/single",
                "candidate_channel": "region/image/single",
                "group": "multimodal_region",
            },
            {
                "label": "text_caption",
                "query_channel": "query/text/single",
                "candidate_channel": "caption/text/single",
                "group": "text_caption",
            },
        ],
        "fusion": {},
        "verification": None,
        "output_k": 5,
    }
    cfg.update(overrides)
    return PipelineConfig.from_json(cfg)


def default_mmdocir_config(**overrides) -> PipelineConfig:
    """Multi-vector full-page retrieval RRF-merged against a group holding the
    OCR-text and region-image paths (equal-weight sum inside the group)."""
    cfg = {
        "task": "mmdocir",
        "paths": [
            {
                "label": "page_multivec",
                "query_channel": "query/text/multi",
                "candidate_channel": "page/image/multi",
                "group": "colqwen",
            },
            {
                "label": "ocr_text",
                "query_channel": "query/text/single",
                "candidate_channel": "ocr_text/text/single",
                "group": "gme",
            },
            {
                "label": "region_image",
                "query_channel": "query/text/single",
                "candidate_channel": "region/image/single",
                "group": "gme",
            },
        ],
        "fusion": {},
        "verification": None,
        "output_k": 5,
    }
    cfg.update(overrides)
    return PipelineConfig.from_json(cfg)


def region_to_page_project(scored: ScoredList, corpus: Corpus) -> ScoredList:
    """Max-pool region scores up to their pages; unscored pages are absent."""
    best: dict[str, float] = {}
    for region_id, score in scored.entries:
        if not corpus.has_region(region_id):
            raise UnknownItem(f"{region_id!r} does not name a region")
        page_id = corpus.region(region_id).page_id
        if page_id not in best or score > best[page_id]:
            best[page_id] = score
    return ScoredList.ranked(best.items(), source_label=scored.source_label)


def _query_record(query: Query, store: EmbeddingStore, channel: Channel):
    try:
        return store.get(channel, query.id)
    except NotFound:
        raise MissingQueryEmbedding(f"query {query.id!r} has no embedding in channel {channel}") from None


def _run_single(
    query: Query,
    corpus: Corpus,
    store: EmbeddingStore,
    config: PipelineConfig,
    verifier: VerifierClient | None,
) -> tuple[ScoredList, list[Verdict]]:
    groups: dict[str, list[ScoredList]] = {}
    for path in config.paths:
        query_rec = _query_record(query, store, path.query_channel)
        scored = score_channel(query_rec, store, path.candidate_channel, source_label=path.label)
        if path.candidate_channel.granularity == "region" and path.project_to_page:
            scored = region_to_page_project(scored, corpus)
        groups.setdefault(path.group, []).append(scored)

    fused = fuse_paths(groups, config.fusion)

    verdicts: list[Verdict] = []
    if config.verification is not None:
        if verifier is None:
            raise ConfigError("verification enabled but no verifier client supplied")
        verdicts = verify_candidates(query, fused, verifier, config.verification, corpus)
        fused = reorder_with_verdicts(fused, verdicts)

    return top_k(fused, config.output_k), verdicts


def run_query(
    query: Query,
    corpus: Corpus,
    store: EmbeddingStore,
    config: PipelineConfig,
    verifier: VerifierClient | None = None,
) -> ScoredList:
    """Run the full pipeline for one query; the final list is top-output_k."""
    final, _ = _run_single(query, corpus, store, config, verifier)
    return final


@dataclass(frozen=True)
class RunEntry:
    """One run-file line: a query's ranking or its recorded error."""

    query_id: str
    ranking: tuple[tuple[str, float, str | None], ...]
    error: str | None = None

    def to_json(self) -> dict:
        return {
            "query_id": self.query_id,
            "ranking": [
                {"item_id": item_id, "score": score, "verdict": verdict}
                for item_id, score, verdict in self.ranking
            ],
            "error": self.error,
        }


def run_batch(
    queries: Sequence[Query],
    corpus: Corpus,
    store: EmbeddingStore,
    config: PipelineConfig,
    verifier: VerifierClient | None = None,
    out_path: str | Path | None = None,
    max_workers: int = 1,
) -> list[RunEntry]:
    """Run every query independently; per-query failures become error entries.

    Entries are emitted in input order regardless of worker scheduling, so a
    rerun with any worker count yields an identical run file.
    """

    def one(query: Query) -> RunEntry:
        try:
            final, verdicts = _run_single(query, corpus, store, config, verifier)
        except DocfuseError as exc:
            return RunEntry(query_id=query.id, ranking=(), error=f"{type(exc).__name__}: {exc}")
        decision_by_item = {v.item_id: v.decision for v in verdicts}
        ranking = tuple(
            (item_id, score, decision_by_item.get(item_id)) for item_id, score in final.entries
        )
        return RunEntry(query_id=query.id, ranking=ranking, error=None)

    if max_workers <= 1 or len(queries) <= 1:
        entries = [one(q) for q in queries]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            entries = list(pool.map(one, queries))

    if out_path is not None:
        write_run_file(entries, out_path)
    return entries


def write_run_file(entries: Sequence[RunEntry], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for entry in entries:
            fh.write(json.dumps(entry.to_json()) + "\n")


def load_run_file(path: str | Path) -> list[RunEntry]:
    p = Path(path)
    if not p.is_file():
        raise MissingFile(f"missing run file: {p}")
    entries: list[RunEntry] = []
    with p.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{p}:{lineno}: invalid JSON: {exc.msg}") from None
            try:
                ranking = tuple(
                    (str(e["item_id"]), float(e["score"]), e.get("verdict"))
                    for e in obj["ranking"]
                )
                entries.append(
                    RunEntry(query_id=str(obj["query_id"]), ranking=ranking, error=obj.get("error"))
                )
            except (KeyError, TypeError):
                raise ParseError(f"{p}:{lineno}: malformed run entry") from None
    return entries
