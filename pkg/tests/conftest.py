from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from docfuse import Corpus, EmbeddingRecord, Page, Query, Region

FIXTURES = Path(__file__).parent / "fixtures"


def basis(dim: int, axis: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.float32)
    v[axis] = 1.0
    return v


def rec(item_id: str, channel: str, vectors) -> EmbeddingRecord:
    granularity, modality, kind = channel.split("/")
    return EmbeddingRecord(
        item_id=item_id,
        granularity=granularity,
        modality=modality,
        kind=kind,
        vectors=np.atleast_2d(np.asarray(vectors, dtype=np.float32)),
    )


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def good_corpus_dir() -> Path:
    return FIXTURES / "corpus_good"


@pytest.fixture
def tiny_corpus() -> Corpus:
    """Two docs, four pages, one region per page, three queries."""
    pages = tuple(
        Page(id=f"d{d}/p{p}", doc_id=f"d{d}", image_ref=None, ocr_text=f"text {d} {p}", caption=f"cap {d} {p}")
        for d in (1, 2)
        for p in (1, 2)
    )
    regions = tuple(
        Region(id=f"{pg.id}/r1", page_id=pg.id, bbox=(0.0, 0.0, 10.0, 10.0)) for pg in pages
    )
    queries = (
        Query(id="q1", text="alpha", ground_truth=frozenset({"d1/p1"})),
        Query(id="q2", text="beta", ground_truth=frozenset({"d1/p2"})),
        Query(id="q3", text="gamma", ground_truth=frozenset({"d2/p1"})),
    )
    return Corpus(pages=pages, regions=regions, queries=queries)
