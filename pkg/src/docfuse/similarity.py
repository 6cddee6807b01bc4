"""Exact scoring kernels: cosine, multi-vector MaxSim, and channel ranking.

All kernels accumulate in float64 regardless of input dtype. Rankings are
strict: score descending, ties broken by item id ascending, so any two runs
(and any worker partitioning upstream) produce identical orderings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .embeddings import Channel, EmbeddingRecord, EmbeddingStore
from .errors import DimMismatch, EmptyMatrix, ZeroVector


@dataclass(frozen=True)
class ScoredList:
    """A ranked list of (item_id, score); the currency between stages.

    Lists built through :meth:`ranked` are strictly ordered by
    (score desc, id asc). Stages that impose their own order (verification,
    truncation) construct instances directly and keep the entry order given.
    """

    entries: tuple[tuple[str, float], ...]
    source_label: str = ""

    @classmethod
    def ranked(cls, scores: Iterable[tuple[str, float]], source_label: str = "") -> "ScoredList":
        pairs = list(scores)
        seen: set[str] = set()
        for item_id, score in pairs:
            if item_id in seen:
                raise ValueError(f"duplicate item id in scored list: {item_id!r}")
            seen.add(item_id)
            if not math.isfinite(score):
                raise ValueError(f"non-finite score for {item_id!r}: {score}")
        pairs.sort(key=lambda e: (-e[1], e[0]))
        return cls(entries=tuple((i, float(s)) for i, s in pairs), source_label=source_label)

    def ids(self) -> list[str]:
        return [item_id for item_id, _ in self.entries]

    def scores(self) -> dict[str, float]:
        return dict(self.entries)

    def relabel(self, source_label: str) -> "ScoredList":
        return ScoredList(entries=self.entries, source_label=source_label)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """u·v / (|u||v|), accumulated in float64."""
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if u.shape[0] != v.shape[0]:
        raise DimMismatch(f"cosine: dims {u.shape[0]} vs {v.shape[0]}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine: zero-norm input")
    return float(np.dot(u, v) / (nu * nv))


def maxsim(query_rows: np.ndarray, doc_rows: np.ndarray) -> float:
    """Late-interaction score: sum over query rows of the best doc-row dot.

    Rows are expected to be pre-normalized; the kernel works on raw dot
    products and does not rescale.
    """
    q = np.atleast_2d(np.asarray(query_rows, dtype=np.float64))
    d = np.atleast_2d(np.asarray(doc_rows, dtype=np.float64))
    if q.shape[0] == 0 or d.shape[0] == 0:
        raise EmptyMatrix("maxsim: empty matrix")
    if q.shape[1] != d.shape[1]:
        raise DimMismatch(f"maxsim: dims {q.shape[1]} vs {d.shape[1]}")
    sims = q @ d.T
    return float(sims.max(axis=1).sum())


def score_channel(
    query_rec: EmbeddingRecord, store: EmbeddingStore, channel: Channel, source_label: str = ""
) -> ScoredList:
    """Score one query record against every item in a store channel.

    kind='single' channels use cosine; kind='multi' channels use MaxSim.
    The output has one entry per channel item and a deterministic order.
    """
    items = store.items(channel)  # raises UnknownChannel when absent
    label = source_label or str(channel)
    if not items:
        return ScoredList(entries=(), source_label=label)

    if query_rec.kind != channel.kind:
        raise DimMismatch(
            f"query kind {query_rec.kind!r} incompatible with channel kind {channel.kind!r}"
        )
    dim = store.dim(channel)
    if query_rec.dim != dim:
        raise DimMismatch(f"query dim {query_rec.dim} != channel {channel} dim {dim}")

    if channel.kind == "single":
        q = query_rec.vectors[0].astype(np.float64)
        nq = float(np.linalg.norm(q))
        if nq == 0.0:
            raise ZeroVector("score_channel: zero-norm query")
        matrix = np.stack([rec.vectors[0] for rec in items]).astype(np.float64)
        norms = np.linalg.norm(matrix, axis=1)
        for rec, n in zip(items, norms):
            if n == 0.0:
                raise ZeroVector(f"score_channel: zero-norm candidate {rec.item_id!r}")
        sims = (matrix @ q) / (norms * nq)
        pairs = [(rec.item_id, float(s)) for rec, s in zip(items, sims)]
    else:
        # One big (query_rows x all_doc_rows) product, segment-maxed per item.
        q = query_rec.vectors.astype(np.float64)
        all_rows = np.concatenate([rec.vectors for rec in items]).astype(np.float64)
        offsets = np.cumsum([0] + [rec.n_rows for rec in items[:-1]])
        sims = q @ all_rows.T
        seg_max = np.maximum.reduceat(sims, offsets, axis=1)
        totals = seg_max.sum(axis=0)
        pairs = [(rec.item_id, float(s)) for rec, s in zip(items, totals)]

    return ScoredList.ranked(pairs, source_label=label)


def top_k(scored: ScoredList, k: int) -> ScoredList:
    """First min(k, len) entries, order preserved."""
    if k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    return ScoredList(entries=scored.entries[:k], source_label=scored.source_label)
