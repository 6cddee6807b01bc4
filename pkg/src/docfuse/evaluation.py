"""Recall@k metrics, run-file evaluation, and ablation sweeps.

The final score is 100 x the mean of aggregate recall@1, @3 and @5. Queries
whose run entry recorded an error contribute zero at every cutoff; skipping
them would inflate the averages.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Corpus, Query
from .errors import EmptyRelevantSet, MissingGroundTruth
from .pipelines import PipelineConfig, RunEntry, run_batch
from .verification import VerifierClient

CUTOFFS = (1, 3, 5)


def recall_at_k(ranking: Sequence[str], relevant: Iterable[str], k: int) -> float:
    """|relevant ∩ first k of ranking| / |relevant|."""
    relevant_set = set(relevant)
    if not relevant_set:
        raise EmptyRelevantSet("relevant set must be nonempty")
    if k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    hits = relevant_set.intersection(ranking[:k])
    return len(hits) / len(relevant_set)


@dataclass(frozen=True)
class EvalReport:
    per_query: dict[str, dict[int, float]]  # query_id -> {k: recall}
    aggregate: dict[int, float]
    final_score: float

    def to_json(self) -> dict:
        return {
            "per_query": {
                qid: {f"recall@{k}": r for k, r in sorted(recalls.items())}
                for qid, recalls in self.per_query.items()
            },
            "aggregate": {f"recall@{k}": r for k, r in sorted(self.aggregate.items())},
            "final_score": self.final_score,
        }


def evaluate(entries: Sequence[RunEntry], queries: Sequence[Query] | Mapping[str, Query]) -> EvalReport:
    """Score a run against the queries' ground truth.

    Every run entry must belong to a query with nonempty ground truth;
    entries are matched by query_id and the report is independent of their
    order in the run file.
    """
    by_id: Mapping[str, Query]
    if isinstance(queries, Mapping):
        by_id = queries
    else:
        by_id = {q.id: q for q in queries}

    per_query: dict[str, dict[int, float]] = {}
    for entry in sorted(entries, key=lambda e: e.query_id):
        query = by_id.get(entry.query_id)
        if query is None or not query.ground_truth:
            raise MissingGroundTruth(entry.query_id)
        if entry.error is not None:
            per_query[entry.query_id] = {k: 0.0 for k in CUTOFFS}
            continue
        ranking = [item_id for item_id, _, _ in entry.ranking]
        per_query[entry.query_id] = {
            k: recall_at_k(ranking, query.ground_truth, k) for k in CUTOFFS
        }

    n = len(per_query)
    aggregate = {
        k: (sum(r[k] for r in per_query.values()) / n if n else 0.0) for k in CUTOFFS
    }
    final_score = 100.0 * sum(aggregate[k] for k in CUTOFFS) / len(CUTOFFS)
    return EvalReport(per_query=per_query, aggregate=aggregate, final_score=final_score)


def write_report(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_json(), indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class AblationTable:
    """Per-variant final scores, in input order, plus a plottable trend series."""

    rows: tuple[tuple[str, float], ...]

    def trend(self) -> list[tuple[int, str, float]]:
        return [(step, name, score) for step, (name, score) in enumerate(self.rows, start=1)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["variant", "score"])
        for name, score in self.rows:
            writer.writerow([name, f"{score:.4f}"])
        return buf.getvalue()

    def trend_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step", "variant", "score"])
        for step, name, score in self.trend():
            writer.writerow([step, name, f"{score:.4f}"])
        return buf.getvalue()


def combined_score(reports: Mapping[str, EvalReport]) -> dict:
    """Explicitly-labeled per-task scores plus their unweighted mean.

    Whether a multi-task leaderboard averages task scores or weights them is
    a reporting choice; this emits both ingredients so either reading can be
    computed downstream.
    """
    if not reports:
        raise ValueError("combined_score needs at least one task report")
    per_task = {name: report.final_score for name, report in reports.items()}
    return {
        "per_task": per_task,
        "combined_mean": sum(per_task.values()) / len(per_task),
    }


def ablation_run(
    variants: Sequence[tuple[str, PipelineConfig]],
    queries: Sequence[Query],
    corpus: Corpus,
    store,
    verifier: VerifierClient | None = None,
    max_workers: int = 1,
) -> AblationTable:
    """Run and evaluate each named variant over the same fixed inputs."""
    if not variants:
        raise ValueError("ablation needs at least one variant")
    rows: list[tuple[str, float]] = []
    for name, config in variants:
        entries = run_batch(queries, corpus, store, config, verifier, max_workers=max_workers)
        report = evaluate(entries, queries)
        rows.append((name, report.final_score))
    return AblationTable(rows=tuple(rows))
