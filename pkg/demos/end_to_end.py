"""Full pipeline over the committed synthetic fixtures.

Loads the six-page golden corpus, runs the multi-path pipeline with the mock
verifier, evaluates recall@{1,3,5}, then replays the fusion-helps ablation to
show each path failing alone and succeeding fused.

Run:  python demos/end_to_end.py
"""

import json
from pathlib import Path

from docfuse import (
    MockVerifier,
    PipelineConfig,
    ablation_run,
    evaluate,
    load_corpus,
    load_embeddings,
    run_batch,
)

FIXTURES = Path(__file__).parent.parent / "tests" / "fixtures"

print("== golden fixture: three paths + verification ==")
golden = FIXTURES / "golden"
corpus = load_corpus(golden / "corpus")
store = load_embeddings(golden / "embeddings.jsonl", normalize=True)
config = PipelineConfig.from_file(golden / "pipeline.json")
verifier = MockVerifier.from_jsonl(golden / "verifier.jsonl")
queries = sorted(corpus.queries, key=lambda q: q.id)

entries = run_batch(queries, corpus, store, config, verifier)
for entry in entries:
    head = ", ".join(
        f"{item_id}({verdict or '-'})" for item_id, _, verdict in entry.ranking[:3]
    )
    print(f"  {entry.query_id}: {head}")

report = evaluate(entries, queries)
print("  aggregate:", {f"recall@{k}": v for k, v in sorted(report.aggregate.items())})
print(f"  final_score: {report.final_score:.4f}")

print("\n== fusion-helps fixture: single paths miss, the fused pipeline does not ==")
fusion = FIXTURES / "fusion_helps"
corpus = load_corpus(fusion / "corpus")
store = load_embeddings(fusion / "embeddings.jsonl", normalize=True)
queries = sorted(corpus.queries, key=lambda q: q.id)
variants = [
    (v["name"], PipelineConfig.from_json(v["config"]))
    for v in json.loads((fusion / "variants.json").read_text())
]
for name, variant in variants:
    run = run_batch(queries, corpus, store, variant)
    agg = evaluate(run, queries).aggregate
    print(f"  {name:13s} recall@1={agg[1]:.2f}  recall@3={agg[3]:.2f}")

table = ablation_run(variants, queries, corpus, store)
print("\n  trend series (step, variant, score):")
for step, name, score in table.trend():
    print(f"    {step}  {name:13s} {score:.4f}")
