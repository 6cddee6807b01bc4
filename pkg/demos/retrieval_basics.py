"""Walk through the scoring kernels on a toy corpus.

Builds a four-page store in memory, scores a query against the single-vector
OCR channel (cosine) and a multi-vector page channel (MaxSim), and shows the
deterministic tie-breaking of the ranked lists.

Run:  python demos/retrieval_basics.py
"""

import numpy as np

from docfuse import Channel, EmbeddingRecord, EmbeddingStore, cosine, maxsim, score_channel, top_k


def record(item_id, channel, vectors):
    granularity, modality, kind = channel.split("/")
    return EmbeddingRecord(item_id, granularity, modality, kind, np.atleast_2d(vectors))


print("== cosine on raw vectors ==")
print("cos([1,2,2],[2,1,2]) =", cosine([1, 2, 2], [2, 1, 2]), "(= 8/9)")

print("\n== MaxSim: every query row picks its best document row ==")
query_rows = [[1.0, 0.0], [0.6, 0.8]]
doc_rows = [[0.8, 0.6], [0.0, 1.0]]
print("maxsim =", maxsim(query_rows, doc_rows), "(= 0.8 + 0.96)")

print("\n== channel scoring: one ranked list per retrieval path ==")
store = EmbeddingStore.from_records(
    [
        record("d1/p1", "ocr_text/text/single", [0.9, 0.1, 0.0]),
        record("d1/p2", "ocr_text/text/single", [0.0, 1.0, 0.0]),
        record("d2/p1", "ocr_text/text/single", [0.5, 0.5, 0.0]),
        record("d2/p2", "ocr_text/text/single", [0.0, 0.0, 1.0]),
        record("d1/p1", "page/image/multi", [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
        record("d1/p2", "page/image/multi", [[0.0, 0.0, 1.0]]),
    ],
    normalize=True,
)

query = record("q", "query/text/single", [0.9, 0.2, 0.0])
ranked = score_channel(query, store, Channel("ocr_text", "text", "single"))
for item_id, score in ranked:
    print(f"  {item_id}  cosine={score:.4f}")

print("\ntop_k(2) keeps the head of the list:", top_k(ranked, 2).ids())

multi_query = record("q", "query/text/multi", [[1.0, 0.0, 0.0], [0.0, 0.8, 0.6]])
multi_ranked = score_channel(multi_query, store, Channel("page", "image", "multi"))
print("\nmulti-vector path (MaxSim):")
for item_id, score in multi_ranked:
    print(f"  {item_id}  maxsim={score:.4f}")

print("\nTies break by item id, so reruns and re-orderings never shuffle results.")
