"""Two-layer fusion, step by step, on hand-sized lists.

Shows min-max normalization, the weighted layer-1 sum, the rank-only RRF
merge, and how the two compose in fuse_paths.

Run:  python demos/fusion_walkthrough.py
"""

from docfuse import FusionConfig, ScoredList, fuse_paths, min_max_normalize, rrf_fuse, weighted_sum_fuse

print("== layer 1: min-max normalization makes path scores comparable ==")
raw = ScoredList.ranked([("p1", 2.0), ("p2", 4.0), ("p3", 6.0)], source_label="ocr")
for (item_id, before), (_, after) in zip(raw, min_max_normalize(raw)):
    print(f"  {item_id}: {before} -> {after}")

print("\n== layer 1: weighted sum inside a source group ==")
ocr = ScoredList.ranked([("p1", 0.9), ("p2", 0.7), ("p3", 0.1)], source_label="ocr")
region = ScoredList.ranked([("p2", 0.8), ("p1", 0.3), ("p3", 0.2)], source_label="region")
config = FusionConfig(weights={"ocr": 0.5, "region": 0.5})
reduced = weighted_sum_fuse([ocr, region], config, source_label="gme")
for item_id, score in reduced:
    print(f"  {item_id}  {score:.4f}")

print("\n== layer 2: RRF consumes ranks only ==")
a = ScoredList.ranked([("x", 3.0), ("y", 2.0), ("z", 1.0)], source_label="A")
b = ScoredList.ranked([("y", 30.0), ("z", 20.0), ("x", 10.0)], source_label="B")
fused = rrf_fuse([a, b], 60.0)
print("  A = [x, y, z], B = [y, z, x], k = 60")
for item_id, score in fused:
    print(f"  {item_id}  {score:.7f}")
print("  y wins: 1/61 + 1/62 beats x's 1/61 + 1/63.")

print("\n== both layers composed ==")
page = ScoredList.ranked([("p3", 9.0), ("p1", 5.0), ("p2", 4.0)], source_label="page")
final = fuse_paths({"gme": [ocr, region], "colqwen": [page]}, FusionConfig())
for item_id, score in final:
    print(f"  {item_id}  {score:.7f}")
print("Scaling any path's scores changes nothing above: only ranks cross layer 2.")
