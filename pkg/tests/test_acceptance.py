"""Acceptance gate: one test per release criterion, each printing a PASS/FAIL
line (run with `pytest tests/test_acceptance.py -s` to see them live).

Expected values come from independent oracles (plain scalar loops and
dict-accumulation re-implementations shared with the unit-test modules), never
from the engine path under test.
"""

from __future__ import annotations

import contextlib
import json
import random
import re
import time

import numpy as np
import pytest

from docfuse import (
    Channel,
    EmbeddingStore,
    MockVerifier,
    Query,
    ScoredList,
    evaluate,
    load_corpus,
    load_embeddings,
    recall_at_k,
    rrf_fuse,
    run_batch,
    score_channel,
    validate_corpus,
    weighted_sum_fuse,
    write_embeddings,
    write_report,
)
from docfuse.cli import cli_main
from docfuse.corpus import BAD_ID, INVALID_BBOX, MISSING_QUERY_CONTENT, PAGE_PREFIX_MISMATCH
from docfuse.errors import DanglingReference, DuplicateId
from docfuse.fusion import FusionConfig
from docfuse.pipelines import PipelineConfig
from docfuse.verification import Verdict, reorder_with_verdicts

from conftest import FIXTURES, rec
from test_fusion import rrf_oracle, weighted_sum_oracle
from test_similarity import cosine_oracle, maxsim_oracle, rank_oracle


@contextlib.contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"FAIL  {name}")
        raise
    print(f"PASS  {name}")


# -- 1. oracle equivalence: similarity ------------------------------------------


def test_similarity_oracle_equivalence_200_instances():
    with criterion("similarity kernels match naive double-loop oracle (200 instances, <10s)"):
        rng = np.random.default_rng(101)
        started = time.monotonic()
        for trial in range(200):
            dim = int(rng.choice([4, 8, 64]))
            n = int(rng.integers(1, 101))
            multi = trial % 2 == 1
            if multi:
                docs = {
                    f"i{j:03d}": rng.standard_normal((int(rng.integers(1, 4)), dim)).astype(
                        np.float32
                    )
                    for j in range(n)
                }
                channel = "page/image/multi"
                query = rec("q", "query/text/multi", rng.standard_normal((int(rng.integers(1, 4)), dim)).astype(np.float32))
                oracle_scores = [
                    (item_id, maxsim_oracle(query.vectors.tolist(), rows.tolist()))
                    for item_id, rows in docs.items()
                ]
            else:
                docs = {
                    f"i{j:03d}": rng.standard_normal((1, dim)).astype(np.float32)
                    for j in range(n)
                }
                channel = "page/image/single"
                query = rec("q", "query/text/single", rng.standard_normal((1, dim)).astype(np.float32))
                oracle_scores = [
                    (item_id, cosine_oracle(query.vectors[0].tolist(), rows[0].tolist()))
                    for item_id, rows in docs.items()
                ]
            store = EmbeddingStore.from_records([rec(i, channel, v) for i, v in docs.items()])
            got = score_channel(query, store, Channel(*channel.split("/")))
            want = rank_oracle(oracle_scores)
            assert got.ids() == [i for i, _ in want]
            for (gi, gs), (wi, ws) in zip(got.entries, want):
                assert abs(gs - ws) <= 1e-9, (trial, gi, gs, ws)
        elapsed = time.monotonic() - started
        assert elapsed < 10.0, f"took {elapsed:.2f}s"


# -- 2. oracle equivalence: fusion ------------------------------------------------


def _random_lists(rng, max_lists=5, universe=24):
    n_lists = int(rng.integers(1, max_lists + 1))
    lists = []
    for li in range(n_lists):
        size = int(rng.integers(1, universe + 1))
        members = rng.choice(universe, size=size, replace=False)
        entries = [(f"i{j:02d}", float(rng.standard_normal())) for j in members]
        lists.append(ScoredList.ranked(entries, source_label=f"L{li}"))
    return lists


def test_fusion_oracle_equivalence_500_instances():
    with criterion("fusion ops match brute-force oracles, RRF rank-invariant (500 instances)"):
        rng = np.random.default_rng(103)
        for _ in range(500):
            lists = _random_lists(rng)
            k = float(rng.uniform(1.0, 120.0))

            got = rrf_fuse(lists, k)
            want = rrf_oracle(lists, k)
            assert got.ids() == [i for i, _ in want]
            for (gi, gs), (wi, ws) in zip(got.entries, want):
                assert abs(gs - ws) <= 1e-12

            # strictly increasing per-list transforms leave RRF output unchanged
            transformed = []
            for lst in lists:
                a = float(rng.uniform(0.1, 5.0))
                b = float(rng.standard_normal())
                transformed.append(
                    ScoredList.ranked(
                        [(i, a * s**3 + a * s + b) for i, s in lst.entries],
                        source_label=lst.source_label,
                    )
                )
            assert rrf_fuse(transformed, k).entries == got.entries

            weights = [float(rng.uniform(0.05, 3.0)) for _ in lists]
            config = FusionConfig(
                weights={lst.source_label: w for lst, w in zip(lists, weights)},
                normalization="min_max",
            )
            got_ws = weighted_sum_fuse(lists, config)
            want_ws = weighted_sum_oracle(lists, weights, "min_max")
            assert got_ws.ids() == [i for i, _ in want_ws]
            for (gi, gs), (wi, ws) in zip(got_ws.entries, want_ws):
                assert abs(gs - ws) <= 1e-12


# -- 3. worked RRF example ----------------------------------------------------------


def test_worked_rrf_example():
    with criterion("worked RRF example: A=[x,y,z], B=[y,z,x], k=60 -> [y,x,z]"):
        a = ScoredList.ranked([("x", 3.0), ("y", 2.0), ("z", 1.0)], source_label="A")
        b = ScoredList.ranked([("y", 3.0), ("z", 2.0), ("x", 1.0)], source_label="B")
        fused = rrf_fuse([a, b], 60.0)
        assert fused.ids() == ["y", "x", "z"]
        scores = dict(fused.entries)
        assert abs(scores["x"] - (1 / 61 + 1 / 63)) <= 1e-12
        assert abs(scores["y"] - (1 / 62 + 1 / 61)) <= 1e-12
        assert abs(scores["z"] - (1 / 63 + 1 / 62)) <= 1e-12
        hand = rrf_oracle([a, b], 60.0)
        assert fused.ids() == [i for i, _ in hand]


# -- 4. verification policy -----------------------------------------------------------


def test_verification_stratification_200_instances():
    with criterion("verification reorder: stable stratified permutation (200 instances)"):
        fused = ScoredList.ranked([("a", 4.0), ("b", 3.0), ("c", 2.0), ("d", 1.0)], "fused")
        verdicts = [
            Verdict("q", "a", "no", "no"),
            Verdict("q", "b", "yes", "yes"),
            Verdict("q", "c", "unknown", ""),
            Verdict("q", "d", "yes", "yes"),
        ]
        assert reorder_with_verdicts(fused, verdicts).ids() == ["b", "d", "c", "a"]

        rng = random.Random(107)
        strata_of = {"yes": 0, "unknown": 1, "no": 2}
        for _ in range(200):
            n = rng.randint(1, 15)
            ids = [f"i{j:02d}" for j in range(n)]
            base = ScoredList.ranked(
                [(i, float(rng.uniform(-5, 5))) for i in ids], source_label="fused"
            )
            verified = rng.sample(ids, rng.randint(0, n))
            verdicts = [
                Verdict("q", i, rng.choice(["yes", "no", "unknown"]), "") for i in verified
            ]
            out = reorder_with_verdicts(base, verdicts)

            assert sorted(out.ids()) == sorted(ids)
            assert dict(out.entries) == dict(base.entries)
            decision = {v.item_id: v.decision for v in verdicts}
            strata = [strata_of[decision.get(i, "unknown")] for i in out.ids()]
            assert strata == sorted(strata)
            pos = {i: k for k, i in enumerate(base.ids())}
            for s in (0, 1, 2):
                block = [i for i in out.ids() if strata_of[decision.get(i, "unknown")] == s]
                assert block == sorted(block, key=pos.__getitem__)


# -- 5. end-to-end golden fixture -------------------------------------------------------


def _golden_run(tmp_path, name, workers):
    golden = FIXTURES / "golden"
    corpus = load_corpus(golden / "corpus")
    store = load_embeddings(golden / "embeddings.jsonl", normalize=True)
    config = PipelineConfig.from_file(golden / "pipeline.json")
    verifier = MockVerifier.from_jsonl(golden / "verifier.jsonl")
    queries = sorted(corpus.queries, key=lambda q: q.id)
    out = tmp_path / name
    entries = run_batch(queries, corpus, store, config, verifier, out_path=out, max_workers=workers)
    report = evaluate(entries, queries)
    report_path = tmp_path / (name + ".report.json")
    write_report(report, report_path)
    return out.read_bytes(), report_path.read_bytes(), report


def test_golden_fixture_end_to_end(tmp_path):
    with criterion("golden fixture: byte-identical across runs/workers, final_score 100.0"):
        run1, rep1, report = _golden_run(tmp_path, "run1.jsonl", workers=1)
        run2, rep2, _ = _golden_run(tmp_path, "run2.jsonl", workers=1)
        run4, rep4, _ = _golden_run(tmp_path, "run4.jsonl", workers=4)
        assert run1 == run2 == run4
        assert rep1 == rep2 == rep4
        assert report.final_score == 100.0
        assert all(r == 1.0 for recalls in report.per_query.values() for r in recalls.values())


# -- 6. fusion-helps fixture ---------------------------------------------------------


def test_fusion_helps_fixture():
    with criterion("fusion-helps fixture: each path recall@1=0.6 alone, fused recall@1=1.0"):
        fusion = FIXTURES / "fusion_helps"
        corpus = load_corpus(fusion / "corpus")
        store = load_embeddings(fusion / "embeddings.jsonl", normalize=True)
        variants = json.loads((fusion / "variants.json").read_text())
        queries = sorted(corpus.queries, key=lambda q: q.id)
        recalls = {}
        for variant in variants:
            config = PipelineConfig.from_json(variant["config"])
            entries = run_batch(queries, corpus, store, config)
            recalls[variant["name"]] = evaluate(entries, queries).aggregate[1]
        assert recalls["ocr_only"] == pytest.approx(0.6)
        assert recalls["caption_only"] == pytest.approx(0.6)
        assert recalls["fused"] == pytest.approx(1.0)


# -- 7. metric checks -------------------------------------------------------------------


def test_metric_properties_and_cli_formatting(tmp_path, capsys):
    with criterion("recall monotone in k, averaging identities, eval prints 4 decimals"):
        rng = random.Random(109)
        for _ in range(200):
            universe = [f"i{j}" for j in range(20)]
            ranking = rng.sample(universe, rng.randint(0, 20))
            relevant = set(rng.sample(universe, rng.randint(1, 6)))
            values = [recall_at_k(ranking, relevant, k) for k in range(1, 10)]
            assert all(0.0 <= v <= 1.0 for v in values)
            assert all(a <= b + 1e-15 for a, b in zip(values, values[1:]))

        # averaging identities on a random synthetic run
        from docfuse.pipelines import RunEntry

        entries = []
        queries = []
        for qi in range(12):
            universe = [f"d/{j}" for j in range(10)]
            ranking = tuple((i, 1.0 - 0.05 * n, None) for n, i in enumerate(rng.sample(universe, 8)))
            relevant = frozenset(rng.sample(universe, rng.randint(1, 3)))
            queries.append(Query(id=f"q{qi}", text="t", ground_truth=relevant))
            entries.append(RunEntry(query_id=f"q{qi}", ranking=ranking, error=None))
        report = evaluate(entries, queries)
        for k in (1, 3, 5):
            mean_k = sum(r[k] for r in report.per_query.values()) / len(report.per_query)
            assert report.aggregate[k] == pytest.approx(mean_k, abs=1e-12)
        mean_all = sum(report.aggregate[k] for k in (1, 3, 5)) / 3
        assert report.final_score == pytest.approx(100.0 * mean_all, abs=1e-9)

        # CLI formatting matches the 4-decimal table style
        golden = FIXTURES / "golden"
        assert (
            cli_main(
                [
                    "search",
                    "--corpus", str(golden / "corpus"),
                    "--store", str(golden / "embeddings.jsonl"),
                    "--config", str(golden / "pipeline.json"),
                    "--queries", str(golden / "queries.jsonl"),
                    "--verifier", f"mock:{golden / 'verifier.jsonl'}",
                    "--out", str(tmp_path / "run.jsonl"),
                ]
            )
            == 0
        )
        capsys.readouterr()
        assert cli_main(["eval", "--run", str(tmp_path / "run.jsonl"), "--corpus", str(golden / "corpus")]) == 0
        out = capsys.readouterr().out
        assert re.search(r"^final_score: \d+\.\d{4}$", out, re.MULTILINE), out


# -- 8. format round trips -----------------------------------------------------------------


def test_format_round_trips_and_corpus_fixtures(tmp_path):
    with criterion("embedding format round trips + corpus fixtures yield specified kinds"):
        rng = np.random.default_rng(113)
        records = []
        for j in range(12):
            kind = "multi" if j % 3 == 0 else "single"
            rows = int(rng.integers(1, 4)) if kind == "multi" else 1
            records.append(
                rec(f"d1/p{j}", f"page/image/{kind}", rng.standard_normal((rows, 6)).astype(np.float32))
            )

        binary = tmp_path / "e.fdr1"
        write_embeddings(records, binary, format="binary")
        loaded = {(r.channel, r.item_id): r for r in load_embeddings(binary).records()}
        assert set(loaded) == {(r.channel, r.item_id) for r in records}
        for r in records:
            assert loaded[(r.channel, r.item_id)].vectors.tobytes() == r.vectors.tobytes()

        jsonl = tmp_path / "e.jsonl"
        write_embeddings(records, jsonl, format="jsonl")
        loaded_j = {(r.channel, r.item_id): r for r in load_embeddings(jsonl).records()}
        for r in records:
            diff = np.abs(loaded_j[(r.channel, r.item_id)].vectors - r.vectors).max()
            assert diff <= 1e-6

        assert validate_corpus(load_corpus(FIXTURES / "corpus_good")) == []
        with pytest.raises(DanglingReference):
            load_corpus(FIXTURES / "corpus_bad_dangling")
        with pytest.raises(DuplicateId):
            load_corpus(FIXTURES / "corpus_bad_dup")
        kinds = {i.kind for i in validate_corpus(load_corpus(FIXTURES / "corpus_bad_invalid"))}
        assert kinds == {BAD_ID, INVALID_BBOX, PAGE_PREFIX_MISMATCH, MISSING_QUERY_CONTENT}
