import json

import pytest

from docfuse import (
    Corpus,
    Page,
    Query,
    Region,
    load_corpus,
    load_queries_file,
    regions_of_page,
    validate_corpus,
    write_corpus,
)
from docfuse.corpus import (
    BAD_ID,
    DANGLING_REFERENCE,
    DUPLICATE_ID,
    INVALID_BBOX,
    MISSING_QUERY_CONTENT,
    PAGE_PREFIX_MISMATCH,
)
from docfuse.errors import (
    DanglingReference,
    DuplicateId,
    MissingFile,
    ParseError,
    UnknownId,
)


def test_load_good_corpus_counts(good_corpus_dir):
    corpus = load_corpus(good_corpus_dir)
    assert len(corpus.pages) == 2
    assert len(corpus.regions) == 3
    assert len(corpus.queries) == 1
    assert corpus.manifest_version == 1


def test_load_accepts_manifest_file_path(good_corpus_dir):
    corpus = load_corpus(good_corpus_dir / "manifest.json")
    assert len(corpus.pages) == 2


def test_load_is_order_independent(good_corpus_dir, tmp_path):
    corpus = load_corpus(good_corpus_dir)
    shuffled = tmp_path / "shuffled"
    shuffled.mkdir()
    (shuffled / "manifest.json").write_text((good_corpus_dir / "manifest.json").read_text())
    for name in ("pages.jsonl", "regions.jsonl", "queries.jsonl"):
        lines = (good_corpus_dir / name).read_text().strip().splitlines()
        (shuffled / name).write_text("\n".join(reversed(lines)) + "\n")
    assert load_corpus(shuffled) == corpus


def test_load_dangling_region_reference(fixtures_dir):
    with pytest.raises(DanglingReference, match="d1/p9"):
        load_corpus(fixtures_dir / "corpus_bad_dangling")


def test_load_duplicate_page_id(fixtures_dir):
    with pytest.raises(DuplicateId, match="d1/p1"):
        load_corpus(fixtures_dir / "corpus_bad_dup")


def test_load_missing_manifest(tmp_path):
    with pytest.raises(MissingFile):
        load_corpus(tmp_path / "nowhere")


def test_load_reports_parse_error_with_line_number(good_corpus_dir, tmp_path):
    broken = tmp_path / "broken"
    broken.mkdir()
    for name in ("manifest.json", "pages.jsonl", "regions.jsonl", "queries.jsonl"):
        (broken / name).write_text((good_corpus_dir / name).read_text())
    (broken / "pages.jsonl").write_text(
        (good_corpus_dir / "pages.jsonl").read_text() + "{not json\n"
    )
    with pytest.raises(ParseError, match=r":3"):
        load_corpus(broken)


def test_load_dangling_ground_truth(good_corpus_dir, tmp_path):
    broken = tmp_path / "gt"
    broken.mkdir()
    for name in ("manifest.json", "pages.jsonl", "regions.jsonl"):
        (broken / name).write_text((good_corpus_dir / name).read_text())
    (broken / "queries.jsonl").write_text(
        json.dumps({"id": "q1", "text": "t", "ground_truth": ["d9/p9"]}) + "\n"
    )
    with pytest.raises(DanglingReference, match="d9/p9"):
        load_corpus(broken)


def test_round_trip_is_identity(good_corpus_dir, tmp_path):
    corpus = load_corpus(good_corpus_dir)
    write_corpus(corpus, tmp_path / "copy")
    assert load_corpus(tmp_path / "copy") == corpus


def test_regions_of_page_ordering():
    pages = (Page(id="d1/p1", doc_id="d1"),)
    regions = (
        Region(id="d1/p1/r1", page_id="d1/p1", bbox=(0.0, 10.0, 5.0, 20.0)),
        Region(id="d1/p1/r2", page_id="d1/p1", bbox=(0.0, 5.0, 5.0, 20.0)),
        Region(id="d1/p1/r3", page_id="d1/p1", bbox=(3.0, 5.0, 9.0, 20.0)),
    )
    corpus = Corpus(pages=pages, regions=regions, queries=())
    ordered = regions_of_page(corpus, "d1/p1")
    # ascending (y0, x0, id): r2 (y0=5,x0=0), r3 (y0=5,x0=3), r1 (y0=10)
    assert [r.id for r in ordered] == ["d1/p1/r2", "d1/p1/r3", "d1/p1/r1"]


def test_regions_of_page_empty_and_unknown():
    corpus = Corpus(pages=(Page(id="d1/p1", doc_id="d1"),), regions=(), queries=())
    assert regions_of_page(corpus, "d1/p1") == []
    with pytest.raises(UnknownId):
        regions_of_page(corpus, "d1/p9")


def test_regions_of_page_is_permutation_of_matches(tiny_corpus):
    for page in tiny_corpus.pages:
        got = regions_of_page(tiny_corpus, page.id)
        expected = [r for r in tiny_corpus.regions if r.page_id == page.id]
        assert sorted(r.id for r in got) == sorted(r.id for r in expected)


def test_validate_good_corpus_is_clean(good_corpus_dir):
    assert validate_corpus(load_corpus(good_corpus_dir)) == []


def test_validate_reports_expected_kinds(fixtures_dir):
    corpus = load_corpus(fixtures_dir / "corpus_bad_invalid")
    kinds = {issue.kind for issue in validate_corpus(corpus)}
    assert kinds == {BAD_ID, INVALID_BBOX, PAGE_PREFIX_MISMATCH, MISSING_QUERY_CONTENT}


def test_validate_invalid_bbox_kind():
    corpus = Corpus(
        pages=(Page(id="d1/p1", doc_id="d1"),),
        regions=(Region(id="d1/p1/r1", page_id="d1/p1", bbox=(5.0, 0.0, 5.0, 10.0)),),
        queries=(),
    )
    issues = validate_corpus(corpus)
    assert [i.kind for i in issues] == [INVALID_BBOX]


def test_validate_dangling_ground_truth_kind():
    corpus = Corpus(
        pages=(Page(id="d1/p1", doc_id="d1"),),
        regions=(),
        queries=(Query(id="q1", text="t", ground_truth=frozenset({"d9/p9"})),),
    )
    issues = validate_corpus(corpus)
    assert [i.kind for i in issues] == [DANGLING_REFERENCE]


def test_validate_duplicate_id_kind():
    corpus = Corpus(
        pages=(Page(id="d1/p1", doc_id="d1"), Page(id="d1/p1", doc_id="d1")),
        regions=(),
        queries=(),
    )
    issues = validate_corpus(corpus)
    assert [i.kind for i in issues] == [DUPLICATE_ID]


def test_region_ocr_override_round_trips(good_corpus_dir, tmp_path):
    src = tmp_path / "with_override"
    src.mkdir()
    for name in ("manifest.json", "pages.jsonl", "queries.jsonl"):
        (src / name).write_text((good_corpus_dir / name).read_text())
    (src / "regions.jsonl").write_text(
        json.dumps(
            {
                "id": "d1/p1/r1",
                "page_id": "d1/p1",
                "bbox": [0.0, 0.0, 10.0, 10.0],
                "image_ref": None,
                "ocr_text": "region-specific words",
            }
        )
        + "\n"
    )
    corpus = load_corpus(src)
    assert corpus.region("d1/p1/r1").ocr_text == "region-specific words"
    write_corpus(corpus, tmp_path / "copy")
    assert load_corpus(tmp_path / "copy") == corpus


def test_load_queries_file_preserves_order(tmp_path):
    path = tmp_path / "queries.jsonl"
    path.write_text(
        json.dumps({"id": "q2", "text": "later"}) + "\n" + json.dumps({"id": "q1", "text": "first"}) + "\n"
    )
    queries = load_queries_file(path)
    assert [q.id for q in queries] == ["q2", "q1"]
