"""Document / page / region data model and corpus manifest loading.

A corpus is a directory holding ``manifest.json`` plus three JSONL files
(pages, regions, queries). Ids are hierarchical and slash-delimited:
``doc/page`` for pages, ``doc/page/region`` for regions, so containment is
checkable by string prefix alone.

Loading is strict about structural integrity (parseability, unique ids,
resolvable references); all other invariants are reported as data by
:func:`validate_corpus` rather than raised, so malformed-but-loadable corpora
can be inspected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import DanglingReference, DuplicateId, MissingFile, ParseError, UnknownId

# Issue kinds emitted by validate_corpus. One kind per data-model invariant.
BAD_ID = "BadId"
DUPLICATE_ID = "DuplicateId"
DANGLING_REFERENCE = "DanglingReference"
INVALID_BBOX = "InvalidBBox"
PAGE_PREFIX_MISMATCH = "PagePrefixMismatch"
MISSING_QUERY_CONTENT = "MissingQueryContent"


@dataclass(frozen=True)
class Page:
    id: str
    doc_id: str
    image_ref: str | None = None
    ocr_text: str = ""
    caption: str = ""


@dataclass(frozen=True)
class Region:
    id: str
    page_id: str
    bbox: tuple[float, float, float, float]
    image_ref: str | None = None
    ocr_text: str = ""  # optional override; empty means "use the page's text"


@dataclass(frozen=True)
class Query:
    id: str
    text: str | None = None
    image_ref: str | None = None
    instruction: str | None = None
    ground_truth: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Issue:
    """One validation finding: which item, which invariant, human detail."""

    kind: str
    item_id: str
    message: str


@dataclass
class Corpus:
    """Immutable-after-construction document collection.

    Collections are stored in canonical (id-sorted) order so corpora loaded
    from differently-ordered files compare equal. Lookup indexes are built
    once and excluded from equality.
    """

    pages: tuple[Page, ...]
    regions: tuple[Region, ...]
    queries: tuple[Query, ...]
    manifest_version: int = 1

    _pages_by_id: dict[str, Page] = field(init=False, repr=False, compare=False)
    _regions_by_id: dict[str, Region] = field(init=False, repr=False, compare=False)
    _queries_by_id: dict[str, Query] = field(init=False, repr=False, compare=False)
    _regions_by_page: dict[str, list[Region]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self._pages_by_id = {}
        for p in self.pages:
            self._pages_by_id.setdefault(p.id, p)
        self._regions_by_id = {}
        self._regions_by_page = {}
        for r in self.regions:
            self._regions_by_id.setdefault(r.id, r)
            self._regions_by_page.setdefault(r.page_id, []).append(r)
        self._queries_by_id = {}
        for q in self.queries:
            self._queries_by_id.setdefault(q.id, q)

    def page(self, page_id: str) -> Page:
        try:
            return self._pages_by_id[page_id]
        except KeyError:
            raise UnknownId(f"unknown page id: {page_id!r}") from None

    def region(self, region_id: str) -> Region:
        try:
            return self._regions_by_id[region_id]
        except KeyError:
            raise UnknownId(f"unknown region id: {region_id!r}") from None

    def query(self, query_id: str) -> Query:
        try:
            return self._queries_by_id[query_id]
        except KeyError:
            raise UnknownId(f"unknown query id: {query_id!r}") from None

    def has_page(self, item_id: str) -> bool:
        return item_id in self._pages_by_id

    def has_region(self, item_id: str) -> bool:
        return item_id in self._regions_by_id

    def has_item(self, item_id: str) -> bool:
        """True if the id names a page or a region."""
        return item_id in self._pages_by_id or item_id in self._regions_by_id


def regions_of_page(corpus: Corpus, page_id: str) -> list[Region]:
    """Regions of a page in ascending (y0, x0, id) order."""
    if not corpus.has_page(page_id):
        raise UnknownId(f"unknown page id: {page_id!r}")
    found = corpus._regions_by_page.get(page_id, [])
    return sorted(found, key=lambda r: (r.bbox[1], r.bbox[0], r.id))


def page_prefix(region_id: str) -> str:
    """The `doc/page` prefix of a `doc/page/region` id."""
    return region_id.rsplit("/", 1)[0]


# -- manifest loading ---------------------------------------------------------


def _read_jsonl(path: Path) -> Iterable[tuple[int, dict]]:
    if not path.is_file():
        raise MissingFile(f"missing corpus file: {path}")
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise ParseError(f"{path}:{lineno}: expected an object")
            yield lineno, obj


def _req_str(obj: dict, key: str, where: str) -> str:
    value = obj.get(key)
    if not isinstance(value, str):
        raise ParseError(f"{where}: field {key!r} must be a string")
    return value


def _opt_str(obj: dict, key: str, where: str) -> str | None:
    value = obj.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise ParseError(f"{where}: field {key!r} must be a string or null")
    return value


def load_corpus(manifest_path: str | Path) -> Corpus:
    """Load and cross-link a corpus from a manifest directory or file.

    Accepts either the corpus directory or the path of its ``manifest.json``.
    The result is independent of record order in the JSONL files.
    """
    mpath = Path(manifest_path)
    if mpath.is_dir():
        mpath = mpath / "manifest.json"
    if not mpath.is_file():
        raise MissingFile(f"missing manifest: {mpath}")
    try:
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{mpath}: invalid JSON: {exc.msg}") from None
    if not isinstance(manifest, dict):
        raise ParseError(f"{mpath}: manifest must be an object")
    version = manifest.get("version")
    if not isinstance(version, int):
        raise ParseError(f"{mpath}: field 'version' must be an integer")
    base = mpath.parent

    pages: list[Page] = []
    for lineno, obj in _read_jsonl(base / str(manifest.get("pages", "pages.jsonl"))):
        where = f"pages.jsonl:{lineno}"
        pages.append(
            Page(
                id=_req_str(obj, "id", where),
                doc_id=_req_str(obj, "doc_id", where),
                image_ref=_opt_str(obj, "image_ref", where),
                ocr_text=obj.get("ocr_text", "") if isinstance(obj.get("ocr_text", ""), str) else "",
                caption=obj.get("caption", "") if isinstance(obj.get("caption", ""), str) else "",
            )
        )

    regions: list[Region] = []
    for lineno, obj in _read_jsonl(base / str(manifest.get("regions", "regions.jsonl"))):
        where = f"regions.jsonl:{lineno}"
        bbox = obj.get("bbox")
        if (
            not isinstance(bbox, list)
            or len(bbox) != 4
            or not all(isinstance(v, (int, float)) for v in bbox)
        ):
            raise ParseError(f"{where}: field 'bbox' must be [x0, y0, x1, y1]")
        regions.append(
            Region(
                id=_req_str(obj, "id", where),
                page_id=_req_str(obj, "page_id", where),
                bbox=(float(bbox[0]), float(bbox[1]), float(bbox[2]), float(bbox[3])),
                image_ref=_opt_str(obj, "image_ref", where),
                ocr_text=obj.get("ocr_text", "") if isinstance(obj.get("ocr_text", ""), str) else "",
            )
        )

    queries: list[Query] = []
    for lineno, obj in _read_jsonl(base / str(manifest.get("queries", "queries.jsonl"))):
        where = f"queries.jsonl:{lineno}"
        gt = obj.get("ground_truth", [])
        if gt is None:
            gt = []
        if not isinstance(gt, list) or not all(isinstance(v, str) for v in gt):
            raise ParseError(f"{where}: field 'ground_truth' must be a list of strings")
        queries.append(
            Query(
                id=_req_str(obj, "id", where),
                text=_opt_str(obj, "text", where),
                image_ref=_opt_str(obj, "image_ref", where),
                instruction=_opt_str(obj, "instruction", where),
                ground_truth=frozenset(gt),
            )
        )

    # Structural integrity: unique ids, resolvable references.
    item_ids: set[str] = set()
    for p in pages:
        if p.id in item_ids:
            raise DuplicateId(f"duplicate item id: {p.id!r}")
        item_ids.add(p.id)
    for r in regions:
        if r.id in item_ids:
            raise DuplicateId(f"duplicate item id: {r.id!r}")
        item_ids.add(r.id)
    query_ids: set[str] = set()
    for q in queries:
        if q.id in query_ids:
            raise DuplicateId(f"duplicate query id: {q.id!r}")
        query_ids.add(q.id)

    page_ids = {p.id for p in pages}
    for r in regions:
        if r.page_id not in page_ids:
            raise DanglingReference(r.page_id)
    for q in queries:
        for gt_id in q.ground_truth:
            if gt_id not in item_ids:
                raise DanglingReference(gt_id)

    return Corpus(
        pages=tuple(sorted(pages, key=lambda p: p.id)),
        regions=tuple(sorted(regions, key=lambda r: r.id)),
        queries=tuple(sorted(queries, key=lambda q: q.id)),
        manifest_version=version,
    )


def load_queries_file(path: str | Path) -> list[Query]:
    """Load a standalone queries JSONL, preserving file order.

    Used by batch search, where run-file entries follow the input order; the
    corpus loader itself stores queries in canonical id order.
    """
    queries: list[Query] = []
    seen: set[str] = set()
    for lineno, obj in _read_jsonl(Path(path)):
        where = f"{path}:{lineno}"
        gt = obj.get("ground_truth", [])
        if gt is None:
            gt = []
        if not isinstance(gt, list) or not all(isinstance(v, str) for v in gt):
            raise ParseError(f"{where}: field 'ground_truth' must be a list of strings")
        query = Query(
            id=_req_str(obj, "id", where),
            text=_opt_str(obj, "text", where),
            image_ref=_opt_str(obj, "image_ref", where),
            instruction=_opt_str(obj, "instruction", where),
            ground_truth=frozenset(gt),
        )
        if query.id in seen:
            raise DuplicateId(f"duplicate query id: {query.id!r}")
        seen.add(query.id)
        queries.append(query)
    return queries


def write_corpus(corpus: Corpus, out_dir: str | Path) -> None:
    """Write a corpus back to manifest form; inverse of :func:`load_corpus`."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "version": corpus.manifest_version,
        "pages": "pages.jsonl",
        "regions": "regions.jsonl",
        "queries": "queries.jsonl",
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")

    with (out / "pages.jsonl").open("w", encoding="utf-8", newline="\n") as fh:
        for p in corpus.pages:
            fh.write(
                json.dumps(
                    {
                        "id": p.id,
                        "doc_id": p.doc_id,
                        "image_ref": p.image_ref,
                        "ocr_text": p.ocr_text,
                        "caption": p.caption,
                    }
                )
                + "\n"
            )
    with (out / "regions.jsonl").open("w", encoding="utf-8", newline="\n") as fh:
        for r in corpus.regions:
            row = {
                "id": r.id,
                "page_id": r.page_id,
                "bbox": list(r.bbox),
                "image_ref": r.image_ref,
            }
            if r.ocr_text:
                # the override is an extension; default-shaped corpora keep
                # the plain four-key schema
                row["ocr_text"] = r.ocr_text
            fh.write(json.dumps(row) + "\n")
    with (out / "queries.jsonl").open("w", encoding="utf-8", newline="\n") as fh:
        for q in corpus.queries:
            fh.write(
                json.dumps(
                    {
                        "id": q.id,
                        "text": q.text,
                        "image_ref": q.image_ref,
                        "instruction": q.instruction,
                        "ground_truth": sorted(q.ground_truth),
                    }
                )
                + "\n"
            )


# -- validation ---------------------------------------------------------------


def _id_issues(item_id: str, expected_segments: int | None, what: str) -> list[Issue]:
    issues = []
    if not item_id.strip():
        issues.append(Issue(BAD_ID, item_id, f"{what} id is empty or whitespace-only"))
    elif expected_segments is not None:
        segments = item_id.split("/")
        if len(segments) != expected_segments or any(not s for s in segments):
            issues.append(
                Issue(
                    BAD_ID,
                    item_id,
                    f"{what} id must have {expected_segments} non-empty '/'-delimited segments",
                )
            )
    return issues


def validate_corpus(corpus: Corpus) -> list[Issue]:
    """Check every data-model invariant; an empty report means all hold."""
    issues: list[Issue] = []

    seen_items: set[str] = set()
    for p in corpus.pages:
        issues.extend(_id_issues(p.id, 2, "page"))
        if p.id in seen_items:
            issues.append(Issue(DUPLICATE_ID, p.id, "page id already used"))
        seen_items.add(p.id)

    for r in corpus.regions:
        issues.extend(_id_issues(r.id, 3, "region"))
        if r.id in seen_items:
            issues.append(Issue(DUPLICATE_ID, r.id, "region id already used"))
        seen_items.add(r.id)

        if not corpus.has_page(r.page_id):
            issues.append(Issue(DANGLING_REFERENCE, r.id, f"page_id {r.page_id!r} does not resolve"))
        if "/" in r.id:
            prefix = page_prefix(r.id)
            if not corpus.has_page(prefix):
                issues.append(Issue(PAGE_PREFIX_MISMATCH, r.id, f"id prefix {prefix!r} names no existing page"))
            elif prefix != r.page_id:
                issues.append(
                    Issue(PAGE_PREFIX_MISMATCH, r.id, f"id prefix {prefix!r} does not match page_id {r.page_id!r}")
                )

        x0, y0, x1, y1 = r.bbox
        if not (x0 < x1 and y0 < y1) or min(r.bbox) < 0:
            issues.append(Issue(INVALID_BBOX, r.id, f"bbox {r.bbox} violates x0<x1, y0<y1, coords >= 0"))

    seen_queries: set[str] = set()
    for q in corpus.queries:
        issues.extend(_id_issues(q.id, None, "query"))
        if q.id in seen_queries:
            issues.append(Issue(DUPLICATE_ID, q.id, "query id already used"))
        seen_queries.add(q.id)

        if q.text is None and q.image_ref is None:
            issues.append(Issue(MISSING_QUERY_CONTENT, q.id, "query has neither text nor image_ref"))
        for gt_id in sorted(q.ground_truth):
            if not corpus.has_item(gt_id):
                issues.append(
                    Issue(DANGLING_REFERENCE, q.id, f"ground_truth {gt_id!r} does not resolve")
                )

    return issues
