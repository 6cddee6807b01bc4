"""Yes/No candidate verification against an external vision-language verifier.

The engine never runs model inference; it talks to a verifier over a small
HTTP contract (``POST /verify`` -> ``{"answer": str}``) or to an in-process
mock backed by a JSONL lookup table. Verdicts stratify the fused ranking:
confirmed candidates rise, denied ones sink, everything else keeps its place.
"""

from __future__ import annotations

import json
import re
import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import requests

from .corpus import Corpus, Query
from .errors import BadTemplate, ConfigError, MissingFile, ParseError, UnknownItem, VerifierError
from .similarity import ScoredList

DEFAULT_PROMPT_TEMPLATE = (
    "Question: {query}\n"
    "Candidate content: {context}\n"
    "Does this candidate contain the information needed to answer the question? "
    "Answer Yes or No."
)

YES = "yes"
NO = "no"
UNKNOWN = "unknown"

_STRIP_CHARS = string.whitespace + string.punctuation
_LEAD_TOKEN = re.compile(r"[a-z]+")


@dataclass(frozen=True)
class Verdict:
    query_id: str
    item_id: str
    decision: str  # yes | no | unknown
    raw: str


@dataclass(frozen=True)
class VerificationConfig:
    budget: int = 10
    prompt_template: str = DEFAULT_PROMPT_TEMPLATE
    max_inflight: int = 4
    timeout_ms: int = 30_000
    on_error: str = "treat_unknown"

    def __post_init__(self) -> None:
        if self.budget < 1:
            raise ConfigError(f"budget must be positive, got {self.budget}")
        if self.max_inflight < 1:
            raise ConfigError(f"max_inflight must be positive, got {self.max_inflight}")
        if self.timeout_ms < 1:
            raise ConfigError(f"timeout_ms must be positive, got {self.timeout_ms}")
        if self.on_error != "treat_unknown":
            raise ConfigError(f"unknown on_error policy: {self.on_error!r}")
        if "{query}" not in self.prompt_template or "{context}" not in self.prompt_template:
            raise BadTemplate("prompt_template must contain {query} and {context}")

    @classmethod
    def from_json(cls, obj: Mapping) -> "VerificationConfig":
        return cls(
            budget=int(obj.get("budget", 10)),
            prompt_template=str(obj.get("prompt_template", DEFAULT_PROMPT_TEMPLATE)),
            max_inflight=int(obj.get("max_inflight", 4)),
            timeout_ms=int(obj.get("timeout_ms", 30_000)),
            on_error=str(obj.get("on_error", "treat_unknown")),
        )

    def to_json(self) -> dict:
        return {
            "budget": self.budget,
            "prompt_template": self.prompt_template,
            "max_inflight": self.max_inflight,
            "timeout_ms": self.timeout_ms,
            "on_error": self.on_error,
        }


def build_prompt(template: str, query: Query, context: str) -> str:
    """Substitute {query} and {context} verbatim; nothing else is touched."""
    if "{query}" not in template or "{context}" not in template:
        raise BadTemplate("template must contain {query} and {context}")
    return template.replace("{query}", query.text or "").replace("{context}", context)


def parse_verdict(raw: str) -> str:
    """Map raw model text to yes/no/unknown by its leading token."""
    normalized = raw.strip(_STRIP_CHARS).lower()
    match = _LEAD_TOKEN.match(normalized)
    if match is None:
        return UNKNOWN
    token = match.group(0)
    if token == YES:
        return YES
    if token == NO:
        return NO
    return UNKNOWN


class VerifierClient(Protocol):
    """Answers one verification request; raises VerifierError on transport failure."""

    def verify(self, request: dict, timeout_ms: int) -> str: ...


class MockVerifier:
    """Deterministic lookup-table verifier for tests and offline runs.

    The table maps (query_id, item_id) to a raw answer string. Pairs absent
    from the table answer with an empty string, which parses to unknown.
    """

    def __init__(self, table: Mapping[tuple[str, str], str]):
        self._table = dict(table)

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "MockVerifier":
        p = Path(path)
        if not p.is_file():
            raise MissingFile(f"missing verifier fixture: {p}")
        table: dict[tuple[str, str], str] = {}
        with p.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"{p}:{lineno}: invalid JSON: {exc.msg}") from None
                try:
                    table[(str(obj["query_id"]), str(obj["item_id"]))] = str(obj["answer"])
                except (KeyError, TypeError):
                    raise ParseError(f"{p}:{lineno}: expected query_id/item_id/answer") from None
        return cls(table)

    def verify(self, request: dict, timeout_ms: int) -> str:
        return self._table.get((request.get("query_id", ""), request["candidate_id"]), "")


class HttpVerifier:
    """POST /verify client; any non-200, timeout, or connection error raises."""

    def __init__(self, base_url: str):
        self._url = base_url.rstrip("/") + "/verify"

    def verify(self, request: dict, timeout_ms: int) -> str:
        wire = {k: v for k, v in request.items() if k != "query_id"}
        try:
            resp = requests.post(self._url, json=wire, timeout=timeout_ms / 1000.0)
        except requests.RequestException as exc:
            raise VerifierError(f"verifier request failed: {exc}") from None
        if resp.status_code != 200:
            raise VerifierError(f"verifier returned HTTP {resp.status_code}")
        try:
            answer = resp.json()["answer"]
        except (ValueError, KeyError):
            raise VerifierError("verifier response missing 'answer'") from None
        return str(answer)


def make_verifier(spec: str) -> VerifierClient:
    """'mock:<fixture.jsonl>' -> MockVerifier; anything else is an HTTP base URL."""
    if spec.startswith("mock:"):
        return MockVerifier.from_jsonl(spec[len("mock:"):])
    return HttpVerifier(spec)


def candidate_context(corpus: Corpus, item_id: str) -> tuple[str, str, str | None]:
    """(ocr_text, caption, image_ref) for a page or region candidate.

    Regions inherit their page's text and caption unless the region carries
    its own ocr_text override.
    """
    if corpus.has_page(item_id):
        page = corpus.page(item_id)
        return page.ocr_text, page.caption, page.image_ref
    if corpus.has_region(item_id):
        region = corpus.region(item_id)
        page = corpus.page(region.page_id)
        ocr_text = region.ocr_text or page.ocr_text
        return ocr_text, page.caption, region.image_ref or page.image_ref
    raise UnknownItem(f"candidate {item_id!r} is neither a page nor a region")


def verify_candidates(
    query: Query,
    fused: ScoredList,
    client: VerifierClient,
    config: VerificationConfig,
    corpus: Corpus,
) -> list[Verdict]:
    """Verify the top-budget fused candidates, preserving fused order.

    Requests run on up to ``max_inflight`` worker threads; results are
    aggregated by candidate position, so the output never depends on response
    arrival order. Transport failures become unknown verdicts.
    """
    candidates = fused.entries[: config.budget]
    if not candidates:
        return []

    def one(entry: tuple[str, float]) -> Verdict:
        item_id, _ = entry
        ocr_text, caption, image_ref = candidate_context(corpus, item_id)
        context = "\n".join(part for part in (ocr_text, caption) if part)
        prompt = build_prompt(config.prompt_template, query, context)
        request = {
            "query_id": query.id,
            "query_text": query.text or "",
            "prompt": prompt,
            "candidate_id": item_id,
            "ocr_text": ocr_text or None,
            "caption": caption or None,
            "image_ref": image_ref,
        }
        try:
            raw = client.verify(request, config.timeout_ms)
        except VerifierError:
            return Verdict(query.id, item_id, UNKNOWN, "")
        return Verdict(query.id, item_id, parse_verdict(raw), raw)

    if config.max_inflight == 1 or len(candidates) == 1:
        return [one(entry) for entry in candidates]
    with ThreadPoolExecutor(max_workers=config.max_inflight) as pool:
        return list(pool.map(one, candidates))


_STRATUM = {YES: 0, UNKNOWN: 1, NO: 2}


def reorder_with_verdicts(fused: ScoredList, verdicts: Sequence[Verdict]) -> ScoredList:
    """Stable three-way stratification: yes, then unknown/unverified, then no.

    The output is a permutation of the input with scores untouched; within a
    stratum the fused relative order is preserved. Tagged source_label="final".
    """
    present = {item_id for item_id, _ in fused.entries}
    decision_by_item: dict[str, str] = {}
    for v in verdicts:
        if v.item_id not in present:
            raise UnknownItem(f"verdict for {v.item_id!r} which is not in the fused list")
        decision_by_item[v.item_id] = v.decision

    strata: tuple[list, list, list] = ([], [], [])
    for entry in fused.entries:
        decision = decision_by_item.get(entry[0], UNKNOWN)
        strata[_STRATUM[decision]].append(entry)
    return ScoredList(entries=tuple(strata[0] + strata[1] + strata[2]), source_label="final")
