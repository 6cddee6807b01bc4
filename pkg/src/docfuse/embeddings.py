"""Embedding records, the channel-keyed store, and the two on-disk formats.

A channel is a (granularity, modality, kind) triple naming one embedding
space; all records in a channel share one dimensionality. Vectors are float32
at rest and promoted to float64 inside scoring kernels.

Two interchangeable file formats:

* JSONL — one record object per line, human-inspectable.
* ``FDR1`` binary — magic ``FDR1``, u32 record count, then per record:
  u16 id length + UTF-8 id, u8 granularity / u8 modality / u8 kind codes,
  u32 n_rows, u32 dim, n_rows*dim little-endian float32.

``load_embeddings`` is a pure codec: a write→load round trip is bit-exact for
binary and within 1e-6 for JSONL. Retrieval normalizes at store-load time via
``normalize=True`` so cosine reduces to a dot product.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import (
    DimMismatch,
    DuplicateKey,
    IoError,
    MissingFile,
    NonFiniteValue,
    NotFound,
    ParseError,
    UnknownChannel,
    ZeroVector,
)

GRANULARITIES = ("page", "region", "ocr_text", "caption", "query")
MODALITIES = ("image", "text", "multimodal")
KINDS = ("single", "multi")

_MAGIC = b"FDR1"


class Channel(NamedTuple):
    """One embedding space: (granularity, modality, kind)."""

    granularity: str
    modality: str
    kind: str

    @classmethod
    def parse(cls, spec: str | Mapping[str, str]) -> "Channel":
        """Accepts 'granularity/modality/kind' or a mapping with those keys."""
        if isinstance(spec, str):
            parts = spec.split("/")
            if len(parts) != 3:
                raise ParseError(f"channel spec must be 'granularity/modality/kind': {spec!r}")
            ch = cls(*parts)
        else:
            try:
                ch = cls(spec["granularity"], spec["modality"], spec["kind"])
            except KeyError as exc:
                raise ParseError(f"channel object missing key: {exc}") from None
        ch.validate()
        return ch

    def validate(self) -> None:
        if self.granularity not in GRANULARITIES:
            raise ParseError(f"unknown granularity: {self.granularity!r}")
        if self.modality not in MODALITIES:
            raise ParseError(f"unknown modality: {self.modality!r}")
        if self.kind not in KINDS:
            raise ParseError(f"unknown kind: {self.kind!r}")

    def __str__(self) -> str:
        return f"{self.granularity}/{self.modality}/{self.kind}"


@dataclass(eq=False)
class EmbeddingRecord:
    """One item's vectors in one channel (1 row when kind='single')."""

    item_id: str
    granularity: str
    modality: str
    kind: str
    vectors: np.ndarray  # float32, shape (n_rows, dim)

    def __post_init__(self) -> None:
        self.vectors = np.asarray(self.vectors, dtype=np.float32)
        if self.vectors.ndim != 2:
            self.vectors = np.atleast_2d(self.vectors)

    @property
    def channel(self) -> Channel:
        return Channel(self.granularity, self.modality, self.kind)

    @property
    def n_rows(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def validate(self) -> None:
        self.channel.validate()
        if not self.item_id:
            raise ParseError("record has an empty item_id")
        if self.vectors.shape[0] < 1 or self.vectors.shape[1] < 1:
            raise ParseError(f"{self.item_id}: vectors must have n_rows >= 1 and dim >= 1")
        if self.kind == "single" and self.vectors.shape[0] != 1:
            raise ParseError(f"{self.item_id}: kind 'single' requires exactly 1 row")
        if not np.isfinite(self.vectors).all():
            raise NonFiniteValue(self.item_id)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingRecord):
            return NotImplemented
        return (
            self.item_id == other.item_id
            and self.channel == other.channel
            and self.vectors.shape == other.vectors.shape
            and bool(np.array_equal(self.vectors, other.vectors))
        )


def l2_normalize(record: EmbeddingRecord) -> EmbeddingRecord:
    """Scale every row to unit Euclidean norm; direction is preserved."""
    norms = np.linalg.norm(record.vectors.astype(np.float64), axis=1)
    for i, n in enumerate(norms):
        if n == 0.0:
            raise ZeroVector(f"{record.item_id}: row {i} has zero norm")
    scaled = (record.vectors.astype(np.float64) / norms[:, None]).astype(np.float32)
    return EmbeddingRecord(record.item_id, record.granularity, record.modality, record.kind, scaled)


class EmbeddingStore:
    """Channel-keyed, immutable-after-build embedding lookup.

    Per-channel iteration is always in ascending item-id order, so results
    never depend on insertion order.
    """

    def __init__(self) -> None:
        self._channels: dict[Channel, dict[str, EmbeddingRecord]] = {}
        self._dims: dict[Channel, int] = {}
        self._sorted_cache: dict[Channel, list[EmbeddingRecord]] = {}

    @classmethod
    def from_records(
        cls,
        records: Iterable[EmbeddingRecord],
        *,
        channels: Sequence[Channel] = (),
        normalize: bool = False,
    ) -> "EmbeddingStore":
        store = cls()
        for ch in channels:
            ch.validate()
            store._channels.setdefault(ch, {})
        for rec in records:
            rec.validate()
            if normalize:
                rec = l2_normalize(rec)
            store._add(rec)
        return store

    def _add(self, rec: EmbeddingRecord) -> None:
        ch = rec.channel
        bucket = self._channels.setdefault(ch, {})
        if rec.item_id in bucket:
            raise DuplicateKey(f"{ch}: duplicate item id {rec.item_id!r}")
        dim = self._dims.get(ch)
        if dim is None:
            self._dims[ch] = rec.dim
        elif rec.dim != dim:
            raise DimMismatch(f"{rec.item_id}: dim {rec.dim} != channel {ch} dim {dim}")
        bucket[rec.item_id] = rec
        self._sorted_cache.pop(ch, None)

    def channels(self) -> list[Channel]:
        return sorted(self._channels)

    def has_channel(self, channel: Channel) -> bool:
        return channel in self._channels

    def dim(self, channel: Channel) -> int | None:
        """Channel dimensionality, or None for a declared-but-empty channel."""
        if channel not in self._channels:
            raise UnknownChannel(str(channel))
        return self._dims.get(channel)

    def items(self, channel: Channel) -> list[EmbeddingRecord]:
        """Channel records in ascending item-id order."""
        if channel not in self._channels:
            raise UnknownChannel(str(channel))
        cached = self._sorted_cache.get(channel)
        if cached is None:
            cached = [self._channels[channel][k] for k in sorted(self._channels[channel])]
            self._sorted_cache[channel] = cached
        return cached

    def get(self, channel: Channel, item_id: str) -> EmbeddingRecord:
        bucket = self._channels.get(channel, {})
        rec = bucket.get(item_id)
        if rec is None:
            raise NotFound(f"no record for {item_id!r} in channel {channel}")
        return rec

    def records(self) -> list[EmbeddingRecord]:
        """All records, in (channel, item id) order."""
        out: list[EmbeddingRecord] = []
        for ch in self.channels():
            out.extend(self.items(ch))
        return out

    def extended(self, records: Iterable[EmbeddingRecord], *, normalize: bool = False) -> "EmbeddingStore":
        """A new store with extra records layered on; the base is untouched."""
        clone = EmbeddingStore()
        clone._channels = {ch: dict(bucket) for ch, bucket in self._channels.items()}
        clone._dims = dict(self._dims)
        for rec in records:
            rec.validate()
            if normalize:
                rec = l2_normalize(rec)
            clone._add(rec)
        return clone

    def __len__(self) -> int:
        return sum(len(b) for b in self._channels.values())


# -- codecs -------------------------------------------------------------------


def _record_to_json(rec: EmbeddingRecord) -> str:
    return json.dumps(
        {
            "item_id": rec.item_id,
            "granularity": rec.granularity,
            "modality": rec.modality,
            "kind": rec.kind,
            "vectors": [[float(v) for v in row] for row in rec.vectors],
        }
    )


def record_from_json(obj: Mapping, where: str = "record") -> EmbeddingRecord:
    """Build and validate a record from its JSON object form."""
    if not isinstance(obj, Mapping):
        raise ParseError(f"{where}: expected an object")
    for key in ("item_id", "granularity", "modality", "kind", "vectors"):
        if key not in obj:
            raise ParseError(f"{where}: missing field {key!r}")
    vectors = obj["vectors"]
    if (
        not isinstance(vectors, list)
        or not vectors
        or not all(isinstance(row, list) and row for row in vectors)
    ):
        raise ParseError(f"{where}: 'vectors' must be a non-empty list of non-empty rows")
    width = len(vectors[0])
    if any(len(row) != width for row in vectors):
        raise ParseError(f"{where}: ragged rows in 'vectors'")
    if not all(isinstance(v, (int, float)) for row in vectors for v in row):
        raise ParseError(f"{where}: 'vectors' must contain numbers only")
    rec = EmbeddingRecord(
        item_id=str(obj["item_id"]),
        granularity=str(obj["granularity"]),
        modality=str(obj["modality"]),
        kind=str(obj["kind"]),
        vectors=np.asarray(vectors, dtype=np.float32),
    )
    # NaN/Inf in JSON arrive as float('nan')/float('inf') literals via json's
    # lenient parser; surface them as NonFiniteValue, not a shape problem.
    rec.validate()
    return rec


def _read_jsonl_records(path: Path) -> Iterable[EmbeddingRecord]:
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None
            yield record_from_json(obj, where=f"{path}:{lineno}")


def _read_binary_records(path: Path) -> Iterable[EmbeddingRecord]:
    data = path.read_bytes()
    if data[:4] != _MAGIC:
        raise ParseError(f"{path}: bad magic, expected FDR1")
    offset = 4
    try:
        (count,) = struct.unpack_from("<I", data, offset)
        offset += 4
        for _ in range(count):
            (id_len,) = struct.unpack_from("<H", data, offset)
            offset += 2
            item_id = data[offset : offset + id_len].decode("utf-8")
            offset += id_len
            g_code, m_code, k_code = struct.unpack_from("<BBB", data, offset)
            offset += 3
            n_rows, dim = struct.unpack_from("<II", data, offset)
            offset += 8
            if g_code >= len(GRANULARITIES) or m_code >= len(MODALITIES) or k_code >= len(KINDS):
                raise ParseError(f"{path}: {item_id}: unknown enum code")
            n_values = n_rows * dim
            vectors = np.frombuffer(data, dtype="<f4", count=n_values, offset=offset).reshape(
                n_rows, dim
            )
            offset += 4 * n_values
            rec = EmbeddingRecord(
                item_id=item_id,
                granularity=GRANULARITIES[g_code],
                modality=MODALITIES[m_code],
                kind=KINDS[k_code],
                vectors=vectors.copy(),
            )
            rec.validate()
            yield rec
    except (struct.error, UnicodeDecodeError, ValueError) as exc:
        raise ParseError(f"{path}: truncated or corrupt record: {exc}") from None


def load_embeddings(path: str | Path, *, normalize: bool = False) -> EmbeddingStore:
    """Load a store from a JSONL or FDR1 file (format sniffed by magic bytes).

    With ``normalize=True`` every row is L2-normalized on the way in, which is
    what the retrieval pipelines use so cosine equals dot product.
    """
    p = Path(path)
    if not p.is_file():
        raise MissingFile(f"missing embeddings file: {p}")
    with p.open("rb") as fh:
        head = fh.read(4)
    reader = _read_binary_records if head == _MAGIC else _read_jsonl_records
    return EmbeddingStore.from_records(reader(p), normalize=normalize)


def write_embeddings(
    records: Sequence[EmbeddingRecord], path: str | Path, format: str = "jsonl"
) -> None:
    """Write records to disk; the inverse of :func:`load_embeddings`."""
    if format not in ("jsonl", "binary"):
        raise ValueError(f"format must be 'jsonl' or 'binary', got {format!r}")
    seen: set[tuple[Channel, str]] = set()
    for rec in records:
        rec.validate()
        key = (rec.channel, rec.item_id)
        if key in seen:
            raise DuplicateKey(f"{rec.channel}: duplicate item id {rec.item_id!r}")
        seen.add(key)
    p = Path(path)
    try:
        if format == "jsonl":
            with p.open("w", encoding="utf-8", newline="\n") as fh:
                for rec in records:
                    fh.write(_record_to_json(rec) + "\n")
        else:
            with p.open("wb") as fh:
                fh.write(_MAGIC)
                fh.write(struct.pack("<I", len(records)))
                for rec in records:
                    raw_id = rec.item_id.encode("utf-8")
                    if len(raw_id) > 0xFFFF:
                        raise ValueError(f"item id too long for binary format: {rec.item_id!r}")
                    fh.write(struct.pack("<H", len(raw_id)))
                    fh.write(raw_id)
                    fh.write(
                        struct.pack(
                            "<BBB",
                            GRANULARITIES.index(rec.granularity),
                            MODALITIES.index(rec.modality),
                            KINDS.index(rec.kind),
                        )
                    )
                    fh.write(struct.pack("<II", rec.n_rows, rec.dim))
                    fh.write(np.ascontiguousarray(rec.vectors, dtype="<f4").tobytes())
    except OSError as exc:
        raise IoError(f"cannot write {p}: {exc}") from None


def merge_embedding_files(paths: Sequence[str | Path], *, normalize: bool = False) -> EmbeddingStore:
    """Load several embedding files into one store; cross-file duplicates fail."""
    merged: list[EmbeddingRecord] = []
    for path in paths:
        merged.extend(load_embeddings(path).records())
    return EmbeddingStore.from_records(merged, normalize=normalize)
