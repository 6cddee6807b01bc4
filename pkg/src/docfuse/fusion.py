"""Two-layer score fusion.

Layer 1 reduces each source group to one list by normalized weighted sum;
layer 2 merges the group lists by Reciprocal Rank Fusion. RRF consumes ranks
only, so layer-2 output is invariant under any strictly increasing transform
of layer-1 scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import ConfigError, MissingWeight
from .similarity import ScoredList

DEFAULT_RRF_K = 60.0


@dataclass(frozen=True)
class FusionConfig:
    """Free parameters of the fusion stage.

    An empty ``weights`` map means "unspecified": every list in a weighted sum
    gets weight 1/n. A non-empty map must cover every source_label it meets,
    otherwise the sum raises MissingWeight.
    """

    weights: dict[str, float] = field(default_factory=dict)
    rrf_k: float = DEFAULT_RRF_K
    missing_score_policy: str = "floor_zero"
    normalization: str = "min_max"

    def __post_init__(self) -> None:
        if self.rrf_k <= 0:
            raise ConfigError(f"rrf_k must be positive, got {self.rrf_k}")
        if self.missing_score_policy != "floor_zero":
            raise ConfigError(f"unknown missing_score_policy: {self.missing_score_policy!r}")
        if self.normalization not in ("min_max", "none"):
            raise ConfigError(f"unknown normalization: {self.normalization!r}")
        for label, w in self.weights.items():
            if w < 0:
                raise ConfigError(f"weight for {label!r} must be non-negative, got {w}")
        if self.weights and not any(w > 0 for w in self.weights.values()):
            raise ConfigError("at least one weight must be positive")

    @classmethod
    def from_json(cls, obj: Mapping) -> "FusionConfig":
        return cls(
            weights={str(k): float(v) for k, v in (obj.get("weights") or {}).items()},
            rrf_k=float(obj.get("rrf_k", DEFAULT_RRF_K)),
            missing_score_policy=str(obj.get("missing_score_policy", "floor_zero")),
            normalization=str(obj.get("normalization", "min_max")),
        )

    def to_json(self) -> dict:
        return {
            "weights": dict(self.weights),
            "rrf_k": self.rrf_k,
            "missing_score_policy": self.missing_score_policy,
            "normalization": self.normalization,
        }


def min_max_normalize(scored: ScoredList) -> ScoredList:
    """Affine-map scores onto [0, 1]; an all-equal list maps to 0.5 throughout."""
    if not scored.entries:
        return scored
    values = [s for _, s in scored.entries]
    lo, hi = min(values), max(values)
    if hi == lo:
        entries = tuple((i, 0.5) for i, _ in scored.entries)
    else:
        span = hi - lo
        entries = tuple((i, (s - lo) / span) for i, s in scored.entries)
    return ScoredList(entries=entries, source_label=scored.source_label)


def weighted_sum_fuse(
    lists: Sequence[ScoredList], config: FusionConfig, source_label: str = "fused"
) -> ScoredList:
    """Per-list normalization, then a weighted per-item sum (absent -> 0)."""
    if not lists:
        return ScoredList(entries=(), source_label=source_label)
    if config.weights:
        for lst in lists:
            if lst.source_label not in config.weights:
                raise MissingWeight(lst.source_label)
        weights = [config.weights[lst.source_label] for lst in lists]
    else:
        weights = [1.0 / len(lists)] * len(lists)

    totals: dict[str, float] = {}
    for lst, weight in zip(lists, weights):
        normalized = min_max_normalize(lst) if config.normalization == "min_max" else lst
        for item_id, score in normalized.entries:
            totals[item_id] = totals.get(item_id, 0.0) + weight * score
    return ScoredList.ranked(totals.items(), source_label=source_label)


def rrf_fuse(lists: Sequence[ScoredList], rrf_k: float = DEFAULT_RRF_K, source_label: str = "rrf") -> ScoredList:
    """Reciprocal Rank Fusion: score(item) = sum over lists of 1/(k + rank)."""
    if rrf_k <= 0:
        raise ConfigError(f"rrf_k must be positive, got {rrf_k}")
    totals: dict[str, float] = {}
    for lst in lists:
        for rank, (item_id, _) in enumerate(lst.entries, start=1):
            totals[item_id] = totals.get(item_id, 0.0) + 1.0 / (rrf_k + rank)
    return ScoredList.ranked(totals.items(), source_label=source_label)


def fuse_paths(
    layer1_groups: Mapping[str, Sequence[ScoredList]],
    config: FusionConfig,
    source_label: str = "fused",
) -> ScoredList:
    """Reduce each group by weighted sum, then RRF-merge the group results.

    With a single group there is nothing to merge: the reduced list passes
    through with its layer-1 scores intact (RRF would only rescale ranks).
    """
    reduced: list[ScoredList] = []
    for group in layer1_groups:
        group_lists = list(layer1_groups[group])
        if not group_lists:
            continue
        reduced.append(weighted_sum_fuse(group_lists, config, source_label=group))
    if not reduced:
        raise ConfigError("fuse_paths: no nonempty group")
    if len(reduced) == 1:
        return reduced[0].relabel(source_label)
    return rrf_fuse(reduced, config.rrf_k, source_label=source_label)
