"""Training-free multimodal document retrieval.

Multi-path similarity retrieval over page / region / OCR / caption embedding
channels, two-layer score fusion (normalized weighted sums merged by
Reciprocal Rank Fusion), verifier-based candidate reordering, and a
recall@{1,3,5} evaluation harness.
"""

from .corpus import (
    Corpus,
    Issue,
    Page,
    Query,
    Region,
    load_corpus,
    load_queries_file,
    regions_of_page,
    validate_corpus,
    write_corpus,
)
from .embeddings import (
    Channel,
    EmbeddingRecord,
    EmbeddingStore,
    l2_normalize,
    load_embeddings,
    merge_embedding_files,
    write_embeddings,
)
from .evaluation import (
    AblationTable,
    EvalReport,
    ablation_run,
    combined_score,
    evaluate,
    recall_at_k,
    write_report,
)
from .fusion import FusionConfig, fuse_paths, min_max_normalize, rrf_fuse, weighted_sum_fuse
from .pipelines import (
    PathSpec,
    PipelineConfig,
    RunEntry,
    default_m2kr_config,
    default_mmdocir_config,
    load_run_file,
    region_to_page_project,
    run_batch,
    run_query,
    write_run_file,
)
from .similarity import ScoredList, cosine, maxsim, score_channel, top_k
from .verification import (
    HttpVerifier,
    MockVerifier,
    Verdict,
    VerificationConfig,
    build_prompt,
    make_verifier,
    parse_verdict,
    reorder_with_verdicts,
    verify_candidates,
)

__version__ = "0.1.0"

__all__ = [
    "AblationTable",
    "Channel",
    "Corpus",
    "EmbeddingRecord",
    "EmbeddingStore",
    "EvalReport",
    "FusionConfig",
    "HttpVerifier",
    "Issue",
    "MockVerifier",
    "Page",
    "PathSpec",
    "PipelineConfig",
    "Query",
    "Region",
    "RunEntry",
    "ScoredList",
    "Verdict",
    "VerificationConfig",
    "ablation_run",
    "build_prompt",
    "combined_score",
    "cosine",
    "default_m2kr_config",
    "default_mmdocir_config",
    "evaluate",
    "fuse_paths",
    "l2_normalize",
    "load_corpus",
    "load_embeddings",
    "load_queries_file",
    "load_run_file",
    "make_verifier",
    "maxsim",
    "merge_embedding_files",
    "min_max_normalize",
    "parse_verdict",
    "recall_at_k",
    "region_to_page_project",
    "regions_of_page",
    "reorder_with_verdicts",
    "rrf_fuse",
    "run_batch",
    "run_query",
    "score_channel",
    "top_k",
    "validate_corpus",
    "verify_candidates",
    "weighted_sum_fuse",
    "write_report",
    "write_corpus",
    "write_embeddings",
    "write_run_file",
]
