"""qefuse: combine spans from translation candidate pools under a QE scorer."""

from .bench import (
    BenchRecord,
    CountingUtility,
    complementary_pools,
    fit_scaling,
    polyfit_r_squared,
    run_bench,
    synthetic_pools,
    write_csv,
)
from .diff import DivergentSpanGroup, Opcode, find_divergent_spans, matching_blocks, opcodes
from .fusion import (
    KEEP_BASE,
    ChoiceVector,
    CorpusScoringError,
    FusionConfig,
    FusionResult,
    FusionStats,
    fuse,
    fuse_corpus,
    materialize,
    select_base,
)
from .metrics import (
    BleuConfig,
    chrf,
    evaluate_corpus,
    is_defect,
    novelty_rate,
    semantic_diversity,
    sentence_bleu,
    unique_candidates,
    unique_ngrams,
)
from .rerank import bleu_utility, chrf_utility, mbr, qe_rerank
from .scoring import (
    CachedScorer,
    CountingScorer,
    HttpScorer,
    LexicalScorer,
    OracleScorer,
    ProtocolError,
    ReferenceLookupScorer,
    ScoreCache,
    ScoreRequest,
    Scorer,
    ScoringError,
    TransportError,
    cached_score_batch,
    http_score_batch,
    lexical_qe_score,
    oracle_scorer,
)
from .server import MockScorerServer, create_server
from .text import CandidatePool, TokenSeq, detokenize, tokenize

__version__ = "0.1.0"
