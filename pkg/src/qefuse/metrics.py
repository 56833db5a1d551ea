"""Surface metrics, the defect rule, and pool diversity measures."""

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

from .text import CandidatePool, detokenize, tokenize

# Sentence-level BLEU below this value marks a hypothesis as a defect
# (hallucination or severely truncated output).
DEFECT_BLEU_THRESHOLD = 3.0

Utility = Callable[[str, str], float]


@dataclass
class BleuConfig:
    max_n: int = 4
    smoothing: str = "exp"
    tokenizer_mode: str = "word"

    def __post_init__(self) -> None:
        if self.max_n < 1:
            raise ValueError("max_n must be >= 1")
        if self.smoothing != "exp":
            raise ValueError(f"unsupported smoothing: {self.smoothing!r}")


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def sentence_bleu(hyp: str, ref: str, cfg: BleuConfig = BleuConfig()) -> float:
    """Smoothed sentence-level BLEU on a 0-100 scale.

    Geometric mean of clipped n-gram precisions up to max_n, using only the
    orders for which the hypothesis has n-grams (effective order). A zero
    match count at n >= 2 is smoothed by successive halving (1 / (2^k *
    total)); zero unigram matches score 0 outright. Brevity penalty is
    exp(1 - |ref|/|hyp|) when the hypothesis is shorter than the reference.
    """
    hyp_tokens = tokenize(hyp, cfg.tokenizer_mode)
    ref_tokens = tokenize(ref, cfg.tokenizer_mode)
    if not hyp_tokens:
        return 0.0
    log_sum = 0.0
    orders = 0
    smooth = 1.0
    for n in range(1, cfg.max_n + 1):
        total = len(hyp_tokens) - n + 1
        if total <= 0:
            break
        ref_counts = _ngram_counts(ref_tokens, n)
        correct = sum(
            min(count, ref_counts[gram])
            for gram, count in _ngram_counts(hyp_tokens, n).items()
        )
        if correct == 0:
            if n == 1:
                return 0.0
            smooth *= 2.0
            precision = 1.0 / (smooth * total)
        else:
            precision = correct / total
        log_sum += math.log(precision)
        orders += 1
    if len(hyp_tokens) < len(ref_tokens):
        brevity = math.exp(1.0 - len(ref_tokens) / len(hyp_tokens))
    else:
        brevity = 1.0
    return 100.0 * brevity * math.exp(log_sum / orders)


def chrf(hyp: str, ref: str, char_n: int = 6, beta: float = 2.0) -> float:
    """Character n-gram F-beta score on a 0-100 scale.

    Whitespace is removed before n-gram extraction. Precision and recall are
    averaged over the orders where both sides have n-grams, then combined
    with beta weighting recall; identical strings score exactly 100.
    """
    hyp_chars = re.sub(r"\s+", "", hyp)
    ref_chars = re.sub(r"\s+", "", ref)
    precision_sum = 0.0
    recall_sum = 0.0
    orders = 0
    for n in range(1, char_n + 1):
        hyp_grams = Counter(hyp_chars[i : i + n] for i in range(len(hyp_chars) - n + 1))
        ref_grams = Counter(ref_chars[i : i + n] for i in range(len(ref_chars) - n + 1))
        if not hyp_grams or not ref_grams:
            continue
        common = sum(min(count, ref_grams[gram]) for gram, count in hyp_grams.items())
        precision_sum += common / sum(hyp_grams.values())
        recall_sum += common / sum(ref_grams.values())
        orders += 1
    if orders == 0:
        return 0.0
    precision = precision_sum / orders
    recall = recall_sum / orders
    if precision + recall == 0.0:
        return 0.0
    beta_sq = beta * beta
    return 100.0 * (1 + beta_sq) * precision * recall / (beta_sq * precision + recall)


def is_defect(hyp: str, ref: str | None, cfg: BleuConfig = BleuConfig()) -> bool:
    """True iff the hypothesis scores below the defect BLEU threshold."""
    if ref is None:
        raise ValueError("defect detection requires a reference")
    return sentence_bleu(hyp, ref, cfg) < DEFECT_BLEU_THRESHOLD


def unique_ngrams(pool: CandidatePool, n: int = 4) -> int:
    """Number of distinct token n-grams across all candidates in the pool."""
    if n < 1:
        raise ValueError("n must be >= 1")
    grams: set[tuple[str, ...]] = set()
    for candidate in pool.candidates:
        tokens = tokenize(candidate)
        grams.update(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
    return len(grams)


def unique_candidates(pool: CandidatePool) -> int:
    """Number of distinct candidate strings in the pool."""
    return len(set(pool.candidates))


def semantic_diversity(pool: CandidatePool, utility: Utility) -> float:
    """1 minus the mean pairwise utility over ordered candidate pairs.

    The utility should be normalized to [0, 1] with u(y, y) = 1, so a pool
    of identical candidates scores exactly 0.
    """
    n = pool.size
    if n < 2:
        raise ValueError("semantic diversity requires at least 2 candidates")
    total = 0.0
    for i, y_i in enumerate(pool.candidates):
        for j, y_j in enumerate(pool.candidates):
            if i != j:
                total += utility(y_j, y_i)
    return 1.0 - total / (n * (n - 1))


def novelty_rate(fused: Sequence[str], pools: Sequence[CandidatePool]) -> float:
    """Percentage of fused outputs that match no candidate in their own pool.

    Strings are compared after single-space normalization.
    """
    if len(fused) != len(pools):
        raise ValueError("fused outputs and pools must align by sentence")
    if not fused:
        raise ValueError("no sentences to evaluate")
    novel = 0
    for output, pool in zip(fused, pools):
        normalized = detokenize(tokenize(output))
        pool_set = {detokenize(tokenize(c)) for c in pool.candidates}
        if normalized not in pool_set:
            novel += 1
    return 100.0 * novel / len(fused)


def evaluate_corpus(
    outputs: Sequence[str],
    pools: Sequence[CandidatePool],
    utility: Utility,
    cfg: BleuConfig = BleuConfig(),
) -> dict:
    """Per-sentence surface scores plus corpus aggregates.

    Every pool must carry a reference. Semantic diversity is averaged over
    the sentences with at least 2 candidates (null when there are none).
    """
    if len(outputs) != len(pools):
        raise ValueError("outputs and pools must align by sentence")
    if not outputs:
        raise ValueError("no sentences to evaluate")
    sentences = []
    diversities = []
    for output, pool in zip(outputs, pools):
        if pool.reference is None:
            raise ValueError(f"sentence {pool.id!r} has no reference")
        bleu = sentence_bleu(output, pool.reference, cfg)
        sentences.append(
            {
                "id": pool.id,
                "bleu": bleu,
                "chrf": chrf(output, pool.reference),
                "defect": bleu < DEFECT_BLEU_THRESHOLD,
            }
        )
        if pool.size >= 2:
            diversities.append(semantic_diversity(pool, utility))
    count = len(sentences)
    aggregates = {
        "defect_rate": 100.0 * sum(s["defect"] for s in sentences) / count,
        "mean_bleu": sum(s["bleu"] for s in sentences) / count,
        "mean_chrf": sum(s["chrf"] for s in sentences) / count,
        "mean_unique_4grams": sum(unique_ngrams(p) for p in pools) / count,
        "mean_unique_candidates": sum(unique_candidates(p) for p in pools) / count,
        "mean_semantic_diversity": (
            sum(diversities) / len(diversities) if diversities else None
        ),
        "novelty_rate": novelty_rate(outputs, pools),
    }
    return {"sentences": sentences, "aggregates": aggregates}
