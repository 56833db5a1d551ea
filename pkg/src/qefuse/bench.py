"""Scaling benchmark: wall-clock timing plus exact call accounting per method.

Assertions about scaling always use call counts, never seconds: wall-clock
numbers depend on the scorer backend and are reported only.
"""

import csv
import random
import time
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, TextIO

import numpy as np

from .fusion import FusionConfig, fuse_corpus
from .rerank import Utility, mbr, qe_rerank
from .scoring import CountingScorer, Scorer
from .text import CandidatePool, detokenize

METHODS = ("qe_rerank", "mbr", "fuse")

CSV_HEADER = ["method", "N", "wall_time_s", "scored_items", "utility_calls"]

_VOCAB = (
    "the a an old new red blue small large quick slow bright dark heavy light "
    "fire water plant river city road house train garden market bridge tower "
    "cat dog horse bird fish worker driver farmer doctor teacher runs walks "
    "sits jumps sleeps carries finds holds opens closes near under over "
    "between behind before after with without against around through"
).split()


@dataclass
class BenchRecord:
    method: str
    pool_size: int
    wall_time_s: float
    scored_items: int
    utility_calls: int


class CountingUtility:
    """Pass-through utility wrapper counting evaluations exactly."""

    def __init__(self, inner: Utility):
        self.inner = inner
        self.calls = 0

    def __call__(self, hypothesis: str, pseudo_reference: str) -> float:
        self.calls += 1
        return self.inner(hypothesis, pseudo_reference)


def synthetic_pools(
    n_sentences: int, pool_size: int, seed: int = 0
) -> list[CandidatePool]:
    """Deterministic corpus where every candidate corrupts one clean sentence.

    Candidate i replaces the clean token at position i mod L with a junk
    token unique to (sentence, i); every fourth candidate corrupts a second
    position. Each added candidate therefore introduces O(1) new divergent
    span groups, and pools at a smaller size are exact prefixes of pools
    generated at a larger size with the same seed. The clean sentence is
    both the source and the reference.
    """
    pools = []
    for s in range(n_sentences):
        rng = random.Random(f"{seed}:{s}")
        length = rng.randint(8, 12)
        clean = rng.sample(_VOCAB, length)
        candidates = []
        for i in range(pool_size):
            tokens = list(clean)
            tokens[i % length] = f"q{s}x{i}"
            if i % 4 == 2:
                tokens[(i + length // 2) % length] = f"w{s}x{i}"
            candidates.append(detokenize(tokens))
        sentence = detokenize(clean)
        pools.append(
            CandidatePool(
                id=f"s{s}", source=sentence, candidates=tuple(candidates),
                reference=sentence,
            )
        )
    return pools


def complementary_pools(n_sentences: int, seed: int = 0) -> list[CandidatePool]:
    """Pools of 5 where two candidates hold disjoint correct spans.

    The two best candidates each corrupt a different single position of the
    clean sentence, so only their fusion recovers the reference exactly; the
    remaining three candidates are strictly worse. No candidate equals the
    reference. The two complementary positions are kept non-adjacent so each
    correct token sits in its own divergent span group (adjacent corruptions
    would collapse into one two-token replacement and could only be swapped
    together).
    """
    pools = []
    for s in range(n_sentences):
        rng = random.Random(f"comp:{seed}:{s}")
        length = rng.randint(8, 12)
        clean = rng.sample(_VOCAB, length)
        while True:
            pos_a, pos_b, pos_c = rng.sample(range(length), 3)
            if abs(pos_a - pos_b) >= 2:
                break

        def corrupt(tag: str, positions: Sequence[int]) -> str:
            tokens = list(clean)
            for p in positions:
                tokens[p] = f"{tag}{s}p{p}"
            return detokenize(tokens)

        candidates = (
            corrupt("j", [pos_a]),
            corrupt("j", [pos_b]),
            corrupt("j", [pos_a, pos_b]),
            corrupt("k", [pos_a, pos_c]),
            corrupt("j", [pos_a, pos_b, pos_c]),
        )
        sentence = detokenize(clean)
        pools.append(
            CandidatePool(
                id=f"c{s}", source=sentence, candidates=candidates,
                reference=sentence,
            )
        )
    return pools


def run_bench(
    pools_by_size: Mapping[int, Sequence[CandidatePool]],
    methods: Sequence[str],
    scorer: Scorer,
    utility: Utility | None = None,
    config: FusionConfig | None = None,
) -> list[BenchRecord]:
    """Run each method over each corpus with instrumented scorer and utility."""
    records = []
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown method: {method!r}")
        if method == "mbr" and utility is None:
            raise ValueError("mbr requires a utility")
        for size in sorted(pools_by_size):
            pools = list(pools_by_size[size])
            counted_scorer = CountingScorer(scorer)
            counted_utility = CountingUtility(utility) if utility else None
            start = time.perf_counter()
            if method == "qe_rerank":
                for pool in pools:
                    qe_rerank(pool, counted_scorer)
            elif method == "mbr":
                for pool in pools:
                    mbr(pool, counted_utility)
            else:
                fuse_corpus(pools, counted_scorer, config)
            wall = time.perf_counter() - start
            records.append(
                BenchRecord(
                    method=method,
                    pool_size=size,
                    wall_time_s=wall,
                    scored_items=counted_scorer.items,
                    utility_calls=counted_utility.calls if counted_utility else 0,
                )
            )
    return records


def polyfit_r_squared(xs: Sequence[float], ys: Sequence[float], degree: int) -> float:
    """Coefficient of determination of a least-squares polynomial fit."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    coeffs = np.polyfit(x, y, degree)
    residuals = y - np.polyval(coeffs, x)
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res < 1e-12 else 0.0
    return 1.0 - ss_res / ss_tot


def fit_scaling(
    records: Sequence[BenchRecord], field: str = "scored_items"
) -> dict[str, float]:
    """Ordinary least squares of a call-count field against pool size N."""
    xs = [r.pool_size for r in records]
    ys = [float(getattr(r, field)) for r in records]
    if len(set(xs)) < 3:
        raise ValueError("scaling fit requires at least 3 distinct pool sizes")
    slope, intercept = np.polyfit(np.asarray(xs, float), np.asarray(ys, float), 1)
    return {
        "slope": float(slope),
        "intercept": float(intercept),
        "r_squared": polyfit_r_squared(xs, ys, 1),
    }


def write_csv(records: Sequence[BenchRecord], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow(
            [r.method, r.pool_size, f"{r.wall_time_s:.6f}", r.scored_items, r.utility_calls]
        )
