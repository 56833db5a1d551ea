"""Shared generators and independent oracles used across the test suite."""

import itertools
import random

from qefuse import (
    CandidatePool,
    ScoreRequest,
    detokenize,
    find_divergent_spans,
    materialize,
    tokenize,
)

WORDS = (
    "sun moon star cloud rain wind snow storm river lake stone tree leaf "
    "bird fish wolf bear fox deer road town gate wall door roof floor "
    "light dark cold warm fast slow high low red blue green"
).split()

ALPHABET = ("a", "b", "c", "d", "e")


def random_tokens(rng: random.Random, max_len: int = 12) -> tuple[str, ...]:
    """Random token sequence over a small alphabet (repeats stress tie-breaks)."""
    return tuple(rng.choice(ALPHABET) for _ in range(rng.randint(0, max_len)))


def random_pool(
    rng: random.Random, sid: str, n_min: int = 2, n_max: int = 6
) -> CandidatePool:
    """Pool of randomly edited variants of one base sentence."""
    length = rng.randint(4, 10)
    base = [rng.choice(WORDS) for _ in range(length)]
    candidates = []
    for _ in range(rng.randint(n_min, n_max)):
        tokens = list(base)
        for _ in range(rng.randint(0, 3)):
            op = rng.choice(("sub", "del", "ins"))
            if op == "sub" and tokens:
                tokens[rng.randrange(len(tokens))] = rng.choice(WORDS)
            elif op == "del" and tokens:
                del tokens[rng.randrange(len(tokens))]
            elif op == "ins":
                tokens.insert(rng.randint(0, len(tokens)), rng.choice(WORDS))
        candidates.append(detokenize(tokens))
    source = detokenize(base)
    return CandidatePool(sid, source, tuple(candidates), reference=source)


def planted_pool(rng: random.Random, sid: str) -> CandidatePool:
    """Pool with a unique best fusion: restoring every corrupted position.

    One seed candidate corrupts 1-3 positions of a clean sentence with junk
    tokens; for each corrupted position there is a candidate restoring it
    (and sometimes one offering different junk). All candidates have equal
    length, so under the lexical scorer the only hypothesis with full source
    coverage, and hence the unique argmax, is the clean sentence itself.
    """
    length = rng.randint(6, 10)
    clean = rng.sample(WORDS, length)
    positions = sorted(rng.sample(range(length), rng.randint(1, 3)))
    seed_tokens = list(clean)
    for p in positions:
        seed_tokens[p] = f"z{sid}p{p}v0"
    candidates = [detokenize(seed_tokens)]
    for p in positions:
        fixer = list(seed_tokens)
        fixer[p] = clean[p]
        candidates.append(detokenize(fixer))
        if rng.random() < 0.5:
            other = list(seed_tokens)
            other[p] = f"z{sid}p{p}v1"
            candidates.append(detokenize(other))
    source = detokenize(clean)
    return CandidatePool(sid, source, tuple(candidates), reference=source)


def enumerate_fusions(pool: CandidatePool, scorer) -> tuple[str, float]:
    """Independent exhaustive oracle: best materialization over all choices.

    Picks the base by direct argmax scoring, then enumerates every choice
    combination over the divergent span groups, materializes each, scores
    them all in one batch, and returns the argmax string and score.
    """
    scores = scorer.score_batch(
        [ScoreRequest(pool.source, c) for c in pool.candidates]
    )
    base_index = max(range(len(scores)), key=scores.__getitem__)
    base = tokenize(pool.candidates[base_index])
    others = [tokenize(c) for i, c in enumerate(pool.candidates) if i != base_index]
    groups = find_divergent_spans(base, others)
    if not groups:
        return pool.candidates[base_index], scores[base_index]
    options = [[None] + list(range(len(g.alternatives))) for g in groups]
    texts = []
    for combo in itertools.product(*options):
        texts.append(detokenize(materialize(base, groups, combo)))
    combo_scores = scorer.score_batch(
        [ScoreRequest(pool.source, t) for t in texts]
    )
    best = max(range(len(texts)), key=combo_scores.__getitem__)
    return texts[best], combo_scores[best]
