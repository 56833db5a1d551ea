"""Candidate fusion: beam substitution over divergent spans of the pool.

The base hypothesis is the candidate the scorer ranks highest. Divergent
span groups between the base and the other candidates are traversed in
order; at each group every beam hypothesis is extended with every
alternative (keeping the base span is always one of the options), the
extensions are deduplicated by materialized string, everything is scored,
and the top beam_size hypotheses survive. The final top hypothesis is the
output; because the incumbent best hypothesis is itself a candidate at
every step, the output score never drops below the base score.

fuse_corpus advances all sentences in lockstep so that each step issues one
large scorer batch covering the whole corpus; sentences without remaining
groups exit early and contribute nothing. A per-sentence cache keeps
results bit-identical to running fuse independently per pool.
"""

from dataclasses import dataclass, field

from .diff import DivergentSpanGroup, find_divergent_spans
from .scoring import ScoreCache, Scorer, ScoreRequest, ScoringError, unique_misses
from .text import CandidatePool, TokenSeq, detokenize, tokenize

KEEP_BASE = None

# Per-group selection: KEEP_BASE or an index into the group's alternatives,
# for each group processed so far.
ChoiceVector = tuple[int | None, ...]


class CorpusScoringError(ScoringError):
    """Scorer failure attributed to one sentence of a corpus run."""

    def __init__(self, sentence_id: str, cause: Exception):
        super().__init__(f"scorer failed on sentence {sentence_id!r}: {cause}")
        self.sentence_id = sentence_id
        self.cause = cause


@dataclass
class FusionConfig:
    beam_size: int = 5
    cache_enabled: bool = True
    max_groups: int | None = None

    def __post_init__(self) -> None:
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")


@dataclass
class FusionStats:
    groups: int
    hypotheses_scored: int
    cache_hits: int


@dataclass
class FusionResult:
    output: str
    score: float
    base_index: int
    chosen: ChoiceVector
    stats: FusionStats


def select_base(pool: CandidatePool, scorer: Scorer) -> tuple[int, float]:
    """Index and score of the scorer's argmax candidate (lowest index on ties)."""
    scores = scorer.score_batch(
        [ScoreRequest(pool.source, c) for c in pool.candidates]
    )
    best = max(range(len(scores)), key=scores.__getitem__)
    return best, scores[best]


def materialize(
    base: TokenSeq, groups: list[DivergentSpanGroup], choice: ChoiceVector
) -> TokenSeq:
    """Apply the chosen alternatives to the base token sequence.

    choice covers a prefix of groups; KEEP_BASE entries leave their range
    untouched. Splices run right-to-left so earlier indices stay valid.
    """
    if len(choice) > len(groups):
        raise ValueError("choice vector longer than group list")
    result = list(base)
    for group, selection in reversed(list(zip(groups, choice))):
        if selection is KEEP_BASE:
            continue
        if not 0 <= selection < len(group.alternatives):
            raise ValueError(
                f"selection {selection} out of range for group at {group.base_range}"
            )
        start, end = group.base_range
        result[start:end] = group.alternatives[selection]
    return tuple(result)


@dataclass
class _Hypothesis:
    choice: ChoiceVector
    text: str
    score: float = 0.0


class _SentenceRun:
    """Stepwise beam state for one pool, driven by externally supplied scores.

    Each step exposes `pending` score requests; `accept` takes the values for
    the deduplicated cache misses (or for every pending request when the
    cache is off) and advances one phase: base selection first, then one span
    group per step.
    """

    def __init__(self, pool: CandidatePool, config: FusionConfig):
        self.pool = pool
        self.config = config
        self.cache = ScoreCache() if config.cache_enabled else None
        self.scored_items = 0
        self.result: FusionResult | None = None
        self._group_index = 0
        self._groups: list[DivergentSpanGroup] = []
        self._base_tokens: TokenSeq = ()
        self._base_index = 0
        self._entries: list[_Hypothesis] = []
        self._beam: list[_Hypothesis] = []
        self._selecting_base = True
        self.pending = [ScoreRequest(pool.source, c) for c in pool.candidates]

    @property
    def done(self) -> bool:
        return self.result is not None

    def misses(self) -> list[ScoreRequest]:
        """The subset of pending requests the inner scorer must evaluate now."""
        if self.cache is None:
            return list(self.pending)
        found = unique_misses(self.cache, self.pending)
        self.cache.record(hits=len(self.pending) - len(found), misses=len(found))
        return found

    def accept(self, misses: list[ScoreRequest], values: list[float]) -> None:
        self.scored_items += len(misses)
        if self.cache is None:
            scores = list(values)
        else:
            for req, value in zip(misses, values):
                self.cache.store(req, value)
            scores = [self.cache.lookup(req) for req in self.pending]
        if self._selecting_base:
            self._start_beam(scores)
        else:
            self._advance_group(scores)

    def _start_beam(self, scores: list[float]) -> None:
        self._selecting_base = False
        best = max(range(len(scores)), key=scores.__getitem__)
        self._base_index = best
        base_score = scores[best]
        self._base_tokens = tokenize(self.pool.candidates[best])
        others = [
            tokenize(c) for i, c in enumerate(self.pool.candidates) if i != best
        ]
        groups = find_divergent_spans(self._base_tokens, others) if others else []
        if self.config.max_groups is not None:
            groups = groups[: self.config.max_groups]
        self._groups = groups
        if not groups:
            # Nothing to fuse: the base candidate is returned verbatim.
            self._finish(self.pool.candidates[best], base_score, ())
            return
        self._beam = [_Hypothesis((), detokenize(self._base_tokens))]
        self._prepare_group()

    def _prepare_group(self) -> None:
        group = self._groups[self._group_index]
        entries = [
            _Hypothesis(hyp.choice + (KEEP_BASE,), hyp.text) for hyp in self._beam
        ]
        upto = self._groups[: self._group_index + 1]
        for hyp in self._beam:
            for alt_index in range(len(group.alternatives)):
                choice = hyp.choice + (alt_index,)
                text = detokenize(materialize(self._base_tokens, upto, choice))
                entries.append(_Hypothesis(choice, text))
        seen: set[str] = set()
        self._entries = []
        for entry in entries:
            if entry.text not in seen:
                seen.add(entry.text)
                self._entries.append(entry)
        self.pending = [
            ScoreRequest(self.pool.source, e.text) for e in self._entries
        ]

    def _advance_group(self, scores: list[float]) -> None:
        for entry, score in zip(self._entries, scores):
            entry.score = score
        # Stable sort: ties keep insertion order (incumbents before extensions).
        self._beam = sorted(self._entries, key=lambda e: -e.score)
        del self._beam[self.config.beam_size :]
        self._group_index += 1
        if self._group_index == len(self._groups):
            top = self._beam[0]
            self._finish(top.text, top.score, top.choice)
        else:
            self._prepare_group()

    def _finish(self, output: str, score: float, chosen: ChoiceVector) -> None:
        self.pending = []
        self.result = FusionResult(
            output=output,
            score=score,
            base_index=self._base_index,
            chosen=chosen,
            stats=FusionStats(
                groups=len(self._groups),
                hypotheses_scored=self.scored_items,
                cache_hits=self.cache.hits if self.cache is not None else 0,
            ),
        )


def _attribute_failure(
    batches: list[tuple[_SentenceRun, list[ScoreRequest]]],
    scorer: Scorer,
    original: Exception,
) -> None:
    # Scorers are deterministic, so replaying each sentence's sub-batch in
    # isolation pins the failure to one sentence id.
    for run, misses in batches:
        if not misses:
            continue
        try:
            scorer.score_batch(misses)
        except Exception as exc:
            raise CorpusScoringError(run.pool.id, exc) from exc
    raise CorpusScoringError(batches[0][0].pool.id, original) from original


def fuse_corpus(
    pools: list[CandidatePool],
    scorer: Scorer,
    config: FusionConfig | None = None,
) -> list[FusionResult]:
    """Fuse every pool, batching scorer calls across sentences per step."""
    config = config if config is not None else FusionConfig()
    runs = [_SentenceRun(pool, config) for pool in pools]
    while True:
        active = [run for run in runs if not run.done]
        if not active:
            break
        batches = [(run, run.misses()) for run in active]
        flat = [req for _, misses in batches for req in misses]
        if flat:
            try:
                values = scorer.score_batch(flat)
            except Exception as exc:
                _attribute_failure(batches, scorer, exc)
            if len(values) != len(flat):
                raise ScoringError(
                    f"scorer returned {len(values)} scores for {len(flat)} requests"
                )
        else:
            values = []
        offset = 0
        for run, misses in batches:
            run.accept(misses, values[offset : offset + len(misses)])
            offset += len(misses)
    return [run.result for run in runs]


def fuse(
    pool: CandidatePool, scorer: Scorer, config: FusionConfig | None = None
) -> FusionResult:
    """Fuse a single pool; identical to a one-sentence fuse_corpus run."""
    return fuse_corpus([pool], scorer, config)[0]
