"""Scorer abstraction, built-in deterministic scorers, cache, and HTTP client.

Scores are abstract reals, higher is better; fusion and reranking only ever
compare them, so the scale never matters.
"""

import threading
import time
from abc import ABC, abstractmethod
from typing import Mapping, NamedTuple, Sequence

import requests as _requests

from .metrics import chrf
from .text import tokenize


class ScoringError(Exception):
    """Base class for scorer failures."""


class TransportError(ScoringError):
    """HTTP transport failed for one chunk after all retry attempts."""

    def __init__(self, message: str, chunk_index: int):
        super().__init__(message)
        self.chunk_index = chunk_index


class ProtocolError(ScoringError):
    """The remote scorer violated the wire protocol."""


class ScoreRequest(NamedTuple):
    source: str
    hypothesis: str


class Scorer(ABC):
    """Batch scorer interface.

    Implementations must be deterministic, length-preserving, and
    order-preserving: identical request lists yield identical score lists.
    """

    @abstractmethod
    def score_batch(self, requests: Sequence[ScoreRequest]) -> list[float]:
        raise NotImplementedError


def lexical_qe_score(req: ScoreRequest) -> float:
    """Reference-free lexical overlap score in [0, 1].

    Harmonic mean of source-token coverage (fraction of source tokens whose
    lowercase form appears in the hypothesis) and the length ratio
    min(|hyp|, |src|) / max(|hyp|, |src|). Empty hypotheses score 0.
    """
    src = tokenize(req.source)
    hyp = tokenize(req.hypothesis)
    if not hyp or not src:
        return 0.0
    hyp_forms = {t.lower() for t in hyp}
    coverage = sum(1 for t in src if t.lower() in hyp_forms) / len(src)
    ratio = min(len(hyp), len(src)) / max(len(hyp), len(src))
    if coverage == 0.0:
        return 0.0
    return 2.0 * coverage * ratio / (coverage + ratio)


class LexicalScorer(Scorer):
    """Deterministic stand-in scorer for tests and benchmarks."""

    def score_batch(self, requests: Sequence[ScoreRequest]) -> list[float]:
        return [lexical_qe_score(r) for r in requests]


class OracleScorer(Scorer):
    """Scores hypotheses by chrf against one hidden reference, ignoring the source."""

    def __init__(self, reference: str):
        if not reference:
            raise ValueError("oracle reference must be non-empty")
        self.reference = reference

    def score_batch(self, requests: Sequence[ScoreRequest]) -> list[float]:
        return [chrf(r.hypothesis, self.reference) / 100.0 for r in requests]


def oracle_scorer(reference: str) -> Scorer:
    return OracleScorer(reference)


class ReferenceLookupScorer(Scorer):
    """Oracle scoring for corpus runs: the reference is looked up by source."""

    def __init__(self, references: Mapping[str, str]):
        self.references = dict(references)

    def score_batch(self, requests: Sequence[ScoreRequest]) -> list[float]:
        scores = []
        for r in requests:
            reference = self.references.get(r.source)
            if reference is None:
                raise ScoringError(f"no reference known for source {r.source!r}")
            scores.append(chrf(r.hypothesis, reference) / 100.0)
        return scores


class CountingScorer(Scorer):
    """Pass-through wrapper that counts calls and scored items exactly."""

    def __init__(self, inner: Scorer):
        self.inner = inner
        self.calls = 0
        self.items = 0

    def score_batch(self, requests: Sequence[ScoreRequest]) -> list[float]:
        scores = self.inner.score_batch(requests)
        self.calls += 1
        self.items += len(requests)
        return scores


class ScoreCache:
    """Thread-safe (source, hypothesis) -> score map with hit/miss counters.

    Values are never recomputed once stored; counters are monotone
    non-decreasing. Concurrent duplicate computation of a key is harmless
    because scorers are deterministic (last write wins with equal values).
    """

    def __init__(self) -> None:
        self._values: dict[ScoreRequest, float] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __contains__(self, req: ScoreRequest) -> bool:
        with self._lock:
            return req in self._values

    def __len__(self) -> int:
        with self._lock:
            return len(self._values)

    def lookup(self, req: ScoreRequest) -> float:
        with self._lock:
            return self._values[req]

    def store(self, req: ScoreRequest, score: float) -> None:
        with self._lock:
            self._values[req] = score

    def record(self, hits: int, misses: int) -> None:
        with self._lock:
            self.hits += hits
            self.misses += misses


def unique_misses(cache: ScoreCache, requests: Sequence[ScoreRequest]) -> list[ScoreRequest]:
    """Requests not yet cached, deduplicated, in first-seen order."""
    seen: set[ScoreRequest] = set()
    misses = []
    for req in requests:
        if req not in seen and req not in cache:
            seen.add(req)
            misses.append(req)
    return misses


def cached_score_batch(
    cache: ScoreCache, inner: Scorer, requests: Sequence[ScoreRequest]
) -> list[float]:
    """Serve a batch through the cache.

    Duplicates within the batch and previously cached pairs never reach the
    inner scorer; it is called once with exactly the deduplicated misses.
    Inner-scorer errors propagate without poisoning the cache.
    """
    misses = unique_misses(cache, requests)
    if misses:
        values = inner.score_batch(misses)
        if len(values) != len(misses):
            raise ScoringError(
                f"inner scorer returned {len(values)} scores for {len(misses)} requests"
            )
        for req, value in zip(misses, values):
            cache.store(req, value)
    cache.record(hits=len(requests) - len(misses), misses=len(misses))
    return [cache.lookup(req) for req in requests]


class CachedScorer(Scorer):
    def __init__(self, inner: Scorer, cache: ScoreCache | None = None):
        self.inner = inner
        self.cache = cache if cache is not None else ScoreCache()

    def score_batch(self, requests: Sequence[ScoreRequest]) -> list[float]:
        return cached_score_batch(self.cache, self.inner, requests)


def http_score_batch(
    endpoint: str,
    score_requests: Sequence[ScoreRequest],
    timeout: float = 30.0,
    max_batch: int = 400,
    retries: int = 3,
    auth_token: str | None = None,
    backoff_s: float = 0.5,
) -> list[float]:
    """Score requests against a remote scorer, chunked to max_batch per call.

    POSTs {"pairs": [{"source", "hypothesis"}, ...]} to <endpoint>/score and
    expects {"scores": [...]} of matching length. Transport failures are
    retried with exponential backoff up to `retries` attempts per chunk and
    then raised as TransportError with the chunk index; malformed responses
    raise ProtocolError. The whole operation fails on any chunk failure so
    corpus runs stay deterministic (no partial results).
    """
    if max_batch < 1:
        raise ValueError("max_batch must be >= 1")
    if retries < 1:
        raise ValueError("retries must be >= 1")
    if not score_requests:
        return []
    url = endpoint.rstrip("/") + "/score"
    headers = {"Content-Type": "application/json"}
    if auth_token:
        headers["Authorization"] = f"Bearer {auth_token}"
    scores: list[float] = []
    chunks = [
        score_requests[i : i + max_batch]
        for i in range(0, len(score_requests), max_batch)
    ]
    for chunk_index, chunk in enumerate(chunks):
        payload = {
            "pairs": [{"source": r.source, "hypothesis": r.hypothesis} for r in chunk]
        }
        response = None
        last_error: Exception | None = None
        for attempt in range(retries):
            if attempt > 0:
                time.sleep(backoff_s * 2 ** (attempt - 1))
            try:
                response = _requests.post(
                    url, json=payload, timeout=timeout, headers=headers
                )
            except _requests.RequestException as exc:
                last_error = exc
                continue
            if response.status_code >= 500:
                last_error = ScoringError(f"server error {response.status_code}")
                response = None
                continue
            break
        if response is None:
            raise TransportError(
                f"chunk {chunk_index} failed after {retries} attempts: {last_error}",
                chunk_index=chunk_index,
            )
        if response.status_code != 200:
            raise ProtocolError(
                f"chunk {chunk_index}: HTTP {response.status_code}: {response.text[:200]}"
            )
        try:
            body = response.json()
        except ValueError as exc:
            raise ProtocolError(f"chunk {chunk_index}: invalid JSON response: {exc}")
        chunk_scores = body.get("scores") if isinstance(body, dict) else None
        if not isinstance(chunk_scores, list) or len(chunk_scores) != len(chunk):
            raise ProtocolError(
                f"chunk {chunk_index}: expected {len(chunk)} scores, "
                f"got {chunk_scores!r:.200}"
            )
        for value in chunk_scores:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ProtocolError(f"chunk {chunk_index}: non-numeric score {value!r}")
            scores.append(float(value))
    return scores


class HttpScorer(Scorer):
    """Scorer backed by a remote service speaking the wire protocol."""

    def __init__(
        self,
        endpoint: str,
        timeout: float = 30.0,
        max_batch: int = 400,
        retries: int = 3,
        auth_token: str | None = None,
        backoff_s: float = 0.5,
    ):
        self.endpoint = endpoint
        self.timeout = timeout
        self.max_batch = max_batch
        self.retries = retries
        self.auth_token = auth_token
        self.backoff_s = backoff_s

    def score_batch(self, requests: Sequence[ScoreRequest]) -> list[float]:
        return http_score_batch(
            self.endpoint,
            requests,
            timeout=self.timeout,
            max_batch=self.max_batch,
            retries=self.retries,
            auth_token=self.auth_token,
            backoff_s=self.backoff_s,
        )
