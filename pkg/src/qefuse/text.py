"""Tokenization and the candidate-pool data model shared by all modules."""

from dataclasses import dataclass
from typing import Iterable

# A token sequence is an immutable tuple of non-empty strings. Tuples are
# hashable, which the diff and cache layers rely on.
TokenSeq = tuple[str, ...]


def tokenize(text: str, mode: str = "word") -> TokenSeq:
    """Split text into tokens.

    "word" splits on maximal runs of Unicode whitespace. "char" yields one
    token per non-whitespace character (used by the character n-gram metric).
    Empty or all-whitespace input yields the empty sequence.
    """
    if mode == "word":
        return tuple(text.split())
    if mode == "char":
        return tuple(ch for ch in text if not ch.isspace())
    raise ValueError(f"unknown tokenizer mode: {mode!r}")


def detokenize(tokens: Iterable[str]) -> str:
    """Join tokens with single spaces.

    Inverse of tokenize for strings already in single-space normal form;
    original inter-token spacing is not preserved otherwise.
    """
    return " ".join(tokens)


@dataclass
class CandidatePool:
    """A source sentence with its N candidate translations.

    Candidate order is significant: it is the deterministic tie-break order
    wherever a best candidate is selected.
    """

    id: str
    source: str
    candidates: tuple[str, ...]
    reference: str | None = None

    def __post_init__(self) -> None:
        self.candidates = tuple(self.candidates)
        if not self.candidates:
            raise ValueError(f"pool {self.id!r} has no candidates")

    @property
    def size(self) -> int:
        return len(self.candidates)

    def truncated(self, n: int) -> "CandidatePool":
        """Pool restricted to the first n candidates (order preserved)."""
        if n < 1:
            raise ValueError("pool size must be >= 1")
        return CandidatePool(self.id, self.source, self.candidates[:n], self.reference)
