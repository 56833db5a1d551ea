"""Token-level diffs between a base hypothesis and the other pool candidates.

Matching blocks follow the Ratcliff-Obershelp recursion: repeatedly take the
longest contiguous common block (ties broken by the smallest base index, then
the smallest candidate index) and recurse left and right of it. No junk or
popularity heuristic is applied, so difflib.SequenceMatcher with autojunk
disabled realizes exactly these semantics.
"""

import difflib
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .text import TokenSeq


class Opcode(NamedTuple):
    """One edit step transforming base[i1:i2] into candidate[j1:j2].

    tag is "equal", "replace", "delete" (j1 == j2) or "insert" (i1 == i2).
    Opcode lists tile both sequences with no gaps or overlaps.
    """

    tag: str
    i1: int
    i2: int
    j1: int
    j2: int


@dataclass
class DivergentSpanGroup:
    """One region where candidates disagree with the base hypothesis.

    base_range is a half-open token interval into the base; zero-width marks
    a pure insertion point, where base_span is empty and "keep base" means
    inserting nothing. alternatives never contains base_span itself and is
    ordered by first observation across the candidates (the deterministic
    tie-break order used by the beam).
    """

    base_range: tuple[int, int]
    base_span: TokenSeq
    alternatives: tuple[TokenSeq, ...]


def _matcher(a: Sequence[str], b: Sequence[str]) -> difflib.SequenceMatcher:
    return difflib.SequenceMatcher(a=a, b=b, autojunk=False)


def matching_blocks(a: Sequence[str], b: Sequence[str]) -> list[tuple[int, int, int]]:
    """Common blocks as (i, j, length), ending with the terminal (len(a), len(b), 0)."""
    return [(m.a, m.b, m.size) for m in _matcher(a, b).get_matching_blocks()]


def opcodes(a: Sequence[str], b: Sequence[str]) -> list[Opcode]:
    """Edit script from matching blocks; applying it to a reconstructs b."""
    return [Opcode(*op) for op in _matcher(a, b).get_opcodes()]


def _overlaps(lo: int, hi: int, s: int, e: int) -> bool:
    # Ranges are pre-sorted by (start, end), so s >= lo here. A zero-width
    # insertion joins a group only when strictly inside it (or when both are
    # zero-width at the same position); touching a boundary is not overlap.
    if s == e:
        return lo < s < hi or lo == hi == s
    return s < hi


def find_divergent_spans(
    base: Sequence[str], others: Iterable[Sequence[str]]
) -> list[DivergentSpanGroup]:
    """Group the non-equal opcodes of every candidate against the base.

    Each non-equal opcode contributes a (base_range -> alternative tokens)
    pair. Pairs with overlapping base ranges are merged into one group over
    the union interval, and every contributing alternative is re-extended
    with the base tokens between its original range and the union boundary,
    so substituting any alternative for the whole union range stays
    well-defined. Alternatives are deduplicated, an alternative equal to the
    base span is dropped, and groups left without alternatives are dropped.
    """
    base = tuple(base)
    pairs: list[tuple[int, int, TokenSeq]] = []
    for other in others:
        other = tuple(other)
        for tag, i1, i2, j1, j2 in opcodes(base, other):
            if tag != "equal":
                pairs.append((i1, i2, other[j1:j2]))
    if not pairs:
        return []

    # Cluster transitively-overlapping ranges with a sweep over sorted pairs;
    # the third sort key keeps first-observation order within equal ranges.
    order = sorted(range(len(pairs)), key=lambda k: (pairs[k][0], pairs[k][1], k))
    clusters: list[list[int]] = []
    lo = hi = -1
    for k in order:
        s, e, _ = pairs[k]
        if clusters and _overlaps(lo, hi, s, e):
            clusters[-1].append(k)
            hi = max(hi, e)
        else:
            clusters.append([k])
            lo, hi = s, e

    groups = []
    for members in clusters:
        u1 = min(pairs[k][0] for k in members)
        u2 = max(pairs[k][1] for k in members)
        base_span = base[u1:u2]
        alternatives: list[TokenSeq] = []
        for k in sorted(members):
            s, e, alt = pairs[k]
            widened = base[u1:s] + alt + base[e:u2]
            if widened != base_span and widened not in alternatives:
                alternatives.append(widened)
        if alternatives:
            groups.append(DivergentSpanGroup((u1, u2), base_span, tuple(alternatives)))
    return groups
