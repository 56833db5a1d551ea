import random

import pytest

from qefuse import (
    CandidatePool,
    CountingScorer,
    LexicalScorer,
    bleu_utility,
    chrf,
    chrf_utility,
    fuse,
    mbr,
    qe_rerank,
    sentence_bleu,
)
from qefuse.bench import CountingUtility

from conftest import random_pool


def brute_mbr(pool, utility):
    """Reference expected-utility matrix, built without any shortcuts."""
    n = pool.size
    best_index, best_value = 0, float("-inf")
    for i in range(n):
        value = sum(
            utility(pool.candidates[i], pool.candidates[j])
            for j in range(n)
            if j != i
        ) / (n - 1)
        if value > best_value:
            best_index, best_value = i, value
    return best_index, best_value


class TestQeRerank:
    def test_picks_highest_scoring_candidate(self):
        pool = CandidatePool(
            id="p", source="a b c d", candidates=("a x", "a b c d", "a b")
        )
        index, score = qe_rerank(pool, LexicalScorer())
        assert index == 1
        assert score == 1.0

    def test_consumes_exactly_n_scored_items(self):
        rng = random.Random(50)
        for sid in range(30):
            pool = random_pool(rng, f"n{sid}")
            counting = CountingScorer(LexicalScorer())
            qe_rerank(pool, counting)
            assert counting.items == pool.size
            assert counting.calls == 1

    def test_never_beats_fuse(self):
        rng = random.Random(51)
        for sid in range(100):
            pool = random_pool(rng, f"f{sid}")
            scorer = LexicalScorer()
            _, rerank_score = qe_rerank(pool, scorer)
            assert fuse(pool, scorer).score >= rerank_score


class TestMbr:
    def test_single_candidate(self):
        pool = CandidatePool(id="p", source="s", candidates=("only",))
        assert mbr(pool, chrf_utility) == (0, 0.0)

    def test_two_candidates_symmetric_utilities(self):
        pool = CandidatePool(id="p", source="s", candidates=("ab", "abcd"))
        index, value = mbr(pool, chrf_utility)
        # each candidate's expected utility is its utility against the other
        u01 = chrf("ab", "abcd") / 100.0
        u10 = chrf("abcd", "ab") / 100.0
        assert index == (0 if u01 >= u10 else 1)
        assert value == pytest.approx(max(u01, u10))

    def test_majority_consensus_wins(self):
        pool = CandidatePool(
            id="p",
            source="s",
            candidates=("the cat sat", "the cat sat", "dogs bark loud"),
        )
        index, _ = mbr(pool, bleu_utility)
        assert index == 0

    def test_matches_brute_force_matrix(self):
        rng = random.Random(52)
        for sid in range(60):
            pool = random_pool(rng, f"b{sid}")
            for utility in (chrf_utility, bleu_utility):
                expected_index, expected_value = brute_mbr(pool, utility)
                index, value = mbr(pool, utility)
                assert index == expected_index
                assert value == pytest.approx(expected_value)

    def test_duplicates_are_not_collapsed(self):
        # three identical candidates plus one outlier: the duplicates vote
        # for each other, so one of them must win even though the outlier
        # is closer to any single duplicate than duplicates are to it
        pool = CandidatePool(
            id="p", source="s", candidates=("aa bb cc", "aa bb cc", "aa bb cc", "aa bb")
        )
        index, value = mbr(pool, chrf_utility)
        assert index == 0
        expected = (2 * 1.0 + chrf("aa bb cc", "aa bb") / 100.0) / 3
        assert value == pytest.approx(expected)

    def test_exact_call_count(self):
        rng = random.Random(53)
        for n in (2, 5, 10, 25):
            pool = random_pool(rng, f"c{n}", n_min=n, n_max=n)
            counting = CountingUtility(chrf_utility)
            mbr(pool, counting)
            assert counting.calls == n * (n - 1)

    def test_utility_argument_order(self):
        seen = []

        def spy(hyp, ref):
            seen.append((hyp, ref))
            return chrf_utility(hyp, ref)

        pool = CandidatePool(id="p", source="s", candidates=("x", "y"))
        mbr(pool, spy)
        assert ("x", "y") in seen and ("y", "x") in seen

    def test_invariant_under_increasing_affine_transform(self):
        rng = random.Random(54)

        def shifted(hyp, ref):
            return 4.0 * chrf_utility(hyp, ref)

        for sid in range(40):
            pool = random_pool(rng, f"t{sid}")
            assert mbr(pool, chrf_utility)[0] == mbr(pool, shifted)[0]
