"""Selection baselines: QE-reranking (best-of-n) and MBR decoding."""

from typing import Callable

from .fusion import select_base
from .metrics import chrf, sentence_bleu
from .scoring import Scorer
from .text import CandidatePool

# A utility measures similarity of a hypothesis to a pseudo-reference;
# higher is better, symmetry is not required.
Utility = Callable[[str, str], float]


def bleu_utility(hypothesis: str, pseudo_reference: str) -> float:
    return sentence_bleu(hypothesis, pseudo_reference) / 100.0


def chrf_utility(hypothesis: str, pseudo_reference: str) -> float:
    return chrf(hypothesis, pseudo_reference) / 100.0


def qe_rerank(pool: CandidatePool, scorer: Scorer) -> tuple[int, float]:
    """Index and score of the best candidate; consumes exactly N scored items."""
    return select_base(pool, scorer)


def mbr(pool: CandidatePool, utility: Utility) -> tuple[int, float]:
    """Candidate with the highest expected utility against the rest of the pool.

    Every other candidate serves as an unweighted pseudo-reference:
    expected utility of y_i is the mean of u(y_i, y_j) over j != i, so the
    computation makes exactly N(N-1) utility calls. Candidates are not
    deduplicated. Ties break toward the lowest index; a pool of one returns
    index 0 with expected utility 0.
    """
    candidates = pool.candidates
    n = len(candidates)
    if n == 1:
        return 0, 0.0
    expected = []
    for i, y_i in enumerate(candidates):
        total = 0.0
        for j, y_j in enumerate(candidates):
            if j != i:
                total += utility(y_i, y_j)
        expected.append(total / (n - 1))
    best = max(range(n), key=expected.__getitem__)
    return best, expected[best]
