"""Toy tasks with known dependence structure, for ablation experiments."""

from __future__ import annotations

import numpy as np

from .embedding import EmbeddingTable, SpecialTokenSet
from .models import as_context

BRANCH_A, BRANCH_B, FILLER = 1, 2, 3
ANSWER_A, ANSWER_B, ANSWER_NONE = 4, 5, 6


class BranchTaskModel:
    """A reasoning chain whose answer hinges on one early, uncertain step.

    Step 0 is a near-tie between ``BRANCH_A`` and ``BRANCH_B`` (high entropy),
    then ``n_filler`` confident filler steps follow, then end-of-thinking. The
    first answer token reads the embedding fed back after step 0: ``ANSWER_A``
    or ``ANSWER_B`` depending on which branch dominates it, ``ANSWER_NONE`` if
    neither is present. Embeddings are one-hot so the dependence is exact.

    A context whose first generated vector is the end-of-thinking row is treated
    as a no-reasoning run and answered immediately.
    """

    vocab = 16

    def __init__(self, n_filler: int = 9, prompt_length: int = 1):
        self.n_filler = n_filler
        self.prompt_length = prompt_length
        self.specials = SpecialTokenSet.reserved(self.vocab)
        self.table = EmbeddingTable(np.eye(self.vocab), self.specials)

    @property
    def vocab_size(self) -> int:
        return self.vocab

    def _peaked(self, token: int, height: float, floor: float = -20.0) -> np.ndarray:
        logits = np.full(self.vocab, floor)
        logits[token] = height
        return logits

    def next_logits(self, context) -> np.ndarray:
        ctx = as_context(context, self.vocab)
        gen = ctx[self.prompt_length:]
        n = len(gen)
        eot = self.specials.end_of_thinking
        no_think = n >= 1 and gen[0][eot] > 0.5
        answer_at = 1 if no_think else self.n_filler + 2

        if n < answer_at:
            if n == 0:
                logits = np.full(self.vocab, -20.0)
                logits[BRANCH_A], logits[BRANCH_B] = 1.0, 0.9
                return logits
            if n <= self.n_filler:
                # entropy decreases slowly along the chain
                return self._peaked(FILLER, 8.0 + 0.25 * n, floor=0.0)
            return self._peaked(eot, 14.0)
        if n == answer_at:
            a, b = gen[0][BRANCH_A], gen[0][BRANCH_B]
            if max(a, b) < 0.05:
                return self._peaked(ANSWER_NONE, 10.0)
            return self._peaked(ANSWER_A if a >= b else ANSWER_B, 10.0)
        return self._peaked(self.specials.end_of_sequence, 10.0)


def exact_match(expected):
    """Score 1.0 when the answer begins with exactly the tokens in ``expected``."""
    expected = list(expected)

    def score(result) -> float:
        answer = list(result.answer_tokens)
        return 1.0 if answer[:len(expected)] == expected else 0.0

    return score
