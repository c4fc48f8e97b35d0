"""Decision classification and per-sentence entailment scoring.

Every rule sentence contributes the pair [k_i; v_i]. A learned attention
over these pairs yields a single summary vector, which a linear layer maps
to four decision logits in the fixed class order Yes, No, Irrelevant,
Inquire. A second linear layer scores each sentence pair with three
entailment logits ordered Entailment, Contradiction, Unknown.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .data import DECISIONS, ENTAILMENT_STATES
from .tracker import MemoryState


class DecisionError(Exception):
    pass


@dataclass
class DecisionParams:
    w_attention: ad.Parameter  # (2d,)
    b_attention: ad.Parameter  # ()
    w_decide: ad.Parameter     # (4, 2d)
    b_decide: ad.Parameter     # (4,)
    w_entail: ad.Parameter     # (3, 2d)
    b_entail: ad.Parameter     # (3,)

    def all(self) -> list[ad.Parameter]:
        return [self.w_attention, self.b_attention, self.w_decide, self.b_decide,
                self.w_entail, self.b_entail]


def sentence_pairs(memory: MemoryState) -> ad.Tensor:
    """[k_i; v_i] rows, shape (M, 2d)."""
    return ad.hstack(memory.keys, memory.values)


def summarize(memory: MemoryState, params: DecisionParams):
    """Attention-weighted summary of the sentence pairs.

    Returns the summary vector (2d,) and the attention weights (M,).
    """
    kv = sentence_pairs(memory)
    scores = ad.add(ad.matvec(kv, params.w_attention), params.b_attention)
    weights = ad.softmax(scores)
    summary = ad.vecmat(weights, kv)
    return summary, weights


def decide(summary, params: DecisionParams) -> ad.Tensor:
    """Four decision logits from the summary vector."""
    return ad.add(ad.matvec(params.w_decide, summary), params.b_decide)


def decision_from_logits(logits) -> str:
    """Argmax over the fixed class order; ties go to the earlier class."""
    z = logits.data if isinstance(logits, ad.Tensor) else np.asarray(logits)
    if z.shape != (len(DECISIONS),):
        raise DecisionError(f"expected {len(DECISIONS)} logits, got shape {z.shape}")
    return DECISIONS[int(np.argmax(z))]


def entail_scores(memory: MemoryState, params: DecisionParams) -> ad.Tensor:
    """(M, 3) entailment logits, one row per rule sentence."""
    kv = sentence_pairs(memory)
    return ad.linear(kv, params.w_entail, params.b_entail)


def entail_labels_from_logits(logits) -> list[str]:
    e = logits.data if isinstance(logits, ad.Tensor) else np.asarray(logits)
    return [ENTAILMENT_STATES[int(i)] for i in np.argmax(e, axis=1)]


def decision_loss(logits, decision: str) -> ad.Tensor:
    if decision not in DECISIONS:
        raise DecisionError(f"unknown decision {decision!r}")
    return ad.cross_entropy(logits, DECISIONS.index(decision))


def entail_loss(logits, labels) -> ad.Tensor:
    """Mean cross entropy of per-sentence entailment predictions."""
    try:
        targets = [ENTAILMENT_STATES.index(l) for l in labels]
    except ValueError as exc:
        raise DecisionError(f"unknown entailment label in {labels!r}") from exc
    if len(targets) != logits.data.shape[0]:
        raise DecisionError(f"{len(targets)} labels for {logits.data.shape[0]} sentences")
    return ad.mean_cross_entropy_rows(logits, targets)
