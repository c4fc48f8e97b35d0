"""Coarse-to-fine extraction of the underspecified rule span.

The coarse stage turns the per-sentence Unknown logits into a distribution
zeta over sentences. The fine stage scores every rule token as a span start
(gamma) and end (delta): a learned direction dotted with the token vector,
multiplied by its sentence's zeta. Extraction returns the within-sentence
pair (s, e), s <= e, maximizing gamma_s * delta_e, breaking ties toward the
shorter and then the earlier span. The extraction loss is cross entropy of
the gold start and end positions under softmaxes taken over all rule tokens.

An alternative sentence-identification mode scores sentences with a
dedicated linear head on [k_i; v_i] instead of the Unknown logits and adds
its own cross-entropy term on Inquire examples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .tracker import MemoryState


class SpanError(Exception):
    pass


@dataclass
class SpanParams:
    w_start: ad.Parameter  # (d,)
    w_end: ad.Parameter    # (d,)

    def all(self) -> list[ad.Parameter]:
        return [self.w_start, self.w_end]


@dataclass
class SentenceHeadParams:
    """Dedicated sentence scorer for the alternative identification mode."""

    w_sentence: ad.Parameter  # (2d,)
    b_sentence: ad.Parameter  # ()

    def all(self) -> list[ad.Parameter]:
        return [self.w_sentence, self.b_sentence]


def sentence_scores(entail_logits) -> ad.Tensor:
    """zeta: softmax over the per-sentence Unknown logits (column 2)."""
    return ad.softmax(ad.column(entail_logits, 2))


def sentence_head_logits(memory: MemoryState, params: SentenceHeadParams) -> ad.Tensor:
    """Raw sentence logits for the alternative identification mode."""
    from .decision import sentence_pairs

    kv = sentence_pairs(memory)
    return ad.add(ad.matvec(kv, params.w_sentence), params.b_sentence)


def span_scores(rule_tokens, token_sentence_index, zeta, params: SpanParams):
    """Start and end scores for every rule token, shape (T_R,) each.

    ``zeta`` of None leaves the raw token scores unmodulated (the ablation
    with the coarse stage removed).
    """
    t_r = rule_tokens.data.shape[0]
    if t_r == 0:
        raise SpanError("no rule tokens to score")
    raw_start = ad.matvec(rule_tokens, params.w_start)
    raw_end = ad.matvec(rule_tokens, params.w_end)
    if zeta is None:
        return raw_start, raw_end
    modulation = ad.take(zeta, token_sentence_index)
    return ad.mul(raw_start, modulation), ad.mul(raw_end, modulation)


def extract(gamma, delta, token_sentence_index, token_within_sentence):
    """Best within-sentence (start, end) pair under gamma_s * delta_e.

    Returns (sentence_index, start_within_sentence, end_within_sentence,
    global_start, global_end). Ties prefer the shorter span, then the
    earlier start position.
    """
    g = gamma.data if isinstance(gamma, ad.Tensor) else np.asarray(gamma)
    d = delta.data if isinstance(delta, ad.Tensor) else np.asarray(delta)
    sent = np.asarray(token_sentence_index)
    within = np.asarray(token_within_sentence)
    if g.shape != d.shape or g.shape != sent.shape:
        raise SpanError(f"score shapes {g.shape}/{d.shape} do not match {sent.shape} tokens")
    best = None  # (-score, length, global_start) with payload
    for m in np.unique(sent):
        positions = np.flatnonzero(sent == m)
        products = np.outer(g[positions], d[positions])
        n = len(positions)
        for s in range(n):
            for e in range(s, n):
                key = (-products[s, e], e - s, int(positions[s]))
                if best is None or key < best[0]:
                    best = (key, (int(m), int(within[positions[s]]), int(within[positions[e]]),
                                  int(positions[s]), int(positions[e])))
    if best is None:
        raise SpanError("no rule tokens")
    return best[1]


def span_loss(gamma, delta, gold_global_start: int, gold_global_end: int) -> ad.Tensor:
    """Cross entropy of the gold start and end over all rule tokens."""
    if gold_global_start > gold_global_end:
        raise SpanError(f"gold span reversed: [{gold_global_start}, {gold_global_end}]")
    return ad.add(ad.cross_entropy(gamma, gold_global_start),
                  ad.cross_entropy(delta, gold_global_end))


def sentence_identification_loss(sentence_logits, gold_sentence: int) -> ad.Tensor:
    """Cross entropy for the alternative sentence-identification mode."""
    return ad.cross_entropy(sentence_logits, gold_sentence)


def total_loss(decision_term, entail_term, span_term,
               lambda_entail: float, lambda_span: float) -> ad.Tensor:
    """decision + lambda_entail * entail + lambda_span * span.

    Either weighted term may be None, in which case it contributes nothing
    (and no gradient flows through that head).
    """
    loss = decision_term
    if entail_term is not None and lambda_entail != 0.0:
        loss = ad.add(loss, ad.scale(entail_term, lambda_entail))
    if span_term is not None and lambda_span != 0.0:
        loss = ad.add(loss, ad.scale(span_term, lambda_span))
    return loss
