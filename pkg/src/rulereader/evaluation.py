"""Evaluation metrics and protocols.

Decision quality is reported as micro accuracy (overall fraction correct)
and macro accuracy (unweighted mean of per-class recall over the classes
present in the gold labels). Question quality is corpus-level BLEU: the
geometric mean of modified n-gram precisions times a brevity penalty, with
no smoothing unless explicitly requested.

Two protocols: the end-to-end protocol scores decisions on every example
and BLEU only on the subset where both the gold decision and the predicted
decision are Inquire (the subset size is reported alongside); the oracle
generation protocol generates a question for exactly the examples whose
gold decision is Inquire, regardless of the predicted decision.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .data import DECISIONS, LabeledExample
from .rephrase import RephraseRequest
from .text import tokenize


class EvaluationError(Exception):
    pass


def micro_accuracy(predictions, golds) -> float:
    """Fraction of exactly matching predictions."""
    if len(predictions) != len(golds):
        raise EvaluationError(f"{len(predictions)} predictions for {len(golds)} golds")
    if not golds:
        raise EvaluationError("empty evaluation set")
    return sum(p == g for p, g in zip(predictions, golds)) / len(golds)


def macro_accuracy(predictions, golds) -> float:
    """Unweighted mean of per-class recall over classes present in golds."""
    if len(predictions) != len(golds):
        raise EvaluationError(f"{len(predictions)} predictions for {len(golds)} golds")
    if not golds:
        raise EvaluationError("empty evaluation set")
    recalls = []
    for cls in dict.fromkeys(golds):
        idx = [i for i, g in enumerate(golds) if g == cls]
        recalls.append(sum(predictions[i] == cls for i in idx) / len(idx))
    return float(np.mean(recalls))


def classwise_accuracy(predictions, golds) -> dict[str, float]:
    """Per-class recall for every decision class present in golds."""
    out = {}
    for cls in DECISIONS:
        idx = [i for i, g in enumerate(golds) if g == cls]
        if idx:
            out[cls] = sum(predictions[i] == cls for i in idx) / len(idx)
    return out


def _tokens(x) -> list[str]:
    return tokenize(x) if isinstance(x, str) else list(x)


def _ngrams(tokens, n) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidates, references, max_n: int = 4, smooth: bool = False) -> float:
    """Corpus-level BLEU with uniform n-gram weights and brevity penalty.

    ``candidates`` and ``references`` are parallel lists of strings or token
    lists (one reference per candidate). Without smoothing, any order with
    zero clipped matches sends the whole score to zero; with ``smooth``,
    counts for orders above 1 get an add-one floor (diagnostics only).
    """
    if len(candidates) != len(references):
        raise EvaluationError(f"{len(candidates)} candidates for {len(references)} references")
    if not candidates:
        raise EvaluationError("empty BLEU input")
    if max_n < 1:
        raise EvaluationError(f"max_n must be >= 1, got {max_n}")
    cands = [_tokens(c) for c in candidates]
    refs = [_tokens(r) for r in references]
    log_sum = 0.0
    for n in range(1, max_n + 1):
        matched, total = 0, 0
        for c, r in zip(cands, refs):
            c_counts = _ngrams(c, n)
            r_counts = _ngrams(r, n)
            matched += sum(min(count, r_counts[g]) for g, count in c_counts.items())
            total += sum(c_counts.values())
        if smooth and n > 1:
            matched += 1
            total += 1
        if matched == 0 or total == 0:
            return 0.0
        log_sum += np.log(matched / total) / max_n
    cand_len = sum(len(c) for c in cands)
    ref_len = sum(len(r) for r in refs)
    brevity = 1.0 if cand_len > ref_len else np.exp(1.0 - ref_len / max(cand_len, 1))
    return float(brevity * np.exp(log_sum))


def _generate_question(model, labeled: LabeledExample, prediction, rephraser) -> str:
    span = prediction.span
    sentence_text = labeled.example.rule_doc.sentences[span.sentence_index].text
    return rephraser(RephraseRequest(span_text=span.text, sentence_text=sentence_text,
                                     rule_text=labeled.example.rule_text))


@dataclass
class EndToEndReport:
    micro: float
    macro: float
    classwise: dict[str, float]
    bleu1: float | None
    bleu4: float | None
    mutual_inquire_count: int
    total: int
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"protocol": "end_to_end", "micro": self.micro, "macro": self.macro,
                "classwise": self.classwise, "bleu1": self.bleu1, "bleu4": self.bleu4,
                "mutual_inquire_count": self.mutual_inquire_count, "total": self.total,
                "flags": self.flags}

    def format_table(self) -> str:
        lines = [f"{'metric':>24}  value",
                 f"{'micro accuracy':>24}  {self.micro:.4f}",
                 f"{'macro accuracy':>24}  {self.macro:.4f}"]
        for cls, acc in self.classwise.items():
            lines.append(f"{cls + ' recall':>24}  {acc:.4f}")
        b1 = "n/a" if self.bleu1 is None else f"{self.bleu1:.4f}"
        b4 = "n/a" if self.bleu4 is None else f"{self.bleu4:.4f}"
        lines.append(f"{'BLEU-1 (mutual Inquire)':>24}  {b1}")
        lines.append(f"{'BLEU-4 (mutual Inquire)':>24}  {b4}")
        lines.append(f"{'mutual Inquire subset':>24}  {self.mutual_inquire_count} of {self.total}")
        return "\n".join(lines)

    def classwise_series(self) -> str:
        """Plot-ready per-class series as delimited text."""
        rows = ["class\trecall"]
        rows += [f"{cls}\t{acc:.6f}" for cls, acc in self.classwise.items()]
        return "\n".join(rows)


@dataclass
class OracleGenerationReport:
    bleu1: float | None
    bleu4: float | None
    span_f1: float | None
    low_overlap_count: int
    sentence_id_accuracy: float | None
    subset_size: int
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"protocol": "oracle_generation", "bleu1": self.bleu1, "bleu4": self.bleu4,
                "span_f1": self.span_f1, "low_overlap_count": self.low_overlap_count,
                "sentence_id_accuracy": self.sentence_id_accuracy,
                "subset_size": self.subset_size, "flags": self.flags}

    def format_table(self) -> str:
        fmt = lambda v: "n/a" if v is None else f"{v:.4f}"
        return "\n".join([
            f"{'metric':>24}  value",
            f"{'BLEU-1':>24}  {fmt(self.bleu1)}",
            f"{'BLEU-4':>24}  {fmt(self.bleu4)}",
            f"{'span token F1':>24}  {fmt(self.span_f1)}",
            f"{'low-overlap questions':>24}  {self.low_overlap_count}",
            f"{'sentence id accuracy':>24}  {fmt(self.sentence_id_accuracy)}",
            f"{'gold Inquire subset':>24}  {self.subset_size}",
        ])


def end_to_end_eval(model, labeled_examples, rephraser, enc_inputs=None) -> EndToEndReport:
    """Decisions over every example; BLEU over the mutual-Inquire subset."""
    preds, golds = [], []
    cand_questions, ref_questions = [], []
    enc_inputs = enc_inputs or [None] * len(labeled_examples)
    for labeled, enc in zip(labeled_examples, enc_inputs):
        gold = labeled.example.decision
        p = model.predict(labeled.example, enc_input=enc)
        preds.append(p.decision)
        golds.append(gold)
        if gold == "Inquire" and p.decision == "Inquire":
            cand_questions.append(_generate_question(model, labeled, p, rephraser))
            ref_questions.append(labeled.example.follow_up)
    flags = []
    if cand_questions:
        bleu1 = bleu(cand_questions, ref_questions, max_n=1)
        bleu4 = bleu(cand_questions, ref_questions, max_n=4)
    else:
        bleu1 = bleu4 = None
        flags.append("no-mutual-inquire")
    return EndToEndReport(micro=micro_accuracy(preds, golds),
                          macro=macro_accuracy(preds, golds),
                          classwise=classwise_accuracy(preds, golds),
                          bleu1=bleu1, bleu4=bleu4,
                          mutual_inquire_count=len(cand_questions),
                          total=len(golds), flags=flags)


def _span_token_f1(pred_span, gold_span) -> float:
    if pred_span.sentence_index != gold_span.sentence_index:
        return 0.0
    pred = set(range(pred_span.token_start, pred_span.token_end + 1))
    gold = set(range(gold_span.token_start, gold_span.token_end + 1))
    overlap = len(pred & gold)
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred)
    recall = overlap / len(gold)
    return 2 * precision * recall / (precision + recall)


def oracle_qg_eval(model, labeled_examples, rephraser, enc_inputs=None) -> OracleGenerationReport:
    """Generate for exactly the gold-Inquire subset and score the questions."""
    cand_questions, ref_questions = [], []
    f1s, sentence_hits = [], []
    enc_inputs = enc_inputs or [None] * len(labeled_examples)
    for labeled, enc in zip(labeled_examples, enc_inputs):
        if labeled.example.decision != "Inquire":
            continue
        p = model.predict(labeled.example, enc_input=enc)
        cand_questions.append(_generate_question(model, labeled, p, rephraser))
        ref_questions.append(labeled.example.follow_up)
        if labeled.span is not None:
            f1s.append(_span_token_f1(p.span, labeled.span))
            sentence_hits.append(p.span.sentence_index == labeled.span.sentence_index)
    if not cand_questions:
        return OracleGenerationReport(bleu1=None, bleu4=None, span_f1=None,
                                      low_overlap_count=0, sentence_id_accuracy=None,
                                      subset_size=0, flags=["no-gold-inquire"])
    return OracleGenerationReport(
        bleu1=bleu(cand_questions, ref_questions, max_n=1),
        bleu4=bleu(cand_questions, ref_questions, max_n=4),
        span_f1=float(np.mean(f1s)) if f1s else None,
        low_overlap_count=sum(f <= 0.5 for f in f1s),
        sentence_id_accuracy=float(np.mean(sentence_hits)) if sentence_hits else None,
        subset_size=len(cand_questions))


def entailment_accuracy(model, labeled_examples, enc_inputs=None) -> float:
    """Macro accuracy of per-sentence entailment states against the
    heuristic labels, flattened over all sentences."""
    preds, golds = [], []
    enc_inputs = enc_inputs or [None] * len(labeled_examples)
    for labeled, enc in zip(labeled_examples, enc_inputs):
        p = model.predict(labeled.example, enc_input=enc)
        preds.extend(p.entail_labels)
        golds.extend(labeled.entailment_labels)
    return macro_accuracy(preds, golds)
