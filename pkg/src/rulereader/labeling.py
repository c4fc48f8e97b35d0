"""Heuristic supervision for span extraction and entailment tracking.

The gold span for a follow-up question is the shortest rule-text span whose
token sequence has minimal edit distance to the trimmed question, with ties
broken toward shorter and then earlier spans. Per-sentence entailment states
come from routing each answered question (evidence first, then dialog turns
in order) to the sentence containing its span: Yes marks Entailment, No
marks Contradiction, and later hits overwrite earlier ones. Sentences no
question touches stay Unknown.
"""

from __future__ import annotations

from .data import DialogExample, QATurn, RuleDocument, Span
from .text import trim_question


def edit_distance(a, b) -> int:
    """Token-level Levenshtein distance (insert, delete, substitute; unit costs)."""
    a, b = list(a), list(b)
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ta in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, tb in enumerate(b, start=1):
            cur[j] = min(cur[j - 1] + 1, prev[j] + 1, prev[j - 1] + (ta != tb))
        prev = cur
    return prev[-1]


def label_span(rule_doc: RuleDocument, follow_up_question: str) -> Span:
    """Best-aligned span for a follow-up question.

    Candidates are all within-sentence token spans; the winner minimizes
    (edit distance to the trimmed question, span length, position).
    """
    query = trim_question(follow_up_question)
    best = None  # (distance, length, sentence_index, start)
    for si, sentence in enumerate(rule_doc.sentences):
        tokens = sentence.tokens
        n = len(tokens)
        for start in range(n):
            # One DP row per added token scores every span that begins at
            # ``start``, so all n^2 spans cost O(n^2 |query|) per sentence.
            prev = list(range(len(query) + 1))
            for end in range(start, n):
                tok = tokens[end]
                length = end - start + 1
                cur = [length] + [0] * len(query)
                for j, q in enumerate(query, start=1):
                    cur[j] = min(cur[j - 1] + 1, prev[j] + 1, prev[j - 1] + (tok != q))
                prev = cur
                key = (cur[-1], length, si, start)
                if best is None or key < best:
                    best = key
    if best is None:
        raise ValueError("rule document has no tokens")
    _, length, si, start = best
    return rule_doc.span_surface(si, start, start + length - 1)


def label_entailment(rule_doc: RuleDocument, history, evidence=()) -> list[str]:
    """Per-sentence entailment states derived from answered questions."""
    labels = ["Unknown"] * rule_doc.num_sentences
    for turn in list(evidence) + list(history):
        span = label_span(rule_doc, turn.question)
        labels[span.sentence_index] = "Entailment" if turn.answer == "Yes" else "Contradiction"
    return labels


def render_evidence_scenario(evidence) -> str:
    """Render question/answer evidence as crude declarative sentences.

    "Do you work in scotland?" answered Yes becomes "i work in scotland ."
    and answered No becomes "i do not work in scotland .". A leading "you"
    in the trimmed question is absorbed into the first person subject.
    """
    sentences = []
    for turn in evidence:
        words = trim_question(turn.question)
        if words and words[0] == "you":
            words = words[1:]
        prefix = ["i"] if turn.answer == "Yes" else ["i", "do", "not"]
        sentences.append(" ".join(prefix + words) + " .")
    return " ".join(sentences)


def augment(example: DialogExample) -> list[DialogExample]:
    """Evidence-substitution augmentation.

    For an example with evidence, emit one copy whose scenario is the
    evidence rendered as declaratives; the target decision and follow-up
    question are untouched. Examples without evidence yield nothing.
    """
    if not example.evidence:
        return []
    new = DialogExample(
        rule_text=example.rule_text,
        question=example.question,
        scenario=render_evidence_scenario(example.evidence),
        history=list(example.history),
        decision=example.decision,
        follow_up=example.follow_up,
        evidence=[QATurn(t.question, t.answer) for t in example.evidence],
        example_id=(example.example_id + ":aug") if example.example_id else None,
    )
    return [new]


def augment_corpus(examples) -> list[DialogExample]:
    """Originals followed by their augmented copies, order preserved."""
    out = list(examples)
    for ex in examples:
        out.extend(augment(ex))
    return out


def label_example(example: DialogExample) -> "LabeledExample":
    """Attach entailment labels and, for Inquire targets, the gold span."""
    from .data import LabeledExample

    doc = example.rule_doc
    labels = label_entailment(doc, example.history, example.evidence)
    span = label_span(doc, example.follow_up) if example.decision == "Inquire" else None
    return LabeledExample(example=example, entailment_labels=labels, span=span)


def label_corpus(examples) -> list:
    return [label_example(ex) for ex in examples]
