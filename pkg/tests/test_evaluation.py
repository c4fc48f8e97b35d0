"""Metrics and the two scoring protocols, checked against hand counts."""

from __future__ import annotations

import numpy as np
import pytest

from rulereader.data import DialogExample, QATurn
from rulereader.evaluation import (
    EvaluationError,
    bleu,
    classwise_accuracy,
    end_to_end_eval,
    entailment_accuracy,
    macro_accuracy,
    micro_accuracy,
    oracle_qg_eval,
)
from rulereader.labeling import label_example
from rulereader.rephrase import TemplateRephraser

# ---------------------------------------------------------------------------
# accuracy metrics

def test_micro_accuracy_counts_exact_matches():
    assert micro_accuracy(["Yes", "No"], ["Yes", "Yes"]) == 0.5
    assert micro_accuracy(["a", "b", "c"], ["a", "b", "c"]) == 1.0


def test_macro_accuracy_averages_per_class_recall():
    # Yes recall 1/2, No recall 1/1 -> (0.5 + 1.0) / 2.
    golds = ["Yes", "Yes", "No"]
    preds = ["Yes", "No", "No"]
    assert macro_accuracy(preds, golds) == pytest.approx(0.75)
    # Classes absent from the golds do not enter the average.
    assert macro_accuracy(["Yes"], ["Yes"]) == 1.0


def test_classwise_accuracy_reports_present_classes_only():
    golds = ["Yes", "No", "No", "Inquire"]
    preds = ["Yes", "No", "Yes", "Inquire"]
    out = classwise_accuracy(preds, golds)
    assert out == {"Yes": 1.0, "No": 0.5, "Inquire": 1.0}
    assert "Irrelevant" not in out


def test_accuracy_input_validation():
    for fn in (micro_accuracy, macro_accuracy):
        with pytest.raises(EvaluationError):
            fn(["a"], ["a", "b"])
        with pytest.raises(EvaluationError):
            fn([], [])


# ---------------------------------------------------------------------------
# BLEU against hand-worked values

def test_bleu_identity_is_one():
    assert bleu(["do you keep bees ?"], ["do you keep bees ?"], max_n=1) == pytest.approx(1.0)
    assert bleu(["do you keep bees ?"], ["do you keep bees ?"], max_n=4) == pytest.approx(1.0)


def test_bleu1_two_of_three_unigrams():
    # Matched unigrams a, b out of three; equal lengths so no brevity penalty.
    assert bleu(["a b c"], ["a b d"], max_n=1) == pytest.approx(2.0 / 3.0, abs=1e-4)


def test_bleu1_brevity_penalty():
    # Perfect precision but a short candidate: BP = exp(1 - 3/2).
    assert bleu(["a b"], ["a b c"], max_n=1) == pytest.approx(np.exp(-0.5), abs=1e-9)


def test_bleu4_geometric_mean_of_orders():
    # Precisions 4/5, 3/4, 2/3, 1/2; their product is 0.2 and BP is 1.
    got = bleu(["a b c d e"], ["a b c d f"], max_n=4)
    assert got == pytest.approx(0.2 ** 0.25, abs=1e-9)


def test_bleu_pools_counts_over_the_corpus():
    # Corpus-level pooling: (2+0)/(2+1) -> 2/3, not the mean of per-pair
    # scores (which would be 0.5).
    assert bleu(["a b", "c"], ["a b", "d"], max_n=1) == pytest.approx(2.0 / 3.0)


def test_bleu_clips_repeated_ngrams():
    # "a a a" against "a": only one clipped match; candidate is longer so
    # no brevity penalty applies.
    assert bleu(["a a a"], ["a"], max_n=1) == pytest.approx(1.0 / 3.0)


def test_bleu_zero_without_smoothing_and_floor_with():
    assert bleu(["a b"], ["a c"], max_n=4, smooth=False) == 0.0
    # Smoothed orders 2..4 get an add-one floor: (1/2 * 1/2 * 1 * 1)^(1/4).
    got = bleu(["a b"], ["a c"], max_n=4, smooth=True)
    assert got == pytest.approx(0.25 ** 0.25, abs=1e-9)


def test_bleu_accepts_pretokenized_lists():
    assert bleu([["a", "b", "c"]], [["a", "b", "d"]], max_n=1) == pytest.approx(2.0 / 3.0, abs=1e-4)


def test_bleu_input_validation():
    with pytest.raises(EvaluationError):
        bleu(["a"], ["a", "b"])
    with pytest.raises(EvaluationError):
        bleu([], [])
    with pytest.raises(EvaluationError):
        bleu(["a"], ["a"], max_n=0)


# ---------------------------------------------------------------------------
# protocol conformance with a scripted model

RULE = "To qualify for the grant you must keep bees. You must also rent your home."

EXAMPLES = [
    DialogExample(RULE, "Do I qualify for the grant?", "", [],
                  decision="Inquire", follow_up="Do you keep bees?",
                  evidence=[], example_id="inq-hit"),
    DialogExample(RULE, "Do I qualify for the grant?", "i keep bees .",
                  [QATurn("Do you keep bees?", "Yes")],
                  decision="Inquire", follow_up="Do you rent your home?",
                  evidence=[QATurn("Do you keep bees?", "Yes")], example_id="inq-missed"),
    DialogExample(RULE, "Do I qualify for the grant?", "",
                  [QATurn("Do you keep bees?", "Yes"), QATurn("Do you rent your home?", "Yes")],
                  decision="Yes", follow_up=None, evidence=[], example_id="yes"),
    DialogExample(RULE, "Do I qualify for the grant?", "i do not keep bees .", [],
                  decision="No", follow_up=None,
                  evidence=[QATurn("Do you keep bees?", "No")], example_id="no"),
    DialogExample(RULE, "Do I qualify for the travel pass?", "i paint houses .", [],
                  decision="Irrelevant", follow_up=None, evidence=[], example_id="irr"),
]

LABELED = [label_example(ex) for ex in EXAMPLES]


class ScriptedModel:
    """Fixed predictions keyed by example id; only what the protocols read."""

    def __init__(self, decisions, spans):
        self.decisions = decisions
        self.spans = spans

    def predict(self, example, enc_input=None):
        doc = example.rule_doc
        span = doc.span_surface(*self.spans.get(example.example_id, (0, 0, 0)))

        class P:
            pass

        p = P()
        p.decision = self.decisions[example.example_id]
        p.span = span
        p.entail_labels = ["Unknown"] * doc.num_sentences
        return p


# Sentence 0 tokens: to qualify for the grant you must keep bees .
# Sentence 1 tokens: you must also rent your home .
KEEP_BEES = (0, 7, 8)
RENT_HOME = (1, 3, 5)


def scripted():
    return ScriptedModel(
        decisions={"inq-hit": "Inquire", "inq-missed": "No", "yes": "Yes",
                   "no": "No", "irr": "Inquire"},
        spans={"inq-hit": KEEP_BEES, "inq-missed": RENT_HOME, "irr": KEEP_BEES},
    )


def test_end_to_end_scores_every_example():
    report = end_to_end_eval(scripted(), LABELED, TemplateRephraser())
    # Hand count: inq-hit, yes, no correct; inq-missed and irr wrong.
    assert report.total == 5
    assert report.micro == pytest.approx(3 / 5)
    # Recalls: Inquire 1/2, Yes 1/1, No 1/1, Irrelevant 0/1.
    assert report.macro == pytest.approx((0.5 + 1.0 + 1.0 + 0.0) / 4)
    assert report.classwise == {"Yes": 1.0, "No": 1.0,
                                "Irrelevant": 0.0, "Inquire": 0.5}


def test_end_to_end_bleu_uses_the_mutual_inquire_subset_only():
    report = end_to_end_eval(scripted(), LABELED, TemplateRephraser())
    # Only inq-hit has gold Inquire and predicted Inquire. Its span text
    # "keep bees" rephrases to exactly the gold follow-up, so BLEU is 1.
    assert report.mutual_inquire_count == 1
    assert report.bleu1 == pytest.approx(1.0)
    assert report.bleu4 == pytest.approx(1.0)
    assert report.flags == []


def test_end_to_end_flags_an_empty_mutual_subset():
    model = scripted()
    model.decisions = dict.fromkeys(model.decisions, "No")
    report = end_to_end_eval(model, LABELED, TemplateRephraser())
    assert report.bleu1 is None and report.bleu4 is None
    assert report.mutual_inquire_count == 0
    assert "no-mutual-inquire" in report.flags


def test_oracle_protocol_generates_for_every_gold_inquire():
    report = oracle_qg_eval(scripted(), LABELED, TemplateRephraser())
    # Both gold Inquire examples are generated for, even though the model
    # routed inq-missed to No.
    assert report.subset_size == 2
    # inq-hit points at "keep bees" (gold) and inq-missed at "rent your
    # home" (gold), so both questions match their references exactly.
    assert report.bleu1 == pytest.approx(1.0)
    assert report.span_f1 == pytest.approx(1.0)
    assert report.sentence_id_accuracy == pytest.approx(1.0)
    assert report.low_overlap_count == 0


def test_oracle_protocol_scores_span_overlap():
    model = scripted()
    # Point inq-missed at the wrong sentence: its span F1 drops to zero.
    model.spans["inq-missed"] = KEEP_BEES
    report = oracle_qg_eval(model, LABELED, TemplateRephraser())
    assert report.span_f1 == pytest.approx(0.5)
    assert report.sentence_id_accuracy == pytest.approx(0.5)
    assert report.low_overlap_count == 1
    # The generated question no longer matches its reference exactly.
    assert report.bleu1 < 1.0


def test_oracle_protocol_with_no_gold_inquire():
    subset = [lab for lab in LABELED if lab.example.decision == "Yes"]
    report = oracle_qg_eval(scripted(), subset, TemplateRephraser())
    assert report.subset_size == 0
    assert report.bleu1 is None
    assert "no-gold-inquire" in report.flags


def test_entailment_accuracy_against_scripted_labels():
    # The scripted model always answers Unknown; the single-sentence rule
    # subset where that is the gold label scores 1.
    subset = [lab for lab in LABELED if set(lab.entailment_labels) == {"Unknown"}]
    assert subset
    assert entailment_accuracy(scripted(), subset) == 1.0


def test_report_serialization_and_tables():
    e2e = end_to_end_eval(scripted(), LABELED, TemplateRephraser())
    d = e2e.to_dict()
    assert d["protocol"] == "end_to_end"
    assert d["micro"] == e2e.micro
    assert "micro accuracy" in e2e.format_table()
    assert e2e.classwise_series().splitlines()[0] == "class\trecall"

    oracle = oracle_qg_eval(scripted(), LABELED, TemplateRephraser())
    od = oracle.to_dict()
    assert od["protocol"] == "oracle_generation"
    assert "BLEU-1" in oracle.format_table()
