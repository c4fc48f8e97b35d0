"""Sequence layout, vocabulary, truncation, and the encoder's contract."""

from __future__ import annotations

import numpy as np
import pytest

from rulereader.data import DialogExample, QATurn
from rulereader.encoder import (
    EncoderError,
    Vocabulary,
    build_sequence,
    encode,
    encode_batch,
    sinusoidal_positions,
)
from rulereader.model import DialogModel, ModelConfig
from rulereader.synthetic import SyntheticConfig, generate_synthetic
from rulereader.text import tokenize


EXAMPLE = DialogExample(
    rule_text="To qualify for the grant you must keep bees. You must also host a lodger.",
    question="Do I qualify for the grant?",
    scenario="i keep bees .",
    history=[QATurn("Do you host a lodger?", "No")],
)


def small_model(vocab, **overrides) -> DialogModel:
    cfg = ModelConfig(embed_dim=8, ffn_dim=16, **overrides)
    return DialogModel(vocab, cfg, seed=0)


def vocab_for(*examples) -> Vocabulary:
    return Vocabulary.build(list(examples))


# ---------------------------------------------------------------------------
# vocabulary


def test_vocabulary_reserves_oov_and_marker():
    v = Vocabulary(["alpha", "beta", "alpha"])
    assert v.oov_id == 0 and v.marker_id == 1
    assert v.id_of(Vocabulary.OOV_TOKEN) == 0
    assert v.id_of(Vocabulary.MARKER_TOKEN) == 1
    assert v.id_of("alpha") == 2
    assert v.id_of("beta") == 3
    assert v.id_of("never-seen") == 0
    assert v.size == 4


def test_vocabulary_build_is_deterministic_first_seen():
    a = Vocabulary.build([EXAMPLE])
    b = Vocabulary.build([EXAMPLE])
    assert a._id_of == b._id_of
    assert a.id_of("to") == 2  # first rule token comes first


def test_vocabulary_round_trips_through_file(tmp_path):
    v = Vocabulary.build([EXAMPLE])
    path = tmp_path / "vocab.json"
    v.save(path)
    loaded = Vocabulary.load(path)
    assert loaded._id_of == v._id_of


def test_vocabulary_load_rejects_foreign_files(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"format": "something-else", "version": 1, "tokens": []}')
    with pytest.raises(EncoderError, match="compatible"):
        Vocabulary.load(path)


# ---------------------------------------------------------------------------
# sequence layout


def test_marker_count_and_order():
    vocab = vocab_for(EXAMPLE)
    enc = build_sequence(EXAMPLE, vocab)
    # 2 rule sentences + question + scenario + 1 history turn
    assert len(enc.marker_positions) == 5
    assert enc.segment_kinds == ["rule", "rule", "question", "scenario", "history"]
    assert enc.num_rule_sentences == 2
    assert enc.num_history_turns == 1
    assert all(enc.tokens[p] == Vocabulary.MARKER_TOKEN for p in enc.marker_positions)
    assert all(enc.token_ids[p] == vocab.marker_id for p in enc.marker_positions)


def test_empty_scenario_keeps_its_segment_by_default():
    ex = DialogExample(rule_text="You must keep bees.", question="Do I qualify?")
    enc = build_sequence(ex, vocab_for(ex))
    assert enc.segment_kinds == ["rule", "question", "scenario"]
    assert enc.segment_tokens(2) == []


def test_empty_scenario_segment_can_be_disabled():
    ex = DialogExample(rule_text="You must keep bees.", question="Do I qualify?")
    enc = build_sequence(ex, vocab_for(ex), include_empty_scenario=False)
    assert enc.segment_kinds == ["rule", "question"]


def test_segment_tokens_round_trip():
    vocab = vocab_for(EXAMPLE)
    enc = build_sequence(EXAMPLE, vocab)
    doc = EXAMPLE.rule_doc
    assert enc.segment_tokens(0) == doc.sentences[0].tokens
    assert enc.segment_tokens(1) == doc.sentences[1].tokens
    assert enc.segment_tokens(2) == tokenize(EXAMPLE.question)
    assert enc.segment_tokens(3) == tokenize(EXAMPLE.scenario)
    assert enc.segment_tokens(4) == tokenize(EXAMPLE.history[0].question) + ["no"]


def test_rule_token_bookkeeping_is_consistent():
    vocab = vocab_for(EXAMPLE)
    enc = build_sequence(EXAMPLE, vocab)
    doc = EXAMPLE.rule_doc
    assert len(enc.rule_token_positions) == sum(len(s.tokens) for s in doc.sentences)
    for pos, si, wi in zip(enc.rule_token_positions, enc.token_sentence_index,
                           enc.token_within_sentence):
        assert enc.tokens[pos] == doc.sentences[si].tokens[wi]


def test_unknown_tokens_map_to_oov_never_error():
    vocab = vocab_for(EXAMPLE)
    ex = DialogExample(rule_text="You must keep bees.", question="Completely novel words here?")
    enc = build_sequence(ex, vocab)
    q_ids = [enc.token_ids[p] for p in range(len(enc.tokens))
             if enc.segment_of_token[p] == 1 and p != enc.marker_positions[1]]
    assert 0 in q_ids


# ---------------------------------------------------------------------------
# truncation


def long_example(n_turns: int) -> DialogExample:
    return DialogExample(
        rule_text="You must keep bees.",
        question="Do I qualify for the grant?",
        scenario="i keep bees and host a lodger .",
        history=[QATurn(f"Do you keep item {i}?", "Yes") for i in range(n_turns)],
    )


def test_history_drops_oldest_first():
    ex = long_example(6)
    vocab = vocab_for(ex)
    full = build_sequence(ex, vocab, max_length=4096)
    cap = full.length - 1  # force exactly one segment out
    enc = build_sequence(ex, vocab, max_length=cap)
    assert enc.truncated
    assert enc.num_history_turns < 6
    kept = [enc.segment_tokens(i) for i, k in enumerate(enc.segment_kinds) if k == "history"]
    # Newest turns survive.
    expected = [tokenize(t.question) + ["yes"] for t in ex.history[6 - len(kept):]]
    assert kept == expected


def test_scenario_then_question_trimmed_after_history_gone():
    ex = long_example(2)
    vocab = vocab_for(ex)
    rule_len = len(ex.rule_doc.sentences[0].tokens) + 1
    q_len = len(tokenize(ex.question)) + 1
    # Room for rule + question + scenario marker + 2 scenario tokens only.
    cap = rule_len + q_len + 3
    enc = build_sequence(ex, vocab, max_length=cap)
    assert enc.truncated
    assert enc.num_history_turns == 0
    assert enc.segment_tokens(2) == tokenize(ex.scenario)[:2]
    assert enc.segment_tokens(1) == tokenize(ex.question)
    # Tighter still: scenario goes entirely, question loses its tail.
    enc = build_sequence(ex, vocab, max_length=rule_len + q_len - 2)
    assert enc.segment_tokens(1) == tokenize(ex.question)[:-3]
    assert enc.segment_tokens(0) == ex.rule_doc.sentences[0].tokens


def test_rule_text_is_never_truncated():
    ex = long_example(0)
    vocab = vocab_for(ex)
    with pytest.raises(EncoderError, match="rule text alone"):
        build_sequence(ex, vocab, max_length=4)


# ---------------------------------------------------------------------------
# encoding contract


def test_encode_output_shapes():
    vocab = vocab_for(EXAMPLE)
    model = small_model(vocab)
    enc = build_sequence(EXAMPLE, vocab)
    out = encode(enc, model.encoder)
    M = enc.num_rule_sentences
    assert out.rule_keys.data.shape == (M, 8)
    assert out.rule_tokens.data.shape == (len(enc.rule_token_positions), 8)
    assert out.question_state.data.shape == (8,)
    assert out.scenario_state.data.shape == (8,)
    assert len(out.history_states) == 1
    assert np.isfinite(out.rule_keys.data).all()
    assert [s.data.shape for s in out.read_states()] == [(8,), (8,), (8,)]


def test_encode_is_deterministic():
    vocab = vocab_for(EXAMPLE)
    model = small_model(vocab)
    enc = build_sequence(EXAMPLE, vocab)
    a = encode(enc, model.encoder)
    b = encode(enc, model.encoder)
    assert np.array_equal(a.rule_keys.data, b.rule_keys.data)
    assert np.array_equal(a.rule_tokens.data, b.rule_tokens.data)


def test_history_order_changes_encodings():
    ex1 = DialogExample(
        rule_text="You must keep bees.", question="Do I qualify?",
        history=[QATurn("Do you keep bees?", "Yes"), QATurn("Do you host a lodger?", "No")],
    )
    ex2 = DialogExample(
        rule_text="You must keep bees.", question="Do I qualify?",
        history=list(reversed(ex1.history)),
    )
    vocab = vocab_for(ex1, ex2)
    model = small_model(vocab)
    a = encode(build_sequence(ex1, vocab), model.encoder)
    b = encode(build_sequence(ex2, vocab), model.encoder)
    assert not np.allclose(a.question_state.data, b.question_state.data)


def test_rule_sentence_permutation_equivariance_without_positions():
    ex1 = DialogExample(
        rule_text="You must keep bees. You must also host a lodger. You must also paint houses.",
        question="Do I qualify?",
    )
    ex2 = DialogExample(
        rule_text="You must also host a lodger. You must keep bees. You must also paint houses.",
        question="Do I qualify?",
    )
    vocab = vocab_for(ex1, ex2)
    model = small_model(vocab)
    a = encode(build_sequence(ex1, vocab), model.encoder, zero_positions=True)
    b = encode(build_sequence(ex2, vocab), model.encoder, zero_positions=True)
    perm = [1, 0, 2]
    assert np.allclose(a.rule_keys.data[perm], b.rule_keys.data, atol=1e-12)
    assert np.allclose(a.question_state.data, b.question_state.data, atol=1e-12)


def test_encode_batch_matches_single_exactly():
    examples = generate_synthetic(SyntheticConfig(n_examples=12), seed=3)
    vocab = Vocabulary.build(examples)
    model = small_model(vocab)
    encs = [build_sequence(ex, vocab) for ex in examples]
    packed = encode_batch(encs, model.encoder)
    for enc, got in zip(encs, packed):
        one = encode(enc, model.encoder)
        assert np.array_equal(one.rule_keys.data, got.rule_keys.data)
        assert np.array_equal(one.rule_tokens.data, got.rule_tokens.data)
        assert np.array_equal(one.question_state.data, got.question_state.data)


def test_encoder_depth_config_builds_and_runs():
    vocab = vocab_for(EXAMPLE)
    model = small_model(vocab, encoder_depth=2)
    assert len(model.encoder.blocks) == 2
    enc = build_sequence(EXAMPLE, vocab)
    out = encode(enc, model.encoder)
    assert out.rule_keys.data.shape == (2, 8)
    shallow = small_model(vocab, encoder_depth=1)
    base = encode(enc, shallow.encoder)
    assert not np.allclose(out.rule_keys.data, base.rule_keys.data)


def test_positions_are_cached_and_stable():
    a = sinusoidal_positions(12, 8)
    b = sinusoidal_positions(12, 8)
    assert a is b
    assert a.shape == (12, 8)
    assert abs(a[0, 0]) < 1e-12  # sin(0)
    assert abs(a[0, 1] - 1.0) < 1e-12  # cos(0)
