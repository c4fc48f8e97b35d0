"""Trainable sequence encoder producing sentence and token vectors.

The input is one flat token sequence: a marker token in front of every rule
sentence, then markers for the question, the scenario, and each history
turn. Token embeddings plus sinusoidal position encodings pass through one
bidirectional single-head scaled dot-product attention block and a
position-wise feed-forward layer, both with residual connections. The
contextual vector at each marker is that segment's summary vector; the
contextual vectors at rule-text positions are the rule token vectors.

When the sequence exceeds the length cap, whole history turns are dropped
oldest first, then the scenario and finally the question are truncated at
the tail. Rule text is never truncated.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .data import DialogExample

logger = logging.getLogger(__name__)

VOCAB_FORMAT = "rulereader-vocabulary"
VOCAB_VERSION = 1

SEGMENT_RULE = "rule"
SEGMENT_QUESTION = "question"
SEGMENT_SCENARIO = "scenario"
SEGMENT_HISTORY = "history"


class EncoderError(Exception):
    pass


class Vocabulary:
    """Stable token -> id mapping with reserved out-of-vocabulary and
    marker ids. Unknown tokens map to the OOV id, never an error."""

    OOV_TOKEN = "[oov]"
    MARKER_TOKEN = "[marker]"

    def __init__(self, tokens):
        self._id_of = {self.OOV_TOKEN: 0, self.MARKER_TOKEN: 1}
        for t in tokens:
            if t not in self._id_of:
                self._id_of[t] = len(self._id_of)

    @property
    def size(self) -> int:
        return len(self._id_of)

    @property
    def oov_id(self) -> int:
        return 0

    @property
    def marker_id(self) -> int:
        return 1

    def id_of(self, token: str) -> int:
        return self._id_of.get(token, 0)

    def ids_of(self, tokens) -> list[int]:
        return [self._id_of.get(t, 0) for t in tokens]

    @classmethod
    def build(cls, examples) -> "Vocabulary":
        """Collect tokens from examples in deterministic first-seen order."""
        from .text import tokenize

        tokens = []
        for ex in examples:
            for sentence in ex.rule_doc.sentences:
                tokens.extend(sentence.tokens)
            tokens.extend(tokenize(ex.question))
            tokens.extend(tokenize(ex.scenario))
            for turn in list(ex.history) + list(ex.evidence):
                tokens.extend(tokenize(turn.question))
                tokens.append(turn.answer.lower())
            if ex.follow_up:
                tokens.extend(tokenize(ex.follow_up))
        return cls(tokens)

    def save(self, path) -> None:
        ordered = sorted(self._id_of, key=self._id_of.get)
        doc = {"format": VOCAB_FORMAT, "version": VOCAB_VERSION, "tokens": ordered}
        Path(path).write_text(json.dumps(doc))

    @classmethod
    def load(cls, path) -> "Vocabulary":
        doc = json.loads(Path(path).read_text())
        if doc.get("format") != VOCAB_FORMAT or doc.get("version") != VOCAB_VERSION:
            raise EncoderError(f"not a compatible vocabulary file: {path}")
        tokens = doc["tokens"]
        if tokens[:2] != [cls.OOV_TOKEN, cls.MARKER_TOKEN]:
            raise EncoderError("vocabulary file missing reserved tokens")
        return cls(tokens[2:])


@dataclass
class EncodedInput:
    """A flattened dialog ready for the encoder."""

    tokens: list[str]                 # surface tokens, markers included
    token_ids: np.ndarray             # (L,) int64
    marker_positions: list[int]       # one per segment, in segment order
    segment_kinds: list[str]          # parallel to marker_positions
    segment_of_token: np.ndarray      # (L,) segment index per position
    rule_token_positions: np.ndarray  # (T_R,) sequence positions of rule tokens
    token_sentence_index: np.ndarray  # (T_R,) rule sentence index per rule token
    token_within_sentence: np.ndarray  # (T_R,) token index inside its sentence
    num_rule_sentences: int
    num_history_turns: int
    truncated: bool = False

    @property
    def length(self) -> int:
        return len(self.tokens)

    def segment_tokens(self, segment_index: int) -> list[str]:
        """Surface tokens of one segment, marker excluded."""
        mask = self.segment_of_token == segment_index
        return [t for t, m, p in zip(self.tokens, mask, range(len(self.tokens)))
                if m and p != self.marker_positions[segment_index]]


def build_sequence(example: DialogExample, vocab: Vocabulary, max_length: int = 384,
                   include_empty_scenario: bool = True) -> EncodedInput:
    """Flatten an example into the marker-delimited input sequence."""
    from .text import tokenize

    doc = example.rule_doc
    rule_segments = [s.tokens for s in doc.sentences]
    question_tokens = tokenize(example.question)
    scenario_tokens = tokenize(example.scenario)
    history_segments = [tokenize(t.question) + [t.answer.lower()] for t in example.history]

    has_scenario = include_empty_scenario or bool(scenario_tokens)
    rule_len = sum(len(s) + 1 for s in rule_segments)
    if rule_len + 1 > max_length:
        raise EncoderError(f"rule text alone needs {rule_len + 1} positions, cap is {max_length}")

    def total_length() -> int:
        n = rule_len + 1 + len(question_tokens)
        if has_scenario:
            n += 1 + len(scenario_tokens)
        n += sum(len(h) + 1 for h in history_segments)
        return n

    truncated = False
    while total_length() > max_length and history_segments:
        history_segments.pop(0)
        truncated = True
    overflow = total_length() - max_length
    if overflow > 0 and scenario_tokens:
        cut = min(overflow, len(scenario_tokens))
        scenario_tokens = scenario_tokens[: len(scenario_tokens) - cut]
        truncated = True
    overflow = total_length() - max_length
    if overflow > 0:
        question_tokens = question_tokens[: max(0, len(question_tokens) - overflow)]
        truncated = True
    if truncated:
        logger.warning("input over %d positions: dropped history/scenario tail for example %s",
                       max_length, example.example_id or "<unnamed>")

    tokens: list[str] = []
    marker_positions: list[int] = []
    segment_kinds: list[str] = []
    segment_of_token: list[int] = []
    rule_positions: list[int] = []
    sentence_index: list[int] = []
    within_sentence: list[int] = []

    def push_segment(kind: str, segment_tokens: list[str], rule_sentence: int | None = None):
        seg = len(marker_positions)
        marker_positions.append(len(tokens))
        segment_kinds.append(kind)
        tokens.append(Vocabulary.MARKER_TOKEN)
        segment_of_token.append(seg)
        for j, t in enumerate(segment_tokens):
            if rule_sentence is not None:
                rule_positions.append(len(tokens))
                sentence_index.append(rule_sentence)
                within_sentence.append(j)
            tokens.append(t)
            segment_of_token.append(seg)

    for i, seg in enumerate(rule_segments):
        push_segment(SEGMENT_RULE, seg, rule_sentence=i)
    push_segment(SEGMENT_QUESTION, question_tokens)
    if has_scenario:
        push_segment(SEGMENT_SCENARIO, scenario_tokens)
    for seg in history_segments:
        push_segment(SEGMENT_HISTORY, seg)

    ids = np.array([vocab.marker_id if t == Vocabulary.MARKER_TOKEN else vocab.id_of(t) for t in tokens],
                   dtype=np.int64)
    ids[marker_positions] = vocab.marker_id
    return EncodedInput(
        tokens=tokens,
        token_ids=ids,
        marker_positions=marker_positions,
        segment_kinds=segment_kinds,
        segment_of_token=np.array(segment_of_token, dtype=np.int64),
        rule_token_positions=np.array(rule_positions, dtype=np.int64),
        token_sentence_index=np.array(sentence_index, dtype=np.int64),
        token_within_sentence=np.array(within_sentence, dtype=np.int64),
        num_rule_sentences=len(rule_segments),
        num_history_turns=len(history_segments),
        truncated=truncated,
    )


@dataclass
class EncoderBlock:
    """One context-mixing layer: attention with a residual, then a feed-forward
    with a residual, then row standardization."""

    attention_query: ad.Parameter     # (d, d)
    attention_key: ad.Parameter       # (d, d)
    attention_value: ad.Parameter     # (d, d)
    attention_output: ad.Parameter    # (d, d)
    ffn_w1: ad.Parameter              # (h, d)
    ffn_b1: ad.Parameter              # (h,)
    ffn_w2: ad.Parameter              # (d, h)
    ffn_b2: ad.Parameter              # (d,)

    def all(self) -> list[ad.Parameter]:
        return [self.attention_query, self.attention_key,
                self.attention_value, self.attention_output,
                self.ffn_w1, self.ffn_b1, self.ffn_w2, self.ffn_b2]


@dataclass
class EncoderParams:
    token_embedding: ad.Parameter     # (V, d)
    blocks: list[EncoderBlock]

    def all(self) -> list[ad.Parameter]:
        out = [self.token_embedding]
        for block in self.blocks:
            out.extend(block.all())
        return out


_PE_CACHE: dict[tuple[int, int], np.ndarray] = {}


def sinusoidal_positions(length: int, dim: int) -> np.ndarray:
    """Fixed sinusoidal position encodings, cached per (length, dim)."""
    key = (length, dim)
    if key not in _PE_CACHE:
        pos = np.arange(length, dtype=np.float64)[:, None]
        i = np.arange(dim, dtype=np.float64)[None, :]
        angle = pos / np.power(10000.0, (2.0 * (i // 2)) / dim)
        pe = np.where(i % 2 == 0, np.sin(angle), np.cos(angle))
        _PE_CACHE[key] = pe
    return _PE_CACHE[key]


@dataclass
class Encodings:
    """Encoder outputs read out at the positions downstream modules use."""

    rule_keys: ad.Tensor              # (M, d)
    question_state: ad.Tensor         # (d,)
    scenario_state: ad.Tensor | None  # (d,) or None when scenario disabled
    history_states: list[ad.Tensor]   # P tensors of shape (d,)
    rule_tokens: ad.Tensor            # (T_R, d)
    token_sentence_index: np.ndarray = field(repr=False, default=None)
    token_within_sentence: np.ndarray = field(repr=False, default=None)

    def read_states(self) -> list[ad.Tensor]:
        """Tracker read order: question, scenario, then history turns."""
        states = [self.question_state]
        if self.scenario_state is not None:
            states.append(self.scenario_state)
        states.extend(self.history_states)
        return states


def encode_batch(enc_inputs, params: EncoderParams, *, dropout_rate: float = 0.0,
                 train: bool = False, rng: np.random.Generator | None = None,
                 zero_positions: bool = False) -> list[Encodings]:
    """Run the attention block over a pack of inputs, one ``Encodings`` each.

    All sequences share the embedding, projection, and feed-forward matmuls;
    attention stays within each sequence. ``zero_positions`` disables position
    encodings; with them off the block is permutation-equivariant, which the
    diagnostics rely on.
    """
    if not enc_inputs:
        return []
    d = params.token_embedding.data.shape[1]
    lengths = [e.length for e in enc_inputs]
    ids = (enc_inputs[0].token_ids if len(enc_inputs) == 1
           else np.concatenate([e.token_ids for e in enc_inputs]))
    x = ad.rows(params.token_embedding, ids)
    if not zero_positions:
        pos = (sinusoidal_positions(lengths[0], d) if len(enc_inputs) == 1
               else np.concatenate([sinusoidal_positions(n, d) for n in lengths], axis=0))
        x = ad.add(x, pos)

    for block in params.blocks:
        q = ad.matmul_t(x, block.attention_query)
        k = ad.matmul_t(x, block.attention_key)
        v = ad.matmul_t(x, block.attention_value)
        mixed = ad.attention_blocks(q, k, v, lengths, 1.0 / np.sqrt(d))
        x = ad.add(x, ad.matmul_t(mixed, block.attention_output))

        hidden = ad.relu(ad.linear(x, block.ffn_w1, block.ffn_b1))
        x = ad.add(x, ad.linear(hidden, block.ffn_w2, block.ffn_b2))
        # Output scale must stay bounded: downstream memory gates apply a
        # sigmoid to raw dot products and saturate (killing their gradient)
        # if token state norms are free to grow.
        x = ad.standardize_rows(x)

    if train and dropout_rate > 0.0:
        if rng is None:
            raise EncoderError("training-mode encode needs an rng for dropout")
        x = ad.dropout(x, dropout_rate, rng)

    out = []
    offset = 0
    for enc in enc_inputs:
        out.append(_read_out(x, enc, offset))
        offset += enc.length
    return out


def _read_out(x, enc: EncodedInput, offset: int) -> Encodings:
    """Pick one sequence's sentence and token vectors out of the packed rows."""
    # Gather all marker rows once; per-segment reads then address the small
    # (num_segments, d) matrix instead of the full pack.
    positions = np.asarray(enc.marker_positions, dtype=np.int64) + offset
    marker_states = ad.rows(x, positions)
    seg_states = [ad.row(marker_states, i) for i in range(len(enc.marker_positions))]
    by_kind: dict[str, list[ad.Tensor]] = {SEGMENT_RULE: [], SEGMENT_QUESTION: [],
                                           SEGMENT_SCENARIO: [], SEGMENT_HISTORY: []}
    rule_segment_indices = []
    for i, (kind, state) in enumerate(zip(enc.segment_kinds, seg_states)):
        by_kind[kind].append(state)
        if kind == SEGMENT_RULE:
            rule_segment_indices.append(i)

    rule_keys = ad.rows(marker_states, rule_segment_indices)
    rule_tokens = ad.rows(x, enc.rule_token_positions + offset)
    return Encodings(
        rule_keys=rule_keys,
        question_state=by_kind[SEGMENT_QUESTION][0],
        scenario_state=by_kind[SEGMENT_SCENARIO][0] if by_kind[SEGMENT_SCENARIO] else None,
        history_states=by_kind[SEGMENT_HISTORY],
        rule_tokens=rule_tokens,
        token_sentence_index=enc.token_sentence_index,
        token_within_sentence=enc.token_within_sentence,
    )


def encode(enc: EncodedInput, params: EncoderParams, *, dropout_rate: float = 0.0,
           train: bool = False, rng: np.random.Generator | None = None,
           zero_positions: bool = False) -> Encodings:
    """Single-input form of ``encode_batch``."""
    return encode_batch([enc], params, dropout_rate=dropout_rate, train=train,
                        rng=rng, zero_positions=zero_positions)[0]
