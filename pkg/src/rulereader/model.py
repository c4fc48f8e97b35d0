"""Full dialog model: encode, track, decide, and point at the gap.

The model owns all parameters, assembles the forward graph for one example,
computes the combined training loss, and produces structured predictions.
Ablation switches live in the config: tracking can be bypassed, the coarse
sentence stage can be dropped from span scoring, the entailment subtask can
be removed, and the alternative sentence-identification mode can replace the
Unknown-logit coarse stage.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import decision as dec
from . import spans as sp
from . import tracker as tr
from .checkpoint import load_parameter_arrays, save_parameters
from .data import DECISIONS, DialogExample, LabeledExample, Span
from .encoder import (EncodedInput, EncoderBlock, EncoderParams, Encodings,
                      Vocabulary, build_sequence, encode, encode_batch)


class ModelError(Exception):
    pass


@dataclass
class ModelConfig:
    embed_dim: int = 64
    ffn_dim: int = 128
    encoder_depth: int = 1
    max_sequence_length: int = 384
    dropout: float = 0.1
    use_tracker: bool = True
    use_coarse_to_fine: bool = True
    use_entailment_loss: bool = True
    sentence_head_mode: bool = False  # dedicated sentence scorer instead of Unknown logits
    include_empty_scenario: bool = True
    normalize_keys: bool = True

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


@dataclass
class ForwardPass:
    enc_input: EncodedInput
    encodings: Encodings
    memory: tr.MemoryState
    summary: ad.Tensor
    attention: ad.Tensor
    decision_logits: ad.Tensor
    entail_logits: ad.Tensor
    zeta: ad.Tensor | None
    sentence_logits: ad.Tensor | None  # only in sentence-head mode
    gamma: ad.Tensor
    delta: ad.Tensor


@dataclass
class Prediction:
    decision: str
    decision_probabilities: dict[str, float]
    entail_probabilities: np.ndarray  # (M, 3)
    entail_labels: list[str]
    zeta: np.ndarray | None
    span: Span
    gates: list[np.ndarray]
    attention: np.ndarray


def _softmax(x: np.ndarray, axis=-1) -> np.ndarray:
    e = np.exp(x - x.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


def _xavier(rng: np.random.Generator, shape) -> np.ndarray:
    fan_out, fan_in = (shape[0], shape[-1]) if len(shape) == 2 else (1, shape[0])
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class DialogModel:
    """Parameters plus the per-example computation."""

    def __init__(self, vocab: Vocabulary, config: ModelConfig, seed: int = 0):
        self.vocab = vocab
        self.config = config
        self.seed = seed
        rng = np.random.default_rng(seed)
        self._dropout_rng = np.random.default_rng(rng.integers(0, 2**63 - 1))
        d, h = config.embed_dim, config.ffn_dim

        def p(name, shape, init="xavier"):
            if init == "zeros":
                data = np.zeros(shape)
            elif init == "embedding":
                data = rng.normal(0.0, 0.5, size=shape)
            elif init == "scaled_identity":
                # Near-identity queries/keys seed two useful attention motifs:
                # matching repeated content words across segments (e . e') and
                # a local window around each position (pos . pos' peaks at a
                # zero offset for sinusoidal encodings). Pure Xavier starts
                # from diffuse attention and rarely escapes it at this scale.
                data = 0.7 * np.eye(shape[0]) + _xavier(rng, shape) * 0.1
            else:
                data = _xavier(rng, shape)
            return ad.Parameter(name, data)

        if config.encoder_depth < 1:
            raise ModelError(f"encoder_depth must be >= 1, got {config.encoder_depth}")
        blocks = []
        for b in range(config.encoder_depth):
            pre = f"encoder.block{b}."
            blocks.append(EncoderBlock(
                attention_query=p(pre + "attention_query", (d, d), "scaled_identity"),
                attention_key=p(pre + "attention_key", (d, d), "scaled_identity"),
                attention_value=p(pre + "attention_value", (d, d)),
                attention_output=p(pre + "attention_output", (d, d)),
                ffn_w1=p(pre + "ffn_w1", (h, d)),
                ffn_b1=p(pre + "ffn_b1", (h,), "zeros"),
                ffn_w2=p(pre + "ffn_w2", (d, h)),
                ffn_b2=p(pre + "ffn_b2", (d,), "zeros"),
            ))
        self.encoder = EncoderParams(
            token_embedding=p("encoder.token_embedding", (vocab.size, d), "embedding"),
            blocks=blocks,
        )
        self.tracker = tr.TrackerParams(
            w_key=p("tracker.w_key", (d, d)),
            w_value=p("tracker.w_value", (d, d)),
            w_state=p("tracker.w_state", (d, d)),
        )
        self.heads = dec.DecisionParams(
            w_attention=p("decision.w_attention", (2 * d,)),
            b_attention=p("decision.b_attention", (), "zeros"),
            w_decide=p("decision.w_decide", (4, 2 * d)),
            b_decide=p("decision.b_decide", (4,), "zeros"),
            w_entail=p("decision.w_entail", (3, 2 * d)),
            b_entail=p("decision.b_entail", (3,), "zeros"),
        )
        self.span_head = sp.SpanParams(
            w_start=p("span.w_start", (d,)),
            w_end=p("span.w_end", (d,)),
        )
        self.sentence_head = None
        if config.sentence_head_mode:
            self.sentence_head = sp.SentenceHeadParams(
                w_sentence=p("span.w_sentence", (2 * d,)),
                b_sentence=p("span.b_sentence", (), "zeros"),
            )

    def parameters(self) -> list[ad.Parameter]:
        params = (self.encoder.all() + self.tracker.all() + self.heads.all() + self.span_head.all())
        if self.sentence_head is not None:
            params += self.sentence_head.all()
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise ModelError("duplicate parameter names")
        return params

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def prepare(self, example: DialogExample) -> EncodedInput:
        return build_sequence(example, self.vocab, self.config.max_sequence_length,
                              self.config.include_empty_scenario)

    def forward(self, example: DialogExample, *, train: bool = False,
                enc_input: EncodedInput | None = None) -> ForwardPass:
        enc_input = enc_input or self.prepare(example)
        encodings = encode(enc_input, self.encoder, dropout_rate=self.config.dropout,
                           train=train, rng=self._dropout_rng)
        return self._heads(enc_input, encodings)

    def _heads(self, enc_input: EncodedInput, encodings: Encodings) -> ForwardPass:
        """Tracker, decision, entailment, and span stages over one encoding."""
        cfg = self.config
        if cfg.use_tracker:
            memory = tr.init_memory(encodings.rule_keys, cfg.normalize_keys)
            # Keys and values are unit rows but raw encoder states have norm
            # sqrt(d); fed as-is they pin every update gate against 1 where
            # its gradient vanishes. Scale reads to unit norm to keep the
            # gate's sigmoid in its responsive range.
            scale = 1.0 / np.sqrt(cfg.embed_dim)
            reads = [ad.scale(s, scale) for s in encodings.read_states()]
            memory = tr.track(memory, reads, self.tracker)
        else:
            memory = tr.bypass_memory(encodings.rule_keys)

        summary, attention = dec.summarize(memory, self.heads)
        decision_logits = dec.decide(summary, self.heads)
        entail_logits = dec.entail_scores(memory, self.heads)

        sentence_logits = None
        if cfg.sentence_head_mode:
            if self.sentence_head is None:
                raise ModelError("sentence-head mode enabled without its parameters")
            sentence_logits = sp.sentence_head_logits(memory, self.sentence_head)
            zeta = ad.softmax(sentence_logits)
        elif cfg.use_coarse_to_fine and cfg.use_entailment_loss:
            zeta = sp.sentence_scores(entail_logits)
        else:
            # Coarse stage removed: token scores pass through unmodulated.
            zeta = None

        gamma, delta = sp.span_scores(encodings.rule_tokens, encodings.token_sentence_index,
                                      zeta, self.span_head)
        return ForwardPass(enc_input=enc_input, encodings=encodings, memory=memory,
                           summary=summary, attention=attention,
                           decision_logits=decision_logits, entail_logits=entail_logits,
                           zeta=zeta, sentence_logits=sentence_logits, gamma=gamma, delta=delta)

    def _gold_global_span(self, fp: ForwardPass, span: Span) -> tuple[int, int]:
        sent = fp.encodings.token_sentence_index
        within = fp.encodings.token_within_sentence
        match_start = np.flatnonzero((sent == span.sentence_index) & (within == span.token_start))
        match_end = np.flatnonzero((sent == span.sentence_index) & (within == span.token_end))
        if not len(match_start) or not len(match_end):
            raise ModelError(f"gold span {span} not addressable in the encoded sequence")
        return int(match_start[0]), int(match_end[0])

    def _example_loss(self, fp: ForwardPass, labeled: LabeledExample,
                      lambda_entail: float, lambda_span: float) -> tuple[ad.Tensor, dict]:
        example = labeled.example
        loss_dec = dec.decision_loss(fp.decision_logits, example.decision)

        loss_aux = None
        if self.config.sentence_head_mode:
            if example.decision == "Inquire":
                if labeled.span is None:
                    raise ModelError("Inquire example lacks a gold span")
                loss_aux = sp.sentence_identification_loss(fp.sentence_logits, labeled.span.sentence_index)
        elif self.config.use_entailment_loss:
            loss_aux = dec.entail_loss(fp.entail_logits, labeled.entailment_labels)

        loss_span = None
        if example.decision == "Inquire":
            if labeled.span is None:
                raise ModelError("Inquire example lacks a gold span")
            gs, ge = self._gold_global_span(fp, labeled.span)
            loss_span = sp.span_loss(fp.gamma, fp.delta, gs, ge)

        total = sp.total_loss(loss_dec, loss_aux, loss_span, lambda_entail, lambda_span)
        parts = {
            "decision": loss_dec.item(),
            "auxiliary": loss_aux.item() if loss_aux is not None else 0.0,
            "span": loss_span.item() if loss_span is not None else 0.0,
            "total": total.item(),
        }
        return total, parts

    def loss(self, labeled: LabeledExample, lambda_entail: float = 10.0,
             lambda_span: float = 0.6, *, train: bool = True,
             enc_input: EncodedInput | None = None) -> tuple[ad.Tensor, dict]:
        """Combined loss for one labeled example, plus per-term values."""
        if labeled.example.decision is None:
            raise ModelError("training requires a target decision")
        fp = self.forward(labeled.example, train=train, enc_input=enc_input)
        return self._example_loss(fp, labeled, lambda_entail, lambda_span)

    def loss_batch(self, labeled_batch, lambda_entail: float = 10.0,
                   lambda_span: float = 0.6, *, train: bool = True,
                   enc_inputs=None) -> tuple[ad.Tensor, list[dict]]:
        """Mean combined loss over a batch sharing one packed encoder pass."""
        labeled_batch = list(labeled_batch)
        if not labeled_batch:
            raise ModelError("empty batch")
        for lab in labeled_batch:
            if lab.example.decision is None:
                raise ModelError("training requires a target decision")
        if enc_inputs is None:
            enc_inputs = [self.prepare(lab.example) for lab in labeled_batch]
        all_encodings = encode_batch(enc_inputs, self.encoder, dropout_rate=self.config.dropout,
                                     train=train, rng=self._dropout_rng)
        total = None
        parts = []
        for lab, enc_input, encodings in zip(labeled_batch, enc_inputs, all_encodings):
            fp = self._heads(enc_input, encodings)
            one, p = self._example_loss(fp, lab, lambda_entail, lambda_span)
            parts.append(p)
            total = one if total is None else ad.add(total, one)
        return ad.scale(total, 1.0 / len(labeled_batch)), parts

    def predict(self, example: DialogExample, enc_input: EncodedInput | None = None) -> Prediction:
        """Inference for one example: decision, entailment states, span."""
        with ad.no_grad():
            fp = self.forward(example, train=False, enc_input=enc_input)
        z = fp.decision_logits.data
        probs = _softmax(z)
        entail_probs = _softmax(fp.entail_logits.data, axis=1)
        sent_i, start, end, _, _ = sp.extract(fp.gamma, fp.delta,
                                              fp.encodings.token_sentence_index,
                                              fp.encodings.token_within_sentence)
        span = example.rule_doc.span_surface(sent_i, start, end)
        return Prediction(
            decision=dec.decision_from_logits(z),
            decision_probabilities={c: float(p) for c, p in zip(DECISIONS, probs)},
            entail_probabilities=entail_probs,
            entail_labels=dec.entail_labels_from_logits(fp.entail_logits),
            zeta=fp.zeta.data.copy() if fp.zeta is not None else None,
            span=span,
            gates=[g.copy() for g in fp.memory.gate_log],
            attention=fp.attention.data.copy(),
        )

    # Persistence: a model directory holds the checkpoint, config, and vocabulary.

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        save_parameters(self.parameters(), directory / "checkpoint.json")
        (directory / "config.json").write_text(json.dumps({"model": self.config.to_dict(), "seed": self.seed}))
        self.vocab.save(directory / "vocab.json")

    @classmethod
    def load(cls, directory) -> "DialogModel":
        directory = Path(directory)
        meta = json.loads((directory / "config.json").read_text())
        vocab = Vocabulary.load(directory / "vocab.json")
        model = cls(vocab, ModelConfig.from_dict(meta["model"]), seed=meta.get("seed", 0))
        arrays = load_parameter_arrays(directory / "checkpoint.json")
        for p in model.parameters():
            if p.name not in arrays:
                raise ModelError(f"checkpoint missing parameter {p.name!r}")
            if arrays[p.name].shape != p.data.shape:
                raise ModelError(f"parameter {p.name!r} shape mismatch")
            p.data = arrays[p.name]
        return model
