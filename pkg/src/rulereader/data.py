"""Core data types for rule documents and dialog examples.

A dialog example pairs one rule document with an initial question, an
optional scenario, and zero or more clarification turns, plus the target
decision and (for Inquire targets) the gold follow-up question. Evidence
holds scenario-derived question/answer pairs used for labeling and for
data augmentation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

DECISIONS = ("Yes", "No", "Irrelevant", "Inquire")
ENTAILMENT_STATES = ("Entailment", "Contradiction", "Unknown")

CORPUS_FORMAT = "rulereader-corpus"
CORPUS_VERSION = 1


class CorpusError(Exception):
    pass


class EmptyDocumentError(CorpusError):
    """Rule text contains no sentences."""


class IngestionError(CorpusError):
    """A source record could not be converted into an example."""


@dataclass(frozen=True)
class Span:
    """A contiguous token range within one rule sentence.

    ``token_start``/``token_end`` are inclusive indices into the sentence's
    token list; ``char_start``/``char_end`` index into the raw rule text.
    ``text`` is the surface form covered by the tokens.
    """

    sentence_index: int
    token_start: int
    token_end: int
    text: str
    char_start: int = -1
    char_end: int = -1

    def __post_init__(self):
        if self.token_start > self.token_end or self.token_start < 0:
            raise CorpusError(f"bad span bounds [{self.token_start}, {self.token_end}]")

    def to_dict(self) -> dict:
        return {
            "sentence_index": self.sentence_index,
            "token_start": self.token_start,
            "token_end": self.token_end,
            "text": self.text,
            "char_start": self.char_start,
            "char_end": self.char_end,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Span":
        return cls(**d)


@dataclass
class RuleSentence:
    text: str
    tokens: list[str]
    token_offsets: list[tuple[int, int]]  # absolute offsets into the document
    char_start: int
    char_end: int
    is_bullet: bool = False


@dataclass
class RuleDocument:
    raw_text: str
    sentences: list[RuleSentence]

    @property
    def num_sentences(self) -> int:
        return len(self.sentences)

    def all_tokens(self) -> list[str]:
        out = []
        for s in self.sentences:
            out.extend(s.tokens)
        return out

    def span_surface(self, sentence_index: int, token_start: int, token_end: int) -> Span:
        """Build a Span with character offsets and surface text filled in."""
        s = self.sentences[sentence_index]
        if not (0 <= token_start <= token_end < len(s.tokens)):
            raise CorpusError(f"span [{token_start}, {token_end}] outside sentence of {len(s.tokens)} tokens")
        cs = s.token_offsets[token_start][0]
        ce = s.token_offsets[token_end][1]
        return Span(sentence_index, token_start, token_end, self.raw_text[cs:ce], cs, ce)


@dataclass(frozen=True)
class QATurn:
    question: str
    answer: str  # "Yes" or "No"

    def to_dict(self) -> dict:
        return {"question": self.question, "answer": self.answer}

    @classmethod
    def from_dict(cls, d: dict) -> "QATurn":
        return cls(question=d["question"], answer=d["answer"])


@dataclass
class DialogExample:
    rule_text: str
    question: str
    scenario: str = ""
    history: list[QATurn] = field(default_factory=list)
    decision: str | None = None
    follow_up: str | None = None
    evidence: list[QATurn] = field(default_factory=list)
    example_id: str | None = None
    _rule_doc: RuleDocument | None = field(default=None, repr=False, compare=False)

    @property
    def rule_doc(self) -> RuleDocument:
        if self._rule_doc is None:
            from .text import segment_rules

            self._rule_doc = segment_rules(self.rule_text)
        return self._rule_doc

    def validate(self) -> None:
        if self.decision is not None and self.decision not in DECISIONS:
            raise CorpusError(f"unknown decision {self.decision!r}")
        if self.decision == "Inquire" and not self.follow_up:
            raise CorpusError("Inquire target requires a follow-up question")
        if self.decision in ("Yes", "No", "Irrelevant") and self.follow_up:
            raise CorpusError(f"decision {self.decision} must not carry a follow-up question")
        for t in self.history + self.evidence:
            if t.answer not in ("Yes", "No"):
                raise CorpusError(f"turn answer must be Yes or No, got {t.answer!r}")

    def to_dict(self) -> dict:
        return {
            "rule_text": self.rule_text,
            "question": self.question,
            "scenario": self.scenario,
            "history": [t.to_dict() for t in self.history],
            "decision": self.decision,
            "follow_up": self.follow_up,
            "evidence": [t.to_dict() for t in self.evidence],
            "example_id": self.example_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DialogExample":
        return cls(
            rule_text=d["rule_text"],
            question=d["question"],
            scenario=d.get("scenario", ""),
            history=[QATurn.from_dict(t) for t in d.get("history", [])],
            decision=d.get("decision"),
            follow_up=d.get("follow_up"),
            evidence=[QATurn.from_dict(t) for t in d.get("evidence", [])],
            example_id=d.get("example_id"),
        )


@dataclass
class LabeledExample:
    """An example plus derived supervision: per-sentence entailment states
    and (for Inquire targets) the gold span of the follow-up question."""

    example: DialogExample
    entailment_labels: list[str]
    span: Span | None

    def to_dict(self) -> dict:
        return {
            "example": self.example.to_dict(),
            "entailment_labels": self.entailment_labels,
            "span": self.span.to_dict() if self.span else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LabeledExample":
        return cls(
            example=DialogExample.from_dict(d["example"]),
            entailment_labels=list(d["entailment_labels"]),
            span=Span.from_dict(d["span"]) if d.get("span") else None,
        )


def save_corpus(examples, path) -> None:
    """Write examples (plain or labeled) as a versioned JSON corpus file."""
    items = []
    labeled = False
    for ex in examples:
        if isinstance(ex, LabeledExample):
            labeled = True
            items.append(ex.to_dict())
        else:
            items.append(ex.to_dict())
    doc = {"format": CORPUS_FORMAT, "version": CORPUS_VERSION, "labeled": labeled, "examples": items}
    Path(path).write_text(json.dumps(doc))


def load_corpus(path):
    """Read a corpus file written by ``save_corpus``."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CorpusError(f"unreadable corpus {path}: {exc}") from exc
    if doc.get("format") != CORPUS_FORMAT:
        raise CorpusError(f"not a corpus file: format={doc.get('format')!r}")
    if doc.get("version") != CORPUS_VERSION:
        raise CorpusError(f"unsupported corpus version {doc.get('version')!r}")
    if doc.get("labeled"):
        return [LabeledExample.from_dict(d) for d in doc["examples"]]
    return [DialogExample.from_dict(d) for d in doc["examples"]]
