"""Interactive clarification sessions over one frozen model.

A session starts from rule text, an optional scenario, and the user's
question. Each turn runs the full pipeline: a Yes/No/Irrelevant decision
concludes the session; Inquire extracts the underspecified span, asks the
rephrased question, and waits for an answer. Answers append to the history
and the pipeline reruns. A session that would ask more than ``max_turns``
questions aborts instead. Concluded and aborted are terminal.

Every turn records a full trace: decision probabilities, per-sentence
entailment probabilities, the gate activations of every memory read, and
the extracted span with character offsets, so a console can show why the
model asked what it asked.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field

from .data import DECISIONS, DialogExample, QATurn
from .rephrase import RephraseRequest, TemplateRephraser
from .text import segment_rules

TRACE_SCHEMA_VERSION = 1

STATUS_ACTIVE = "active"
STATUS_CONCLUDED = "concluded"
STATUS_ABORTED = "aborted"

_YES_WORDS = frozenset({"yes", "y", "yeah", "yep", "true", "correct"})
_NO_WORDS = frozenset({"no", "n", "nope", "false", "incorrect"})


class DialogError(Exception):
    pass


class SessionStateError(DialogError):
    """Operation not allowed in the session's current status."""


class UnparseableAnswerError(DialogError):
    pass


def parse_answer(text: str) -> str:
    word = text.strip().strip(".!").lower()
    if word in _YES_WORDS:
        return "Yes"
    if word in _NO_WORDS:
        return "No"
    raise UnparseableAnswerError(f"cannot read {text!r} as yes or no")


@dataclass
class TurnRecord:
    index: int
    decision: str
    decision_probabilities: dict[str, float]
    entailment: list[list[float]]         # M rows of [entail, contradict, unknown]
    entailment_labels: list[str]
    gates: list[list[float]]              # one row per memory read
    span: dict | None
    follow_up_question: str | None
    answer: str | None = None
    diagnostic: str | None = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "decision": self.decision,
            "decision_probabilities": self.decision_probabilities,
            "entailment": self.entailment,
            "entailment_labels": self.entailment_labels,
            "gates": self.gates,
            "span": self.span,
            "follow_up_question": self.follow_up_question,
            "answer": self.answer,
            "diagnostic": self.diagnostic,
        }


@dataclass
class Session:
    session_id: str
    rule_text: str
    scenario: str
    question: str
    max_turns: int
    status: str = STATUS_ACTIVE
    conclusion: str | None = None
    history: list[QATurn] = field(default_factory=list)
    turns: list[TurnRecord] = field(default_factory=list)
    pending_question: str | None = None

    @property
    def questions_asked(self) -> int:
        return len(self.history) + (1 if self.pending_question else 0)


class DialogEngine:
    """Runs sessions over a predictor with the model's interface."""

    def __init__(self, model, rephraser=None, max_turns: int = 8):
        if max_turns < 1:
            raise DialogError(f"max_turns must be positive, got {max_turns}")
        self.model = model
        self.rephraser = rephraser or TemplateRephraser()
        self.max_turns = max_turns

    def start_session(self, rule_text: str, scenario: str = "", question: str = "") -> Session:
        if not question.strip():
            raise DialogError("a session needs an initial question")
        segment_rules(rule_text)  # validates non-empty rule text
        session = Session(session_id=uuid.uuid4().hex, rule_text=rule_text,
                          scenario=scenario, question=question, max_turns=self.max_turns)
        self._run_turn(session)
        return session

    def step(self, session: Session, answer_text: str) -> TurnRecord:
        if session.status != STATUS_ACTIVE:
            raise SessionStateError(f"session is {session.status}, not active")
        if session.pending_question is None:
            raise SessionStateError("no question is pending")
        answer = parse_answer(answer_text)
        session.turns[-1].answer = answer
        session.history.append(QATurn(session.pending_question, answer))
        session.pending_question = None
        return self._run_turn(session)

    def _run_turn(self, session: Session) -> TurnRecord:
        example = DialogExample(rule_text=session.rule_text, question=session.question,
                                scenario=session.scenario, history=list(session.history))
        prediction = self.model.predict(example)
        record = TurnRecord(
            index=len(session.turns),
            decision=prediction.decision,
            decision_probabilities={k: float(v) for k, v in prediction.decision_probabilities.items()},
            entailment=[[float(x) for x in row] for row in prediction.entail_probabilities],
            entailment_labels=list(prediction.entail_labels),
            gates=[[float(x) for x in g] for g in prediction.gates],
            span=prediction.span.to_dict() if prediction.span else None,
            follow_up_question=None,
        )
        if prediction.decision == "Inquire":
            if len(session.history) >= self.max_turns:
                session.status = STATUS_ABORTED
                record.diagnostic = (f"asked {len(session.history)} questions without a conclusion; "
                                     f"cap is {self.max_turns}")
            else:
                sentence_text = example.rule_doc.sentences[prediction.span.sentence_index].text
                question = self.rephraser(RephraseRequest(span_text=prediction.span.text,
                                                          sentence_text=sentence_text,
                                                          rule_text=session.rule_text))
                record.follow_up_question = question
                session.pending_question = question
        else:
            session.status = STATUS_CONCLUDED
            session.conclusion = prediction.decision
        session.turns.append(record)
        return record

    def get_trace(self, session: Session) -> dict:
        doc = segment_rules(session.rule_text)
        return {
            "schema_version": TRACE_SCHEMA_VERSION,
            "session_id": session.session_id,
            "status": session.status,
            "conclusion": session.conclusion,
            "rule_text": session.rule_text,
            "scenario": session.scenario,
            "question": session.question,
            "max_turns": session.max_turns,
            "sentences": [
                {"index": i, "text": s.text, "char_start": s.char_start, "char_end": s.char_end}
                for i, s in enumerate(doc.sentences)
            ],
            "pending_question": session.pending_question,
            "turns": [t.to_dict() for t in session.turns],
        }
