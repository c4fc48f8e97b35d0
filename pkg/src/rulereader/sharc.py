"""Ingestion of the public rule-based dialog dataset release.

Each source record is a JSON object with ``utterance_id``, ``snippet`` (the
rule text), ``question``, ``scenario``, ``history`` and ``evidence`` (lists
of ``follow_up_question``/``follow_up_answer`` pairs), and ``answer``. An
``answer`` of Yes/No/Irrelevant is the decision; any other string is the
follow-up question to ask and the decision is Inquire. Field names are
validated per record and a malformed record aborts ingestion with its id.
"""

from __future__ import annotations

import json
from pathlib import Path

from .data import DialogExample, IngestionError, QATurn

_DECISION_BY_LOWER = {"yes": "Yes", "no": "No", "irrelevant": "Irrelevant"}


def _turns(raw, record_id: str, field_name: str) -> list[QATurn]:
    if not isinstance(raw, list):
        raise IngestionError(f"record {record_id}: {field_name} is not a list")
    turns = []
    for item in raw:
        try:
            q = item["follow_up_question"]
            a = item["follow_up_answer"]
        except (TypeError, KeyError) as exc:
            raise IngestionError(f"record {record_id}: malformed {field_name} entry") from exc
        canonical = _DECISION_BY_LOWER.get(str(a).strip().lower())
        if canonical not in ("Yes", "No"):
            raise IngestionError(f"record {record_id}: {field_name} answer {a!r} is not Yes/No")
        turns.append(QATurn(question=str(q), answer=canonical))
    return turns


def parse_record(record: dict, index: int) -> DialogExample:
    record_id = str(record.get("utterance_id", f"#{index}"))
    try:
        snippet = record["snippet"]
        question = record["question"]
        answer = record["answer"]
    except (TypeError, KeyError) as exc:
        raise IngestionError(f"record {record_id}: missing field {exc}") from exc
    if not isinstance(snippet, str) or not snippet.strip():
        raise IngestionError(f"record {record_id}: empty snippet")
    decision = _DECISION_BY_LOWER.get(str(answer).strip().lower())
    follow_up = None
    if decision is None:
        decision = "Inquire"
        follow_up = str(answer)
    return DialogExample(
        rule_text=snippet,
        question=str(question),
        scenario=str(record.get("scenario", "")),
        history=_turns(record.get("history", []), record_id, "history"),
        decision=decision,
        follow_up=follow_up,
        evidence=_turns(record.get("evidence", []), record_id, "evidence"),
        example_id=record_id,
    )


def load_sharc(path) -> list[DialogExample]:
    """Load one split file into dialog examples."""
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"dataset file not found: {path}")
    try:
        records = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise IngestionError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(records, list):
        raise IngestionError(f"{path}: expected a JSON list of records")
    return [parse_record(r, i) for i, r in enumerate(records)]
