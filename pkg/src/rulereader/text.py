"""Tokenization, rule segmentation, and question trimming.

Tokens are lowercased; alphanumeric runs stay together and every punctuation
character is its own token. Rule text is segmented into sentences: bullet
lines (``*``, ``-``, a bullet dot, or numbered markers) are one sentence
each, a list's lead-in clause is its own sentence, and remaining prose is
split at sentence-final punctuation.
"""

from __future__ import annotations

import re

from .data import EmptyDocumentError, RuleDocument, RuleSentence

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)
_BULLET_RE = re.compile(r"^(\s*)(\*|-|•|\d+[.)])\s+")
_SENTENCE_END_RE = re.compile(r"[.!?]+(?=\s|$)")

# Leading auxiliaries stripped when reducing a question to its content words.
QUESTION_WORDS = ("do", "does", "did", "is", "was", "are", "have")


def tokenize(text: str) -> list[str]:
    """Lowercased tokens: alphanumeric runs and single punctuation marks."""
    return _TOKEN_RE.findall(text.lower())


def tokenize_with_offsets(text: str) -> tuple[list[str], list[tuple[int, int]]]:
    """Tokens plus their (start, end) character offsets into ``text``."""
    tokens, offsets = [], []
    for m in _TOKEN_RE.finditer(text.lower()):
        tokens.append(m.group(0))
        offsets.append((m.start(), m.end()))
    return tokens, offsets


def trim_question(question: str) -> list[str]:
    """Tokenize a question, dropping leading auxiliaries and every '?'."""
    tokens = [t for t in tokenize(question) if t != "?"]
    while tokens and tokens[0] in QUESTION_WORDS:
        tokens = tokens[1:]
    return tokens


def _make_sentence(raw_text: str, start: int, end: int, is_bullet: bool) -> RuleSentence | None:
    segment = raw_text[start:end]
    stripped = segment.strip()
    if not stripped:
        return None
    lead = len(segment) - len(segment.lstrip())
    trail = len(segment) - len(segment.rstrip())
    s, e = start + lead, end - trail
    text = raw_text[s:e]
    tokens, rel_offsets = tokenize_with_offsets(text)
    if not tokens:
        return None
    offsets = [(s + a, s + b) for a, b in rel_offsets]
    return RuleSentence(text=text, tokens=tokens, token_offsets=offsets, char_start=s, char_end=e, is_bullet=is_bullet)


def _split_prose(raw_text: str, start: int, end: int) -> list[RuleSentence]:
    sentences = []
    cursor = start
    block = raw_text[start:end]
    for m in _SENTENCE_END_RE.finditer(block):
        sent = _make_sentence(raw_text, cursor, start + m.end(), is_bullet=False)
        if sent:
            sentences.append(sent)
        cursor = start + m.end()
    if cursor < end:
        sent = _make_sentence(raw_text, cursor, end, is_bullet=False)
        if sent:
            sentences.append(sent)
    return sentences


def segment_rules(text: str) -> RuleDocument:
    """Split rule text into an ordered, non-overlapping sentence list.

    Raises EmptyDocumentError when no sentence remains after segmentation.
    """
    sentences: list[RuleSentence] = []
    pos = 0
    prose_start: int | None = None

    def flush_prose(upto: int):
        nonlocal prose_start
        if prose_start is not None:
            sentences.extend(_split_prose(text, prose_start, upto))
            prose_start = None

    for line in text.splitlines(keepends=True):
        line_start = pos
        pos += len(line)
        content = line.rstrip("\n")
        m = _BULLET_RE.match(content)
        if m:
            flush_prose(line_start)
            sent = _make_sentence(text, line_start + m.end(), line_start + len(content), is_bullet=True)
            if sent:
                sentences.append(sent)
        elif content.strip():
            if prose_start is None:
                prose_start = line_start
        else:
            flush_prose(line_start)
    flush_prose(len(text))

    if not sentences:
        raise EmptyDocumentError("rule text contains no sentences")
    return RuleDocument(raw_text=text, sentences=sentences)
