"""Turning an extracted rule span into a follow-up question.

The default generator is a deterministic template engine. The template is
chosen by the span's first token: "you" yields "Do <span>?", a known verb
yields "Do you <span>?", a known complement of "be" yields "Are you <span>?",
and anything else falls back to "Is it true that <span>?". The word lists and
templates ship as an editable data file. Alternative generators can be
registered by name, so evaluation and the dialog service can swap engines
without code changes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .data import Span


class RephraseError(Exception):
    pass


@dataclass(frozen=True)
class RephraseRequest:
    """What a generator gets to work with: the span and its context."""

    span_text: str
    sentence_text: str = ""
    rule_text: str = ""

    def __post_init__(self):
        if not self.span_text.strip():
            raise RephraseError("empty span")


def _load_data() -> dict:
    with resources.files("rulereader").joinpath("rephrase_data.json").open() as f:
        data = json.load(f)
    if data.get("version") != 1:
        raise RephraseError(f"unsupported rephrase data version {data.get('version')!r}")
    return data


class TemplateRephraser:
    """The default deterministic template engine."""

    def __init__(self, data: dict | None = None):
        data = data or _load_data()
        self.templates = data["templates"]
        self.verbs = frozenset(data["verbs"])
        self.be_complements = frozenset(data["be_complements"])

    def __call__(self, request: RephraseRequest) -> str:
        from .text import tokenize

        span = request.span_text.strip()
        first = (tokenize(span) or [""])[0]
        if first == "you":
            template = self.templates["second_person"]
        elif first in self.verbs:
            template = self.templates["verb_initial"]
        elif first in self.be_complements:
            template = self.templates["be_complement"]
        else:
            template = self.templates["fallback"]
        question = template.format(span=span)
        question = question.rstrip("?") + "?"
        return question[:1].upper() + question[1:]


_REGISTRY: dict[str, object] = {}


def register_rephraser(name: str, factory) -> None:
    """Register a generator factory (a zero-argument callable)."""
    _REGISTRY[name] = factory


def get_rephraser(name: str = "template"):
    """Instantiate a registered generator by name."""
    if name not in _REGISTRY:
        raise RephraseError(f"no rephraser named {name!r}; known: {sorted(_REGISTRY)}")
    return _REGISTRY[name]()


register_rephraser("template", TemplateRephraser)


def rephrase_span(span: Span, sentence_text: str = "", rule_text: str = "",
                  rephraser=None) -> str:
    rephraser = rephraser or TemplateRephraser()
    return rephraser(RephraseRequest(span_text=span.text, sentence_text=sentence_text, rule_text=rule_text))
