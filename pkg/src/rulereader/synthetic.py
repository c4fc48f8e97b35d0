"""Deterministic synthetic corpus of conjunctive and disjunctive rules.

Each generated rule names a benefit and states one condition per sentence;
the first sentence also carries the benefit name and the logic marker
("you must" chains for conjunctions, "you can also get it if" chains for
disjunctions). A scenario settles some conditions in first-person
declaratives (mirrored exactly by the example's evidence turns); the
remaining ones are resolved by asking, in sentence order, and every node of
the resulting dialog tree becomes one example. Decisions follow directly
from the condition truth table:

  conjunction: any settled-False condition -> No; all True -> Yes; else
  Inquire about the first unsettled condition. Disjunction mirrors this
  (any True -> Yes, all False -> No).

Each tree may also emit one Irrelevant example, built the way off-topic
items arise in crowd-sourced reading corpora: the question and scenario are
transplanted from an unrelated dialog. The transplanted question names a
foreign benefit (word-disjoint from the rule's content words) and the
scenario discusses two or three of that benefit's conditions, none of which
the rule mentions, so nothing is settled and evidence stays empty.

Condition phrases are kept pairwise at token edit distance >= 2 so that
evidence and follow-up questions match exactly one rule sentence. Topic
names carry three content words each so on-topic and transplanted
questions are well separated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DialogExample, QATurn

_CONDITIONS = [
    "hold a valid permit", "own a small business", "rent your home",
    "care for a child", "earn under the limit", "claim another benefit",
    "keep written records", "run a licensed stall", "pay business rates",
    "serve in the reserves", "grow produce for sale", "host a lodger",
    "work in scotland", "live on a farm", "study part time",
    "volunteer each week", "teach evening classes", "train young apprentices",
    "trade at local markets", "fish in coastal waters", "drive a licensed taxi",
    "repair your own roof", "heat with oil", "commute across the border",
    "sell at auction", "keep bees", "bake for market",
    "weave wool cloth", "guide hill walks", "prune fruit trees",
    "paint houses", "deliver groceries",
]
_TOPICS = [
    "the winter fuel payment", "the housing support grant", "the rural travel card",
    "the student hardship fund", "the family carer allowance", "the energy saving discount",
    "the street trader licence", "the crofting land subsidy", "the adult training bursary",
    "the village hall grant",
]

_SCENARIO_YES = ["i {c} .", "i currently {c} .", "i certainly {c} ."]
_SCENARIO_NO = ["i do not {c} .", "i never {c} .", "i no longer {c} ."]
_SCENARIO_GOAL = "i want to apply for {t} ."

# Whether non-empty scenarios open with the goal statement. Off: the memory
# has a single scenario read, and opener tokens dilute the condition signal
# it carries. Topic identity reaches the model through the question instead.
_USE_GOAL_OPENER = False
# How many condition statements a transplanted scenario carries
# (rng.integers bounds, so (2, 4) draws 2 or 3). One statement is too weak
# a cue for the question's foreign topic to be recognized reliably.
_FOREIGN_STATEMENTS = (2, 4)

# Words too common to count as content overlap when picking the foreign
# conditions for a transplanted (Irrelevant) scenario.
_FILLER_WORDS = {"a", "an", "the", "of", "you", "your", "with", "in", "on",
                 "for", "at", "to"}


def condition_phrase_pool(n: int) -> list[str]:
    """First ``n`` condition phrases from the fixed pool."""
    if n > len(_CONDITIONS):
        raise ValueError(f"at most {len(_CONDITIONS)} condition phrases available, asked for {n}")
    return _CONDITIONS[:n]


def topic_pool(n: int) -> list[str]:
    if n > len(_TOPICS):
        raise ValueError(f"at most {len(_TOPICS)} topics available, asked for {n}")
    return _TOPICS[:n]


@dataclass
class SyntheticConfig:
    """Knobs for the generator.

    ``scenario_profile`` gives the probabilities that a rule's scenario
    mentions none of the conditions, states exactly one, or describes all of
    them. Fully covered scenarios settle the dialog at the first turn; when
    one is drawn, the condition values are forced all-True half the time so
    scenario-only Yes conclusions stay well represented.
    """

    n_examples: int = 1000
    conditions_per_rule: tuple[int, int] = (2, 4)
    logic: str = "mixed"  # "conjunction", "disjunction", or "mixed"
    scenario_profile: tuple[float, float, float] = (0.45, 0.35, 0.20)
    irrelevant_fraction: float = 0.14
    n_condition_phrases: int = 30
    n_topics: int = 8

    def __post_init__(self):
        lo, hi = self.conditions_per_rule
        if not 1 <= lo <= hi:
            raise ValueError(f"bad conditions_per_rule {self.conditions_per_rule}")
        if self.logic not in ("conjunction", "disjunction", "mixed"):
            raise ValueError(f"unknown logic {self.logic!r}")
        profile = self.scenario_profile
        if len(profile) != 3 or any(p < 0.0 for p in profile) or abs(sum(profile) - 1.0) > 1e-9:
            raise ValueError(f"scenario_profile must be 3 probabilities summing to 1, got {profile}")


def _condition_question(phrase: str) -> str:
    return f"Do you {phrase}?"


def _rule_text(topic: str, conjunctive: bool, phrases: list[str]) -> str:
    if conjunctive:
        sentences = [f"To qualify for {topic} you must {phrases[0]}."]
        sentences += [f"You must also {p}." for p in phrases[1:]]
    else:
        sentences = [f"You can get {topic} if you {phrases[0]}."]
        sentences += [f"You can also get it if you {p}." for p in phrases[1:]]
    return " ".join(sentences)


def _decide(conjunctive: bool, settled: list[bool | None]) -> tuple[str, int | None]:
    """Decision for a partially settled condition list, plus the sentence
    index to ask about next when the decision is Inquire."""
    if conjunctive:
        if any(v is False for v in settled):
            return "No", None
        if all(v is True for v in settled):
            return "Yes", None
    else:
        if any(v is True for v in settled):
            return "Yes", None
        if all(v is False for v in settled):
            return "No", None
    return "Inquire", settled.index(None)


@dataclass
class _Tree:
    examples: list[DialogExample]


def _generate_tree(rng: np.random.Generator, config: SyntheticConfig, phrases, topics, tree_id: int) -> _Tree:
    lo, hi = config.conditions_per_rule
    m = int(rng.integers(lo, hi + 1))
    if config.logic == "mixed":
        conjunctive = bool(rng.integers(0, 2))
    else:
        conjunctive = config.logic == "conjunction"
    topic = topics[int(rng.integers(0, len(topics)))]
    conds = [phrases[i] for i in rng.choice(len(phrases), size=m, replace=False)]

    settled: list[bool | None] = [None] * m
    covered: list[int] = []
    shape = rng.random()
    p_none, p_single = config.scenario_profile[0], config.scenario_profile[1]
    if shape < p_none:
        pass
    elif shape < p_none + p_single:
        covered = [int(rng.integers(0, m))]
    else:
        covered = list(range(m))
    all_true = len(covered) == m and bool(rng.integers(0, 2))
    scenario_parts, evidence = [], []
    for i in covered:
        value = True if all_true else bool(rng.integers(0, 2))
        settled[i] = value
        pool = _SCENARIO_YES if value else _SCENARIO_NO
        scenario_parts.append(pool[int(rng.integers(0, len(pool)))].format(c=conds[i]))
        evidence.append(QATurn(_condition_question(conds[i]), "Yes" if value else "No"))
    # Optional goal opener naming the benefit; settles no condition.
    if scenario_parts and _USE_GOAL_OPENER:
        scenario_parts.insert(0, _SCENARIO_GOAL.format(t=topic))
    scenario = " ".join(scenario_parts)

    rule_text = _rule_text(topic, conjunctive, conds)
    question = f"Do I qualify for {topic}?"
    examples: list[DialogExample] = []
    counter = [0]

    def emit(history: list[QATurn], decision: str, follow_up: str | None):
        examples.append(
            DialogExample(
                rule_text=rule_text,
                question=question,
                scenario=scenario,
                history=list(history),
                decision=decision,
                follow_up=follow_up,
                evidence=list(evidence),
                example_id=f"t{tree_id}-n{counter[0]}",
            )
        )
        counter[0] += 1

    def walk(state: list[bool | None], history: list[QATurn]):
        decision, ask = _decide(conjunctive, state)
        if decision != "Inquire":
            emit(history, decision, None)
            return
        follow_up = _condition_question(conds[ask])
        emit(history, "Inquire", follow_up)
        for answer in (True, False):
            next_state = list(state)
            next_state[ask] = answer
            walk(next_state, history + [QATurn(follow_up, "Yes" if answer else "No")])

    walk(settled, [])

    # One off-topic example per tree, drawn so Irrelevant makes up roughly
    # ``irrelevant_fraction`` of the flattened corpus. Question and scenario
    # are transplanted from an unrelated dialog: both name a foreign benefit,
    # the scenario statements describe conditions this rule never mentions,
    # and nothing is settled, so the evidence list is empty.
    if rng.random() < config.irrelevant_fraction * len(examples):
        rule_words = set(topic.split())
        for c in conds:
            rule_words |= set(c.split())
        candidates = [t for t in topics
                      if not (set(t.split()) - _FILLER_WORDS) & rule_words]
        if not candidates:
            candidates = [t for t in topics if t != topic]
        other = candidates[int(rng.integers(0, len(candidates)))]
        foreign = [p for p in phrases
                   if not (set(p.split()) - _FILLER_WORDS) & rule_words]
        if len(foreign) < 2:
            foreign = [p for p in phrases if p not in conds]
        n_foreign = int(rng.integers(*_FOREIGN_STATEMENTS))
        parts = [_SCENARIO_GOAL.format(t=other)] if _USE_GOAL_OPENER else []
        for i in rng.choice(len(foreign), size=n_foreign, replace=False):
            pool = _SCENARIO_YES if rng.integers(0, 2) else _SCENARIO_NO
            parts.append(pool[int(rng.integers(0, len(pool)))].format(c=foreign[i]))
        examples.append(
            DialogExample(
                rule_text=rule_text,
                question=f"Do I qualify for {other}?",
                scenario=" ".join(parts),
                history=[],
                decision="Irrelevant",
                follow_up=None,
                evidence=[],
                example_id=f"t{tree_id}-irrelevant",
            )
        )
    return _Tree(examples)


def generate_trees(config: SyntheticConfig, seed: int, n_examples: int) -> list[_Tree]:
    """Whole dialog trees totalling at least ``n_examples`` examples."""
    rng = np.random.default_rng(seed)
    phrases = condition_phrase_pool(config.n_condition_phrases)
    topics = topic_pool(config.n_topics)
    trees, total = [], 0
    while total < n_examples:
        tree = _generate_tree(rng, config, phrases, topics, tree_id=len(trees))
        trees.append(tree)
        total += len(tree.examples)
    return trees


def generate_synthetic(config: SyntheticConfig, seed: int) -> list[DialogExample]:
    """Exactly ``config.n_examples`` examples, deterministic in ``seed``."""
    trees = generate_trees(config, seed, config.n_examples)
    out = []
    for t in trees:
        out.extend(t.examples)
    return out[: config.n_examples]


def standard_corpus(seed: int = 0, n_train: int = 5000, n_dev: int = 500,
                    config: SyntheticConfig | None = None):
    """The standard benchmark split: train and dev drawn from disjoint trees."""
    config = config or SyntheticConfig()
    trees = generate_trees(config, seed, int((n_train + n_dev) * 1.15) + 50)
    train: list[DialogExample] = []
    dev_pool: list[DialogExample] = []
    for tree in trees:
        if len(train) < n_train:
            train.extend(tree.examples)
        else:
            dev_pool.extend(tree.examples)
    if len(train) < n_train or len(dev_pool) < n_dev:
        raise RuntimeError("tree generation under-produced; widen the margin")
    return train[:n_train], dev_pool[:n_dev]
