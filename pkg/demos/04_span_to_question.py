"""From unresolved rule text to a follow-up question, step by step.

The coarse stage scores each rule sentence by how unresolved it looks
(zeta). The fine stage scores tokens as span starts and ends inside those
sentences. The chosen span is then rephrased into the question the user
sees. Run against a rule where the scenario already settles one condition:
zeta should concentrate on the other sentence.
"""

import numpy as np

from _common import train_demo_model
from rulereader.data import DialogExample
from rulereader.rephrase import RephraseRequest, TemplateRephraser

RULE = ("To qualify for the rural travel card you must hold a valid permit. "
        "You must also live on a farm.")

model, _ = train_demo_model(seed=0)

example = DialogExample(
    rule_text=RULE,
    question="Do I qualify for the rural travel card?",
    scenario="i hold a valid permit .",
)
p = model.predict(example)

print(f"decision: {p.decision}\n")
print("coarse stage - zeta per rule sentence:")
for i, sent in enumerate(example.rule_doc.sentences):
    bar = "#" * int(round(40 * p.zeta[i]))
    print(f"  s{i} {p.zeta[i]:.3f} [{p.entail_labels[i]:>13}] {bar}")
    print(f"        {sent.text}")

print(f"\nfine stage - extracted span: \"{p.span.text}\" "
      f"(sentence {p.span.sentence_index}, tokens {p.span.token_start}-{p.span.token_end})")

question = TemplateRephraser()(RephraseRequest(span_text=p.span.text))
print(f"rephrased follow-up: \"{question}\"")
