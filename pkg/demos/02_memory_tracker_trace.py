"""Watching the memory update as user information arrives.

One rule, three turns. Each turn adds information (a scenario statement,
then an answered follow-up) and the per-sentence entailment states shift
from Unknown toward Entailment until the model can conclude. The gate
column shows how strongly each read wrote into each rule sentence's memory
slot.
"""

from _common import train_demo_model
from rulereader.data import DialogExample, QATurn

RULE = ("To qualify for the winter fuel payment you must earn under the limit. "
        "You must also work in scotland.")
QUESTION = "Do I qualify for the winter fuel payment?"

model, _ = train_demo_model(seed=0)

turns = [
    ("turn 1: question only", DialogExample(
        rule_text=RULE, question=QUESTION)),
    ("turn 2: scenario covers one condition", DialogExample(
        rule_text=RULE, question=QUESTION,
        scenario="i earn under the limit .")),
    ("turn 3: follow-up answered yes", DialogExample(
        rule_text=RULE, question=QUESTION,
        scenario="i earn under the limit .",
        history=[QATurn(question="Do you work in scotland?", answer="Yes")])),
]

for title, example in turns:
    p = model.predict(example)
    print(f"--- {title}")
    print(f"decision: {p.decision}   "
          + "  ".join(f"{k}={v:.2f}" for k, v in p.decision_probabilities.items()))
    for i, (sent, label) in enumerate(zip(example.rule_doc.sentences, p.entail_labels)):
        gates = " ".join(f"{g[i]:.2f}" for g in p.gates)
        print(f"  s{i} [{label:>13}] gates({gates})  {sent.text}")
    if p.decision == "Inquire":
        print(f"  would ask about: \"{p.span.text}\"")
    print()

print("gate columns are one value per read: question, scenario, then one per history turn.")
