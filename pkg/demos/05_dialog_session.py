"""A complete clarification dialog, driven by the session engine.

The engine owns the turn loop: it predicts, asks when the decision is
Inquire, folds each answer into the history, and concludes when the rules
are settled. The scripted "user" below just answers yes to everything.
"""

from _common import train_demo_model
from rulereader.dialog import DialogEngine

RULE = ("To qualify for the student hardship fund you must study part time. "
        "You must also claim another benefit.")

model, _ = train_demo_model(seed=0)
engine = DialogEngine(model, max_turns=4)

session = engine.start_session(
    rule_text=RULE,
    scenario="",
    question="Do I qualify for the student hardship fund?",
)

print(f"user: {session.question}")
while session.status == "active":
    print(f"system: {session.pending_question}")
    print("user: yes")
    engine.step(session, "yes")

if session.status == "concluded":
    print(f"system: {session.conclusion}")
else:
    print(f"aborted: {session.turns[-1].diagnostic}")

print(f"\n{len(session.turns)} turns, {len(session.history)} question(s) answered")
print("\nper-turn record from the trace:")
for turn in engine.get_trace(session)["turns"]:
    span = turn.get("span")
    extra = f" span=\"{span['text']}\"" if span else ""
    print(f"  turn {turn['index']}: decision={turn['decision']}{extra}")
