"""The session API a client sees, without leaving one process.

Drives the FastAPI app through its test client: create a session, answer
the follow-up questions, and read the trace that the web console renders.
The same endpoints are served for real by ``rulereader serve``.
"""

import json

from fastapi.testclient import TestClient

from _common import train_demo_model
from rulereader.dialog import DialogEngine
from rulereader.service import create_app

RULE = ("To qualify for the village hall grant you must volunteer each week. "
        "You must also keep written records.")

model, _ = train_demo_model(seed=0)
client = TestClient(create_app(DialogEngine(model, max_turns=4)))

resp = client.post("/api/v1/sessions", json={
    "rule_text": RULE,
    "scenario": "",
    "question": "Do I qualify for the village hall grant?",
})
print(f"POST /api/v1/sessions -> {resp.status_code}")
body = resp.json()
session_id = body["session_id"]

while body["trace"]["status"] == "active":
    question = body["trace"]["pending_question"]
    print(f"  asked: \"{question}\"  (answering yes)")
    resp = client.post(f"/api/v1/sessions/{session_id}/answers", json={"answer": "yes"})
    body = resp.json()

print(f"conclusion: {body['trace']['conclusion']}\n")

trace = client.get(f"/api/v1/sessions/{session_id}/trace").json()
print("trace (what the console renders):")
print(json.dumps({k: trace[k] for k in ("status", "conclusion", "sentences")}, indent=2))
print(f"turns: {len(trace['turns'])}, "
      f"entailment rows per turn: {len(trace['turns'][0]['entailment'])}")

# Errors come back as structured JSON, not bare status codes.
bad = client.post(f"/api/v1/sessions/{session_id}/answers", json={"answer": "yes"})
print(f"\nanswering a concluded session -> {bad.status_code} "
      f"{bad.json()['error']['code']}")
