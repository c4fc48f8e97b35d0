"""Smoke tests for the command-line interface.

Fast paths (generate, predict, parser wiring) run in-process through
``cli.main``. Training paths use miniature dimensions so the whole file
stays in the seconds range; the serve test spawns a real subprocess and
talks HTTP to it.
"""

from __future__ import annotations

import json
import socket
import subprocess
import sys
import time

import httpx
import pytest

from rulereader.cli import build_parser, main
from rulereader.data import LabeledExample, load_corpus
from rulereader.model import DialogModel
from rulereader.rephrase import RephraseError

TINY_TRAIN = {
    "embed_dim": 16,
    "ffn_dim": 32,
    "epochs": 2,
    "batch_size": 8,
    "seeds": [0],
    "dropout": 0.0,
    "use_data_augmentation": False,
}


def test_parser_exposes_all_subcommands():
    parser = build_parser()
    sub = next(a for a in parser._actions if hasattr(a, "choices") and a.choices)
    assert {"train", "eval", "ablate", "predict", "repl", "serve", "generate"} <= set(sub.choices)


def test_generate_writes_loadable_corpus(tmp_path, capsys):
    out = tmp_path / "corpus.json"
    assert main(["generate", "--synthetic-size", "40", "--out", str(out)]) == 0
    assert "wrote 40 examples" in capsys.readouterr().out
    loaded = load_corpus(out)
    assert len(loaded) == 40
    assert not isinstance(loaded[0], LabeledExample)
    assert loaded[0].rule_text and loaded[0].question


def test_generate_labeled_corpus(tmp_path):
    out = tmp_path / "labeled.json"
    main(["generate", "--synthetic-size", "25", "--labeled", "--out", str(out)])
    loaded = load_corpus(out)
    assert len(loaded) == 25
    assert isinstance(loaded[0], LabeledExample)
    assert loaded[0].entailment_labels


def test_train_writes_model_dir(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(TINY_TRAIN))
    out = tmp_path / "model"
    code = main(["train", "--synthetic-size", "60", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    for name in ("checkpoint.json", "config.json", "vocab.json", "metrics.jsonl", "train_config.json"):
        assert (out / name).exists(), name
    summary = json.loads(capsys.readouterr().out)
    assert "dev_micro" in summary["final"]
    # The saved directory must load back into a usable model.
    model = DialogModel.load(out)
    saved_cfg = json.loads((out / "train_config.json").read_text())
    assert saved_cfg["epochs"] == 2
    assert model.config.embed_dim == 16


def test_train_flag_overrides(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(TINY_TRAIN))
    out = tmp_path / "model"
    main(["train", "--synthetic-size", "60", "--config", str(cfg), "--out", str(out),
          "--epochs", "1", "--seeds", "3"])
    capsys.readouterr()
    saved = json.loads((out / "train_config.json").read_text())
    assert saved["epochs"] == 1
    assert saved["seeds"] == [3]
    assert json.loads((out / "config.json").read_text())["seed"] == 3


def test_eval_end_to_end_writes_report(competent_model_dir, tmp_path, capsys):
    report_path = tmp_path / "report.json"
    code = main(["eval", "--model", str(competent_model_dir), "--synthetic-size", "200",
                 "--synthetic-seed", "11", "--out", str(report_path)])
    assert code == 0
    table = capsys.readouterr().out
    assert "micro" in table.lower()
    report = json.loads(report_path.read_text())
    assert 0.0 <= report["micro"] <= 1.0
    assert 0.0 <= report["entailment_macro"] <= 1.0
    assert report["protocol"] == "end_to_end"


def test_eval_oracle_protocol(competent_model_dir, tmp_path):
    report_path = tmp_path / "oracle.json"
    main(["eval", "--model", str(competent_model_dir), "--synthetic-size", "200",
          "--synthetic-seed", "11", "--protocol", "oracle_qg", "--out", str(report_path)])
    report = json.loads(report_path.read_text())
    assert report["protocol"] == "oracle_generation"
    assert "span_f1" in report


def test_eval_reads_saved_corpus(competent_model_dir, tmp_path):
    corpus = tmp_path / "dev.json"
    main(["generate", "--synthetic-size", "30", "--labeled", "--out", str(corpus)])
    report_path = tmp_path / "report.json"
    code = main(["eval", "--model", str(competent_model_dir), "--corpus", str(corpus),
                 "--out", str(report_path)])
    assert code == 0
    assert json.loads(report_path.read_text())["total"] == 30


def test_eval_rejects_unknown_rephraser(competent_model_dir, tmp_path):
    with pytest.raises(RephraseError, match="no rephraser"):
        main(["eval", "--model", str(competent_model_dir), "--synthetic-size", "60",
              "--rephraser", "bogus"])


def test_predict_reports_decision_and_span(competent_model_dir, tmp_path, capsys, fixture_corpus):
    saw_inquire = False
    # Root turns of the fixture corpus: the trained model should route at
    # least one to Inquire and then attach a generated follow-up question.
    roots = [ex for ex in fixture_corpus if ex.decision == "Inquire" and not ex.history][:10]
    assert roots
    for i, example in enumerate(roots):
        path = tmp_path / f"ex{i}.json"
        path.write_text(json.dumps(example.to_dict()))
        main(["predict", "--model", str(competent_model_dir), "--input", str(path)])
        out = json.loads(capsys.readouterr().out)
        assert out["decision"] in ("Yes", "No", "Irrelevant", "Inquire")
        assert abs(sum(out["decision_probabilities"].values()) - 1.0) < 1e-9
        assert set(out["span"]) >= {"sentence_index", "token_start", "token_end", "text"}
        if out["decision"] == "Inquire":
            saw_inquire = True
            assert out["follow_up_question"].endswith("?")
            assert out["span"]["text"]
            break
    assert saw_inquire


def test_repl_runs_a_session(competent_model_dir, fixture_corpus, capsys, monkeypatch):
    example = next(ex for ex in fixture_corpus if ex.decision == "Yes" and not ex.history)
    feed = iter([*example.rule_text.splitlines(), "", example.scenario, example.question,
                 "yes", "yes", "yes", "yes"])
    monkeypatch.setattr("builtins.input", lambda *args: next(feed))
    code = main(["repl", "--model", str(competent_model_dir), "--max-turns", "3"])
    assert code == 0
    out = capsys.readouterr().out
    assert "Decision:" in out or "Session aborted:" in out


def _free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_serve_answers_http(competent_model_dir, fixture_corpus):
    port = _free_port()
    proc = subprocess.Popen(
        [sys.executable, "-m", "rulereader", "serve", "--model", str(competent_model_dir),
         "--port", str(port)],
        stdout=subprocess.PIPE, stderr=subprocess.STDOUT)
    base = f"http://127.0.0.1:{port}/api/v1"
    try:
        deadline = time.monotonic() + 30
        while True:
            try:
                if httpx.get(f"{base}/health", timeout=1.0).status_code == 200:
                    break
            except httpx.TransportError:
                if time.monotonic() > deadline:
                    raise
                time.sleep(0.2)
        example = fixture_corpus[0]
        resp = httpx.post(f"{base}/sessions", timeout=30.0, json={
            "rule_text": example.rule_text,
            "scenario": example.scenario,
            "question": example.question,
        })
        assert resp.status_code == 201
        body = resp.json()
        assert body["trace"]["status"] in ("active", "concluded")
        trace = httpx.get(f"{base}/sessions/{body['session_id']}/trace", timeout=30.0)
        assert trace.status_code == 200
        assert trace.json()["schema_version"] == 1
    finally:
        proc.terminate()
        proc.wait(timeout=10)


def test_ablate_smoke(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({**TINY_TRAIN, "epochs": 1}))
    out = tmp_path / "ablation.json"
    code = main(["ablate", "--synthetic-size", "40", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    table = capsys.readouterr().out
    assert "full" in table and "no_tracker" in table
    doc = json.loads(out.read_text())
    variants = {row["variant"] for row in doc["rows"]}
    assert {"full", "no_tracker", "no_coarse_to_fine"} <= variants
