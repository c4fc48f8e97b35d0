"""Command-line entry points: train, eval, ablate, predict, repl, serve."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .data import DialogExample, load_corpus, save_corpus
from .dialog import DialogEngine, UnparseableAnswerError
from .evaluation import end_to_end_eval, entailment_accuracy, oracle_qg_eval
from .labeling import label_corpus
from .model import DialogModel
from .rephrase import get_rephraser
from .synthetic import SyntheticConfig, generate_synthetic, standard_corpus
from .training import TrainConfig, prepare_data, run_ablation, train

logger = logging.getLogger(__name__)


def _load_examples(args) -> list:
    if args.corpus:
        loaded = load_corpus(args.corpus)
        return [le.example if hasattr(le, "example") else le for le in loaded]
    config = SyntheticConfig(n_examples=args.synthetic_size)
    return generate_synthetic(config, seed=args.synthetic_seed)


def _add_corpus_args(parser: argparse.ArgumentParser):
    parser.add_argument("--corpus", type=Path, default=None, help="corpus file; omit to generate synthetically")
    parser.add_argument("--synthetic-size", type=int, default=1000)
    parser.add_argument("--synthetic-seed", type=int, default=0)


def _train_config(args) -> TrainConfig:
    config = TrainConfig()
    if args.config:
        config = TrainConfig.from_dict(json.loads(Path(args.config).read_text()))
    if args.epochs is not None:
        config.epochs = args.epochs
    if args.seeds is not None:
        config.seeds = tuple(int(s) for s in args.seeds.split(","))
    return config


def cmd_train(args) -> int:
    if args.corpus and args.dev_corpus:
        train_examples = _load_examples(args)
        dev_loaded = load_corpus(args.dev_corpus)
        dev_examples = [le.example if hasattr(le, "example") else le for le in dev_loaded]
    else:
        train_examples, dev_examples = standard_corpus(
            seed=args.synthetic_seed, n_train=args.synthetic_size,
            n_dev=max(50, args.synthetic_size // 10))
    config = _train_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = train(train_examples, dev_examples, config, metrics_path=out / "metrics.jsonl")
    best = result.runs[0]
    best.model.save(out)
    (out / "train_config.json").write_text(json.dumps(config.to_dict()))
    agg = result.aggregate()
    print(json.dumps({"final": agg}, indent=2))
    return 0


def cmd_eval(args) -> int:
    model = DialogModel.load(args.model)
    if args.corpus:
        loaded = load_corpus(args.corpus)
        labeled = loaded if loaded and hasattr(loaded[0], "example") else label_corpus(loaded)
    else:
        _, dev = standard_corpus(seed=args.synthetic_seed, n_train=args.synthetic_size,
                                 n_dev=max(50, args.synthetic_size // 10))
        labeled = label_corpus(dev)
    rephraser = get_rephraser(args.rephraser)
    if args.protocol == "end_to_end":
        report = end_to_end_eval(model, labeled, rephraser)
    else:
        report = oracle_qg_eval(model, labeled, rephraser)
    print(report.format_table())
    doc = report.to_dict()
    doc["entailment_macro"] = entailment_accuracy(model, labeled)
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2))
    return 0


def cmd_ablate(args) -> int:
    train_examples, dev_examples = standard_corpus(
        seed=args.synthetic_seed, n_train=args.synthetic_size,
        n_dev=max(50, args.synthetic_size // 10))
    config = _train_config(args)
    result = run_ablation(train_examples, dev_examples, config)
    print(result.format_table())
    if args.out:
        Path(args.out).write_text(json.dumps(result.to_dict(), indent=2))
    return 0


def cmd_predict(args) -> int:
    model = DialogModel.load(args.model)
    example = DialogExample.from_dict(json.loads(Path(args.input).read_text()))
    prediction = model.predict(example)
    out = {
        "decision": prediction.decision,
        "decision_probabilities": prediction.decision_probabilities,
        "entailment_labels": prediction.entail_labels,
        "span": prediction.span.to_dict(),
    }
    if prediction.decision == "Inquire":
        rephraser = get_rephraser(args.rephraser)
        from .rephrase import RephraseRequest

        out["follow_up_question"] = rephraser(RephraseRequest(span_text=prediction.span.text))
    print(json.dumps(out, indent=2))
    return 0


def cmd_repl(args) -> int:
    model = DialogModel.load(args.model)
    engine = DialogEngine(model, rephraser=get_rephraser(args.rephraser), max_turns=args.max_turns)
    print("Paste rule text; end with an empty line.")
    lines = []
    while True:
        line = input()
        if not line.strip():
            break
        lines.append(line)
    scenario = input("Scenario (may be empty): ")
    question = input("Question: ")
    session = engine.start_session("\n".join(lines), scenario, question)
    while session.status == "active":
        print(f"> {session.pending_question}")
        try:
            engine.step(session, input("You (yes/no): "))
        except UnparseableAnswerError as exc:
            print(f"  {exc}")
    if session.status == "concluded":
        print(f"Decision: {session.conclusion}")
    else:
        print(f"Session aborted: {session.turns[-1].diagnostic}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    model = DialogModel.load(args.model)
    engine = DialogEngine(model, rephraser=get_rephraser(args.rephraser), max_turns=args.max_turns)
    uvicorn.run(create_app(engine), host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_generate(args) -> int:
    config = SyntheticConfig(n_examples=args.synthetic_size)
    examples = generate_synthetic(config, seed=args.synthetic_seed)
    save_corpus(label_corpus(examples) if args.labeled else examples, args.out)
    print(f"wrote {len(examples)} examples to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rulereader",
                                     description="Conversational reading of rule text")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model")
    _add_corpus_args(p)
    p.add_argument("--dev-corpus", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True, help="model output directory")
    p.add_argument("--config", type=Path, default=None, help="training config JSON")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--seeds", type=str, default=None, help="comma-separated seed list")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained model")
    _add_corpus_args(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--protocol", choices=("end_to_end", "oracle_qg"), default="end_to_end")
    p.add_argument("--rephraser", default="template")
    p.add_argument("--out", type=Path, default=None, help="report JSON path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="train and compare ablation variants")
    _add_corpus_args(p)
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--seeds", type=str, default=None)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("predict", help="run one example through the model")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--input", type=Path, required=True, help="example JSON file")
    p.add_argument("--rephraser", default="template")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("repl", help="interactive terminal session")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--rephraser", default="template")
    p.add_argument("--max-turns", type=int, default=8)
    p.set_defaults(func=cmd_repl)

    p = sub.add_parser("serve", help="run the HTTP session API")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--rephraser", default="template")
    p.add_argument("--max-turns", type=int, default=8)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8430)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("generate", help="write a synthetic corpus file")
    p.add_argument("--synthetic-size", type=int, default=1000)
    p.add_argument("--synthetic-seed", type=int, default=0)
    p.add_argument("--labeled", action="store_true")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_generate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
