"""Training loop, run configuration, and the ablation harness.

One call to ``train`` runs every configured seed over the same prepared
data: heuristic labels and encoder inputs are computed once and shared, so
seeds differ only in parameter initialization, shuffling, and dropout.
Optimization is Adam with linear warm-up over mini-batches of per-example
graphs. A non-finite loss aborts the run with diagnostics.

Each seed keeps the weights of its best epoch by dev composite (the mean of
decision micro, sentence-identification, and entailment macro accuracy);
the constant post-warm-up learning rate leaves late epochs noisy, so the
final epoch is often not the best one. Early stopping keeps the epoch that
satisfied the stop criterion. ``keep_best=False`` disables selection.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .data import DialogExample, LabeledExample
from .encoder import EncodedInput, Vocabulary
from .labeling import augment_corpus, label_corpus
from .model import DialogModel, ModelConfig
from .optim import AdamState, adam_step

logger = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; carries the step index and last losses."""


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    warmup_fraction: float = 0.1
    dropout: float = 0.1
    lambda_entail: float = 10.0
    lambda_span: float = 0.6
    batch_size: int = 16
    epochs: int = 30
    seeds: tuple[int, ...] = (0,)
    use_data_augmentation: bool = True
    use_tracker: bool = True
    use_coarse_to_fine: bool = True
    use_entailment_loss: bool = True
    sentence_head_mode: bool = False
    embed_dim: int = 64
    ffn_dim: int = 128
    encoder_depth: int = 1
    max_sequence_length: int = 384
    early_stop_dev_micro: float | None = None
    keep_best: bool = True
    log_every: int = 50

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            embed_dim=self.embed_dim,
            ffn_dim=self.ffn_dim,
            encoder_depth=self.encoder_depth,
            max_sequence_length=self.max_sequence_length,
            dropout=self.dropout,
            use_tracker=self.use_tracker,
            use_coarse_to_fine=self.use_coarse_to_fine,
            use_entailment_loss=self.use_entailment_loss,
            sentence_head_mode=self.sentence_head_mode,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if "seeds" in d:
            d["seeds"] = tuple(d["seeds"])
        return cls(**d)


def full_scale_profile() -> TrainConfig:
    """Hyperparameters sized for a pretrained-transformer encoder.

    Kept for documentation and scale-up experiments; the desk-scale defaults
    above are what the bundled corpus and tests use.
    """
    return TrainConfig(
        learning_rate=5e-5,
        warmup_fraction=0.1,
        dropout=0.35,
        lambda_entail=10.0,
        lambda_span=0.6,
        batch_size=16,
        epochs=5,
        seeds=(0, 1, 2, 3, 4),
        embed_dim=768,
        ffn_dim=3072,
        max_sequence_length=384,
    )


@dataclass
class PreparedData:
    """Labels and encoder inputs computed once and reused across runs."""

    train: list[LabeledExample]
    dev: list[LabeledExample]
    vocab: Vocabulary
    train_inputs: list[EncodedInput]
    dev_inputs: list[EncodedInput]
    augmented: bool = False


def prepare_data(train_examples, dev_examples, config: TrainConfig,
                 vocab: Vocabulary | None = None) -> PreparedData:
    """Label, optionally augment, and pre-encode both splits."""
    train_set = list(train_examples)
    if config.use_data_augmentation:
        train_set = augment_corpus(train_set)
    vocab = vocab or Vocabulary.build(train_set)
    labeled_train = label_corpus(train_set)
    labeled_dev = label_corpus(dev_examples)
    probe = DialogModel(vocab, config.model_config(), seed=0)
    train_inputs = [probe.prepare(le.example) for le in labeled_train]
    dev_inputs = [probe.prepare(le.example) for le in labeled_dev]
    return PreparedData(train=labeled_train, dev=labeled_dev, vocab=vocab,
                        train_inputs=train_inputs, dev_inputs=dev_inputs,
                        augmented=config.use_data_augmentation)


@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    dev_metrics: dict
    seconds: float


@dataclass
class SeedRun:
    seed: int
    model: DialogModel
    epochs: list[EpochRecord]
    step_losses: list[float] = field(repr=False, default_factory=list)
    best_epoch: int | None = None

    @property
    def final_metrics(self) -> dict:
        """Dev metrics of the epoch whose weights the model carries."""
        if not self.epochs:
            return {}
        if self.best_epoch is not None:
            return self.epochs[self.best_epoch].dev_metrics
        return self.epochs[-1].dev_metrics


@dataclass
class TrainResult:
    runs: list[SeedRun]
    config: TrainConfig

    def aggregate(self) -> dict:
        """Mean and standard deviation of each final dev metric over seeds."""
        out = {}
        if not self.runs:
            return out
        keys = self.runs[0].final_metrics.keys()
        for k in keys:
            vals = np.array([r.final_metrics[k] for r in self.runs], dtype=np.float64)
            out[k] = {"mean": float(vals.mean()), "std": float(vals.std())}
        return out


def dev_composite(metrics: dict) -> float:
    """Scalar dev score for checkpoint selection: the mean of decision
    micro, sentence-identification, and entailment macro accuracy. A NaN
    sentence-id (dev set without labeled Inquire spans) is skipped."""
    parts = [metrics["dev_micro"], metrics["dev_entail_macro"]]
    if not math.isnan(metrics["dev_sentence_id"]):
        parts.append(metrics["dev_sentence_id"])
    return float(np.mean(parts))


def evaluate_dev(model: DialogModel, prepared: PreparedData) -> dict:
    """Decision, entailment, and sentence-identification accuracy on dev."""
    from .evaluation import macro_accuracy, micro_accuracy

    preds, golds = [], []
    entail_pairs: list[tuple[str, str]] = []
    sentence_hits, sentence_total = 0, 0
    for labeled, enc in zip(prepared.dev, prepared.dev_inputs):
        p = model.predict(labeled.example, enc_input=enc)
        preds.append(p.decision)
        golds.append(labeled.example.decision)
        entail_pairs.extend(zip(p.entail_labels, labeled.entailment_labels))
        if labeled.example.decision == "Inquire" and labeled.span is not None:
            sentence_total += 1
            sentence_hits += int(p.span.sentence_index == labeled.span.sentence_index)
    entail_preds = [a for a, _ in entail_pairs]
    entail_golds = [b for _, b in entail_pairs]
    return {
        "dev_micro": micro_accuracy(preds, golds),
        "dev_macro": macro_accuracy(preds, golds),
        "dev_entail_macro": macro_accuracy(entail_preds, entail_golds),
        "dev_sentence_id": sentence_hits / sentence_total if sentence_total else float("nan"),
    }


def _train_one_seed(prepared: PreparedData, config: TrainConfig, seed: int,
                    metrics_file=None) -> SeedRun:
    model = DialogModel(prepared.vocab, config.model_config(), seed=seed)
    rng = np.random.default_rng(seed)
    n = len(prepared.train)
    steps_per_epoch = math.ceil(n / config.batch_size)
    adam = AdamState(learning_rate=config.learning_rate,
                     total_steps=config.epochs * steps_per_epoch,
                     warmup_fraction=config.warmup_fraction)
    run = SeedRun(seed=seed, model=model, epochs=[])
    best_score, best_weights = -np.inf, None
    step = 0
    for epoch in range(config.epochs):
        t0 = time.monotonic()
        order = rng.permutation(n)
        epoch_losses = []
        for b in range(steps_per_epoch):
            batch = order[b * config.batch_size: (b + 1) * config.batch_size]
            model.zero_grad()
            total, _ = model.loss_batch([prepared.train[i] for i in batch],
                                        config.lambda_entail, config.lambda_span,
                                        train=True,
                                        enc_inputs=[prepared.train_inputs[i] for i in batch])
            value = total.item()
            if not np.isfinite(value):
                raise TrainingDiverged(
                    f"non-finite loss {value} at seed {seed}, epoch {epoch}, step {step}; "
                    f"last losses: {run.step_losses[-5:]}")
            ad.backward(total)
            lr = adam_step(model.parameters(), adam)
            run.step_losses.append(value)
            epoch_losses.append(value)
            step += 1
            if metrics_file and step % config.log_every == 0:
                metrics_file.write(json.dumps({"seed": seed, "step": step, "loss": value, "lr": lr}) + "\n")
        dev_metrics = evaluate_dev(model, prepared)
        record = EpochRecord(epoch=epoch, mean_loss=float(np.mean(epoch_losses)),
                             dev_metrics=dev_metrics, seconds=time.monotonic() - t0)
        run.epochs.append(record)
        logger.info("seed %d epoch %d loss %.4f dev_micro %.4f (%.1fs)",
                    seed, epoch, record.mean_loss, dev_metrics["dev_micro"], record.seconds)
        if metrics_file:
            metrics_file.write(json.dumps({"seed": seed, "epoch": epoch,
                                           "mean_loss": record.mean_loss, **dev_metrics}) + "\n")
        if config.keep_best:
            score = dev_composite(dev_metrics)
            if score > best_score:
                best_score, run.best_epoch = score, epoch
                best_weights = {p.name: p.data.copy() for p in model.parameters()}
        if (config.early_stop_dev_micro is not None
                and dev_metrics["dev_micro"] >= config.early_stop_dev_micro):
            # The stop criterion was met here, so this epoch's weights are
            # the ones kept, regardless of the composite ranking.
            if config.keep_best:
                run.best_epoch, best_weights = epoch, None
            logger.info("seed %d early stop at epoch %d", seed, epoch)
            break
    if best_weights is not None and run.best_epoch != len(run.epochs) - 1:
        for p in model.parameters():
            p.data[...] = best_weights[p.name]
        logger.info("seed %d keeping epoch %d weights (dev composite %.4f)",
                    seed, run.best_epoch, best_score)
    return run


def train(train_examples, dev_examples, config: TrainConfig,
          metrics_path=None, prepared: PreparedData | None = None) -> TrainResult:
    """Train one model per configured seed on a shared prepared corpus."""
    if prepared is None:
        prepared = prepare_data(train_examples, dev_examples, config)
    runs = []
    handle = open(metrics_path, "w") if metrics_path else None
    try:
        for seed in config.seeds:
            runs.append(_train_one_seed(prepared, config, seed, metrics_file=handle))
    finally:
        if handle:
            handle.close()
    return TrainResult(runs=runs, config=config)


ABLATION_VARIANTS: tuple[tuple[str, dict], ...] = (
    ("full", {}),
    ("no_data_augmentation", {"use_data_augmentation": False}),
    ("no_coarse_to_fine", {"use_coarse_to_fine": False}),
    ("no_entailment_loss", {"use_entailment_loss": False, "lambda_entail": 0.0}),
    ("no_tracker", {"use_tracker": False}),
)


@dataclass
class AblationRow:
    variant: str
    metrics: dict  # name -> {"mean": float, "std": float}


@dataclass
class AblationResult:
    rows: list[AblationRow]
    seeds: tuple[int, ...]

    METRICS = ("micro", "macro", "bleu1", "bleu4", "oracle_bleu1", "oracle_bleu4")

    def format_table(self) -> str:
        header = ["variant"] + list(self.METRICS)
        lines = ["  ".join(f"{h:>22}" for h in header)]
        for row in self.rows:
            cells = [f"{row.variant:>22}"]
            for m in self.METRICS:
                stat = row.metrics[m]
                cells.append(f"{stat['mean']:.4f} ± {stat['std']:.4f}".rjust(22))
            lines.append("  ".join(cells))
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {"seeds": list(self.seeds),
                "rows": [{"variant": r.variant, "metrics": r.metrics} for r in self.rows]}


def run_ablation(train_examples, dev_examples, base_config: TrainConfig,
                 rephraser=None, extra_metrics: bool = False) -> AblationResult:
    """Train every ablation variant under identical seeds and report
    end-to-end micro/macro/BLEU plus oracle-generation BLEU, mean ± std."""
    from .evaluation import end_to_end_eval, oracle_qg_eval
    from .rephrase import TemplateRephraser

    rephraser = rephraser or TemplateRephraser()
    shared_cache: dict[bool, PreparedData] = {}
    rows = []
    for variant, overrides in ABLATION_VARIANTS:
        config = replace(base_config, **overrides)
        aug = config.use_data_augmentation
        if aug not in shared_cache:
            shared_cache[aug] = prepare_data(train_examples, dev_examples, config)
        prepared = shared_cache[aug]
        result = train(None, None, config, prepared=prepared)
        per_seed: dict[str, list[float]] = {m: [] for m in AblationResult.METRICS}
        if extra_metrics:
            per_seed.update({"sentence_id": [], "entail_macro": []})
        for run in result.runs:
            e2e = end_to_end_eval(run.model, prepared.dev, rephraser, enc_inputs=prepared.dev_inputs)
            oracle = oracle_qg_eval(run.model, prepared.dev, rephraser, enc_inputs=prepared.dev_inputs)
            per_seed["micro"].append(e2e.micro)
            per_seed["macro"].append(e2e.macro)
            per_seed["bleu1"].append(e2e.bleu1 if e2e.bleu1 is not None else 0.0)
            per_seed["bleu4"].append(e2e.bleu4 if e2e.bleu4 is not None else 0.0)
            per_seed["oracle_bleu1"].append(oracle.bleu1 if oracle.bleu1 is not None else 0.0)
            per_seed["oracle_bleu4"].append(oracle.bleu4 if oracle.bleu4 is not None else 0.0)
            if extra_metrics:
                dev_metrics = evaluate_dev(run.model, prepared)
                per_seed["sentence_id"].append(dev_metrics["dev_sentence_id"])
                per_seed["entail_macro"].append(dev_metrics["dev_entail_macro"])
        metrics = {m: {"mean": float(np.mean(v)), "std": float(np.std(v))}
                   for m, v in per_seed.items()}
        rows.append(AblationRow(variant=variant, metrics=metrics))
        logger.info("ablation %s: micro %.4f", variant, metrics["micro"]["mean"])
    return AblationResult(rows=rows, seeds=base_config.seeds)


def write_metrics(result: TrainResult, path) -> None:
    """Line-delimited epoch metrics for every seed."""
    with open(path, "w") as f:
        for run in result.runs:
            for rec in run.epochs:
                f.write(json.dumps({"seed": run.seed, "epoch": rec.epoch,
                                    "mean_loss": rec.mean_loss, **rec.dev_metrics}) + "\n")
