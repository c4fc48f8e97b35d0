"""Shared helper for the demo scripts: a small model trained in ~1 minute.

The first demo that needs a model trains one (below the package defaults,
but strong enough to behave sensibly on the synthetic corpus) and caches it
next to this file; later demos load the cache instantly. Delete the
``.demo_model`` directory to retrain.
"""

from __future__ import annotations

from pathlib import Path

from rulereader.model import DialogModel
from rulereader.synthetic import SyntheticConfig, generate_synthetic
from rulereader.training import TrainConfig, train

_CACHE = Path(__file__).parent / ".demo_model"


def demo_corpus(seed: int = 0, n_examples: int = 800):
    return generate_synthetic(SyntheticConfig(n_examples=n_examples), seed=seed)


def train_demo_model(seed: int = 0):
    """Train (or load the cached) demo model; returns (model, corpus)."""
    corpus = demo_corpus(seed)
    if (_CACHE / "checkpoint.json").exists():
        return DialogModel.load(_CACHE), corpus
    config = TrainConfig(embed_dim=48, ffn_dim=96, epochs=25, batch_size=16,
                         dropout=0.0, use_data_augmentation=False, seeds=(seed,),
                         early_stop_dev_micro=0.97)
    print(f"training a demo model on {len(corpus)} examples "
          f"(d={config.embed_dim}, <= {config.epochs} epochs, about a minute) ...")
    result = train(corpus, corpus[:100], config)
    run = result.runs[0]
    print(f"done: dev micro accuracy {run.epochs[-1].dev_metrics['dev_micro']:.3f}")
    run.model.save(_CACHE)
    print(f"cached at {_CACHE}\n")
    return run.model, corpus
