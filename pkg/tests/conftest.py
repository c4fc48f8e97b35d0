"""Shared fixtures: one competently trained small model per test session."""

from __future__ import annotations

import pytest

from rulereader.synthetic import SyntheticConfig, generate_synthetic
from rulereader.training import TrainConfig, train

FIXTURE_SEED = 11


@pytest.fixture(scope="session")
def fixture_corpus():
    return generate_synthetic(SyntheticConfig(n_examples=800), seed=FIXTURE_SEED)


@pytest.fixture(scope="session")
def competent_model(fixture_corpus):
    """A small model trained well past chance on its own corpus (~1 min).

    Shared by every suite that needs sensible end-to-end behavior; tests
    that only need plumbing use scripted predictors instead.
    """
    cfg = TrainConfig(embed_dim=48, ffn_dim=96, epochs=25, batch_size=16,
                      dropout=0.0, use_data_augmentation=False,
                      early_stop_dev_micro=0.97)
    return train(fixture_corpus, fixture_corpus[:100], cfg).runs[0].model


@pytest.fixture(scope="session")
def competent_model_dir(competent_model, tmp_path_factory):
    """The same model saved to disk for CLI and service loading."""
    path = tmp_path_factory.mktemp("model") / "checkpoint"
    competent_model.save(path)
    return path
