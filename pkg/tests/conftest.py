import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from canser.config import Experiment, ModelConfig, TrainConfig  # noqa: E402
from canser.features import SynthConfig, read_manifest, synthesize_dataset  # noqa: E402
from canser.harness.data import load_corpus  # noqa: E402

DESK_MODEL = dict(embed_dim=16, hidden_size=16, heads=4)


def desk_experiment(**changes):
    train_keys = {"lr", "batch_size", "max_epochs", "patience", "folds", "clip_norm"}
    model = {**DESK_MODEL, **{k: v for k, v in changes.items() if k not in train_keys}}
    train = dict(batch_size=8, max_epochs=3, patience=3, folds=3)
    train.update({k: v for k, v in changes.items() if k in train_keys})
    return Experiment(ModelConfig(**model), TrainConfig(**train))


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    """32 utterances, 4 classes, written once per session."""
    out = tmp_path_factory.mktemp("corpus")
    synthesize_dataset(str(out), SynthConfig(n_classes=4, per_class=8), seed=7)
    return out


@pytest.fixture(scope="session")
def corpus_entries(corpus_dir):
    return read_manifest(os.path.join(corpus_dir, "manifest.tsv"))


@pytest.fixture(scope="session")
def corpus(corpus_entries):
    return load_corpus(corpus_entries, desk_experiment().model)


@pytest.fixture(scope="session")
def small_corpus(corpus):
    return corpus[:12]


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
