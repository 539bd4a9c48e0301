import pytest

from finfoed.data import build_corpus
from finfoed.model import ModelConfig
from finfoed.tensor import Rng
from finfoed.training import LossConfig, TrainConfig, train

SMOKE_SIZES = {"train": 32, "dev": 10, "eval": 10}


@pytest.fixture(scope="session")
def smoke_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("smoke_corpus")
    return build_corpus(out, SMOKE_SIZES, Rng(0), bonafide_fraction=0.25)


@pytest.fixture(scope="session")
def smoke_run(smoke_corpus, tmp_path_factory):
    """One warm-up epoch then one frozen-backbone epoch on the smoke corpus."""
    out = tmp_path_factory.mktemp("smoke_run")
    result = train(smoke_corpus, ModelConfig(), TrainConfig(epochs=2, warmup_epochs=1, seed=0), LossConfig(),
                   log_path=out / "train_log.ndjson", checkpoint_path=out / "model.iedk")
    return result, out
