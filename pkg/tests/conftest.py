import pytest
from hypothesis import settings

from selftag.config import ExperimentConfig
from selftag.selection import FixedSize, Threshold
from selftag.synth import SyntheticShiftSpec, generate_benchmark

settings.register_profile("package", deadline=None)
settings.load_profile("package")

# Small enough that a full self-training run takes well under a second.
TINY_SPEC = SyntheticShiftSpec(
    source_vocab=40,
    target_vocab=30,
    shared_vocab=16,
    train_sentences=40,
    unlabeled_sentences=50,
    dev_sentences=24,
    test_sentences=24,
    gold_sentences=20,
)


@pytest.fixture(scope="session")
def tiny_spec():
    return TINY_SPEC


@pytest.fixture(scope="session")
def tiny_bench(tiny_spec):
    return generate_benchmark(tiny_spec)


@pytest.fixture(scope="session")
def tiny_cfg(tiny_spec):
    return ExperimentConfig(
        synthetic=tiny_spec,
        seeds=(0, 1),
        grid=(Threshold(0.8), FixedSize(10)),
        gold_fractions=(0.0, 0.5, 1.0),
        max_iterations=6,
        patience=3,
    )
