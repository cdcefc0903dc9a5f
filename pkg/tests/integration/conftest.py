import os

import pytest

from cdspress.synth import SynthConfig, SyntheticGenomeGenerator

integration_test_flag = bool(int(os.environ.get("IE_TEST", "0")))


@pytest.fixture
def integration_test():
    if not integration_test_flag:
        pytest.skip(
            reason="Integration test, to be skipped when running unittests",
        )


@pytest.fixture
def synthetic_genome(integration_test):
    """Four chromosomes of 1 Mbp with planted codon bias in coding regions."""
    return SyntheticGenomeGenerator(SynthConfig(chromosomes=4, seed=1)).generate()


@pytest.fixture
def synthetic_cohort(integration_test):
    """Twenty-one shorter chromosomes for chromosome-level cross-validation."""
    return SyntheticGenomeGenerator(
        SynthConfig(chromosomes=21, length=300_000, period=150_000, seed=2)
    ).generate()
