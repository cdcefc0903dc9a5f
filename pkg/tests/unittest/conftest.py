import argparse

import numpy as np
import pytest

from cdspress.cli.main import CliParser, create_cdspress_parser
from cdspress.cli.params import (
    add_genome_arguments,
    add_logging_arguments,
    add_runtime_arguments,
    add_smoothing_arguments,
    add_training_arguments,
    parse_arguments_with,
)
from cdspress.domain import DNA, ParameterVector, Sequence


@pytest.fixture
def genome_parser():
    return parse_arguments_with(
        [
            add_logging_arguments,
            add_runtime_arguments,
            add_genome_arguments,
            add_smoothing_arguments,
        ],
        argparse.ArgumentParser(exit_on_error=False),
    )


@pytest.fixture
def training_parser():
    return parse_arguments_with(
        [
            add_logging_arguments,
            add_runtime_arguments,
            add_genome_arguments,
            add_smoothing_arguments,
            add_training_arguments,
        ],
        argparse.ArgumentParser(exit_on_error=False),
    )


@pytest.fixture
def cdspress_parser():
    return create_cdspress_parser(CliParser(prog="cdspress"))


@pytest.fixture
def uniform():
    return ParameterVector.uniform()


@pytest.fixture
def random_weights():
    rng = np.random.default_rng(7)
    return ParameterVector.from_raw(rng.uniform(0.2, 5.0, size=DNA.size**3))


@pytest.fixture
def random_sequence():
    def make(length: int, seed: int = 0) -> Sequence:
        rng = np.random.default_rng(seed)
        return Sequence.from_codes(rng.integers(0, DNA.size, size=length))

    return make
