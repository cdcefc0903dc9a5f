from argparse import ArgumentParser, ArgumentTypeError
from functools import reduce
from typing import Callable, List, Optional

from cdspress.cli import defaults
from cdspress.domain import RegionKind
from cdspress.literals import (
    DEFAULT_MAX_STEPS,
    DEFAULT_TOLERANCE,
    MAX_WINDOW_ORDER,
    MIN_WINDOW_ORDER,
)
from cdspress.synth import SynthConfig


def parse_arguments_with(
    parsers: List[Callable[[ArgumentParser], ArgumentParser]],
    base_parser: Optional[ArgumentParser] = None,
):
    """
    Specify a chain of parsers to help parse the list of arguments to main

    :param parsers: List of parsers to be applied.
    :param base_parser: Parser to decorate, a fresh ArgumentParser by default.
    """
    return reduce(
        lambda x, f: f(x), parsers, base_parser if base_parser else ArgumentParser()
    )


def window_order(value: str) -> int:
    """Argument type for the window order n."""
    try:
        n = int(value)
    except ValueError:
        raise ArgumentTypeError(f"invalid window order: {value!r}")
    if not MIN_WINDOW_ORDER <= n <= MAX_WINDOW_ORDER:
        raise ArgumentTypeError(
            f"window order must be in [{MIN_WINDOW_ORDER}, {MAX_WINDOW_ORDER}], got {n}"
        )
    return n


def positive_float(value: str) -> float:
    try:
        number = float(value)
    except ValueError:
        raise ArgumentTypeError(f"invalid number: {value!r}")
    if not number > 0:
        raise ArgumentTypeError(f"expected a positive number, got {value}")
    return number


def positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise ArgumentTypeError(f"invalid integer: {value!r}")
    if number < 1:
        raise ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def add_logging_arguments(parser: ArgumentParser) -> ArgumentParser:
    """
    Add logging argument parsing to the existing parser context

    :param parser: Input parser to decorate with parsing support for logging args.
    """
    parser.add_argument(
        "--log-level",
        choices=["INFO", "WARN", "ERROR", "DEBUG"],
        default="WARN",
        help="Set the log level of the logging",
    )
    parser.add_argument(
        "--log-conf-file",
        default=defaults.log_conf_file,
        help="Provide a log configuration file",
    )

    return parser


def add_runtime_arguments(parser: ArgumentParser) -> ArgumentParser:
    """
    Add worker-count and random seed arguments to the existing parser context

    :param parser: Input parser to decorate with parsing support for runtime args.
    """
    parser.add_argument(
        "--threads",
        type=positive_int,
        default=defaults.threads,
        help="Maximum number of worker threads (env CDSPRESS_THREADS).",
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=0,
        help="Seed every source of randomness derives from.",
    )
    return parser


def add_output_arguments(parser: ArgumentParser) -> ArgumentParser:
    parser.add_argument(
        "--out", default="-", help="Output file, '-' for standard output."
    )
    return parser


def add_genome_arguments(parser: ArgumentParser) -> ArgumentParser:
    """
    Add genome input and window order arguments to the existing parser context

    :param parser: Input parser to decorate with parsing support for genome args.
    """
    parser.add_argument(
        "--fasta", required=True, help="Genome FASTA file, optionally gzipped."
    )
    parser.add_argument(
        "--n",
        type=window_order,
        default=defaults.window_order,
        help="Window order n; windows hold 4^n + n - 1 positions.",
    )
    return parser


def add_kind_argument(parser: ArgumentParser) -> ArgumentParser:
    parser.add_argument(
        "--kind",
        type=RegionKind,
        choices=list(RegionKind),
        default=RegionKind.CDS,
        metavar="{" + ",".join(kind.value for kind in RegionKind) + "}",
        help="Region kind of annotation records without an explicit kind name.",
    )
    return parser


def add_smoothing_arguments(parser: ArgumentParser) -> ArgumentParser:
    """
    Add smoothing radius arguments to the existing parser context

    :param parser: Input parser to decorate with parsing support for smoothing args.
    """
    parser.add_argument(
        "--radius",
        type=positive_float,
        default=None,
        help="Gaussian smoothing radius in windows (env CDSPRESS_RADIUS).",
    )
    parser.add_argument(
        "--auto-radius",
        action="store_true",
        help="Estimate the radius from the CDS start positions (Silverman rule).",
    )
    return parser


def add_training_arguments(parser: ArgumentParser) -> ArgumentParser:
    """
    Add Nelder-Mead training arguments to the existing parser context

    :param parser: Input parser to decorate with parsing support for training args.
    """
    parser.add_argument(
        "--cds", required=True, help="BED file of coding sequence annotations."
    )
    parser.add_argument(
        "--tol",
        type=positive_float,
        default=DEFAULT_TOLERANCE,
        help="Objective spread across the simplex below which training stops.",
    )
    parser.add_argument(
        "--max-steps",
        type=positive_int,
        default=DEFAULT_MAX_STEPS,
        help="Maximum number of Nelder-Mead iterations.",
    )
    parser.add_argument(
        "--restarts",
        type=positive_int,
        default=1,
        help="Number of runs, each after the first from a perturbed start.",
    )
    parser.add_argument(
        "--initial", default=None, help="Parameter JSON to start training from."
    )
    return parser


def add_cross_validation_arguments(parser: ArgumentParser) -> ArgumentParser:
    parser.add_argument("--folds", type=positive_int, default=7, help="Number of folds.")
    parser.add_argument(
        "--repeats", type=positive_int, default=50, help="Number of random partitions."
    )
    return parser


def add_synth_arguments(parser: ArgumentParser) -> ArgumentParser:
    """
    Add synthetic genome shape arguments to the existing parser context

    :param parser: Input parser to decorate with parsing support for generator args.
    """
    shape = SynthConfig()
    parser.add_argument("--out-fasta", required=True, help="FASTA file to write.")
    parser.add_argument("--out-bed", required=True, help="CDS BED file to write.")
    parser.add_argument(
        "--out-params", default=None, help="Planted parameter JSON file to write."
    )
    parser.add_argument(
        "--coding-params",
        default=None,
        help="Parameter JSON of the coding measure, random codon enrichment otherwise.",
    )
    parser.add_argument(
        "--chromosomes", type=positive_int, default=shape.chromosomes
    )
    parser.add_argument("--length", type=positive_int, default=shape.length)
    parser.add_argument("--coding-low", type=float, default=shape.coding_low)
    parser.add_argument("--coding-high", type=float, default=shape.coding_high)
    parser.add_argument(
        "--period",
        type=positive_int,
        default=shape.period,
        help="Period of the coding fraction gradient, in positions.",
    )
    parser.add_argument("--region-min", type=positive_int, default=shape.region_min)
    parser.add_argument("--region-max", type=positive_int, default=shape.region_max)
    parser.add_argument(
        "--enriched",
        type=int,
        default=shape.enriched,
        help="Number of codons enriched in coding regions.",
    )
    parser.add_argument(
        "--enrich-factor", type=positive_float, default=shape.enrich_factor
    )
    return parser
