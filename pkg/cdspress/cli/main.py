#!/usr/bin/env python3

import sys
from argparse import ArgumentParser, Namespace
from contextlib import nullcontext
from enum import Enum
from logging import Logger
from typing import ContextManager, List, NoReturn, Optional, Sequence, TextIO

import numpy as np

from cdspress.classify import (
    Label,
    ScoreSet,
    histogram,
    roc,
    sample_regions,
    score_sequences,
)
from cdspress.cli import defaults
from cdspress.cli.params import (
    add_cross_validation_arguments,
    add_genome_arguments,
    add_kind_argument,
    add_logging_arguments,
    add_output_arguments,
    add_runtime_arguments,
    add_smoothing_arguments,
    add_synth_arguments,
    add_training_arguments,
    parse_arguments_with,
    positive_int,
)
from cdspress.domain import AnnotationTrack, ParameterVector
from cdspress.equilibrium import EquilibriumMeasure, build_equilibrium_measure
from cdspress.exceptions import (
    ConvergenceError,
    FormatError,
    InsufficientData,
    InvalidArgument,
    ResourceNotFound,
    UndefinedCorrelation,
    UsageError,
)
from cdspress.genomics_io import (
    cds_density,
    exon_codon_frequencies,
    read_annotations,
    read_fasta,
    write_profile_tsv,
)
from cdspress.pressure import window_profile
from cdspress.signal import gaussian_smooth, silverman_bandwidth
from cdspress.synth import SynthConfig, SyntheticGenomeGenerator
from cdspress.training import (
    CrossValidator,
    TrainConfig,
    TrainingDataset,
    density_summary,
    train,
)
from cdspress.utils import open_text, setup_logging

DATA_ERRORS = (
    FormatError,
    InsufficientData,
    UndefinedCorrelation,
    ConvergenceError,
    ResourceNotFound,
)
USAGE_ERRORS = (UsageError, InvalidArgument)


class CliParser(ArgumentParser):
    """Argument parser raising UsageError instead of exiting."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        raise UsageError(message)


class Actions(str, Enum):
    PRESSURE = "pressure"
    TRAIN = "train"
    CV = "cv"
    MEASURE_BUILD = "measure-build"
    SCORE = "score"
    ROC = "roc"
    EXONFREQ = "exonfreq"
    SYNTH = "synth"


def create_cdspress_parser(parser: ArgumentParser) -> ArgumentParser:
    base_parser = parse_arguments_with(
        [add_logging_arguments, add_runtime_arguments],
        ArgumentParser(add_help=False),
    )

    subparsers = parser.add_subparsers(dest="action")
    subparsers.required = True

    #  subparser for windowed pressure profiles
    pressure_parser = parse_arguments_with(
        [add_genome_arguments, add_kind_argument, add_smoothing_arguments, add_output_arguments],
        subparsers.add_parser(Actions.PRESSURE.value, parents=[base_parser]),
    )
    pressure_parser.add_argument(
        "--params", default=None, help="Parameter JSON, uniform weights by default."
    )
    pressure_parser.add_argument(
        "--cds", default=None, help="BED annotations adding CDS density columns."
    )
    pressure_parser.add_argument(
        "--predicted",
        action="append",
        default=[],
        help="BED track of predicted coding sequences to compare with --cds; "
        "repeat for several predictors.",
    )
    pressure_parser.add_argument(
        "--summary",
        default=None,
        help="File receiving the correlation summary, standard error by default.",
    )

    #  subparser for training
    parse_arguments_with(
        [
            add_genome_arguments,
            add_kind_argument,
            add_smoothing_arguments,
            add_training_arguments,
            add_output_arguments,
        ],
        subparsers.add_parser(Actions.TRAIN.value, parents=[base_parser]),
    )

    #  subparser for cross-validation
    parse_arguments_with(
        [
            add_genome_arguments,
            add_kind_argument,
            add_smoothing_arguments,
            add_training_arguments,
            add_cross_validation_arguments,
            add_output_arguments,
        ],
        subparsers.add_parser(Actions.CV.value, parents=[base_parser]),
    )

    #  subparser for the equilibrium measure
    parse_arguments_with(
        [add_output_arguments],
        subparsers.add_parser(Actions.MEASURE_BUILD.value, parents=[base_parser]),
    ).add_argument("--params", required=True, help="Parameter JSON.")

    #  subparser for scoring
    score_parser = parse_arguments_with(
        [add_kind_argument, add_output_arguments],
        subparsers.add_parser(Actions.SCORE.value, parents=[base_parser]),
    )
    score_parser.add_argument("--measure", required=True, help="Measure JSON.")
    source = score_parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--fasta", help="Score every record of this FASTA file.")
    source.add_argument("--genome", help="Sample regions of this genome FASTA file.")
    score_parser.add_argument(
        "--annotations", help="BED annotations to sample regions from."
    )
    score_parser.add_argument("--length", type=positive_int, default=750)
    score_parser.add_argument("--count", type=positive_int, default=1000)
    score_parser.add_argument(
        "--label",
        type=Label,
        choices=list(Label),
        default=Label.POSITIVE,
        metavar="{" + ",".join(label.value for label in Label) + "}",
    )
    score_parser.add_argument(
        "--per-base",
        action="store_true",
        help="Divide scores by sequence length, allowing unequal lengths.",
    )

    #  subparser for ROC evaluation
    roc_parser = parse_arguments_with(
        [add_output_arguments],
        subparsers.add_parser(Actions.ROC.value, parents=[base_parser]),
    )
    roc_parser.add_argument(
        "--scores",
        action="append",
        required=True,
        help="Score table; repeat to merge positive and negative tables.",
    )
    roc_parser.add_argument("--histogram", default=None, help="Histogram TSV to write.")
    roc_parser.add_argument("--bins", type=positive_int, default=50)

    #  subparser for exon codon frequencies
    exonfreq_parser = parse_arguments_with(
        [add_kind_argument, add_output_arguments],
        subparsers.add_parser(Actions.EXONFREQ.value, parents=[base_parser]),
    )
    exonfreq_parser.add_argument("--fasta", required=True, help="Genome FASTA file.")
    exonfreq_parser.add_argument(
        "--annotations", required=True, help="BED file of exon or CDS intervals."
    )

    #  subparser for synthetic genomes
    parse_arguments_with(
        [add_synth_arguments],
        subparsers.add_parser(Actions.SYNTH.value, parents=[base_parser]),
    )

    return parser


def _track(path: str, args: Namespace) -> AnnotationTrack:
    return read_annotations(path, args.kind).of_kind(args.kind)


def _radius(args: Namespace, starts_of, logger: Logger) -> float:
    if args.auto_radius:
        radius = silverman_bandwidth(starts_of())
        logger.info(f"Estimated smoothing radius: {radius:.4f} windows")
        return radius
    return args.radius if args.radius is not None else defaults.radius


def _summary_stream(path: Optional[str]) -> ContextManager[TextIO]:
    return open_text(path, "wt") if path else nullcontext(sys.stderr)


def _training_setup(args: Namespace, logger: Logger):
    dataset = TrainingDataset.build(
        read_fasta(args.fasta), _track(args.cds, args), args.n, threads=args.threads
    )
    logger.info(f"Training dataset: {len(dataset)} valid windows")
    config = TrainConfig(
        tolerance=args.tol,
        max_steps=args.max_steps,
        radius=_radius(args, dataset.start_positions, logger),
        seed=args.seed,
        initial=ParameterVector.read(args.initial) if args.initial else None,
        restarts=args.restarts,
        threads=args.threads,
    )
    return dataset, config


def main(args: Namespace, logger: Logger):
    if args.action == Actions.PRESSURE:
        v = ParameterVector.read(args.params) if args.params else ParameterVector.uniform()
        profile = window_profile(read_fasta(args.fasta), v, args.n, args.threads)
        series, smoothed = None, None
        if args.cds is not None:
            series = cds_density(_track(args.cds, args), profile)
            radius = _radius(
                args,
                lambda: np.repeat(
                    np.arange(len(profile.pressures)), series.counts[profile.valid]
                ),
                logger,
            )
            if args.radius is not None or args.auto_radius:
                smoothed = (
                    gaussian_smooth(profile.pressures, radius),
                    gaussian_smooth(series.valid_density, radius),
                )
            summary = density_summary(
                profile,
                series,
                {path: _track(path, args) for path in args.predicted},
                radius,
            )
            with _summary_stream(args.summary) as fid:
                summary.write(fid)
        elif args.radius is not None or args.auto_radius:
            raise UsageError("Smoothing needs --cds")
        elif args.predicted:
            raise UsageError("Comparing predicted tracks needs --cds")
        with open_text(args.out, "wt") as fid:
            write_profile_tsv(fid, profile, series, smoothed)

    elif args.action == Actions.TRAIN:
        dataset, config = _training_setup(args, logger)
        result = train(dataset, config)
        logger.info(
            f"Trained correlation {result.correlation:.6f} in {result.steps} steps"
        )
        result.params.write(args.out, metadata=result.metadata)

    elif args.action == Actions.CV:
        dataset, config = _training_setup(args, logger)
        result = CrossValidator(args.folds, args.repeats, config).run(dataset)
        with open_text(args.out, "wt") as fid:
            fid.write(result.render(defaults.template_cv_report, config))

    elif args.action == Actions.MEASURE_BUILD:
        measure = build_equilibrium_measure(ParameterVector.read(args.params))
        logger.info(f"Perron eigenvalue: {measure.lam!r}")
        measure.write(args.out)

    elif args.action == Actions.SCORE:
        measure = EquilibriumMeasure.read(args.measure)
        if args.fasta is not None:
            records = read_fasta(args.fasta)
            names = [name for name, _ in records]
            sequences = [sequence for _, sequence in records]
        else:
            if args.annotations is None:
                raise UsageError("Sampling regions from --genome needs --annotations")
            regions = sample_regions(
                dict(read_fasta(args.genome)),
                read_annotations(args.annotations, args.kind),
                args.kind,
                args.length,
                args.count,
                args.seed,
            )
            names = [region.name for region in regions]
            sequences = [region.sequence for region in regions]
        scores = score_sequences(
            measure, sequences, args.label, names, args.per_base, args.threads
        )
        with open_text(args.out, "wt") as fid:
            scores.write(fid)

    elif args.action == Actions.ROC:
        merged = ScoreSet()
        for path in args.scores:
            with open_text(path) as fid:
                merged = merged + ScoreSet.read(fid)
        result = roc(merged)
        logger.info(f"AUC over {len(merged)} scores: {result.auc:.6f}")
        with open_text(args.out, "wt") as fid:
            result.write(fid)
        if args.histogram is not None:
            with open_text(args.histogram, "wt") as fid:
                histogram(merged, args.bins).write(fid)

    elif args.action == Actions.EXONFREQ:
        frequencies = exon_codon_frequencies(
            dict(read_fasta(args.fasta)), _track(args.annotations, args)
        )
        frequencies.write(args.out)

    elif args.action == Actions.SYNTH:
        generator = SyntheticGenomeGenerator(
            SynthConfig(
                chromosomes=args.chromosomes,
                length=args.length,
                coding_low=args.coding_low,
                coding_high=args.coding_high,
                period=args.period,
                region_min=args.region_min,
                region_max=args.region_max,
                enriched=args.enriched,
                enrich_factor=args.enrich_factor,
                seed=args.seed,
            ),
            coding=(
                ParameterVector.read(args.coding_params) if args.coding_params else None
            ),
        )
        generator.generate().write(args.out_fasta, args.out_bed, args.out_params)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse the arguments, run the subcommand and return the exit code."""
    parser = create_cdspress_parser(
        CliParser(prog="cdspress", description="Topological pressure toolkit")
    )
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write(f"cdspress: error: {e}\n")
        return 1
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 0

    logger = setup_logging(args.log_level, args.log_conf_file, "cdspress.cli.main")

    try:
        main(args, logger)
        return 0
    except USAGE_ERRORS as e:
        logger.error(str(e))
        return 1
    except DATA_ERRORS as e:
        logger.error(str(e))
        return 2


def entrypoint(argv: Optional[List[str]] = None) -> NoReturn:
    sys.exit(run(argv))


if __name__ == "__main__":
    entrypoint()
