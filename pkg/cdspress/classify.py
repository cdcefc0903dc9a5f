"""Coding-potential scoring with the equilibrium measure and ROC evaluation."""
import csv
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, NamedTuple, Optional, TextIO, Tuple

import numpy as np

from cdspress.domain import AnnotationTrack, RegionKind, Sequence
from cdspress.equilibrium import EquilibriumMeasure, measure_log_prob
from cdspress.exceptions import FormatError, InsufficientData, InvalidArgument
from cdspress.genomics_io import Genome
from cdspress.literals import HISTOGRAM_COLUMNS, ROC_COLUMNS, SCORE_COLUMNS
from cdspress.utils import format_float, parallel_map

logger = logging.getLogger(__name__)

MAX_ATTEMPTS_PER_SAMPLE = 100


class Label(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


class Region(NamedTuple):
    chrom: str
    start: int
    end: int
    sequence: Sequence

    @property
    def name(self) -> str:
        return f"{self.chrom}:{self.start}-{self.end}"


def sample_regions(
    genome: Genome,
    track: AnnotationTrack,
    kind: RegionKind,
    length: int,
    count: int,
    seed: int = 0,
) -> List[Region]:
    """Sample segments of one length uniformly over the admissible (interval, offset) pairs.

    Sampling is with replacement. Segments holding an ambiguous position are
    rejected and redrawn.
    """
    if length < 1 or count < 0:
        raise InvalidArgument(f"Invalid sample shape: length={length}, count={count}")

    admissible = [
        interval
        for interval in track.of_kind(kind)
        if interval.chrom in genome
        and min(interval.end, len(genome[interval.chrom])) - interval.start >= length
    ]
    if not admissible:
        raise InsufficientData(f"No {kind.value} interval spans {length} positions")

    offsets = np.array(
        [
            min(i.end, len(genome[i.chrom])) - i.start - length + 1
            for i in admissible
        ],
        dtype=np.int64,
    )
    cumulative = np.cumsum(offsets)
    rng = np.random.default_rng(seed)

    regions: List[Region] = []
    attempts = 0
    while len(regions) < count:
        attempts += 1
        if attempts > MAX_ATTEMPTS_PER_SAMPLE * max(count, 1):
            raise InsufficientData(
                f"Only {len(regions)} of {count} {kind.value} samples free of ambiguity"
            )
        draw = int(rng.integers(cumulative[-1]))
        position = int(np.searchsorted(cumulative, draw, side="right"))
        previous = int(cumulative[position - 1]) if position else 0
        interval = admissible[position]
        start = interval.start + draw - previous
        sequence = genome[interval.chrom]
        if sequence.has_ambiguity(start, start + length):
            continue
        regions.append(
            Region(interval.chrom, start, start + length, sequence.slice(start, start + length))
        )
    logger.info(f"Sampled {count} {kind.value} regions of length {length} in {attempts} draws")
    return regions


@dataclass
class ScoreSet:
    """Labeled log-probability scores."""

    names: List[str] = field(default_factory=list)
    labels: List[Label] = field(default_factory=list)
    scores: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=float))

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float).reshape(-1)
        if not len(self.names) == len(self.labels) == len(self.scores):
            raise InvalidArgument("Names, labels and scores must align")
        if not np.all(np.isfinite(self.scores)):
            raise InvalidArgument("Scores must be finite")

    def __len__(self) -> int:
        return len(self.scores)

    def __add__(self, other: "ScoreSet") -> "ScoreSet":
        return ScoreSet(
            self.names + other.names,
            self.labels + other.labels,
            np.concatenate([self.scores, other.scores]),
        )

    def of_label(self, label: Label) -> np.ndarray:
        return self.scores[[item == label for item in self.labels]]

    @property
    def positives(self) -> np.ndarray:
        return self.of_label(Label.POSITIVE)

    @property
    def negatives(self) -> np.ndarray:
        return self.of_label(Label.NEGATIVE)

    def write(self, stream: TextIO) -> None:
        writer = csv.writer(stream, delimiter="\t", lineterminator="\n")
        writer.writerow(SCORE_COLUMNS)
        for name, label, score in zip(self.names, self.labels, self.scores):
            writer.writerow([name, label.value, format_float(score)])

    @classmethod
    def read(cls, stream: Iterable[str]) -> "ScoreSet":
        reader = csv.reader(stream, delimiter="\t")
        if next(reader, None) != list(SCORE_COLUMNS):
            raise FormatError("Score table header does not match", 1)
        names, labels, scores = [], [], []
        for line_number, row in enumerate(reader, start=2):
            try:
                name, label, score = row
                labels.append(Label(label))
                scores.append(float(score))
                names.append(name)
            except ValueError as e:
                raise FormatError(f"Malformed score row: {e}", line_number)
        try:
            return cls(names, labels, np.array(scores, dtype=float))
        except InvalidArgument as e:
            raise FormatError(str(e))


def score_sequences(
    mu: EquilibriumMeasure,
    seqs: List[Sequence],
    label: Label = Label.POSITIVE,
    names: Optional[List[str]] = None,
    per_base: bool = False,
    threads: Optional[int] = 1,
) -> ScoreSet:
    """Score every sequence by its log-probability under the measure.

    Raw scores are only comparable between sequences of one length; ``per_base``
    divides by the length and lifts that restriction.
    """
    if not per_base and len({len(s) for s in seqs}) > 1:
        raise InvalidArgument("Sequences of different lengths cannot be compared")
    names = names if names is not None else [f"seq{i}" for i in range(len(seqs))]
    if len(names) != len(seqs):
        raise InvalidArgument("Expected one name per sequence")

    def score(sequence: Sequence) -> float:
        value = measure_log_prob(mu, sequence)
        return value / len(sequence) if per_base else value

    return ScoreSet(
        list(names),
        [label] * len(seqs),
        np.array(parallel_map(score, seqs, threads), dtype=float),
    )


class RocPoint(NamedTuple):
    threshold: float
    fpr: float
    tpr: float


@dataclass(frozen=True)
class RocResult:
    points: List[RocPoint]
    auc: float

    def write(self, stream: TextIO) -> None:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(ROC_COLUMNS)
        for point in self.points:
            writer.writerow([format_float(value) for value in point])
        stream.write(f"# auc={format_float(self.auc)}\n")


def roc(scores: ScoreSet) -> RocResult:
    """ROC curve over the distinct scores, descending, and its trapezoidal area.

    Tied scores form a single vertex, which gives half credit to ties.

    >>> roc(ScoreSet(["a", "b"], [Label.POSITIVE, Label.NEGATIVE], [2.0, 1.0])).auc
    1.0
    """
    positives, negatives = len(scores.positives), len(scores.negatives)
    if positives == 0 or negatives == 0:
        raise InsufficientData("ROC needs at least one positive and one negative score")

    is_positive = np.array([label == Label.POSITIVE for label in scores.labels])
    order = np.argsort(-scores.scores, kind="stable")
    ordered, hits = scores.scores[order], is_positive[order]
    last_of_value = np.flatnonzero(np.r_[ordered[1:] != ordered[:-1], True])

    tpr = np.r_[0.0, np.cumsum(hits)[last_of_value] / positives]
    fpr = np.r_[0.0, np.cumsum(~hits)[last_of_value] / negatives]
    thresholds = np.r_[np.inf, ordered[last_of_value]]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocResult(
        points=[RocPoint(float(t), float(f), float(p)) for t, f, p in zip(thresholds, fpr, tpr)],
        auc=auc,
    )


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    count_pos: np.ndarray
    count_neg: np.ndarray

    def rows(self) -> List[Tuple[float, float, int, int]]:
        return [
            (float(low), float(high), int(pos), int(neg))
            for low, high, pos, neg in zip(
                self.edges[:-1], self.edges[1:], self.count_pos, self.count_neg
            )
        ]

    def write(self, stream: TextIO) -> None:
        writer = csv.writer(stream, delimiter="\t", lineterminator="\n")
        writer.writerow(HISTOGRAM_COLUMNS)
        for low, high, pos, neg in self.rows():
            writer.writerow([format_float(low), format_float(high), pos, neg])


def histogram(scores: ScoreSet, bins: int) -> Histogram:
    """Equal-width bins over [min, max] of all scores, counted per label."""
    if bins < 1:
        raise InvalidArgument(f"At least one bin is needed, got {bins}")
    span = (
        (float(scores.scores.min()), float(scores.scores.max()))
        if len(scores)
        else (0.0, 1.0)
    )
    edges = np.histogram_bin_edges(scores.scores, bins=bins, range=span)
    count_pos, _ = np.histogram(scores.positives, bins=edges)
    count_neg, _ = np.histogram(scores.negatives, bins=edges)
    return Histogram(edges=edges, count_pos=count_pos, count_neg=count_neg)
