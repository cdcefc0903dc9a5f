"""Synthetic genomes with planted coding regions, for end-to-end checks."""
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from cdspress.domain import (
    DNA,
    AnnotationTrack,
    Interval,
    ParameterVector,
    RegionKind,
    Sequence,
)
from cdspress.equilibrium import build_equilibrium_measure, sample_codes
from cdspress.exceptions import InvalidArgument
from cdspress.genomics_io import Record, write_annotations, write_fasta
from cdspress.utils import PathLike, WithLogging


@dataclass(frozen=True)
class SynthConfig:
    """Shape of a synthetic genome.

    The coding fraction of each chromosome follows a sinusoid between
    ``coding_low`` and ``coding_high`` with ``period`` positions and a random phase.
    """

    chromosomes: int = 4
    length: int = 1_000_000
    coding_low: float = 0.05
    coding_high: float = 0.6
    period: int = 500_000
    region_min: int = 300
    region_max: int = 3000
    enriched: int = 5
    enrich_factor: float = 8.0
    seed: int = 0

    def __post_init__(self):
        if self.chromosomes < 1 or self.length < 1:
            raise InvalidArgument("Need at least one chromosome of positive length")
        if not 0.0 <= self.coding_low <= self.coding_high <= 1.0:
            raise InvalidArgument("Coding fractions must satisfy 0 <= low <= high <= 1")
        if not 1 <= self.region_min <= self.region_max:
            raise InvalidArgument("Region lengths must satisfy 1 <= min <= max")
        if self.period < 1:
            raise InvalidArgument("Gradient period must be positive")
        if not 0 <= self.enriched <= DNA.size**3:
            raise InvalidArgument(f"Cannot enrich {self.enriched} codons")
        if not self.enrich_factor > 0:
            raise InvalidArgument("Enrichment factor must be positive")


@dataclass
class SyntheticGenome:
    records: List[Record]
    track: AnnotationTrack
    planted: ParameterVector

    def write(
        self,
        fasta: PathLike,
        annotations: PathLike,
        params: Optional[PathLike] = None,
    ) -> None:
        write_fasta(fasta, self.records)
        write_annotations(annotations, self.track)
        if params is not None:
            self.planted.write(params)


def planted_vector(
    enriched: int, factor: float, rng: np.random.Generator
) -> ParameterVector:
    """Uniform codon weights with ``enriched`` random codons multiplied by ``factor``."""
    raw = np.ones(DNA.size**3)
    raw[np.sort(rng.choice(len(raw), size=enriched, replace=False))] *= factor
    return ParameterVector.from_raw(raw)


class SyntheticGenomeGenerator(WithLogging):
    """Plants coding regions drawn from one measure into background drawn from another.

    The coding measure comes from ``coding`` when given, so that several genomes can
    share one codon bias; otherwise codons are enriched at random.
    """

    def __init__(
        self,
        config: SynthConfig = SynthConfig(),
        background: Optional[ParameterVector] = None,
        coding: Optional[ParameterVector] = None,
    ):
        self.config = config
        self.background = background or ParameterVector.uniform()
        self.coding = coding

    def coding_fraction(self, position: float, phase: float) -> float:
        config = self.config
        wave = 0.5 * (1.0 + np.sin(2.0 * np.pi * position / config.period + phase))
        return config.coding_low + (config.coding_high - config.coding_low) * wave

    def generate(self) -> SyntheticGenome:
        config = self.config
        rng = np.random.default_rng(config.seed)
        planted = (
            self.coding
            if self.coding is not None
            else planted_vector(config.enriched, config.enrich_factor, rng)
        )
        coding = build_equilibrium_measure(planted)
        background = build_equilibrium_measure(self.background)

        records: List[Record] = []
        intervals: List[Interval] = []
        for index in range(config.chromosomes):
            name = f"chr{index + 1}"
            phase = float(rng.uniform(0.0, 2.0 * np.pi))
            chunks, position = [], 0
            while position < config.length:
                size = min(
                    int(rng.integers(config.region_min, config.region_max + 1)),
                    config.length - position,
                )
                size = max(size, coding.k - 1)
                is_coding = rng.random() < self.coding_fraction(position, phase)
                chunks.append(sample_codes(coding if is_coding else background, size, rng))
                if is_coding:
                    intervals.append(
                        Interval(name, position, position + size, RegionKind.CDS, "+")
                    )
                position += size
            codes = np.concatenate(chunks)[: config.length]
            records.append((name, Sequence.from_codes(codes)))
            self.logger.info(
                f"{name}: {config.length} positions, "
                f"{sum(1 for i in intervals if i.chrom == name)} coding regions"
            )

        return SyntheticGenome(
            records=records,
            track=AnnotationTrack(
                [i for i in intervals if i.end <= config.length]
            ),
            planted=planted,
        )
