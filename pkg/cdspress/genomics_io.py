"""FASTA and annotation ingestion, CDS density and profile tables."""
import csv
import logging
from typing import (
    Dict,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    TextIO,
    Tuple,
)

import numpy as np
from Bio.SeqIO.FastaIO import SimpleFastaParser

from cdspress.domain import (
    DNA,
    Alphabet,
    AnnotationTrack,
    CdsDensitySeries,
    Interval,
    ParameterVector,
    PressureProfile,
    RegionKind,
    Sequence,
    WindowEntry,
)
from cdspress.exceptions import (
    AnnotationFormatError,
    FastaFormatError,
    FormatError,
    InsufficientData,
    InvalidArgument,
)
from cdspress.literals import (
    CODON_LENGTH,
    PROFILE_COLUMNS,
    SMOOTHED_COLUMNS,
    ZERO_COUNT_FLOOR,
)
from cdspress.seqcore import clean_starts, encode_sequence, kmer_codes
from cdspress.utils import PathLike, format_float, open_text

logger = logging.getLogger(__name__)

Record = Tuple[str, Sequence]
Genome = Mapping[str, Sequence]

SKIPPED_PREFIXES = ("#", "track", "browser")


def _checked_lines(stream: Iterable[str]) -> Iterator[str]:
    """Pass FASTA lines through, raising on structure errors with their line number."""
    header: Optional[Tuple[str, int]] = None
    has_sequence = False

    for line_number, line in enumerate(stream, start=1):
        text = line.strip()
        if not text:
            continue
        if text.startswith(">"):
            if not text[1:].split():
                raise FastaFormatError("Header without a record name", line_number)
            if header is not None and not has_sequence:
                raise FastaFormatError(f"Record {header[0]!r} is empty", header[1])
            header, has_sequence = (text[1:].split()[0], line_number), False
        elif header is None:
            raise FastaFormatError("Sequence data before first header", line_number)
        else:
            has_sequence = True
        yield text + "\n"

    if header is not None and not has_sequence:
        raise FastaFormatError(f"Record {header[0]!r} is empty", header[1])


def iter_fasta(stream: Iterable[str], alphabet: Alphabet = DNA) -> Iterator[Record]:
    """Stream FASTA records one at a time.

    The record name is the header text up to the first whitespace. Blank lines are
    ignored; sequence data before the first header and records without sequence
    raise :class:`FastaFormatError` with the offending line number.
    """
    for title, text in SimpleFastaParser(_checked_lines(stream)):
        yield title.split()[0], encode_sequence(text, alphabet)


def parse_fasta(stream: Iterable[str], alphabet: Alphabet = DNA) -> List[Record]:
    """Parse every record of a FASTA stream.

    >>> [(name, len(seq)) for name, seq in parse_fasta([">x", "AC", "GT", ">y", "NN"])]
    [('x', 4), ('y', 2)]
    """
    return list(iter_fasta(stream, alphabet))


def read_fasta(path: PathLike, alphabet: Alphabet = DNA) -> List[Record]:
    with open_text(path) as fid:
        records = parse_fasta(fid, alphabet)
    names = [name for name, _ in records]
    if len(set(names)) != len(names):
        raise FastaFormatError(f"Duplicated record names in {path}")
    logger.info(f"Read {len(records)} records from {path}")
    return records


def write_fasta(
    path: PathLike, records: Iterable[Record], line_width: int = 60
) -> None:
    with open_text(path, "wt") as fid:
        for name, sequence in records:
            text = sequence.to_text()
            fid.write(f">{name}\n")
            for offset in range(0, len(text), line_width):
                fid.write(text[offset : offset + line_width] + "\n")


def _parse_coordinate(value: str, label: str, line_number: int) -> int:
    try:
        coordinate = int(value)
    except ValueError:
        raise AnnotationFormatError(
            f"Non-integer {label} coordinate {value!r}", line_number
        )
    if coordinate < 0:
        raise AnnotationFormatError(f"Negative {label} coordinate", line_number)
    return coordinate


def parse_annotations(
    stream: Iterable[str], kind: RegionKind = RegionKind.CDS
) -> AnnotationTrack:
    """Parse BED3+ records: chrom, start, end and optional name, score, strand.

    A name column equal to a region kind overrides ``kind`` for that record.

    >>> len(parse_annotations(["# comment", "chr1\\t0\\t300", ""]))
    1
    """
    kinds = {member.value.lower(): member for member in RegionKind}
    intervals = []
    for line_number, line in enumerate(stream, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(SKIPPED_PREFIXES):
            continue
        fields = stripped.split("\t")
        if len(fields) < 3:
            raise AnnotationFormatError(
                f"Expected at least 3 tab-separated columns, got {len(fields)}",
                line_number,
            )
        start = _parse_coordinate(fields[1], "start", line_number)
        end = _parse_coordinate(fields[2], "end", line_number)
        if start >= end:
            raise AnnotationFormatError(
                f"Start {start} not before end {end}", line_number
            )
        name = fields[3] if len(fields) > 3 and fields[3] not in ("", ".") else None
        strand = fields[5] if len(fields) > 5 and fields[5] in ("+", "-") else None
        intervals.append(
            Interval(
                chrom=fields[0],
                start=start,
                end=end,
                kind=kinds.get(name.lower(), kind) if name else kind,
                strand=strand,
                name=name,
            )
        )
    return AnnotationTrack(intervals)


def read_annotations(path: PathLike, kind: RegionKind = RegionKind.CDS) -> AnnotationTrack:
    with open_text(path) as fid:
        track = parse_annotations(fid, kind)
    logger.info(f"Read {len(track)} intervals from {path}")
    return track


def write_annotations(path: PathLike, track: AnnotationTrack) -> None:
    with open_text(path, "wt") as fid:
        for interval in track:
            fid.write(
                "\t".join(
                    [
                        interval.chrom,
                        str(interval.start),
                        str(interval.end),
                        interval.name or interval.kind.value,
                        "0",
                        interval.strand or ".",
                    ]
                )
                + "\n"
            )


def _normalized(counts: np.ndarray, valid: np.ndarray) -> np.ndarray:
    total = counts[valid].sum()
    if total == 0:
        raise InsufficientData("No coding sequence starts inside valid windows")
    return np.where(valid, counts / total, 0.0)


def cds_density(track: AnnotationTrack, profile: PressureProfile) -> CdsDensitySeries:
    """Count interval starts per window and normalize over the valid windows.

    Each interval is counted once, in the window holding its start coordinate;
    starts in omitted trailing remainders are dropped.
    """
    if len(track) == 0:
        raise InsufficientData("Annotation track is empty")

    positions: Dict[Tuple[str, int], int] = {
        (entry.chrom, entry.window): position
        for position, entry in enumerate(profile.entries)
    }
    known = set(profile.chromosomes)
    unknown = sorted(set(track.chromosomes) - known)
    if unknown:
        logger.warning(f"Ignoring intervals on chromosomes absent from genome: {unknown}")

    counts = np.zeros(len(profile), dtype=np.int64)
    for interval in track:
        position = positions.get(
            (interval.chrom, interval.start // profile.window_size)
        )
        if position is not None:
            counts[position] += 1

    valid = profile.valid
    return CdsDensitySeries(counts=counts, density=_normalized(counts, valid), valid=valid)


def concat_dataset(
    profiles: List[PressureProfile], series: List[CdsDensitySeries]
) -> Tuple[PressureProfile, CdsDensitySeries]:
    """Join datasets into one, renumbering t and renormalizing the density."""
    if not profiles or len(profiles) != len(series):
        raise InvalidArgument("Expected one density series per profile")
    orders = {profile.window_order for profile in profiles}
    if len(orders) != 1:
        raise InvalidArgument(f"Mismatched window orders: {sorted(orders)}")

    entries = []
    for profile in profiles:
        for entry in profile.entries:
            entries.append(
                WindowEntry(
                    t=len(entries),
                    chrom=entry.chrom,
                    window=entry.window,
                    start=entry.start,
                    end=entry.end,
                    valid=entry.valid,
                    pressure=entry.pressure,
                )
            )
    joined = PressureProfile(
        window_order=profiles[0].window_order,
        window_size=profiles[0].window_size,
        entries=entries,
    )
    counts = np.concatenate([s.counts for s in series])
    valid = np.concatenate([s.valid for s in series])
    return joined, CdsDensitySeries(
        counts=counts, density=_normalized(counts, valid), valid=valid
    )


def exon_codon_frequencies(
    genome: Genome,
    track: AnnotationTrack,
    k: int = CODON_LENGTH,
    alphabet: Alphabet = DNA,
) -> ParameterVector:
    """Overlapping length-k word frequencies inside the intervals of a track.

    Words crossing an ambiguous position are skipped. Zero frequencies are floored
    before renormalizing so that every weight stays positive.
    """
    base = alphabet.size
    counts = np.zeros(base**k, dtype=np.int64)
    for interval in track:
        sequence = genome.get(interval.chrom)
        if sequence is None:
            continue
        end = min(interval.end, len(sequence))
        if end - interval.start < k:
            continue
        words = kmer_codes(sequence.codes(interval.start, end), k, base)
        clean = clean_starts(sequence.ambiguity(interval.start, end), k)
        counts += np.bincount(words[clean], minlength=base**k)

    total = counts.sum()
    if total == 0:
        raise InsufficientData("No countable word inside the annotated intervals")
    logger.info(f"Counted {total} words of length {k} in {len(track)} intervals")
    frequencies = np.maximum(counts / total, ZERO_COUNT_FLOOR)
    return ParameterVector.from_raw(frequencies, k, alphabet)


def write_profile_tsv(
    stream: TextIO,
    profile: PressureProfile,
    series: Optional[CdsDensitySeries] = None,
    smoothed: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> None:
    """Write the profile table; smoothed columns hold values for valid windows only."""
    columns = list(PROFILE_COLUMNS) + (list(SMOOTHED_COLUMNS) if smoothed else [])
    writer = csv.writer(stream, delimiter="\t", lineterminator="\n")
    writer.writerow(columns)

    smoothed_rows = iter(zip(*smoothed)) if smoothed else None
    for position, entry in enumerate(profile.entries):
        row = [
            str(entry.t),
            entry.chrom,
            str(entry.window),
            str(entry.start),
            str(entry.end),
            "1" if entry.valid else "0",
            format_float(entry.pressure),
            str(int(series.counts[position])) if series is not None else "",
            format_float(series.density[position]) if series is not None else "",
        ]
        if smoothed_rows is not None:
            row += (
                [format_float(value) for value in next(smoothed_rows)]
                if entry.valid
                else ["", ""]
            )
        writer.writerow(row)


def read_profile_tsv(
    stream: Iterable[str], alphabet: Alphabet = DNA
) -> Tuple[PressureProfile, Optional[CdsDensitySeries]]:
    reader = csv.reader(stream, delimiter="\t")
    header = next(reader, None)
    if header is None or header[: len(PROFILE_COLUMNS)] != list(PROFILE_COLUMNS):
        raise FormatError("Profile table header does not match", 1)

    entries, counts, density = [], [], []
    for line_number, row in enumerate(reader, start=2):
        try:
            t, chrom, window, start, end, valid, value, count, cds = row[:9]
            entries.append(
                WindowEntry(
                    t=int(t),
                    chrom=chrom,
                    window=int(window),
                    start=int(start),
                    end=int(end),
                    valid=valid == "1",
                    pressure=float(value) if value else None,
                )
            )
            counts.append(int(count) if count else None)
            density.append(float(cds) if cds else None)
        except ValueError as e:
            raise FormatError(f"Malformed profile row: {e}", line_number)

    size = entries[0].end - entries[0].start if entries else 0
    order = next(
        (n for n in range(1, 32) if alphabet.size**n + n - 1 == size), 0
    )
    profile = PressureProfile(window_order=order, window_size=size, entries=entries)
    if not entries or any(c is None for c in counts):
        return profile, None
    return profile, CdsDensitySeries(
        counts=np.array(counts, dtype=np.int64),
        density=np.array(density, dtype=float),
        valid=profile.valid,
    )
