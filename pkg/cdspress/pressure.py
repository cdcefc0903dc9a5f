"""Topological pressure of finite words and windowed genome profiles."""
import logging
from dataclasses import dataclass
from typing import Any, Iterable, List, Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from cdspress.domain import (
    DNA,
    Alphabet,
    ParameterVector,
    PressureProfile,
    Sequence,
    WindowEntry,
)
from cdspress.exceptions import InvalidArgument
from cdspress.literals import MAX_WINDOW_ORDER, MIN_WINDOW_ORDER
from cdspress.seqcore import de_bruijn_length, de_bruijn_word, distinct_codes
from cdspress.utils import WithLogging, parallel_map

logger = logging.getLogger(__name__)

Chromosome = Tuple[str, Sequence]


def make_parameter_vector(
    raw: Any, k: int = 3, alphabet: Alphabet = DNA
) -> ParameterVector:
    """Normalize positive raw weights into a parameter vector.

    >>> make_parameter_vector([2, 2], k=1, alphabet=Alphabet("AB")).weights.tolist()
    [0.5, 0.5]
    """
    return ParameterVector.from_raw(raw, k, alphabet)


def word_log_weights(psi: np.ndarray, k: int, base: int, n: int) -> np.ndarray:
    """Return the summed potential of every length-n word, indexed by word code.

    Each word of length n holds n - k + 1 overlapping words of length k.
    """
    psi = np.asarray(psi, dtype=float)
    if len(psi) != base**k:
        raise InvalidArgument(f"Potential must have {base ** k} entries for k={k}")
    if n < k:
        raise InvalidArgument(f"Word length {n} shorter than potential length {k}")
    codes = np.arange(base**n, dtype=np.int64)
    total = np.zeros(base**n, dtype=float)
    for i in range(n - k + 1):
        total += psi[(codes // base ** (n - k - i)) % base**k]
    return total


def _pressure_of(codes: np.ndarray, table: np.ndarray, n: int, base: int) -> float:
    return float(logsumexp(table[codes]) / (n * np.log(base)))


def _check_window_order(n: int, k: int = 1) -> None:
    if n < max(k, 1):
        raise InvalidArgument(f"Window order {n} must be at least {max(k, 1)}")


def order_of_length(length: int, base: int) -> Optional[int]:
    """Return n when ``length == base**n + n - 1``, else None."""
    n = 1
    while de_bruijn_length(base, n) < length:
        n += 1
    return n if de_bruijn_length(base, n) == length else None


def pressure_general(
    w: Sequence, psi: np.ndarray, k: int, alphabet: Alphabet, n: int
) -> float:
    """Pressure of the first |A|^n + n - 1 symbols of w under the potential psi."""
    _check_window_order(n, k)
    if w.alphabet != alphabet:
        raise InvalidArgument(f"Sequence alphabet {w.alphabet} differs from {alphabet}")
    base = alphabet.size
    size = de_bruijn_length(base, n)
    if len(w) < size:
        raise InvalidArgument(
            f"Word of length {len(w)} shorter than the {size} symbols needed for n={n}"
        )
    if w.has_ambiguity(0, size):
        raise InvalidArgument("Word holds ambiguous positions")
    table = word_log_weights(psi, k, base, n)
    return _pressure_of(distinct_codes(w.codes(0, size), n, base), table, n, base)


def pressure(w: Sequence, v: ParameterVector) -> float:
    """Pressure of a word whose length is exactly |A|^n + n - 1 with n >= 3.

    >>> from cdspress.seqcore import encode_sequence
    >>> round(pressure(encode_sequence("A" * 66), ParameterVector.uniform()), 12)
    -1.0
    """
    n = order_of_length(len(w), v.alphabet.size)
    if n is None or n < MIN_WINDOW_ORDER:
        raise InvalidArgument(
            f"Word length {len(w)} is not |A|^n + n - 1 for some n >= {MIN_WINDOW_ORDER}"
        )
    return pressure_general(w, v.psi, v.k, v.alphabet, n)


def pressure_truncated(w: Sequence, v: ParameterVector) -> float:
    """Pressure of the largest admissible prefix of a word of arbitrary length."""
    base = v.alphabet.size
    n = max(MIN_WINDOW_ORDER, v.k)
    if len(w) < de_bruijn_length(base, n):
        raise InvalidArgument(
            f"Word of length {len(w)} too short for order {n} pressure"
        )
    while de_bruijn_length(base, n + 1) <= len(w):
        n += 1
    dropped = len(w) - de_bruijn_length(base, n)
    if dropped:
        logger.info(f"Pressure of order {n}: dropping trailing {dropped} symbols")
    return pressure_general(w, v.psi, v.k, v.alphabet, n)


def pressure_max(n: int, psi: np.ndarray, k: int = 3, alphabet: Alphabet = DNA) -> float:
    """Greatest pressure over words of length |A|^n + n - 1, reached on a De Bruijn word."""
    _check_window_order(n, k)
    return pressure_general(de_bruijn_word(alphabet, n), psi, k, alphabet, n)


def topological_entropy(w: Sequence, n: int) -> float:
    """Pressure under the zero potential.

    >>> from cdspress.seqcore import encode_sequence
    >>> round(topological_entropy(encode_sequence("AABBA", Alphabet("AB")), 2), 12)
    1.0
    """
    return pressure_general(w, np.zeros(w.alphabet.size), 1, w.alphabet, n)


def window_size(n: int, alphabet: Alphabet = DNA) -> int:
    return de_bruijn_length(alphabet.size, n)


def check_window_order(n: int) -> int:
    if not MIN_WINDOW_ORDER <= n <= MAX_WINDOW_ORDER:
        raise InvalidArgument(
            f"Window order must be in [{MIN_WINDOW_ORDER}, {MAX_WINDOW_ORDER}], got {n}"
        )
    return n


@dataclass
class SubwordIndex:
    """Distinct subword codes of every valid window, stored back to back.

    Window ``i`` owns ``indices[indptr[i]:indptr[i + 1]]``.
    """

    n: int
    base: int
    indptr: np.ndarray
    indices: np.ndarray

    def __len__(self) -> int:
        return len(self.indptr) - 1

    @classmethod
    def from_code_sets(
        cls, code_sets: List[np.ndarray], n: int, base: int
    ) -> "SubwordIndex":
        dtype = np.uint16 if base**n <= 1 << 16 else np.uint32
        sizes = np.array([len(codes) for codes in code_sets], dtype=np.int64)
        indptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        indices = (
            np.concatenate(code_sets).astype(dtype)
            if code_sets
            else np.zeros(0, dtype=dtype)
        )
        return cls(n=n, base=base, indptr=indptr, indices=indices)

    def select(self, rows: np.ndarray) -> "SubwordIndex":
        rows = np.asarray(rows, dtype=np.int64)
        return SubwordIndex.from_code_sets(
            [self.indices[self.indptr[r] : self.indptr[r + 1]] for r in rows],
            self.n,
            self.base,
        )

    def pressures(self, psi: np.ndarray, k: int) -> np.ndarray:
        """Pressure of every indexed window under the potential psi."""
        if len(self) == 0:
            return np.zeros(0, dtype=float)
        table = word_log_weights(psi, k, self.base, self.n)
        values = table[self.indices]
        starts = self.indptr[:-1]
        peaks = np.maximum.reduceat(values, starts)
        shifted = np.exp(values - np.repeat(peaks, np.diff(self.indptr)))
        sums = np.add.reduceat(shifted, starts)
        return (peaks + np.log(sums)) / (self.n * np.log(self.base))


@dataclass(frozen=True)
class WindowSpec:
    t: int
    chrom: str
    window: int
    start: int
    end: int


class WindowScanner(WithLogging):
    """Cuts chromosomes into consecutive non-overlapping windows and scans their subwords."""

    def __init__(self, n: int, alphabet: Alphabet = DNA, threads: Optional[int] = 1):
        self.n = check_window_order(n)
        self.alphabet = alphabet
        self.threads = threads
        self.size = window_size(n, alphabet)

    def windows(self, chromosomes: Iterable[Chromosome]) -> List[Tuple[WindowSpec, Sequence]]:
        specs = []
        t = 0
        for chrom, sequence in chromosomes:
            count = len(sequence) // self.size
            remainder = len(sequence) - count * self.size
            if remainder:
                self.logger.debug(
                    f"{chrom}: omitting trailing {remainder} symbols after {count} windows"
                )
            for window in range(count):
                start = window * self.size
                specs.append(
                    (WindowSpec(t, chrom, window, start, start + self.size), sequence)
                )
                t += 1
        return specs

    def _distinct(self, item: Tuple[WindowSpec, Sequence]) -> Optional[np.ndarray]:
        spec, sequence = item
        if sequence.has_ambiguity(spec.start, spec.end):
            return None
        return distinct_codes(
            sequence.codes(spec.start, spec.end), self.n, self.alphabet.size
        )

    def scan(
        self, chromosomes: Iterable[Chromosome]
    ) -> Tuple[List[WindowSpec], List[Optional[np.ndarray]]]:
        items = self.windows(chromosomes)
        self.logger.info(
            f"Scanning {len(items)} windows of size {self.size} with {self.threads} threads"
        )
        return [spec for spec, _ in items], parallel_map(
            self._distinct, items, self.threads
        )

    def index(
        self, chromosomes: Iterable[Chromosome]
    ) -> Tuple[List[WindowSpec], np.ndarray, SubwordIndex]:
        """Return every window, the validity mask and the subword index of valid windows."""
        specs, code_sets = self.scan(chromosomes)
        valid = np.array([codes is not None for codes in code_sets], dtype=bool)
        index = SubwordIndex.from_code_sets(
            [codes for codes in code_sets if codes is not None],
            self.n,
            self.alphabet.size,
        )
        return specs, valid, index

    def profile(
        self, chromosomes: Iterable[Chromosome], v: ParameterVector
    ) -> PressureProfile:
        if v.alphabet != self.alphabet:
            raise InvalidArgument("Parameter alphabet differs from the sequence alphabet")
        _check_window_order(self.n, v.k)
        table = word_log_weights(v.psi, v.k, self.alphabet.size, self.n)

        def evaluate(item: Tuple[WindowSpec, Sequence]) -> Optional[float]:
            codes = self._distinct(item)
            if codes is None:
                return None
            return _pressure_of(codes, table, self.n, self.alphabet.size)

        items = self.windows(chromosomes)
        self.logger.info(
            f"Profiling {len(items)} windows of size {self.size} with {self.threads} threads"
        )
        values = parallel_map(evaluate, items, self.threads)
        return PressureProfile(
            window_order=self.n,
            window_size=self.size,
            entries=[
                WindowEntry(
                    t=spec.t,
                    chrom=spec.chrom,
                    window=spec.window,
                    start=spec.start,
                    end=spec.end,
                    valid=value is not None,
                    pressure=value,
                )
                for (spec, _), value in zip(items, values)
            ],
        )


def window_profile(
    seq_set: Iterable[Chromosome],
    v: ParameterVector,
    n: int,
    threads: Optional[int] = 1,
) -> PressureProfile:
    """Pressure of every complete window of every chromosome.

    Windows holding an ambiguous position are flagged invalid and carry no pressure.
    """
    return WindowScanner(n, v.alphabet, threads).profile(seq_set, v)
