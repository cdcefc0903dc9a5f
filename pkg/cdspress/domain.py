import hashlib
import json
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from cdspress.exceptions import InvalidArgument, ParameterFormatError
from cdspress.literals import (
    DEFAULT_RADIUS,
    DEFAULT_WINDOW_ORDER,
    DNA_SYMBOLS,
    MAX_ALPHABET_SIZE,
    NORMALIZATION_SLACK,
)
from cdspress.utils import DEFAULT_LOGGING_FILE, PathLike, open_text


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of symbols; the position of a symbol is its code."""

    symbols: str

    def __post_init__(self):
        if len(self.symbols) < 2:
            raise InvalidArgument("An alphabet needs at least two symbols")
        if len(self.symbols) > MAX_ALPHABET_SIZE:
            raise InvalidArgument(
                f"Alphabets larger than {MAX_ALPHABET_SIZE} symbols are not supported"
            )
        if len(set(self.symbols.upper())) != len(self.symbols):
            raise InvalidArgument(f"Alphabet symbols must be distinct: {self.symbols}")

    @property
    def size(self) -> int:
        return len(self.symbols)

    @property
    def bits_per_symbol(self) -> int:
        return max(1, int(np.ceil(np.log2(self.size))))

    def index(self, symbol: str) -> int:
        position = self.symbols.upper().find(symbol.upper())
        if position < 0 or len(symbol) != 1:
            raise InvalidArgument(f"Symbol {symbol!r} is not part of {self.symbols}")
        return position

    def __str__(self) -> str:
        return self.symbols


DNA = Alphabet(DNA_SYMBOLS)


@dataclass(eq=False)
class Sequence:
    """Bit-packed symbol string with a per-position ambiguity mask.

    Symbol codes use ``alphabet.bits_per_symbol`` bits each. Ambiguous positions
    (characters outside of the alphabet) hold code 0 and are flagged in the mask.
    """

    alphabet: Alphabet
    length: int
    packed_codes: np.ndarray = field(repr=False)
    packed_mask: np.ndarray = field(repr=False)

    @classmethod
    def from_codes(
        cls,
        codes: np.ndarray,
        mask: Optional[np.ndarray] = None,
        alphabet: Alphabet = DNA,
    ) -> "Sequence":
        codes = np.asarray(codes, dtype=np.uint8)
        mask = (
            np.zeros(len(codes), dtype=bool)
            if mask is None
            else np.asarray(mask, dtype=bool)
        )
        if len(mask) != len(codes):
            raise InvalidArgument("Ambiguity mask and codes differ in length")
        codes = np.where(mask, 0, codes).astype(np.uint8)
        if len(codes) and int(codes.max()) >= alphabet.size:
            raise InvalidArgument(f"Codes out of range for alphabet {alphabet}")

        bits = alphabet.bits_per_symbol
        unpacked = np.unpackbits(codes[:, None], axis=1)[:, 8 - bits :]
        return cls(
            alphabet=alphabet,
            length=len(codes),
            packed_codes=np.packbits(unpacked.ravel()),
            packed_mask=np.packbits(mask),
        )

    def __len__(self) -> int:
        return self.length

    def _bounds(self, start: int, end: Optional[int]) -> Tuple[int, int]:
        end = self.length if end is None else end
        if not 0 <= start <= end <= self.length:
            raise InvalidArgument(
                f"Range [{start}, {end}) outside of sequence of length {self.length}"
            )
        return start, end

    def codes(self, start: int = 0, end: Optional[int] = None) -> np.ndarray:
        """Return the symbol codes of positions ``[start, end)`` as uint8."""
        start, end = self._bounds(start, end)
        bits = self.alphabet.bits_per_symbol
        first_bit, last_bit = start * bits, end * bits
        chunk = self.packed_codes[first_bit // 8 : (last_bit + 7) // 8]
        offset = first_bit % 8
        flat = np.unpackbits(chunk)[offset : offset + last_bit - first_bit]
        weights = (1 << np.arange(bits - 1, -1, -1)).astype(np.uint8)
        return (flat.reshape(-1, bits) * weights).sum(axis=1).astype(np.uint8)

    def ambiguity(self, start: int = 0, end: Optional[int] = None) -> np.ndarray:
        """Return the ambiguity flags of positions ``[start, end)``."""
        start, end = self._bounds(start, end)
        chunk = self.packed_mask[start // 8 : (end + 7) // 8]
        offset = start % 8
        return np.unpackbits(chunk)[offset : offset + end - start].astype(bool)

    def has_ambiguity(self, start: int = 0, end: Optional[int] = None) -> bool:
        return bool(self.ambiguity(start, end).any())

    def slice(self, start: int, end: int) -> "Sequence":
        return Sequence.from_codes(
            self.codes(start, end), self.ambiguity(start, end), self.alphabet
        )

    def to_text(self, ambiguous: str = "N") -> str:
        lookup = np.frombuffer(self.alphabet.symbols.encode("ascii"), dtype=np.uint8)
        chars = lookup[self.codes()]
        chars[self.ambiguity()] = ord(ambiguous)
        return chars.tobytes().decode("ascii")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Sequence):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and self.length == other.length
            and np.array_equal(self.codes(), other.codes())
            and np.array_equal(self.ambiguity(), other.ambiguity())
        )


@dataclass(frozen=True)
class Kmer:
    """Word of length k packed into its big-endian lexicographic code."""

    code: int
    k: int
    alphabet: Alphabet = DNA

    def __post_init__(self):
        if self.k < 1 or not 0 <= self.code < self.alphabet.size**self.k:
            raise InvalidArgument(f"Code {self.code} out of range for k={self.k}")

    @property
    def word(self) -> str:
        symbols, base, code = [], self.alphabet.size, self.code
        for _ in range(self.k):
            code, remainder = divmod(code, base)
            symbols.append(self.alphabet.symbols[remainder])
        return "".join(reversed(symbols))

    def __str__(self) -> str:
        return self.word


def all_words(k: int, alphabet: Alphabet = DNA) -> List[str]:
    """Return every word of length k in lexicographic order.

    >>> all_words(2, Alphabet("AB"))
    ['AA', 'AB', 'BA', 'BB']
    """
    return [Kmer(code, k, alphabet).word for code in range(alphabet.size**k)]


@dataclass(frozen=True, eq=False)
class ParameterVector:
    """Positive weights on all words of length k, normalized to a probability vector."""

    weights: np.ndarray = field(repr=False)
    k: int = 3
    alphabet: Alphabet = DNA

    @classmethod
    def from_raw(
        cls, raw: Any, k: int = 3, alphabet: Alphabet = DNA
    ) -> "ParameterVector":
        values = np.asarray(raw, dtype=float).ravel()
        if k < 1:
            raise InvalidArgument(f"Weight word length must be positive, got {k}")
        if len(values) != alphabet.size**k:
            raise InvalidArgument(
                f"Expected {alphabet.size ** k} weights for k={k}, got {len(values)}"
            )
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise InvalidArgument("Every weight must be a finite positive number")
        total = values.sum()
        # vectors already summing to 1 are kept bit for bit
        weights = values if abs(total - 1.0) <= NORMALIZATION_SLACK else values / total
        return cls(weights=weights, k=k, alphabet=alphabet)

    @classmethod
    def uniform(cls, k: int = 3, alphabet: Alphabet = DNA) -> "ParameterVector":
        return cls.from_raw(np.ones(alphabet.size**k), k, alphabet)

    @property
    def psi(self) -> np.ndarray:
        """Potential, i.e. natural log of the weights."""
        return np.log(self.weights)

    @property
    def digest(self) -> str:
        hasher = hashlib.sha256()
        hasher.update(f"{self.alphabet.symbols}:{self.k}:".encode("ascii"))
        hasher.update(np.ascontiguousarray(self.weights, dtype="<f8").tobytes())
        return hasher.hexdigest()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ParameterVector):
            return NotImplemented
        return (
            self.k == other.k
            and self.alphabet == other.alphabet
            and np.array_equal(self.weights, other.weights)
        )

    def __getitem__(self, word: str) -> float:
        code = 0
        for symbol in word:
            code = code * self.alphabet.size + self.alphabet.index(symbol)
        if len(word) != self.k:
            raise InvalidArgument(f"Expected a word of length {self.k}, got {word!r}")
        return float(self.weights[code])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alphabet": self.alphabet.symbols,
            "k": self.k,
            "weights": {
                word: float(weight)
                for word, weight in zip(all_words(self.k, self.alphabet), self.weights)
            },
        }

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> "ParameterVector":
        try:
            alphabet = Alphabet(str(document.get("alphabet", DNA_SYMBOLS)))
            k = int(document.get("k", 3))
            weights = document["weights"]
        except (KeyError, TypeError, ValueError) as e:
            raise ParameterFormatError(f"Invalid parameter document: {e}")

        if not isinstance(weights, dict):
            raise ParameterFormatError("'weights' must be an object keyed by word")

        expected = all_words(k, alphabet)
        if list(weights.keys()) != expected:
            missing = sorted(set(expected) - set(weights.keys()))
            raise ParameterFormatError(
                f"Weight keys must be all {len(expected)} words in lexicographic order"
                + (f"; missing {missing[:5]}" if missing else "")
            )

        try:
            return cls.from_raw([float(weights[word]) for word in expected], k, alphabet)
        except (TypeError, ValueError) as e:
            raise ParameterFormatError(str(e))

    def write(self, path: PathLike, metadata: Optional[Dict[str, Any]] = None) -> None:
        document = self.to_dict()
        if metadata is not None:
            document["metadata"] = metadata
        with open_text(path, "wt") as fid:
            json.dump(document, fid, indent=2)
            fid.write("\n")

    @classmethod
    def read(cls, path: PathLike) -> "ParameterVector":
        with open_text(path, "rt") as fid:
            try:
                document = json.load(fid)
            except json.JSONDecodeError as e:
                raise ParameterFormatError(e.msg, e.lineno)
        if not isinstance(document, dict):
            raise ParameterFormatError("Parameter document must be a JSON object")
        return cls.from_dict(document)


class RegionKind(str, Enum):
    CDS = "CDS"
    EXON = "exon"
    INTRON = "intron"
    OTHER = "other"


@dataclass(frozen=True)
class Interval:
    """Half-open, 0-based genomic interval."""

    chrom: str
    start: int
    end: int
    kind: RegionKind = RegionKind.CDS
    strand: Optional[str] = None
    name: Optional[str] = None

    def __post_init__(self):
        if self.start < 0 or self.start >= self.end:
            raise InvalidArgument(
                f"Invalid interval {self.chrom}:{self.start}-{self.end}"
            )

    @property
    def span(self) -> int:
        return self.end - self.start


@dataclass
class AnnotationTrack:
    intervals: List[Interval] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.intervals)

    def __add__(self, other: "AnnotationTrack") -> "AnnotationTrack":
        return AnnotationTrack(self.intervals + other.intervals)

    def of_kind(self, *kinds: RegionKind) -> "AnnotationTrack":
        return AnnotationTrack([i for i in self.intervals if i.kind in kinds])

    def on(self, chroms: Any) -> "AnnotationTrack":
        selected = set(chroms)
        return AnnotationTrack([i for i in self.intervals if i.chrom in selected])

    @property
    def chromosomes(self) -> List[str]:
        return list(dict.fromkeys(i.chrom for i in self.intervals))


@dataclass(frozen=True)
class WindowEntry:
    t: int
    chrom: str
    window: int
    start: int
    end: int
    valid: bool
    pressure: Optional[float] = None


@dataclass
class PressureProfile:
    """Per-window pressure of a set of chromosomes, indexed by the dataset position t."""

    window_order: int
    window_size: int
    entries: List[WindowEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def valid(self) -> np.ndarray:
        return np.array([e.valid for e in self.entries], dtype=bool)

    @property
    def pressures(self) -> np.ndarray:
        """Pressure values of the valid windows, in dataset order."""
        return np.array(
            [e.pressure for e in self.entries if e.valid], dtype=float
        ).reshape(-1)

    @property
    def chromosomes(self) -> List[str]:
        return list(dict.fromkeys(e.chrom for e in self.entries))


@dataclass
class CdsDensitySeries:
    """Per-window coding-sequence start counts and their density over valid windows."""

    counts: np.ndarray
    density: np.ndarray
    valid: np.ndarray

    def __len__(self) -> int:
        return len(self.counts)

    @property
    def valid_density(self) -> np.ndarray:
        return self.density[self.valid]


class Defaults:
    """Class containing all relevant defaults for the application."""

    def __init__(self, environ: Dict = dict(os.environ)):
        """Initialize a Defaults class using the value contained in a dictionary

        Args:
            environ: dictionary representing the environment. Default uses the os.environ key-value pairs.
        """

        self.environ = environ if environ is not None else {}

    @property
    def threads(self) -> int:
        """Return default worker count, from CDSPRESS_THREADS or the number of cores."""
        value = self.environ.get("CDSPRESS_THREADS")
        return int(value) if value else (os.cpu_count() or 1)

    @property
    def window_order(self) -> int:
        return int(self.environ.get("CDSPRESS_WINDOW_ORDER", DEFAULT_WINDOW_ORDER))

    @property
    def radius(self) -> float:
        return float(self.environ.get("CDSPRESS_RADIUS", DEFAULT_RADIUS))

    @property
    def log_conf_file(self) -> str:
        return self.environ.get("CDSPRESS_LOG_CONF", DEFAULT_LOGGING_FILE)

    @property
    def dir_package(self) -> str:
        return os.path.dirname(__file__)

    @property
    def template_dir(self) -> str:
        return f"{self.dir_package}/resources/templates"

    @property
    def template_cv_report(self) -> str:
        return f"{self.template_dir}/cv_report.txt.tmpl"
