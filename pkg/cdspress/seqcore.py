"""Symbol encoding, subword enumeration and De Bruijn words."""
from collections.abc import Set
from functools import lru_cache
from typing import Iterator, List, Union

import numpy as np

from cdspress.domain import DNA, Alphabet, Kmer, Sequence
from cdspress.exceptions import InvalidArgument
from cdspress.literals import BITSET_LIMIT, MAX_DE_BRUIJN_CODES

AMBIGUOUS = -1


@lru_cache(maxsize=None)
def _lookup_table(alphabet: Alphabet) -> np.ndarray:
    table = np.full(256, AMBIGUOUS, dtype=np.int16)
    for code, symbol in enumerate(alphabet.symbols):
        table[ord(symbol.upper())] = code
        table[ord(symbol.lower())] = code
    return table


def encode_sequence(text: Union[str, bytes], alphabet: Alphabet = DNA) -> Sequence:
    """Encode a character string, flagging every non-alphabet character as ambiguous.

    >>> encode_sequence("acgN").codes().tolist()
    [0, 1, 2, 0]
    >>> encode_sequence("acgN").ambiguity().tolist()
    [False, False, False, True]
    """
    raw = (
        text if isinstance(text, bytes) else text.encode("ascii", errors="replace")
    )
    mapped = _lookup_table(alphabet)[np.frombuffer(raw, dtype=np.uint8)]
    mask = mapped == AMBIGUOUS
    return Sequence.from_codes(np.where(mask, 0, mapped), mask, alphabet)


def encode_kmer(word: str, alphabet: Alphabet = DNA) -> Kmer:
    """Pack a word into its lexicographic code.

    >>> encode_kmer("ACG").code
    6
    """
    if not word:
        raise InvalidArgument("Cannot encode an empty word")
    code = 0
    for symbol in word:
        code = code * alphabet.size + alphabet.index(symbol)
    return Kmer(code, len(word), alphabet)


def kmer_codes(codes: np.ndarray, n: int, base: int) -> np.ndarray:
    """Return the code of the length-n word starting at every position.

    >>> kmer_codes(np.array([0, 1, 2, 3]), 2, 4).tolist()
    [1, 6, 11]
    """
    if n < 1:
        raise InvalidArgument(f"Word length must be positive, got {n}")
    count = len(codes) - n + 1
    if count <= 0:
        return np.zeros(0, dtype=np.int64)
    result = np.zeros(count, dtype=np.int64)
    for offset in range(n):
        result = result * base + codes[offset : offset + count]
    return result


def kmer_digits(code: int, k: int, base: int) -> List[int]:
    """Return the symbol codes of a packed word.

    >>> kmer_digits(6, 3, 4)
    [0, 1, 2]
    """
    digits = []
    for _ in range(k):
        code, digit = divmod(code, base)
        digits.append(digit)
    return digits[::-1]


def clean_starts(mask: np.ndarray, n: int) -> np.ndarray:
    """Flag the start positions whose length-n word has no ambiguous position."""
    count = len(mask) - n + 1
    if count <= 0:
        return np.zeros(0, dtype=bool)
    ambiguous = np.concatenate([[0], np.cumsum(mask, dtype=np.int64)])
    return (ambiguous[n : n + count] - ambiguous[:count]) == 0


def distinct_codes(codes: np.ndarray, n: int, base: int) -> np.ndarray:
    """Return the sorted distinct length-n word codes occurring in a code array."""
    words = kmer_codes(codes, n, base)
    if base**n <= BITSET_LIMIT:
        present = np.zeros(base**n, dtype=bool)
        present[words] = True
        return np.flatnonzero(present)
    return np.unique(words)


class SubwordSet(Set):
    """Read-only set of the distinct subwords of a fixed length."""

    def __init__(self, codes: np.ndarray, n: int, alphabet: Alphabet = DNA):
        self.codes = np.asarray(codes, dtype=np.int64)
        self.n = n
        self.alphabet = alphabet
        self._bitset = None
        if alphabet.size**n <= BITSET_LIMIT:
            self._bitset = np.zeros(alphabet.size**n, dtype=bool)
            self._bitset[self.codes] = True

    def __len__(self) -> int:
        return len(self.codes)

    def __iter__(self) -> Iterator[Kmer]:
        return (Kmer(int(code), self.n, self.alphabet) for code in self.codes)

    def __contains__(self, item: object) -> bool:
        if isinstance(item, str):
            try:
                item = encode_kmer(item, self.alphabet)
            except InvalidArgument:
                return False
        if not isinstance(item, Kmer) or item.k != self.n:
            return False
        if item.alphabet != self.alphabet:
            return False
        if self._bitset is not None:
            return bool(self._bitset[item.code])
        position = np.searchsorted(self.codes, item.code)
        return position < len(self.codes) and self.codes[position] == item.code

    @property
    def words(self) -> list:
        return [kmer.word for kmer in self]


def subword_set(w: Sequence, n: int) -> SubwordSet:
    """Return the set of distinct length-n subwords of a sequence.

    >>> sorted(subword_set(encode_sequence("AABBA", Alphabet("AB")), 2).words)
    ['AA', 'AB', 'BA', 'BB']
    """
    if n < 1 or n > len(w):
        raise InvalidArgument(
            f"Subword length {n} not in [1, {len(w)}] for this sequence"
        )
    if w.has_ambiguity():
        raise InvalidArgument("Sequence holds ambiguous positions")
    return SubwordSet(distinct_codes(w.codes(), n, w.alphabet.size), n, w.alphabet)


def de_bruijn_length(base: int, n: int) -> int:
    return base**n + n - 1


@lru_cache(maxsize=16)
def de_bruijn_word(alphabet: Alphabet, n: int) -> Sequence:
    """Return a word of length |A|^n + n - 1 holding every length-n word once.

    Starts from n copies of the first symbol and always appends the largest
    symbol closing a length-n word not seen yet.

    >>> de_bruijn_word(Alphabet("AB"), 2).to_text()
    'AABBA'
    """
    base = alphabet.size
    if n < 1:
        raise InvalidArgument(f"De Bruijn order must be positive, got {n}")
    if base**n > MAX_DE_BRUIJN_CODES:
        raise InvalidArgument(
            f"De Bruijn word of order {n} over {base} symbols is too large"
        )

    total = base**n
    suffix_space = base ** (n - 1)
    seen = np.zeros(total, dtype=bool)
    seen[0] = True
    symbols = [0] * n
    current = 0
    while True:
        prefix = (current % suffix_space) * base
        for symbol in range(base - 1, -1, -1):
            candidate = prefix + symbol
            if not seen[candidate]:
                seen[candidate] = True
                symbols.append(symbol)
                current = candidate
                break
        else:
            break

    return Sequence.from_codes(np.array(symbols, dtype=np.uint8), alphabet=alphabet)
