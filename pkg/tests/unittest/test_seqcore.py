import numpy as np
import pytest

from cdspress.domain import DNA, Alphabet, Kmer, Sequence
from cdspress.exceptions import InvalidArgument
from cdspress.seqcore import (
    clean_starts,
    de_bruijn_length,
    de_bruijn_word,
    distinct_codes,
    encode_kmer,
    encode_sequence,
    kmer_codes,
    subword_set,
)


def test_encode_sequence_flags_ambiguity():
    """
    Validates that lowercase symbols are folded and unknown characters are masked.
    """
    sequence = encode_sequence("ACgtNRa")

    assert len(sequence) == 7
    assert sequence.codes().tolist() == [0, 1, 2, 3, 0, 0, 0]
    assert sequence.ambiguity().tolist() == [False] * 4 + [True, True, False]
    assert sequence.to_text() == "ACGTNNA"


@pytest.mark.parametrize("start, end", [(0, 1001), (3, 17), (5, 5), (999, 1001), (8, 16)])
def test_packed_codes_slices(start, end):
    """
    Validates unpacking of arbitrary ranges of a bit-packed sequence.
    """
    rng = np.random.default_rng(1)
    codes = rng.integers(0, 4, size=1001)
    mask = rng.random(1001) < 0.1
    sequence = Sequence.from_codes(codes, mask)

    expected = np.where(mask, 0, codes)[start:end]
    assert sequence.codes(start, end).tolist() == expected.tolist()
    assert sequence.ambiguity(start, end).tolist() == mask[start:end].tolist()


def test_sequence_range_checks(random_sequence):
    sequence = random_sequence(10)

    with pytest.raises(InvalidArgument):
        sequence.codes(4, 11)
    with pytest.raises(InvalidArgument):
        Sequence.from_codes([0, 4, 1])


def test_sequence_larger_alphabet():
    alphabet = Alphabet("ACDEFGHIKL")
    sequence = encode_sequence("LIKE", alphabet)

    assert alphabet.bits_per_symbol == 4
    assert sequence.to_text() == "LIKE"
    assert sequence.slice(1, 3) == encode_sequence("IK", alphabet)


def test_kmer_codes_against_words(random_sequence):
    sequence = random_sequence(200, seed=3)
    text = sequence.to_text()

    codes = kmer_codes(sequence.codes(), 5, DNA.size)

    assert len(codes) == 196
    assert [Kmer(int(c), 5).word for c in codes] == [
        text[i : i + 5] for i in range(196)
    ]
    assert len(kmer_codes(sequence.codes(), 201, DNA.size)) == 0


def test_encode_kmer():
    assert encode_kmer("TTT").code == 63
    assert encode_kmer("acg").word == "ACG"

    with pytest.raises(InvalidArgument):
        encode_kmer("ANG")


def test_clean_starts():
    mask = np.array([0, 0, 1, 0, 0, 0], dtype=bool)

    assert clean_starts(mask, 2).tolist() == [True, False, False, True, True]
    assert clean_starts(mask, 7).tolist() == []


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_de_bruijn_holds_every_word_once(n):
    """
    Validates that every length-n word occurs exactly once in the De Bruijn word.
    """
    word = de_bruijn_word(DNA, n)
    codes = kmer_codes(word.codes(), n, DNA.size)

    assert len(word) == de_bruijn_length(DNA.size, n) == 4**n + n - 1
    assert len(codes) == 4**n
    assert len(np.unique(codes)) == 4**n


def test_distinct_codes_sorted(random_sequence):
    sequence = random_sequence(500, seed=11)
    expected = sorted(set(kmer_codes(sequence.codes(), 4, 4).tolist()))

    assert distinct_codes(sequence.codes(), 4, 4).tolist() == expected


def test_subword_set_membership():
    subwords = subword_set(encode_sequence("ACGTAC"), 3)

    assert len(subwords) == 4
    assert "ACG" in subwords
    assert "TAC" in subwords
    assert encode_kmer("GTA") in subwords
    assert "AAA" not in subwords
    assert "AC" not in subwords
    assert "NNN" not in subwords
    assert sorted(subwords.words) == ["ACG", "CGT", "GTA", "TAC"]


def test_subword_set_rejects_ambiguity():
    with pytest.raises(InvalidArgument):
        subword_set(encode_sequence("ACNGT"), 2)
    with pytest.raises(InvalidArgument):
        subword_set(encode_sequence("ACGT"), 5)
