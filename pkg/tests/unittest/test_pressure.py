import math
from itertools import product

import numpy as np
import pytest

from cdspress.domain import DNA, Alphabet, ParameterVector, Sequence
from cdspress.exceptions import InvalidArgument
from cdspress.pressure import (
    WindowScanner,
    check_window_order,
    make_parameter_vector,
    pressure,
    pressure_general,
    pressure_max,
    pressure_truncated,
    topological_entropy,
    window_profile,
    window_size,
    word_log_weights,
)
from cdspress.seqcore import de_bruijn_word, encode_sequence, kmer_codes


def naive_pressure(text: str, weights: dict, n: int, k: int = 3, base: int = 4) -> float:
    """Pressure straight from the definition, over the distinct subword strings."""
    length = base**n + n - 1
    subwords = {text[i : i + n] for i in range(length - n + 1)}
    total = 0.0
    for word in subwords:
        total += math.prod(weights[word[j : j + k]] for j in range(n - k + 1))
    return math.log(total) / (n * math.log(base))


def as_mapping(v: ParameterVector) -> dict:
    return {"".join(w): v["".join(w)] for w in product(DNA.symbols, repeat=v.k)}


@pytest.mark.parametrize("n, seed", [(3, 0), (4, 1), (5, 2)])
def test_pressure_matches_definition(random_sequence, random_weights, n, seed):
    """
    Validates the vectorized pressure against a direct evaluation of the definition.
    """
    word = random_sequence(4**n + n - 1, seed=seed)

    assert pressure(word, random_weights) == pytest.approx(
        naive_pressure(word.to_text(), as_mapping(random_weights), n), abs=1e-12
    )


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7])
def test_de_bruijn_uniform_pressure(uniform, n):
    """
    Validates the closed form 1 - 3(n - 2)/n on a De Bruijn word with uniform weights.
    """
    expected = 1.0 - 3.0 * (n - 2) / n

    assert pressure(de_bruijn_word(DNA, n), uniform) == pytest.approx(expected, abs=1e-12)
    assert pressure_max(n, uniform.psi) == pytest.approx(expected, abs=1e-12)


def test_constant_word_pressure(uniform):
    word = encode_sequence("A" * (4**8 + 7))

    assert pressure(word, uniform) == pytest.approx(-2.25, abs=1e-12)
    assert topological_entropy(word, 8) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_pressure_bounded_by_de_bruijn(random_sequence, random_weights, n):
    bound = pressure_max(n, random_weights.psi)

    for seed in range(5):
        word = random_sequence(4**n + n - 1, seed=seed)
        assert pressure(word, random_weights) <= bound + 1e-12


def test_pressure_invariant_under_weight_scaling(random_sequence):
    """
    Validates that raw weights are normalized before use.
    """
    raw = np.random.default_rng(5).uniform(0.5, 2.0, size=64)
    word = random_sequence(70, seed=4)

    first = pressure_truncated(word, make_parameter_vector(raw))
    second = pressure_truncated(word, make_parameter_vector(raw * 1000.0))

    assert first == pytest.approx(second, abs=1e-12)


def test_topological_entropy_of_de_bruijn():
    for n in (2, 3, 4):
        assert topological_entropy(de_bruijn_word(DNA, n), n) == pytest.approx(1.0, abs=1e-12)


def test_pressure_requires_exact_length(random_sequence, uniform):
    with pytest.raises(InvalidArgument):
        pressure(random_sequence(67), uniform)
    with pytest.raises(InvalidArgument):
        pressure(random_sequence(4**2 + 1), uniform)
    with pytest.raises(InvalidArgument):
        pressure(encode_sequence("A" * 30 + "N" + "A" * 35), uniform)


def test_pressure_truncated_uses_prefix(random_sequence, random_weights):
    word = random_sequence(300, seed=9)

    assert pressure_truncated(word, random_weights) == pressure(
        word.slice(0, 4**4 + 3), random_weights
    )
    with pytest.raises(InvalidArgument):
        pressure_truncated(random_sequence(65), random_weights)


def test_pressure_general_other_alphabet():
    binary = Alphabet("01")
    word = de_bruijn_word(binary, 4)

    value = pressure_general(word, np.zeros(2), 1, binary, 4)

    assert value == pytest.approx(1.0, abs=1e-12)


def test_word_log_weights_sums_overlaps(random_weights):
    table = word_log_weights(random_weights.psi, 3, 4, 5)
    code = int("01230", 4)

    expected = sum(
        math.log(random_weights[w]) for w in ("ACG", "CGT", "GTA")
    )
    assert table[code] == pytest.approx(expected, abs=1e-12)

    with pytest.raises(InvalidArgument):
        word_log_weights(random_weights.psi, 3, 4, 2)


@pytest.mark.parametrize("n, valid", [(2, False), (3, True), (10, True), (11, False)])
def test_check_window_order(n, valid):
    if valid:
        assert check_window_order(n) == n
    else:
        with pytest.raises(InvalidArgument):
            check_window_order(n)


@pytest.fixture
def chromosomes(random_sequence):
    size = window_size(3)
    first = random_sequence(3 * size + 10, seed=1)
    codes, mask = first.codes(), first.ambiguity()
    mask[size + 5] = True
    second = random_sequence(size, seed=2)
    return [("chr1", Sequence.from_codes(codes, mask)), ("chr2", second)]


def test_window_profile_layout(chromosomes, random_weights):
    """
    Validates window boundaries, validity and per-window pressures.
    """
    profile = window_profile(chromosomes, random_weights, 3)

    assert profile.window_size == 66
    assert [(e.t, e.chrom, e.window, e.start, e.end) for e in profile.entries] == [
        (0, "chr1", 0, 0, 66),
        (1, "chr1", 1, 66, 132),
        (2, "chr1", 2, 132, 198),
        (3, "chr2", 0, 0, 66),
    ]
    assert profile.valid.tolist() == [True, False, True, True]
    assert profile.entries[1].pressure is None
    for entry in profile.entries:
        if entry.valid:
            sequence = dict(chromosomes)[entry.chrom]
            assert entry.pressure == pressure(
                sequence.slice(entry.start, entry.end), random_weights
            )
    assert len(profile.pressures) == 3


def test_window_profile_thread_independent(chromosomes, random_weights):
    single = window_profile(chromosomes, random_weights, 3, threads=1)
    pooled = window_profile(chromosomes, random_weights, 3, threads=4)

    assert single.entries == pooled.entries


def test_subword_index_matches_profile(chromosomes, random_weights):
    scanner = WindowScanner(3)
    specs, valid, index = scanner.index(chromosomes)
    profile = scanner.profile(chromosomes, random_weights)

    assert len(specs) == 4
    assert valid.tolist() == profile.valid.tolist()
    np.testing.assert_allclose(
        index.pressures(random_weights.psi, 3), profile.pressures, rtol=0, atol=1e-12
    )
    np.testing.assert_allclose(
        index.select([0, 2]).pressures(random_weights.psi, 3),
        profile.pressures[[0, 2]],
        rtol=0,
        atol=1e-12,
    )


def test_window_profile_rejects_foreign_parameters(chromosomes):
    with pytest.raises(InvalidArgument):
        window_profile(chromosomes, ParameterVector.uniform(2, Alphabet("AB")), 3)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_potential_shift_identity(random_sequence, n):
    """
    Validates that adding log t to the potential shifts pressure by (n - k + 1)/n log t.
    """
    rng = np.random.default_rng(n)
    for trial in range(34):
        word = random_sequence(4**n + n - 1, seed=100 * n + trial)
        psi = rng.normal(size=64)
        t = rng.uniform(0.1, 10.0)

        shifted = pressure_general(word, psi + np.log(t), 3, DNA, n)
        base = pressure_general(word, psi, 3, DNA, n)

        assert shifted - base == pytest.approx((n - 2) / n * math.log(t, 4), abs=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_pressure_oracle_on_many_words(random_sequence, n):
    rng = np.random.default_rng(10 + n)
    for trial in range(67):
        v = ParameterVector.from_raw(rng.uniform(0.1, 3.0, size=64))
        word = random_sequence(4**n + n - 1, seed=1000 + trial)

        assert pressure(word, v) == pytest.approx(
            naive_pressure(word.to_text(), as_mapping(v), n), abs=1e-10
        )


@pytest.mark.parametrize("n", [3, 4, 5])
def test_pressure_monotone_in_each_weight(random_sequence, n):
    """
    Validates that raising one codon weight never lowers pressure.
    """
    rng = np.random.default_rng(20 + n)
    word = random_sequence(4**n + n - 1, seed=n)
    present = set(kmer_codes(word.codes(), 3, DNA.size).tolist())
    psi = rng.normal(size=64)
    base = pressure_general(word, psi, 3, DNA, n)

    for j in range(64):
        raised = psi.copy()
        raised[j] += 0.5
        value = pressure_general(word, raised, 3, DNA, n)
        if j in present:
            assert value > base
        else:
            assert value == pytest.approx(base, abs=1e-12)


def test_pressure_depends_on_distinct_subwords_only(random_weights):
    """
    Validates that rotations of a periodic word share one pressure.
    """
    period = "ACGGTCATTA"
    length = 4**3 + 2
    words = [
        encode_sequence(((period[r:] + period[:r]) * 8)[:length]) for r in range(len(period))
    ]

    values = [pressure(word, random_weights) for word in words]

    assert values == pytest.approx([values[0]] * len(values), abs=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_uniform_pressure_is_entropy_minus_constant(random_sequence, uniform, n):
    for seed in range(10):
        word = random_sequence(4**n + n - 1, seed=50 + seed)

        assert pressure(word, uniform) == pytest.approx(
            topological_entropy(word, n) - 3.0 * (n - 2) / n, abs=1e-12
        )
