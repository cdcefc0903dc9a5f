import json
import os
import uuid

import numpy as np
import pytest

from cdspress.domain import (
    DNA,
    Alphabet,
    AnnotationTrack,
    Defaults,
    Interval,
    Kmer,
    ParameterVector,
    RegionKind,
    all_words,
)
from cdspress.exceptions import InvalidArgument, ParameterFormatError
from cdspress.literals import DEFAULT_RADIUS, DEFAULT_WINDOW_ORDER
from cdspress.utils import DEFAULT_LOGGING_FILE, environ


def test_defaults():
    """
    Validates defaults passed in as environment.
    """
    log_conf = str(uuid.uuid4())

    defaults = Defaults(
        environ={
            "CDSPRESS_THREADS": "3",
            "CDSPRESS_WINDOW_ORDER": "6",
            "CDSPRESS_RADIUS": "2.5",
            "CDSPRESS_LOG_CONF": log_conf,
        }
    )
    assert defaults.threads == 3
    assert defaults.window_order == 6
    assert defaults.radius == 2.5
    assert defaults.log_conf_file == log_conf
    assert defaults.template_cv_report == (
        f"{defaults.dir_package}/resources/templates/cv_report.txt.tmpl"
    )
    assert os.path.exists(defaults.template_cv_report)


def test_defaults_without_environment():
    d = Defaults(dict())

    assert d.threads == (os.cpu_count() or 1)
    assert d.window_order == DEFAULT_WINDOW_ORDER
    assert d.radius == DEFAULT_RADIUS
    assert d.log_conf_file == DEFAULT_LOGGING_FILE

    with environ(CDSPRESS_THREADS="5"):
        d = Defaults(dict(os.environ))
        assert d.threads == 5


def test_alphabet_validation():
    assert DNA.size == 4
    assert DNA.bits_per_symbol == 2
    assert Alphabet("AB").bits_per_symbol == 1
    assert DNA.index("g") == 2

    for symbols in ("A", "AA", "ABCDEFGHIJKLMNOPQ"):
        with pytest.raises(InvalidArgument):
            Alphabet(symbols)
    with pytest.raises(InvalidArgument):
        DNA.index("N")


def test_kmer_words():
    assert Kmer(27, 3).word == "CGT"
    assert all_words(1) == ["A", "C", "G", "T"]
    assert len(all_words(3)) == 64

    with pytest.raises(InvalidArgument):
        Kmer(64, 3)


def test_parameter_vector_normalized():
    v = ParameterVector.from_raw(np.arange(1, 65))

    assert v.weights.sum() == pytest.approx(1.0)
    assert v["AAA"] == pytest.approx(1 / 2080)
    assert v["TTT"] == pytest.approx(64 / 2080)
    np.testing.assert_allclose(v.psi, np.log(v.weights))

    with pytest.raises(InvalidArgument):
        v["AC"]


@pytest.mark.parametrize(
    "raw",
    [np.ones(63), np.r_[np.ones(63), 0.0], np.r_[np.ones(63), -1.0], np.r_[np.ones(63), np.inf]],
)
def test_parameter_vector_rejects(raw):
    with pytest.raises(InvalidArgument):
        ParameterVector.from_raw(raw)


def test_parameter_vector_document(tmp_path):
    """
    Validates the JSON document: word keys in order, identity kept on reload.
    """
    v = ParameterVector.from_raw(np.random.default_rng(1).uniform(0.1, 1.0, size=64))
    v.write(tmp_path / "v.json", metadata={"correlation": 0.5})

    with open(tmp_path / "v.json") as fid:
        document = json.load(fid)
    assert list(document["weights"]) == all_words(3)
    assert document["metadata"] == {"correlation": 0.5}

    loaded = ParameterVector.read(tmp_path / "v.json")
    assert loaded == v
    assert loaded.digest == v.digest


@pytest.mark.parametrize(
    "document",
    [
        {"k": 3},
        {"k": 3, "weights": [1.0] * 64},
        {"k": 1, "weights": {"A": 1.0, "C": 1.0, "G": 1.0}},
        {"k": 1, "weights": {"C": 1.0, "A": 1.0, "G": 1.0, "T": 1.0}},
        {"k": 1, "weights": {"A": 1.0, "C": 1.0, "G": 1.0, "T": -1.0}},
        {"k": 1, "weights": {"A": 1.0, "C": 1.0, "G": 1.0, "T": "x"}},
    ],
)
def test_parameter_vector_bad_documents(document):
    with pytest.raises(ParameterFormatError):
        ParameterVector.from_dict(document)


def test_parameter_vector_digest_distinguishes():
    uniform = ParameterVector.uniform()
    other = ParameterVector.from_raw(np.r_[2.0, np.ones(63)])

    assert uniform.digest != other.digest
    assert uniform.digest == ParameterVector.uniform().digest
    assert ParameterVector.uniform(k=2).digest != ParameterVector.uniform(k=3).digest


def test_intervals_and_tracks():
    with pytest.raises(InvalidArgument):
        Interval("chr1", 10, 10)

    track = AnnotationTrack(
        [Interval("chr1", 0, 10), Interval("chr2", 5, 9, RegionKind.INTRON)]
    ) + AnnotationTrack([Interval("chr1", 20, 30, RegionKind.EXON)])

    assert len(track) == 3
    assert track.chromosomes == ["chr1", "chr2"]
    assert [i.span for i in track] == [10, 4, 10]
    assert len(track.of_kind(RegionKind.CDS, RegionKind.EXON)) == 2
    assert len(track.on({"chr2"})) == 1
